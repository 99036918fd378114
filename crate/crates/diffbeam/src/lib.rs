//! Design and evaluation of frequency- and steerable-invariant differential
//! beamformers on uniform line arrays of omnidirectional and directional
//! microphones.
//!
//! The design pipeline:
//!
//! 1. [`array`]: the line-array model and directional steering vectors.
//! 2. [`pattern`]: the N-th order ideal differential pattern, solved from a
//!    steering angle and N null offsets.
//! 3. [`solvers`]: the null-constraint system and the NC / maximum-WNG / INC
//!    filters. The INC program (MSE-to-ideal minimization under null
//!    constraints and a WNG floor) reduces to a trust-region subproblem in
//!    the constraint null space.
//! 4. [`metrics`]: beampattern, white noise gain, directivity factor, and
//!    MSE, all from closed-form Bessel-series matrices.
//! 5. [`designer`]: broadband sweeps over a frequency grid plus config
//!    parsing and CSV/JSON artifacts.
//! 6. [`harness`]: synthetic offline beampattern measurement with microphone
//!    imperfection models.
//!
//! [`oracle`] holds quadrature references for the closed forms; it exists for
//! verification and stays off the production path.

pub mod array;
pub mod bessel;
pub mod designer;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod pattern;
pub mod solvers;

pub use array::{ArrayGeometry, MicrophoneElement, SPEED_OF_SOUND};
pub use error::{Error, Result};
pub use pattern::IdealPattern;
pub use solvers::{BeamformerFilter, ConstraintSystem, Method};
