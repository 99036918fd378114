//! Uniform line array of omnidirectional and directional microphones.
//!
//! Every element sits on the x-axis and looks broadside (alpha = pi/2), so the
//! per-element gain is `g_m(theta) = a_m + (1 - a_m) sin(theta)` with the
//! directivity coefficient `a_m` in [0, 1]. A plane wave from direction
//! `theta` then reaches element `m` as `g_m(theta) exp(j k x_m cos(theta))`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 340.0;

/// First-order directivity presets.
pub const OMNI: f64 = 1.0;
pub const BIDIRECTIONAL: f64 = 0.0;
pub const CARDIOID: f64 = 0.5;
pub const HYPERCARDIOID: f64 = 1.0 / 3.0;
pub const SUPERCARDIOID: f64 = std::f64::consts::SQRT_2 - 1.0;

/// Maps a preset name to its directivity coefficient.
pub fn preset_directivity(name: &str) -> Option<f64> {
    match name {
        "omni" | "omnidirectional" => Some(OMNI),
        "bidirectional" => Some(BIDIRECTIONAL),
        "cardioid" => Some(CARDIOID),
        "hypercardioid" => Some(HYPERCARDIOID),
        "supercardioid" => Some(SUPERCARDIOID),
        _ => None,
    }
}

/// One microphone: its position on the array axis and its directivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicrophoneElement {
    /// Signed position on the x-axis in meters.
    pub position_x: f64,
    /// Directivity coefficient in [0, 1] (1 = omni, 0 = bidirectional).
    pub directivity_a: f64,
}

impl MicrophoneElement {
    pub fn new(position_x: f64, directivity_a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&directivity_a) {
            return Err(Error::ConfigInvalid(format!(
                "directivity coefficient must be in [0, 1], got {directivity_a}"
            )));
        }
        Ok(Self {
            position_x,
            directivity_a,
        })
    }

    /// Directional gain `a + (1 - a) sin(theta)` for broadside-looking elements.
    pub fn gain(&self, theta: f64) -> f64 {
        self.directivity_a + (1.0 - self.directivity_a) * theta.sin()
    }
}

/// A line array centered at the origin, elements ordered by position.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    elements: Vec<MicrophoneElement>,
    /// Element look direction; fixed broadside in this crate.
    pub look_direction_alpha: f64,
}

impl ArrayGeometry {
    /// Builds a geometry from explicit elements. Positions must be strictly
    /// increasing.
    pub fn new(elements: Vec<MicrophoneElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::ConfigInvalid("array needs at least one element".into()));
        }
        for pair in elements.windows(2) {
            if pair[1].position_x <= pair[0].position_x {
                return Err(Error::ConfigInvalid(
                    "element positions must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self {
            elements,
            look_direction_alpha: std::f64::consts::FRAC_PI_2,
        })
    }

    /// Uniform array with spacing `delta`: `x_m = -(M+1) delta / 2 + m delta`
    /// for m = 1..=M, centered at the origin.
    pub fn uniform(spacing: f64, directivities: &[f64]) -> Result<Self> {
        if spacing <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        let m_count = directivities.len() as f64;
        let elements = directivities
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let m = (i + 1) as f64;
                MicrophoneElement::new(-(m_count + 1.0) * spacing / 2.0 + m * spacing, a)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[MicrophoneElement] {
        &self.elements
    }

    /// Directional steering vector `d~(k, theta)`, element m equal to
    /// `g_m(theta) exp(j k x_m cos(theta))`.
    pub fn steering_vector(&self, k: f64, theta: f64) -> DVector<Complex64> {
        let cos_t = theta.cos();
        DVector::from_iterator(
            self.len(),
            self.elements.iter().map(|e| {
                Complex64::from_polar(1.0, k * e.position_x * cos_t) * e.gain(theta)
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn directivity_presets() {
        assert_eq!(preset_directivity("omni"), Some(1.0));
        assert_eq!(preset_directivity("bidirectional"), Some(0.0));
        assert_eq!(preset_directivity("cardioid"), Some(0.5));
        assert_eq!(preset_directivity("hypercardioid"), Some(1.0 / 3.0));
        assert_eq!(preset_directivity("supercardioid"), Some(2f64.sqrt() - 1.0));
        assert_eq!(preset_directivity("shotgun"), None);
    }

    #[test]
    fn gain_values() {
        let omni = MicrophoneElement::new(0.0, 1.0).unwrap();
        for theta in [-1.0, 0.3, FRAC_PI_2, 4.0] {
            assert_eq!(omni.gain(theta), 1.0);
        }
        let bidi = MicrophoneElement::new(0.0, 0.0).unwrap();
        assert!((bidi.gain(FRAC_PI_2) - 1.0).abs() < 1e-15);
        // cardioid rear null
        let card = MicrophoneElement::new(0.0, 0.5).unwrap();
        assert!(card.gain(-FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn gain_symmetric_about_broadside() {
        let e = MicrophoneElement::new(0.0, 0.3).unwrap();
        for phi in [0.1, 0.7, 1.4, 2.9] {
            assert!((e.gain(FRAC_PI_2 + phi) - e.gain(FRAC_PI_2 - phi)).abs() < 1e-12);
            assert!((e.gain(phi) - e.gain(phi + 2.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_array_is_centered() {
        for m in 1..=12 {
            let geom = ArrayGeometry::uniform(0.01, &vec![1.0; m]).unwrap();
            let sum: f64 = geom.elements().iter().map(|e| e.position_x).sum();
            assert!(sum.abs() < 1e-12, "M={m} sum={sum}");
            for pair in geom.elements().windows(2) {
                assert!((pair[1].position_x - pair[0].position_x - 0.01).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn steering_vector_zero_wavenumber() {
        let geom = ArrayGeometry::uniform(0.01, &[1.0; 5]).unwrap();
        let d = geom.steering_vector(0.0, FRAC_PI_2);
        for v in d.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        // alternating omni/bidirectional still all ones at broadside
        let geom = ArrayGeometry::uniform(0.01, &[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let d = geom.steering_vector(0.0, FRAC_PI_2);
        for v in d.iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn steering_vector_endfire_phases() {
        // M=3 omni, delta = 0.01 m, f = 1 kHz, theta = 0
        let geom = ArrayGeometry::uniform(0.01, &[1.0; 3]).unwrap();
        let k = 2.0 * PI * 1000.0 / SPEED_OF_SOUND;
        let d = geom.steering_vector(k, 0.0);
        let expected = [-k * 0.01, 0.0, k * 0.01];
        for (v, &p) in d.iter().zip(&expected) {
            assert!((v.arg() - p).abs() < 1e-12);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn steering_vector_conjugate_symmetry() {
        let geom = ArrayGeometry::uniform(0.02, &[1.0; 7]).unwrap();
        let d = geom.steering_vector(23.0, 0.9);
        let m = geom.len();
        for i in 0..m {
            let mirrored = d[m - 1 - i];
            assert!((d[i] - mirrored.conj()).norm() < 1e-12);
        }
    }
}
