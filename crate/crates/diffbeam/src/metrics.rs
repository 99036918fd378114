//! Beamformer evaluation metrics and the closed-form design matrices.
//!
//! The pseudo-coherence matrix of the cylindrically isotropic noise field and
//! the pattern coupling matrix both reduce to Bessel series for a broadside
//! line array of first-order elements; `gamma_matrix` and `q_coupling_matrix`
//! implement those closed forms. Their defining-integral counterparts live in
//! [`crate::oracle`] for verification.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::bessel::{bessel_jn, i_pow};
use crate::error::{Error, Result};
use crate::pattern::IdealPattern;

/// Floor applied to linear MSE before conversion to dB.
const MSE_FLOOR: f64 = 1e-300;

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Pseudo-coherence matrix of the 2-D diffuse field, `(1/2pi) int d~ d~^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMatrix {
    /// Real symmetric M x M entries.
    pub entries: DMatrix<f64>,
    pub wavenumber_k: f64,
}

impl CoherenceMatrix {
    /// Entries promoted to complex, for Hermitian solves.
    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.entries.map(|v| Complex64::new(v, 0.0))
    }

    /// Quadratic form `h^H Gamma h` (real for Hermitian Gamma).
    pub fn quadratic_form(&self, h: &DVector<Complex64>) -> f64 {
        let m = self.entries.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                acc += h[i].conj() * self.entries[(i, j)] * h[j];
            }
        }
        acc.re
    }
}

/// Closed form of the coherence matrix:
/// `0.5 [1 - (a_m + a_n) + 3 a_m a_n] J_0(k dx) + 0.5 (1 - a_m)(1 - a_n) J_2(k dx)`.
pub fn gamma_matrix(geom: &ArrayGeometry, k: f64) -> CoherenceMatrix {
    let m = geom.len();
    let elems = geom.elements();
    let mut entries = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let (ai, aj) = (elems[i].directivity_a, elems[j].directivity_a);
            let dx = k * (elems[i].position_x - elems[j].position_x);
            let value = 0.5 * (1.0 - (ai + aj) + 3.0 * ai * aj) * bessel_jn(0, dx)
                + 0.5 * (1.0 - ai) * (1.0 - aj) * bessel_jn(2, dx);
            entries[(i, j)] = value;
            entries[(j, i)] = value;
        }
    }
    CoherenceMatrix {
        entries,
        wavenumber_k: k,
    }
}

/// Coupling between the steering vectors and the cosine pattern basis,
/// `(1/2pi) int d~(theta) c^T(theta) dtheta`, in closed Bessel form.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternCouplingMatrix {
    /// Complex M x (N+1) entries.
    pub entries: DMatrix<Complex64>,
}

impl PatternCouplingMatrix {
    /// `q = Q a_N`.
    pub fn project(&self, coeffs: &DVector<f64>) -> DVector<Complex64> {
        &self.entries * coeffs.map(|v| Complex64::new(v, 0.0))
    }
}

pub fn q_coupling_matrix(
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
    order_n: usize,
) -> PatternCouplingMatrix {
    let m = geom.len();
    let mut entries = DMatrix::zeros(m, order_n + 1);
    for (row, e) in geom.elements().iter().enumerate() {
        let kx = k * e.position_x;
        for n in 0..=order_n as i32 {
            let nf = n as f64;
            let first = i_pow(n) * bessel_jn(n, kx) * e.directivity_a * (nf * theta_s).cos();
            let bracket = i_pow(n + 1) * bessel_jn(n + 1, kx)
                - i_pow(n - 1) * bessel_jn(n - 1, kx);
            let second = bracket * ((1.0 - e.directivity_a) / 2.0) * (nf * theta_s).sin();
            entries[(row, n as usize)] = first - second;
        }
    }
    PatternCouplingMatrix { entries }
}

/// Gram matrix of the cosine basis: `diag(1, 0.5, ..., 0.5)`.
pub fn cbar_matrix(order_n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(order_n + 1, order_n + 1);
    c[(0, 0)] = 1.0;
    for i in 1..=order_n {
        c[(i, i)] = 0.5;
    }
    c
}

/// Spatial response `h^H d~(k, theta)`.
pub fn beampattern(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    theta: f64,
) -> Result<Complex64> {
    if h.len() != geom.len() {
        return Err(Error::DimensionMismatch {
            expected: geom.len(),
            got: h.len(),
        });
    }
    Ok(h.dotc(&geom.steering_vector(k, theta)))
}

/// White noise gain `|h^H d~(theta_s)|^2 / (h^H h)` in dB.
pub fn white_noise_gain(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
) -> Result<f64> {
    let norm_sq = h.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let response = beampattern(h, geom, k, theta_s)?;
    Ok(to_db(response.norm_sqr() / norm_sq))
}

/// Directivity factor `|h^H d~(theta_s)|^2 / (h^H Gamma h)` in dB, against
/// the cylindrically isotropic field.
pub fn directivity_factor(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
) -> Result<f64> {
    let gamma = gamma_matrix(geom, k);
    let denom = gamma.quadratic_form(h);
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    let response = beampattern(h, geom, k, theta_s)?;
    Ok(to_db(response.norm_sqr() / denom))
}

/// Mean square error against the ideal pattern in linear units, via the
/// quadratic form `h^H Gamma h - 2 Re(h^H q) + xi`.
pub fn mse_linear(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    pattern: &IdealPattern,
) -> f64 {
    let gamma = gamma_matrix(geom, k);
    let q = q_coupling_matrix(geom, k, pattern.steer_theta_s, pattern.order_n)
        .project(&pattern.coeffs);
    let xi = pattern.mean_square();
    gamma.quadratic_form(h) - 2.0 * h.dotc(&q).re + xi
}

/// `mse_linear` in dB, floored to keep the logarithm finite.
pub fn mse_quadratic(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    pattern: &IdealPattern,
) -> f64 {
    to_db(mse_linear(h, geom, k, pattern).max(MSE_FLOOR))
}
