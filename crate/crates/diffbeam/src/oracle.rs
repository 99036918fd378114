//! Quadrature references for the closed-form design matrices.
//!
//! Everything here evaluates the defining integrals directly with a periodic
//! trapezoid rule (2^14 nodes), which is spectrally accurate for these
//! band-limited integrands. These functions exist to check the closed forms
//! and are not used on the production design path.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::ArrayGeometry;
use crate::metrics::CoherenceMatrix;
use crate::pattern::{cos_basis, IdealPattern};

/// Node count of the periodic trapezoid rule.
pub const QUADRATURE_NODES: usize = 1 << 14;

fn nodes() -> impl Iterator<Item = f64> {
    (0..QUADRATURE_NODES)
        .map(|i| 2.0 * std::f64::consts::PI * i as f64 / QUADRATURE_NODES as f64)
}

/// `(1/2pi) int d~(theta) d~^H(theta) dtheta` by quadrature.
pub fn gamma_matrix_oracle(geom: &ArrayGeometry, k: f64) -> CoherenceMatrix {
    let m = geom.len();
    let mut acc = DMatrix::<Complex64>::zeros(m, m);
    for theta in nodes() {
        let d = geom.steering_vector(k, theta);
        for i in 0..m {
            for j in 0..m {
                acc[(i, j)] += d[i] * d[j].conj();
            }
        }
    }
    acc /= Complex64::new(QUADRATURE_NODES as f64, 0.0);
    CoherenceMatrix {
        entries: acc.map(|v| v.re),
        wavenumber_k: k,
    }
}

/// `(1/2pi) int d~(theta) c^T(theta) dtheta` by quadrature.
pub fn q_coupling_matrix_oracle(
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
    order_n: usize,
) -> DMatrix<Complex64> {
    let m = geom.len();
    let mut acc = DMatrix::<Complex64>::zeros(m, order_n + 1);
    for theta in nodes() {
        let d = geom.steering_vector(k, theta);
        let c = cos_basis(theta, theta_s, order_n);
        for i in 0..m {
            for j in 0..=order_n {
                acc[(i, j)] += d[i] * c[j];
            }
        }
    }
    acc / Complex64::new(QUADRATURE_NODES as f64, 0.0)
}

/// `(1/2pi) int c(theta) c^T(theta) dtheta` by quadrature.
pub fn cbar_matrix_oracle(order_n: usize, theta_s: f64) -> DMatrix<f64> {
    let dim = order_n + 1;
    let mut acc = DMatrix::<f64>::zeros(dim, dim);
    for theta in nodes() {
        let c = cos_basis(theta, theta_s, order_n);
        for i in 0..dim {
            for j in 0..dim {
                acc[(i, j)] += c[i] * c[j];
            }
        }
    }
    acc / QUADRATURE_NODES as f64
}

/// `(1/2pi) int |B(h, theta) - B_ideal(theta)|^2 dtheta` by quadrature,
/// in linear units.
pub fn mse_direct_linear(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    pattern: &IdealPattern,
) -> f64 {
    let mut acc = 0.0;
    for theta in nodes() {
        let b = h.dotc(&geom.steering_vector(k, theta));
        let ideal = pattern.evaluate(theta);
        acc += (b - Complex64::new(ideal, 0.0)).norm_sqr();
    }
    acc / QUADRATURE_NODES as f64
}

/// `mse_direct_linear` in dB with the same floor as the quadratic form.
pub fn mse_direct(
    h: &DVector<Complex64>,
    geom: &ArrayGeometry,
    k: f64,
    pattern: &IdealPattern,
) -> f64 {
    crate::metrics::to_db(mse_direct_linear(h, geom, k, pattern).max(1e-300))
}
