//! Ideal N-th order steerable differential beam patterns.
//!
//! The target pattern is the cosine series
//! `B(theta) = sum_n a_n cos(n (theta - theta_s))` with coefficients summing
//! to 1 so the pattern is distortionless at the steering angle. Coefficients
//! are solved from the requested null offsets; conversely, nulls can be
//! recovered from coefficients by rooting the Chebyshev form of the series.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const COND_LIMIT: f64 = 1e12;

/// Cosine basis `[1, cos(theta - theta_s), ..., cos(N(theta - theta_s))]`.
pub fn cos_basis(theta: f64, theta_s: f64, order_n: usize) -> DVector<f64> {
    let phi = theta - theta_s;
    DVector::from_iterator(order_n + 1, (0..=order_n).map(|n| (n as f64 * phi).cos()))
}

/// An N-th order differential target pattern with its defining null offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealPattern {
    pub order_n: usize,
    /// Real coefficients of length N+1, summing to 1.
    pub coeffs: DVector<f64>,
    pub steer_theta_s: f64,
    /// Sorted null offsets in (0, pi], relative to the steering angle.
    pub null_offsets: Vec<f64>,
}

impl IdealPattern {
    /// Pattern value `a^T c(theta)`; equals 1 at `theta_s` and is even about it.
    pub fn evaluate(&self, theta: f64) -> f64 {
        self.coeffs.dot(&cos_basis(theta, self.steer_theta_s, self.order_n))
    }

    /// `xi = a^T Cbar a`, the mean square of the pattern over the circle.
    pub fn mean_square(&self) -> f64 {
        let a = &self.coeffs;
        a[0] * a[0] + 0.5 * a.rows(1, self.order_n).map(|v| v * v).sum()
    }
}

fn validate_offsets(null_offsets: &[f64], order_n: usize) -> Result<()> {
    if null_offsets.len() != order_n {
        return Err(Error::InvalidNulls(format!(
            "order {order_n} needs exactly {order_n} null offsets, got {}",
            null_offsets.len()
        )));
    }
    for &phi in null_offsets {
        if !(phi > 0.0 && phi <= std::f64::consts::PI) {
            return Err(Error::InvalidNulls(format!(
                "offset {phi} rad outside (0, pi]"
            )));
        }
    }
    for pair in null_offsets.windows(2) {
        if pair[1] - pair[0] <= 1e-12 {
            return Err(Error::InvalidNulls(format!(
                "offsets must be strictly increasing and distinct, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Solves `C a = gamma` for the pattern coefficients, where the rows of `C`
/// are the cosine basis at the steering angle and at each null. The basis
/// depends only on the offsets, so the coefficients are independent of
/// `theta_s`.
pub fn solve_coefficients(
    steer_theta_s: f64,
    null_offsets: &[f64],
    order_n: usize,
) -> Result<IdealPattern> {
    validate_offsets(null_offsets, order_n)?;
    let dim = order_n + 1;
    let mut c = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        c[(0, col)] = 1.0;
    }
    for (row, &phi) in null_offsets.iter().enumerate() {
        for col in 0..dim {
            c[(row + 1, col)] = (col as f64 * phi).cos();
        }
    }

    let svd = c.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if cond > COND_LIMIT {
        return Err(Error::SingularConstraintMatrix { cond });
    }

    let mut rhs = DVector::zeros(dim);
    rhs[0] = 1.0;
    let coeffs = c
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularConstraintMatrix { cond })?;

    Ok(IdealPattern {
        order_n,
        coeffs,
        steer_theta_s,
        null_offsets: null_offsets.to_vec(),
    })
}

/// Evaluates `sum_n a_n T_n(t)` by Clenshaw recurrence (the pattern as a
/// polynomial in `t = cos(phi)`).
fn chebyshev_eval(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &a in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + a;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + t * b1 - b2
}

const GRID_POINTS: usize = 4096;
const ROOT_TOL: f64 = 1e-12;

/// Recovers the null offsets in (0, pi] of a coefficient vector by bracketing
/// the roots of its Chebyshev-form polynomial in `cos(phi)` on a dense grid
/// and refining by bisection. Returns an empty list when the pattern never
/// vanishes (e.g. order 0).
pub fn nulls_from_coefficients(coeffs: &[f64], order_n: usize) -> Result<Vec<f64>> {
    if coeffs.len() != order_n + 1 {
        return Err(Error::DimensionMismatch {
            expected: order_n + 1,
            got: coeffs.len(),
        });
    }
    let sum: f64 = coeffs.iter().sum();
    if (sum - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { sum });
    }

    let p = |t: f64| chebyshev_eval(coeffs, t);
    let mut roots_t: Vec<f64> = Vec::new();

    // endpoint roots are not bracketed by a sign change inside [-1, 1]
    if p(-1.0).abs() <= 1e-13 {
        roots_t.push(-1.0);
    }

    let nodes: Vec<f64> = (0..GRID_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = nodes.iter().map(|&t| p(t)).collect();
    for i in 0..GRID_POINTS - 1 {
        if values[i] == 0.0 && nodes[i] > -1.0 + 1e-12 {
            roots_t.push(nodes[i]);
            continue;
        }
        if values[i] * values[i + 1] < 0.0 {
            let (mut lo, mut hi) = (nodes[i], nodes[i + 1]);
            let (mut flo, _fhi) = (values[i], values[i + 1]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fmid = p(mid);
                if fmid.abs() <= ROOT_TOL {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fmid < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fmid;
                }
            }
            roots_t.push(0.5 * (lo + hi));
        }
    }

    let mut offsets: Vec<f64> = roots_t
        .into_iter()
        .map(|t| t.clamp(-1.0, 1.0).acos())
        .filter(|&phi| phi > 1e-12)
        .collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    offsets.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(offsets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn cos_basis_values() {
        let b = cos_basis(1.3, 1.3, 4);
        for v in b.iter() {
            assert_eq!(*v, 1.0);
        }
        let b = cos_basis(1.3 + PI, 1.3, 2);
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!((b[1] + 1.0).abs() < 1e-12);
        assert!((b[2] - 1.0).abs() < 1e-12);
        let b = cos_basis(PI / 3.0, 0.0, 2);
        assert!((b[1] - 0.5).abs() < 1e-15);
        assert!((b[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn first_order_coefficients() {
        let p = solve_coefficients(FRAC_PI_2, &[2.0 * PI / 3.0], 1).unwrap();
        assert!((p.coeffs[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((p.coeffs[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_coefficients_paper_nullset() {
        // offsets {90deg, 150deg}
        let p = solve_coefficients(FRAC_PI_2, &[FRAC_PI_2, 5.0 * PI / 6.0], 2).unwrap();
        let s3 = 3f64.sqrt();
        let want = [2.0 - s3, 2.0 * s3 - 3.0, 2.0 - s3];
        for (got, want) in p.coeffs.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn second_order_cardioid() {
        let p = solve_coefficients(0.0, &[FRAC_PI_2, PI], 2).unwrap();
        let want = [0.25, 0.5, 0.25];
        for (got, want) in p.coeffs.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
        // distortionless, null, and an interior value
        assert!((p.evaluate(0.0) - 1.0).abs() < 1e-12);
        assert!(p.evaluate(FRAC_PI_2).abs() < 1e-12);
        assert!((p.evaluate(PI / 3.0) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn pattern_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=4usize);
            let mut offsets: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..PI)).collect();
            offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if offsets.windows(2).any(|w| w[1] - w[0] < 0.05) {
                continue;
            }
            let theta_s = rng.gen_range(0.0..2.0 * PI);
            let p = match solve_coefficients(theta_s, &offsets, n) {
                Ok(p) => p,
                Err(Error::SingularConstraintMatrix { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert!((p.coeffs.sum() - 1.0).abs() < 1e-10);
            for &phi in &offsets {
                assert!(p.evaluate(theta_s + phi).abs() < 1e-10);
                assert!(p.evaluate(theta_s - phi).abs() < 1e-10);
            }
            // even symmetry about theta_s (tolerance scales with the
            // coefficient magnitude, which blows up for clustered nulls)
            let scale = 1.0 + p.coeffs.abs().max();
            for &phi in &[0.2, 1.1, 2.6] {
                assert!(
                    (p.evaluate(theta_s + phi) - p.evaluate(theta_s - phi)).abs()
                        < 1e-12 * scale
                );
            }
            // steering invariance of coefficients
            let p2 = solve_coefficients(theta_s + 1.234, &offsets, n).unwrap();
            for (a, b) in p.coeffs.iter().zip(p2.coeffs.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nulls_of_second_order_cardioid() {
        let nulls = nulls_from_coefficients(&[0.25, 0.5, 0.25], 2).unwrap();
        assert_eq!(nulls.len(), 2);
        assert!((nulls[0] - FRAC_PI_2).abs() < 1e-9);
        assert!((nulls[1] - PI).abs() < 1e-9);
    }

    #[test]
    fn nulls_of_first_order() {
        let nulls = nulls_from_coefficients(&[1.0 / 3.0, 2.0 / 3.0], 1).unwrap();
        assert_eq!(nulls.len(), 1);
        assert!((nulls[0] - 2.0 * PI / 3.0).abs() < 1e-9);
    }

    #[test]
    fn order_zero_has_no_nulls() {
        let nulls = nulls_from_coefficients(&[1.0], 0).unwrap();
        assert!(nulls.is_empty());
    }

    #[test]
    fn non_normalized_rejected() {
        assert!(matches!(
            nulls_from_coefficients(&[0.5, 0.5, 0.1], 2),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn null_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 30 {
            let n = rng.gen_range(1..=4usize);
            let mut offsets: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..PI)).collect();
            offsets.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if offsets.windows(2).any(|w| w[1] - w[0] < 0.1) {
                continue;
            }
            let p = match solve_coefficients(0.4, &offsets, n) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let back =
                nulls_from_coefficients(p.coeffs.as_slice(), n).expect("null recovery");
            assert_eq!(back.len(), n, "offsets {offsets:?}");
            for (got, want) in back.iter().zip(&offsets) {
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
            }
            checked += 1;
        }
    }

    #[test]
    fn coincident_nulls_rejected() {
        assert!(matches!(
            solve_coefficients(0.0, &[1.0, 1.0], 2),
            Err(Error::InvalidNulls(_))
        ));
        assert!(matches!(
            solve_coefficients(0.0, &[0.0], 1),
            Err(Error::InvalidNulls(_))
        ));
        assert!(matches!(
            solve_coefficients(0.0, &[3.5], 1),
            Err(Error::InvalidNulls(_))
        ));
    }
}
