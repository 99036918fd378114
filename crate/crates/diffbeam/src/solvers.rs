//! Null-constrained filter solvers.
//!
//! `build_constraints` assembles the distortionless-plus-nulls system
//! `D h = gamma`. The NC filter is its (minimum-norm) solution, and the INC
//! filter minimizes the MSE quadratic over the same constraints with a ball
//! bound on `||h||`. After reducing to the null space of `D` the INC program
//! is a trust-region subproblem, solved by monotone root finding on the
//! Lagrange multiplier of the secular equation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::array::{ArrayGeometry, SPEED_OF_SOUND};
use crate::error::{Error, Result};
use crate::metrics::CoherenceMatrix;

const COND_LIMIT: f64 = 1e12;

/// The linear system `D h = gamma` enforcing unit gain at the steering angle
/// and zeros at the deflected nulls.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    /// R x M, rows are steering vectors conjugate-transposed.
    pub matrix_d: DMatrix<Complex64>,
    /// Right-hand side: first element 1, rest 0.
    pub rhs_gamma: DVector<f64>,
    /// True when an offset of pi collapsed the +/- pair into one row.
    pub merged_opposite_null: bool,
    pub wavenumber_k: f64,
    pub steer_theta_s: f64,
    /// Frequency tag carried into the produced filters. Defaults to
    /// `k c / 2pi` at c = 340 m/s; the designer overrides it.
    pub frequency_hz: f64,
}

impl ConstraintSystem {
    pub fn row_count(&self) -> usize {
        self.matrix_d.nrows()
    }

    pub fn mic_count(&self) -> usize {
        self.matrix_d.ncols()
    }

    fn rhs_complex(&self) -> DVector<Complex64> {
        self.rhs_gamma.map(|v| Complex64::new(v, 0.0))
    }

    /// `||D h - gamma||_inf`.
    pub fn residual(&self, h: &DVector<Complex64>) -> f64 {
        (&self.matrix_d * h - self.rhs_complex())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Nc,
    MWng,
    Inc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Nc => "NC",
            Method::MWng => "mWNG",
            Method::Inc => "INC",
        }
    }
}

/// KKT evidence for a trust-region solve: either the multiplier is zero and
/// the step is interior, or the step sits on the ball boundary.
#[derive(Debug, Clone, Copy)]
pub struct TrsCertificate {
    pub lambda: f64,
    pub radius_sq: f64,
    pub step_norm_sq: f64,
}

impl TrsCertificate {
    pub fn is_valid(&self) -> bool {
        if self.lambda <= 1e-12 {
            self.step_norm_sq <= self.radius_sq * (1.0 + 1e-8) + 1e-30
        } else {
            (self.step_norm_sq - self.radius_sq).abs() <= 1e-8 * self.radius_sq.max(1e-30)
        }
    }
}

/// A designed filter for one frequency.
#[derive(Debug, Clone)]
pub struct BeamformerFilter {
    pub weights: DVector<Complex64>,
    pub frequency_hz: f64,
    pub method: Method,
    /// `-10 log10 ||h||^2`, the WNG of a distortionless filter.
    pub achieved_wng_db: f64,
    /// `||D h - gamma||_inf` at construction time.
    pub constraint_residual: f64,
    /// Present for INC solves with a nontrivial ball constraint.
    pub trs: Option<TrsCertificate>,
}

impl BeamformerFilter {
    fn new(cs: &ConstraintSystem, weights: DVector<Complex64>, method: Method) -> Self {
        let residual = cs.residual(&weights);
        let achieved_wng_db = -10.0 * weights.norm_squared().log10();
        BeamformerFilter {
            weights,
            frequency_hz: cs.frequency_hz,
            method,
            achieved_wng_db,
            constraint_residual: residual,
            trs: None,
        }
    }
}

fn condition_number(d: &DMatrix<Complex64>) -> f64 {
    let svd = d.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    }
}

/// Builds the constraint system for `theta_s` and the given null offsets.
/// An offset of pi produces identical +/- rows; only one is kept.
pub fn build_constraints(
    geom: &ArrayGeometry,
    k: f64,
    theta_s: f64,
    null_offsets: &[f64],
) -> Result<ConstraintSystem> {
    for &phi in null_offsets {
        if !(phi > 0.0 && phi <= std::f64::consts::PI) {
            return Err(Error::InvalidNulls(format!(
                "offset {phi} rad outside (0, pi]"
            )));
        }
    }
    for pair in null_offsets.windows(2) {
        if pair[1] - pair[0] <= 1e-12 {
            return Err(Error::InvalidNulls(
                "offsets must be strictly increasing and distinct".into(),
            ));
        }
    }

    let mut directions = vec![theta_s];
    let mut merged = false;
    for &phi in null_offsets {
        directions.push(theta_s + phi);
        if (phi - std::f64::consts::PI).abs() < 1e-12 {
            merged = true;
        } else {
            directions.push(theta_s - phi);
        }
    }

    let rows = directions.len();
    let m = geom.len();
    if m < rows {
        return Err(Error::TooFewMicrophones {
            needed: rows,
            got: m,
        });
    }

    let mut d = DMatrix::zeros(rows, m);
    for (r, &theta) in directions.iter().enumerate() {
        let steer = geom.steering_vector(k, theta);
        for c in 0..m {
            d[(r, c)] = steer[c].conj();
        }
    }

    let cond = condition_number(&d);
    if cond > COND_LIMIT {
        return Err(Error::RankDeficient { cond });
    }

    let mut rhs = DVector::zeros(rows);
    rhs[0] = 1.0;
    Ok(ConstraintSystem {
        matrix_d: d,
        rhs_gamma: rhs,
        merged_opposite_null: merged,
        wavenumber_k: k,
        steer_theta_s: theta_s,
        frequency_hz: k * SPEED_OF_SOUND / (2.0 * std::f64::consts::PI),
    })
}

/// Minimum-norm feasible point `h = D^H (D D^H)^{-1} gamma`; this is the
/// maximum-WNG filter over the constraint set.
pub fn solve_mwng(cs: &ConstraintSystem) -> Result<BeamformerFilter> {
    let d = &cs.matrix_d;
    let gram = d * d.adjoint();
    let chol = gram
        .cholesky()
        .ok_or(Error::RankDeficient {
            cond: condition_number(d),
        })?;
    let y = chol.solve(&cs.rhs_complex());
    let h = d.adjoint() * y;
    Ok(BeamformerFilter::new(cs, h, Method::MWng))
}

/// The null-constrained filter: the unique solution when `M = R`, otherwise
/// the minimum-norm solution.
pub fn solve_nc(cs: &ConstraintSystem) -> Result<BeamformerFilter> {
    if cs.mic_count() == cs.row_count() {
        let lu = cs.matrix_d.clone().lu();
        let h = lu.solve(&cs.rhs_complex()).ok_or(Error::RankDeficient {
            cond: condition_number(&cs.matrix_d),
        })?;
        Ok(BeamformerFilter::new(cs, h, Method::Nc))
    } else {
        let mut f = solve_mwng(cs)?;
        f.method = Method::Nc;
        Ok(f)
    }
}

/// Maximum WNG over the constraint set, `-10 log10 ||h_mWNG||^2` in dB.
pub fn wmax(cs: &ConstraintSystem) -> Result<f64> {
    Ok(solve_mwng(cs)?.achieved_wng_db)
}

/// Orthonormal basis of the null space of `D`, obtained from the eigenvectors
/// of the orthogonal projector `I - D^H (D D^H)^{-1} D` (eigenvalues are
/// exactly 0 or 1, so the split is well conditioned).
pub fn nullspace_basis(cs: &ConstraintSystem) -> Result<DMatrix<Complex64>> {
    let d = &cs.matrix_d;
    let (r, m) = (d.nrows(), d.ncols());
    let cond = condition_number(d);
    if cond > COND_LIMIT {
        return Err(Error::RankDeficient { cond });
    }
    if r == m {
        return Ok(DMatrix::zeros(m, 0));
    }
    let gram = d * d.adjoint();
    let chol = gram.cholesky().ok_or(Error::RankDeficient { cond })?;
    let mut projector = DMatrix::identity(m, m);
    projector -= d.adjoint() * chol.solve(&d.clone_owned());
    let eig = projector.symmetric_eigen();
    let mut cols: Vec<DVector<Complex64>> = Vec::new();
    for (i, &val) in eig.eigenvalues.iter().enumerate() {
        if val > 0.5 {
            cols.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    if cols.len() != m - r {
        return Err(Error::RankDeficient { cond });
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Solves the trust-region subproblem `min z^H A z - 2 Re(z^H b)` subject to
/// `||z|| <= radius` for Hermitian PSD `A`, via the eigendecomposition of `A`
/// and Newton-with-bisection on the secular function
/// `1/||z(lambda)|| - 1/radius`.
fn solve_trs(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    radius: f64,
) -> Result<(DVector<Complex64>, f64)> {
    let dim = a.nrows();
    if dim == 0 || radius == 0.0 {
        return Ok((DVector::zeros(dim), 0.0));
    }
    let eig = a.clone().symmetric_eigen();
    let evals = &eig.eigenvalues; // real for Hermitian input
    let beta = eig.eigenvectors.adjoint() * b;

    let norm_sq = |lambda: f64| -> f64 {
        (0..dim)
            .map(|i| beta[i].norm_sqr() / (evals[i] + lambda).powi(2))
            .sum()
    };

    // A is regularized PD by the caller, so lambda = 0 is always admissible.
    if evals.min() > 0.0 && norm_sq(0.0) <= radius * radius {
        let coords = DVector::from_iterator(dim, (0..dim).map(|i| beta[i] / evals[i]));
        let z = &eig.eigenvectors * coords;
        return Ok((z, 0.0));
    }

    // ||z(lambda)|| <= ||b|| / lambda, so the root lies in [lo, hi].
    let mut lo = (-evals.min()).max(0.0);
    let mut hi = b.norm() / radius + evals.max().abs();
    if !(norm_sq(hi) <= radius * radius) {
        hi = hi.max(1.0);
        let mut guard = 0;
        while norm_sq(hi) > radius * radius && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        if guard == 200 {
            return Err(Error::TrustRegionHardCase);
        }
    }

    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..200 {
        let nsq = norm_sq(lambda);
        let norm = nsq.sqrt();
        if norm <= 0.0 {
            // b orthogonal to every active eigendirection: fall back to the
            // boundary along the lowest eigenvector.
            break;
        }
        let f = 1.0 / norm - 1.0 / radius;
        if (norm - radius).abs() <= 1e-12 * radius {
            break;
        }
        if f < 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        // Newton step on the secular function (well conditioned in 1/||z||)
        let dnsq: f64 = (0..dim)
            .map(|i| -2.0 * beta[i].norm_sqr() / (evals[i] + lambda).powi(3))
            .sum();
        let fprime = -dnsq / (2.0 * nsq * norm);
        let newton = lambda - f / fprime;
        lambda = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }

    let nsq = norm_sq(lambda);
    if nsq > 0.0 && (nsq.sqrt() - radius).abs() <= 1e-8 * radius {
        let coords =
            DVector::from_iterator(dim, (0..dim).map(|i| beta[i] / (evals[i] + lambda)));
        let z = &eig.eigenvectors * coords;
        return Ok((z, lambda));
    }

    // Hard case: add a component along the minimal eigenvector to reach the
    // boundary.
    let (imin, _) = evals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let lambda_h = (-evals[imin]).max(0.0);
    let partial_sq: f64 = (0..dim)
        .filter(|&i| i != imin)
        .map(|i| beta[i].norm_sqr() / (evals[i] + lambda_h).powi(2))
        .sum();
    if partial_sq > radius * radius {
        return Err(Error::TrustRegionHardCase);
    }
    let extra = (radius * radius - partial_sq).sqrt();
    let mut coords = DVector::zeros(dim);
    for i in 0..dim {
        if i != imin {
            coords[i] = beta[i] / (evals[i] + lambda_h);
        }
    }
    coords[imin] = Complex64::new(extra, 0.0);
    let z = &eig.eigenvectors * coords;
    Ok((z, lambda_h))
}

/// INC filter: minimizes `h^H Gamma h - 2 Re(h^H q)` subject to the null
/// constraints and `||h||^2 <= 10^{-(Wmax - v)/10}`. Reduced to a trust-region
/// subproblem in the null-space coordinates of `D`; since `h_mWNG` is
/// orthogonal to the null space, the ball becomes
/// `||z||^2 <= rho - ||h_mWNG||^2`.
pub fn solve_inc(
    cs: &ConstraintSystem,
    gamma: &CoherenceMatrix,
    q: &DVector<Complex64>,
    v_slack_db: f64,
) -> Result<BeamformerFilter> {
    if v_slack_db < 0.0 {
        return Err(Error::InfeasibleSlack(v_slack_db));
    }
    let m = cs.mic_count();
    if gamma.entries.nrows() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: gamma.entries.nrows(),
        });
    }
    if q.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: q.len(),
        });
    }

    let h0 = solve_mwng(cs)?;
    if cs.row_count() == m {
        // zero-dimensional subproblem: the constraints fix h completely
        let mut f = solve_nc(cs)?;
        f.method = Method::Inc;
        return Ok(f);
    }

    let h0_norm_sq = h0.weights.norm_squared();
    let rho = h0_norm_sq * 10f64.powf(v_slack_db / 10.0);
    let radius_sq = (rho - h0_norm_sq).max(0.0);
    let radius = radius_sq.sqrt();

    let basis = nullspace_basis(cs)?;
    let gamma_c = gamma.to_complex();
    let gamma_b = &gamma_c * &basis;
    let mut a = basis.adjoint() * &gamma_b;
    // k -> 0 collapses the steering vectors toward rank one; keep A PD
    let reg = 1e-12 * a.diagonal().map(|v| v.re).sum() / a.nrows().max(1) as f64;
    for i in 0..a.nrows() {
        a[(i, i)] += Complex64::new(reg, 0.0);
    }
    let b = basis.adjoint() * (q - &gamma_c * &h0.weights);

    let (z, lambda) = solve_trs(&a, &b, radius)?;
    let h = &h0.weights + &basis * &z;
    let mut filter = BeamformerFilter::new(cs, h, Method::Inc);
    filter.trs = Some(TrsCertificate {
        lambda,
        radius_sq,
        step_norm_sq: z.norm_squared(),
    });
    Ok(filter)
}
