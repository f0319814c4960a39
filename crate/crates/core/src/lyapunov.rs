//! Generic solvers for the continuous Lyapunov equation b·M + Mᵀ·b = Π.
//!
//! Two independent routes: a direct solve of the vectorized linear system
//! (the oracle everything else is tested against) and quadrature of the
//! integral representation b = ∫₀^∞ e^{-tM} Π e^{-tMᵀ} dt.

use crate::error::{Error, Result};
use crate::linalg::{eigen, expm, lu_factor, Mat};
use serde::{Deserialize, Serialize};

/// Hard cap on the state dimension for the vectorized solve; the linear
/// system has dimension (2N)² and O(N⁴) memory.
pub const DENSE_KRON_CAP: usize = 128;

pub const DENSE_RESIDUAL_RTOL: f64 = 1e-10;
pub const QUAD_RESIDUAL_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DenseKron,
    Quadrature,
    Structured,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::DenseKron => write!(f, "dense_kron"),
            Method::Quadrature => write!(f, "quadrature"),
            Method::Structured => write!(f, "structured"),
        }
    }
}

/// A symmetric solution together with how it was obtained and how well it
/// satisfies the equation.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub b: Mat,
    pub method: Method,
    pub residual_fro: f64,
}

impl LyapunovSolution {
    /// Number of chain sites (the matrix is 2N x 2N).
    pub fn n_sites(&self) -> usize {
        debug_assert_eq!(self.b.rows() % 2, 0);
        self.b.rows() / 2
    }

    /// p-p block.
    pub fn x_block(&self) -> Mat {
        let n = self.n_sites();
        self.b.block(0, 0, n, n)
    }

    /// p-q block.
    pub fn z_block(&self) -> Mat {
        let n = self.n_sites();
        self.b.block(0, n, n, n)
    }

    /// q-q block.
    pub fn y_block(&self) -> Mat {
        let n = self.n_sites();
        self.b.block(n, n, n, n)
    }
}

/// Frobenius norm of b·M + Mᵀ·b − Π.
pub fn residual(b: &Mat, m: &Mat, pi: &Mat) -> Result<f64> {
    let n = m.rows();
    if !m.is_square() || b.rows() != n || b.cols() != n || pi.rows() != n || pi.cols() != n {
        return Err(Error::ShapeMismatch(format!(
            "residual: b {}x{}, M {}x{}, Pi {}x{}",
            b.rows(),
            b.cols(),
            m.rows(),
            m.cols(),
            pi.rows(),
            pi.cols()
        )));
    }
    let lhs = b.matmul(m).add(&m.t_matmul(b));
    Ok(lhs.sub(pi).norm_fro())
}

fn check_stable(m: &Mat) -> Result<()> {
    let eig = eigen(m, false)?;
    let min_re = eig.re.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min_re <= 0.0 {
        return Err(Error::UnstableDrift { min_re });
    }
    Ok(())
}

/// Solve b·M + Mᵀ·b = Π through the vectorized linear system of dimension
/// (2N)². Row-major vectorization: row i*n+j holds the (i,j) entry of the
/// equation, and the coefficient of b_{kl} collects M_{lj} (from bM, l = i)
/// and M_{ki} (from Mᵀb, l = j).
pub fn solve_dense_kron(m: &Mat, pi: &Mat) -> Result<LyapunovSolution> {
    let n = m.rows();
    if !m.is_square() || pi.rows() != n || pi.cols() != n {
        return Err(Error::ShapeMismatch(
            "solve_dense_kron: M and Pi must be square and conformable".into(),
        ));
    }
    if n > DENSE_KRON_CAP {
        return Err(Error::SizeCapExceeded {
            size: n,
            cap: DENSE_KRON_CAP,
        });
    }
    check_stable(m)?;

    let dim = n * n;
    let mut a = Mat::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            // d/db_{ik} of (bM)_{ij} is M_{kj}
            for k in 0..n {
                a[(row, i * n + k)] += m[(k, j)];
            }
            // d/db_{kj} of (Mᵀb)_{ij} is M_{ki}
            for k in 0..n {
                a[(row, k * n + j)] += m[(k, i)];
            }
        }
    }
    let rhs: Vec<f64> = (0..dim).map(|r| pi[(r / n, r % n)]).collect();
    let f = lu_factor(&a)?;
    let x = f.solve_vec(&rhs);
    let b = Mat::from_vec(n, n, x);

    let resid = residual(&b, m, pi)?;
    // Backward floor: when ‖b‖/‖Π‖ reaches ~1e6 the rounded exact solution
    // itself violates a bound stated against ‖Π‖ alone.
    let floor = 4.0 * f64::EPSILON * m.norm_fro() * b.norm_fro();
    let tol = DENSE_RESIDUAL_RTOL * pi.norm_fro().max(f64::MIN_POSITIVE) + floor;
    if resid > tol {
        return Err(Error::ResidualFailure {
            residual: resid,
            tolerance: tol,
            context: "dense_kron".into(),
        });
    }
    Ok(LyapunovSolution {
        b,
        method: Method::DenseKron,
        residual_fro: resid,
    })
}

/// Composite Gauss-Legendre rule for the integral solver.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureRule {
    pub initial_panels: usize,
    pub rtol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule {
            initial_panels: 32,
            rtol: 1e-9,
            max_refinements: 8,
        }
    }
}

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
#[rustfmt::skip]
const GL_X: [f64; 8] = [
    -0.9602898564975363, -0.7966664774136267, -0.525_532_409_916_329,
    -0.1834346424956498, 0.1834346424956498, 0.525_532_409_916_329,
    0.7966664774136267, 0.9602898564975363,
];
#[rustfmt::skip]
const GL_W: [f64; 8] = [
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.362_683_783_378_362, 0.362_683_783_378_362, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763,
];

/// One composite pass with a fixed panel count. No convergence checks; the
/// adaptive driver and the step-halving diagnostics both build on this.
///
/// The integrand for b·M + Mᵀ·b = Π is E(t)ᵀ·Π·E(t) with E(t) = e^{-tM}:
/// differentiating e^{-tMᵀ} Π e^{-tM} and integrating over [0, ∞) telescopes
/// to Π on the left-hand side.
pub fn quadrature_pass(m: &Mat, pi: &Mat, horizon: f64, panels: usize) -> Result<Mat> {
    assert!(panels > 0, "quadrature_pass needs at least one panel");
    let n = m.rows();
    let h = horizon / panels as f64;
    let step = expm(&m.scale(-h))?;
    let mut node_exp = Vec::with_capacity(GL_X.len());
    for &x in &GL_X {
        let tau = h * 0.5 * (x + 1.0);
        node_exp.push(expm(&m.scale(-tau))?);
    }
    let mut acc = Mat::zeros(n, n);
    let mut panel_start = Mat::eye(n);
    for p in 0..panels {
        for (k, ek) in node_exp.iter().enumerate() {
            let e = panel_start.matmul(ek);
            let epe = e.t_matmul(&pi.matmul(&e));
            let w = GL_W[k] * h * 0.5;
            acc = acc.add(&epe.scale(w));
        }
        if p + 1 < panels {
            panel_start = panel_start.matmul(&step);
        }
    }
    Ok(acc.symmetrize())
}

/// Integral-representation solver: adaptive composite Gauss-Legendre on
/// [0, horizon], refining until successive passes agree to `rule.rtol`.
/// The horizon must be long enough that e^{-M·horizon} is negligible; a
/// failed residual check reports exactly that.
pub fn solve_quadrature(
    m: &Mat,
    pi: &Mat,
    horizon: f64,
    rule: QuadratureRule,
) -> Result<LyapunovSolution> {
    let n = m.rows();
    if !m.is_square() || pi.rows() != n || pi.cols() != n {
        return Err(Error::ShapeMismatch(
            "solve_quadrature: M and Pi must be square and conformable".into(),
        ));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidParams(format!(
            "horizon = {horizon} must be positive"
        )));
    }
    check_stable(m)?;

    let mut panels = rule.initial_panels.max(1);
    let mut b = quadrature_pass(m, pi, horizon, panels)?;
    let mut converged = rule.max_refinements == 0;
    for _ in 0..rule.max_refinements {
        panels *= 2;
        let refined = quadrature_pass(m, pi, horizon, panels)?;
        let diff = refined.sub(&b).norm_fro();
        b = refined;
        if diff <= rule.rtol * b.norm_fro().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::QuadratureFailure(format!(
            "no convergence after {panels} panels at rtol {:.1e}",
            rule.rtol
        )));
    }

    let resid = residual(&b, m, pi)?;
    let tol = QUAD_RESIDUAL_RTOL * pi.norm_fro().max(f64::MIN_POSITIVE);
    if resid > tol {
        return Err(Error::ResidualFailure {
            residual: resid,
            tolerance: tol,
            context: "quadrature (horizon too short or rule too coarse)".into(),
        });
    }
    Ok(LyapunovSolution {
        b,
        method: Method::Quadrature,
        residual_fro: resid,
    })
}

/// Horizon heuristic from a spectral-gap estimate: long enough that the
/// slowest mode has decayed below 1e-8 with margin for the non-normal
/// transient.
pub fn default_horizon_from_gap(rho: f64) -> f64 {
    assert!(rho > 0.0);
    40.0 / rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_drift_matrix, build_rhs_step, ChainParams, Convention};
    use crate::linalg::lambda_min_sym;

    fn params(n: usize, tl: f64, tr: f64) -> ChainParams {
        ChainParams::new(n, 0.0, 1.0, 1.0, tl, tr).unwrap()
    }

    #[test]
    fn equilibrium_n2_matches_gibbs() {
        // physical Π_0 at N=2, T=1 -> b = diag(I, B^{-1})
        let p = params(2, 1.0, 1.0);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 0, Convention::Physical)
            .unwrap()
            .matrix();
        let sol = solve_dense_kron(&m, &pi).unwrap();
        let expect = crate::chain::gibbs_covariance(&p).unwrap();
        assert!(sol.b.sub(&expect).max_abs() < 1e-12);
        // direct substitution: residual of the known closed form
        assert!(residual(&expect, &m, &pi).unwrap() < 1e-13);
        // equilibrium z block vanishes
        assert!(sol.z_block().max_abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p = params(3, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = Mat::zeros(6, 6);
        let sol = solve_dense_kron(&m, &pi).unwrap();
        assert!(sol.b.max_abs() < 1e-12);
        let q = solve_quadrature(&m, &pi, 40.0, QuadratureRule::default()).unwrap();
        assert!(q.b.max_abs() < 1e-12);
    }

    #[test]
    fn solution_is_symmetric_positive_definite() {
        let p = params(5, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 5, Convention::Paper).unwrap().matrix();
        let sol = solve_dense_kron(&m, &pi).unwrap();
        assert!(sol.b.symmetry_defect() < 1e-12 * sol.b.max_abs());
        let lmin = lambda_min_sym(&sol.b).unwrap();
        assert!(lmin > 0.0, "b should be PD for PD rhs, min eig {lmin}");
    }

    #[test]
    fn quadrature_agrees_with_dense() {
        for n in [2usize, 4, 7] {
            let p = params(n, 1.5, 0.5);
            let m = build_drift_matrix(&p);
            let pi = build_rhs_step(&p, n, Convention::Paper).unwrap().matrix();
            let dense = solve_dense_kron(&m, &pi).unwrap();
            let eig = crate::linalg::eigen(&m, false).unwrap();
            let rho = eig.re.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let horizon = default_horizon_from_gap(rho);
            let quad = solve_quadrature(&m, &pi, horizon, QuadratureRule::default()).unwrap();
            let rel = quad.b.sub(&dense.b).norm_fro() / dense.b.norm_fro();
            assert!(rel < 1e-6, "n={n} rel={rel}");
        }
    }

    #[test]
    fn richardson_step_halving_is_stable() {
        let p = params(3, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 3, Convention::Paper).unwrap().matrix();
        let coarse = quadrature_pass(&m, &pi, 80.0, 64).unwrap();
        let fine = quadrature_pass(&m, &pi, 80.0, 128).unwrap();
        let rel = fine.sub(&coarse).norm_fro() / fine.norm_fro();
        assert!(rel < 1e-9, "halving the step moved the answer by {rel}");
    }

    #[test]
    fn residual_basics() {
        let p = params(3, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 1, Convention::Paper).unwrap().matrix();
        // b = 0 -> residual is ‖Π‖_F
        let zero = Mat::zeros(6, 6);
        assert!((residual(&zero, &m, &pi).unwrap() - pi.norm_fro()).abs() < 1e-14);
        // shape mismatch errors
        assert!(residual(&Mat::zeros(4, 4), &m, &pi).is_err());
    }

    #[test]
    fn residual_entry_perturbation_bound() {
        let p = params(4, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 4, Convention::Paper).unwrap().matrix();
        let sol = solve_dense_kron(&m, &pi).unwrap();
        let m_norm = m.norm_fro(); // cheap upper bound on ‖M‖₂
        let delta = 1e-6;
        let base = sol.residual_fro;
        for &(i, j) in &[(0usize, 0usize), (2, 5), (7, 1)] {
            let mut b2 = sol.b.clone();
            b2[(i, j)] += delta;
            let r2 = residual(&b2, &m, &pi).unwrap();
            assert!((r2 - base).abs() <= 2.0 * m_norm * delta * (1.0 + 1e-9));
        }
    }

    #[test]
    fn unstable_matrix_rejected() {
        let m = Mat::from_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]);
        let pi = Mat::eye(2);
        assert!(matches!(
            solve_dense_kron(&m, &pi),
            Err(Error::UnstableDrift { .. })
        ));
    }

    #[test]
    fn cap_enforced() {
        let n = DENSE_KRON_CAP + 2;
        let m = Mat::eye(n);
        let pi = Mat::eye(n);
        assert!(matches!(
            solve_dense_kron(&m, &pi),
            Err(Error::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn short_horizon_fails_residual_check() {
        // N = 7 has a small gap; a horizon of a few time units leaves a
        // visible truncation tail.
        let p = params(7, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let pi = build_rhs_step(&p, 7, Convention::Paper).unwrap().matrix();
        assert!(matches!(
            solve_quadrature(&m, &pi, 5.0, QuadratureRule::default()),
            Err(Error::ResidualFailure { .. })
        ));
    }
}
