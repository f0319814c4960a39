//! Model matrices and parameter-derived constants for the boundary-driven
//! oscillator chain. Every other module goes through here, so this file owns
//! the conventions: the state is z = (p_1..p_N, q_1..q_N), the drift matrix
//! is M = [[Γ, -I], [B, 0]] with Γ = diag(γ, 0, .., 0, γ), and the SDE reads
//! dz = -Mᵀ z dt + noise on p_1, p_N.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use serde::{Deserialize, Serialize};

/// Physical and model parameters of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    /// Particle count, at least 2.
    pub n: usize,
    /// Pinning coefficient, a >= 0.
    pub a: f64,
    /// Nearest-neighbour interaction coefficient, c > 0.
    pub c: f64,
    /// Friction at both ends, gamma > 0.
    pub gamma: f64,
    /// Left and right bath temperatures, both > 0.
    pub t_left: f64,
    pub t_right: f64,
}

impl ChainParams {
    pub fn new(n: usize, a: f64, c: f64, gamma: f64, t_left: f64, t_right: f64) -> Result<Self> {
        let p = ChainParams {
            n,
            a,
            c,
            gamma,
            t_left,
            t_right,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!(
                "n must be >= 2 (friction acts on distinct first/last sites), got {}",
                self.n
            )));
        }
        for (name, v, strict) in [
            ("a", self.a, false),
            ("c", self.c, true),
            ("gamma", self.gamma, true),
            ("t_left", self.t_left, true),
            ("t_right", self.t_right, true),
        ] {
            if !v.is_finite() || v < 0.0 || (strict && v == 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} out of range")));
            }
        }
        Ok(())
    }

    /// Mean temperature (T_L + T_R)/2; positive for valid params.
    pub fn t_mean(&self) -> f64 {
        0.5 * (self.t_left + self.t_right)
    }

    /// Half temperature difference (T_L - T_R)/2; any sign.
    pub fn delta_t(&self) -> f64 {
        0.5 * (self.t_left - self.t_right)
    }

    pub fn derived(&self) -> DerivedConstants {
        DerivedConstants {
            mu: (1.0 + self.a + 2.0 * self.c) / (2.0 * self.c),
            kappa_left: (self.t_left + self.a + 2.0 * self.c) / (2.0 * self.c),
            kappa_right: (self.t_right + self.a + 2.0 * self.c) / (2.0 * self.c),
            r_growth: self.c / (self.gamma * self.gamma) + (self.a + 2.0 * self.c) / self.c,
        }
    }
}

/// Constants that recur in the block recurrences and asymptotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// mu = (1 + a + 2c) / (2c), the odd-diagonal step of the z block.
    pub mu: f64,
    /// kappa_L = (T_L + a + 2c) / (2c).
    pub kappa_left: f64,
    /// kappa_R = (T_R + a + 2c) / (2c).
    pub kappa_right: f64,
    /// R = c/γ² + (a + 2c)/c, the growth ratio of the first-row recurrence.
    pub r_growth: f64,
}

/// Which right-hand side family a Lyapunov equation uses.
///
/// `Paper` reproduces the dissipation-spreading diagonals verbatim, with bare
/// temperatures 2T at the ends. `Physical` multiplies the temperature entries
/// by γ, so the step-0 solution is the stationary covariance of the SDE for
/// every γ. The two coincide at γ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Paper,
    Physical,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::Paper => write!(f, "paper"),
            Convention::Physical => write!(f, "physical"),
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Convention::Paper),
            "physical" => Ok(Convention::Physical),
            other => Err(Error::InvalidParams(format!(
                "unknown convention '{other}'"
            ))),
        }
    }
}

/// Diagonal right-hand side of the m-th Lyapunov equation in the
/// dissipation-spreading sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhsStep {
    pub m: usize,
    /// Diagonal entries, length 2N, ordered (p-block, q-block).
    pub diag: Vec<f64>,
}

impl RhsStep {
    pub fn matrix(&self) -> Mat {
        Mat::from_diag(&self.diag)
    }

    pub fn sum(&self) -> f64 {
        self.diag.iter().sum()
    }
}

/// Symmetric tridiagonal interaction matrix B: (a + 2c) on the diagonal,
/// -c off it.
pub fn build_interaction_matrix(params: &ChainParams) -> Mat {
    let n = params.n;
    let mut b = Mat::zeros(n, n);
    for i in 0..n {
        b[(i, i)] = params.a + 2.0 * params.c;
        if i + 1 < n {
            b[(i, i + 1)] = -params.c;
            b[(i + 1, i)] = -params.c;
        }
    }
    b
}

/// Closed-form spectrum of B: a + 2c - 2c cos(kπ/(N+1)), k = 1..N.
pub fn interaction_spectrum(params: &ChainParams) -> Vec<f64> {
    let n = params.n as f64;
    (1..=params.n)
        .map(|k| {
            params.a + 2.0 * params.c
                - 2.0 * params.c * (k as f64 * std::f64::consts::PI / (n + 1.0)).cos()
        })
        .collect()
}

/// Drift matrix M = [[Γ, -I], [B, 0]], size 2N; trace(M) = 2γ.
pub fn build_drift_matrix(params: &ChainParams) -> Mat {
    let n = params.n;
    let b = build_interaction_matrix(params);
    let mut m = Mat::zeros(2 * n, 2 * n);
    m[(0, 0)] = params.gamma;
    m[(n - 1, n - 1)] = params.gamma;
    for i in 0..n {
        m[(i, n + i)] = -1.0;
    }
    m.set_block(n, 0, &b);
    m
}

/// Friction diagonal Γ = diag(γ, 0, .., 0, γ) as a length-N vector.
pub fn friction_diag(params: &ChainParams) -> Vec<f64> {
    let mut g = vec![0.0; params.n];
    g[0] = params.gamma;
    g[params.n - 1] = params.gamma;
    g
}

/// Right-hand side Π_m of the m-th Lyapunov equation: temperature entries at
/// the p-ends, ones filling inward from both ends as m grows.
///
/// m = 0 gives diag(2T_L, 0, .., 0, 2T_R | 0, .., 0); m = N gives
/// diag(2T_L, 1, .., 1, 2T_R | 1, .., 1). Under `Physical` the temperature
/// entries carry the extra γ of the SDE noise 2γT.
pub fn build_rhs_step(params: &ChainParams, m: usize, conv: Convention) -> Result<RhsStep> {
    params.validate()?;
    let n = params.n;
    if m > n {
        return Err(Error::InvalidParams(format!(
            "step index m = {m} out of range 0..={n}"
        )));
    }
    let temp_scale = match conv {
        Convention::Paper => 1.0,
        Convention::Physical => params.gamma,
    };
    let filled = |j: usize| -> f64 {
        // 1-based site j is covered once the wave from either end reaches it.
        if j <= m || j + m > n {
            1.0
        } else {
            0.0
        }
    };
    let mut diag = vec![0.0; 2 * n];
    diag[0] = 2.0 * params.t_left * temp_scale;
    diag[n - 1] = 2.0 * params.t_right * temp_scale;
    for j in 2..n {
        diag[j - 1] = filled(j);
    }
    for j in 1..=n {
        diag[n + j - 1] = filled(j);
    }
    Ok(RhsStep { m, diag })
}

/// Covariance of the Gibbs measure exp(-H/T) for the quadratic Hamiltonian:
/// diag(T·I, T·B⁻¹). Requires equal bath temperatures.
pub fn gibbs_covariance(params: &ChainParams) -> Result<Mat> {
    params.validate()?;
    if params.t_left != params.t_right {
        return Err(Error::InvalidParams(format!(
            "gibbs_covariance needs T_L = T_R, got {} and {}",
            params.t_left, params.t_right
        )));
    }
    let t = params.t_left;
    let n = params.n;
    let b = build_interaction_matrix(params);
    let f = crate::linalg::lu_factor(&b)?;
    let b_inv = f.solve_mat(&Mat::eye(n));
    let mut cov = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        cov[(i, i)] = t;
    }
    cov.set_block(n, n, &b_inv.symmetrize().scale(t));
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_eigen, Mat};

    fn params(n: usize, a: f64, c: f64, gamma: f64, tl: f64, tr: f64) -> ChainParams {
        ChainParams::new(n, a, c, gamma, tl, tr).unwrap()
    }

    #[test]
    fn interaction_matrix_n3() {
        let b = build_interaction_matrix(&params(3, 1.0, 1.0, 1.0, 1.0, 1.0));
        let expect = Mat::from_rows(&[&[3.0, -1.0, 0.0], &[-1.0, 3.0, -1.0], &[0.0, -1.0, 3.0]]);
        assert_eq!(b, expect);
    }

    #[test]
    fn interaction_eigenvalues_n2() {
        let b = build_interaction_matrix(&params(2, 0.0, 1.0, 1.0, 1.0, 1.0));
        let eig = sym_eigen(&b, false).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_spectrum_matches_eigensolver() {
        for &(n, a, c) in &[(5usize, 0.0, 1.0), (12, 0.7, 2.5), (33, 0.0, 0.3)] {
            let p = params(n, a, c, 1.0, 1.0, 1.0);
            let b = build_interaction_matrix(&p);
            let mut expect = interaction_spectrum(&p);
            expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let got = sym_eigen(&b, false).unwrap().values;
            for (g, e) in got.iter().zip(&expect) {
                assert!((g - e).abs() < 1e-10, "n={n} got {g} expect {e}");
            }
            // min eigenvalue strictly positive: B is SPD
            assert!(got[0] > 0.0);
        }
    }

    #[test]
    fn drift_matrix_n2() {
        let m = build_drift_matrix(&params(2, 0.0, 1.0, 1.0, 1.0, 1.0));
        let expect = Mat::from_rows(&[
            &[1.0, 0.0, -1.0, 0.0],
            &[0.0, 1.0, 0.0, -1.0],
            &[2.0, -1.0, 0.0, 0.0],
            &[-1.0, 2.0, 0.0, 0.0],
        ]);
        assert_eq!(m, expect);
    }

    #[test]
    fn drift_trace_is_twice_gamma() {
        for &(n, gamma) in &[(2usize, 1.0), (7, 0.25), (40, 3.5)] {
            let m = build_drift_matrix(&params(n, 0.3, 1.2, gamma, 1.0, 0.5));
            assert_eq!(m.trace(), 2.0 * gamma);
        }
    }

    #[test]
    fn drift_eigenvalues_have_positive_real_part() {
        use crate::linalg::eigen;
        for &n in &[2usize, 5, 20, 100] {
            let m = build_drift_matrix(&params(n, 0.0, 1.0, 1.0, 1.5, 0.5));
            let eig = eigen(&m, false).unwrap();
            let min_re = eig.re.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            assert!(min_re > 0.0, "n={n} min Re = {min_re}");
        }
    }

    #[test]
    fn rhs_step_examples_n3() {
        let p = params(3, 0.0, 1.0, 1.0, 1.5, 0.5);
        let s0 = build_rhs_step(&p, 0, Convention::Paper).unwrap();
        assert_eq!(s0.diag, vec![3.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let s3 = build_rhs_step(&p, 3, Convention::Paper).unwrap();
        assert_eq!(s3.diag, vec![3.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert!(s3.diag.iter().all(|&v| v > 0.0));
        // exactly two nonzero entries at m = 0
        assert_eq!(s0.diag.iter().filter(|&&v| v != 0.0).count(), 2);
        assert!(build_rhs_step(&p, 4, Convention::Paper).is_err());
    }

    #[test]
    fn rhs_step_monotone_in_m() {
        let p = params(9, 0.0, 1.0, 2.0, 1.5, 0.5);
        let mut prev = build_rhs_step(&p, 0, Convention::Physical).unwrap();
        for m in 1..=9 {
            let cur = build_rhs_step(&p, m, Convention::Physical).unwrap();
            for (a, b) in prev.diag.iter().zip(&cur.diag) {
                assert!(b >= a);
            }
            assert!(cur.sum() >= prev.sum());
            prev = cur;
        }
    }

    #[test]
    fn physical_scales_temperature_entries() {
        let p = params(4, 0.0, 1.0, 2.5, 1.5, 0.5);
        let paper = build_rhs_step(&p, 0, Convention::Paper).unwrap();
        let phys = build_rhs_step(&p, 0, Convention::Physical).unwrap();
        assert_eq!(phys.diag[0], 2.5 * paper.diag[0]);
        assert_eq!(phys.diag[3], 2.5 * paper.diag[3]);
    }

    #[test]
    fn gibbs_covariance_n2() {
        let p = params(2, 0.0, 1.0, 1.0, 1.0, 1.0);
        let cov = gibbs_covariance(&p).unwrap();
        let expect_q = Mat::from_rows(&[&[2.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 2.0 / 3.0]]);
        assert!(cov.block(2, 2, 2, 2).sub(&expect_q).max_abs() < 1e-14);
        assert!(cov.block(0, 2, 2, 2).max_abs() == 0.0);
        assert!(cov.block(0, 0, 2, 2).sub(&Mat::eye(2)).max_abs() == 0.0);
        // linear in T
        let p2 = params(2, 0.0, 1.0, 1.0, 2.0, 2.0);
        let cov2 = gibbs_covariance(&p2).unwrap();
        assert!(cov2.sub(&cov.scale(2.0)).max_abs() < 1e-14);
        // rejects unequal temperatures
        assert!(gibbs_covariance(&params(2, 0.0, 1.0, 1.0, 1.0, 0.5)).is_err());
    }

    #[test]
    fn kappa_difference_identity() {
        let p = params(6, 0.4, 1.7, 0.8, 1.9, 0.3);
        let d = p.derived();
        let expect = (p.t_left - p.t_right) / (2.0 * p.c);
        assert!((d.kappa_left - d.kappa_right - expect).abs() < 1e-14);
        assert!(d.mu > 0.0 && d.r_growth > 0.0);
    }
}
