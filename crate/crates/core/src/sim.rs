//! Stochastic and deterministic dynamics: Euler-Maruyama integration of the
//! chain SDE dz = -Mᵀz dt - ∇Φ dt + noise on the boundary momenta, exact
//! Gaussian evolution of the harmonic flow, closed-form Wasserstein-2 and
//! relative entropy between Gaussians, and the contraction check.

pub mod rng;

use crate::chain::{build_drift_matrix, build_rhs_step, ChainParams, Convention};
use crate::constants::PerturbationBounds;
use crate::error::{Error, Result};
use crate::linalg::{expm, lambda_extremes_sym, sqrt_psd, sym_eigen, Mat};
use crate::lyapunov::solve_dense_kron;
use rayon::prelude::*;
use rng::Xoshiro256pp;
use serde::{Deserialize, Serialize};

/// Bounded perturbing potentials, v1: the shifted-cosine family
/// Φ(q) = ε_p Σᵢ (1 - cos qᵢ) + ε_i Σ (1 - cos(q_{i+1} - q_i)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub eps_pin: f64,
    pub eps_int: f64,
}

impl PotentialSpec {
    pub fn harmonic() -> Self {
        PotentialSpec {
            eps_pin: 0.0,
            eps_int: 0.0,
        }
    }

    pub fn is_harmonic(&self) -> bool {
        self.eps_pin == 0.0 && self.eps_int == 0.0
    }

    /// Hessian spectral-norm bounds: ε_p for the pinning part, 4 ε_i for
    /// the interaction part (graph-Laplacian-like structure of the bond
    /// Hessian).
    pub fn hessian_bounds(&self) -> PerturbationBounds {
        PerturbationBounds {
            c_pin: self.eps_pin,
            c_int: 4.0 * self.eps_int,
        }
    }

    pub fn phi(&self, q: &[f64]) -> f64 {
        let mut v = self.eps_pin * q.iter().map(|x| 1.0 - x.cos()).sum::<f64>();
        for w in q.windows(2) {
            v += self.eps_int * (1.0 - (w[1] - w[0]).cos());
        }
        v
    }

    pub fn grad_phi(&self, q: &[f64], out: &mut [f64]) {
        let n = q.len();
        for (o, &x) in out.iter_mut().zip(q) {
            *o = self.eps_pin * x.sin();
        }
        for i in 0..(n - 1) {
            let s = self.eps_int * (q[i + 1] - q[i]).sin();
            out[i] -= s;
            out[i + 1] += s;
        }
    }
}

/// Integration configuration. Reproducibility is per
/// (seed, trajectory index, step index).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub n_trajectories: usize,
}

impl SdeConfig {
    fn validate(&self, params: &ChainParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "dt = {} out of range",
                self.dt
            )));
        }
        if self.burn_in >= self.n_steps {
            return Err(Error::InvalidParams(format!(
                "burn_in {} must be below n_steps {}",
                self.burn_in, self.n_steps
            )));
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParams("need at least one trajectory".into()));
        }
        let m = build_drift_matrix(params);
        let mtm = m.t_matmul(&m);
        let norm2 = lambda_extremes_sym(&mtm)?.1.max(0.0).sqrt();
        if self.dt * norm2 >= 0.1 {
            return Err(Error::InvalidParams(format!(
                "stability guard: dt·‖M‖₂ = {:.3e} must stay below 0.1",
                self.dt * norm2
            )));
        }
        Ok(())
    }
}

/// Moments of the post-burn-in samples, with between-trajectory standard
/// errors.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    pub mean: Vec<f64>,
    pub cov: Mat,
    pub count: u64,
    pub n_trajectories: usize,
    pub se_mean: Vec<f64>,
    pub se_cov: Mat,
}

/// Drift field of the SDE: (-Mᵀz) plus the anharmonic force on the momentum
/// components.
pub fn drift(z: &[f64], params: &ChainParams, pot: &PotentialSpec) -> Vec<f64> {
    let n = params.n;
    assert_eq!(z.len(), 2 * n);
    let (p, q) = z.split_at(n);
    let mut out = vec![0.0; 2 * n];
    let (a, c, g) = (params.a, params.c, params.gamma);
    // dp = -Bq - Γp (- ∇Φ)
    for i in 0..n {
        let mut bq = (a + 2.0 * c) * q[i];
        if i > 0 {
            bq -= c * q[i - 1];
        }
        if i + 1 < n {
            bq -= c * q[i + 1];
        }
        out[i] = -bq;
    }
    out[0] -= g * p[0];
    out[n - 1] -= g * p[n - 1];
    if !pot.is_harmonic() {
        let mut grad = vec![0.0; n];
        pot.grad_phi(q, &mut grad);
        for i in 0..n {
            out[i] -= grad[i];
        }
    }
    // dq = p
    out[n..].copy_from_slice(p);
    out
}

/// One Euler-Maruyama step with explicit normal draws (ξ_left, ξ_right).
/// Noise enters only the boundary momenta p_1 and p_N.
pub fn em_step(z: &mut [f64], params: &ChainParams, pot: &PotentialSpec, dt: f64, xi: (f64, f64)) {
    let n = params.n;
    let d = drift(z, params, pot);
    for (zi, di) in z.iter_mut().zip(&d) {
        *zi += dt * di;
    }
    let amp_l = (2.0 * params.gamma * params.t_left * dt).sqrt();
    let amp_r = (2.0 * params.gamma * params.t_right * dt).sqrt();
    z[0] += amp_l * xi.0;
    z[n - 1] += amp_r * xi.1;
}

struct TrajAccum {
    count: u64,
    sum: Vec<f64>,
    sum_outer: Mat,
}

fn run_trajectory(
    params: &ChainParams,
    pot: &PotentialSpec,
    config: &SdeConfig,
    traj: usize,
) -> Result<TrajAccum> {
    let n = params.n;
    let dim = 2 * n;
    let mut gen = rng::trajectory_rng(config.seed, traj as u64);
    let mut z = vec![0.0; dim];
    let mut acc = TrajAccum {
        count: 0,
        sum: vec![0.0; dim],
        sum_outer: Mat::zeros(dim, dim),
    };
    for step in 0..config.n_steps {
        let xi = gen.normal_pair();
        em_step(&mut z, params, pot, config.dt, xi);
        if step % 256 == 0 {
            let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > 1e8 {
                return Err(Error::SimulationBlowup { step, norm });
            }
        }
        if step >= config.burn_in {
            acc.count += 1;
            for (s, &v) in acc.sum.iter_mut().zip(&z) {
                *s += v;
            }
            for i in 0..dim {
                let zi = z[i];
                let row = acc.sum_outer.row_mut(i);
                for (j, &zj) in z.iter().enumerate().skip(i) {
                    row[j] += zi * zj;
                }
            }
        }
    }
    Ok(acc)
}

fn accum_moments(acc: &TrajAccum) -> (Vec<f64>, Mat) {
    let dim = acc.sum.len();
    let inv = 1.0 / acc.count as f64;
    let mean: Vec<f64> = acc.sum.iter().map(|s| s * inv).collect();
    let mut cov = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v = acc.sum_outer[(i, j)] * inv - mean[i] * mean[j];
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Integrate the SDE over independent trajectories (parallel, with
/// per-trajectory derived streams) and return merged statistics.
/// Deterministic for a fixed (seed, dt, step counts, trajectory count).
pub fn simulate(
    params: &ChainParams,
    pot: &PotentialSpec,
    config: &SdeConfig,
) -> Result<TrajectoryStats> {
    params.validate()?;
    config.validate(params)?;
    let accs: Vec<Result<TrajAccum>> = (0..config.n_trajectories)
        .into_par_iter()
        .map(|k| run_trajectory(params, pot, config, k))
        .collect();
    let mut per_traj = Vec::with_capacity(accs.len());
    for a in accs {
        per_traj.push(a?);
    }

    let dim = 2 * params.n;
    let kk = per_traj.len();
    let moments: Vec<(Vec<f64>, Mat)> = per_traj.iter().map(accum_moments).collect();

    // deterministic merge in trajectory order
    let mut total = TrajAccum {
        count: 0,
        sum: vec![0.0; dim],
        sum_outer: Mat::zeros(dim, dim),
    };
    for a in &per_traj {
        total.count += a.count;
        for (s, v) in total.sum.iter_mut().zip(&a.sum) {
            *s += v;
        }
        total.sum_outer = total.sum_outer.add(&a.sum_outer);
    }
    let (mean, cov) = accum_moments(&total);

    // between-trajectory standard errors
    let mut se_mean = vec![0.0; dim];
    let mut se_cov = Mat::zeros(dim, dim);
    if kk > 1 {
        let kf = kk as f64;
        for i in 0..dim {
            let avg: f64 = moments.iter().map(|(m, _)| m[i]).sum::<f64>() / kf;
            let var: f64 = moments
                .iter()
                .map(|(m, _)| (m[i] - avg) * (m[i] - avg))
                .sum::<f64>()
                / (kf - 1.0);
            se_mean[i] = (var / kf).sqrt();
        }
        for i in 0..dim {
            for j in i..dim {
                let avg: f64 = moments.iter().map(|(_, c)| c[(i, j)]).sum::<f64>() / kf;
                let var: f64 = moments
                    .iter()
                    .map(|(_, c)| (c[(i, j)] - avg) * (c[(i, j)] - avg))
                    .sum::<f64>()
                    / (kf - 1.0);
                let se = (var / kf).sqrt();
                se_cov[(i, j)] = se;
                se_cov[(j, i)] = se;
            }
        }
    }
    Ok(TrajectoryStats {
        mean,
        cov,
        count: total.count,
        n_trajectories: kk,
        se_mean,
        se_cov,
    })
}

/// Exact stationary covariance of the Euler-Maruyama chain itself: the
/// fixed point of Σ = FΣFᵀ + dt·D with F = I - dt·Mᵀ, solved through its
/// vectorization. Quantifies the weak-order-1 discretization bias that
/// separates the sampled equilibrium from the continuum solution.
pub fn em_stationary_covariance(params: &ChainParams, dt: f64) -> Result<Mat> {
    params.validate()?;
    let n2 = 2 * params.n;
    let m = build_drift_matrix(params);
    let mut f = Mat::eye(n2);
    for i in 0..n2 {
        for j in 0..n2 {
            f[(i, j)] -= dt * m[(j, i)];
        }
    }
    let mut q = Mat::zeros(n2, n2);
    q[(0, 0)] = 2.0 * params.gamma * params.t_left * dt;
    q[(params.n - 1, params.n - 1)] = 2.0 * params.gamma * params.t_right * dt;
    let dim = n2 * n2;
    let mut a = Mat::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = 1.0;
    }
    for i in 0..n2 {
        for j in 0..n2 {
            let row = i * n2 + j;
            for k in 0..n2 {
                let fik = f[(i, k)];
                if fik == 0.0 {
                    continue;
                }
                for l in 0..n2 {
                    a[(row, k * n2 + l)] -= fik * f[(j, l)];
                }
            }
        }
    }
    let rhs: Vec<f64> = (0..dim).map(|r| q[(r / n2, r % n2)]).collect();
    let x = crate::linalg::lu_factor(&a)?.solve_vec(&rhs);
    Ok(Mat::from_vec(n2, n2, x).symmetrize())
}

/// Binary dump of trajectory 0: header (N as u64, dt as f64, n_steps as
/// u64, all little-endian), then one state per step, state-major
/// (2N little-endian f64 per record).
pub fn write_trajectory_dump(
    params: &ChainParams,
    pot: &PotentialSpec,
    config: &SdeConfig,
    path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    params.validate()?;
    config.validate(params)?;
    let file = std::fs::File::create(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    w.write_all(&(params.n as u64).to_le_bytes())
        .map_err(io_err)?;
    w.write_all(&config.dt.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(config.n_steps as u64).to_le_bytes())
        .map_err(io_err)?;
    let mut gen = rng::trajectory_rng(config.seed, 0);
    let mut z = vec![0.0f64; 2 * params.n];
    for step in 0..config.n_steps {
        let xi = gen.normal_pair();
        em_step(&mut z, params, pot, config.dt, xi);
        if step % 256 == 0 {
            let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > 1e8 {
                return Err(Error::SimulationBlowup { step, norm });
            }
        }
        for v in &z {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// A Gaussian law on the 2N-dimensional phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: Vec<f64>,
    pub cov: Mat,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, cov: Mat) -> Result<Self> {
        if cov.rows() != mean.len() || !cov.is_square() {
            return Err(Error::ShapeMismatch(
                "GaussianState: mean/cov dimensions".into(),
            ));
        }
        let defect = cov.symmetry_defect();
        if defect > 1e-10 * cov.max_abs().max(1.0) {
            return Err(Error::InvalidParams(format!(
                "covariance asymmetry {defect:.3e}"
            )));
        }
        let scale = crate::linalg::spectral_norm_sym(&cov)?;
        let lmin = crate::linalg::lambda_min_sym(&cov)?;
        if lmin < -1e-12 * scale.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "covariance not PSD: min eigenvalue {lmin:.3e}"
            )));
        }
        Ok(GaussianState {
            mean,
            cov: cov.symmetrize(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Exact harmonic flow: mean and covariance of the evolved Gaussian law.
/// Holds M, e^{-Mᵀt} machinery and the stationary covariance (the step-0
/// physical solution).
pub struct HarmonicFlow {
    m: Mat,
    sigma_inf: Mat,
}

impl HarmonicFlow {
    pub fn new(params: &ChainParams) -> Result<Self> {
        params.validate()?;
        let m = build_drift_matrix(params);
        let pi = build_rhs_step(params, 0, Convention::Physical)?.matrix();
        let sigma_inf = solve_dense_kron(&m, &pi)?.b;
        Ok(HarmonicFlow { m, sigma_inf })
    }

    pub fn stationary(&self) -> &Mat {
        &self.sigma_inf
    }

    /// mean(t) = e^{-Mᵀt} mean(0);
    /// cov(t) = Σ∞ + e^{-Mᵀt} (Σ0 - Σ∞) e^{-Mt}.
    pub fn evolve(&self, g0: &GaussianState, t: f64) -> Result<GaussianState> {
        if g0.dim() != self.m.rows() {
            return Err(Error::ShapeMismatch("evolve: state dimension".into()));
        }
        let e = expm(&self.m.transpose().scale(-t))?;
        let mean = e.matvec(&g0.mean);
        let d0 = g0.cov.sub(&self.sigma_inf);
        let cov = self
            .sigma_inf
            .add(&e.matmul(&d0).matmul_nt(&e))
            .symmetrize();
        GaussianState::new(mean, cov)
    }
}

/// Evolve a Gaussian law under the harmonic chain flow for time t.
/// Anharmonic potentials have no Gaussian-preserving flow; rejected.
pub fn gaussian_evolve(
    g0: &GaussianState,
    params: &ChainParams,
    pot: &PotentialSpec,
    t: f64,
) -> Result<GaussianState> {
    if !pot.is_harmonic() {
        return Err(Error::InvalidParams(
            "gaussian_evolve is exact only for the harmonic chain (ε = 0)".into(),
        ));
    }
    HarmonicFlow::new(params)?.evolve(g0, t)
}

const SQRT_CLAMP_REL: f64 = 1e-14;

/// Wasserstein-2 distance between Gaussians:
/// W₂² = |m₁-m₂|² + tr(Σ₁ + Σ₂ - 2(Σ₂^{1/2} Σ₁ Σ₂^{1/2})^{1/2}).
pub fn w2_gaussian(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::ShapeMismatch(
            "w2_gaussian: dimensions differ".into(),
        ));
    }
    let mean_sq: f64 = g1
        .mean
        .iter()
        .zip(&g2.mean)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let s2h = sqrt_psd(&g2.cov, SQRT_CLAMP_REL)?;
    let inner = s2h.matmul(&g1.cov).matmul(&s2h);
    let cross = sqrt_psd(&inner, SQRT_CLAMP_REL)?;
    let bures = g1.cov.trace() + g2.cov.trace() - 2.0 * cross.trace();
    Ok((mean_sq + bures.max(0.0)).sqrt())
}

/// Relative entropy KL(g1 ‖ g2) between Gaussians; +∞ for a degenerate g1,
/// an error for a singular reference g2.
pub fn kl_gaussian(g1: &GaussianState, g2: &GaussianState) -> Result<f64> {
    if g1.dim() != g2.dim() {
        return Err(Error::ShapeMismatch(
            "kl_gaussian: dimensions differ".into(),
        ));
    }
    let d = g1.dim() as f64;
    let e2 = sym_eigen(&g2.cov, true)?;
    if e2.values[0] <= 0.0 {
        return Err(Error::VerificationFailure(format!(
            "kl_gaussian: reference covariance singular (λ_min = {:.3e})",
            e2.values[0]
        )));
    }
    let v2 = e2.vectors.as_ref().unwrap();
    // Σ2^{-1} w for any w via the eigendecomposition
    let apply_inv = |w: &[f64]| -> Vec<f64> {
        let wt = v2.t_matvec(w);
        let scaled: Vec<f64> = wt.iter().zip(&e2.values).map(|(x, l)| x / l).collect();
        v2.matvec(&scaled)
    };
    let logdet2: f64 = e2.values.iter().map(|l| l.ln()).sum();
    let e1 = sym_eigen(&g1.cov, false)?;
    if e1.values[0] <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let logdet1: f64 = e1.values.iter().map(|l| l.ln()).sum();
    // tr(Σ2^{-1} Σ1)
    let mut tr = 0.0;
    for j in 0..g1.dim() {
        let col = g1.cov.column(j);
        tr += apply_inv(&col)[j];
    }
    let dm: Vec<f64> = g2.mean.iter().zip(&g1.mean).map(|(b, a)| b - a).collect();
    let quad: f64 = apply_inv(&dm).iter().zip(&dm).map(|(x, y)| x * y).sum();
    Ok(0.5 * (tr + quad - d + logdet2 - logdet1))
}

/// One (pair, time) entry of the contraction record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionEntry {
    pub t: f64,
    pub w2: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairContraction {
    pub w2_initial: f64,
    pub entries: Vec<ContractionEntry>,
    pub log_slope: Option<f64>,
    pub bound_ok: bool,
    pub slope_ok: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionReport {
    pub lambda_n: f64,
    pub prefactor: f64,
    pub pairs: Vec<PairContraction>,
}

impl ContractionReport {
    pub fn all_ok(&self) -> bool {
        self.pairs.iter().all(|p| p.bound_ok && p.slope_ok)
    }
}

const CONTRACTION_SLACK: f64 = 1e-9;
const SLOPE_SLACK: f64 = 1e-6;

/// Verify W₂(P_t g1, P_t g2) ≤ √(‖b‖‖b⁻¹‖) e^{-λ_N t} W₂(g1, g2) on a time
/// grid, with λ_N = ‖b_N‖₂⁻¹ from the physical step-N solution, and check
/// that the asymptotic slope of log W₂ stays below -λ_N/2. The slope is
/// measured on a window [4/ρ, 8/ρ] set by the spectral gap, past the
/// hypocoercive transient where W₂ may legitimately grow under the
/// prefactor. Violations are recorded per pair, not silently dropped.
pub fn contraction_check(
    params: &ChainParams,
    pairs: &[(GaussianState, GaussianState)],
    t_grid: &[f64],
) -> Result<ContractionReport> {
    params.validate()?;
    let m = build_drift_matrix(params);
    let pi = build_rhs_step(params, params.n, Convention::Physical)?.matrix();
    let b = solve_dense_kron(&m, &pi)?.b;
    let (norm_b, norm_b_inv) = crate::spectral::pd_norms(&b)?;
    let lambda_n = 1.0 / norm_b;
    let prefactor = (norm_b * norm_b_inv).sqrt();
    let rho = crate::spectral::spectral_gap(&crate::spectral::eigenvalues(&m)?);
    let slope_grid: Vec<f64> = (0..=8).map(|k| (4.0 + 0.5 * k as f64) / rho).collect();
    let flow = HarmonicFlow::new(params)?;

    let mut out = Vec::with_capacity(pairs.len());
    for (g1, g2) in pairs {
        let w0 = w2_gaussian(g1, g2)?;
        // below this, W2 is square-root-of-roundoff fuzz and the
        // multiplicative bound is meaningless
        let scale = 1.0 + g1.cov.trace().abs() + g2.cov.trace().abs();
        let floor = 1e-7 * scale.sqrt();
        let degenerate = w0 <= floor;
        let mut entries = Vec::with_capacity(t_grid.len());
        let mut bound_ok = true;
        for &t in t_grid {
            let e1 = flow.evolve(g1, t)?;
            let e2 = flow.evolve(g2, t)?;
            let w = w2_gaussian(&e1, &e2)?;
            let bound = prefactor * (-lambda_n * t).exp() * w0 * (1.0 + CONTRACTION_SLACK);
            if !degenerate && w > bound + 1e-14 {
                bound_ok = false;
            }
            entries.push(ContractionEntry { t, w2: w, bound });
        }
        let mut pts = Vec::new();
        if !degenerate {
            for &t in &slope_grid {
                let e1 = flow.evolve(g1, t)?;
                let e2 = flow.evolve(g2, t)?;
                let w = w2_gaussian(&e1, &e2)?;
                if w > floor * 1e-3 {
                    pts.push((t, w.ln()));
                }
            }
        }
        let (log_slope, slope_ok) = if pts.len() >= 2 {
            let slope = fit_slope(&pts);
            (Some(slope), slope <= -lambda_n / 2.0 + SLOPE_SLACK)
        } else {
            (None, true)
        };
        out.push(PairContraction {
            w2_initial: w0,
            entries,
            log_slope,
            bound_ok,
            slope_ok,
        });
    }
    Ok(ContractionReport {
        lambda_n,
        prefactor,
        pairs: out,
    })
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Seeded random Gaussian pairs for contraction experiments: means are
/// standard normal, covariances A·Aᵀ + 0.1·I with normal A entries.
pub fn seeded_gaussian_pairs(
    dim: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<(GaussianState, GaussianState)>> {
    let mut gen = Xoshiro256pp::from_seed_u64(seed);
    let random_state = |gen: &mut Xoshiro256pp| -> Result<GaussianState> {
        let mean: Vec<f64> = (0..dim).map(|_| gen.next_normal()).collect();
        let mut a = Mat::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                a[(i, j)] = gen.next_normal() / (dim as f64).sqrt();
            }
        }
        let mut cov = a.matmul_nt(&a);
        for i in 0..dim {
            cov[(i, i)] += 0.1;
        }
        GaussianState::new(mean, cov)
    };
    (0..count)
        .map(|_| Ok((random_state(&mut gen)?, random_state(&mut gen)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::gibbs_covariance;

    fn params(n: usize, tl: f64, tr: f64) -> ChainParams {
        ChainParams::new(n, 0.0, 1.0, 1.0, tl, tr).unwrap()
    }

    #[test]
    fn drift_zero_at_origin() {
        let p = params(4, 1.0, 1.0);
        let z = vec![0.0; 8];
        let d = drift(&z, &p, &PotentialSpec::harmonic());
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn harmonic_drift_matches_matrix() {
        let p = params(5, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let mut gen = Xoshiro256pp::from_seed_u64(7);
        for _ in 0..100 {
            let z: Vec<f64> = (0..10).map(|_| gen.next_normal()).collect();
            let d = drift(&z, &p, &PotentialSpec::harmonic());
            let expect: Vec<f64> = m.t_matvec(&z).iter().map(|v| -v).collect();
            let err = d
                .iter()
                .zip(&expect)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn anharmonic_force_matches_finite_differences() {
        let _p = params(5, 1.0, 1.0);
        let pot = PotentialSpec {
            eps_pin: 0.3,
            eps_int: 0.7,
        };
        let mut gen = Xoshiro256pp::from_seed_u64(99);
        let h = 1e-6;
        for _ in 0..20 {
            let q: Vec<f64> = (0..5).map(|_| 2.0 * gen.next_normal()).collect();
            let mut grad = vec![0.0; 5];
            pot.grad_phi(&q, &mut grad);
            for i in 0..5 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[i] += h;
                qm[i] -= h;
                let fd = (pot.phi(&qp) - pot.phi(&qm)) / (2.0 * h);
                assert!((grad[i] - fd).abs() < 1e-6, "site {i}: {} vs {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn noise_enters_boundary_momenta_only() {
        let p = params(6, 1.5, 0.5);
        let pot = PotentialSpec::harmonic();
        let z0: Vec<f64> = (0..12).map(|i| 0.1 * i as f64).collect();
        let mut with_noise = z0.clone();
        let mut without = z0.clone();
        em_step(&mut with_noise, &p, &pot, 1e-3, (1.0, -1.0));
        em_step(&mut without, &p, &pot, 1e-3, (0.0, 0.0));
        for (i, (a, b)) in with_noise.iter().zip(&without).enumerate() {
            if i == 0 || i == 5 {
                assert!((a - b).abs() > 0.0);
            } else {
                assert_eq!(a, b, "component {i} saw noise");
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let p = params(3, 1.5, 0.5);
        let cfg = SdeConfig {
            dt: 1e-2,
            n_steps: 2000,
            burn_in: 100,
            seed: 42,
            n_trajectories: 3,
        };
        let s1 = simulate(&p, &PotentialSpec::harmonic(), &cfg).unwrap();
        let s2 = simulate(&p, &PotentialSpec::harmonic(), &cfg).unwrap();
        assert_eq!(s1.mean, s2.mean);
        assert_eq!(s1.cov, s2.cov);
        assert_eq!(s1.count, s2.count);
    }

    #[test]
    fn equilibrium_covariance_smoke() {
        // coarse check; the strict variant lives in the acceptance suite
        let p = params(3, 1.0, 1.0);
        let cfg = SdeConfig {
            dt: 2e-3,
            n_steps: 400_000,
            burn_in: 50_000,
            seed: 7,
            n_trajectories: 4,
        };
        let stats = simulate(&p, &PotentialSpec::harmonic(), &cfg).unwrap();
        let target = gibbs_covariance(&p).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if target[(i, j)].abs() > 0.05 {
                    let rel = (stats.cov[(i, j)] - target[(i, j)]).abs() / target[(i, j)].abs();
                    assert!(
                        rel < 0.2,
                        "entry ({i},{j}): {} vs {}",
                        stats.cov[(i, j)],
                        target[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn dissipative_energy_decay_without_noise() {
        let p = params(4, 1.0, 1.0);
        let pot = PotentialSpec::harmonic();
        let bmat = crate::chain::build_interaction_matrix(&p);
        let mut z = vec![0.0; 8];
        z[1] = 1.0;
        z[6] = -0.7;
        let energy = |z: &[f64]| -> f64 {
            let (pp, qq) = z.split_at(4);
            let kin: f64 = pp.iter().map(|v| 0.5 * v * v).sum();
            let bq = bmat.matvec(qq);
            let pot: f64 = qq.iter().zip(&bq).map(|(a, b)| 0.5 * a * b).sum();
            kin + pot
        };
        // Explicit Euler adds O(dt²) energy per step, so monotonicity is
        // asserted on window checkpoints where the physical dissipation
        // dominates the discretization drift.
        let e0 = energy(&z);
        let mut prev = e0;
        for _ in 0..40 {
            for _ in 0..500 {
                em_step(&mut z, &p, &pot, 1e-3, (0.0, 0.0));
            }
            let e = energy(&z);
            assert!(
                e <= prev * (1.0 + 1e-4) + 1e-12,
                "energy rose: {prev} -> {e}"
            );
            prev = e;
        }
        assert!(prev < 0.3 * e0, "final energy {prev} vs initial {e0}");
    }

    #[test]
    fn gaussian_evolve_fixed_point_and_semigroup() {
        let p = params(3, 1.4, 0.6);
        let flow = HarmonicFlow::new(&p).unwrap();
        let stat = GaussianState::new(vec![0.0; 6], flow.stationary().clone()).unwrap();
        let moved = flow.evolve(&stat, 1.7).unwrap();
        assert!(moved.cov.sub(&stat.cov).max_abs() < 1e-10);
        assert!(moved.mean.iter().all(|&v| v.abs() < 1e-12));

        let g0 = seeded_gaussian_pairs(6, 1, 5).unwrap().remove(0).0;
        let one = flow.evolve(&g0, 0.9).unwrap();
        let two = flow.evolve(&one, 0.6).unwrap();
        let direct = flow.evolve(&g0, 1.5).unwrap();
        assert!(two.cov.sub(&direct.cov).max_abs() < 1e-9);
        let mean_err = two
            .mean
            .iter()
            .zip(&direct.mean)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(mean_err < 1e-10);
    }

    #[test]
    fn gaussian_evolve_converges_to_stationary() {
        let p = params(2, 1.2, 0.8);
        let m = build_drift_matrix(&p);
        let eigs = crate::spectral::eigenvalues(&m).unwrap();
        let rho = crate::spectral::spectral_gap(&eigs);
        let flow = HarmonicFlow::new(&p).unwrap();
        let g0 = seeded_gaussian_pairs(4, 1, 11).unwrap().remove(0).0;
        let far = flow.evolve(&g0, 50.0 / rho).unwrap();
        assert!(far.cov.sub(flow.stationary()).max_abs() < 1e-8);
    }

    #[test]
    fn covariance_flow_satisfies_differential_equation() {
        let p = params(3, 1.5, 0.5);
        let m = build_drift_matrix(&p);
        let d = build_rhs_step(&p, 0, Convention::Physical)
            .unwrap()
            .matrix();
        let flow = HarmonicFlow::new(&p).unwrap();
        let g0 = seeded_gaussian_pairs(6, 1, 3).unwrap().remove(0).0;
        let h = 1e-5;
        for &t in &[0.3, 1.1, 2.7] {
            let plus = flow.evolve(&g0, t + h).unwrap().cov;
            let minus = flow.evolve(&g0, t - h).unwrap().cov;
            let fd = plus.sub(&minus).scale(1.0 / (2.0 * h));
            let sig = flow.evolve(&g0, t).unwrap().cov;
            let expect = d.sub(&m.t_matmul(&sig)).sub(&sig.matmul(&m));
            assert!(fd.sub(&expect).max_abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn w2_examples() {
        let g1 = GaussianState::new(vec![0.0], Mat::from_diag(&[1.0])).unwrap();
        let g2 = GaussianState::new(vec![3.0], Mat::from_diag(&[1.0])).unwrap();
        assert!((w2_gaussian(&g1, &g2).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(w2_gaussian(&g1, &g1).unwrap(), 0.0);
        for d in [2usize, 5] {
            let a = GaussianState::new(vec![0.0; d], Mat::eye(d)).unwrap();
            let b = GaussianState::new(vec![0.0; d], Mat::eye(d).scale(4.0)).unwrap();
            let expect = (d as f64).sqrt();
            assert!((w2_gaussian(&a, &b).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn w2_metric_axioms_on_random_triples() {
        let states: Vec<GaussianState> = seeded_gaussian_pairs(4, 3, 17)
            .unwrap()
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect();
        for a in &states {
            for b in &states {
                let dab = w2_gaussian(a, b).unwrap();
                let dba = w2_gaussian(b, a).unwrap();
                assert!((dab - dba).abs() < 1e-9 * dab.max(1.0));
                for c in &states {
                    let dac = w2_gaussian(a, c).unwrap();
                    let dcb = w2_gaussian(c, b).unwrap();
                    assert!(dab <= dac + dcb + 1e-12);
                }
            }
        }
    }

    #[test]
    fn kl_examples() {
        let g1 = seeded_gaussian_pairs(4, 1, 23).unwrap().remove(0).0;
        assert!(kl_gaussian(&g1, &g1).unwrap().abs() < 1e-10);
        for (a, b) in seeded_gaussian_pairs(3, 100, 31).unwrap() {
            assert!(kl_gaussian(&a, &b).unwrap() >= -1e-10);
        }
        // singular reference is an error; degenerate argument is +infinity
        let singular = GaussianState {
            mean: vec![0.0; 2],
            cov: Mat::from_diag(&[1.0, 0.0]),
        };
        let sane = GaussianState::new(vec![0.0; 2], Mat::eye(2)).unwrap();
        assert!(kl_gaussian(&sane, &singular).is_err());
        assert!(kl_gaussian(&singular, &sane).unwrap().is_infinite());
    }

    #[test]
    fn error_paths() {
        // anharmonic Gaussian evolution is rejected
        let p = params(3, 1.0, 1.0);
        let g = seeded_gaussian_pairs(6, 1, 8).unwrap().remove(0).0;
        let pot = PotentialSpec {
            eps_pin: 0.1,
            eps_int: 0.0,
        };
        assert!(gaussian_evolve(&g, &p, &pot, 1.0).is_err());
        // indefinite covariance rejected at construction
        assert!(GaussianState::new(vec![0.0; 2], Mat::from_diag(&[1.0, -0.5])).is_err());
        // stability guard on dt
        let cfg = SdeConfig {
            dt: 1.0,
            n_steps: 10,
            burn_in: 1,
            seed: 0,
            n_trajectories: 1,
        };
        assert!(simulate(&p, &PotentialSpec::harmonic(), &cfg).is_err());
    }

    #[test]
    fn kl_decreases_along_flow() {
        let p = params(3, 1.5, 0.5);
        let flow = HarmonicFlow::new(&p).unwrap();
        let stat = GaussianState::new(vec![0.0; 6], flow.stationary().clone()).unwrap();
        let g0 = seeded_gaussian_pairs(6, 1, 41).unwrap().remove(0).0;
        let mut prev = f64::INFINITY;
        for &t in &[0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
            let gt = flow.evolve(&g0, t).unwrap();
            let kl = kl_gaussian(&gt, &stat).unwrap();
            assert!(kl <= prev * (1.0 + 1e-9) + 1e-12, "t={t}: {kl} > {prev}");
            prev = kl;
        }
    }

    #[test]
    fn contraction_identical_pair_is_trivial() {
        let p = params(2, 1.5, 0.5);
        let g = seeded_gaussian_pairs(4, 1, 2).unwrap().remove(0).0;
        let rep = contraction_check(&p, &[(g.clone(), g)], &[0.5, 1.0]).unwrap();
        assert!(rep.all_ok());
        // the matrix square roots leave sqrt(eps)-level fuzz around zero
        assert!(rep.pairs[0].w2_initial < 1e-6);
    }

    #[test]
    fn contraction_mean_shift_pair() {
        let p = params(2, 1.5, 0.5);
        let flow = HarmonicFlow::new(&p).unwrap();
        let cov = flow.stationary().clone();
        let g1 = GaussianState::new(vec![1.0, -0.5, 0.3, 0.2], cov.clone()).unwrap();
        let g2 = GaussianState::new(vec![0.0; 4], cov).unwrap();
        let grid: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
        let rep = contraction_check(&p, &[(g1, g2)], &grid).unwrap();
        assert!(rep.all_ok(), "{:?}", rep.pairs[0]);
        // W2 for equal covariances is the evolved mean distance
        let pr = &rep.pairs[0];
        assert!(pr.entries.iter().all(|e| e.w2 <= pr.w2_initial));
    }
}
