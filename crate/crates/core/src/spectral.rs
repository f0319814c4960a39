//! Eigenvalue analysis of the drift matrix and norm analysis of the
//! Lyapunov solution: spectral gap, rigorous bounds, trace identity.

use crate::chain::ChainParams;
use crate::error::{Error, Result};
use crate::linalg::{eigen, lambda_extremes_sym, Mat};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Spectrum of M together with the gap, its certified bounds, and the norms
/// of the Lyapunov solution that produced the lower bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues as (re, im) pairs, sorted by real part ascending.
    pub eigenvalues: Vec<(f64, f64)>,
    /// min Re(λ).
    pub rho: f64,
    /// |Σ Re(λ) - 2γ|.
    pub trace_defect: f64,
    /// 1 / (2 ‖b_N‖₂).
    pub lower_bound: f64,
    /// γ / N from the trace averaging argument.
    pub upper_bound: f64,
    pub norm_b: f64,
    pub norm_b_inv: f64,
}

/// Eigenvalues of a real square matrix, sorted by real part ascending.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    if m.rows() > 1000 {
        return Err(Error::SizeCapExceeded {
            size: m.rows(),
            cap: 1000,
        });
    }
    Ok(eigen(m, false)?.sorted_values())
}

/// Smallest real part over the spectrum.
pub fn spectral_gap(eigs: &[Complex64]) -> f64 {
    eigs.iter().fold(f64::INFINITY, |a, l| a.min(l.re))
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn spectral_norm(a: &Mat) -> Result<f64> {
    crate::linalg::spectral_norm_sym(a)
}

/// ‖b‖₂·‖b⁻¹‖₂ = λ_max / λ_min for symmetric positive definite b; the
/// inverse norm comes from the smallest eigenvalue, never from an explicit
/// inverse.
pub fn condition_product(b: &Mat) -> Result<f64> {
    let (lmin, lmax) = lambda_extremes_sym(b)?;
    if lmin <= 0.0 {
        return Err(Error::VerificationFailure(format!(
            "condition_product: matrix is numerically singular (λ_min = {lmin:.3e})"
        )));
    }
    Ok(lmax / lmin)
}

/// Norms of a symmetric positive definite matrix: (‖b‖₂, ‖b⁻¹‖₂).
pub fn pd_norms(b: &Mat) -> Result<(f64, f64)> {
    let (lmin, lmax) = lambda_extremes_sym(b)?;
    if lmin <= 0.0 {
        return Err(Error::VerificationFailure(format!(
            "pd_norms: matrix is numerically singular (λ_min = {lmin:.3e})"
        )));
    }
    Ok((lmax, 1.0 / lmin))
}

/// Assemble the report for a chain: spectrum of M plus gap bounds from the
/// step-N solution norms.
pub fn spectral_report(params: &ChainParams, m: &Mat, b_n: &Mat) -> Result<SpectralReport> {
    let eigs = eigenvalues(m)?;
    let rho = spectral_gap(&eigs);
    let re_sum: f64 = eigs.iter().map(|l| l.re).sum();
    let trace_defect = (re_sum - 2.0 * params.gamma).abs();
    let (norm_b, norm_b_inv) = pd_norms(b_n)?;
    Ok(SpectralReport {
        eigenvalues: eigs.iter().map(|l| (l.re, l.im)).collect(),
        rho,
        trace_defect,
        lower_bound: 1.0 / (2.0 * norm_b),
        upper_bound: params.gamma / params.n as f64,
        norm_b,
        norm_b_inv,
    })
}

/// Backward-stability spot check: ‖Mv - λv‖ ≤ tol·‖M‖₂-scale on `count`
/// pseudo-randomly chosen eigenpairs.
pub fn spot_check_eigenpairs(m: &Mat, count: usize, tol: f64) -> Result<f64> {
    let decomp = eigen(m, true)?;
    let n = m.rows();
    let m_scale = m.norm_fro();
    let mut worst = 0.0f64;
    let mut state = 0x9e3779b97f4a7c15u64;
    for _ in 0..count {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % n;
        let (lam, v) = decomp.eigenpair(j);
        let mut resid = 0.0f64;
        let mut vnorm = 0.0f64;
        for i in 0..n {
            let mut av = Complex64::new(0.0, 0.0);
            for k in 0..n {
                av += m[(i, k)] * v[k];
            }
            resid += (av - lam * v[i]).norm_sqr();
            vnorm += v[i].norm_sqr();
        }
        let rel = resid.sqrt() / (vnorm.sqrt() * m_scale);
        worst = worst.max(rel);
    }
    if worst > tol {
        return Err(Error::VerificationFailure(format!(
            "eigenpair residual {worst:.3e} above {tol:.1e}"
        )));
    }
    Ok(worst)
}
