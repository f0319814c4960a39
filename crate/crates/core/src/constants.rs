//! Closed-form convergence constants: the curvature constant λ_N, the
//! admissible perturbation budget, Poincaré and log-Sobolev constants,
//! the entropy decay rate, quadratic-form equivalence bounds, and the
//! hypercontractivity exponent. Everything here is a scalar identity in the
//! norms ‖b_N‖₂ and ‖b_N⁻¹‖₂.

use crate::chain::Convention;
use crate::error::{Error, Result};
use crate::linalg::{lambda_extremes_sym, Mat};
use serde::{Deserialize, Serialize};

/// Supremum bounds on the Hessian spectral norms of the perturbing
/// potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBounds {
    pub c_pin: f64,
    pub c_int: f64,
}

impl PerturbationBounds {
    pub fn harmonic() -> Self {
        PerturbationBounds {
            c_pin: 0.0,
            c_int: 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.c_pin + self.c_int
    }
}

/// λ_N = ‖b‖⁻¹ − 2 (C_pin + C_int) ‖b‖ ‖b⁻¹‖. May be negative; the caller
/// decides what that means.
pub fn compute_lambda(norm_b: f64, norm_b_inv: f64, bounds: &PerturbationBounds) -> f64 {
    1.0 / norm_b - 2.0 * bounds.sum() * norm_b * norm_b_inv
}

/// The exact zero of λ_N in the combined Hessian bound:
/// 1 / (2 ‖b‖² ‖b⁻¹‖).
pub fn perturbation_budget(norm_b: f64, norm_b_inv: f64) -> f64 {
    1.0 / (2.0 * norm_b * norm_b * norm_b_inv)
}

fn require_positive_lambda(lambda_n: f64) -> Result<()> {
    if lambda_n <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "constant undefined: lambda_n = {lambda_n:.6e} is not positive"
        )));
    }
    Ok(())
}

/// Poincaré constant in the perturbed form, T_L ‖b⁻¹‖ / λ_N. The
/// non-perturbed variant multiplies by ‖b‖.
pub fn poincare_constant(t_left: f64, norm_b_inv: f64, lambda_n: f64) -> Result<f64> {
    require_positive_lambda(lambda_n)?;
    Ok(t_left * norm_b_inv / lambda_n)
}

/// Log-Sobolev constants: (perturbed, non-perturbed) =
/// (T_L ‖b⁻¹‖ / (2 λ_N), same × ‖b‖).
pub fn lsi_constants(
    t_left: f64,
    norm_b: f64,
    norm_b_inv: f64,
    lambda_n: f64,
) -> Result<(f64, f64)> {
    require_positive_lambda(lambda_n)?;
    let perturbed = t_left * norm_b_inv / (2.0 * lambda_n);
    Ok((perturbed, perturbed * norm_b))
}

/// Exponential entropy decay rate λ_N / C_N = 2 λ_N² / (T_L ‖b⁻¹‖).
pub fn entropy_rate(lambda_n: f64, t_left: f64, norm_b_inv: f64) -> Result<f64> {
    require_positive_lambda(lambda_n)?;
    Ok(2.0 * lambda_n * lambda_n / (t_left * norm_b_inv))
}

/// Eigenvalue bounds (λ_min, λ_max) certifying
/// λ_min |g|² ≤ gᵀ b g ≤ λ_max |g|² for all g.
pub fn equivalence_bounds(b: &Mat) -> Result<(f64, f64)> {
    let (lo, hi) = lambda_extremes_sym(b)?;
    if lo <= 0.0 {
        return Err(Error::VerificationFailure(format!(
            "equivalence_bounds: matrix is singular (λ_min = {lo:.3e})"
        )));
    }
    Ok((lo, hi))
}

/// Hypercontractivity exponent q(t) − 1 = exp(4t / C̃_N) (p − 1).
pub fn hypercontractivity_exponent(t: f64, p: f64, lsi_nonperturbed: f64) -> Result<f64> {
    if p <= 1.0 {
        return Err(Error::InvalidParams(format!(
            "hypercontractivity needs p > 1, got {p}"
        )));
    }
    if t < 0.0 || lsi_nonperturbed <= 0.0 {
        return Err(Error::InvalidParams(
            "hypercontractivity needs t >= 0 and a positive LSI constant".into(),
        ));
    }
    Ok(1.0 + (4.0 * t / lsi_nonperturbed).exp() * (p - 1.0))
}

/// All constants for one parameter point, tagged with the convention the
/// norms were computed under.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalConstants {
    pub convention: Convention,
    pub norm_b: f64,
    pub norm_b_inv: f64,
    pub c_pin: f64,
    pub c_int: f64,
    pub lambda_n: f64,
    pub budget: f64,
    pub poincare: Option<f64>,
    pub lsi_perturbed: Option<f64>,
    pub lsi_nonperturbed: Option<f64>,
    pub entropy_rate: Option<f64>,
    pub equiv_lower: f64,
    pub equiv_upper: f64,
}

impl FunctionalConstants {
    /// q(t) for initial integrability p, using the non-perturbed LSI
    /// constant.
    pub fn hyper_q(&self, t: f64, p: f64) -> Result<f64> {
        let c = self.lsi_nonperturbed.ok_or_else(|| {
            Error::InvalidParams("hyper_q undefined: lambda_n not positive".into())
        })?;
        hypercontractivity_exponent(t, p, c)
    }
}

/// Bundle every constant for a solved chain; `b` is the step-N solution
/// under `conv`.
pub fn functional_constants(
    t_left: f64,
    conv: Convention,
    b: &Mat,
    bounds: &PerturbationBounds,
) -> Result<FunctionalConstants> {
    let (lo, hi) = equivalence_bounds(b)?;
    let norm_b = hi;
    let norm_b_inv = 1.0 / lo;
    let lambda_n = compute_lambda(norm_b, norm_b_inv, bounds);
    let budget = perturbation_budget(norm_b, norm_b_inv);
    let (poincare, lsi_p, lsi_np, rate) = if lambda_n > 0.0 {
        let (p, np) = lsi_constants(t_left, norm_b, norm_b_inv, lambda_n)?;
        (
            Some(poincare_constant(t_left, norm_b_inv, lambda_n)?),
            Some(p),
            Some(np),
            Some(entropy_rate(lambda_n, t_left, norm_b_inv)?),
        )
    } else {
        (None, None, None, None)
    };
    Ok(FunctionalConstants {
        convention: conv,
        norm_b,
        norm_b_inv,
        c_pin: bounds.c_pin,
        c_int: bounds.c_int,
        lambda_n,
        budget,
        poincare,
        lsi_perturbed: lsi_p,
        lsi_nonperturbed: lsi_np,
        entropy_rate: rate,
        equiv_lower: lo,
        equiv_upper: hi,
    })
}
