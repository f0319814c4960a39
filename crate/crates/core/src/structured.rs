//! Structured construction of the Lyapunov solution from the block
//! recurrences, independent of the generic solvers.
//!
//! For the full right-hand side (step m = N) the z block is a perturbed
//! Toeplitz matrix determined by its first row, the first row of y follows
//! from a tridiagonal solve, the interior of y from a wave-like stencil, and
//! x = B·y + Γ·z. The only unknowns are the N-1 first-row entries of the
//! antisymmetric part of z; they are fixed by a reduced linear system that
//! equates the two available expressions for the last column of x. All
//! closed-form coefficients below were cross-checked against the dense
//! vectorized solver before being frozen.
//!
//! Odd N only: the cross-diagonal bookkeeping assumes an odd number of
//! sites. Even N is served by the generic solvers.

use crate::chain::{
    build_interaction_matrix, build_rhs_step, friction_diag, ChainParams, Convention,
};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, thomas_solve, toeplitz_solve, Mat};
use crate::lyapunov::{residual, LyapunovSolution, Method};
use serde::{Deserialize, Serialize};

pub const STRUCTURED_RESIDUAL_RTOL: f64 = 1e-8;
const COND_LIMIT: f64 = 1e13;

/// First row of the antisymmetric part of the z block:
/// entries (z_{1,2}, .., z_{1,N}).
#[derive(Debug, Clone, PartialEq)]
pub struct FirstRowVector {
    pub values: Vec<f64>,
    /// 1-norm condition estimate of the reduced system that produced the
    /// values (1.0 for the tridiagonal step-0 system).
    pub cond_estimate: f64,
}

impl FirstRowVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// z^a_{1,j} for 1-based column j (zero on the diagonal).
    pub fn entry(&self, j: usize) -> f64 {
        if j == 1 {
            0.0
        } else {
            self.values[j - 2]
        }
    }
}

/// Temperature entries of the right-hand side under a convention.
fn effective_temps(params: &ChainParams, conv: Convention) -> (f64, f64) {
    match conv {
        Convention::Paper => (params.t_left, params.t_right),
        Convention::Physical => (params.gamma * params.t_left, params.gamma * params.t_right),
    }
}

fn require_odd(params: &ChainParams) -> Result<()> {
    if params.n.is_multiple_of(2) {
        return Err(Error::EvenNUnsupported(params.n));
    }
    if params.n < 3 {
        return Err(Error::InvalidParams("structured solve needs N >= 3".into()));
    }
    Ok(())
}

/// Fill the z block of the step-N solution from its first row: constant
/// steps of -mu (odd diagonals) and +1 (even diagonals) down each diagonal,
/// minus one half on the main diagonal.
pub fn assemble_z(params: &ChainParams, first_row: &FirstRowVector) -> Mat {
    let n = params.n;
    debug_assert_eq!(first_row.len(), n - 1);
    let mu = params.derived().mu;
    let mut z = Mat::zeros(n, n);
    for k in 1..n {
        let head = first_row.values[k - 1];
        let step = if k % 2 == 1 { -mu } else { 1.0 };
        for r in 0..(n - k) {
            let v = head + step * r as f64;
            z[(r, r + k)] = v;
            z[(r + k, r)] = -v;
        }
    }
    for i in 0..n {
        z[(i, i)] = -0.5;
    }
    z
}

/// The tridiagonal image of the first y row: B·ȳ = z̃ with
/// ȳ = (y_{1,N}, .., y_{1,1}). Coefficients oracle-calibrated; note the
/// boundary term carries twice the bath temperature.
fn z_tilde(params: &ChainParams, conv: Convention, first_row: &FirstRowVector) -> Vec<f64> {
    let n = params.n;
    let (c, g) = (params.c, params.gamma);
    let mu = params.derived().mu;
    let (tl, _) = effective_temps(params, conv);
    let mut zt = vec![0.0; n];
    zt[0] = g * first_row.entry(n) + (c / (2.0 * g)) * mu;
    for (i, slot) in zt.iter_mut().enumerate().take(n - 1).skip(1) {
        let zi = first_row.entry(n - i + 1);
        *slot = if i % 2 == 1 {
            (c / g) * (zi - 1.0)
        } else {
            (c / g) * (zi + mu)
        };
    }
    zt[n - 1] =
        (c / g) * first_row.entry(2) + (2.0 * tl + params.a + 2.0 * params.c) / (2.0 * g) + g / 2.0;
    zt
}

/// Assemble the y block: first row from B⁻¹·z̃, second row from the
/// first-row relations, the rest from the interior stencil
/// y_{i+1,j} = y_{i,j-1} + y_{i,j+1} - y_{i-1,j} (+ boundary z terms).
pub fn assemble_y(
    params: &ChainParams,
    conv: Convention,
    first_row: &FirstRowVector,
) -> Result<Mat> {
    let n = params.n;
    let (c, g) = (params.c, params.gamma);
    let zt = z_tilde(params, conv, first_row);
    let sub = vec![-c; n];
    let diag = vec![params.a + 2.0 * c; n];
    let ybar = thomas_solve(&sub, &diag, &sub, &zt)?;

    let z = assemble_z(params, first_row);
    let mut y = Mat::zeros(n, n);
    for j in 0..n {
        y[(0, j)] = ybar[n - 1 - j];
    }
    y[(1, 0)] = y[(0, 1)];
    for j in 1..(n - 1) {
        y[(1, j)] = y[(0, j - 1)] + y[(0, j + 1)] + (g / c) * z[(0, j)];
    }
    y[(1, n - 1)] = y[(0, n - 2)] + (2.0 * g / c) * z[(0, n - 1)];
    for tr in 2..n {
        for j in 0..n {
            let mut v = -y[(tr - 2, j)];
            if j > 0 {
                v += y[(tr - 1, j - 1)];
            }
            if j + 1 < n {
                v += y[(tr - 1, j + 1)];
            }
            if j == 0 || j == n - 1 {
                v += (g / c) * z[(tr - 1, j)];
            }
            y[(tr, j)] = v;
        }
    }
    Ok(y)
}

/// x = B·y + Γ·z, with a defensive symmetry gate. With this fill order the
/// symmetry is structural (all unconstrained relations sit in the last y
/// row), so an inconsistent first row normally surfaces downstream at the
/// residual gate of `assemble_b` rather than here.
pub fn assemble_x(params: &ChainParams, y: &Mat, z: &Mat) -> Result<Mat> {
    let n = params.n;
    let b = build_interaction_matrix(params);
    let mut x = b.matmul(y);
    let gd = friction_diag(params);
    for i in [0, n - 1] {
        for j in 0..n {
            x[(i, j)] += gd[i] * z[(i, j)];
        }
    }
    let defect = x.symmetry_defect();
    let scale = x.max_abs().max(1.0);
    if defect > 1e-9 * scale {
        return Err(Error::VerificationFailure(format!(
            "x block symmetry defect {defect:.3e} exceeds 1e-9 x {scale:.3e}"
        )));
    }
    Ok(x)
}

/// Glue the blocks into b = [[x, z], [zᵀ, y]] and verify the residual
/// against the step-N equation.
pub fn assemble_b(
    params: &ChainParams,
    conv: Convention,
    x: &Mat,
    y: &Mat,
    z: &Mat,
) -> Result<LyapunovSolution> {
    let n = params.n;
    let mut b = Mat::zeros(2 * n, 2 * n);
    b.set_block(0, 0, x);
    b.set_block(0, n, z);
    b.set_block(n, 0, &z.transpose());
    b.set_block(n, n, y);
    let b = b.symmetrize();

    let m = crate::chain::build_drift_matrix(params);
    let pi = build_rhs_step(params, n, conv)?.matrix();
    let resid = residual(&b, &m, &pi)?;
    // Once ‖b‖ reaches ~1/eps relative to Π, even the rounded exact solution
    // misses a residual bound stated against ‖Π‖ alone; add the backward
    // floor 8·eps·‖M‖·‖b‖ so large chains are judged by what f64 can carry.
    let floor = 8.0 * f64::EPSILON * m.norm_fro() * b.norm_fro();
    let tol = STRUCTURED_RESIDUAL_RTOL * pi.norm_fro() + floor;
    if resid > tol {
        return Err(Error::ResidualFailure {
            residual: resid,
            tolerance: tol,
            context: "structured assembly".into(),
        });
    }
    Ok(LyapunovSolution {
        b,
        method: Method::Structured,
        residual_fro: resid,
    })
}

/// Difference between the two expressions for the last column of x, as a
/// function of a candidate first row. Zero at the true solution.
fn closing_defects(
    params: &ChainParams,
    conv: Convention,
    first_row: &FirstRowVector,
) -> Result<Vec<f64>> {
    let n = params.n;
    let (a, c, g) = (params.a, params.c, params.gamma);
    let (_, tr_eff) = effective_temps(params, conv);
    let z = assemble_z(params, first_row);
    let y = assemble_y(params, conv, first_row)?;

    let mut defects = Vec::with_capacity(n - 1);
    for k in 2..=n {
        let kc = k - 1;
        let route_a = if k < n {
            -c * y[(k - 2, n - 1)] + (a + 2.0 * c) * y[(k - 1, n - 1)] - c * y[(k, n - 1)]
        } else {
            -c * y[(n - 2, n - 1)] + (a + 2.0 * c) * y[(n - 1, n - 1)] - g / 2.0
        };
        let route_b = if k < n {
            // bordered row-N relation; off-diagonal z entries equal z^a
            let mut s = z[(n - 1, kc - 1)] - z[(n - 2, kc)];
            if kc + 1 < n {
                s += z[(n - 1, kc + 1)];
            }
            let border = if k == n - 1 { -c } else { 0.0 };
            (border + c * s) / g
        } else {
            (2.0 * tr_eff + a + 2.0 * c) / (2.0 * g) - (c / g) * z[(n - 2, n - 1)]
        };
        defects.push(route_a - route_b);
    }
    Ok(defects)
}

/// Solve for the first row of z^a at step m = N by a dense factorization of
/// the reduced (N-1) x (N-1) system. The closing equations are affine in the
/// first row, so the matrix is built by probing unit vectors; the growing
/// three-term recurrence survives only as a property check.
pub fn solve_first_row(params: &ChainParams, conv: Convention) -> Result<FirstRowVector> {
    params.validate()?;
    require_odd(params)?;
    let n = params.n;
    let dim = n - 1;

    let zero = FirstRowVector {
        values: vec![0.0; dim],
        cond_estimate: 1.0,
    };
    let r0 = closing_defects(params, conv, &zero)?;
    let mut k = Mat::zeros(dim, dim);
    for j in 0..dim {
        let mut probe = zero.clone();
        probe.values[j] = 1.0;
        let rj = closing_defects(params, conv, &probe)?;
        for i in 0..dim {
            k[(i, j)] = rj[i] - r0[i];
        }
    }
    let f = lu_factor(&k)?;
    let rhs: Vec<f64> = r0.iter().map(|v| -v).collect();
    let values = f.solve_vec(&rhs);

    let norm1 = (0..dim)
        .map(|j| (0..dim).map(|i| k[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let cond = norm1 * f.inverse_norm1();
    if cond > COND_LIMIT {
        return Err(Error::IllConditioned { cond });
    }
    Ok(FirstRowVector {
        values,
        cond_estimate: cond,
    })
}

/// The assembled blocks of the step-N solution, with a note of which rule
/// filled each region.
#[derive(Debug, Clone)]
pub struct StructuredBlocks {
    pub z: Mat,
    pub y: Mat,
    pub x: Mat,
    /// (region, rule) provenance of the assembly.
    pub assembly: Vec<(&'static str, &'static str)>,
}

impl StructuredBlocks {
    /// Evaluate every block identity on these blocks.
    pub fn verify(&self, params: &ChainParams, conv: Convention) -> Result<Vec<LemmaReport>> {
        verify_block_lemmas(params, conv, &self.x, &self.y, &self.z)
    }
}

/// Assemble all three blocks from a first row.
pub fn assemble_blocks(
    params: &ChainParams,
    conv: Convention,
    first_row: &FirstRowVector,
) -> Result<StructuredBlocks> {
    let z = assemble_z(params, first_row);
    let y = assemble_y(params, conv, first_row)?;
    let x = assemble_x(params, &y, &z)?;
    Ok(StructuredBlocks {
        z,
        y,
        x,
        assembly: vec![
            ("z first row", "reduced closing system, dense factorization"),
            (
                "z interior",
                "diagonal steps -mu (odd offsets), +1 (even offsets)",
            ),
            ("z diagonal", "constant -1/2"),
            ("y first row", "tridiagonal solve of B ybar = ztilde"),
            ("y second row", "first-row relations with (gamma/c) z terms"),
            (
                "y interior",
                "stencil y[i+1][j] = y[i][j-1] + y[i][j+1] - y[i-1][j]",
            ),
            ("x", "B y + Gamma z"),
        ],
    })
}

/// Full structured solve at step m = N.
pub fn solve_structured(params: &ChainParams, conv: Convention) -> Result<LyapunovSolution> {
    let first_row = solve_first_row(params, conv)?;
    let blocks = assemble_blocks(params, conv, &first_row)?;
    assemble_b(params, conv, &blocks.x, &blocks.y, &blocks.z)
}

/// Order-of-magnitude predictor for the corner entry z^a_{1,N}:
/// R^{1-N} (kappa_R - kappa_L) / (2γ).
pub fn asymptotic_z1n(params: &ChainParams) -> f64 {
    let d = params.derived();
    d.r_growth.powi(1 - params.n as i32) * (d.kappa_right - d.kappa_left) / (2.0 * params.gamma)
}

/// First row of the step-0 (bath-only right-hand side) z block, solved with
/// entrywise relative accuracy through the tridiagonal Toeplitz system
/// tridiag(-1, R, -1)·z̄ = -(ΔT_eff/γ²)·e₁. The solution decays like
/// sinh((N-j)β)/sinh(Nβ) with 2·cosh β = R, which generic dense solves
/// cannot resolve once entries drop below their absolute error floor.
pub fn solve_first_row_m0(params: &ChainParams, conv: Convention) -> Result<FirstRowVector> {
    params.validate()?;
    let n = params.n;
    let d = params.derived();
    let (tl, tr) = effective_temps(params, conv);
    let dt_eff = 0.5 * (tl - tr);
    let mut rhs = vec![0.0; n - 1];
    rhs[0] = -dt_eff / (params.gamma * params.gamma);
    let values = toeplitz_solve(d.r_growth, &rhs)?;
    Ok(FirstRowVector {
        values,
        cond_estimate: 1.0,
    })
}

/// Toeplitz antisymmetric z block of the step-0 solution.
pub fn assemble_z0(params: &ChainParams, first_row: &FirstRowVector) -> Mat {
    let n = params.n;
    debug_assert_eq!(first_row.len(), n - 1);
    let mut z = Mat::zeros(n, n);
    for k in 1..n {
        let v = first_row.values[k - 1];
        for r in 0..(n - k) {
            z[(r, r + k)] = v;
            z[(r + k, r)] = -v;
        }
    }
    z
}

/// One named block-identity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma_id: String,
    pub max_abs_defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn report(id: &str, defect: f64, tol: f64) -> LemmaReport {
    LemmaReport {
        lemma_id: id.to_string(),
        max_abs_defect: defect,
        tolerance: tol,
        pass: defect <= tol,
    }
}

/// Evaluate every step-N block identity on the given blocks, which may come
/// from the structured path or from a generic solver. The dense solution has
/// to satisfy all of them too; running both sides validates the recurrences
/// themselves at machine precision.
pub fn verify_block_lemmas(
    params: &ChainParams,
    conv: Convention,
    x: &Mat,
    y: &Mat,
    z: &Mat,
) -> Result<Vec<LemmaReport>> {
    params.validate()?;
    let n = params.n;
    let (a, c, g) = (params.a, params.c, params.gamma);
    let mu = params.derived().mu;
    let (tl_eff, tr_eff) = effective_temps(params, conv);
    let b = build_interaction_matrix(params);
    let scale = x.max_abs().max(y.max_abs()).max(z.max_abs()).max(1.0);
    let tol = 1e-8 * scale;
    let mut out = Vec::new();

    // z + zᵀ = -I
    let m1 = z.add(&z.transpose()).add(&Mat::eye(n)).max_abs();
    out.push(report("6.5.antisymmetry", m1, tol));

    // x = B y + Γ z
    let mut bygz = b.matmul(y);
    for i in [0, n - 1] {
        for j in 0..n {
            bygz[(i, j)] += g * z[(i, j)];
        }
    }
    out.push(report("6.5.x_from_y_z", bygz.sub(x).max_abs(), tol));

    // -Bz + zB - B = J_ΔT - xΓ - Γx
    let lhs = z.matmul(&b).sub(&b.matmul(z)).sub(&b);
    let mut rhs = Mat::zeros(n, n);
    rhs[(0, 0)] = 2.0 * tl_eff;
    rhs[(n - 1, n - 1)] = 2.0 * tr_eff;
    for i in 1..(n - 1) {
        rhs[(i, i)] = 1.0;
    }
    for j in 0..n {
        rhs[(j, 0)] -= x[(j, 0)] * g;
        rhs[(j, n - 1)] -= x[(j, n - 1)] * g;
        rhs[(0, j)] -= g * x[(0, j)];
        rhs[(n - 1, j)] -= g * x[(n - 1, j)];
    }
    out.push(report("6.5.bordered", lhs.sub(&rhs).max_abs(), tol));

    // yB - By = Γ + zΓ + Γz
    let lhs = y.matmul(&b).sub(&b.matmul(y));
    let mut rhs = Mat::zeros(n, n);
    rhs[(0, 0)] = g;
    rhs[(n - 1, n - 1)] = g;
    for i in 0..n {
        rhs[(i, 0)] += z[(i, 0)] * g;
        rhs[(i, n - 1)] += z[(i, n - 1)] * g;
        rhs[(0, i)] += g * z[(0, i)];
        rhs[(n - 1, i)] += g * z[(n - 1, i)];
    }
    out.push(report("6.5.y_commutator", lhs.sub(&rhs).max_abs(), tol));

    // diag(z) = -1/2
    let mut m5 = 0.0f64;
    for i in 0..n {
        m5 = m5.max((z[(i, i)] + 0.5).abs());
    }
    out.push(report("6.6.diagonal_half", m5, tol));

    // perturbed Toeplitz steps: z^a_{i,i+k} - z^a_{i-1,i+k-1} = -mu / +1
    let mut m6 = 0.0f64;
    for k in 1..(n - 1) {
        let step = if k % 2 == 1 { -mu } else { 1.0 };
        for i in 1..(n - k) {
            m6 = m6.max((z[(i, i + k)] - z[(i - 1, i + k - 1)] - step).abs());
        }
    }
    out.push(report("6.6.toeplitz_steps", m6, tol));

    // cross diagonal: z^a_{1,1+k} + z^a_{N,N-k} = (N-k-1)·mu (k odd), k-N+1 (k even)
    let mut m7 = 0.0f64;
    for k in 1..n {
        let expect = if k % 2 == 1 {
            (n as f64 - k as f64 - 1.0) * mu
        } else {
            k as f64 - n as f64 + 1.0
        };
        m7 = m7.max((z[(0, k)] + z[(n - 1, n - 1 - k)] - expect).abs());
    }
    out.push(report("6.6.cross_diagonal", m7, tol));

    // bordered x relations, including both corners
    let mut m8 = 0.0f64;
    m8 = m8
        .max((x[(0, 0)] - ((c / g) * z[(0, 1)] + (2.0 * tl_eff + a + 2.0 * c) / (2.0 * g))).abs());
    for j in 2..n {
        let expect = if j % 2 == 0 {
            (c / g) * (z[(0, j)] - 1.0)
        } else {
            (c / g) * (z[(0, j)] + mu)
        };
        m8 = m8.max((x[(0, j - 1)] - expect).abs());
    }
    m8 = m8.max((x[(0, n - 1)] - (c / (2.0 * g)) * mu).abs());
    m8 = m8.max(
        (x[(n - 1, n - 1)]
            - ((2.0 * tr_eff + a + 2.0 * c) / (2.0 * g) - (c / g) * z[(n - 2, n - 1)]))
            .abs(),
    );
    out.push(report("6.7.border_x", m8, tol));

    // x cross diagonal: x_{1,k-1} + x_{N,N-k+2} = ∓(c/γ)(N-k+2)·{1, mu}
    let mut m9 = 0.0f64;
    for k in 3..=n {
        let expect = if k % 2 == 1 {
            -(c / g) * (n as f64 - k as f64 + 2.0)
        } else {
            (c / g) * (n as f64 - k as f64 + 2.0) * mu
        };
        m9 = m9.max((x[(0, k - 2)] + x[(n - 1, n - k + 1)] - expect).abs());
    }
    out.push(report("6.7.cross_x", m9, tol));

    // second-row y relations
    let mut m10 = 0.0f64;
    for k in 2..n {
        let expect = y[(0, k - 2)] + y[(0, k)] + (g / c) * z[(0, k - 1)];
        m10 = m10.max((y[(1, k - 1)] - expect).abs());
    }
    m10 = m10.max((y[(1, n - 1)] - (y[(0, n - 2)] + (2.0 * g / c) * z[(0, n - 1)])).abs());
    out.push(report("6.9.second_row", m10, tol));

    // interior stencil y_{i-1,j} + y_{i+1,j} = y_{i,j-1} + y_{i,j+1}
    let mut m11 = 0.0f64;
    for i in 1..(n - 1) {
        for j in 1..(n - 1) {
            let d = y[(i - 1, j)] + y[(i + 1, j)] - y[(i, j - 1)] - y[(i, j + 1)];
            m11 = m11.max(d.abs());
        }
    }
    out.push(report("6.9.interior_stencil", m11, tol));

    // B·ȳ = z̃ with the frozen coefficients
    let fr = FirstRowVector {
        values: (1..n).map(|j| z[(0, j)]).collect(),
        cond_estimate: 1.0,
    };
    let zt = z_tilde(params, conv, &fr);
    let ybar: Vec<f64> = (0..n).map(|i| y[(0, n - 1 - i)]).collect();
    let bybar = b.matvec(&ybar);
    let m12 = bybar
        .iter()
        .zip(&zt)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    out.push(report("6.10.first_row_y", m12, tol));

    Ok(out)
}
