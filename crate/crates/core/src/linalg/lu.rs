//! LU factorization with partial pivoting, blocked for cache.
//!
//! Sized for the vectorized Lyapunov solves, where the system dimension is
//! the square of the state dimension (a few thousand), so the trailing
//! update has to run near register speed on one core.

use super::mat::Mat;
use crate::error::{Error, Result};

pub struct LuFactor {
    lu: Mat,
    piv: Vec<usize>,
}

const PANEL: usize = 64;
const JTILE: usize = 512;

/// Factor a square matrix; fails on a pivot below `n * eps * max_abs`.
pub fn lu_factor(a: &Mat) -> Result<LuFactor> {
    assert!(a.is_square(), "lu_factor needs a square matrix");
    let n = a.rows();
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    let tiny = (n as f64) * f64::EPSILON * a.max_abs().max(f64::MIN_POSITIVE);

    let mut k = 0;
    while k < n {
        let nb = PANEL.min(n - k);
        let rest = k + nb;
        // Unblocked factorization of panel columns k..rest.
        for j in k..rest {
            let mut p = j;
            let mut best = lu[(j, j)].abs();
            for i in (j + 1)..n {
                let v = lu[(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(Error::SingularSystem {
                    pivot: best,
                    index: j,
                });
            }
            if p != j {
                piv.swap(j, p);
                let (rj, rp) = lu.two_rows_mut(j, p);
                rj.swap_with_slice(rp);
            }
            let d = 1.0 / lu[(j, j)];
            for i in (j + 1)..n {
                lu[(i, j)] *= d;
            }
            if j + 1 < rest {
                // Rank-1 update restricted to the panel.
                for i in (j + 1)..n {
                    let l = lu[(i, j)];
                    if l != 0.0 {
                        let (src, dst) = lu.two_rows_mut(j, i);
                        for c in (j + 1)..rest {
                            dst[c] -= l * src[c];
                        }
                    }
                }
            }
        }
        if rest < n {
            // U12 = L11^{-1} A12 (unit lower triangular forward solve).
            for r in (k + 1)..rest {
                for q in k..r {
                    let l = lu[(r, q)];
                    if l != 0.0 {
                        let (src, dst) = lu.two_rows_mut(q, r);
                        for c in rest..n {
                            dst[c] -= l * src[c];
                        }
                    }
                }
            }
            // A22 -= L21 * U12, tiled over columns of the trailing block.
            let data = lu.data_mut();
            let mut j0 = rest;
            while j0 < n {
                let j1 = (j0 + JTILE).min(n);
                let (u_part, a_part) = data.split_at_mut(rest * n);
                for i in rest..n {
                    let row = &mut a_part[(i - rest) * n..(i - rest + 1) * n];
                    let (li_part, tail) = row.split_at_mut(rest);
                    let li = &li_part[k..rest];
                    let dst = &mut tail[(j0 - rest)..(j1 - rest)];
                    for (q, &l) in li.iter().enumerate() {
                        if l != 0.0 {
                            let u_row = &u_part[(k + q) * n + j0..(k + q) * n + j1];
                            for (d, &u) in dst.iter_mut().zip(u_row) {
                                *d -= l * u;
                            }
                        }
                    }
                }
                j0 = j1;
            }
        }
        k = rest;
    }
    Ok(LuFactor { lu, piv })
}

impl LuFactor {
    pub fn n(&self) -> usize {
        self.lu.rows()
    }

    /// Solve `A x = b` for a single right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let row = self.lu.row(i);
            let mut s = x[i];
            for (j, xv) in x.iter().enumerate().take(i) {
                s -= row[j] * xv;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= row[j] * x[j];
            }
            x[i] = s / row[i];
        }
        x
    }

    /// Solve with a matrix right-hand side, column by column.
    pub fn solve_mat(&self, b: &Mat) -> Mat {
        assert_eq!(b.rows(), self.n());
        let mut out = Mat::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for i in 0..b.rows() {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    /// 1-norm of A^{-1}, exact via unit-vector solves. Fine at the
    /// reduced-system sizes this is used for.
    pub fn inverse_norm1(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let x = self.solve_vec(&e);
            e[j] = 0.0;
            best = best.max(x.iter().map(|v| v.abs()).sum());
        }
        best
    }
}

/// 1-norm condition estimate for a square matrix.
pub fn condition_1(a: &Mat) -> Result<f64> {
    let norm1 = (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let f = lu_factor(a)?;
    Ok(norm1 * f.inverse_norm1())
}
