//! Thomas algorithm for tridiagonal systems.
//!
//! Both the interaction matrix and the reduced first-row systems are
//! tridiagonal and diagonally dominant, so the sweep needs no pivoting.

use crate::error::{Error, Result};

/// Solve a tridiagonal system with sub-diagonal `a` (a[0] unused), diagonal
/// `b`, super-diagonal `c` (c[n-1] unused), right-hand side `d`.
pub fn thomas_solve(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    assert!(n > 0);
    assert_eq!(a.len(), n);
    assert_eq!(b.len(), n);
    assert_eq!(c.len(), n);

    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];

    if b[0] == 0.0 {
        return Err(Error::SingularSystem {
            pivot: 0.0,
            index: 0,
        });
    }
    c_prime[0] = c[0] / b[0];
    d_prime[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * c_prime[i - 1];
        if den == 0.0 {
            return Err(Error::SingularSystem {
                pivot: 0.0,
                index: i,
            });
        }
        if i < n - 1 {
            c_prime[i] = c[i] / den;
        }
        d_prime[i] = (d[i] - a[i] * d_prime[i - 1]) / den;
    }

    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    Ok(x)
}

/// Solve the Toeplitz system tridiag(-1, diag, -1) x = rhs.
pub fn toeplitz_solve(diag: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let a = vec![-1.0; n];
    let b = vec![diag; n];
    let c = vec![-1.0; n];
    thomas_solve(&a, &b, &c, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [[2,-1,0],[-1,2,-1],[0,-1,2]] x = [1,0,1] -> x = [1,1,1]
        let x = thomas_solve(
            &[0.0, -1.0, -1.0],
            &[2.0, 2.0, 2.0],
            &[-1.0, -1.0, 0.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn toeplitz_decay_is_relative_accurate() {
        // tridiag(-1, R, -1) with e_1 rhs has solution ~ sinh((n-j)b)/..,
        // every entry should carry full relative precision.
        let n = 40;
        let r = 3.0;
        let beta = (r / 2.0f64).acosh();
        let mut rhs = vec![0.0; n];
        rhs[0] = 1.0;
        let x = toeplitz_solve(r, &rhs).unwrap();
        // exact: x_j = sinh((n - j) beta)/sinh((n+1) beta), 1-based j
        for (idx, &v) in x.iter().enumerate() {
            let j = idx + 1;
            let exact = (((n - j + 1) as f64) * beta).sinh() / (((n + 1) as f64) * beta).sinh();
            assert!(
                (v - exact).abs() <= 1e-12 * exact.abs(),
                "entry {j}: {v} vs {exact}"
            );
        }
    }
}
