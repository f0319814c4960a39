//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! implicitly shifted QL, after the classic EISPACK `tred2`/`tql2` pair.

use super::mat::Mat;
use crate::error::{Error, Result};

pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: Option<Mat>,
}

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix. The caller is responsible for
/// symmetry; the strictly lower triangle is read as the mirror of the upper.
pub fn sym_eigen(a: &Mat, want_vectors: bool) -> Result<SymEig> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Ok(SymEig {
            values: vec![],
            vectors: want_vectors.then(|| Mat::zeros(0, 0)),
        });
    }
    let mut v = a.symmetrize();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e, want_vectors)?;

    // Ascending sort, carrying vector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut w = Mat::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                w[(k, new)] = v[(k, old)];
            }
        }
        w
    });
    Ok(SymEig { values, vectors })
}

fn tred2(v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    let n = v.rows();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the Householder transforms; the diagonal ends up in d.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

fn tql2(v: &mut Mat, d: &mut [f64], e: &mut [f64], want_vectors: bool) -> Result<()> {
    let n = v.rows();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS {
                    return Err(Error::EigNonConvergence { iters: iter });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0f64;
                let mut s2 = 0.0f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gg = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gg;
                    d[i + 1] = h + s * (c * gg + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            let hv = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * hv;
                            v[(k, i)] = c * v[(k, i)] - s * hv;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Largest |eigenvalue| of a symmetric matrix.
pub fn spectral_norm_sym(a: &Mat) -> Result<f64> {
    let eig = sym_eigen(a, false)?;
    Ok(eig.values.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
}

pub fn lambda_min_sym(a: &Mat) -> Result<f64> {
    let eig = sym_eigen(a, false)?;
    Ok(*eig.values.first().expect("empty matrix"))
}

pub fn lambda_extremes_sym(a: &Mat) -> Result<(f64, f64)> {
    let eig = sym_eigen(a, false)?;
    Ok((eig.values[0], *eig.values.last().unwrap()))
}

/// Symmetric PSD square root with eigenvalue clamping at
/// `clamp_rel * max |lambda|`; negative drift from roundoff clamps to zero.
pub fn sqrt_psd(a: &Mat, clamp_rel: f64) -> Result<Mat> {
    let eig = sym_eigen(a, true)?;
    let v = eig.vectors.unwrap();
    let n = a.rows();
    let scale = eig.values.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let thresh = clamp_rel * scale;
    let roots: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l < thresh { 0.0 } else { l.sqrt() })
        .collect();
    let mut vs = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            vs[(i, j)] = v[(i, j)] * roots[j];
        }
    }
    Ok(vs.matmul(&v.transpose()).symmetrize())
}
