//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant (Higham 2005).

use super::lu::lu_factor;
use super::mat::Mat;
use crate::error::Result;

const THETA_13: f64 = 5.371920351148152;

#[rustfmt::skip]
const B: [f64; 14] = [
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
];

fn norm1(a: &Mat) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

pub fn expm(a: &Mat) -> Result<Mat> {
    assert!(a.is_square());
    let n = a.rows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }

    let nrm = norm1(a);
    let s = if nrm > THETA_13 {
        (nrm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a_scaled = a.scale(0.5f64.powi(s as i32));

    let a2 = a_scaled.matmul(&a_scaled);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);
    let eye = Mat::eye(n);

    let u_inner = a6
        .matmul(&a6.scale(B[13]).add(&a4.scale(B[11])).add(&a2.scale(B[9])))
        .add(&a6.scale(B[7]))
        .add(&a4.scale(B[5]))
        .add(&a2.scale(B[3]))
        .add(&eye.scale(B[1]));
    let u = a_scaled.matmul(&u_inner);
    let v = a6
        .matmul(&a6.scale(B[12]).add(&a4.scale(B[10])).add(&a2.scale(B[8])))
        .add(&a6.scale(B[6]))
        .add(&a4.scale(B[4]))
        .add(&a2.scale(B[2]))
        .add(&eye.scale(B[0]));

    // (V - U) X = (V + U)
    let lhs = v.sub(&u);
    let rhs = v.add(&u);
    let f = lu_factor(&lhs)?;
    let mut x = f.solve_mat(&rhs);
    for _ in 0..s {
        x = x.matmul(&x);
    }
    Ok(x)
}
