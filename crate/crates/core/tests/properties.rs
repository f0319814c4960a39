//! Property tests over randomized inputs.

use nessgap_core::chain::{build_rhs_step, ChainParams, Convention};
use nessgap_core::io::{matrix_from_csv, matrix_to_csv};
use nessgap_core::linalg::{lu_factor, thomas_solve, Mat};
use proptest::prelude::*;

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e12..1e12f64,
        -1.0..1.0f64,
        prop_oneof![Just(0.0f64), Just(-0.0), Just(1e-300), Just(-2.5e-17)],
    ]
}

proptest! {
    #[test]
    fn matrix_csv_roundtrip_is_exact(
        rows in 1usize..6,
        cols in 1usize..6,
        seed_vals in proptest::collection::vec(finite_f64(), 36),
    ) {
        let data: Vec<f64> = seed_vals.into_iter().take(rows * cols).collect();
        prop_assume!(data.len() == rows * cols);
        let m = Mat::from_vec(rows, cols, data);
        let back = matrix_from_csv(&matrix_to_csv(&m), "prop").unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn rhs_step_fill_is_monotone_and_bracketed(
        n in 2usize..40,
        m1 in 0usize..40,
        m2 in 0usize..40,
        gamma in 0.1f64..4.0,
        tl in 0.1f64..4.0,
        tr in 0.1f64..4.0,
    ) {
        let (m1, m2) = (m1.min(n), m2.min(n));
        let params = ChainParams::new(n, 0.3, 1.1, gamma, tl, tr).unwrap();
        let lo = build_rhs_step(&params, m1.min(m2), Convention::Paper).unwrap();
        let hi = build_rhs_step(&params, m1.max(m2), Convention::Paper).unwrap();
        for (a, b) in lo.diag.iter().zip(&hi.diag) {
            prop_assert!(b >= a);
        }
        // every step sits between step 0 and step N entrywise
        let full = build_rhs_step(&params, n, Convention::Paper).unwrap();
        let empty = build_rhs_step(&params, 0, Convention::Paper).unwrap();
        for ((x, lo), hi) in lo.diag.iter().zip(&empty.diag).zip(&full.diag) {
            prop_assert!(x >= lo && x <= hi);
        }
        prop_assert!(full.diag.iter().all(|&v| v > 0.0));
        prop_assert_eq!(empty.diag.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn thomas_matches_dense_lu(
        n in 2usize..24,
        seed in 0u64..1_000,
    ) {
        // random diagonally dominant tridiagonal system
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                sub[i] = next();
            }
            if i + 1 < n {
                sup[i] = next();
            }
            diag[i] = 2.5 + next().abs();
            rhs[i] = next();
        }
        let x = thomas_solve(&sub, &diag, &sup, &rhs).unwrap();
        let mut dense = Mat::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = diag[i];
            if i > 0 {
                dense[(i, i - 1)] = sub[i];
            }
            if i + 1 < n {
                dense[(i, i + 1)] = sup[i];
            }
        }
        let y = lu_factor(&dense).unwrap().solve_vec(&rhs);
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn w2_symmetry_and_identity(seed in 0u64..200) {
        use nessgap_core::sim::{seeded_gaussian_pairs, w2_gaussian};
        let (g1, g2) = seeded_gaussian_pairs(3, 1, seed).unwrap().remove(0);
        let d12 = w2_gaussian(&g1, &g2).unwrap();
        let d21 = w2_gaussian(&g2, &g1).unwrap();
        prop_assert!((d12 - d21).abs() <= 1e-9 * d12.max(1.0));
        prop_assert!(w2_gaussian(&g1, &g1).unwrap() <= 1e-6);
        prop_assert!(d12 >= 0.0);
    }
}
