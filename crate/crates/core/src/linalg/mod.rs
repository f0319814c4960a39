//! Self-contained dense linear algebra: just enough for desk-scale chains.

pub mod eig;
pub mod expm;
pub mod lu;
pub mod mat;
pub mod sym_eig;
pub mod tridiag;

pub use eig::{eigen, EigDecomp};
pub use expm::expm;
pub use lu::{condition_1, lu_factor, LuFactor};
pub use mat::Mat;
pub use sym_eig::{
    lambda_extremes_sym, lambda_min_sym, spectral_norm_sym, sqrt_psd, sym_eigen, SymEig,
};
pub use tridiag::{thomas_solve, toeplitz_solve};
