//! Shared numerical kernels: dense and sparse complex matrices, dense
//! factorizations, and a deterministic splittable random stream.

mod linalg;
mod matrix;
mod rng;
mod sparse;

pub use linalg::{
    determinant, eigh, expm_dense, expm_hermitian, inverse, qr, spectral_apply, svd_truncated,
    TruncatedSvd, HERMITIAN_TOL,
};
pub use matrix::ComplexMatrix;
pub use rng::RngStream;
pub use sparse::SparseCOO;

pub type C64 = num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry")]
    NonFinite,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Euclidean norm of a complex vector.
pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Binary entropy in bits, with the endpoints mapped to 0.
pub fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// −Σ λ log₂ λ over eigenvalues clamped to [0, 1].
pub fn von_neumann_bits(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.log2())
        .sum()
}
