//! Dense factorizations on [`ComplexMatrix`], backed by nalgebra.

use nalgebra::DMatrix;

use super::{ComplexMatrix, NumericsError, C64};

/// Tolerance on ‖m − mᴴ‖_F / max(1, ‖m‖_F) accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Result of [`svd_truncated`]: `u · diag(s) · v ≈ m`.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// rows × k, orthonormal columns.
    pub u: ComplexMatrix,
    /// Descending, non-negative.
    pub s: Vec<f64>,
    /// k × cols, orthonormal rows.
    pub v: ComplexMatrix,
    /// Sum of squared discarded singular values.
    pub discarded_weight: f64,
}

/// Singular value decomposition with optional truncation.
///
/// `max_keep` caps the number of kept values; `max_err` caps the 2-norm of the
/// discarded tail. When both are given the smaller kept count wins. At least
/// one value is always kept. With neither, the full decomposition is returned.
pub fn svd_truncated(
    m: &ComplexMatrix,
    max_keep: Option<usize>,
    max_err: Option<f64>,
) -> Result<TruncatedSvd, NumericsError> {
    m.check_finite()?;
    if max_keep == Some(0) {
        return Err(NumericsError::InvalidArgument(
            "max_keep must be at least 1".into(),
        ));
    }
    let (rows, cols) = (m.rows(), m.cols());
    let full = m.to_nalgebra().svd(true, true);
    let u = full.u.expect("requested U");
    let vt = full.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..full.singular_values.len()).collect();
    order.sort_by(|&a, &b| full.singular_values[b].total_cmp(&full.singular_values[a]));
    let sorted: Vec<f64> = order
        .iter()
        .map(|&i| full.singular_values[i].max(0.0))
        .collect();

    let mut keep = sorted.len();
    if let Some(k) = max_keep {
        keep = keep.min(k);
    }
    if let Some(eps) = max_err {
        // Smallest k whose discarded tail has norm ≤ eps.
        let mut tail = 0.0;
        let mut k_err = sorted.len();
        for i in (0..sorted.len()).rev() {
            tail += sorted[i] * sorted[i];
            if tail.sqrt() > eps {
                break;
            }
            k_err = i;
        }
        keep = keep.min(k_err);
    }
    keep = keep.max(1).min(sorted.len());
    let discarded_weight = sorted[keep..].iter().map(|s| s * s).sum();

    let u_out = ComplexMatrix::from_fn(rows, keep, |r, c| u[(r, order[c])]);
    let v_out = ComplexMatrix::from_fn(keep, cols, |r, c| vt[(order[r], c)]);
    Ok(TruncatedSvd {
        u: u_out,
        s: sorted[..keep].to_vec(),
        v: v_out,
        discarded_weight,
    })
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns ascending eigenvalues and a matrix whose k-th column is the k-th
/// eigenvector. The input is symmetrized as (m + mᴴ)/2 first.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    m.check_finite()?;
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * m.frobenius_norm().max(1.0) {
        return Err(NumericsError::NotHermitian(defect));
    }
    let n = m.rows();
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    if m.is_real() {
        let sym = DMatrix::<f64>::from_fn(n, n, |r, c| 0.5 * (m[(r, c)].re + m[(c, r)].re));
        let eig = sym.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs =
            ComplexMatrix::from_fn(n, n, |r, c| C64::new(eig.eigenvectors[(r, order[c])], 0.0));
        return Ok((vals, vecs));
    }
    let sym = DMatrix::<C64>::from_fn(n, n, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((vals, vecs))
}

/// Matrix exponential by scaling and squaring with Padé approximation.
pub fn expm_dense(m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    m.check_finite()?;
    if m.rows() == 0 {
        return Ok(m.clone());
    }
    Ok(ComplexMatrix::from_nalgebra(&m.to_nalgebra().exp()))
}

/// `exp(−i t h)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, NumericsError> {
    let (vals, vecs) = eigh(h)?;
    Ok(spectral_apply(&vals, &vecs, |e| {
        C64::from_polar(1.0, -e * t)
    }))
}

/// `V · diag(f(λ)) · Vᴴ`.
pub fn spectral_apply(vals: &[f64], vecs: &ComplexMatrix, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let n = vals.len();
    let fv: Vec<C64> = vals.iter().map(|&e| f(e)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += vecs[(r, k)] * fv[k] * vecs[(c, k)].conj();
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Thin QR decomposition `m = q · r` (q: rows × min, r: min × cols).
pub fn qr(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix), NumericsError> {
    m.check_finite()?;
    let dec = m.to_nalgebra().qr();
    Ok((
        ComplexMatrix::from_nalgebra(&dec.q()),
        ComplexMatrix::from_nalgebra(&dec.r()),
    ))
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    m.check_finite()?;
    m.to_nalgebra()
        .try_inverse()
        .map(|inv| ComplexMatrix::from_nalgebra(&inv))
        .filter(|inv| inv.check_finite().is_ok())
        .ok_or(NumericsError::Singular)
}

pub fn determinant(m: &ComplexMatrix) -> Result<C64, NumericsError> {
    if !m.is_square() {
        return Err(NumericsError::NotSquare(m.rows(), m.cols()));
    }
    Ok(m.to_nalgebra().determinant())
}
