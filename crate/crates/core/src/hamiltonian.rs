//! Pauli-sum and qudit operator-sum Hamiltonians, model builders, and the
//! lowering of Pauli sums to sparse COO matrices.
//!
//! Basis states are indexed with site 0 as the most significant digit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lattice::Lattice;
use crate::numerics::{ComplexMatrix, NumericsError, SparseCOO, C64};

/// Default cap on qubit count for [`pauli_sum_to_coo`].
pub const DEFAULT_MAX_COO_QUBITS: usize = 26;
/// Largest dense dimension [`qudit_sum_to_dense`] will allocate.
pub const MAX_QUDIT_DENSE_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HamiltonianError {
    #[error("Pauli code {code} at position {pos} is not in 0..=3")]
    InvalidCode { pos: usize, code: u8 },
    #[error("term has {got} codes but the sum acts on {expected} sites")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite weight")]
    NonFiniteWeight,
    #[error("{n} sites exceeds the sparse-builder guard of {max}")]
    TooManySites { n: usize, max: usize },
    #[error("sites {0} and {1} coincide")]
    CoincidentSites(usize, usize),
    #[error("local dimension must be at least 2, got {0}")]
    InvalidLocalDim(usize),
    #[error("dimension {0} exceeds the dense guard")]
    DimensionGuard(usize),
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("malformed Pauli sum JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub weight: C64,
    /// One code per site: 0=I, 1=X, 2=Y, 3=Z.
    pub codes: Vec<u8>,
}

impl PauliTerm {
    /// Bit masks `(x, z, y_count)` with site `k` at bit `n − 1 − k`.
    /// `x` marks X or Y sites, `z` marks Z or Y sites.
    pub fn masks(&self) -> (u64, u64, u32) {
        let n = self.codes.len();
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for (k, &c) in self.codes.iter().enumerate() {
            let bit = 1u64 << (n - 1 - k);
            match c {
                1 => x |= bit,
                2 => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                3 => z |= bit,
                _ => {}
            }
        }
        (x, z, ny)
    }

    pub fn is_identity(&self) -> bool {
        self.codes.iter().all(|&c| c == 0)
    }

    pub fn support(&self) -> Vec<usize> {
        self.codes
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, _)| k)
            .collect()
    }
}

/// `w · iᵏ` computed by component swaps, so the result is exact.
pub(crate) fn rotate_by_i_power(w: C64, k: u32) -> C64 {
    match k % 4 {
        0 => w,
        1 => C64::new(-w.im, w.re),
        2 => C64::new(-w.re, -w.im),
        _ => C64::new(w.im, -w.re),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    w_re: f64,
    w_im: f64,
    codes: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct PauliSumJson {
    n: usize,
    terms: Vec<TermJson>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (C64, Vec<u8>)>,
    ) -> Result<Self, HamiltonianError> {
        let mut s = Self::new(n);
        for (w, codes) in terms {
            s.add_term(w, codes)?;
        }
        Ok(s)
    }

    /// Builds a sum from real weights and labels such as `"XZI"`.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self, HamiltonianError> {
        let n = terms.first().map_or(0, |t| t.1.len());
        let mut s = Self::new(n);
        for (w, label) in terms {
            s.add_term(C64::new(*w, 0.0), parse_label(label)?)?;
        }
        Ok(s)
    }

    pub fn add_term(&mut self, weight: C64, codes: Vec<u8>) -> Result<(), HamiltonianError> {
        if codes.len() != self.n {
            return Err(HamiltonianError::LengthMismatch {
                expected: self.n,
                got: codes.len(),
            });
        }
        if let Some((pos, &code)) = codes.iter().enumerate().find(|(_, &c)| c > 3) {
            return Err(HamiltonianError::InvalidCode { pos, code });
        }
        if !(weight.re.is_finite() && weight.im.is_finite()) {
            return Err(HamiltonianError::NonFiniteWeight);
        }
        self.terms.push(PauliTerm { weight, codes });
        Ok(())
    }

    /// Adds `weight · P` where `P` acts with `code` on each listed site.
    pub fn add_local(&mut self, weight: f64, ops: &[(usize, u8)]) -> Result<(), HamiltonianError> {
        let mut codes = vec![0u8; self.n];
        for &(site, code) in ops {
            if site >= self.n {
                return Err(HamiltonianError::InvalidTerm(format!(
                    "site {site} out of range"
                )));
            }
            if codes[site] != 0 {
                return Err(HamiltonianError::InvalidTerm(format!(
                    "site {site} repeated"
                )));
            }
            codes[site] = code;
        }
        self.add_term(C64::new(weight, 0.0), codes)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_real_weights(&self) -> bool {
        self.terms.iter().all(|t| t.weight.im == 0.0)
    }

    pub fn concat(&self, other: &Self) -> Result<Self, HamiltonianError> {
        if self.n != other.n {
            return Err(HamiltonianError::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.terms.iter_mut().for_each(|t| t.weight *= s);
        out
    }

    /// Merges identical Pauli strings (first-occurrence order) and drops zero weights.
    pub fn simplify(&self) -> Self {
        let mut order: Vec<Vec<u8>> = Vec::new();
        let mut acc: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
        for t in &self.terms {
            match acc.get_mut(&t.codes) {
                Some(w) => *w += t.weight,
                None => {
                    order.push(t.codes.clone());
                    acc.insert(t.codes.clone(), t.weight);
                }
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|codes| {
                let w = acc[&codes];
                (w != C64::new(0.0, 0.0)).then_some(PauliTerm { weight: w, codes })
            })
            .collect();
        Self { n: self.n, terms }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = PauliSumJson {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|t| TermJson {
                    w_re: t.weight.re,
                    w_im: t.weight.im,
                    codes: t.codes.clone(),
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("plain data serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, HamiltonianError> {
        let doc: PauliSumJson =
            serde_json::from_value(v.clone()).map_err(|e| HamiltonianError::Json(e.to_string()))?;
        Self::from_terms(
            doc.n,
            doc.terms
                .into_iter()
                .map(|t| (C64::new(t.w_re, t.w_im), t.codes)),
        )
    }

    /// Dense matrix through the sparse builder; intended for small systems.
    pub fn to_dense(&self) -> Result<ComplexMatrix, HamiltonianError> {
        Ok(pauli_sum_to_coo(self)?.to_dense())
    }
}

pub fn parse_label(label: &str) -> Result<Vec<u8>, HamiltonianError> {
    label
        .chars()
        .enumerate()
        .map(|(pos, ch)| match ch {
            'I' | 'i' | '0' => Ok(0),
            'X' | 'x' | '1' => Ok(1),
            'Y' | 'y' | '2' => Ok(2),
            'Z' | 'z' | '3' => Ok(3),
            _ => Err(HamiltonianError::InvalidCode {
                pos,
                code: ch as u8,
            }),
        })
        .collect()
}

/// Lowers a Pauli sum to a canonical sparse matrix with the default size guard.
pub fn pauli_sum_to_coo(h: &PauliSum) -> Result<SparseCOO, HamiltonianError> {
    pauli_sum_to_coo_with_guard(h, DEFAULT_MAX_COO_QUBITS)
}

pub fn pauli_sum_to_coo_with_guard(
    h: &PauliSum,
    max_qubits: usize,
) -> Result<SparseCOO, HamiltonianError> {
    let n = h.n;
    if n > max_qubits || n > 31 {
        return Err(HamiltonianError::TooManySites {
            n,
            max: max_qubits.min(31),
        });
    }
    let dim = 1usize << n;

    // Terms sharing an X mask map row r to the same column r ^ x.
    let mut groups: BTreeMap<u64, Vec<(u64, C64)>> = BTreeMap::new();
    for t in &h.terms {
        let (x, z, ny) = t.masks();
        groups
            .entry(x)
            .or_default()
            .push((z, rotate_by_i_power(t.weight, ny)));
    }
    let groups: Vec<(u64, Vec<(u64, C64)>)> = groups.into_iter().collect();
    if groups.is_empty() {
        return Ok(SparseCOO::zeros(dim));
    }

    const BLOCK: usize = 1 << 12;
    let blocks: Vec<(Vec<u32>, Vec<u32>, Vec<C64>)> = (0..dim.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(dim);
            let cap = (hi - lo) * groups.len();
            let (mut rows, mut cols, mut vals) = (
                Vec::with_capacity(cap),
                Vec::with_capacity(cap),
                Vec::with_capacity(cap),
            );
            let mut row_entries: Vec<(u32, C64)> = Vec::with_capacity(groups.len());
            for r in lo..hi {
                row_entries.clear();
                for (x, members) in &groups {
                    let col = (r as u64) ^ x;
                    let mut v = C64::new(0.0, 0.0);
                    for &(z, w) in members {
                        if (col & z).count_ones() & 1 == 0 {
                            v += w;
                        } else {
                            v -= w;
                        }
                    }
                    if v != C64::new(0.0, 0.0) {
                        row_entries.push((col as u32, v));
                    }
                }
                row_entries.sort_unstable_by_key(|e| e.0);
                for &(c, v) in &row_entries {
                    rows.push(r as u32);
                    cols.push(c);
                    vals.push(v);
                }
            }
            (rows, cols, vals)
        })
        .collect();

    let nnz = blocks.iter().map(|b| b.0.len()).sum();
    let (mut rows, mut cols, mut vals) = (
        Vec::with_capacity(nnz),
        Vec::with_capacity(nnz),
        Vec::with_capacity(nnz),
    );
    for (r, c, v) in blocks {
        rows.extend_from_slice(&r);
        cols.extend_from_slice(&c);
        vals.extend_from_slice(&v);
    }
    Ok(SparseCOO::from_canonical_parts(dim, rows, cols, vals))
}

/// Transverse-field Ising model: −Z_iZ_j on each nearest-neighbor edge, −g·X_i on each site.
pub fn tfim_terms(l: &Lattice, g: f64) -> Result<PauliSum, HamiltonianError> {
    let n = l.num_sites();
    let mut h = PauliSum::new(n);
    for &(i, j) in l.edges(1) {
        h.add_local(-1.0, &[(i, 3), (j, 3)])?;
    }
    for i in 0..n {
        h.add_local(-g, &[(i, 1)])?;
    }
    Ok(h)
}

/// Heisenberg model: Σ_edges Jx·X_iX_j + Jy·Y_iY_j + Jz·Z_iZ_j (zero couplings omitted).
pub fn heisenberg_terms(
    l: &Lattice,
    jx: f64,
    jy: f64,
    jz: f64,
) -> Result<PauliSum, HamiltonianError> {
    let mut h = PauliSum::new(l.num_sites());
    for &(i, j) in l.edges(1) {
        for (code, coupling) in [(1u8, jx), (2, jy), (3, jz)] {
            if coupling != 0.0 {
                h.add_local(coupling, &[(i, code), (j, code)])?;
            }
        }
    }
    Ok(h)
}

/// Rydberg-atom Hamiltonian
/// Σ_{i<j} C6/r_ij⁶ n_i n_j + Σ_i (Ω/2) X_i − Δ n_i, with n = (1 − Z)/2.
///
/// Pairs farther apart than `cutoff` (when given) are skipped. Constant terms are kept.
pub fn rydberg_terms(
    l: &Lattice,
    omega: f64,
    delta: f64,
    c6: f64,
    cutoff: Option<f64>,
) -> Result<PauliSum, HamiltonianError> {
    let n = l.num_sites();
    if n < 2 {
        return Err(HamiltonianError::InvalidTerm(
            "at least two atoms are required".into(),
        ));
    }
    let dist = l.pair_distances();
    let mut h = PauliSum::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let r = dist[i][j];
            if r <= 0.0 {
                return Err(HamiltonianError::CoincidentSites(i, j));
            }
            if cutoff.is_some_and(|rc| r > rc) {
                continue;
            }
            let v = c6 / r.powi(6);
            // n_i n_j = (1 − Z_i − Z_j + Z_iZ_j) / 4
            h.add_local(v / 4.0, &[])?;
            h.add_local(-v / 4.0, &[(i, 3)])?;
            h.add_local(-v / 4.0, &[(j, 3)])?;
            h.add_local(v / 4.0, &[(i, 3), (j, 3)])?;
        }
    }
    for i in 0..n {
        h.add_local(omega / 2.0, &[(i, 1)])?;
        h.add_local(-delta / 2.0, &[])?;
        h.add_local(delta / 2.0, &[(i, 3)])?;
    }
    Ok(h.simplify())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuditTerm {
    pub weight: C64,
    pub ops: Vec<(usize, ComplexMatrix)>,
}

/// Weighted sum of products of single-site d×d operators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditOperatorSum {
    n: usize,
    d: usize,
    terms: Vec<QuditTerm>,
}

impl QuditOperatorSum {
    pub fn new(n: usize, d: usize) -> Result<Self, HamiltonianError> {
        if d < 2 {
            return Err(HamiltonianError::InvalidLocalDim(d));
        }
        Ok(Self {
            n,
            d,
            terms: Vec::new(),
        })
    }

    pub fn add_term(
        &mut self,
        weight: C64,
        ops: Vec<(usize, ComplexMatrix)>,
    ) -> Result<(), HamiltonianError> {
        if !(weight.re.is_finite() && weight.im.is_finite()) {
            return Err(HamiltonianError::NonFiniteWeight);
        }
        let mut seen = vec![false; self.n];
        for (site, m) in &ops {
            if *site >= self.n {
                return Err(HamiltonianError::InvalidTerm(format!(
                    "site {site} out of range"
                )));
            }
            if std::mem::replace(&mut seen[*site], true) {
                return Err(HamiltonianError::InvalidTerm(format!(
                    "site {site} repeated"
                )));
            }
            if m.rows() != self.d || m.cols() != self.d {
                return Err(HamiltonianError::InvalidTerm(format!(
                    "local operator is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    self.d,
                    self.d
                )));
            }
            m.check_finite()?;
        }
        self.terms.push(QuditTerm { weight, ops });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[QuditTerm] {
        &self.terms
    }
}

/// Clock operator diag(1, ω, …, ω^{d−1}) with ω = e^{2πi/d}.
pub fn clock_matrix(d: usize) -> ComplexMatrix {
    crate::circuit::gates::clock(d)
}

/// Shift operator X|j⟩ = |j+1 mod d⟩.
pub fn shift_matrix(d: usize) -> ComplexMatrix {
    crate::circuit::gates::shift(d)
}

/// Open-chain d-state clock model
/// −J Σ_i (Z_i Z_{i+1}† + h.c.) − h Σ_i (X_i + X_i†).
pub fn clock_model(
    n: usize,
    d: usize,
    j: f64,
    h: f64,
) -> Result<QuditOperatorSum, HamiltonianError> {
    if d < 2 {
        return Err(HamiltonianError::InvalidLocalDim(d));
    }
    if n < 2 {
        return Err(HamiltonianError::InvalidTerm(
            "clock model needs at least two sites".into(),
        ));
    }
    let z = clock_matrix(d);
    let zd = z.adjoint();
    let x = shift_matrix(d);
    let xd = x.adjoint();
    let mut sum = QuditOperatorSum::new(n, d)?;
    for i in 0..n - 1 {
        sum.add_term(C64::new(-j, 0.0), vec![(i, z.clone()), (i + 1, zd.clone())])?;
        sum.add_term(C64::new(-j, 0.0), vec![(i, zd.clone()), (i + 1, z.clone())])?;
    }
    for i in 0..n {
        sum.add_term(C64::new(-h, 0.0), vec![(i, x.clone())])?;
        sum.add_term(C64::new(-h, 0.0), vec![(i, xd.clone())])?;
    }
    Ok(sum)
}

/// Kronecker-expanded dense matrix of a qudit operator sum.
pub fn qudit_sum_to_dense(h: &QuditOperatorSum) -> Result<ComplexMatrix, HamiltonianError> {
    let dim = (h.d as u128)
        .checked_pow(h.n as u32)
        .filter(|&v| v <= MAX_QUDIT_DENSE_DIM as u128);
    let Some(dim) = dim else {
        return Err(HamiltonianError::DimensionGuard(
            h.d.saturating_pow(h.n as u32),
        ));
    };
    let dim = dim as usize;
    let mut out = ComplexMatrix::zeros(dim, dim);
    let id = ComplexMatrix::identity(h.d);
    for t in &h.terms {
        let mut m = ComplexMatrix::identity(1);
        for site in 0..h.n {
            let local = t
                .ops
                .iter()
                .find(|(s, _)| *s == site)
                .map_or(&id, |(_, op)| op);
            m = m.kron(local);
        }
        out = out.add(&m.scale(t.weight))?;
    }
    Ok(out)
}
