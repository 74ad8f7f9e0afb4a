use rayon::prelude::*;

use super::{ComplexMatrix, NumericsError, C64};

/// Square sparse matrix in canonical coordinate-list form.
///
/// Entries are sorted row-major, duplicates are summed and exact zeros are
/// dropped, so two canonical matrices are equal iff their triplet lists are.
/// Indices are stored as `u32`; dimensions are capped at 2³².
#[derive(Clone, Debug, PartialEq)]
pub struct SparseCOO {
    dim: usize,
    rows: Vec<u32>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

const ZERO: C64 = C64::new(0.0, 0.0);

impl SparseCOO {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let idx: Vec<u32> = (0..dim as u32).collect();
        Self {
            dim,
            rows: idx.clone(),
            cols: idx,
            vals: vec![C64::new(1.0, 0.0); dim],
        }
    }

    /// Canonicalizes an arbitrary triplet list.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self, NumericsError> {
        if dim > u32::MAX as usize {
            return Err(NumericsError::Shape(format!(
                "dimension {dim} exceeds u32 index range"
            )));
        }
        let mut entries: Vec<(u32, u32, C64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(NumericsError::Shape(format!(
                    "index ({r}, {c}) out of range for dim {dim}"
                )));
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(NumericsError::NonFinite);
            }
            entries.push((r as u32, c as u32, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut out = Self::zeros(dim);
        let mut iter = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = iter.next() {
            while let Some(&(r2, c2, v2)) = iter.peek() {
                if (r2, c2) != (r, c) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != ZERO {
                out.rows.push(r);
                out.cols.push(c);
                out.vals.push(v);
            }
        }
        Ok(out)
    }

    pub(crate) fn from_canonical_parts(
        dim: usize,
        rows: Vec<u32>,
        cols: Vec<u32>,
        vals: Vec<C64>,
    ) -> Self {
        debug_assert!(rows.len() == cols.len() && cols.len() == vals.len());
        Self {
            dim,
            rows,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &ComplexMatrix) -> Result<Self, NumericsError> {
        if !m.is_square() {
            return Err(NumericsError::NotSquare(m.rows(), m.cols()));
        }
        m.check_finite()?;
        let n = m.rows();
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let v = m[(r, c)];
                if v != ZERO {
                    out.rows.push(r as u32);
                    out.cols.push(c as u32);
                    out.vals.push(v);
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for ((r, c), v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            m[(*r as usize, *c as usize)] += *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn vals(&self) -> &[C64] {
        &self.vals
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .zip(&self.cols)
            .zip(&self.vals)
            .map(|((r, c), v)| (*r as usize, *c as usize, *v))
    }

    /// `out = self · v`.
    pub fn matvec_into(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        out.iter_mut().for_each(|o| *o = ZERO);
        if self.dim >= 1 << 14 {
            // Split on row boundaries so each block owns a disjoint output range.
            let bounds = self.row_block_bounds(64);
            let chunks: Vec<(usize, Vec<C64>)> = bounds
                .par_windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0], w[1]);
                    if lo == hi {
                        return (0, Vec::new());
                    }
                    let first_row = self.rows[lo] as usize;
                    let last_row = self.rows[hi - 1] as usize;
                    let mut acc = vec![ZERO; last_row - first_row + 1];
                    for k in lo..hi {
                        acc[self.rows[k] as usize - first_row] +=
                            self.vals[k] * v[self.cols[k] as usize];
                    }
                    (first_row, acc)
                })
                .collect();
            for (first, acc) in chunks {
                for (i, a) in acc.into_iter().enumerate() {
                    out[first + i] += a;
                }
            }
        } else {
            for k in 0..self.vals.len() {
                out[self.rows[k] as usize] += self.vals[k] * v[self.cols[k] as usize];
            }
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    /// Entry offsets splitting the triplet list into roughly `blocks` pieces
    /// that never straddle a row.
    fn row_block_bounds(&self, blocks: usize) -> Vec<usize> {
        let nnz = self.vals.len();
        let mut bounds = vec![0];
        let step = nnz.div_ceil(blocks.max(1)).max(1);
        let mut pos = step;
        while pos < nnz {
            let row = self.rows[pos];
            let mut p = pos;
            while p < nnz && self.rows[p] == row {
                p += 1;
            }
            if p < nnz && p > *bounds.last().unwrap() {
                bounds.push(p);
            }
            pos = p + step;
        }
        bounds.push(nnz);
        bounds
    }

    pub fn add(&self, other: &Self) -> Result<Self, NumericsError> {
        if self.dim != other.dim {
            return Err(NumericsError::Shape(format!(
                "dim {} vs {}",
                self.dim, other.dim
            )));
        }
        Self::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Largest |H_rc − conj(H_cr)| over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
            .expect("indices already validated");
        let diff = Self::from_triplets(
            self.dim,
            self.triplets()
                .chain(adj.triplets().map(|(r, c, v)| (r, c, -v))),
        )
        .expect("indices already validated");
        diff.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Expectation value ⟨v|H|v⟩ without normalization.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let hv = self.matvec(v);
        v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum()
    }
}
