//! Matrix-product-state circuit engine with SVD truncation.
//!
//! Site tensors have shape (left bond, d, right bond), stored row-major. The
//! state is kept in mixed-canonical form around an orthogonality center so
//! that each two-site SVD is a Schmidt decomposition; kept singular values
//! are rescaled to unit norm after every split. Expectation values contract
//! the full bra-ket sandwich.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitError, GateInstruction, StateVector};
use crate::hamiltonian::PauliSum;
use crate::numerics::{qr, svd_truncated, ComplexMatrix, NumericsError, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MpsError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("site {0} listed twice")]
    SiteCollision(usize),
    #[error("site {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("gates on {0} wires are not supported by the MPS engine")]
    UnsupportedArity(usize),
    #[error("dense state would need {dim} amplitudes, above the guard of {max}")]
    MemoryGuard { dim: u128, max: usize },
    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),
}

/// Split policy for two-site SVDs; `None` fields impose no limit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    #[serde(default)]
    pub max_singular_values: Option<usize>,
    #[serde(default)]
    pub max_truncation_err: Option<f64>,
}

impl TruncationPolicy {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn bond(chi: usize) -> Self {
        Self {
            max_singular_values: Some(chi),
            max_truncation_err: None,
        }
    }

    fn validate(&self) -> Result<(), MpsError> {
        if self.max_singular_values == Some(0) {
            return Err(MpsError::InvalidPolicy(
                "max_singular_values must be at least 1".into(),
            ));
        }
        if let Some(e) = self.max_truncation_err {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(MpsError::InvalidPolicy(format!("max_truncation_err {e}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SiteTensor {
    l: usize,
    d: usize,
    r: usize,
    data: Vec<C64>,
}

impl SiteTensor {
    #[inline]
    fn at(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[(a * self.d + s) * self.r + b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    n: usize,
    d: usize,
    tensors: Vec<SiteTensor>,
    policy: TruncationPolicy,
    discarded_weight: f64,
    center: usize,
}

impl MpsState {
    /// |0…0⟩ with the given split policy.
    pub fn new(n: usize, d: usize, policy: TruncationPolicy) -> Result<Self, MpsError> {
        Self::product(&vec![0; n], d, policy)
    }

    /// Computational basis product state with the given digits.
    pub fn product(digits: &[usize], d: usize, policy: TruncationPolicy) -> Result<Self, MpsError> {
        policy.validate()?;
        if d < 2 {
            return Err(MpsError::Circuit(CircuitError::InvalidGate(format!(
                "local dimension {d}"
            ))));
        }
        let mut tensors = Vec::with_capacity(digits.len());
        for (site, &k) in digits.iter().enumerate() {
            if k >= d {
                return Err(MpsError::SiteOutOfRange {
                    site,
                    n: digits.len(),
                });
            }
            let mut data = vec![C64::new(0.0, 0.0); d];
            data[k] = C64::new(1.0, 0.0);
            tensors.push(SiteTensor {
                l: 1,
                d,
                r: 1,
                data,
            });
        }
        Ok(Self {
            n: digits.len(),
            d,
            tensors,
            policy,
            discarded_weight: 0.0,
            center: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn policy(&self) -> TruncationPolicy {
        self.policy
    }

    /// Total squared singular-value weight discarded so far.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    /// Bond dimensions between sites k and k+1.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors
            .iter()
            .take(self.n.saturating_sub(1))
            .map(|t| t.r)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_site(&self, s: usize) -> Result<(), MpsError> {
        if s >= self.n {
            Err(MpsError::SiteOutOfRange { site: s, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<(), MpsError> {
        if c.n() != self.n || c.d() != self.d {
            return Err(MpsError::Circuit(CircuitError::SizeMismatch(format!(
                "circuit on {} wires of dimension {} applied to MPS with {} sites of dimension {}",
                c.n(),
                c.d(),
                self.n,
                self.d
            ))));
        }
        if c.initial_state().is_some() {
            return Err(MpsError::Circuit(CircuitError::InvalidGate(
                "circuits with a dense initial state cannot run on the MPS engine".into(),
            )));
        }
        for op in c.ops() {
            self.apply_gate(op)?;
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, instr: &GateInstruction) -> Result<(), MpsError> {
        instr.validate(self.n, self.d)?;
        let m = instr.matrix(self.d)?;
        self.apply_matrix(&instr.wires, &m)
    }

    /// Applies a local matrix; `wires[0]` is the most significant local digit.
    pub fn apply_matrix(&mut self, wires: &[usize], m: &ComplexMatrix) -> Result<(), MpsError> {
        for (k, &w) in wires.iter().enumerate() {
            self.check_site(w)?;
            if wires[..k].contains(&w) {
                return Err(MpsError::SiteCollision(w));
            }
        }
        let local = self.d.pow(wires.len() as u32);
        if m.rows() != local || m.cols() != local {
            return Err(MpsError::Circuit(CircuitError::SizeMismatch(format!(
                "{}x{} matrix on {} wires",
                m.rows(),
                m.cols(),
                wires.len()
            ))));
        }
        match *wires {
            [w] => {
                self.apply_single(w, m);
                Ok(())
            }
            [a, b] => self.apply_pair(a, b, m),
            _ => Err(MpsError::UnsupportedArity(wires.len())),
        }
    }

    fn apply_single(&mut self, w: usize, m: &ComplexMatrix) {
        let t = &mut self.tensors[w];
        let (l, d, r) = (t.l, t.d, t.r);
        let mut out = vec![C64::new(0.0, 0.0); t.data.len()];
        for a in 0..l {
            for sp in 0..d {
                for s in 0..d {
                    let g = m[(sp, s)];
                    if g == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = (a * d + s) * r;
                    let dst = (a * d + sp) * r;
                    for b in 0..r {
                        out[dst + b] += g * t.data[src + b];
                    }
                }
            }
        }
        t.data = out;
    }

    fn swap_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        ComplexMatrix::from_fn(d * d, d * d, |row, col| {
            let (i, j) = (col / d, col % d);
            if row == j * d + i {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Two-site gate on arbitrary sites; distant pairs are brought together
    /// with a chain of truncated swaps and moved back afterwards.
    fn apply_pair(&mut self, a: usize, b: usize, m: &ComplexMatrix) -> Result<(), MpsError> {
        let (lo, hi) = (a.min(b), a.max(b));
        let swap = self.swap_matrix();
        for k in (lo + 1..hi).rev() {
            self.apply_adjacent(k, &swap)?;
        }
        if a < b {
            self.apply_adjacent(lo, m)?;
        } else {
            let d = self.d;
            // Reorder the local digits so the first wire is site lo.
            let flipped = ComplexMatrix::from_fn(d * d, d * d, |row, col| {
                m[((row % d) * d + row / d, (col % d) * d + col / d)]
            });
            self.apply_adjacent(lo, &flipped)?;
        }
        for k in lo + 1..hi {
            self.apply_adjacent(k, &swap)?;
        }
        Ok(())
    }

    fn move_center(&mut self, to: usize) -> Result<(), MpsError> {
        while self.center < to {
            let c = self.center;
            let t = &self.tensors[c];
            let (l, d, r) = (t.l, t.d, t.r);
            let mat = ComplexMatrix::from_vec(l * d, r, t.data.clone())?;
            let (q, rr) = qr(&mat)?;
            let k = q.cols();
            self.tensors[c] = SiteTensor {
                l,
                d,
                r: k,
                data: q.into_data(),
            };
            let next = &self.tensors[c + 1];
            let nm = ComplexMatrix::from_vec(next.l, next.d * next.r, next.data.clone())?;
            let merged = rr.matmul(&nm)?;
            let (nd, nr) = (next.d, next.r);
            self.tensors[c + 1] = SiteTensor {
                l: k,
                d: nd,
                r: nr,
                data: merged.into_data(),
            };
            self.center += 1;
        }
        while self.center > to {
            let c = self.center;
            let t = &self.tensors[c];
            let (l, d, r) = (t.l, t.d, t.r);
            let mat = ComplexMatrix::from_vec(l, d * r, t.data.clone())?;
            let (q, rr) = qr(&mat.adjoint())?;
            let k = q.cols();
            self.tensors[c] = SiteTensor {
                l: k,
                d,
                r,
                data: q.adjoint().into_data(),
            };
            let prev = &self.tensors[c - 1];
            let pm = ComplexMatrix::from_vec(prev.l * prev.d, prev.r, prev.data.clone())?;
            let merged = pm.matmul(&rr.adjoint())?;
            let (pl, pd) = (prev.l, prev.d);
            self.tensors[c - 1] = SiteTensor {
                l: pl,
                d: pd,
                r: k,
                data: merged.into_data(),
            };
            self.center -= 1;
        }
        Ok(())
    }

    /// Gate on sites (i, i+1), site i being the most significant local digit.
    fn apply_adjacent(&mut self, i: usize, g: &ComplexMatrix) -> Result<(), MpsError> {
        self.move_center(i)?;
        let d = self.d;
        let (ta, tb) = (&self.tensors[i], &self.tensors[i + 1]);
        let (l, k, r) = (ta.l, ta.r, tb.r);
        // theta[a, s1, s2, b] as a (l·d) × (d·r) matrix.
        let am = ComplexMatrix::from_vec(l * d, k, ta.data.clone())?;
        let bm = ComplexMatrix::from_vec(k, d * r, tb.data.clone())?;
        let theta = am.matmul(&bm)?;
        let zero = C64::new(0.0, 0.0);
        let mut out = ComplexMatrix::zeros(l * d, d * r);
        for a in 0..l {
            for t1 in 0..d {
                for t2 in 0..d {
                    let row_g = t1 * d + t2;
                    for s1 in 0..d {
                        for s2 in 0..d {
                            let gv = g[(row_g, s1 * d + s2)];
                            if gv == zero {
                                continue;
                            }
                            for b in 0..r {
                                let v = theta[(a * d + s1, s2 * r + b)];
                                out[(a * d + t1, t2 * r + b)] += gv * v;
                            }
                        }
                    }
                }
            }
        }
        let svd = svd_truncated(
            &out,
            self.policy.max_singular_values,
            self.policy.max_truncation_err,
        )?;
        let kept: f64 = svd.s.iter().map(|s| s * s).sum();
        let total = kept + svd.discarded_weight;
        if total > 0.0 {
            self.discarded_weight += svd.discarded_weight / total;
        }
        let norm = kept.sqrt();
        let newk = svd.s.len();
        self.tensors[i] = SiteTensor {
            l,
            d,
            r: newk,
            data: svd.u.into_data(),
        };
        let mut vdata = svd.v.into_data();
        for (row, s) in svd.s.iter().enumerate() {
            let f = if norm > 0.0 { s / norm } else { 0.0 };
            for x in &mut vdata[row * d * r..(row + 1) * d * r] {
                *x *= f;
            }
        }
        self.tensors[i + 1] = SiteTensor {
            l: newk,
            d,
            r,
            data: vdata,
        };
        self.center = i + 1;
        Ok(())
    }

    /// ⟨ψ|∏ O_k|ψ⟩ by full contraction of the sandwich.
    pub fn expectation_local(&self, ops: &[(usize, ComplexMatrix)]) -> Result<C64, MpsError> {
        let mut by_site: Vec<Option<&ComplexMatrix>> = vec![None; self.n];
        for (site, m) in ops {
            self.check_site(*site)?;
            if by_site[*site].is_some() {
                return Err(MpsError::SiteCollision(*site));
            }
            if m.rows() != self.d || m.cols() != self.d {
                return Err(MpsError::Circuit(CircuitError::SizeMismatch(format!(
                    "{}x{} operator on a site of dimension {}",
                    m.rows(),
                    m.cols(),
                    self.d
                ))));
            }
            by_site[*site] = Some(m);
        }
        Ok(self.sandwich(&by_site))
    }

    fn sandwich(&self, by_site: &[Option<&ComplexMatrix>]) -> C64 {
        let zero = C64::new(0.0, 0.0);
        let mut env = vec![C64::new(1.0, 0.0)];
        let mut width = 1;
        for (site, t) in self.tensors.iter().enumerate() {
            let (l, d, r) = (t.l, t.d, t.r);
            debug_assert_eq!(l, width);
            // half[a', s, b] = Σ_a env[a', a] A[a, s, b]
            let mut half = vec![zero; l * d * r];
            for ap in 0..l {
                for a in 0..l {
                    let e = env[ap * l + a];
                    if e == zero {
                        continue;
                    }
                    for s in 0..d {
                        for b in 0..r {
                            half[(ap * d + s) * r + b] += e * t.at(a, s, b);
                        }
                    }
                }
            }
            if let Some(op) = by_site[site] {
                let mut applied = vec![zero; l * d * r];
                for ap in 0..l {
                    for sp in 0..d {
                        for s in 0..d {
                            let o = op[(sp, s)];
                            if o == zero {
                                continue;
                            }
                            for b in 0..r {
                                applied[(ap * d + sp) * r + b] += o * half[(ap * d + s) * r + b];
                            }
                        }
                    }
                }
                half = applied;
            }
            // env'[b', b] = Σ_{a', s} conj(A[a', s, b']) half[a', s, b]
            let mut next = vec![zero; r * r];
            for ap in 0..l {
                for s in 0..d {
                    for bp in 0..r {
                        let c = t.at(ap, s, bp).conj();
                        if c == zero {
                            continue;
                        }
                        let row = &half[(ap * d + s) * r..(ap * d + s + 1) * r];
                        for (b, h) in row.iter().enumerate() {
                            next[bp * r + b] += c * h;
                        }
                    }
                }
            }
            env = next;
            width = r;
        }
        env[0]
    }

    pub fn norm(&self) -> f64 {
        self.sandwich(&vec![None; self.n]).re.max(0.0).sqrt()
    }

    /// ⟨ψ|H|ψ⟩ for a qubit Pauli sum, term by term.
    pub fn energy(&self, h: &PauliSum) -> Result<f64, MpsError> {
        if h.n() != self.n || self.d != 2 {
            return Err(MpsError::Circuit(CircuitError::SizeMismatch(format!(
                "{}-qubit observable on {} sites of dimension {}",
                h.n(),
                self.n,
                self.d
            ))));
        }
        let mut total = C64::new(0.0, 0.0);
        for term in h.terms() {
            let mut by_site: Vec<Option<&ComplexMatrix>> = vec![None; self.n];
            let mats: Vec<(usize, ComplexMatrix)> = term
                .codes
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(k, &c)| (k, crate::circuit::gates::pauli_matrix(c)))
                .collect();
            for (k, m) in &mats {
                by_site[*k] = Some(m);
            }
            total += term.weight * self.sandwich(&by_site);
        }
        Ok(total.re)
    }

    pub fn to_statevector(&self) -> Result<StateVector, MpsError> {
        self.to_statevector_with_guard(crate::circuit::DEFAULT_MAX_AMPLITUDES)
    }

    pub fn to_statevector_with_guard(
        &self,
        max_amplitudes: usize,
    ) -> Result<StateVector, MpsError> {
        let dim = (self.d as u128).pow(self.n as u32);
        if dim > max_amplitudes as u128 {
            return Err(MpsError::MemoryGuard {
                dim,
                max: max_amplitudes,
            });
        }
        let mut v = vec![C64::new(1.0, 0.0)];
        let mut width = 1;
        for t in &self.tensors {
            let rows = v.len() / width;
            let (d, r) = (t.d, t.r);
            let mut next = vec![C64::new(0.0, 0.0); rows * d * r];
            for idx in 0..rows {
                for a in 0..width {
                    let x = v[idx * width + a];
                    if x == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for s in 0..d {
                        for b in 0..r {
                            next[((idx * d + s) * r) + b] += x * t.at(a, s, b);
                        }
                    }
                }
            }
            v = next;
            width = r;
        }
        Ok(StateVector::from_amplitudes(self.n, self.d, v)?)
    }
}
