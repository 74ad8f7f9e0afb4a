use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CircuitError;
use crate::hamiltonian::{rotate_by_i_power, PauliSum};
use crate::numerics::{eigh, inner, norm, von_neumann_bits, ComplexMatrix, RngStream, C64};

/// Born probabilities at or below this are treated as impossible outcomes.
pub const ZERO_PROB_TOL: f64 = 1e-14;

/// Dense amplitudes over `d^n` basis states, site 0 most significant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n: usize,
    d: usize,
    amps: Vec<C64>,
}

/// How a measurement picks its outcome.
pub enum MeasureMode<'a> {
    Random(&'a mut RngStream),
    Forced(usize),
}

impl StateVector {
    /// |0…0⟩.
    pub fn zero(n: usize, d: usize) -> Self {
        Self::basis(n, d, 0)
    }

    pub fn basis(n: usize, d: usize, index: usize) -> Self {
        let dim = d.pow(n as u32);
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self { n, d, amps }
    }

    pub fn from_amplitudes(n: usize, d: usize, amps: Vec<C64>) -> Result<Self, CircuitError> {
        let dim = d.checked_pow(n as u32).unwrap_or(usize::MAX);
        if amps.len() != dim {
            return Err(CircuitError::SizeMismatch(format!(
                "{} amplitudes for dimension {dim}",
                amps.len()
            )));
        }
        if amps.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CircuitError::Numerics(
                crate::numerics::NumericsError::NonFinite,
            ));
        }
        Ok(Self { n, d, amps })
    }

    /// Normalized Gaussian-random state.
    pub fn random(n: usize, d: usize, rng: &mut RngStream) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let dim = d.pow(n as u32);
        let amps = (0..dim)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        let mut s = Self { n, d, amps };
        s.normalize();
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalize(&mut self) {
        let nrm = self.norm();
        if nrm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= nrm);
        }
    }

    pub fn inner(&self, other: &Self) -> C64 {
        inner(&self.amps, &other.amps)
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Stride of site `k` in the flat index.
    pub fn stride(&self, k: usize) -> usize {
        self.d.pow((self.n - 1 - k) as u32)
    }

    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.stride(k)) % self.d
    }

    /// Applies a `d^k × d^k` matrix to the listed wires (wires[0] most significant).
    pub fn apply_matrix(&mut self, wires: &[usize], m: &ComplexMatrix) -> Result<(), CircuitError> {
        let k = wires.len();
        let local = self.d.pow(k as u32);
        if m.rows() != local || m.cols() != local {
            return Err(CircuitError::SizeMismatch(format!(
                "{}x{} matrix on {k} wires",
                m.rows(),
                m.cols()
            )));
        }
        for (i, &w) in wires.iter().enumerate() {
            if w >= self.n {
                return Err(CircuitError::WireOutOfRange { wire: w, n: self.n });
            }
            if wires[..i].contains(&w) {
                return Err(CircuitError::DuplicateWire(w));
            }
        }
        let data = m.data();
        if k == 1 && self.d == 2 {
            let s = self.stride(wires[0]);
            let (m00, m01, m10, m11) = (data[0], data[1], data[2], data[3]);
            for block in self.amps.chunks_mut(2 * s) {
                let (lo, hi) = block.split_at_mut(s);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = m00 * x + m01 * y;
                    *b = m10 * x + m11 * y;
                }
            }
            return Ok(());
        }
        let strides: Vec<usize> = wires.iter().map(|&w| self.stride(w)).collect();
        let offsets: Vec<usize> = (0..local)
            .map(|j| {
                let mut rem = j;
                let mut off = 0;
                for s in strides.iter().rev() {
                    off += (rem % self.d) * s;
                    rem /= self.d;
                }
                off
            })
            .collect();
        let mut sorted = strides.clone();
        sorted.sort_unstable();
        let d = self.d;
        let diagonal = (0..local)
            .all(|r| (0..local).all(|c| r == c || data[r * local + c] == C64::new(0.0, 0.0)));
        if diagonal {
            let diag: Vec<C64> = (0..local).map(|r| data[r * local + r]).collect();
            for j in 0..self.amps.len() / local {
                let mut base = j;
                for &s in &sorted {
                    base = (base / s) * s * d + base % s;
                }
                for (e, off) in diag.iter().zip(&offsets) {
                    self.amps[base + off] *= e;
                }
            }
            return Ok(());
        }
        let mut buf = vec![C64::new(0.0, 0.0); local];
        for j in 0..self.amps.len() / local {
            // Insert a zero digit at each wire position.
            let mut base = j;
            for &s in &sorted {
                base = (base / s) * s * d + base % s;
            }
            for (b, off) in buf.iter_mut().zip(&offsets) {
                *b = self.amps[base + off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &data[r * local..(r + 1) * local];
                self.amps[base + off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    /// Σ_t w_t ⟨ψ|P_t|ψ⟩ by direct Pauli action on amplitudes.
    pub fn expectation_pauli(&self, obs: &PauliSum) -> Result<C64, CircuitError> {
        if self.d != 2 {
            return Err(CircuitError::QubitOnlyGate {
                name: "pauli expectation".into(),
                d: self.d,
            });
        }
        if obs.n() != self.n {
            return Err(CircuitError::SizeMismatch(format!(
                "observable on {} sites, state on {}",
                obs.n(),
                self.n
            )));
        }
        let mut total = C64::new(0.0, 0.0);
        for t in obs.terms() {
            let (x, z, ny) = t.masks();
            let mut acc = C64::new(0.0, 0.0);
            for (c, a) in self.amps.iter().enumerate() {
                let v = self.amps[c ^ x as usize].conj() * a;
                if (c as u64 & z).count_ones() & 1 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            total += rotate_by_i_power(acc, ny) * t.weight;
        }
        Ok(total)
    }

    /// ⟨ψ|H|ψ⟩ for a Pauli-sum H, real part only.
    pub fn energy(&self, obs: &PauliSum) -> Result<f64, CircuitError> {
        Ok(self.expectation_pauli(obs)?.re)
    }

    /// Expectation of local operators on distinct sites.
    pub fn expectation_local(&self, ops: &[(usize, ComplexMatrix)]) -> Result<C64, CircuitError> {
        let mut phi = self.clone();
        for (site, m) in ops {
            phi.apply_matrix(&[*site], m)?;
        }
        Ok(self.inner(&phi))
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> Result<usize, CircuitError> {
        if digits.len() != self.n || digits.iter().any(|&x| x >= self.d) {
            return Err(CircuitError::MalformedBitstring(format!("{digits:?}")));
        }
        Ok(digits.iter().fold(0, |acc, &x| acc * self.d + x))
    }

    pub fn digits_to_string(&self, index: usize) -> String {
        (0..self.n)
            .map(|k| std::char::from_digit(self.digit(index, k) as u32, 36).expect("d ≤ 36"))
            .collect()
    }

    /// Amplitude of a bitstring such as `"0110"` (one base-36 digit per site).
    pub fn amplitude(&self, bits: &str) -> Result<C64, CircuitError> {
        let digits: Option<Vec<usize>> = bits
            .chars()
            .map(|ch| ch.to_digit(36).map(|x| x as usize))
            .collect();
        let digits = digits.ok_or_else(|| CircuitError::MalformedBitstring(bits.into()))?;
        let idx = self
            .index_of_digits(&digits)
            .map_err(|_| CircuitError::MalformedBitstring(bits.into()))?;
        Ok(self.amps[idx])
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draws `shots` i.i.d. basis outcomes from |ψ|².
    pub fn sample(&self, shots: usize, rng: &mut RngStream) -> BTreeMap<String, usize> {
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
        for _ in 0..shots {
            let u = rng.uniform() * acc;
            let mut idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            // Never land on a zero-probability state at the top edge.
            while self.amps[idx].norm_sqr() == 0.0 && idx > 0 {
                idx -= 1;
            }
            *hits.entry(idx).or_default() += 1;
        }
        hits.into_iter()
            .map(|(k, v)| (self.digits_to_string(k), v))
            .collect()
    }

    /// Born probability of each level of `wire`.
    pub fn outcome_probabilities(&self, wire: usize) -> Result<Vec<f64>, CircuitError> {
        if wire >= self.n {
            return Err(CircuitError::WireOutOfRange { wire, n: self.n });
        }
        let mut p = vec![0.0; self.d];
        for (i, a) in self.amps.iter().enumerate() {
            p[self.digit(i, wire)] += a.norm_sqr();
        }
        Ok(p)
    }

    /// Projective measurement of one wire in place. Returns the outcome and
    /// its Born probability. A forced outcome of zero probability is an error
    /// and leaves the state untouched.
    pub fn measure_in_place(
        &mut self,
        wire: usize,
        mode: MeasureMode<'_>,
    ) -> Result<(usize, f64), CircuitError> {
        let probs = self.outcome_probabilities(wire)?;
        let total: f64 = probs.iter().sum();
        let outcome = match mode {
            MeasureMode::Forced(k) => {
                if k >= self.d {
                    return Err(CircuitError::MalformedBitstring(format!(
                        "outcome {k} for d={}",
                        self.d
                    )));
                }
                k
            }
            MeasureMode::Random(rng) => {
                let u = rng.uniform() * total;
                let mut acc = 0.0;
                let mut pick = None;
                for (k, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc && p > ZERO_PROB_TOL * total {
                        pick = Some(k);
                        break;
                    }
                }
                pick.unwrap_or_else(|| {
                    probs
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.total_cmp(b.1))
                        .map(|x| x.0)
                        .unwrap_or(0)
                })
            }
        };
        let p = probs[outcome] / total;
        if p <= ZERO_PROB_TOL {
            return Err(CircuitError::ZeroProbability { wire, outcome });
        }
        let scale = 1.0 / (probs[outcome]).sqrt();
        let stride = self.stride(wire);
        let d = self.d;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i / stride) % d == outcome {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
        Ok((outcome, p))
    }

    pub fn measure_collapse(
        &self,
        wire: usize,
        mode: MeasureMode<'_>,
    ) -> Result<(usize, f64, StateVector), CircuitError> {
        let mut out = self.clone();
        let (k, p) = out.measure_in_place(wire, mode)?;
        Ok((k, p, out))
    }

    /// Reduced density matrix on `keep` (in the listed order).
    pub fn reduced_density_matrix(&self, keep: &[usize]) -> Result<ComplexMatrix, CircuitError> {
        let (m, _) = self.bipartition(keep)?;
        Ok(m.matmul(&m.adjoint())?)
    }

    /// Matrix M with M[a, b] = ψ(a ∪ b), rows over `keep`, plus the complement.
    fn bipartition(&self, keep: &[usize]) -> Result<(ComplexMatrix, Vec<usize>), CircuitError> {
        for (i, &w) in keep.iter().enumerate() {
            if w >= self.n || keep[..i].contains(&w) {
                return Err(CircuitError::InvalidSubsystem(format!("{keep:?}")));
            }
        }
        let rest: Vec<usize> = (0..self.n).filter(|k| !keep.contains(k)).collect();
        let da = self.d.pow(keep.len() as u32);
        let db = self.d.pow(rest.len() as u32);
        let mut m = ComplexMatrix::zeros(da, db);
        for (i, a) in self.amps.iter().enumerate() {
            let ia = keep
                .iter()
                .fold(0, |acc, &w| acc * self.d + self.digit(i, w));
            let ib = rest
                .iter()
                .fold(0, |acc, &w| acc * self.d + self.digit(i, w));
            m[(ia, ib)] = *a;
        }
        Ok((m, rest))
    }

    /// Von Neumann entropy of the reduced state on `keep`, in bits.
    pub fn subsystem_entropy(&self, keep: &[usize]) -> Result<f64, CircuitError> {
        if keep.is_empty() || keep.len() >= self.n {
            return Err(CircuitError::InvalidSubsystem(format!(
                "{keep:?} of {} wires",
                self.n
            )));
        }
        let (m, _) = self.bipartition(keep)?;
        let nrm2 = self.norm().powi(2);
        // The smaller Gram matrix carries the same nonzero spectrum.
        let gram = if m.rows() <= m.cols() {
            m.matmul(&m.adjoint())?
        } else {
            m.adjoint().matmul(&m)?
        };
        let (vals, _) = eigh(&gram)?;
        let vals: Vec<f64> = vals.iter().map(|v| v / nrm2).collect();
        Ok(von_neumann_bits(&vals))
    }
}
