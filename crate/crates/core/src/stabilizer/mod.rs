//! Bit-packed stabilizer tableau with destabilizer bookkeeping.
//!
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers, and row `2n` is
//! scratch space for deterministic measurements. Each row stores its X and Z
//! bits packed into `u64` words plus one sign bit.

mod clifford2;
pub mod mipt;

pub use clifford2::{
    random_two_qubit_clifford_gates, two_qubit_clifford_gates, TWO_QUBIT_CLIFFORD_COUNT,
};

use serde::{Deserialize, Serialize};

use crate::circuit::MeasureMode;
use crate::numerics::RngStream;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StabilizerError {
    #[error("gate '{0}' is not a supported Clifford gate")]
    NotClifford(String),
    #[error("wire {wire} out of range for {n} qubits")]
    WireOutOfRange { wire: usize, n: usize },
    #[error("two-qubit gate needs distinct wires, got {0} twice")]
    DuplicateWire(usize),
    #[error("outcome {outcome} on wire {wire} has zero probability")]
    ZeroProbability { wire: usize, outcome: usize },
    #[error("invalid subsystem {0}")]
    InvalidSubsystem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CliffordGate {
    H,
    S,
    X,
    Z,
    Cx,
    Cz,
}

impl CliffordGate {
    pub fn parse(name: &str) -> Result<Self, StabilizerError> {
        Ok(match name {
            "h" => CliffordGate::H,
            "s" => CliffordGate::S,
            "x" => CliffordGate::X,
            "z" => CliffordGate::Z,
            "cx" | "cnot" => CliffordGate::Cx,
            "cz" => CliffordGate::Cz,
            other => return Err(StabilizerError::NotClifford(other.to_string())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CliffordGate::H => "h",
            CliffordGate::S => "s",
            CliffordGate::X => "x",
            CliffordGate::Z => "z",
            CliffordGate::Cx => "cx",
            CliffordGate::Cz => "cz",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            CliffordGate::Cx | CliffordGate::Cz => 2,
            _ => 1,
        }
    }
}

/// Result of a tableau measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabMeasurement {
    pub outcome: usize,
    /// True when ±Z on the wire was already in the stabilizer group.
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StabilizerTableau {
    n: usize,
    words: usize,
    /// (2n + 1) rows × `words` words each.
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl StabilizerTableau {
    /// The tableau of |0…0⟩.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Self {
            n,
            words,
            x: vec![0; rows * words],
            z: vec![0; rows * words],
            r: vec![false; rows],
        };
        for i in 0..n {
            t.x[i * words + i / 64] |= 1 << (i % 64);
            t.z[(i + n) * words + i / 64] |= 1 << (i % 64);
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn bit(v: &[u64], words: usize, row: usize, col: usize) -> bool {
        v[row * words + col / 64] >> (col % 64) & 1 == 1
    }

    fn x_bit(&self, row: usize, col: usize) -> bool {
        Self::bit(&self.x, self.words, row, col)
    }

    fn z_bit(&self, row: usize, col: usize) -> bool {
        Self::bit(&self.z, self.words, row, col)
    }

    fn check_wire(&self, w: usize) -> Result<(), StabilizerError> {
        if w >= self.n {
            Err(StabilizerError::WireOutOfRange { wire: w, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply(&mut self, gate: CliffordGate, wires: &[usize]) -> Result<(), StabilizerError> {
        if wires.len() != gate.arity() {
            return Err(StabilizerError::NotClifford(format!(
                "{} on {} wires",
                gate.as_str(),
                wires.len()
            )));
        }
        for &w in wires {
            self.check_wire(w)?;
        }
        if gate.arity() == 2 && wires[0] == wires[1] {
            return Err(StabilizerError::DuplicateWire(wires[0]));
        }
        match gate {
            CliffordGate::H => self.h(wires[0]),
            CliffordGate::S => self.s(wires[0]),
            CliffordGate::X => self.pauli_sign(wires[0], false, true),
            CliffordGate::Z => self.pauli_sign(wires[0], true, false),
            CliffordGate::Cx => self.cx(wires[0], wires[1]),
            CliffordGate::Cz => {
                self.h(wires[1]);
                self.cx(wires[0], wires[1]);
                self.h(wires[1]);
            }
        }
        Ok(())
    }

    /// Applies a gate given by name.
    pub fn apply_clifford(&mut self, name: &str, wires: &[usize]) -> Result<(), StabilizerError> {
        self.apply(CliffordGate::parse(name)?, wires)
    }

    fn h(&mut self, a: usize) {
        let (wd, m) = (a / 64, 1u64 << (a % 64));
        for row in 0..2 * self.n {
            let i = row * self.words + wd;
            let (xa, za) = (self.x[i] & m != 0, self.z[i] & m != 0);
            self.r[row] ^= xa && za;
            if xa != za {
                self.x[i] ^= m;
                self.z[i] ^= m;
            }
        }
    }

    fn s(&mut self, a: usize) {
        let (wd, m) = (a / 64, 1u64 << (a % 64));
        for row in 0..2 * self.n {
            let i = row * self.words + wd;
            let (xa, za) = (self.x[i] & m != 0, self.z[i] & m != 0);
            self.r[row] ^= xa && za;
            if xa {
                self.z[i] ^= m;
            }
        }
    }

    fn cx(&mut self, a: usize, b: usize) {
        let (wa, ma) = (a / 64, 1u64 << (a % 64));
        let (wb, mb) = (b / 64, 1u64 << (b % 64));
        for row in 0..2 * self.n {
            let base = row * self.words;
            let xa = self.x[base + wa] & ma != 0;
            let za = self.z[base + wa] & ma != 0;
            let xb = self.x[base + wb] & mb != 0;
            let zb = self.z[base + wb] & mb != 0;
            self.r[row] ^= xa && zb && (xb == za);
            if xa {
                self.x[base + wb] ^= mb;
            }
            if zb {
                self.z[base + wa] ^= ma;
            }
        }
    }

    /// Conjugation by a Pauli flips the sign of every row that anticommutes with it.
    fn pauli_sign(&mut self, a: usize, flip_on_x: bool, flip_on_z: bool) {
        for row in 0..2 * self.n {
            let anti = (flip_on_x && self.x_bit(row, a)) ^ (flip_on_z && self.z_bit(row, a));
            self.r[row] ^= anti;
        }
    }

    /// Row h ← row i · row h with the correct sign.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let mut plus = 0u32;
        let mut minus = 0u32;
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            plus +=
                ((x1 & z1 & !x2 & z2) | (x1 & !z1 & x2 & z2) | (!x1 & z1 & x2 & !z2)).count_ones();
            minus +=
                ((x1 & z1 & x2 & !z2) | (x1 & !z1 & !x2 & z2) | (!x1 & z1 & x2 & z2)).count_ones();
        }
        let total = 2 * (self.r[h] as i64) + 2 * (self.r[i] as i64) + plus as i64 - minus as i64;
        self.r[h] = total.rem_euclid(4) == 2;
        for k in 0..w {
            self.x[h * w + k] ^= self.x[i * w + k];
            self.z[h * w + k] ^= self.z[i * w + k];
        }
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        for k in 0..w {
            self.x[dst * w + k] = self.x[src * w + k];
            self.z[dst * w + k] = self.z[src * w + k];
        }
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// Z-basis measurement with random or forced outcome.
    pub fn measure_with(
        &mut self,
        a: usize,
        mode: MeasureMode<'_>,
    ) -> Result<StabMeasurement, StabilizerError> {
        self.check_wire(a)?;
        let n = self.n;
        let pivot = (n..2 * n).find(|&row| self.x_bit(row, a));
        match pivot {
            Some(p) => {
                let outcome = match mode {
                    MeasureMode::Forced(k) if k > 1 => {
                        return Err(StabilizerError::ZeroProbability {
                            wire: a,
                            outcome: k,
                        })
                    }
                    MeasureMode::Forced(k) => k,
                    MeasureMode::Random(rng) => rng.below(2) as usize,
                };
                for row in 0..2 * n {
                    if row != p && self.x_bit(row, a) {
                        self.rowsum(row, p);
                    }
                }
                self.copy_row(p - n, p);
                self.clear_row(p);
                self.z[p * self.words + a / 64] |= 1 << (a % 64);
                self.r[p] = outcome == 1;
                Ok(StabMeasurement {
                    outcome,
                    deterministic: false,
                })
            }
            None => {
                let scratch = 2 * n;
                self.clear_row(scratch);
                for i in 0..n {
                    if self.x_bit(i, a) {
                        self.rowsum(scratch, i + n);
                    }
                }
                let outcome = self.r[scratch] as usize;
                if let MeasureMode::Forced(k) = mode {
                    if k != outcome {
                        return Err(StabilizerError::ZeroProbability {
                            wire: a,
                            outcome: k,
                        });
                    }
                }
                Ok(StabMeasurement {
                    outcome,
                    deterministic: true,
                })
            }
        }
    }

    pub fn measure(&mut self, a: usize, rng: &mut RngStream) -> Result<usize, StabilizerError> {
        Ok(self.measure_with(a, MeasureMode::Random(rng))?.outcome)
    }

    /// Entanglement entropy of `subsystem` in bits: rank of the stabilizer
    /// rows restricted to the subsystem, minus its size.
    pub fn entanglement_entropy(&self, subsystem: &[usize]) -> Result<f64, StabilizerError> {
        if subsystem.is_empty() || subsystem.len() >= self.n {
            return Err(StabilizerError::InvalidSubsystem(format!(
                "{subsystem:?} of {} qubits",
                self.n
            )));
        }
        for (i, &q) in subsystem.iter().enumerate() {
            if q >= self.n || subsystem[..i].contains(&q) {
                return Err(StabilizerError::InvalidSubsystem(format!("{subsystem:?}")));
            }
        }
        let cols = 2 * subsystem.len();
        let words = cols.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = (self.n..2 * self.n)
            .map(|row| {
                let mut packed = vec![0u64; words];
                for (k, &q) in subsystem.iter().enumerate() {
                    if self.x_bit(row, q) {
                        packed[(2 * k) / 64] |= 1 << ((2 * k) % 64);
                    }
                    if self.z_bit(row, q) {
                        packed[(2 * k + 1) / 64] |= 1 << ((2 * k + 1) % 64);
                    }
                }
                packed
            })
            .collect();
        let rank = gf2_rank(&mut rows, cols);
        Ok((rank - subsystem.len()) as f64)
    }

    /// Rank over GF(2) of the full 2n-column stabilizer generator matrix.
    pub fn stabilizer_rank(&self) -> usize {
        let cols = 2 * self.n;
        let words = cols.div_ceil(64).max(1);
        let mut rows: Vec<Vec<u64>> = (self.n..2 * self.n)
            .map(|row| {
                let mut packed = vec![0u64; words];
                for q in 0..self.n {
                    if self.x_bit(row, q) {
                        packed[q / 64] |= 1 << (q % 64);
                    }
                    if self.z_bit(row, q) {
                        packed[(q + self.n) / 64] |= 1 << ((q + self.n) % 64);
                    }
                }
                packed
            })
            .collect();
        gf2_rank(&mut rows, cols)
    }

    /// True when all stabilizers commute pairwise and each destabilizer
    /// anticommutes exactly with its partner stabilizer.
    pub fn is_valid(&self) -> bool {
        let sym = |a: usize, b: usize| -> bool {
            let w = self.words;
            let mut acc = 0u32;
            for k in 0..w {
                acc += (self.x[a * w + k] & self.z[b * w + k]).count_ones();
                acc += (self.z[a * w + k] & self.x[b * w + k]).count_ones();
            }
            acc % 2 == 1
        };
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                if sym(n + i, n + j) || sym(i, j) || sym(i, n + j) != (i == j) {
                    return false;
                }
            }
        }
        self.stabilizer_rank() == n
    }

    /// Stabilizer generators as signed strings such as `"+XZ"`.
    pub fn stabilizer_strings(&self) -> Vec<String> {
        (self.n..2 * self.n)
            .map(|row| {
                let mut s = String::from(if self.r[row] { "-" } else { "+" });
                for q in 0..self.n {
                    s.push(match (self.x_bit(row, q), self.z_bit(row, q)) {
                        (false, false) => 'I',
                        (true, false) => 'X',
                        (true, true) => 'Y',
                        (false, true) => 'Z',
                    });
                }
                s
            })
            .collect()
    }

    /// Applies a uniformly random two-qubit Clifford to wires `i`, `j`.
    pub fn random_two_qubit_clifford(
        &mut self,
        i: usize,
        j: usize,
        rng: &mut RngStream,
    ) -> Result<(), StabilizerError> {
        if i == j {
            return Err(StabilizerError::DuplicateWire(i));
        }
        for (g, w) in random_two_qubit_clifford_gates(rng) {
            let wires: Vec<usize> = w
                .iter()
                .take(g.arity())
                .map(|&k| if k == 0 { i } else { j })
                .collect();
            self.apply(g, &wires)?;
        }
        Ok(())
    }
}

/// Rank of bit-packed rows over GF(2); rows are reduced in place.
fn gf2_rank(rows: &mut [Vec<u64>], cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        let (wd, m) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][wd] & m != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[wd] & m != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hadamard_turns_z_into_x() {
        let mut t = StabilizerTableau::new(1);
        assert_eq!(t.stabilizer_strings(), vec!["+Z"]);
        t.apply_clifford("h", &[0]).unwrap();
        assert_eq!(t.stabilizer_strings(), vec!["+X"]);
    }

    #[test]
    fn bell_stabilizers() {
        let mut t = StabilizerTableau::new(2);
        t.apply_clifford("h", &[0]).unwrap();
        t.apply_clifford("cx", &[0, 1]).unwrap();
        let mut s = t.stabilizer_strings();
        s.sort();
        assert_eq!(s, vec!["+XX", "+ZZ"]);
        assert!(t.is_valid());
        assert_eq!(t.entanglement_entropy(&[0]).unwrap(), 1.0);
    }

    #[test]
    fn s_twice_is_z_on_random_tableaux() {
        let mut rng = RngStream::new(21);
        for _ in 0..100 {
            let mut t = StabilizerTableau::new(4);
            for _ in 0..6 {
                let i = rng.below(4) as usize;
                let j = (i + 1 + rng.below(3) as usize) % 4;
                t.random_two_qubit_clifford(i, j, &mut rng).unwrap();
            }
            let w = rng.below(4) as usize;
            let mut a = t.clone();
            a.apply_clifford("s", &[w]).unwrap();
            a.apply_clifford("s", &[w]).unwrap();
            let mut b = t.clone();
            b.apply_clifford("z", &[w]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn measurement_cases() {
        let mut rng = RngStream::new(3);
        let mut zero = StabilizerTableau::new(2);
        for _ in 0..5 {
            assert_eq!(
                zero.measure_with(0, MeasureMode::Random(&mut rng)).unwrap(),
                StabMeasurement {
                    outcome: 0,
                    deterministic: true
                }
            );
        }
        let mut ones = 0;
        for _ in 0..400 {
            let mut t = StabilizerTableau::new(1);
            t.apply_clifford("h", &[0]).unwrap();
            let m = t.measure_with(0, MeasureMode::Random(&mut rng)).unwrap();
            assert!(!m.deterministic);
            ones += m.outcome;
            assert_eq!(t.measure(0, &mut rng).unwrap(), m.outcome);
        }
        assert!((ones as f64 / 400.0 - 0.5).abs() < 0.1);

        for _ in 0..50 {
            let mut t = StabilizerTableau::new(2);
            t.apply_clifford("h", &[0]).unwrap();
            t.apply_clifford("cx", &[0, 1]).unwrap();
            let a = t.measure(0, &mut rng).unwrap();
            let b = t.measure(1, &mut rng).unwrap();
            assert_eq!(a, b);
        }
        let mut t = StabilizerTableau::new(1);
        assert!(matches!(
            t.measure_with(0, MeasureMode::Forced(1)),
            Err(StabilizerError::ZeroProbability { .. })
        ));
    }

    #[test]
    fn entropy_validation_and_product_state() {
        let t = StabilizerTableau::new(4);
        assert_eq!(t.entanglement_entropy(&[0, 2]).unwrap(), 0.0);
        assert!(t.entanglement_entropy(&[]).is_err());
        assert!(t.entanglement_entropy(&[0, 1, 2, 3]).is_err());
        assert!(t.entanglement_entropy(&[0, 0]).is_err());
        assert!(matches!(
            CliffordGate::parse("t"),
            Err(StabilizerError::NotClifford(_))
        ));
    }

    #[test]
    fn wide_tableaux_cross_word_boundaries() {
        let mut t = StabilizerTableau::new(130);
        t.apply_clifford("h", &[0]).unwrap();
        for q in 0..129 {
            t.apply_clifford("cx", &[q, q + 1]).unwrap();
        }
        assert!(t.is_valid());
        assert_eq!(
            t.entanglement_entropy(&(0..65).collect::<Vec<_>>())
                .unwrap(),
            1.0
        );
        let mut rng = RngStream::new(0);
        let first = t.measure(0, &mut rng).unwrap();
        assert_eq!(t.measure(129, &mut rng).unwrap(), first);
    }
}
