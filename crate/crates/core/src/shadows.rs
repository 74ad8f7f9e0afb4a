//! Random-Pauli classical shadows: snapshot generation and median-of-means
//! estimation of Pauli-word expectations.
//!
//! Basis codes are 1 = X, 2 = Y, 3 = Z. Before a computational-basis
//! measurement, X sites are rotated by H and Y sites by H·S†, so outcome 0
//! is always the +1 eigenvalue.

use std::path::Path;

use rayon::prelude::*;

use crate::circuit::StateVector;
use crate::numerics::{RngStream, C64};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShadowError {
    #[error("invalid basis code {code} at snapshot {row}, qubit {qubit}")]
    InvalidBasis { row: usize, qubit: usize, code: u8 },
    #[error("invalid Pauli code {0} in observable")]
    InvalidPauli(u8),
    #[error("snapshot {row} has {got} entries on {n} qubits")]
    RowLength { row: usize, got: usize, n: usize },
    #[error("shadows need qubits, got d = {0}")]
    QubitsOnly(usize),
    #[error("{batches} batches for {snapshots} snapshots")]
    BadBatches { batches: usize, snapshots: usize },
    #[error("dataset file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

/// Measurement record: per snapshot, one basis code and one outcome bit per
/// qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowDataset {
    n: usize,
    bases: Vec<Vec<u8>>,
    outcomes: Vec<Vec<u8>>,
}

fn check_bases(n: usize, bases: &[Vec<u8>]) -> Result<(), ShadowError> {
    for (row, b) in bases.iter().enumerate() {
        if b.len() != n {
            return Err(ShadowError::RowLength {
                row,
                got: b.len(),
                n,
            });
        }
        if let Some((qubit, &code)) = b.iter().enumerate().find(|(_, c)| !(1..=3).contains(*c)) {
            return Err(ShadowError::InvalidBasis { row, qubit, code });
        }
    }
    Ok(())
}

impl ShadowDataset {
    pub fn new(n: usize, bases: Vec<Vec<u8>>, outcomes: Vec<Vec<u8>>) -> Result<Self, ShadowError> {
        check_bases(n, &bases)?;
        if bases.len() != outcomes.len() {
            return Err(ShadowError::Format(format!(
                "{} basis rows and {} outcome rows",
                bases.len(),
                outcomes.len()
            )));
        }
        for (row, o) in outcomes.iter().enumerate() {
            if o.len() != n {
                return Err(ShadowError::RowLength {
                    row,
                    got: o.len(),
                    n,
                });
            }
            if o.iter().any(|&b| b > 1) {
                return Err(ShadowError::Format(format!(
                    "non-binary outcome in row {row}"
                )));
            }
        }
        Ok(Self { n, bases, outcomes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Vec<u8>] {
        &self.bases
    }

    pub fn outcomes(&self) -> &[Vec<u8>] {
        &self.outcomes
    }

    /// Header `n,M` then one `codes;bits` row per snapshot, digits packed.
    pub fn to_csv(&self) -> String {
        let mut s = format!("n,M\n{},{}\n", self.n, self.len());
        for (b, o) in self.bases.iter().zip(&self.outcomes) {
            b.iter().for_each(|c| s.push(char::from(b'0' + c)));
            s.push(';');
            o.iter().for_each(|c| s.push(char::from(b'0' + c)));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, ShadowError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("n,M") {
            return Err(ShadowError::Format("missing 'n,M' header".into()));
        }
        let dims = lines
            .next()
            .ok_or_else(|| ShadowError::Format("missing dimensions".into()))?;
        let parse = |x: Option<&str>| {
            x.and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| ShadowError::Format(format!("bad dimensions '{dims}'")))
        };
        let mut it = dims.split(',');
        let (n, m) = (parse(it.next())?, parse(it.next())?);
        let digits = |part: &str| -> Result<Vec<u8>, ShadowError> {
            part.bytes()
                .map(|b| {
                    b.checked_sub(b'0')
                        .filter(|d| *d <= 9)
                        .ok_or_else(|| ShadowError::Format(format!("bad row '{part}'")))
                })
                .collect()
        };
        let mut bases = Vec::with_capacity(m);
        let mut outcomes = Vec::with_capacity(m);
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (b, o) = line
                .trim()
                .split_once(';')
                .ok_or_else(|| ShadowError::Format(format!("bad row '{line}'")))?;
            bases.push(digits(b)?);
            outcomes.push(digits(o)?);
        }
        if bases.len() != m {
            return Err(ShadowError::Format(format!(
                "header declares {m} rows, found {}",
                bases.len()
            )));
        }
        Self::new(n, bases, outcomes)
    }

    pub fn save(&self, path: &Path) -> Result<(), ShadowError> {
        std::fs::write(path, self.to_csv()).map_err(|e| ShadowError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ShadowError> {
        let text = std::fs::read_to_string(path).map_err(|e| ShadowError::Io(e.to_string()))?;
        Self::from_csv(&text)
    }
}

/// Uniformly random basis codes, row i drawn from `root.child(i)`.
pub fn random_bases(n: usize, m: usize, root: &RngStream) -> Vec<Vec<u8>> {
    (0..m)
        .map(|i| {
            let mut rng = root.child(i as u64);
            (0..n).map(|_| 1 + rng.below(3) as u8).collect()
        })
        .collect()
}

fn basis_change(code: u8) -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x| C64::new(x, 0.0);
    match code {
        1 => [[r(h), r(h)], [r(h), r(-h)]],
        2 => [[r(h), C64::new(0.0, -h)], [r(h), C64::new(0.0, h)]],
        _ => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
    }
}

/// Samples one outcome per qubit, leading qubit first; after each draw the
/// state is projected and shrinks by half, so a snapshot costs O(2ⁿ).
fn sample_snapshot(amps: &[C64], bases: &[u8], rng: &mut RngStream) -> Vec<u8> {
    let mut v: Vec<C64> = Vec::new();
    let mut bits = Vec::with_capacity(bases.len());
    for (q, &code) in bases.iter().enumerate() {
        let cur: &[C64] = if q == 0 { amps } else { &v };
        let half = cur.len() / 2;
        let (a, b) = cur.split_at(half);
        let u = basis_change(code);
        let p0: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (u[0][0] * x + u[0][1] * y).norm_sqr())
            .sum();
        let total: f64 = cur.iter().map(|z| z.norm_sqr()).sum();
        let bit = u8::from(rng.uniform() * total >= p0);
        let row = u[bit as usize];
        let next: Vec<C64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| row[0] * x + row[1] * y)
            .collect();
        bits.push(bit);
        v = next;
    }
    bits
}

/// One computational-basis outcome per row of `bases`; row i draws from
/// `root.child(i)` so the dataset does not depend on the worker count.
pub fn shadow_snapshots(
    psi: &StateVector,
    bases: &[Vec<u8>],
    root: &RngStream,
) -> Result<ShadowDataset, ShadowError> {
    if psi.d() != 2 {
        return Err(ShadowError::QubitsOnly(psi.d()));
    }
    let n = psi.n();
    check_bases(n, bases)?;
    let outcomes = bases
        .par_iter()
        .enumerate()
        .map(|(i, b)| sample_snapshot(psi.amplitudes(), b, &mut root.child(i as u64)))
        .collect();
    Ok(ShadowDataset {
        n,
        bases: bases.to_vec(),
        outcomes,
    })
}

fn check_word(n: usize, obs: &[u8]) -> Result<(), ShadowError> {
    if obs.len() != n {
        return Err(ShadowError::RowLength {
            row: 0,
            got: obs.len(),
            n,
        });
    }
    match obs.iter().find(|&&c| c > 3) {
        Some(&c) => Err(ShadowError::InvalidPauli(c)),
        None => Ok(()),
    }
}

/// Single-snapshot estimate Π_{i ∈ supp} 3·(1 − 2 b_i), or 0 on any basis
/// mismatch.
pub fn snapshot_estimate(bases: &[u8], outcomes: &[u8], obs: &[u8]) -> f64 {
    let mut e = 1.0;
    for ((&p, &b), &o) in obs.iter().zip(bases).zip(outcomes) {
        if p == 0 {
            continue;
        }
        if p != b {
            return 0.0;
        }
        e *= if o == 0 { 3.0 } else { -3.0 };
    }
    e
}

/// Median over `n_batches` contiguous batch means; the identity word gives 1.
pub fn estimate_pauli(
    ds: &ShadowDataset,
    obs: &[u8],
    n_batches: usize,
) -> Result<f64, ShadowError> {
    check_word(ds.n, obs)?;
    if obs.iter().all(|&c| c == 0) {
        return Ok(1.0);
    }
    let m = ds.len();
    if n_batches == 0 || n_batches > m {
        return Err(ShadowError::BadBatches {
            batches: n_batches,
            snapshots: m,
        });
    }
    let per: Vec<f64> = ds
        .bases
        .iter()
        .zip(&ds.outcomes)
        .map(|(b, o)| snapshot_estimate(b, o, obs))
        .collect();
    let mut means: Vec<f64> = (0..n_batches)
        .map(|k| {
            let (lo, hi) = (k * m / n_batches, (k + 1) * m / n_batches);
            per[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    Ok(if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    })
}

/// Exact expectation of the single-snapshot estimator: the sum over all 3ⁿ
/// basis choices (each with weight 3⁻ⁿ) and all outcomes weighted by their
/// Born probabilities. Equals ⟨obs⟩ for an unbiased protocol.
pub fn exhaustive_estimate(psi: &StateVector, obs: &[u8]) -> Result<f64, ShadowError> {
    if psi.d() != 2 {
        return Err(ShadowError::QubitsOnly(psi.d()));
    }
    let n = psi.n();
    check_word(n, obs)?;
    let dim = 1usize << n;
    let mut total = 0.0;
    for choice in 0..3usize.pow(n as u32) {
        let bases: Vec<u8> = (0..n)
            .map(|q| 1 + (choice / 3usize.pow((n - 1 - q) as u32) % 3) as u8)
            .collect();
        let mut amps = psi.amplitudes().to_vec();
        for (q, &code) in bases.iter().enumerate() {
            let u = basis_change(code);
            let stride = 1usize << (n - 1 - q);
            for block in amps.chunks_mut(2 * stride) {
                let (lo, hi) = block.split_at_mut(stride);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = u[0][0] * a + u[0][1] * b;
                    *y = u[1][0] * a + u[1][1] * b;
                }
            }
        }
        for (idx, amp) in amps.iter().enumerate().take(dim) {
            let bits: Vec<u8> = (0..n).map(|q| ((idx >> (n - 1 - q)) & 1) as u8).collect();
            total += amp.norm_sqr() * snapshot_estimate(&bases, &bits, obs);
        }
    }
    Ok(total / 3f64.powi(n as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    #[test]
    fn deterministic_bases() {
        let zero = StateVector::zero(3, 2);
        let ds = shadow_snapshots(&zero, &vec![vec![3; 3]; 50], &RngStream::new(1)).unwrap();
        assert!(ds.outcomes().iter().flatten().all(|&b| b == 0));
        let mut c = Circuit::new(3);
        (0..3).for_each(|q| {
            c.h(q).unwrap();
        });
        let plus = c.run().unwrap();
        let ds = shadow_snapshots(&plus, &vec![vec![1; 3]; 50], &RngStream::new(2)).unwrap();
        assert!(ds.outcomes().iter().flatten().all(|&b| b == 0));
        assert_eq!(estimate_pauli(&ds, &[0, 0, 3], 1).unwrap(), 0.0);
        assert_eq!(estimate_pauli(&ds, &[0, 0, 0], 1).unwrap(), 1.0);
    }

    #[test]
    fn x_basis_on_zero_is_a_fair_coin() {
        let m = 10_000;
        let ds = shadow_snapshots(
            &StateVector::zero(1, 2),
            &vec![vec![1]; m],
            &RngStream::new(3),
        )
        .unwrap();
        let ones = ds.outcomes().iter().filter(|o| o[0] == 1).count() as f64 / m as f64;
        assert!((ones - 0.5).abs() < 3.0 * (0.25 / m as f64).sqrt());
    }

    #[test]
    fn y_basis_eigenstate() {
        let mut c = Circuit::new(1);
        c.h(0).unwrap().s(0).unwrap();
        let ds =
            shadow_snapshots(&c.run().unwrap(), &vec![vec![2]; 20], &RngStream::new(4)).unwrap();
        assert!(ds.outcomes().iter().all(|o| o[0] == 0));
    }

    #[test]
    fn zero_state_z_sums_to_one() {
        assert!((exhaustive_estimate(&StateVector::zero(1, 2), &[3]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let ds = ShadowDataset::new(
            2,
            vec![vec![1, 3], vec![2, 2]],
            vec![vec![0, 1], vec![1, 1]],
        )
        .unwrap();
        let text = ds.to_csv();
        assert_eq!(text, "n,M\n2,2\n13;01\n22;11\n");
        assert_eq!(ShadowDataset::from_csv(&text).unwrap(), ds);
        assert!(matches!(
            ShadowDataset::new(2, vec![vec![0, 3]], vec![vec![0, 0]]),
            Err(ShadowError::InvalidBasis { code: 0, .. })
        ));
        assert!(ShadowDataset::from_csv("n,M\n2,3\n13;01\n").is_err());
    }

    #[test]
    fn median_of_means() {
        let ds = ShadowDataset::new(
            1,
            vec![vec![3]; 5],
            vec![vec![0], vec![0], vec![1], vec![0], vec![0]],
        )
        .unwrap();
        assert!((estimate_pauli(&ds, &[3], 1).unwrap() - 1.8).abs() < 1e-14);
        // batches {0}, {1, 2}, {3, 4} have means 3, 0, 3
        assert_eq!(estimate_pauli(&ds, &[3], 3).unwrap(), 3.0);
        assert!(estimate_pauli(&ds, &[3], 6).is_err());
    }
}
