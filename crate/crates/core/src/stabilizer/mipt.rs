//! Clifford measurement-induced phase transition trajectories.
//!
//! Each layer applies random two-qubit Cliffords on a brick wall with
//! periodic boundary (bonds `(i, i+1 mod L)` with `i ≡ t mod 2`), then
//! measures every site independently with probability `p`.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{StabilizerError, StabilizerTableau};
use crate::numerics::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiptRecord {
    pub l: usize,
    pub p: f64,
    pub trajectory: usize,
    pub entropy_bits: f64,
}

/// Final half-chain entropy (bits) of one trajectory.
pub fn clifford_mipt_trajectory(
    l: usize,
    p: f64,
    depth: usize,
    rng: &mut RngStream,
) -> Result<f64, StabilizerError> {
    if l < 2 {
        return Err(StabilizerError::InvalidSubsystem(format!(
            "chain length {l} < 2"
        )));
    }
    let mut t = StabilizerTableau::new(l);
    for layer in 0..depth {
        for i in (layer % 2..l).step_by(2) {
            let j = (i + 1) % l;
            if i + 1 == l && (l == 2 || l % 2 == 1) {
                continue;
            }
            t.random_two_qubit_clifford(i, j, rng)?;
        }
        for i in 0..l {
            if rng.uniform() < p {
                t.measure(i, rng)?;
            }
        }
    }
    t.entanglement_entropy(&(0..l / 2).collect::<Vec<_>>())
}

/// `trajectories` independent runs; trajectory `k` draws from `root.child(k)`.
pub fn clifford_mipt_batch(
    l: usize,
    p: f64,
    depth: usize,
    trajectories: usize,
    root: &RngStream,
) -> Result<Vec<MiptRecord>, StabilizerError> {
    (0..trajectories)
        .into_par_iter()
        .map(|k| {
            let mut rng = root.child(k as u64);
            let entropy_bits = clifford_mipt_trajectory(l, p, depth, &mut rng)?;
            Ok(MiptRecord {
                l,
                p,
                trajectory: k,
                entropy_bits,
            })
        })
        .collect()
}

pub fn mean_entropy(records: &[MiptRecord]) -> f64 {
    records.iter().map(|r| r.entropy_bits).sum::<f64>() / records.len().max(1) as f64
}

pub fn mipt_csv(records: &[MiptRecord]) -> String {
    let mut s = String::from("L,p,trajectory,entropy_bits\n");
    for r in records {
        writeln!(s, "{},{},{},{}", r.l, r.p, r.trajectory, r.entropy_bits).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_measurements_entangle_and_full_measurement_disentangles() {
        let mut rng = RngStream::new(5);
        let s = clifford_mipt_trajectory(8, 0.0, 32, &mut rng).unwrap();
        assert!(s >= 2.0);
        let s = clifford_mipt_trajectory(8, 1.0, 32, &mut rng).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn batches_are_reproducible() {
        let root = RngStream::new(11);
        let a = clifford_mipt_batch(6, 0.2, 12, 5, &root).unwrap();
        assert_eq!(a, clifford_mipt_batch(6, 0.2, 12, 5, &root).unwrap());
        let csv = mipt_csv(&a);
        assert!(csv.starts_with("L,p,trajectory,entropy_bits\n6,0.2,0,"));
        assert_eq!(csv.lines().count(), 6);
    }
}
