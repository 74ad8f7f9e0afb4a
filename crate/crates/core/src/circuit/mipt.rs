//! Brick-wall Haar circuits interleaved with random projective measurements.
//!
//! Layer `t` applies independent Haar SU(4) gates on bonds `(i, i+1)` with
//! `i ≡ t (mod 2)` (open boundary), then measures each qubit independently
//! with probability `p` in the computational basis.

use rayon::prelude::*;

use super::{haar_su4, CircuitError, MeasureMode, StateVector};
use crate::numerics::{ComplexMatrix, RngStream};

/// Gates and measurement locations of one circuit realization; outcomes are
/// chosen when the realization is run.
#[derive(Debug, Clone)]
pub struct HaarMiptRealization {
    n: usize,
    layers: Vec<MiptLayer>,
}

#[derive(Debug, Clone)]
struct MiptLayer {
    gates: Vec<(usize, ComplexMatrix)>,
    measured: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MiptTrajectory {
    pub state: StateVector,
    pub outcomes: Vec<usize>,
    /// Natural log of the probability of the realized outcome record.
    pub log_prob: f64,
    /// Half-chain entropy of the final state, in bits.
    pub entropy_bits: f64,
}

impl HaarMiptRealization {
    pub fn sample(
        n: usize,
        depth: usize,
        p: f64,
        rng: &mut RngStream,
    ) -> Result<Self, CircuitError> {
        if n < 2 {
            return Err(CircuitError::InvalidSubsystem(
                "need at least two qubits".into(),
            ));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(CircuitError::InvalidGate(format!(
                "measurement probability {p} outside [0, 1]"
            )));
        }
        let layers = (0..depth)
            .map(|t| {
                let gates = (t % 2..n - 1)
                    .step_by(2)
                    .map(|i| (i, haar_su4(rng)))
                    .collect();
                let measured = (0..n).filter(|_| rng.uniform() < p).collect();
                MiptLayer { gates, measured }
            })
            .collect();
        Ok(Self { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn measurement_count(&self) -> usize {
        self.layers.iter().map(|l| l.measured.len()).sum()
    }

    /// Runs the realization from |0…0⟩. Outcomes come from `forced` in order
    /// when given, otherwise from `rng`.
    pub fn run(
        &self,
        forced: Option<&[usize]>,
        rng: &mut RngStream,
    ) -> Result<MiptTrajectory, CircuitError> {
        if let Some(f) = forced {
            if f.len() != self.measurement_count() {
                return Err(CircuitError::SizeMismatch(format!(
                    "{} forced outcomes for {} measurements",
                    f.len(),
                    self.measurement_count()
                )));
            }
        }
        let mut psi = StateVector::zero(self.n, 2);
        let mut outcomes = Vec::with_capacity(self.measurement_count());
        let mut log_prob = 0.0;
        for layer in &self.layers {
            for (i, u) in &layer.gates {
                psi.apply_matrix(&[*i, i + 1], u)?;
            }
            for &w in &layer.measured {
                let mode = match forced {
                    Some(f) => MeasureMode::Forced(f[outcomes.len()]),
                    None => MeasureMode::Random(rng),
                };
                let (k, prob) = psi.measure_in_place(w, mode)?;
                outcomes.push(k);
                log_prob += prob.ln();
            }
        }
        let half: Vec<usize> = (0..self.n / 2).collect();
        let entropy_bits = psi.subsystem_entropy(&half)?;
        Ok(MiptTrajectory {
            state: psi,
            outcomes,
            log_prob,
            entropy_bits,
        })
    }

    /// Probability of every measurement record, by exhaustive enumeration of
    /// forced outcomes. Records with an impossible prefix are reported as 0.
    pub fn branch_probabilities(&self) -> Result<Vec<f64>, CircuitError> {
        let mut out = Vec::new();
        let psi = StateVector::zero(self.n, 2);
        self.enumerate(0, 0, psi, 1.0, &mut out)?;
        Ok(out)
    }

    fn enumerate(
        &self,
        layer: usize,
        measured_in_layer: usize,
        mut psi: StateVector,
        prob: f64,
        out: &mut Vec<f64>,
    ) -> Result<(), CircuitError> {
        if layer == self.layers.len() {
            out.push(prob);
            return Ok(());
        }
        let l = &self.layers[layer];
        if measured_in_layer == 0 {
            for (i, u) in &l.gates {
                psi.apply_matrix(&[*i, i + 1], u)?;
            }
        }
        if measured_in_layer == l.measured.len() {
            return self.enumerate(layer + 1, 0, psi, prob, out);
        }
        let wire = l.measured[measured_in_layer];
        for outcome in 0..2 {
            match psi.measure_collapse(wire, MeasureMode::Forced(outcome)) {
                Ok((_, p, next)) => {
                    self.enumerate(layer, measured_in_layer + 1, next, prob * p, out)?
                }
                Err(CircuitError::ZeroProbability { .. }) => {
                    let remaining = l.measured.len() - measured_in_layer - 1
                        + self.layers[layer + 1..]
                            .iter()
                            .map(|x| x.measured.len())
                            .sum::<usize>();
                    out.extend(std::iter::repeat(0.0).take(1 << remaining));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

/// One random realization and trajectory.
pub fn haar_mipt_trajectory(
    n: usize,
    depth: usize,
    p: f64,
    rng: &mut RngStream,
) -> Result<MiptTrajectory, CircuitError> {
    HaarMiptRealization::sample(n, depth, p, rng)?.run(None, rng)
}

/// `(trajectory index, half-chain entropy in bits, log-probability)` for
/// `trajectories` runs, trajectory `t` drawing from `root.child(t)`.
pub fn haar_mipt_batch(
    n: usize,
    depth: usize,
    p: f64,
    trajectories: usize,
    root: &RngStream,
) -> Result<Vec<(usize, f64, f64)>, CircuitError> {
    (0..trajectories)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.child(t as u64);
            let traj = haar_mipt_trajectory(n, depth, p, &mut rng)?;
            Ok((t, traj.entropy_bits, traj.log_prob))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_measurement_leaves_a_product_state() {
        let mut rng = RngStream::new(4);
        for _ in 0..5 {
            let t = haar_mipt_trajectory(4, 4, 1.0, &mut rng).unwrap();
            assert!(t.entropy_bits.abs() < 1e-9);
            assert_eq!(t.outcomes.len(), 16);
        }
    }

    #[test]
    fn exhaustive_branches_sum_to_one() {
        let mut rng = RngStream::new(8);
        let real = HaarMiptRealization::sample(4, 2, 0.5, &mut rng).unwrap();
        let probs = real.branch_probabilities().unwrap();
        assert_eq!(probs.len(), 1 << real.measurement_count());
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn forced_run_reproduces_branch_probability() {
        let mut rng = RngStream::new(12);
        let real = HaarMiptRealization::sample(4, 2, 1.0, &mut rng).unwrap();
        let probs = real.branch_probabilities().unwrap();
        let m = real.measurement_count();
        // Pick a branch that is actually reachable.
        let idx = (0..probs.len())
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]))
            .unwrap();
        let record: Vec<usize> = (0..m).map(|k| (idx >> (m - 1 - k)) & 1).collect();
        let t = real.run(Some(&record), &mut rng).unwrap();
        assert!((t.log_prob.exp() - probs[idx]).abs() < 1e-12);
    }

    #[test]
    fn batch_is_deterministic() {
        let root = RngStream::new(99);
        let a = haar_mipt_batch(4, 3, 0.3, 6, &root).unwrap();
        let b = haar_mipt_batch(4, 3, 0.3, 6, &root).unwrap();
        assert_eq!(a, b);
    }
}
