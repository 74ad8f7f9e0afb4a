use rayon::prelude::*;

use super::{NoiseConf, NoiseError};
use crate::circuit::{Circuit, StateVector};
use crate::numerics::RngStream;

/// One Monte-Carlo trajectory: after every gate each matched channel picks a
/// Kraus branch with probability ‖K_i ψ‖² and the state is renormalized.
/// Returns the final state and the log-probability of the branch sequence.
pub fn mc_trajectory(
    c: &Circuit,
    conf: &NoiseConf,
    rng: &mut RngStream,
) -> Result<(StateVector, f64), NoiseError> {
    if c.d() != 2 {
        return Err(NoiseError::QubitsOnly(c.d()));
    }
    let mut psi = match c.initial_state() {
        Some(s) => s.clone(),
        None => StateVector::zero(c.n(), 2),
    };
    let mut log_prob = 0.0;
    for op in c.ops() {
        op.validate(c.n(), 2)?;
        psi.apply_matrix(&op.wires, &op.matrix(2)?)?;
        for ch in conf.channels_for(op)? {
            let u = rng.uniform();
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_nonzero = None;
            for k in ch.operators() {
                let mut phi = psi.clone();
                phi.apply_matrix(&op.wires, k)?;
                let p = phi.norm().powi(2);
                if p > 0.0 {
                    acc += p;
                    last_nonzero = Some((phi, p));
                    if u < acc {
                        chosen = last_nonzero.take();
                        break;
                    }
                }
            }
            // rounding can leave u just above the accumulated total
            let (mut phi, p) = chosen.or(last_nonzero).ok_or(NoiseError::AllBranchesZero)?;
            phi.normalize();
            psi = phi;
            log_prob += p.ln();
        }
    }
    Ok((psi, log_prob))
}

/// Mean and standard error of per-trajectory observables.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trajectories: usize,
}

/// Averages `observe` over `count` trajectories; trajectory i draws from
/// `root.child(i)` so the result does not depend on the worker count.
pub fn trajectory_average(
    c: &Circuit,
    conf: &NoiseConf,
    count: usize,
    root: &RngStream,
    observe: impl Fn(&StateVector) -> Vec<f64> + Sync,
) -> Result<TrajectoryStats, NoiseError> {
    if count < 2 {
        return Err(NoiseError::InvalidParameter(format!(
            "{count} trajectories; need at least 2"
        )));
    }
    let samples: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (psi, _) = mc_trajectory(c, conf, &mut root.child(i as u64))?;
            Ok(observe(&psi))
        })
        .collect::<Result<_, NoiseError>>()?;
    let width = samples[0].len();
    let mut mean = vec![0.0; width];
    for s in &samples {
        mean.iter_mut()
            .zip(s)
            .for_each(|(m, x)| *m += x / count as f64);
    }
    let mut var = vec![0.0; width];
    for s in &samples {
        var.iter_mut()
            .zip(s.iter().zip(&mean))
            .for_each(|(v, (x, m))| *v += (x - m).powi(2) / (count - 1) as f64);
    }
    let std_err = var.iter().map(|v| (v / count as f64).sqrt()).collect();
    Ok(TrajectoryStats {
        mean,
        std_err,
        trajectories: count,
    })
}
