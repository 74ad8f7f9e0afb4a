use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{CliError, ExperimentConfig};
use crate::circuit::{Circuit, StateVector};
use crate::contraction::{
    capture_expectation_network, contract, find_path, load_path, random_network, save_path,
    PathOptions, TensorNetwork,
};
use crate::fgs::{kitaev_entropy_scan, scan_csv};
use crate::hamiltonian::{heisenberg_terms, parse_label, pauli_sum_to_coo, tfim_terms};
use crate::lattice::{build_lattice, Lattice, LatticeKind};
use crate::numerics::{eigh, RngStream};
use crate::shadows::{estimate_pauli, random_bases, shadow_snapshots};
use crate::stabilizer::mipt::{clifford_mipt_batch, mean_entropy, mipt_csv};
use crate::timeevol::lanczos_ground_energy;
use crate::variational::{
    dimer_state, exchange_ansatz, lift_hva_angles, random_batch, subspace_loss, subspace_spectrum,
    tfim_hva_ansatz, tfim_layered_ansatz, vqe_run, GradientMode, Observable, SubspaceProblem,
    VqeOptions,
};

pub const EXPERIMENTS: [&str; 8] = [
    "vqe-tfim",
    "kitaev-scan",
    "mipt-clifford",
    "mipt-haar",
    "shadow-gen",
    "bench-hamiltonian",
    "contract",
    "excited-subspace",
];

/// Everything an experiment hands back to the runner.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub seed: u64,
    /// Parameters with defaults applied.
    pub params: Value,
    /// (file name, contents); CSV files are deterministic given params and seed.
    pub files: Vec<(String, String)>,
    pub metrics: Value,
}

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Deserializes the parameter map over the defaults of `P`, naming the
/// offending field on failure.
fn parse<P: Default + Serialize + DeserializeOwned>(
    name: &str,
    given: &Map<String, Value>,
) -> Result<(P, Value), CliError> {
    let Value::Object(mut merged) = serde_json::to_value(P::default()).map_err(numerical)? else {
        unreachable!("parameter structs serialize to objects")
    };
    for (k, v) in given {
        if !merged.contains_key(k) {
            let known: Vec<&String> = merged.keys().collect();
            return Err(config(format!(
                "{name}: unknown field `{k}`; expected one of {known:?}"
            )));
        }
        let mut trial = merged.clone();
        trial.insert(k.clone(), v.clone());
        serde_json::from_value::<P>(Value::Object(trial))
            .map_err(|e| config(format!("{name}: field `{k}`: {e}")))?;
        merged.insert(k.clone(), v.clone());
    }
    let p = serde_json::from_value(Value::Object(merged.clone())).map_err(numerical)?;
    Ok((p, Value::Object(merged)))
}

fn require(ok: bool, name: &str, field: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(config(format!("{name}: field `{field}`: {msg}")))
    }
}

fn chain(n: usize) -> Result<Lattice, CliError> {
    build_lattice(LatticeKind::Chain, &[n], &[false], 1.0, 1).map_err(numerical)
}

pub(super) fn dispatch(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let name = cfg.name.as_str();
    match name {
        "vqe-tfim" => {
            let (p, params): (VqeTfimParams, _) = parse(name, &cfg.params)?;
            let seed = cfg.seed.unwrap_or(5);
            let r = vqe_tfim(&p, seed)?;
            let mut csv = String::from("stage,start,step,energy\n");
            for (stage, start, step, e) in &r.trace {
                writeln!(csv, "{stage},{start},{step},{e}").expect("string write");
            }
            Ok(RunOutput {
                seed,
                params,
                files: vec![
                    ("trace.csv".into(), csv),
                    (
                        "theta.json".into(),
                        serde_json::to_string(&r.best_theta).map_err(numerical)?,
                    ),
                ],
                metrics: json!({
                    "best_energy": r.best_energy,
                    "exact_energy": r.exact_energy,
                    "error": r.exact_energy.map(|e| r.best_energy - e),
                }),
            })
        }
        "kitaev-scan" => {
            let (p, params): (KitaevParams, _) = parse(name, &cfg.params)?;
            require(p.l >= 2, name, "l", "must be at least 2")?;
            require(p.mu_step > 0.0, name, "mu_step", "must be positive")?;
            require(
                p.mu_max >= p.mu_min,
                name,
                "mu_max",
                "must not be below mu_min",
            )?;
            let count = ((p.mu_max - p.mu_min) / p.mu_step).round() as usize;
            let grid: Vec<f64> = (0..=count)
                .map(|i| p.mu_min + i as f64 * p.mu_step)
                .collect();
            let scan = kitaev_entropy_scan(p.l, p.t, p.delta, &grid).map_err(numerical)?;
            let critical = 2.0 * p.t.abs();
            Ok(RunOutput {
                seed: cfg.seed.unwrap_or(0),
                params,
                files: vec![("scan.csv".into(), scan_csv(&scan))],
                metrics: json!({
                    "argmax_mu": scan.argmax_mu,
                    "critical_mu": critical,
                    "within_one_step": (scan.argmax_mu - critical).abs() <= p.mu_step + 1e-12,
                }),
            })
        }
        "mipt-clifford" => {
            let (p, params): (CliffordMiptParams, _) = parse(name, &cfg.params)?;
            require(p.l >= 2, name, "l", "must be at least 2")?;
            require(
                p.trajectories >= 1,
                name,
                "trajectories",
                "must be at least 1",
            )?;
            require(
                p.ps.iter().all(|x| (0.0..=1.0).contains(x)) && !p.ps.is_empty(),
                name,
                "ps",
                "needs probabilities in [0, 1]",
            )?;
            let seed = cfg.seed.unwrap_or(7);
            let root = RngStream::new(seed);
            let depth = p.depth.unwrap_or(4 * p.l);
            let mut csv = String::new();
            let mut curve = Vec::new();
            for (k, &prob) in p.ps.iter().enumerate() {
                let records =
                    clifford_mipt_batch(p.l, prob, depth, p.trajectories, &root.child(k as u64))
                        .map_err(numerical)?;
                let body = mipt_csv(&records);
                csv.push_str(if k == 0 {
                    &body
                } else {
                    body.split_once('\n').map_or("", |x| x.1)
                });
                curve.push(json!([prob, mean_entropy(&records)]));
            }
            Ok(RunOutput {
                seed,
                params,
                files: vec![("entropy.csv".into(), csv)],
                metrics: json!({ "size": p.l, "depth": depth, "curve": curve }),
            })
        }
        "mipt-haar" => {
            let (p, params): (HaarMiptParams, _) = parse(name, &cfg.params)?;
            require(p.n >= 2, name, "n", "must be at least 2")?;
            require(
                p.n <= 24,
                name,
                "n",
                "state vectors beyond 24 qubits are not supported",
            )?;
            require(
                p.trajectories >= 1,
                name,
                "trajectories",
                "must be at least 1",
            )?;
            require(
                p.ps.iter().all(|x| (0.0..=1.0).contains(x)) && !p.ps.is_empty(),
                name,
                "ps",
                "needs probabilities in [0, 1]",
            )?;
            let seed = cfg.seed.unwrap_or(11);
            let root = RngStream::new(seed);
            let mut csv = String::from("N,p,trajectory,entropy_bits,log_prob\n");
            let mut curve = Vec::new();
            for (k, &prob) in p.ps.iter().enumerate() {
                let rows = crate::circuit::mipt::haar_mipt_batch(
                    p.n,
                    p.depth,
                    prob,
                    p.trajectories,
                    &root.child(k as u64),
                )
                .map_err(numerical)?;
                if let Some(bad) = rows.iter().find(|r| !(r.2.is_finite() && r.2 <= 1e-12)) {
                    return Err(numerical(format!(
                        "trajectory {} has log-probability {}",
                        bad.0, bad.2
                    )));
                }
                for (t, s, lp) in &rows {
                    writeln!(csv, "{},{prob},{t},{},{lp}", p.n, s + 0.0).expect("string write");
                }
                let mean = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
                curve.push(json!([prob, mean]));
            }
            Ok(RunOutput {
                seed,
                params,
                files: vec![("entropy.csv".into(), csv)],
                metrics: json!({ "size": p.n, "depth": p.depth, "curve": curve }),
            })
        }
        "shadow-gen" => {
            let (p, params): (ShadowParams, _) = parse(name, &cfg.params)?;
            require((1..=24).contains(&p.n), name, "n", "must be in 1..=24")?;
            require(p.snapshots >= 1, name, "snapshots", "must be at least 1")?;
            let seed = cfg.seed.unwrap_or(13);
            let root = RngStream::new(seed);
            let psi = shadow_state(&p, &mut root.child(0))?;
            let bases = random_bases(p.n, p.snapshots, &root.child(1));
            let ds = shadow_snapshots(&psi, &bases, &root.child(2)).map_err(numerical)?;
            let mut z0 = vec![0u8; p.n];
            z0[0] = 3;
            Ok(RunOutput {
                seed,
                params,
                files: vec![("shadows.csv".into(), ds.to_csv())],
                metrics: json!({
                    "n": p.n,
                    "snapshots": ds.len(),
                    "z0_estimate": estimate_pauli(&ds, &z0, 1).map_err(numerical)?,
                }),
            })
        }
        "bench-hamiltonian" => {
            let (p, params): (BenchParams, _) = parse(name, &cfg.params)?;
            require(
                p.sizes.iter().all(|&n| (2..=26).contains(&n)) && !p.sizes.is_empty(),
                name,
                "sizes",
                "needs sizes in 2..=26",
            )?;
            let mut csv = String::from("model,n,terms,nnz\n");
            let mut timings = Vec::new();
            for &n in &p.sizes {
                let h = match p.model.as_str() {
                    "tfim" => tfim_terms(&chain(n)?, p.g),
                    "heisenberg" => heisenberg_terms(&chain(n)?, 1.0, 1.0, 1.0),
                    other => {
                        return Err(config(format!(
                            "{name}: field `model`: unknown model '{other}'"
                        )))
                    }
                }
                .map_err(numerical)?;
                let start = Instant::now();
                let coo = pauli_sum_to_coo(&h).map_err(numerical)?;
                let secs = start.elapsed().as_secs_f64();
                writeln!(csv, "{},{n},{},{}", p.model, h.len(), coo.nnz()).expect("string write");
                timings.push(json!([n, secs]));
            }
            Ok(RunOutput {
                seed: cfg.seed.unwrap_or(0),
                params,
                files: vec![("sizes.csv".into(), csv)],
                metrics: json!({ "build_seconds": timings }),
            })
        }
        "contract" => {
            let (p, params): (ContractParams, _) = parse(name, &cfg.params)?;
            let seed = cfg.seed.unwrap_or(17);
            contract_experiment(&p, params, seed, cfg.workers.unwrap_or(1))
        }
        "excited-subspace" => {
            let (p, params): (SubspaceParams, _) = parse(name, &cfg.params)?;
            let seed = cfg.seed.unwrap_or(3);
            let r = excited_subspace(&p, seed)?;
            let mut trace = String::from("step,loss\n");
            for (i, l) in r.trace.iter().enumerate() {
                writeln!(trace, "{i},{l}").expect("string write");
            }
            let mut levels = String::from("index,estimate,exact\n");
            for (i, e) in r.eigenvalues.iter().enumerate() {
                let exact = r.exact.get(i).map(|x| x.to_string()).unwrap_or_default();
                writeln!(levels, "{i},{e},{exact}").expect("string write");
            }
            let max_error = (!r.exact.is_empty()).then(|| {
                r.eigenvalues
                    .iter()
                    .zip(&r.exact)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            });
            Ok(RunOutput {
                seed,
                params,
                files: vec![("trace.csv".into(), trace), ("spectrum.csv".into(), levels)],
                metrics: json!({
                    "eigenvalues": r.eigenvalues,
                    "exact": r.exact,
                    "max_error": max_error,
                    "final_loss": r.trace.last(),
                }),
            })
        }
        _ => Err(config(format!("unknown experiment '{name}'"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VqeTfimParams {
    pub n: usize,
    pub g: f64,
    /// `hva` (one angle per layer and gate type) or `layered` (one angle per gate).
    pub ansatz: String,
    pub layers: usize,
    pub batch: usize,
    pub init_scale: f64,
    pub steps: usize,
    pub lr: f64,
    pub lr_final: Option<f64>,
    pub fd_step: f64,
    /// Per-gate steps started from the best first-stage angles; 0 skips them.
    pub refine_steps: usize,
    pub refine_lr: f64,
    pub refine_lr_final: Option<f64>,
}

impl Default for VqeTfimParams {
    fn default() -> Self {
        Self {
            n: 10,
            g: 1.0,
            ansatz: "hva".into(),
            layers: 8,
            batch: 2,
            init_scale: 0.5,
            steps: 600,
            lr: 0.1,
            lr_final: Some(3e-3),
            fd_step: 1e-5,
            refine_steps: 300,
            refine_lr: 0.01,
            refine_lr_final: Some(1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeTfimResult {
    pub best_energy: f64,
    pub best_theta: Vec<f64>,
    /// Lanczos ground energy for n ≤ 20.
    pub exact_energy: Option<f64>,
    /// (stage, start index, step, energy).
    pub trace: Vec<(usize, usize, usize, f64)>,
}

/// Open-chain TFIM VQE. Both ansatz choices start from |+…+⟩; the `hva`
/// stage uses finite differences and its best angles seed an optional
/// per-gate refinement with the shift rule.
pub fn vqe_tfim(p: &VqeTfimParams, seed: u64) -> Result<VqeTfimResult, CliError> {
    let name = "vqe-tfim";
    require(p.n >= 2, name, "n", "must be at least 2")?;
    require(
        p.n <= 20,
        name,
        "n",
        "state vectors beyond 20 qubits are not supported here",
    )?;
    require(p.layers >= 1, name, "layers", "must be at least 1")?;
    require(p.batch >= 1, name, "batch", "must be at least 1")?;
    require(p.steps >= 1, name, "steps", "must be at least 1")?;
    require(p.lr > 0.0, name, "lr", "must be positive")?;
    require(p.fd_step > 0.0, name, "fd_step", "must be positive")?;
    let h = tfim_terms(&chain(p.n)?, p.g).map_err(numerical)?;
    let coo = pauli_sum_to_coo(&h).map_err(numerical)?;
    let exact = lanczos_ground_energy(&coo, 300, 1e-12, &mut RngStream::new(seed).child(1))
        .map_err(numerical)?;
    let obs = Observable::from(coo);
    let (first, mode, lift) = match p.ansatz.as_str() {
        "hva" => (
            tfim_hva_ansatz(p.n, p.layers).map_err(numerical)?,
            GradientMode::FiniteDiff(p.fd_step),
            true,
        ),
        "layered" => (
            tfim_layered_ansatz(p.n, p.layers, true).map_err(numerical)?,
            GradientMode::ParameterShift,
            false,
        ),
        other => {
            return Err(config(format!(
                "{name}: field `ansatz`: unknown ansatz '{other}'"
            )))
        }
    };
    let batch = random_batch(
        first.param_count(),
        p.batch,
        p.init_scale,
        &RngStream::new(seed),
    );
    let opts = VqeOptions {
        steps: p.steps,
        lr: p.lr,
        lr_final: p.lr_final,
        grad_mode: mode,
    };
    let report = vqe_run(&first, &obs, &batch, &opts).map_err(numerical)?;
    let mut trace = Vec::new();
    for (k, run) in report.runs.iter().enumerate() {
        trace.extend(run.trace.iter().enumerate().map(|(s, &e)| (1, k, s, e)));
    }
    let mut best_theta = report.runs[report.best_index].final_theta.clone();
    let mut best_energy = report.best_energy;
    if p.refine_steps > 0 {
        let second = tfim_layered_ansatz(p.n, p.layers, true).map_err(numerical)?;
        let start = if lift {
            lift_hva_angles(p.n, &best_theta)
        } else {
            best_theta.clone()
        };
        let opts = VqeOptions {
            steps: p.refine_steps,
            lr: p.refine_lr,
            lr_final: p.refine_lr_final,
            grad_mode: GradientMode::ParameterShift,
        };
        let refined = vqe_run(&second, &obs, &[start], &opts).map_err(numerical)?;
        trace.extend(
            refined.runs[0]
                .trace
                .iter()
                .enumerate()
                .map(|(s, &e)| (2, 0, s, e)),
        );
        best_theta = refined.runs[0].final_theta.clone();
        best_energy = refined.best_energy;
    }
    if best_energy < exact - 1e-9 {
        return Err(numerical(format!(
            "variational energy {best_energy} lies below the ground energy {exact}"
        )));
    }
    Ok(VqeTfimResult {
        best_energy,
        best_theta,
        exact_energy: Some(exact),
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KitaevParams {
    pub l: usize,
    pub t: f64,
    pub delta: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_step: f64,
}

impl Default for KitaevParams {
    fn default() -> Self {
        Self {
            l: 200,
            t: 1.0,
            delta: 1.0,
            mu_min: 1.5,
            mu_max: 2.5,
            mu_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliffordMiptParams {
    pub l: usize,
    pub ps: Vec<f64>,
    /// Defaults to 4L.
    pub depth: Option<usize>,
    pub trajectories: usize,
}

impl Default for CliffordMiptParams {
    fn default() -> Self {
        Self {
            l: 8,
            ps: vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5],
            depth: None,
            trajectories: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HaarMiptParams {
    pub n: usize,
    pub depth: usize,
    pub ps: Vec<f64>,
    pub trajectories: usize,
}

impl Default for HaarMiptParams {
    fn default() -> Self {
        Self {
            n: 8,
            depth: 8,
            ps: vec![0.1, 0.3, 0.5],
            trajectories: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowParams {
    pub n: usize,
    pub snapshots: usize,
    /// `zero`, `plus`, `ghz` or `random` (brick-wall circuit of `depth` layers).
    pub state: String,
    pub depth: usize,
}

impl Default for ShadowParams {
    fn default() -> Self {
        Self {
            n: 20,
            snapshots: 256,
            state: "random".into(),
            depth: 4,
        }
    }
}

fn shadow_state(p: &ShadowParams, rng: &mut RngStream) -> Result<StateVector, CliError> {
    let mut c = Circuit::new(p.n);
    let angle = |rng: &mut RngStream| (2.0 * rng.uniform() - 1.0) * std::f64::consts::PI;
    match p.state.as_str() {
        "zero" => {}
        "plus" => {
            for q in 0..p.n {
                c.h(q).map_err(numerical)?;
            }
        }
        "ghz" => {
            c.h(0).map_err(numerical)?;
            for q in 1..p.n {
                c.cx(q - 1, q).map_err(numerical)?;
            }
        }
        "random" => {
            for layer in 0..p.depth {
                for q in 0..p.n {
                    c.ry(q, angle(rng)).map_err(numerical)?;
                    c.rz(q, angle(rng)).map_err(numerical)?;
                }
                for i in (layer % 2..p.n.saturating_sub(1)).step_by(2) {
                    c.cz(i, i + 1).map_err(numerical)?;
                }
            }
        }
        other => {
            return Err(config(format!(
                "shadow-gen: field `state`: unknown state '{other}'"
            )))
        }
    }
    c.run().map_err(numerical)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchParams {
    /// `tfim` or `heisenberg`, open chains.
    pub model: String,
    pub sizes: Vec<usize>,
    pub g: f64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            model: "tfim".into(),
            sizes: vec![8, 12, 16, 20],
            g: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractParams {
    /// `circuit` (⟨ψ|P|ψ⟩ of a random brick-wall circuit) or `random`.
    pub network: String,
    pub n: usize,
    pub depth: usize,
    /// Pauli label such as `IZZI`; defaults to Z on the two middle qubits.
    pub observable: Option<String>,
    pub tensors: usize,
    pub extra_bonds: usize,
    pub bond: usize,
    pub max_rank: usize,
    pub target_size: usize,
    pub max_repeats: usize,
    /// `find`, `execute` or `find-execute`.
    pub mode: String,
    pub path_file: Option<String>,
    /// Also time the contraction on one worker and report the speedup.
    pub compare_workers: bool,
}

impl Default for ContractParams {
    fn default() -> Self {
        Self {
            network: "circuit".into(),
            n: 12,
            depth: 6,
            observable: None,
            tensors: 32,
            extra_bonds: 16,
            bond: 2,
            max_rank: 6,
            target_size: 1 << 28,
            max_repeats: 8,
            mode: "find-execute".into(),
            path_file: None,
            compare_workers: false,
        }
    }
}

/// The network the contract experiment works on; identical params and seed
/// give the identical network in any process.
pub fn contract_network(p: &ContractParams, seed: u64) -> Result<TensorNetwork, CliError> {
    let name = "contract";
    let mut rng = RngStream::new(seed);
    match p.network.as_str() {
        "circuit" => {
            require(p.n >= 2, name, "n", "must be at least 2")?;
            let angle = |rng: &mut RngStream| (2.0 * rng.uniform() - 1.0) * std::f64::consts::PI;
            let mut c = Circuit::new(p.n);
            for layer in 0..p.depth {
                for q in 0..p.n {
                    c.ry(q, angle(&mut rng)).map_err(numerical)?;
                    c.rz(q, angle(&mut rng)).map_err(numerical)?;
                }
                for i in (layer % 2..p.n - 1).step_by(2) {
                    let params: Vec<f64> = (0..15).map(|_| angle(&mut rng)).collect();
                    c.su4(i, i + 1, &params).map_err(numerical)?;
                }
            }
            let codes = match &p.observable {
                Some(label) => parse_label(label)
                    .map_err(|e| config(format!("{name}: field `observable`: {e}")))?,
                None => {
                    let mut v = vec![0u8; p.n];
                    v[p.n / 2 - 1] = 3;
                    v[p.n / 2] = 3;
                    v
                }
            };
            require(
                codes.len() == p.n,
                name,
                "observable",
                "length must equal n",
            )?;
            capture_expectation_network(&c, &codes).map_err(numerical)
        }
        "random" => random_network(p.tensors, p.extra_bonds, p.bond, p.max_rank, &mut rng)
            .map_err(|e| config(format!("{name}: {e}"))),
        other => Err(config(format!(
            "{name}: field `network`: unknown network '{other}'"
        ))),
    }
}

fn contract_experiment(
    p: &ContractParams,
    params: Value,
    seed: u64,
    workers: usize,
) -> Result<RunOutput, CliError> {
    let name = "contract";
    let (find, execute) = match p.mode.as_str() {
        "find" => (true, false),
        "execute" => (false, true),
        "find-execute" => (true, true),
        other => {
            return Err(config(format!(
                "{name}: field `mode`: unknown mode '{other}'"
            )))
        }
    };
    let path_file = p.path_file.as_ref().map(PathBuf::from);
    require(
        find || path_file.is_some(),
        name,
        "path_file",
        "execute mode reads the path from this file",
    )?;
    require(
        execute || path_file.is_some(),
        name,
        "path_file",
        "find mode writes the path to this file",
    )?;
    let net = contract_network(p, seed)?;
    let tree = if find {
        let opts = PathOptions {
            target_size: p.target_size,
            max_repeats: p.max_repeats,
            seed,
        };
        let tree = find_path(&net, &opts).map_err(|e| config(format!("{name}: {e}")))?;
        if let Some(f) = &path_file {
            save_path(&tree, f).map_err(super::io_err)?;
        }
        tree
    } else {
        let f = path_file.as_ref().expect("checked above");
        load_path(f, &net).map_err(|e| config(format!("{name}: field `path_file`: {e}")))?
    };
    let mut csv = String::from("tensors,slices,flops,largest_intermediate");
    let mut metrics = json!({
        "tensors": net.tensors().len(),
        "slices": tree.costs.slices,
        "flops": tree.costs.flops,
        "largest_intermediate": tree.costs.largest_intermediate,
        "sliced_labels": tree.sliced_labels,
        "signature": tree.signature,
    });
    let row = format!(
        "{},{},{},{}",
        net.tensors().len(),
        tree.costs.slices,
        tree.costs.flops,
        tree.costs.largest_intermediate
    );
    if execute {
        let start = Instant::now();
        let t = contract(&net, &tree, workers).map_err(numerical)?;
        let secs = start.elapsed().as_secs_f64();
        let v = t
            .value()
            .ok_or_else(|| numerical("network is not closed"))?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(numerical(format!("contraction value {v}")));
        }
        csv.push_str(",value_re,value_im\n");
        writeln!(csv, "{row},{},{}", v.re, v.im).expect("string write");
        metrics["value"] = json!([v.re, v.im]);
        metrics["contract_seconds"] = json!(secs);
        if p.compare_workers {
            let start = Instant::now();
            let one = contract(&net, &tree, 1).map_err(numerical)?;
            let serial = start.elapsed().as_secs_f64();
            if one != t {
                return Err(numerical("worker count changed the contraction value"));
            }
            metrics["serial_seconds"] = json!(serial);
            metrics["speedup"] = json!(serial / secs);
        }
    } else {
        csv.push('\n');
        writeln!(csv, "{row}").expect("string write");
    }
    Ok(RunOutput {
        seed,
        params,
        files: vec![("contract.csv".into(), csv)],
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubspaceParams {
    /// Even chain length.
    pub n: usize,
    /// 1 to 4 states: singlet, then triplets m = +1, −1, 0 on the second pair.
    pub k: usize,
    pub layers: usize,
    pub steps: usize,
    pub lr: f64,
    pub fd_step: f64,
    pub ridge: f64,
    pub init_scale: f64,
}

impl Default for SubspaceParams {
    fn default() -> Self {
        Self {
            n: 8,
            k: 3,
            layers: 8,
            steps: 600,
            lr: 0.05,
            fd_step: 1e-5,
            ridge: 1e-6,
            init_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceResult {
    pub eigenvalues: Vec<f64>,
    /// Lowest k exact eigenvalues (dense diagonalization, n ≤ 12).
    pub exact: Vec<f64>,
    pub trace: Vec<f64>,
}

/// Heisenberg-chain subspace search: one spin-conserving exchange circuit
/// applied to k dimer-product inputs of different total spin.
pub fn excited_subspace(p: &SubspaceParams, seed: u64) -> Result<SubspaceResult, CliError> {
    let name = "excited-subspace";
    require(
        p.n >= 4 && p.n % 2 == 0,
        name,
        "n",
        "must be even and at least 4",
    )?;
    require(p.n <= 16, name, "n", "must be at most 16")?;
    require((1..=4).contains(&p.k), name, "k", "must be in 1..=4")?;
    require(p.layers >= 1, name, "layers", "must be at least 1")?;
    require(p.steps >= 1, name, "steps", "must be at least 1")?;
    require(p.ridge >= 0.0, name, "ridge", "must be non-negative")?;
    let coo = pauli_sum_to_coo(&heisenberg_terms(&chain(p.n)?, 1.0, 1.0, 1.0).map_err(numerical)?)
        .map_err(numerical)?;
    let exact = if p.n <= 12 {
        eigh(&coo.to_dense()).map_err(numerical)?.0[..p.k].to_vec()
    } else {
        Vec::new()
    };
    let triplets = [None, Some((1, 1)), Some((1, -1)), Some((1, 0))];
    let inputs = triplets[..p.k]
        .iter()
        .map(|t| dimer_state(p.n, *t).map_err(numerical))
        .collect::<Result<Vec<_>, _>>()?;
    let ansatz = exchange_ansatz(p.n, p.layers).map_err(numerical)?;
    let problem =
        SubspaceProblem::shared_unitary(ansatz, inputs, coo, p.ridge).map_err(numerical)?;
    let mut rng = RngStream::new(seed);
    let theta0: Vec<f64> = (0..problem.param_count())
        .map(|_| p.init_scale * (2.0 * rng.uniform() - 1.0))
        .collect();
    let (theta, trace) = problem
        .optimize(&theta0, p.steps, p.lr, p.fd_step)
        .map_err(numerical)?;
    let eval = subspace_loss(&problem, &theta).map_err(numerical)?;
    let eigenvalues = subspace_spectrum(&eval.s, &eval.h).map_err(numerical)?;
    if !exact.is_empty() {
        let floor: f64 = exact.iter().sum();
        if let Some(l) = trace.iter().find(|&&l| l < floor - 1e-4) {
            return Err(numerical(format!(
                "subspace loss {l} undercuts the exact sum {floor}"
            )));
        }
    }
    Ok(SubspaceResult {
        eigenvalues,
        exact,
        trace,
    })
}
