//! Variational drivers: parameterized ansatz circuits, exact gradients by the
//! parameter-shift rule or central differences, Adam, batched VQE, and the
//! trace-minimizing excited-state subspace method.

mod ansatz;
mod subspace;

pub use ansatz::{
    brick_rzz_rx_ansatz, clock_model_ansatz, dimer_state, exchange_ansatz, givens_rzz_rx_ansatz,
    hardware_efficient_ansatz, lift_hva_angles, tfim_free_fermion_angles, tfim_hva_ansatz,
    tfim_layered_ansatz, tfim_ramp_angles,
};
pub use subspace::{
    subspace_loss, subspace_spectrum, SubspaceEval, SubspaceProblem, DEFAULT_RIDGE, SPECTRUM_FLOOR,
};

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitError, StateVector};
use crate::hamiltonian::{HamiltonianError, PauliSum};
use crate::numerics::{NumericsError, SparseCOO};

/// Largest imaginary part tolerated in an energy.
const IMAG_TOL: f64 = 1e-10;
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VariationalError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(
        "parameter {index} is not generated by a ±1/2-eigenvalue operator; use finite differences"
    )]
    NotShiftEligible { index: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("energy has imaginary part {0:.3e}; the observable is not Hermitian")]
    ComplexEnergy(f64),
    #[error("{0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// How a parameter enters its circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorTag {
    /// Appears in exactly one gate exp(−iθG) with G having eigenvalues ±1/2.
    ShiftRule,
    FiniteDiffOnly,
}

type Builder = dyn Fn(&[f64]) -> Result<Circuit, CircuitError> + Send + Sync;

/// A deterministic map from a parameter vector to a circuit.
#[derive(Clone)]
pub struct Ansatz {
    n: usize,
    d: usize,
    tags: Vec<GeneratorTag>,
    builder: Arc<Builder>,
    initial: Option<StateVector>,
}

impl std::fmt::Debug for Ansatz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ansatz")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("params", &self.tags.len())
            .finish()
    }
}

impl Ansatz {
    pub fn new(
        n: usize,
        d: usize,
        tags: Vec<GeneratorTag>,
        builder: impl Fn(&[f64]) -> Result<Circuit, CircuitError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            d,
            tags,
            builder: Arc::new(builder),
            initial: None,
        }
    }

    /// Runs the circuit on `psi` instead of |0…0⟩.
    pub fn with_initial_state(mut self, psi: StateVector) -> Result<Self, VariationalError> {
        if psi.n() != self.n || psi.d() != self.d {
            return Err(VariationalError::Shape(
                "initial state does not match the ansatz".into(),
            ));
        }
        self.initial = Some(psi);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn param_count(&self) -> usize {
        self.tags.len()
    }

    pub fn tags(&self) -> &[GeneratorTag] {
        &self.tags
    }

    pub fn circuit(&self, theta: &[f64]) -> Result<Circuit, VariationalError> {
        self.check(theta)?;
        let c = (self.builder)(theta)?;
        if c.n() != self.n || c.d() != self.d {
            return Err(VariationalError::Shape(
                "builder returned a circuit of the wrong shape".into(),
            ));
        }
        Ok(match &self.initial {
            Some(psi) => c.with_initial_state(psi.clone())?,
            None => c,
        })
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector, VariationalError> {
        Ok(self.circuit(theta)?.run()?)
    }

    fn check(&self, theta: &[f64]) -> Result<(), VariationalError> {
        if theta.len() != self.tags.len() {
            return Err(VariationalError::Shape(format!(
                "{} parameters for an ansatz taking {}",
                theta.len(),
                self.tags.len()
            )));
        }
        Ok(())
    }
}

/// A Hermitian objective in either supported representation.
#[derive(Debug, Clone)]
pub enum Observable {
    Pauli(PauliSum),
    Sparse(SparseCOO),
}

impl From<PauliSum> for Observable {
    fn from(h: PauliSum) -> Self {
        Observable::Pauli(h)
    }
}

impl From<SparseCOO> for Observable {
    fn from(h: SparseCOO) -> Self {
        Observable::Sparse(h)
    }
}

impl Observable {
    pub fn expectation(&self, psi: &StateVector) -> Result<f64, VariationalError> {
        let e = match self {
            Observable::Pauli(h) => psi.expectation_pauli(h)?,
            Observable::Sparse(h) => {
                if h.dim() != psi.dim() {
                    return Err(VariationalError::Shape(format!(
                        "operator of dimension {} on a state of dimension {}",
                        h.dim(),
                        psi.dim()
                    )));
                }
                h.expectation(psi.amplitudes())
            }
        };
        if e.im.abs() > IMAG_TOL * e.re.abs().max(1.0) {
            return Err(VariationalError::ComplexEnergy(e.im));
        }
        Ok(e.re)
    }
}

/// ⟨ψ(θ)|H|ψ(θ)⟩ from the state-vector engine.
pub fn energy(ansatz: &Ansatz, theta: &[f64], h: &Observable) -> Result<f64, VariationalError> {
    h.expectation(&ansatz.state(theta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    ParameterShift,
    FiniteDiff(f64),
}

impl Default for GradientMode {
    fn default() -> Self {
        GradientMode::FiniteDiff(DEFAULT_FD_STEP)
    }
}

/// ∂E/∂θ_j for every parameter; 2k energy evaluations run in parallel.
pub fn gradient(
    ansatz: &Ansatz,
    theta: &[f64],
    h: &Observable,
    mode: GradientMode,
) -> Result<Vec<f64>, VariationalError> {
    ansatz.check(theta)?;
    let (shift, scale) = match mode {
        GradientMode::ParameterShift => {
            if let Some(index) = ansatz
                .tags
                .iter()
                .position(|t| *t != GeneratorTag::ShiftRule)
            {
                return Err(VariationalError::NotShiftEligible { index });
            }
            (FRAC_PI_2, 0.5)
        }
        GradientMode::FiniteDiff(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(VariationalError::InvalidArgument(format!(
                    "finite-difference step {eps}"
                )));
            }
            (eps, 0.5 / eps)
        }
    };
    let evals: Vec<f64> = (0..2 * theta.len())
        .into_par_iter()
        .map(|k| {
            let mut t = theta.to_vec();
            t[k / 2] += if k % 2 == 0 { shift } else { -shift };
            energy(ansatz, &t, h)
        })
        .collect::<Result<_, _>>()?;
    Ok(evals.chunks(2).map(|p| scale * (p[0] - p[1])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u32,
}

/// One bias-corrected Adam update.
pub fn adam_step(
    state: &AdamState,
    theta: &[f64],
    grad: &[f64],
    cfg: &AdamConfig,
) -> Result<(AdamState, Vec<f64>), VariationalError> {
    if grad.len() != theta.len() || !(state.t == 0 || state.m.len() == theta.len()) {
        return Err(VariationalError::Shape(
            "Adam moments, parameters and gradient differ in length".into(),
        ));
    }
    let t = state.t + 1;
    let (mut m, mut v) = if state.t == 0 {
        (vec![0.0; theta.len()], vec![0.0; theta.len()])
    } else {
        (state.m.clone(), state.v.clone())
    };
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    let mut out = theta.to_vec();
    for j in 0..theta.len() {
        m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
        v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
        out[j] -= cfg.lr * (m[j] / c1) / ((v[j] / c2).sqrt() + cfg.eps);
    }
    Ok((AdamState { m, v, t }, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VqeOptions {
    pub steps: usize,
    pub lr: f64,
    /// When set, the learning rate decays geometrically from `lr` to this
    /// value over the run.
    pub lr_final: Option<f64>,
    pub grad_mode: GradientMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRun {
    /// Energies at θ₀ and after every step (`steps + 1` entries).
    pub trace: Vec<f64>,
    pub final_theta: Vec<f64>,
    pub final_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeReport {
    pub runs: Vec<VqeRun>,
    pub best_index: usize,
    pub best_energy: f64,
}

fn vqe_single(
    ansatz: &Ansatz,
    theta0: &[f64],
    h: &Observable,
    opts: &VqeOptions,
) -> Result<VqeRun, VariationalError> {
    let mut cfg = AdamConfig::with_lr(opts.lr);
    let mut theta = theta0.to_vec();
    let mut state = AdamState::default();
    let mut trace = vec![energy(ansatz, &theta, h)?];
    for step in 0..opts.steps {
        if let Some(lr_final) = opts.lr_final {
            let frac = step as f64 / (opts.steps.max(2) - 1) as f64;
            cfg.lr = opts.lr * (lr_final / opts.lr).powf(frac);
        }
        let g = gradient(ansatz, &theta, h, opts.grad_mode)?;
        (state, theta) = adam_step(&state, &theta, &g, &cfg)?;
        trace.push(energy(ansatz, &theta, h)?);
    }
    let final_energy = *trace.last().expect("trace starts with θ₀");
    Ok(VqeRun {
        trace,
        final_theta: theta,
        final_energy,
    })
}

/// Gradient descent with Adam from every starting point in `batch`; entries
/// run in parallel and the report names the lowest final energy.
pub fn vqe_run(
    ansatz: &Ansatz,
    h: &Observable,
    batch: &[Vec<f64>],
    opts: &VqeOptions,
) -> Result<VqeReport, VariationalError> {
    if opts.steps == 0 {
        return Err(VariationalError::InvalidArgument(
            "steps must be at least 1".into(),
        ));
    }
    if batch.is_empty() {
        return Err(VariationalError::InvalidArgument("empty batch".into()));
    }
    let runs: Vec<VqeRun> = batch
        .par_iter()
        .map(|t0| vqe_single(ansatz, t0, h, opts))
        .collect::<Result<_, _>>()?;
    let (best_index, best_energy) = runs
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.final_energy))
        .fold(
            (0, f64::INFINITY),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    Ok(VqeReport {
        runs,
        best_index,
        best_energy,
    })
}

/// Starting points drawn uniformly from [−scale, scale], one child stream per entry.
pub fn random_batch(
    param_count: usize,
    size: usize,
    scale: f64,
    root: &crate::numerics::RngStream,
) -> Vec<Vec<f64>> {
    (0..size)
        .map(|k| {
            let mut rng = root.child(k as u64);
            (0..param_count)
                .map(|_| scale * (2.0 * rng.uniform() - 1.0))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::tfim_terms;
    use crate::lattice::{build_lattice, LatticeKind};
    use crate::numerics::{eigh, RngStream};

    fn tfim2() -> Observable {
        let l = build_lattice(LatticeKind::Chain, &[2], &[false], 1.0, 1).unwrap();
        tfim_terms(&l, 1.0).unwrap().into()
    }

    fn rx_z() -> (Ansatz, Observable) {
        let a = Ansatz::new(1, 2, vec![GeneratorTag::ShiftRule], |t| {
            let mut c = Circuit::new(1);
            c.rx(0, t[0])?;
            Ok(c)
        });
        (a, PauliSum::from_labels(&[(1.0, "Z")]).unwrap().into())
    }

    #[test]
    fn identity_ansatz_energy() {
        let a = Ansatz::new(2, 2, vec![], |_| Ok(Circuit::new(2)));
        let h = tfim2();
        assert!((energy(&a, &[], &h).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(energy(&a, &[], &h).unwrap(), energy(&a, &[], &h).unwrap());
    }

    #[test]
    fn injected_ground_state_gives_exact_energy() {
        let h = tfim2();
        let Observable::Pauli(p) = &h else {
            unreachable!()
        };
        let (vals, vecs) = eigh(&p.to_dense().unwrap()).unwrap();
        let gs = StateVector::from_amplitudes(2, 2, vecs.column(0)).unwrap();
        let a = Ansatz::new(2, 2, vec![], |_| Ok(Circuit::new(2)))
            .with_initial_state(gs)
            .unwrap();
        assert!((energy(&a, &[], &h).unwrap() - vals[0]).abs() < 1e-12);
        assert!((vals[0] + 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rx_gradient_both_modes() {
        let (a, h) = rx_z();
        let t = std::f64::consts::FRAC_PI_3;
        let ps = gradient(&a, &[t], &h, GradientMode::ParameterShift).unwrap()[0];
        let fd = gradient(&a, &[t], &h, GradientMode::default()).unwrap()[0];
        assert!((ps + t.sin()).abs() < 1e-12);
        assert!((fd + t.sin()).abs() < 1e-8);
        // cos θ is stationary at π
        assert!(
            gradient(
                &a,
                &[std::f64::consts::PI],
                &h,
                GradientMode::ParameterShift
            )
            .unwrap()[0]
                .abs()
                < 1e-8
        );
    }

    #[test]
    fn shift_rule_refuses_compound_generators() {
        let a = Ansatz::new(2, 2, vec![GeneratorTag::FiniteDiffOnly; 15], |t| {
            let mut c = Circuit::new(2);
            c.su4(0, 1, t)?;
            Ok(c)
        });
        let h = tfim2();
        assert_eq!(
            gradient(&a, &[0.1; 15], &h, GradientMode::ParameterShift),
            Err(VariationalError::NotShiftEligible { index: 0 })
        );
        assert_eq!(
            gradient(&a, &[0.1; 15], &h, GradientMode::default())
                .unwrap()
                .len(),
            15
        );
    }

    #[test]
    fn adam_identities() {
        let cfg = AdamConfig::with_lr(0.02);
        let (s, t) = adam_step(&AdamState::default(), &[0.3, -1.0], &[0.0, 0.0], &cfg).unwrap();
        assert_eq!(t, vec![0.3, -1.0]);
        assert_eq!(s.t, 1);
        let (_, t) = adam_step(
            &AdamState::default(),
            &[0.0, 0.0, 0.0],
            &[3.0, -1e-3, 250.0],
            &cfg,
        )
        .unwrap();
        assert!(
            (t[0] + 0.02).abs() < 1e-9 && (t[1] - 0.02).abs() < 1e-6 && (t[2] + 0.02).abs() < 1e-9
        );
        let a = adam_step(&s, &[1.0, 2.0], &[0.5, -0.5], &cfg).unwrap();
        assert_eq!(a, adam_step(&s, &[1.0, 2.0], &[0.5, -0.5], &cfg).unwrap());
        assert!(adam_step(&s, &[1.0], &[0.5], &cfg).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_initial_energy() {
        let a = tfim_layered_ansatz(2, 1, false).unwrap();
        let h = tfim2();
        let theta0 = vec![0.4, -0.2, 0.9];
        let r = vqe_run(
            &a,
            &h,
            std::slice::from_ref(&theta0),
            &VqeOptions {
                steps: 1,
                lr: 0.0,
                lr_final: None,
                grad_mode: GradientMode::ParameterShift,
            },
        )
        .unwrap();
        assert_eq!(r.best_energy, energy(&a, &theta0, &h).unwrap());
        assert_eq!(r.runs[0].final_theta, theta0);
    }

    #[test]
    fn two_qubit_tfim_vqe_reaches_ground_energy() {
        let a = tfim_layered_ansatz(2, 2, true).unwrap();
        let h = tfim2();
        let batch = random_batch(
            a.param_count(),
            8,
            std::f64::consts::PI,
            &RngStream::new(11),
        );
        let r = vqe_run(
            &a,
            &h,
            &batch,
            &VqeOptions {
                steps: 300,
                lr: 2e-2,
                lr_final: None,
                grad_mode: GradientMode::ParameterShift,
            },
        )
        .unwrap();
        assert!(
            (r.best_energy + 5f64.sqrt()).abs() < 1e-3,
            "{:?}",
            r.runs.iter().map(|x| x.final_energy).collect::<Vec<_>>()
        );
        let again = vqe_run(
            &a,
            &h,
            &batch,
            &VqeOptions {
                steps: 300,
                lr: 2e-2,
                lr_final: None,
                grad_mode: GradientMode::ParameterShift,
            },
        )
        .unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn zero_start_is_held_at_the_parity_bound() {
        let a = tfim_layered_ansatz(2, 2, false).unwrap();
        let h = tfim2();
        let batch = random_batch(
            a.param_count(),
            4,
            std::f64::consts::PI,
            &RngStream::new(11),
        );
        let r = vqe_run(
            &a,
            &h,
            &batch,
            &VqeOptions {
                steps: 300,
                lr: 2e-2,
                lr_final: None,
                grad_mode: GradientMode::ParameterShift,
            },
        )
        .unwrap();
        // sector ground energies −√5 (even) and −1 (odd)
        let bound = -(1.0 + 5f64.sqrt()) / 2.0;
        assert!(r.best_energy >= bound - 1e-9 && r.best_energy < bound + 1e-3);
    }
}
