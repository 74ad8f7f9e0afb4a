use std::sync::Arc;

use rayon::prelude::*;

use super::{adam_step, AdamConfig, AdamState, Ansatz, VariationalError};
use crate::circuit::StateVector;
use crate::numerics::{eigh, inner, inverse, ComplexMatrix, SparseCOO, C64};

/// Overlap eigenvalues below this are dropped when whitening S.
pub const SPECTRUM_FLOOR: f64 = 1e-10;
pub const DEFAULT_RIDGE: f64 = 1e-6;

type StatesBuilder = dyn Fn(&[f64]) -> Result<Vec<StateVector>, VariationalError> + Send + Sync;

/// k trial states θ ↦ {|ψ_i⟩} and a Hamiltonian; the loss is
/// Re Tr((S + εI)⁻¹ H) with S_ij = ⟨ψ_i|ψ_j⟩ and H_ij = ⟨ψ_i|H|ψ_j⟩.
#[derive(Clone)]
pub struct SubspaceProblem {
    k: usize,
    param_count: usize,
    builder: Arc<StatesBuilder>,
    hamiltonian: SparseCOO,
    ridge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceEval {
    pub loss: f64,
    pub s: ComplexMatrix,
    pub h: ComplexMatrix,
}

impl SubspaceProblem {
    pub fn new(
        k: usize,
        param_count: usize,
        hamiltonian: SparseCOO,
        ridge: f64,
        builder: impl Fn(&[f64]) -> Result<Vec<StateVector>, VariationalError> + Send + Sync + 'static,
    ) -> Result<Self, VariationalError> {
        if k == 0 {
            return Err(VariationalError::InvalidArgument(
                "k must be at least 1".into(),
            ));
        }
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(VariationalError::InvalidArgument(format!("ridge {ridge}")));
        }
        Ok(Self {
            k,
            param_count,
            builder: Arc::new(builder),
            hamiltonian,
            ridge,
        })
    }

    /// k copies of `ansatz`, each with its own parameter block θ[iP..(i+1)P].
    pub fn independent(
        ansatz: Ansatz,
        k: usize,
        hamiltonian: SparseCOO,
        ridge: f64,
    ) -> Result<Self, VariationalError> {
        let p = ansatz.param_count();
        Self::new(k, k * p, hamiltonian, ridge, move |t| {
            t.chunks(p.max(1))
                .take(k)
                .map(|b| ansatz.state(b))
                .collect()
        })
    }

    /// One circuit U(θ) applied to k fixed input states.
    pub fn shared_unitary(
        ansatz: Ansatz,
        inputs: Vec<StateVector>,
        hamiltonian: SparseCOO,
        ridge: f64,
    ) -> Result<Self, VariationalError> {
        let p = ansatz.param_count();
        Self::new(inputs.len(), p, hamiltonian, ridge, move |t| {
            let c = ansatz.circuit(t)?;
            inputs
                .iter()
                .map(|psi| {
                    let mut out = psi.clone();
                    c.apply_to(&mut out)?;
                    Ok(out)
                })
                .collect()
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn hamiltonian(&self) -> &SparseCOO {
        &self.hamiltonian
    }

    pub fn states(&self, theta: &[f64]) -> Result<Vec<StateVector>, VariationalError> {
        if theta.len() != self.param_count {
            return Err(VariationalError::Shape(format!(
                "{} parameters for a problem taking {}",
                theta.len(),
                self.param_count
            )));
        }
        let states = (self.builder)(theta)?;
        if states.len() != self.k {
            return Err(VariationalError::Shape(format!(
                "builder returned {} states, expected {}",
                states.len(),
                self.k
            )));
        }
        Ok(states)
    }

    /// Central-difference gradient of the loss; evaluations run in parallel.
    pub fn gradient(&self, theta: &[f64], eps: f64) -> Result<Vec<f64>, VariationalError> {
        let evals: Vec<f64> = (0..2 * theta.len())
            .into_par_iter()
            .map(|k| {
                let mut t = theta.to_vec();
                t[k / 2] += if k % 2 == 0 { eps } else { -eps };
                Ok(subspace_loss(self, &t)?.loss)
            })
            .collect::<Result<_, VariationalError>>()?;
        Ok(evals
            .chunks(2)
            .map(|p| (p[0] - p[1]) / (2.0 * eps))
            .collect())
    }

    /// Adam on the loss; returns the final parameters and the loss trace.
    pub fn optimize(
        &self,
        theta0: &[f64],
        steps: usize,
        lr: f64,
        eps: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), VariationalError> {
        let cfg = AdamConfig::with_lr(lr);
        let mut theta = theta0.to_vec();
        let mut state = AdamState::default();
        let mut trace = vec![subspace_loss(self, &theta)?.loss];
        for _ in 0..steps {
            let g = self.gradient(&theta, eps)?;
            (state, theta) = adam_step(&state, &theta, &g, &cfg)?;
            trace.push(subspace_loss(self, &theta)?.loss);
        }
        Ok((theta, trace))
    }
}

/// Builds the k states, their overlap and Hamiltonian matrices, and the
/// ridge-regularized trace loss.
pub fn subspace_loss(p: &SubspaceProblem, theta: &[f64]) -> Result<SubspaceEval, VariationalError> {
    let states = p.states(theta)?;
    let dim = p.hamiltonian.dim();
    if let Some(bad) = states.iter().find(|s| s.dim() != dim) {
        return Err(VariationalError::Shape(format!(
            "state of dimension {} for an operator of dimension {dim}",
            bad.dim()
        )));
    }
    if states.iter().any(|s| s.norm() == 0.0) {
        return Err(VariationalError::InvalidArgument("zero trial state".into()));
    }
    let hpsi: Vec<Vec<C64>> = states
        .iter()
        .map(|s| p.hamiltonian.matvec(s.amplitudes()))
        .collect();
    let k = p.k;
    let s = ComplexMatrix::from_fn(k, k, |i, j| states[i].inner(&states[j]));
    let h = ComplexMatrix::from_fn(k, k, |i, j| inner(states[i].amplitudes(), &hpsi[j]));
    let reg = s.add(&ComplexMatrix::identity(k).scale(C64::new(p.ridge, 0.0)))?;
    let inv = inverse(&reg)
        .map_err(|_| VariationalError::Singular("S + εI is numerically singular".into()))?;
    let loss = inv.matmul(&h)?.trace().re;
    if !loss.is_finite() {
        return Err(VariationalError::Singular(
            "S + εI is numerically singular".into(),
        ));
    }
    Ok(SubspaceEval { loss, s, h })
}

/// Ascending solutions of Hc = ESc after whitening S on its eigenvalues above
/// [`SPECTRUM_FLOOR`]; returns one value per retained direction.
pub fn subspace_spectrum(
    s: &ComplexMatrix,
    h: &ComplexMatrix,
) -> Result<Vec<f64>, VariationalError> {
    if s.rows() != h.rows() || s.cols() != h.cols() {
        return Err(VariationalError::Shape("S and H differ in shape".into()));
    }
    let (sv, su) = eigh(s)?;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > SPECTRUM_FLOOR).collect();
    if keep.is_empty() {
        return Err(VariationalError::Singular(
            "overlap matrix is numerically zero".into(),
        ));
    }
    let w = ComplexMatrix::from_fn(s.rows(), keep.len(), |r, c| {
        su[(r, keep[c])] / sv[keep[c]].sqrt()
    });
    let hw = w.adjoint().matmul(h)?.matmul(&w)?;
    Ok(eigh(&hw)?.0)
}
