//! Time evolution ψ(t) = e^{−iHt}ψ₀: dense diagonalization, Krylov,
//! Chebyshev, ODE integration for H(t), and digital-analog circuits.

mod analog;
mod chebyshev;
mod lanczos;
mod ode;

pub use analog::{run_analog_circuit, AnalogBlock, AnalogCircuit};
pub use chebyshev::{bessel_j, chebyshev_evol, estimate_k};
pub use lanczos::{
    estimate_spectral_bounds, krylov_evol, lanczos, lanczos_ground_energy, lanczos_ground_state,
    LanczosRun,
};
pub use ode::{ode_evol, Generator, OdeMethod, OdeResult, OdeSettings};

use serde::{Deserialize, Serialize};

use crate::circuit::{CircuitError, StateVector};
use crate::numerics::{eigh, ComplexMatrix, NumericsError, C64};

/// Largest dense dimension accepted by [`ed_evol`].
pub const ED_MAX_DIM: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimeEvolError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("dimension {dim} exceeds the limit of {max}")]
    DimensionGuard { dim: usize, max: usize },
    #[error("generator is not Hermitian at t = {t} (defect {defect:.3e})")]
    NotHermitian { t: f64, defect: f64 },
    #[error("norm drifted by {drift:.3e}; spectral bounds do not bracket the spectrum")]
    BoundsViolation { drift: f64 },
    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub e_min: f64,
    pub e_max: f64,
}

impl SpectralBounds {
    pub fn new(e_min: f64, e_max: f64) -> Result<Self, TimeEvolError> {
        if !(e_min.is_finite() && e_max.is_finite()) || e_min > e_max {
            return Err(TimeEvolError::InvalidArgument(format!(
                "bounds ({e_min}, {e_max})"
            )));
        }
        Ok(Self { e_min, e_max })
    }

    pub fn width(&self) -> f64 {
        self.e_max - self.e_min
    }

    pub fn center(&self) -> f64 {
        (self.e_max + self.e_min) / 2.0
    }
}

fn check_dims(dim: usize, psi0: &StateVector) -> Result<(), TimeEvolError> {
    if psi0.dim() != dim {
        return Err(CircuitError::SizeMismatch(format!(
            "operator of dimension {dim} on a state of dimension {}",
            psi0.dim()
        ))
        .into());
    }
    Ok(())
}

fn with_amplitudes(psi0: &StateVector, amps: Vec<C64>) -> Result<StateVector, TimeEvolError> {
    Ok(StateVector::from_amplitudes(psi0.n(), psi0.d(), amps)?)
}

/// Exact evolution through the eigendecomposition of a dense Hermitian `h`.
pub fn ed_evol(
    h: &ComplexMatrix,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Vec<StateVector>, TimeEvolError> {
    if h.rows() > ED_MAX_DIM {
        return Err(TimeEvolError::DimensionGuard {
            dim: h.rows(),
            max: ED_MAX_DIM,
        });
    }
    check_dims(h.rows(), psi0)?;
    let (vals, vecs) = eigh(h)?;
    let coeffs = vecs.adjoint().mul_vec(psi0.amplitudes())?;
    times
        .iter()
        .map(|&t| {
            let rotated: Vec<C64> = coeffs
                .iter()
                .zip(&vals)
                .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
                .collect();
            with_amplitudes(psi0, vecs.mul_vec(&rotated)?)
        })
        .collect()
}
