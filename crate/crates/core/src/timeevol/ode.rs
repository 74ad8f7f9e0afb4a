use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_dims, with_amplitudes, TimeEvolError};
use crate::circuit::StateVector;
use crate::hamiltonian::{pauli_sum_to_coo, PauliSum};
use crate::numerics::{norm, ComplexMatrix, SparseCOO, C64, HERMITIAN_TOL};

type DenseFn = Arc<dyn Fn(f64) -> ComplexMatrix + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Hermitian generator H(t) of dψ/dt = −iH(t)ψ.
#[derive(Clone)]
pub enum Generator {
    /// Time-independent sparse matrix.
    Constant(SparseCOO),
    /// Σ_k f_k(t) H_k with fixed sparse H_k.
    Driven(Vec<(ScalarFn, SparseCOO)>),
    /// Arbitrary dense H(t).
    Dense { dim: usize, f: DenseFn },
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Constant(h) => write!(f, "Constant(dim={})", h.dim()),
            Generator::Driven(parts) => write!(f, "Driven({} parts)", parts.len()),
            Generator::Dense { dim, .. } => write!(f, "Dense(dim={dim})"),
        }
    }
}

impl Generator {
    pub fn from_pauli_sum(h: &PauliSum) -> Result<Self, TimeEvolError> {
        Ok(Generator::Constant(pauli_sum_to_coo(h).map_err(|e| {
            TimeEvolError::InvalidArgument(e.to_string())
        })?))
    }

    pub fn dense(dim: usize, f: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        Generator::Dense {
            dim,
            f: Arc::new(f),
        }
    }

    pub fn driven(parts: Vec<(ScalarFn, SparseCOO)>) -> Self {
        Generator::Driven(parts)
    }

    pub fn dim(&self) -> usize {
        match self {
            Generator::Constant(h) => h.dim(),
            Generator::Driven(parts) => parts.first().map_or(0, |p| p.1.dim()),
            Generator::Dense { dim, .. } => *dim,
        }
    }

    /// Hermiticity check at time t.
    pub fn check_hermitian(&self, t: f64) -> Result<(), TimeEvolError> {
        let defect = match self {
            Generator::Constant(h) => h.hermiticity_defect() / h.max_abs().max(1.0),
            Generator::Driven(parts) => parts
                .iter()
                .map(|(_, h)| h.hermiticity_defect() / h.max_abs().max(1.0))
                .fold(0.0, f64::max),
            Generator::Dense { dim, f } => {
                let m = f(t);
                if m.rows() != *dim || m.cols() != *dim {
                    return Err(TimeEvolError::InvalidArgument(format!(
                        "generator returned {}x{} for dimension {dim}",
                        m.rows(),
                        m.cols()
                    )));
                }
                m.hermiticity_defect() / m.frobenius_norm().max(1.0)
            }
        };
        if defect > HERMITIAN_TOL.max(1e-8) {
            return Err(TimeEvolError::NotHermitian { t, defect });
        }
        Ok(())
    }

    /// out = −i H(t) v
    fn rhs(&self, t: f64, v: &[C64], out: &mut [C64]) {
        let minus_i = C64::new(0.0, -1.0);
        match self {
            Generator::Constant(h) => {
                h.matvec_into(v, out);
            }
            Generator::Driven(parts) => {
                out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
                let mut tmp = vec![C64::new(0.0, 0.0); v.len()];
                for (f, h) in parts {
                    let c = f(t);
                    if c == 0.0 {
                        continue;
                    }
                    h.matvec_into(v, &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, x)| *o += c * x);
                }
            }
            Generator::Dense { f, .. } => {
                let m = f(t);
                let y = m.mul_vec(v).expect("dimension checked");
                out.copy_from_slice(&y);
            }
        }
        out.iter_mut().for_each(|o| *o *= minus_i);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeMethod {
    Rk4Fixed,
    DopriAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeSettings {
    pub method: OdeMethod,
    pub rtol: f64,
    pub atol: f64,
    /// Step for the fixed-step method and initial guess for the adaptive one.
    pub step: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self {
            method: OdeMethod::DopriAdaptive,
            rtol: 1e-6,
            atol: 1e-9,
            step: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeResult {
    pub states: Vec<StateVector>,
    /// Largest |‖ψ(t)‖ − ‖ψ₀‖| over the reported times.
    pub max_norm_drift: f64,
    pub steps: usize,
}

fn axpy(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])], h: f64) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

fn rk4_step(g: &Generator, t: f64, y: &mut [C64], h: f64, k: &mut [Vec<C64>; 4], tmp: &mut [C64]) {
    g.rhs(t, y, &mut k[0]);
    axpy(tmp, y, &[(0.5, &k[0])], h);
    g.rhs(t + h / 2.0, tmp, &mut k[1]);
    axpy(tmp, y, &[(0.5, &k[1])], h);
    g.rhs(t + h / 2.0, tmp, &mut k[2]);
    axpy(tmp, y, &[(1.0, &k[2])], h);
    g.rhs(t + h, tmp, &mut k[3]);
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Attempts one Dormand–Prince step; returns the new state and the scaled
/// error norm.
fn dopri_step(
    g: &Generator,
    t: f64,
    y: &[C64],
    h: f64,
    rtol: f64,
    atol: f64,
    k: &mut [Vec<C64>; 7],
) -> (Vec<C64>, f64) {
    let dim = y.len();
    let mut stage = vec![C64::new(0.0, 0.0); dim];
    g.rhs(t, y, &mut k[0]);
    for s in 1..7 {
        for i in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..s {
                if A[s][j] != 0.0 {
                    acc += A[s][j] * k[j][i];
                }
            }
            stage[i] = y[i] + h * acc;
        }
        g.rhs(t + C[s] * h, &stage, &mut k[s]);
    }
    let mut y5 = vec![C64::new(0.0, 0.0); dim];
    let mut err = 0.0f64;
    for i in 0..dim {
        let mut a5 = C64::new(0.0, 0.0);
        let mut a4 = C64::new(0.0, 0.0);
        for s in 0..7 {
            a5 += B5[s] * k[s][i];
            a4 += B4[s] * k[s][i];
        }
        y5[i] = y[i] + h * a5;
        let e = (h * (a5 - a4)).norm();
        let scale = atol + rtol * y[i].norm().max(y5[i].norm());
        err = err.max(e / scale);
    }
    (y5, err)
}

/// Integrates dψ/dt = −iH(t)ψ from t = 0 to each requested time (taken in
/// ascending order). The state is never renormalized; the drift is reported.
pub fn ode_evol(
    g: &Generator,
    psi0: &StateVector,
    times: &[f64],
    settings: &OdeSettings,
) -> Result<OdeResult, TimeEvolError> {
    check_dims(g.dim(), psi0)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(TimeEvolError::InvalidArgument(
            "times must be finite, non-negative and ascending".into(),
        ));
    }
    if !(settings.step > 0.0 && settings.rtol > 0.0 && settings.atol >= 0.0) {
        return Err(TimeEvolError::InvalidArgument(format!(
            "ODE settings {settings:?}"
        )));
    }
    g.check_hermitian(0.0)?;
    if let Some(&t_end) = times.last() {
        g.check_hermitian(t_end)?;
    }
    let dim = g.dim();
    let n0 = norm(psi0.amplitudes());
    let mut y = psi0.amplitudes().to_vec();
    let mut t = 0.0;
    let mut h = settings.step;
    let mut steps = 0;
    let mut states = Vec::with_capacity(times.len());
    let mut drift = 0.0f64;
    let zero = || vec![C64::new(0.0, 0.0); dim];
    let mut k4: [Vec<C64>; 4] = [zero(), zero(), zero(), zero()];
    let mut k7: [Vec<C64>; 7] = [zero(), zero(), zero(), zero(), zero(), zero(), zero()];
    let mut tmp = zero();
    for &target in times {
        match settings.method {
            OdeMethod::Rk4Fixed => {
                let span = target - t;
                if span > 0.0 {
                    let n_steps = (span / settings.step).ceil().max(1.0) as usize;
                    let hh = span / n_steps as f64;
                    for _ in 0..n_steps {
                        rk4_step(g, t, &mut y, hh, &mut k4, &mut tmp);
                        t += hh;
                        steps += 1;
                    }
                }
                t = target;
            }
            OdeMethod::DopriAdaptive => {
                while t < target {
                    let hh = h.min(target - t);
                    if hh < 1e-14 * t.abs().max(1.0) {
                        return Err(TimeEvolError::StepUnderflow { t, h: hh });
                    }
                    let (y_new, err) =
                        dopri_step(g, t, &y, hh, settings.rtol, settings.atol, &mut k7);
                    if !err.is_finite() {
                        h = hh / 10.0;
                        continue;
                    }
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    if err <= 1.0 {
                        y = y_new;
                        t = if target - t - hh <= 1e-15 * target.abs() {
                            target
                        } else {
                            t + hh
                        };
                        steps += 1;
                        h = hh * factor;
                    } else {
                        h = hh * factor.min(1.0);
                    }
                }
            }
        }
        drift = drift.max((norm(&y) - n0).abs());
        states.push(with_amplitudes(psi0, y.clone())?);
    }
    Ok(OdeResult {
        states,
        max_norm_drift: drift,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gates::pauli_matrix;

    #[test]
    fn constant_generator_matches_ed() {
        let z = pauli_matrix(3);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(1, 2, vec![C64::new(s, 0.0); 2]).unwrap();
        let g = Generator::Constant(SparseCOO::from_dense(&z).unwrap());
        let times = [0.5, 1.0, 3.0];
        let exact = super::super::ed_evol(&z, &plus, &times).unwrap();
        for method in [OdeMethod::DopriAdaptive, OdeMethod::Rk4Fixed] {
            let settings = OdeSettings {
                method,
                step: 1e-3,
                ..Default::default()
            };
            let out = ode_evol(&g, &plus, &times, &settings).unwrap();
            for (a, b) in out.states.iter().zip(&exact) {
                let d: f64 = a
                    .amplitudes()
                    .iter()
                    .zip(b.amplitudes())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(d < 1e-5, "{method:?}: {d}");
            }
        }
    }

    #[test]
    fn non_hermitian_generators_are_rejected() {
        let g = Generator::dense(2, |_| {
            ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
        });
        let r = ode_evol(
            &g,
            &StateVector::zero(1, 2),
            &[1.0],
            &OdeSettings::default(),
        );
        assert!(matches!(r, Err(TimeEvolError::NotHermitian { .. })));
    }

    #[test]
    fn zero_times_return_the_input() {
        let g = Generator::Constant(SparseCOO::from_dense(&pauli_matrix(1)).unwrap());
        let out = ode_evol(
            &g,
            &StateVector::zero(1, 2),
            &[0.0],
            &OdeSettings::default(),
        )
        .unwrap();
        assert_eq!(out.states[0], StateVector::zero(1, 2));
        assert_eq!(out.steps, 0);
    }
}
