use super::{check_dims, with_amplitudes, SpectralBounds, TimeEvolError};
use crate::circuit::StateVector;
use crate::numerics::{eigh, inner, norm, ComplexMatrix, RngStream, SparseCOO, C64};

const BREAKDOWN_TOL: f64 = 1e-12;
/// Per-step tolerance of the a-posteriori Krylov error estimate.
const KRYLOV_STEP_TOL: f64 = 1e-12;

/// Tridiagonal Lanczos data; `basis` is empty when it was not stored.
#[derive(Debug, Clone)]
pub struct LanczosRun {
    pub alpha: Vec<f64>,
    /// `beta[j]` couples basis vectors j and j+1; one longer than `alpha`
    /// unless the run broke down.
    pub beta: Vec<f64>,
    pub basis: Vec<Vec<C64>>,
    pub breakdown: bool,
}

impl LanczosRun {
    fn tridiagonal(&self) -> ComplexMatrix {
        let m = self.alpha.len();
        ComplexMatrix::from_fn(m, m, |i, j| {
            if i == j {
                C64::new(self.alpha[i], 0.0)
            } else if i + 1 == j {
                C64::new(self.beta[i], 0.0)
            } else if j + 1 == i {
                C64::new(self.beta[j], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Ascending Ritz values and eigenvectors of T.
    pub fn ritz(&self) -> Result<(Vec<f64>, ComplexMatrix), TimeEvolError> {
        Ok(eigh(&self.tridiagonal())?)
    }
}

/// Lanczos tridiagonalization started from `v0`. With `store_basis` the
/// Krylov vectors are kept and fully reorthogonalized (two passes);
/// otherwise only the three-term recurrence runs.
pub fn lanczos(
    h: &SparseCOO,
    v0: &[C64],
    m: usize,
    store_basis: bool,
) -> Result<LanczosRun, TimeEvolError> {
    lanczos_until(h, v0, m, store_basis, |_| Ok(false))
}

/// Lanczos that also stops once `stop` returns true; `stop` sees the run
/// after every completed step.
fn lanczos_until(
    h: &SparseCOO,
    v0: &[C64],
    m: usize,
    store_basis: bool,
    mut stop: impl FnMut(&LanczosRun) -> Result<bool, TimeEvolError>,
) -> Result<LanczosRun, TimeEvolError> {
    let dim = h.dim();
    if v0.len() != dim {
        return Err(TimeEvolError::InvalidArgument(format!(
            "start vector of length {} for dimension {dim}",
            v0.len()
        )));
    }
    let nv = norm(v0);
    if nv == 0.0 || !nv.is_finite() {
        return Err(TimeEvolError::InvalidArgument(
            "start vector has zero or non-finite norm".into(),
        ));
    }
    let m = m.min(dim).max(1);
    let mut v: Vec<C64> = v0.iter().map(|x| x / nv).collect();
    let mut prev = vec![C64::new(0.0, 0.0); dim];
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut run = LanczosRun {
        alpha: Vec::with_capacity(m),
        beta: Vec::with_capacity(m),
        basis: Vec::new(),
        breakdown: false,
    };
    for j in 0..m {
        h.matvec_into(&v, &mut w);
        let a = inner(&v, &w).re;
        let b_prev = if j > 0 { run.beta[j - 1] } else { 0.0 };
        for k in 0..dim {
            w[k] -= a * v[k] + b_prev * prev[k];
        }
        if store_basis {
            run.basis.push(v.clone());
            for _ in 0..2 {
                for q in &run.basis {
                    let c = inner(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
        }
        run.alpha.push(a);
        let b = norm(&w);
        if b < BREAKDOWN_TOL {
            run.breakdown = true;
            break;
        }
        run.beta.push(b);
        if j + 1 == m || stop(&run)? {
            break;
        }
        std::mem::swap(&mut prev, &mut v);
        v.iter_mut().zip(&w).for_each(|(x, y)| *x = y / b);
    }
    Ok(run)
}

/// e^{−iTτ} e₁ in the Ritz basis.
fn propagate_e1(vals: &[f64], vecs: &ComplexMatrix, tau: f64) -> Vec<C64> {
    let m = vals.len();
    let mut out = vec![C64::new(0.0, 0.0); m];
    for (k, &e) in vals.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e * tau) * vecs[(0, k)].conj();
        for (i, o) in out.iter_mut().enumerate() {
            *o += vecs[(i, k)] * phase;
        }
    }
    out
}

fn krylov_advance(h: &SparseCOO, psi: &[C64], t: f64, m: usize) -> Result<Vec<C64>, TimeEvolError> {
    let mut cur = psi.to_vec();
    let mut remaining = t;
    while remaining != 0.0 {
        let nv = norm(&cur);
        if nv == 0.0 {
            break;
        }
        let run = lanczos(h, &cur, m, true)?;
        let (vals, vecs) = run.ritz()?;
        let mut tau = remaining;
        let coeffs = if run.breakdown {
            propagate_e1(&vals, &vecs, tau)
        } else {
            let b_last = run.beta[run.alpha.len() - 1];
            loop {
                let c = propagate_e1(&vals, &vecs, tau);
                let err = b_last * c[c.len() - 1].norm() * nv;
                if err <= KRYLOV_STEP_TOL || tau.abs() < 1e-14 * t.abs().max(1.0) {
                    break c;
                }
                tau /= 2.0;
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); cur.len()];
        for (q, c) in run.basis.iter().zip(&coeffs) {
            next.iter_mut().zip(q).for_each(|(x, y)| *x += c * nv * y);
        }
        cur = next;
        remaining -= tau;
        if run.breakdown || remaining.abs() < 1e-15 * t.abs() {
            break;
        }
    }
    Ok(cur)
}

/// Krylov propagation with subspace dimension `m`. Each time is reached by
/// successive Lanczos projections whose step length is halved until the
/// a-posteriori error estimate β_m |(e^{−iTτ}e₁)_m| falls below 1e-12.
pub fn krylov_evol(
    h: &SparseCOO,
    psi0: &StateVector,
    times: &[f64],
    m: usize,
) -> Result<Vec<StateVector>, TimeEvolError> {
    if m < 2 {
        return Err(TimeEvolError::InvalidArgument(format!(
            "Krylov dimension {m} < 2"
        )));
    }
    check_dims(h.dim(), psi0)?;
    times
        .iter()
        .map(|&t| with_amplitudes(psi0, krylov_advance(h, psi0.amplitudes(), t, m)?))
        .collect()
}

fn random_start(dim: usize, rng: &mut RngStream) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.uniform() - 0.5, rng.uniform() - 0.5))
        .collect()
}

/// Extremal Ritz values of a 40-step Lanczos run from a fixed pseudo-random
/// start, widened on each side by 1% of the half-width.
pub fn estimate_spectral_bounds(h: &SparseCOO) -> Result<SpectralBounds, TimeEvolError> {
    let mut rng = RngStream::new(0x5eed_b0d5);
    let start = random_start(h.dim(), &mut rng);
    let run = lanczos(h, &start, 40, h.dim() <= 1 << 16)?;
    let (vals, _) = run.ritz()?;
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    let margin = 0.01 * (hi - lo) / 2.0;
    SpectralBounds::new(lo - margin, hi + margin)
}

/// Ground energy from the three-term recurrence without a stored basis;
/// stops when the lowest Ritz value moves by less than `tol` over 10 steps.
pub fn lanczos_ground_energy(
    h: &SparseCOO,
    max_steps: usize,
    tol: f64,
    rng: &mut RngStream,
) -> Result<f64, TimeEvolError> {
    let start = random_start(h.dim(), rng);
    let mut last = f64::INFINITY;
    let run = lanczos_until(h, &start, max_steps, false, |run| {
        if run.alpha.len() % 10 != 0 {
            return Ok(false);
        }
        let e = run.ritz()?.0[0];
        let done = (last - e).abs() < tol;
        last = e;
        Ok(done)
    })?;
    Ok(run.ritz()?.0[0])
}

/// Ground energy and normalized eigenvector from an m-step reorthogonalized
/// Lanczos run.
pub fn lanczos_ground_state(
    h: &SparseCOO,
    m: usize,
    rng: &mut RngStream,
) -> Result<(f64, Vec<C64>), TimeEvolError> {
    let start = random_start(h.dim(), rng);
    let run = lanczos(h, &start, m, true)?;
    let (vals, vecs) = run.ritz()?;
    let mut v = vec![C64::new(0.0, 0.0); h.dim()];
    for (i, q) in run.basis.iter().enumerate() {
        let c = vecs[(i, 0)];
        v.iter_mut().zip(q).for_each(|(x, y)| *x += c * y);
    }
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    Ok((vals[0], v))
}
