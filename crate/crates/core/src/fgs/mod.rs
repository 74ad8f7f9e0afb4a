//! Fermion Gaussian states of L modes stored as the Nambu correlation matrix
//! C_ab = ⟨Ψ_a† Ψ_b⟩ with Ψ = (c_0 … c_{L−1}, c_0† … c_{L−1}†).
//!
//! A quadratic Hamiltonian is
//! H = Σ_ij A_ij c_i†c_j + ½ Σ_ij (B_ij c_i†c_j† + h.c.) = ½ Ψ† H_BdG Ψ + ½ Tr A
//! with H_BdG = [[A, B], [−B̄, −Ā]]. Real-time evolution is e^{−iHt} with t as
//! given. Entropies are in bits.

mod kitaev;

pub use kitaev::{
    build_kitaev, kitaev_entropy_scan, lightcone_csv, quench_lightcone, scan_csv, KitaevScan,
};

use serde::{Deserialize, Serialize};

use crate::numerics::{
    binary_entropy, eigh, expm_hermitian, qr, ComplexMatrix, NumericsError, RngStream, C64,
};

pub const HERMITICITY_TOL: f64 = 1e-10;
/// BdG eigenvalues below this count as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-10;
/// Largest imaginary-time sub-step.
pub const IMAG_STEP: f64 = 0.1;
const ZERO_PROB_TOL: f64 = 1e-14;
const TIE_BREAK_SEED: u64 = 0x2e40_d0de;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FgsError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid Hamiltonian: {0}")]
    InvalidHamiltonian(String),
    #[error("mode count mismatch: state has {state}, Hamiltonian has {hamiltonian}")]
    ModeMismatch { state: usize, hamiltonian: usize },
    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),
    #[error("site {site} out of range for {l} modes")]
    SiteOutOfRange { site: usize, l: usize },
    #[error("outcome {outcome} on site {site} has zero probability")]
    ZeroProbability { site: usize, outcome: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticHamiltonian {
    l: usize,
    a: ComplexMatrix,
    b: ComplexMatrix,
}

impl QuadraticHamiltonian {
    pub fn new(a: ComplexMatrix, b: ComplexMatrix) -> Result<Self, FgsError> {
        let l = a.rows();
        if !a.is_square() || b.rows() != l || b.cols() != l {
            return Err(FgsError::InvalidHamiltonian(
                "A and B must both be L×L".into(),
            ));
        }
        a.check_finite()?;
        b.check_finite()?;
        if a.hermiticity_defect() > HERMITICITY_TOL {
            return Err(FgsError::InvalidHamiltonian(format!(
                "A is not Hermitian (defect {:.3e})",
                a.hermiticity_defect()
            )));
        }
        let anti = b
            .add(&b.transpose())?
            .data()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if anti > HERMITICITY_TOL {
            return Err(FgsError::InvalidHamiltonian(format!(
                "B is not antisymmetric (defect {anti:.3e})"
            )));
        }
        Ok(Self { l, a, b })
    }

    /// Entries of A and B with real and imaginary parts uniform in [−1, 1].
    pub fn random(l: usize, rng: &mut RngStream) -> Self {
        let mut draw = || C64::new(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0);
        let mut a = ComplexMatrix::zeros(l, l);
        let mut b = ComplexMatrix::zeros(l, l);
        for i in 0..l {
            a[(i, i)] = C64::new(draw().re, 0.0);
            for j in i + 1..l {
                let (x, y) = (draw(), draw());
                a[(i, j)] = x;
                a[(j, i)] = x.conj();
                b[(i, j)] = y;
                b[(j, i)] = -y;
            }
        }
        Self { l, a, b }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn b(&self) -> &ComplexMatrix {
        &self.b
    }

    /// The 2L×2L Bogoliubov–de Gennes matrix [[A, B], [−B̄, −Ā]].
    pub fn bdg(&self) -> ComplexMatrix {
        let l = self.l;
        ComplexMatrix::from_fn(2 * l, 2 * l, |r, c| match (r < l, c < l) {
            (true, true) => self.a[(r, c)],
            (true, false) => self.b[(r, c - l)],
            (false, true) => -self.b[(r - l, c)].conj(),
            (false, false) => -self.a[(r - l, c - l)].conj(),
        })
    }

    /// Ascending BdG spectrum; it is symmetric under ε → −ε.
    pub fn bdg_spectrum(&self) -> Result<Vec<f64>, FgsError> {
        Ok(eigh(&self.bdg())?.0)
    }
}

/// Nambu correlation matrix C = [[⟨c†c⟩, ⟨c†c†⟩], [⟨cc⟩, ⟨cc†⟩]].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgsState {
    l: usize,
    c: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub state: FgsState,
    pub energy: f64,
    /// Number of zero-energy BdG pairs that were resolved by tie-breaking.
    pub zero_modes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMode {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgsMeasurement {
    pub outcome: usize,
    /// Probability of the observed outcome.
    pub prob: f64,
}

fn swap_perm(l: usize) -> impl Fn(usize) -> usize {
    move |x| if x < l { x + l } else { x - l }
}

impl FgsState {
    /// Product state with the listed modes occupied.
    pub fn from_filled(l: usize, filled: &[usize]) -> Result<Self, FgsError> {
        let mut occ = vec![0.0; l];
        for &i in filled {
            if i >= l {
                return Err(FgsError::SiteOutOfRange { site: i, l });
            }
            occ[i] = 1.0;
        }
        let c = ComplexMatrix::from_fn(2 * l, 2 * l, |r, col| {
            if r != col {
                C64::new(0.0, 0.0)
            } else if r < l {
                C64::new(occ[r], 0.0)
            } else {
                C64::new(1.0 - occ[r - l], 0.0)
            }
        });
        Ok(Self { l, c })
    }

    pub fn vacuum(l: usize) -> Self {
        Self::from_filled(l, &[]).expect("no filled modes")
    }

    /// Validates a Nambu correlation matrix against the Hermiticity and
    /// particle-hole constraints.
    pub fn from_correlation(c: ComplexMatrix) -> Result<Self, FgsError> {
        if !c.is_square() || c.rows() % 2 != 0 {
            return Err(FgsError::InvalidState("C must be 2L×2L".into()));
        }
        let s = Self { l: c.rows() / 2, c };
        let (herm, ph) = (s.c.hermiticity_defect(), s.particle_hole_defect());
        if herm > 1e-8 || ph > 1e-8 {
            return Err(FgsError::InvalidState(format!(
                "Hermiticity defect {herm:.3e}, particle-hole defect {ph:.3e}"
            )));
        }
        Ok(s)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn correlation(&self) -> &ComplexMatrix {
        &self.c
    }

    /// ⟨c_i† c_j⟩.
    pub fn hopping_block(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.l, self.l, |i, j| self.c[(i, j)])
    }

    /// ⟨c_i c_j⟩.
    pub fn pairing_block(&self) -> ComplexMatrix {
        let l = self.l;
        ComplexMatrix::from_fn(l, l, |i, j| self.c[(l + i, j)])
    }

    pub fn occupations(&self) -> Vec<f64> {
        (0..self.l).map(|i| self.c[(i, i)].re).collect()
    }

    pub fn particle_number(&self) -> f64 {
        self.occupations().iter().sum()
    }

    /// max |⟨cc†⟩ − (I − ⟨c†c⟩ᵀ)| and the matching check on the off-diagonal blocks.
    pub fn particle_hole_defect(&self) -> f64 {
        let l = self.l;
        let p = swap_perm(l);
        let mut worst: f64 = 0.0;
        for r in 0..2 * l {
            for c in 0..2 * l {
                let expected = if r == c {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                } - self.c[(p(c), p(r))];
                worst = worst.max((self.c[(r, c)] - expected).norm());
            }
        }
        worst
    }

    /// max |C² − C|; zero for pure states.
    pub fn purity_defect(&self) -> f64 {
        let sq = self.c.matmul(&self.c).expect("square");
        sq.max_abs_diff(&self.c)
    }

    /// G = ⟨ΨΨ†⟩ = I − Cᵀ, the projector onto the annihilator space of a pure state.
    fn g(&self) -> ComplexMatrix {
        let n = 2 * self.l;
        ComplexMatrix::from_fn(n, n, |r, c| if r == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - self.c[(c, r)])
    }

    fn from_g(l: usize, g: &ComplexMatrix) -> Self {
        let n = 2 * l;
        let c = ComplexMatrix::from_fn(n, n, |r, col| if r == col { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) } - g[(col, r)]);
        Self { l, c }
    }

    fn from_annihilators(l: usize, v: &ComplexMatrix) -> Result<Self, FgsError> {
        let g = v.matmul(&v.adjoint())?;
        let mut s = Self::from_g(l, &g);
        s.symmetrize();
        Ok(s)
    }

    /// Re-imposes Hermiticity and particle-hole symmetry exactly.
    fn symmetrize(&mut self) {
        let n = 2 * self.l;
        let p = swap_perm(self.l);
        let old = self.c.clone();
        self.c = ComplexMatrix::from_fn(n, n, |r, c| {
            let herm = (old[(r, c)] + old[(c, r)].conj()) / 2.0;
            let id = if r == c { 1.0 } else { 0.0 };
            let ph = C64::new(id, 0.0) - (old[(p(c), p(r))] + old[(p(r), p(c))].conj()) / 2.0;
            (herm + ph) / 2.0
        });
    }

    /// Orthonormal basis of the annihilator space (columns), for pure states.
    fn annihilators(&self) -> Result<ComplexMatrix, FgsError> {
        let defect = self.purity_defect();
        if defect > 1e-6 {
            return Err(FgsError::InvalidState(format!(
                "imaginary-time evolution needs a pure state (C² − C defect {defect:.3e})"
            )));
        }
        let (_, vecs) = eigh(&self.g())?;
        let n = 2 * self.l;
        Ok(ComplexMatrix::from_fn(n, self.l, |r, c| {
            vecs[(r, n - self.l + c)]
        }))
    }

    /// Real-antisymmetric Majorana covariance M_ab = (i/2)⟨[γ_a, γ_b]⟩ with
    /// γ_{2i} = c_i + c_i† and γ_{2i+1} = i(c_i† − c_i).
    pub fn to_majorana(&self) -> Vec<f64> {
        let l = self.l;
        let n = 2 * l;
        let om = omega(l);
        let p = swap_perm(l);
        // ⟨Ψ_x Ψ_y⟩ = C_{x̄ y}
        let f = ComplexMatrix::from_fn(n, n, |x, y| self.c[(p(x), y)]);
        let prod = om
            .matmul(&f)
            .and_then(|m| m.matmul(&om.transpose()))
            .expect("square");
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = if a == b {
                    0.0
                } else {
                    (C64::new(0.0, 1.0) * prod[(a, b)]).re
                };
            }
        }
        m
    }

    /// Inverse of [`FgsState::to_majorana`].
    pub fn from_majorana(l: usize, m: &[f64]) -> Result<Self, FgsError> {
        let n = 2 * l;
        if m.len() != n * n {
            return Err(FgsError::InvalidState(format!(
                "Majorana covariance of length {} for {l} modes",
                m.len()
            )));
        }
        let om = omega(l);
        // ⟨γγᵀ⟩ = I − iM
        let gg = ComplexMatrix::from_fn(n, n, |a, b| {
            C64::new(if a == b { 1.0 } else { 0.0 }, -m[a * n + b])
        });
        // ⟨ΨΨᵀ⟩ = Ω⁻¹ ⟨γγᵀ⟩ Ω⁻ᵀ with Ω⁻¹ = Ω†/2
        let f = om
            .adjoint()
            .matmul(&gg)?
            .matmul(&om.conj())?
            .scale(C64::new(0.25, 0.0));
        let p = swap_perm(l);
        Self::from_correlation(ComplexMatrix::from_fn(n, n, |x, y| f[(p(x), y)]))
    }

    fn check_modes(&self, h: &QuadraticHamiltonian) -> Result<(), FgsError> {
        if h.l != self.l {
            return Err(FgsError::ModeMismatch {
                state: self.l,
                hamiltonian: h.l,
            });
        }
        Ok(())
    }

    /// ⟨H⟩ = Σ A_ij⟨c_i†c_j⟩ + Re Σ B_ij⟨c_i†c_j†⟩.
    pub fn energy(&self, h: &QuadraticHamiltonian) -> Result<f64, FgsError> {
        self.check_modes(h)?;
        let l = self.l;
        let mut hop = C64::new(0.0, 0.0);
        let mut pair = C64::new(0.0, 0.0);
        for i in 0..l {
            for j in 0..l {
                hop += h.a[(i, j)] * self.c[(i, j)];
                pair += h.b[(i, j)] * self.c[(i, l + j)];
            }
        }
        Ok(hop.re + pair.re)
    }

    /// Evolves by e^{−iHt} (real) or e^{−Hτ} followed by renormalization
    /// (imaginary, applied in sub-steps of at most [`IMAG_STEP`]).
    pub fn evolve(
        &mut self,
        h: &QuadraticHamiltonian,
        t: f64,
        mode: EvolutionMode,
    ) -> Result<(), FgsError> {
        self.check_modes(h)?;
        if !t.is_finite() {
            return Err(FgsError::InvalidArgument(format!("time {t}")));
        }
        if t == 0.0 {
            return Ok(());
        }
        let bdg = h.bdg();
        match mode {
            EvolutionMode::Real => {
                // C ↦ Ū C Uᵀ with U = e^{−iH_BdG t}
                let u = expm_hermitian(&bdg, t)?;
                self.c = u.conj().matmul(&self.c)?.matmul(&u.transpose())?;
                self.symmetrize();
            }
            EvolutionMode::Imaginary => {
                if t < 0.0 {
                    return Err(FgsError::InvalidArgument(format!("imaginary time {t} < 0")));
                }
                let steps = (t / IMAG_STEP).ceil().max(1.0) as usize;
                let dt = t / steps as f64;
                let (vals, vecs) = eigh(&bdg)?;
                let prop = crate::numerics::spectral_apply(&vals, &vecs, |e| {
                    C64::new((e * dt).exp(), 0.0)
                });
                let mut v = self.annihilators()?;
                for _ in 0..steps {
                    v = qr(&prop.matmul(&v)?)?.0;
                }
                *self = Self::from_annihilators(self.l, &v)?;
            }
        }
        Ok(())
    }

    /// Von Neumann entropy in bits of the modes in `subsystem`.
    pub fn entropy(&self, subsystem: &[usize]) -> Result<f64, FgsError> {
        let l = self.l;
        if subsystem.is_empty() || subsystem.len() >= l {
            return Err(FgsError::InvalidSubsystem(format!(
                "{subsystem:?} is not a proper nonempty subset of {l} modes"
            )));
        }
        for (k, &i) in subsystem.iter().enumerate() {
            if i >= l || subsystem[..k].contains(&i) {
                return Err(FgsError::InvalidSubsystem(format!("{subsystem:?}")));
            }
        }
        let idx: Vec<usize> = subsystem
            .iter()
            .copied()
            .chain(subsystem.iter().map(|i| i + l))
            .collect();
        let sub = ComplexMatrix::from_fn(idx.len(), idx.len(), |r, c| self.c[(idx[r], idx[c])]);
        let (nu, _) = eigh(&sub)?;
        // eigenvalues pair as (ν, 1 − ν); each mode appears twice
        Ok(nu
            .iter()
            .map(|&v| binary_entropy(v.clamp(0.0, 1.0)))
            .sum::<f64>()
            / 2.0)
    }

    /// P(n_site = 1) = ⟨c†c⟩.
    pub fn occupation_probability(&self, site: usize) -> Result<f64, FgsError> {
        if site >= self.l {
            return Err(FgsError::SiteOutOfRange { site, l: self.l });
        }
        Ok(self.c[(site, site)].re.clamp(0.0, 1.0))
    }

    /// Projective occupation measurement. `forced` selects the outcome,
    /// otherwise it is drawn from `rng`. The conditional state follows from a
    /// rank-two update of the Majorana covariance.
    pub fn measure(
        &mut self,
        site: usize,
        forced: Option<usize>,
        rng: Option<&mut RngStream>,
    ) -> Result<FgsMeasurement, FgsError> {
        let p1 = self.occupation_probability(site)?;
        let outcome = match (forced, rng) {
            (Some(k), _) if k > 1 => return Err(FgsError::InvalidArgument(format!("outcome {k}"))),
            (Some(k), _) => k,
            (None, Some(r)) => usize::from(r.uniform() < p1),
            (None, None) => {
                return Err(FgsError::InvalidArgument(
                    "measurement needs a forced outcome or a random stream".into(),
                ))
            }
        };
        let prob = if outcome == 1 { p1 } else { 1.0 - p1 };
        if prob < ZERO_PROB_TOL {
            return Err(FgsError::ZeroProbability { site, outcome });
        }
        let n = 2 * self.l;
        let m = self.to_majorana();
        let (a, b) = (2 * site, 2 * site + 1);
        // iγ_aγ_b = 2n − 1 has eigenvalue s
        let s = if outcome == 1 { 1.0 } else { -1.0 };
        let denom = 1.0 + s * m[a * n + b];
        let mut out = m.clone();
        for c in 0..n {
            for d in 0..n {
                if [a, b].contains(&c) || [a, b].contains(&d) {
                    out[c * n + d] = 0.0;
                } else {
                    out[c * n + d] = m[c * n + d]
                        + s * (m[a * n + d] * m[b * n + c] - m[a * n + c] * m[b * n + d]) / denom;
                }
            }
        }
        out[a * n + b] = s;
        out[b * n + a] = -s;
        let mut next = Self::from_majorana(self.l, &out)?;
        next.symmetrize();
        *self = next;
        Ok(FgsMeasurement { outcome, prob })
    }
}

/// Rows γ_{2i} = Ψ_i + Ψ_{L+i}, γ_{2i+1} = −iΨ_i + iΨ_{L+i}.
fn omega(l: usize) -> ComplexMatrix {
    let mut om = ComplexMatrix::zeros(2 * l, 2 * l);
    for i in 0..l {
        om[(2 * i, i)] = C64::new(1.0, 0.0);
        om[(2 * i, l + i)] = C64::new(1.0, 0.0);
        om[(2 * i + 1, i)] = C64::new(0.0, -1.0);
        om[(2 * i + 1, l + i)] = C64::new(0.0, 1.0);
    }
    om
}

/// Ground state from the BdG eigenvectors: positive-energy modes annihilate
/// it. A zero-energy space is split deterministically by the signs of a fixed
/// pseudo-random BdG matrix projected onto it.
pub fn fgs_ground_state(h: &QuadraticHamiltonian) -> Result<GroundState, FgsError> {
    let l = h.l;
    let n = 2 * l;
    let (vals, vecs) = eigh(&h.bdg())?;
    let zero: Vec<usize> = (0..n).filter(|&k| vals[k].abs() < ZERO_MODE_TOL).collect();
    let mut cols: Vec<Vec<C64>> = (0..n)
        .filter(|&k| vals[k] >= ZERO_MODE_TOL)
        .map(|k| vecs.column(k))
        .collect();
    let zero_modes = zero.len() / 2;
    if !zero.is_empty() {
        let z = ComplexMatrix::from_fn(n, zero.len(), |r, c| vecs[(r, zero[c])]);
        let d = QuadraticHamiltonian::random(l, &mut RngStream::new(TIE_BREAK_SEED)).bdg();
        let k = z.adjoint().matmul(&d)?.matmul(&z)?;
        let (kv, ku) = eigh(&k)?;
        for j in (0..zero.len()).filter(|&j| kv[j] > 0.0) {
            let coeff = ku.column(j);
            cols.push(
                (0..n)
                    .map(|r| (0..zero.len()).map(|c| z[(r, c)] * coeff[c]).sum())
                    .collect(),
            );
        }
    }
    if cols.len() != l {
        return Err(FgsError::InvalidHamiltonian(
            "could not resolve the zero-mode space".into(),
        ));
    }
    let v = ComplexMatrix::from_fn(n, l, |r, c| cols[c][r]);
    let state = FgsState::from_annihilators(l, &v)?;
    let positive: f64 = vals.iter().filter(|&&e| e > 0.0).sum();
    let energy = 0.5 * h.a.trace().re - 0.5 * positive;
    Ok(GroundState {
        state,
        energy,
        zero_modes,
    })
}

/// ⟨c_i†(t) c_j(0)⟩ with c(t) = e^{iHt} c e^{−iHt}.
pub fn two_time_correlation(
    s0: &FgsState,
    h: &QuadraticHamiltonian,
    t: f64,
) -> Result<ComplexMatrix, FgsError> {
    s0.check_modes(h)?;
    if !t.is_finite() {
        return Err(FgsError::InvalidArgument(format!("time {t}")));
    }
    let l = s0.l;
    // c_i†(t) = Σ_x Ū_ix Ψ_x† with U = e^{−iH_BdG t}
    let u = expm_hermitian(&h.bdg(), t)?;
    Ok(ComplexMatrix::from_fn(l, l, |i, j| {
        (0..2 * l).map(|x| u[(i, x)].conj() * s0.c[(x, j)]).sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dimer() -> QuadraticHamiltonian {
        let a = ComplexMatrix::from_real(2, 2, &[0.0, -1.0, -1.0, 0.0]).unwrap();
        QuadraticHamiltonian::new(a, ComplexMatrix::zeros(2, 2)).unwrap()
    }

    #[test]
    fn single_filled_mode() {
        let h = QuadraticHamiltonian::new(
            ComplexMatrix::from_real(1, 1, &[-1.0]).unwrap(),
            ComplexMatrix::zeros(1, 1),
        )
        .unwrap();
        let gs = fgs_ground_state(&h).unwrap();
        assert!((gs.state.occupations()[0] - 1.0).abs() < 1e-12);
        assert!((gs.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopping_dimer_ground_state() {
        // H = −(c₀†c₁ + h.c.) − μ n with μ = 0 has the bonding orbital filled
        let gs = fgs_ground_state(&dimer()).unwrap();
        let hop = gs.state.hopping_block();
        for (i, j) in [(0, 0), (1, 1), (0, 1)] {
            assert!((hop[(i, j)].re - 0.5).abs() < 1e-12);
        }
        assert!((gs.state.entropy(&[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!(gs.state.purity_defect() < 1e-12);
    }

    #[test]
    fn dimer_measurement() {
        let mut s = fgs_ground_state(&dimer()).unwrap().state;
        let m = s.measure(0, Some(1), None).unwrap();
        assert!((m.prob - 0.5).abs() < 1e-12);
        let occ = s.occupations();
        assert!((occ[0] - 1.0).abs() < 1e-12 && occ[1].abs() < 1e-12);
        assert!(s.purity_defect() < 1e-10);
        let m = s.measure(0, Some(1), None).unwrap();
        assert!((m.prob - 1.0).abs() < 1e-12);
        assert!(matches!(
            s.measure(0, Some(0), None),
            Err(FgsError::ZeroProbability { .. })
        ));
    }

    #[test]
    fn product_states() {
        let s = FgsState::from_filled(4, &[0, 2]).unwrap();
        assert_eq!(s.entropy(&[0, 1]).unwrap(), 0.0);
        assert_eq!(s.particle_number(), 2.0);
        assert!(
            s.entropy(&[]).is_err()
                && s.entropy(&[0, 1, 2, 3]).is_err()
                && s.entropy(&[5]).is_err()
        );
        assert!(FgsState::from_filled(2, &[2]).is_err());
    }

    #[test]
    fn majorana_round_trip() {
        let mut rng = RngStream::new(4);
        let h = QuadraticHamiltonian::random(4, &mut rng);
        let s = fgs_ground_state(&h).unwrap().state;
        let m = s.to_majorana();
        let back = FgsState::from_majorana(4, &m).unwrap();
        assert!(back.correlation().max_abs_diff(s.correlation()) < 1e-12);
        for a in 0..8 {
            for b in 0..8 {
                assert!((m[a * 8 + b] + m[b * 8 + a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let mut rng = RngStream::new(8);
        let h = QuadraticHamiltonian::random(3, &mut rng);
        let s0 = fgs_ground_state(&QuadraticHamiltonian::random(3, &mut rng))
            .unwrap()
            .state;
        let mut s = s0.clone();
        s.evolve(&h, 0.0, EvolutionMode::Real).unwrap();
        assert_eq!(s, s0);
        let c = two_time_correlation(&s0, &h, 0.0).unwrap();
        assert!(c.max_abs_diff(&s0.hopping_block()) < 1e-12);
        assert!(s.evolve(&h, f64::NAN, EvolutionMode::Real).is_err());
    }

    #[test]
    fn zero_modes_are_flagged() {
        // t = Δ, μ = 0: two unpaired Majorana end modes
        let h = build_kitaev(6, 1.0, 1.0, 0.0).unwrap();
        let gs = fgs_ground_state(&h).unwrap();
        assert_eq!(gs.zero_modes, 1);
        assert!(gs.state.purity_defect() < 1e-10 && gs.state.particle_hole_defect() < 1e-10);
        assert!((gs.state.energy(&h).unwrap() - gs.energy).abs() < 1e-10);
    }
}
