use super::{NoiseConf, NoiseError};
use crate::circuit::gates::pauli_matrix;
use crate::circuit::{Circuit, StateVector};
use crate::numerics::{eigh, ComplexMatrix, C64};

/// Largest register [`density_matrix_run`] accepts (4ⁿ entries).
pub const DM_MAX_QUBITS: usize = 10;

/// ρ stored as the vector of its entries: wires 0..n index rows and wires
/// n..2n index columns, so ρ ↦ AρB† is A on the row wires and B̄ on the
/// column wires.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    vec: StateVector,
}

impl DensityMatrix {
    pub fn pure(psi: &StateVector) -> Result<Self, NoiseError> {
        if psi.d() != 2 {
            return Err(NoiseError::QubitsOnly(psi.d()));
        }
        let n = psi.n();
        if n > DM_MAX_QUBITS {
            return Err(NoiseError::MemoryGuard {
                n,
                max: DM_MAX_QUBITS,
            });
        }
        let a = psi.amplitudes();
        let data = a
            .iter()
            .flat_map(|x| a.iter().map(move |y| x * y.conj()))
            .collect();
        Ok(Self {
            n,
            vec: StateVector::from_amplitudes(2 * n, 2, data)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 1 << self.n;
        ComplexMatrix::from_fn(dim, dim, |r, c| self.vec.amplitudes()[r * dim + c])
    }

    pub fn trace(&self) -> C64 {
        let dim = 1 << self.n;
        (0..dim).map(|i| self.vec.amplitudes()[i * dim + i]).sum()
    }

    pub fn purity(&self) -> f64 {
        self.vec.amplitudes().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64, NoiseError> {
        Ok(eigh(&self.matrix())?.0[0])
    }

    fn sandwich(
        &self,
        wires: &[usize],
        left: &ComplexMatrix,
        right: &ComplexMatrix,
    ) -> Result<StateVector, NoiseError> {
        let mut out = self.vec.clone();
        out.apply_matrix(wires, left)?;
        let cols: Vec<usize> = wires.iter().map(|w| w + self.n).collect();
        out.apply_matrix(&cols, &right.conj())?;
        Ok(out)
    }

    /// ρ ↦ UρU†.
    pub fn apply_unitary(&mut self, wires: &[usize], u: &ComplexMatrix) -> Result<(), NoiseError> {
        self.vec = self.sandwich(wires, u, u)?;
        Ok(())
    }

    /// ρ ↦ Σ K ρ K†.
    pub fn apply_kraus(
        &mut self,
        wires: &[usize],
        ops: &[ComplexMatrix],
    ) -> Result<(), NoiseError> {
        let mut acc = vec![C64::new(0.0, 0.0); self.vec.dim()];
        for k in ops {
            let term = self.sandwich(wires, k, k)?;
            acc.iter_mut()
                .zip(term.amplitudes())
                .for_each(|(a, t)| *a += t);
        }
        self.vec = StateVector::from_amplitudes(2 * self.n, 2, acc)?;
        Ok(())
    }

    /// Tr(ρ ⊗_s O_s) for single-site operators on distinct sites.
    pub fn expectation_local(&self, ops: &[(usize, ComplexMatrix)]) -> Result<C64, NoiseError> {
        let mut phi = self.vec.clone();
        for (site, m) in ops {
            if *site >= self.n {
                return Err(crate::circuit::CircuitError::WireOutOfRange {
                    wire: *site,
                    n: self.n,
                }
                .into());
            }
            phi.apply_matrix(&[*site], m)?;
        }
        let dim = 1 << self.n;
        Ok((0..dim).map(|i| phi.amplitudes()[i * dim + i]).sum())
    }

    pub fn expectation_z(&self, q: usize) -> Result<f64, NoiseError> {
        Ok(self.expectation_local(&[(q, pauli_matrix(3))])?.re)
    }
}

/// Exact mixed-state evolution: each gate conjugates ρ, then every matched
/// channel is applied in rule order.
pub fn density_matrix_run(c: &Circuit, conf: &NoiseConf) -> Result<DensityMatrix, NoiseError> {
    if c.d() != 2 {
        return Err(NoiseError::QubitsOnly(c.d()));
    }
    if c.n() > DM_MAX_QUBITS {
        return Err(NoiseError::MemoryGuard {
            n: c.n(),
            max: DM_MAX_QUBITS,
        });
    }
    let psi0 = match c.initial_state() {
        Some(s) => s.clone(),
        None => StateVector::zero(c.n(), 2),
    };
    let mut rho = DensityMatrix::pure(&psi0)?;
    for op in c.ops() {
        op.validate(c.n(), 2)?;
        rho.apply_unitary(&op.wires, &op.matrix(2)?)?;
        for ch in conf.channels_for(op)? {
            rho.apply_kraus(&op.wires, ch.operators())?;
        }
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateName;
    use crate::noise::{make_channel, ChannelKind, Matcher};

    #[test]
    fn noiseless_run_is_the_pure_projector() {
        let mut c = Circuit::new(3);
        c.h(0).unwrap().cx(0, 2).unwrap().rx(1, 0.7).unwrap();
        let rho = density_matrix_run(&c, &NoiseConf::new()).unwrap();
        let want = DensityMatrix::pure(&c.run().unwrap()).unwrap();
        assert!(rho.matrix().max_abs_diff(&want.matrix()) < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_depolarizing_gives_the_maximally_mixed_state() {
        let mut c = Circuit::new(1);
        c.ry(0, 0.9).unwrap();
        let mut conf = NoiseConf::new();
        // the uniform twirl reaches I/2 at p = 3/4; p = 1 would leave (I − r·σ/3)/2
        conf.attach(
            Matcher::gate(GateName::Ry),
            make_channel(ChannelKind::Depolarizing { p: 0.75, k: 1 }).unwrap(),
        )
        .unwrap();
        let rho = density_matrix_run(&c, &conf).unwrap();
        assert!(
            rho.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale(C64::new(0.5, 0.0)))
                < 1e-12
        );
    }

    #[test]
    fn bell_pair_with_two_qubit_depolarizing() {
        let mut c = Circuit::new(2);
        c.h(0).unwrap().cx(0, 1).unwrap();
        let p = 1e-3;
        let mut conf = NoiseConf::new();
        conf.attach(
            Matcher::gate(GateName::Cx),
            make_channel(ChannelKind::Depolarizing { p, k: 2 }).unwrap(),
        )
        .unwrap();
        let rho = density_matrix_run(&c, &conf).unwrap();
        let zz = rho
            .expectation_local(&[(0, pauli_matrix(3)), (1, pauli_matrix(3))])
            .unwrap()
            .re;
        // 8 of the 15 Pauli words anticommute with ZZ
        assert!((zz - (1.0 - 2.0 * 8.0 / 15.0 * p)).abs() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.min_eigenvalue().unwrap() > -1e-12);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            density_matrix_run(&Circuit::new(11), &NoiseConf::new()),
            Err(NoiseError::MemoryGuard { .. })
        ));
    }
}
