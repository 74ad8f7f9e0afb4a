use super::{Ansatz, GeneratorTag, VariationalError};
use crate::circuit::gates::{clock, root_of_unity, shift};
use crate::circuit::{Circuit, GateInstruction, GateName, StateVector};
use crate::numerics::{eigh, spectral_apply, ComplexMatrix, C64};

fn check_n(n: usize, min: usize) -> Result<(), VariationalError> {
    if n < min {
        return Err(VariationalError::InvalidArgument(format!(
            "need at least {min} sites, got {n}"
        )));
    }
    Ok(())
}

/// Repeated blocks of rzz on every chain bond followed by rx on every site,
/// one parameter per gate: block ℓ reads θ[ℓ(2n−1)..(ℓ+1)(2n−1)].
///
/// Every gate commutes with the parity Π X_i. Started from |0…0⟩, which has
/// equal weight in both parity sectors, the energy can never go below the
/// mean of the two sector ground energies; `from_plus` prepends H on every
/// site so the circuit starts inside the even sector holding the ground state.
pub fn tfim_layered_ansatz(
    n: usize,
    layers: usize,
    from_plus: bool,
) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    let per = 2 * n - 1;
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::ShiftRule; per * layers],
        move |t| {
            let mut c = Circuit::new(n);
            if from_plus {
                for i in 0..n {
                    c.h(i)?;
                }
            }
            for block in t.chunks(per) {
                for i in 0..n - 1 {
                    c.rzz(i, i + 1, block[i])?;
                }
                for i in 0..n {
                    c.rx(i, block[n - 1 + i])?;
                }
            }
            Ok(c)
        },
    ))
}

/// Hamiltonian-variational ansatz with two shared angles per layer: after H
/// on every site, layer ℓ applies rzz(θ[2ℓ]) on every bond and rx(θ[2ℓ+1]) on
/// every site. A shared angle drives several commuting rotations, so the
/// two-term shift rule does not apply.
pub fn tfim_hva_ansatz(n: usize, layers: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::FiniteDiffOnly; 2 * layers],
        move |t| {
            let mut c = Circuit::new(n);
            for i in 0..n {
                c.h(i)?;
            }
            for pair in t.chunks(2) {
                for i in 0..n - 1 {
                    c.rzz(i, i + 1, pair[0])?;
                }
                for i in 0..n {
                    c.rx(i, pair[1])?;
                }
            }
            Ok(c)
        },
    ))
}

/// Per-gate angles for [`tfim_layered_ansatz`] (with `from_plus`) that
/// reproduce the [`tfim_hva_ansatz`] state with the given shared angles.
pub fn lift_hva_angles(n: usize, shared: &[f64]) -> Vec<f64> {
    shared
        .chunks(2)
        .flat_map(|p| {
            let rx = p.get(1).copied().unwrap_or(0.0);
            std::iter::repeat(p[0])
                .take(n - 1)
                .chain(std::iter::repeat(rx).take(n))
        })
        .collect()
}

/// Brick layers of exchange gates exp(−iθ SWAP/2) on even then odd bonds,
/// one parameter per gate. Every gate commutes with total spin, so the
/// circuit maps each spin multiplet of its input into the same multiplet.
pub fn exchange_ansatz(n: usize, layers: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    let per = n - 1;
    let swap = ComplexMatrix::from_fn(4, 4, |r, c| {
        let target = (r % 2) * 2 + r / 2;
        C64::new(if c == target { 1.0 } else { 0.0 }, 0.0)
    });
    let (vals, vecs) = eigh(&swap)?;
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::ShiftRule; per * layers],
        move |t| {
            let mut c = Circuit::new(n);
            for block in t.chunks(per) {
                let mut k = 0;
                for start in [0, 1] {
                    for i in (start..n - 1).step_by(2) {
                        let g = spectral_apply(&vals, &vecs, |e| {
                            C64::from_polar(1.0, -e * block[k] / 2.0)
                        });
                        c.unitary(&[i, i + 1], g)?;
                        k += 1;
                    }
                }
            }
            Ok(c)
        },
    ))
}

/// Products of two-site states on the pairs (0,1), (2,3), …: every pair a
/// singlet, except that the pair holding `triplet_pair` is in the triplet
/// state with magnetization `m ∈ {−1, 0, 1}` (|0⟩ is spin up).
pub fn dimer_state(
    n: usize,
    triplet: Option<(usize, i32)>,
) -> Result<StateVector, VariationalError> {
    if n < 2 || n % 2 != 0 {
        return Err(VariationalError::InvalidArgument(format!(
            "dimer covering needs an even n, got {n}"
        )));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(1.0, 0.0)];
    for pair in 0..n / 2 {
        let local = match triplet {
            Some((p, m)) if p == pair => match m {
                1 => [1.0, 0.0, 0.0, 0.0],
                0 => [0.0, h, h, 0.0],
                -1 => [0.0, 0.0, 0.0, 1.0],
                _ => {
                    return Err(VariationalError::InvalidArgument(format!(
                        "triplet magnetization {m}"
                    )))
                }
            },
            Some((p, _)) if p >= n / 2 => {
                return Err(VariationalError::InvalidArgument(format!(
                    "pair {p} of {}",
                    n / 2
                )));
            }
            _ => [0.0, h, -h, 0.0],
        };
        amps = amps
            .iter()
            .flat_map(|a| local.iter().map(move |&x| a * x))
            .collect();
    }
    Ok(StateVector::from_amplitudes(n, 2, amps)?)
}

/// Starting angles for [`tfim_layered_ansatz`] that Trotterize a linear ramp
/// H(s) = −s Σ Z_iZ_{i+1} − g Σ X_i over `layers` steps of length `dt`.
pub fn tfim_ramp_angles(n: usize, layers: usize, g: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity((2 * n - 1) * layers);
    for l in 0..layers {
        let s = (l as f64 + 0.5) / layers as f64;
        out.extend(std::iter::repeat(-2.0 * dt * s).take(n - 1));
        out.extend(std::iter::repeat(-2.0 * dt * g).take(n));
    }
    out
}

/// Layers of rzz on even bonds, rzz on odd bonds, then rx on every site,
/// one parameter per gate.
pub fn brick_rzz_rx_ansatz(n: usize, layers: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    let per = 2 * n - 1;
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::ShiftRule; per * layers],
        move |t| {
            let mut c = Circuit::new(n);
            for block in t.chunks(per) {
                let mut k = 0;
                for start in [0, 1] {
                    for i in (start..n - 1).step_by(2) {
                        c.rzz(i, i + 1, block[k])?;
                        k += 1;
                    }
                }
                for i in 0..n {
                    c.rx(i, block[k + i])?;
                }
            }
            Ok(c)
        },
    ))
}

/// Layers of ry, rz on every site followed by a cx ladder, with a closing
/// ry, rz layer.
pub fn hardware_efficient_ansatz(n: usize, layers: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 1)?;
    let count = 2 * n * (layers + 1);
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::ShiftRule; count],
        move |t| {
            let mut c = Circuit::new(n);
            for (l, block) in t.chunks(2 * n).enumerate() {
                for i in 0..n {
                    c.ry(i, block[2 * i])?;
                    c.rz(i, block[2 * i + 1])?;
                }
                if l < layers {
                    for i in 0..n.saturating_sub(1) {
                        c.cx(i, i + 1)?;
                    }
                }
            }
            Ok(c)
        },
    ))
}

/// Hamiltonian-variational ansatz for the d-state clock chain: the uniform
/// superposition on every site, then per layer exp(−iθ(Z_iZ_{i+1}† + h.c.))
/// on every bond and exp(−iφ(X_i + X_i†)) on every site, one parameter per
/// gate. Parameters are shift-rule eligible only for d = 2.
pub fn clock_model_ansatz(n: usize, d: usize, layers: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    if d < 2 {
        return Err(VariationalError::InvalidArgument(format!(
            "local dimension {d}"
        )));
    }
    let z = clock(d);
    let zz = z.kron(&z.adjoint());
    let bond = zz.add(&zz.adjoint())?;
    let x = shift(d);
    let field = x.add(&x.adjoint())?;
    let (bond_vals, bond_vecs) = eigh(&bond)?;
    let (field_vals, field_vecs) = eigh(&field)?;
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    // any unitary with a uniform first column prepares the superposition
    let prep = ComplexMatrix::from_fn(d, d, |r, c| amp * root_of_unity(r * c, d));
    let per = 2 * n - 1;
    // the bond and field generators have integer spectra, so the two-term rule only holds for qubits
    let tag = if d == 2 {
        GeneratorTag::ShiftRule
    } else {
        GeneratorTag::FiniteDiffOnly
    };
    Ok(Ansatz::new(n, d, vec![tag; per * layers], move |t| {
        let mut c = Circuit::new_qudit(n, d)?;
        for i in 0..n {
            c.unitary(&[i], prep.clone())?;
        }
        for block in t.chunks(per) {
            for i in 0..n - 1 {
                c.unitary(
                    &[i, i + 1],
                    spectral_apply(&bond_vals, &bond_vecs, |e| {
                        C64::from_polar(1.0, -e * block[i])
                    }),
                )?;
            }
            for i in 0..n {
                c.unitary(
                    &[i],
                    spectral_apply(&field_vals, &field_vecs, |e| {
                        C64::from_polar(1.0, -e * block[n - 1 + i])
                    }),
                )?;
            }
        }
        Ok(c)
    }))
}

/// Majorana pair index p of each rotation in the Givens network, in circuit
/// order. Even p = 2j is rx on site j; odd p = 2j+1 is rzz on bond (j, j+1).
fn givens_pairs(n: usize) -> Vec<usize> {
    let m = 2 * n;
    let mut pairs: Vec<usize> = (0..m)
        .flat_map(|c| (c + 1..m).rev().map(|r| r - 1))
        .collect();
    pairs.reverse();
    pairs
}

/// H on every site followed by n(2n−1) rx/rzz rotations arranged as a
/// nearest-neighbour Givens network on the 2n Majorana modes. With the
/// angles from [`tfim_free_fermion_angles`] it prepares the open-chain TFIM
/// ground state exactly.
pub fn givens_rzz_rx_ansatz(n: usize) -> Result<Ansatz, VariationalError> {
    check_n(n, 2)?;
    let pairs = givens_pairs(n);
    Ok(Ansatz::new(
        n,
        2,
        vec![GeneratorTag::ShiftRule; pairs.len()],
        move |t| {
            let mut c = Circuit::new(n);
            for q in 0..n {
                c.h(q)?;
            }
            for (&p, &theta) in pairs.iter().zip(t) {
                let instr = if p % 2 == 0 {
                    GateInstruction::new(GateName::Rx, vec![p / 2], vec![theta])
                } else {
                    GateInstruction::new(
                        GateName::Rzz,
                        vec![(p - 1) / 2, p.div_ceil(2)],
                        vec![theta],
                    )
                };
                c.push(instr)?;
            }
            Ok(c)
        },
    ))
}

/// Angles for [`givens_rzz_rx_ansatz`] that map |+…+⟩ to the ground state of
/// the open chain −Σ Z_iZ_{i+1} − g Σ X_i.
///
/// With γ_{2j} = (Π_{k<j} X_k) Z_j and γ_{2j+1} = (Π_{k<j} X_k) Y_j one has
/// X_j = iγ_{2j}γ_{2j+1} and Z_jZ_{j+1} = iγ_{2j+1}γ_{2j+2}, so rx and rzz
/// rotate adjacent Majorana pairs by their angle. The ground-state covariance
/// Γ = i·sign(iA) is brought to the |+…+⟩ covariance by an orthogonal O,
/// which is factored into adjacent Givens rotations.
pub fn tfim_free_fermion_angles(n: usize, g: f64) -> Result<Vec<f64>, VariationalError> {
    check_n(n, 2)?;
    if !g.is_finite() {
        return Err(VariationalError::InvalidArgument(format!("g = {g}")));
    }
    let m = 2 * n;
    // H = (i/4) Σ A_ab γ_a γ_b
    let mut a = vec![0.0; m * m];
    for j in 0..n - 1 {
        a[(2 * j + 1) * m + 2 * j + 2] = -2.0;
        a[(2 * j + 2) * m + 2 * j + 1] = 2.0;
    }
    for j in 0..n {
        a[2 * j * m + 2 * j + 1] = -2.0 * g;
        a[(2 * j + 1) * m + 2 * j] = 2.0 * g;
    }
    let ia = ComplexMatrix::from_fn(m, m, |r, c| C64::new(0.0, a[r * m + c]));
    let (vals, vecs) = eigh(&ia)?;
    if vals.iter().any(|v| v.abs() < 1e-9) {
        return Err(VariationalError::Singular(
            "zero mode: the ground state is degenerate".into(),
        ));
    }
    let gamma = ComplexMatrix::from_fn(m, m, |r, c| {
        let s: C64 = (0..m)
            .map(|k| C64::new(0.0, vals[k].signum()) * vecs[(r, k)] * vecs[(c, k)].conj())
            .sum();
        C64::new(0.0, s.re)
    });
    // +1 eigenvectors (x + iy)/√2 of iΓ give Γx = y, Γy = −x.
    let (gv, ge) = eigh(&gamma)?;
    let mut o = vec![0.0; m * m];
    for (col, k) in (0..m).filter(|&k| gv[k] > 0.0).enumerate() {
        for r in 0..m {
            o[r * m + 2 * col + 1] = ge[(r, k)].re * std::f64::consts::SQRT_2;
            o[r * m + 2 * col] = ge[(r, k)].im * std::f64::consts::SQRT_2;
        }
    }
    let mut phis = Vec::with_capacity(n * (m - 1));
    for c in 0..m {
        for r in (c + 1..m).rev() {
            let phi = o[r * m + c].atan2(o[(r - 1) * m + c]);
            let (cs, sn) = (phi.cos(), phi.sin());
            for k in 0..m {
                let (u, w) = (o[(r - 1) * m + k], o[r * m + k]);
                o[(r - 1) * m + k] = cs * u + sn * w;
                o[r * m + k] = -sn * u + cs * w;
            }
            phis.push(phi);
        }
    }
    if (0..m).any(|i| o[i * m + i] < 0.0) {
        return Err(VariationalError::Singular(
            "ground state has the opposite fermion parity to |+…+⟩".into(),
        ));
    }
    Ok(phis.iter().rev().map(|p| -p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{pauli_sum_to_coo, tfim_terms};
    use crate::lattice::{build_lattice, LatticeKind};
    use crate::numerics::eigh;

    #[test]
    fn parameter_counts() {
        assert_eq!(tfim_layered_ansatz(10, 2, true).unwrap().param_count(), 38);
        assert_eq!(brick_rzz_rx_ansatz(5, 3).unwrap().param_count(), 27);
        assert_eq!(givens_rzz_rx_ansatz(4).unwrap().param_count(), 28);
        assert_eq!(
            clock_model_ansatz(4, 3, 2).unwrap().tags(),
            &[GeneratorTag::FiniteDiffOnly; 14][..]
        );
        assert_eq!(
            hardware_efficient_ansatz(3, 2)
                .unwrap()
                .circuit(&[0.1; 18])
                .unwrap()
                .ops()
                .len(),
            22
        );
    }

    #[test]
    fn lifted_angles_reproduce_shared_state() {
        let shared = [0.3, -0.7, 1.1, 0.2, -0.4];
        let a = tfim_hva_ansatz(5, 2).unwrap().state(&shared[..4]).unwrap();
        let b = tfim_layered_ansatz(5, 2, true)
            .unwrap()
            .state(&lift_hva_angles(5, &shared[..4]))
            .unwrap();
        assert!((a.fidelity(&b) - 1.0).abs() < 1e-12);
        // a trailing lone angle lifts with a zero rx
        assert_eq!(lift_hva_angles(3, &shared).len(), 15);
        assert_eq!(
            &lift_hva_angles(3, &shared)[10..],
            &[-0.4, -0.4, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn exchange_gates_keep_spin_multiplets() {
        let a = exchange_ansatz(4, 2).unwrap();
        let theta = [0.4, -1.2, 0.9, 2.0, 0.1, -0.3];
        let c = a.circuit(&theta).unwrap();
        // a product of singlets has total spin zero, so X⊗4 acts on it as +1
        let mut psi = dimer_state(4, None).unwrap();
        c.apply_to(&mut psi).unwrap();
        let flip = psi
            .expectation_pauli(
                &crate::hamiltonian::PauliSum::from_labels(&[(1.0, "XXXX")]).unwrap(),
            )
            .unwrap();
        assert!((flip.re - 1.0).abs() < 1e-12);
        let mut up = dimer_state(4, Some((1, 1))).unwrap();
        let mut down = dimer_state(4, Some((1, -1))).unwrap();
        c.apply_to(&mut up).unwrap();
        c.apply_to(&mut down).unwrap();
        let h = pauli_sum_to_coo(
            &crate::hamiltonian::PauliSum::from_labels(&[
                (1.0, "XXII"),
                (1.0, "YYII"),
                (1.0, "ZZII"),
                (0.5, "IZZI"),
            ])
            .unwrap(),
        )
        .unwrap();
        assert!((h.expectation(up.amplitudes()) - h.expectation(down.amplitudes())).norm() < 1e-12);
        assert!(up.inner(&down).norm() < 1e-14);
        assert!(dimer_state(5, None).is_err());
        assert!(dimer_state(4, Some((2, 1))).is_err());
        assert!(dimer_state(4, Some((0, 2))).is_err());
    }

    #[test]
    fn free_fermion_angles_give_ground_state() {
        for (n, g) in [(2, 1.0), (5, 0.6), (6, 1.0), (7, 2.5)] {
            let l = build_lattice(LatticeKind::Chain, &[n], &[false], 1.0, 1).unwrap();
            let h = tfim_terms(&l, g).unwrap();
            let e0 = eigh(&pauli_sum_to_coo(&h).unwrap().to_dense()).unwrap().0[0];
            let theta = tfim_free_fermion_angles(n, g).unwrap();
            let psi = givens_rzz_rx_ansatz(n).unwrap().state(&theta).unwrap();
            assert!((psi.energy(&h).unwrap() - e0).abs() < 1e-10, "n={n} g={g}");
        }
        assert!(tfim_free_fermion_angles(4, 0.0).is_err());
    }
}
