#![allow(dead_code)]

use qforge::circuit::{GateInstruction, GateName, MeasureMode, StateVector};
use qforge::numerics::RngStream;
use qforge::stabilizer::{CliffordGate, StabilizerTableau};

pub fn apply_clifford_sv(psi: &mut StateVector, g: CliffordGate, wires: &[usize]) {
    let instr = GateInstruction::new(GateName::parse(g.as_str()).unwrap(), wires.to_vec(), vec![]);
    psi.apply_matrix(wires, &instr.matrix(2).unwrap()).unwrap();
}

/// Runs one random Clifford circuit with forced measurements on both engines.
/// Returns the number of measurements and entropy checks performed, or a
/// description of the first disagreement.
pub fn clifford_cross_engine_case(
    seed: u64,
    max_n: usize,
    steps: usize,
) -> Result<(usize, usize), String> {
    let mut rng = RngStream::new(seed);
    let n = 2 + rng.below(max_n as u64 - 1) as usize;
    let mut tab = StabilizerTableau::new(n);
    let mut psi = StateVector::zero(n, 2);
    let (mut measurements, mut entropies) = (0, 0);
    let gates = [
        CliffordGate::H,
        CliffordGate::S,
        CliffordGate::X,
        CliffordGate::Z,
        CliffordGate::Cx,
        CliffordGate::Cz,
    ];
    for step in 0..steps {
        let roll = rng.below(10);
        if roll < 7 {
            let g = gates[rng.below(6) as usize];
            let a = rng.below(n as u64) as usize;
            let wires = if g.arity() == 2 {
                vec![a, (a + 1 + rng.below(n as u64 - 1) as usize) % n]
            } else {
                vec![a]
            };
            tab.apply(g, &wires).map_err(|e| e.to_string())?;
            apply_clifford_sv(&mut psi, g, &wires);
        } else if roll < 9 {
            let w = rng.below(n as u64) as usize;
            let probs = psi.outcome_probabilities(w).map_err(|e| e.to_string())?;
            let sv_det = probs[0] < 1e-12 || probs[1] < 1e-12;
            if !sv_det && (probs[0] - 0.5).abs() > 1e-9 {
                return Err(format!("step {step}: non-stabilizer probability {probs:?}"));
            }
            let outcome = if sv_det {
                usize::from(probs[0] < 0.5)
            } else {
                rng.below(2) as usize
            };
            let m = tab
                .measure_with(w, MeasureMode::Forced(outcome))
                .map_err(|e| format!("step {step}: {e}"))?;
            if m.deterministic != sv_det {
                return Err(format!(
                    "step {step}: determinism differs (tableau {}, state vector {sv_det})",
                    m.deterministic
                ));
            }
            psi.measure_in_place(w, MeasureMode::Forced(outcome))
                .map_err(|e| e.to_string())?;
            measurements += 1;
        } else {
            let mask = 1 + rng.below((1u64 << n) - 2);
            let keep: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            let st = tab.entanglement_entropy(&keep).map_err(|e| e.to_string())?;
            let sv = psi.subsystem_entropy(&keep).map_err(|e| e.to_string())?;
            if st.fract() != 0.0 || (st - sv).abs() > 1e-9 {
                return Err(format!(
                    "step {step}: entropy of {keep:?} tableau {st} vs state vector {sv}"
                ));
            }
            entropies += 1;
        }
    }
    Ok((measurements, entropies))
}

pub fn open_chain(n: usize) -> qforge::lattice::Lattice {
    qforge::lattice::build_lattice(qforge::lattice::LatticeKind::Chain, &[n], &[false], 1.0, 1)
        .unwrap()
}

/// Open Heisenberg chain with unit couplings plus a field h_i Z_i, h_i uniform in [−1, 1].
pub fn random_field_heisenberg(n: usize, rng: &mut RngStream) -> qforge::hamiltonian::PauliSum {
    let mut h = qforge::hamiltonian::heisenberg_terms(&open_chain(n), 1.0, 1.0, 1.0).unwrap();
    for i in 0..n {
        h.add_local(2.0 * rng.uniform() - 1.0, &[(i, 3)]).unwrap();
    }
    h
}

pub fn distance(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Layered rzz/rx ansatz discretizing a linear ramp from −g Σ X to the TFIM
/// at coupling g, starting from |+…+⟩.
pub fn tfim_ramp_circuit(n: usize, g: f64, layers: usize, dt: f64) -> qforge::circuit::Circuit {
    let mut c = qforge::circuit::Circuit::new(n);
    for q in 0..n {
        c.h(q).unwrap();
    }
    for l in 0..layers {
        let s = (l as f64 + 0.5) / layers as f64;
        for start in [0, 1] {
            for i in (start..n - 1).step_by(2) {
                c.rzz(i, i + 1, -2.0 * dt * s).unwrap();
            }
        }
        for q in 0..n {
            c.rx(q, -2.0 * dt * g).unwrap();
        }
    }
    c
}

/// Brick-wall layers of random su4 gates with random single-qubit rotations
/// in between; every gate acts on neighbours.
pub fn random_brick_circuit(
    n: usize,
    depth: usize,
    rng: &mut RngStream,
) -> qforge::circuit::Circuit {
    let mut c = qforge::circuit::Circuit::new(n);
    let angle = |rng: &mut RngStream| (2.0 * rng.uniform() - 1.0) * std::f64::consts::PI;
    for layer in 0..depth {
        for q in 0..n {
            c.ry(q, angle(rng)).unwrap();
            c.rz(q, angle(rng)).unwrap();
        }
        for i in (layer % 2..n - 1).step_by(2) {
            let params: Vec<f64> = (0..15).map(|_| angle(rng)).collect();
            c.su4(i, i + 1, &params).unwrap();
        }
    }
    c
}

/// Random circuit on n ≤ 6 qubits with every channel family attached to
/// some gate type at random strengths.
pub fn random_noisy_case(
    n: usize,
    rng: &mut RngStream,
) -> (qforge::circuit::Circuit, qforge::noise::NoiseConf) {
    use qforge::circuit::GateName;
    use qforge::noise::{make_channel, ChannelKind, Matcher, NoiseConf};
    let mut c = qforge::circuit::Circuit::new(n);
    let angle = |rng: &mut RngStream| (2.0 * rng.uniform() - 1.0) * std::f64::consts::PI;
    for _ in 0..3 * n {
        let q = rng.below(n as u64) as usize;
        match rng.below(5) {
            0 => c.h(q).unwrap(),
            1 => c.rx(q, angle(rng)).unwrap(),
            2 => c.ry(q, angle(rng)).unwrap(),
            _ if n > 1 => {
                let mut r = rng.below(n as u64 - 1) as usize;
                if r >= q {
                    r += 1;
                }
                if rng.below(2) == 0 {
                    c.cx(q, r).unwrap()
                } else {
                    c.rzz(q, r, angle(rng)).unwrap()
                }
            }
            _ => c.rz(q, angle(rng)).unwrap(),
        };
    }
    let small = |rng: &mut RngStream| 0.3 * rng.uniform();
    let mut conf = NoiseConf::new();
    let single = [
        (
            GateName::H,
            ChannelKind::Depolarizing {
                p: small(rng),
                k: 1,
            },
        ),
        (
            GateName::Rx,
            ChannelKind::AmplitudeDamping { gamma: small(rng) },
        ),
        (
            GateName::Ry,
            ChannelKind::PhaseDamping { lambda: small(rng) },
        ),
        (GateName::Rz, ChannelKind::Reset { p: small(rng) }),
        (
            GateName::Ry,
            ChannelKind::ThermalRelaxation {
                gamma: small(rng),
                lambda: small(rng),
            },
        ),
    ];
    for (g, kind) in single {
        conf.attach(Matcher::gate(g), make_channel(kind).unwrap())
            .unwrap();
    }
    for g in [GateName::Cx, GateName::Rzz] {
        conf.attach(
            Matcher::gate(g),
            make_channel(ChannelKind::Depolarizing {
                p: small(rng),
                k: 2,
            })
            .unwrap(),
        )
        .unwrap();
    }
    (c, conf)
}

/// Fermionic c_i on the 2^l Fock space with the Jordan-Wigner string on sites k < i.
pub fn annihilator(l: usize, i: usize) -> qforge::numerics::ComplexMatrix {
    let dim = 1 << l;
    let bit = |x: usize, k: usize| (x >> (l - 1 - k)) & 1;
    let mut m = qforge::numerics::ComplexMatrix::zeros(dim, dim);
    for x in 0..dim {
        if bit(x, i) == 1 {
            let sign = if (0..i).map(|k| bit(x, k)).sum::<usize>() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[(x ^ (1 << (l - 1 - i)), x)] = qforge::numerics::C64::new(sign, 0.0);
        }
    }
    m
}

/// Σ A_ij c_i†c_j + ½ Σ (B_ij c_i†c_j† + h.c.) as a dense Fock matrix.
pub fn fock_hamiltonian(
    h: &qforge::fgs::QuadraticHamiltonian,
    c: &[qforge::numerics::ComplexMatrix],
) -> qforge::numerics::ComplexMatrix {
    let l = h.l();
    let dim = 1 << l;
    let mut out = qforge::numerics::ComplexMatrix::zeros(dim, dim);
    for i in 0..l {
        for j in 0..l {
            let hop = c[i].adjoint().matmul(&c[j]).unwrap().scale(h.a()[(i, j)]);
            let pair = c[i]
                .adjoint()
                .matmul(&c[j].adjoint())
                .unwrap()
                .scale(h.b()[(i, j)] * 0.5);
            out = out
                .add(&hop)
                .unwrap()
                .add(&pair)
                .unwrap()
                .add(&pair.adjoint())
                .unwrap();
        }
    }
    out
}

pub fn expect(
    psi: &[qforge::numerics::C64],
    op: &qforge::numerics::ComplexMatrix,
) -> qforge::numerics::C64 {
    let v = op.mul_vec(psi).unwrap();
    psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
}

/// Entropy in bits of the first k sites.
pub fn prefix_entropy(psi: &[qforge::numerics::C64], k: usize, l: usize) -> f64 {
    let (rows, cols) = (1 << k, 1 << (l - k));
    let m = qforge::numerics::ComplexMatrix::from_fn(rows, cols, |r, c| psi[r * cols + c]);
    let rho = m.matmul(&m.adjoint()).unwrap();
    qforge::numerics::eigh(&rho)
        .unwrap()
        .0
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn pauli_matrix(code: u8) -> qforge::numerics::ComplexMatrix {
    use qforge::numerics::C64;
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    let data = match code {
        0 => vec![l, o, o, l],
        1 => vec![o, l, l, o],
        2 => vec![o, -i, i, o],
        _ => vec![l, o, o, -l],
    };
    qforge::numerics::ComplexMatrix::from_vec(2, 2, data).unwrap()
}

/// Dense Σ w_t ⊗_k σ_k built term by term from Kronecker products.
pub fn kron_oracle(h: &qforge::hamiltonian::PauliSum) -> qforge::numerics::ComplexMatrix {
    use qforge::numerics::ComplexMatrix;
    let dim = 1 << h.n();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for t in h.terms() {
        let m = t.codes.iter().fold(ComplexMatrix::identity(1), |acc, &k| {
            acc.kron(&pauli_matrix(k))
        });
        for (o, v) in out.data_mut().iter_mut().zip(m.data()) {
            *o += t.weight * v;
        }
    }
    out
}
