mod common;

use proptest::prelude::*;
use qforge::circuit::{Circuit, StateVector};
use qforge::hamiltonian::{pauli_sum_to_coo, tfim_terms};
use qforge::mps::{MpsState, TruncationPolicy};
use qforge::numerics::RngStream;
use qforge::timeevol::lanczos_ground_energy;
use qforge::variational::{givens_rzz_rx_ansatz, tfim_free_fermion_angles};

fn mps_run(c: &Circuit, policy: TruncationPolicy) -> MpsState {
    let mut m = MpsState::new(c.n(), 2, policy).unwrap();
    m.apply_circuit(c).unwrap();
    m
}

#[test]
fn unlimited_bond_matches_state_vector() {
    for seed in 0..5 {
        let c = common::random_brick_circuit(12, 6, &mut RngStream::new(seed));
        let exact = c.run().unwrap();
        let m = mps_run(&c, TruncationPolicy::unlimited());
        let f = m.to_statevector().unwrap().fidelity(&exact);
        assert!(f > 1.0 - 1e-10, "seed {seed}: fidelity {f}");
        assert_eq!(m.discarded_weight(), 0.0);
    }
}

#[test]
fn ghz_is_exact_at_bond_two() {
    let n = 16;
    let mut c = Circuit::new(n);
    c.h(0).unwrap();
    for i in 0..n - 1 {
        c.cx(i, i + 1).unwrap();
    }
    let m = mps_run(&c, TruncationPolicy::bond(2));
    assert_eq!(m.discarded_weight(), 0.0);
    assert!(m.max_bond() <= 2);
    let psi = m.to_statevector().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((psi.amplitudes()[0].re - s).abs() < 1e-12);
    assert!((psi.amplitudes()[(1 << n) - 1].re - s).abs() < 1e-12);
    assert!((psi.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn local_energy_matches_dense_expectation() {
    let n = 8;
    let h = tfim_terms(&common::open_chain(n), 0.7).unwrap();
    let coo = pauli_sum_to_coo(&h).unwrap();
    for seed in 10..13 {
        let c = common::random_brick_circuit(n, 4, &mut RngStream::new(seed));
        let psi = c.run().unwrap();
        let dense = coo.expectation(psi.amplitudes()).re;
        let e = mps_run(&c, TruncationPolicy::unlimited())
            .energy(&h)
            .unwrap();
        assert!((e - dense).abs() < 1e-10, "seed {seed}: {e} vs {dense}");
    }
}

#[test]
fn truncation_accumulates_weight_and_keeps_unit_norm() {
    let c = common::random_brick_circuit(10, 8, &mut RngStream::new(77));
    let mut m = MpsState::new(10, 2, TruncationPolicy::bond(4)).unwrap();
    let mut last = 0.0;
    for op in c.ops() {
        m.apply_gate(op).unwrap();
        let w = m.discarded_weight();
        assert!(w >= last, "discarded weight went from {last} to {w}");
        assert!((m.norm() - 1.0).abs() < 1e-10);
        assert!(m.max_bond() <= 4);
        last = w;
    }
    assert!(last > 0.0);
}

#[test]
fn tfim_energy_error_falls_with_bond_dimension() {
    let n = 20;
    let h = tfim_terms(&common::open_chain(n), 1.0).unwrap();
    let e0 = lanczos_ground_energy(
        &pauli_sum_to_coo(&h).unwrap(),
        400,
        1e-12,
        &mut RngStream::new(1),
    )
    .unwrap();
    let c = givens_rzz_rx_ansatz(n)
        .unwrap()
        .circuit(&tfim_free_fermion_angles(n, 1.0).unwrap())
        .unwrap();
    let errs: Vec<f64> = [2, 4, 8, 16]
        .iter()
        .map(|&chi| mps_run(&c, TruncationPolicy::bond(chi)).energy(&h).unwrap() - e0)
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "errors {errs:?}");
    }
    assert!(errs[3] < 1e-6 && errs[3] > -1e-9, "errors {errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bond_cap_is_respected_and_saturation_is_exact(n in 2usize..9, depth in 1usize..7, seed in 0u64..10_000, chi in 1usize..6) {
        let c = common::random_brick_circuit(n, depth, &mut RngStream::new(seed));
        let capped = mps_run(&c, TruncationPolicy::bond(chi));
        prop_assert!(capped.max_bond() <= chi);
        prop_assert!((capped.norm() - 1.0).abs() < 1e-10);
        let exact: StateVector = c.run().unwrap();
        let saturated = mps_run(&c, TruncationPolicy::bond(1 << (n / 2)));
        prop_assert!(saturated.discarded_weight() < 1e-20);
        prop_assert!(saturated.to_statevector().unwrap().fidelity(&exact) > 1.0 - 1e-10);
    }
}
