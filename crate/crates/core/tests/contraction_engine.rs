mod common;

use proptest::prelude::*;
use qforge::circuit::Circuit;
use qforge::contraction::*;
use qforge::hamiltonian::{pauli_sum_to_coo, PauliSum};
use qforge::numerics::{RngStream, C64};

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

fn exact_expectation(c: &Circuit, codes: &[u8]) -> f64 {
    let mut h = PauliSum::new(c.n());
    h.add_term(C64::new(1.0, 0.0), codes.to_vec()).unwrap();
    let psi = c.run().unwrap();
    let hv = pauli_sum_to_coo(&h).unwrap().matvec(psi.amplitudes());
    psi.amplitudes()
        .iter()
        .zip(&hv)
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

fn value(net: &TensorNetwork, opts: &PathOptions, workers: usize) -> C64 {
    let tree = find_path(net, opts).unwrap();
    contract(net, &tree, workers).unwrap().value().unwrap()
}

#[test]
fn trivial_expectations() {
    let empty = Circuit::new(3);
    let net = capture_expectation_network(&empty, &[3, 0, 0]).unwrap();
    assert!(close(
        value(&net, &PathOptions::default(), 1),
        C64::new(1.0, 0.0),
        1e-14
    ));
    let mut bell = Circuit::new(2);
    bell.h(0).unwrap().cx(0, 1).unwrap();
    let net = capture_expectation_network(&bell, &[3, 3]).unwrap();
    assert!(close(
        value(&net, &PathOptions::default(), 1),
        C64::new(1.0, 0.0),
        1e-14
    ));
    let net = capture_amplitude_network(&bell, &[1, 1]).unwrap();
    let amp = value(&net, &PathOptions::default(), 1);
    assert!(close(
        amp,
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        1e-14
    ));
}

#[test]
fn circuit_expectations_match_the_state_vector() {
    let mut rng = RngStream::new(40);
    for _ in 0..5 {
        let c = common::random_brick_circuit(8, 6, &mut rng);
        let a = rng.below(8) as usize;
        let b = (a + 1 + rng.below(7) as usize) % 8;
        let mut codes = vec![0u8; 8];
        codes[a] = 1 + rng.below(3) as u8;
        codes[b] = 1 + rng.below(3) as u8;
        let net = capture_expectation_network(&c, &codes).unwrap();
        let got = value(&net, &PathOptions::default(), 1);
        let want = exact_expectation(&c, &codes);
        assert!(
            (got.re - want).abs() < 1e-10 && got.im.abs() < 1e-10,
            "{got} vs {want}"
        );
    }
}

#[test]
fn sliced_equals_unsliced_on_random_networks() {
    let mut rng = RngStream::new(41);
    for case in 0..50 {
        let net = random_network(10, 6, 3, 4, &mut rng).unwrap();
        let full = find_path(&net, &PathOptions::default()).unwrap();
        let target = (full.costs.largest_intermediate / 9).max(net.largest_tensor());
        let opts = PathOptions {
            target_size: target,
            max_repeats: 4,
            seed: case,
        };
        let sliced = find_path(&net, &opts).unwrap();
        let (a, _) = contract_with_stats(&net, &full, 1).unwrap();
        let (b, stats) = contract_with_stats(&net, &sliced, 2).unwrap();
        assert!(
            close(a.value().unwrap(), b.value().unwrap(), 1e-12),
            "case {case}"
        );
        assert!(stats.largest_intermediate <= target);
        let sizes = net.label_sizes();
        let expected: usize = sliced.sliced_labels.iter().map(|l| sizes[l]).product();
        assert_eq!(stats.slices, expected);
        assert_eq!(stats.slices, sliced.costs.slices);
    }
}

#[test]
fn sixteen_qubit_network_respects_the_cap() {
    let c = common::random_brick_circuit(16, 8, &mut RngStream::new(42));
    // full support defeats the light cone
    let codes: Vec<u8> = (0..16).map(|q| 1 + (q % 3) as u8).collect();
    let net = capture_expectation_network(&c, &codes).unwrap();
    let want = exact_expectation(&c, &codes);
    // the greedy path already fits 2^16 unsliced; 2^10 forces slicing
    for target in [1usize << 16, 1 << 10] {
        let opts = PathOptions {
            target_size: target,
            max_repeats: 4,
            seed: 3,
        };
        let tree = find_path(&net, &opts).unwrap();
        assert!(tree.costs.largest_intermediate <= target);
        let (got, stats) = contract_with_stats(&net, &tree, 1).unwrap();
        assert!(stats.largest_intermediate <= target);
        assert!((got.value().unwrap().re - want).abs() < 1e-10);
        if target == 1 << 10 {
            assert!(!tree.sliced_labels.is_empty());
            assert_eq!(stats.slices, tree.costs.slices);
        }
    }
}

#[test]
fn worker_count_does_not_change_bits() {
    let net = random_network(14, 10, 2, 4, &mut RngStream::new(43)).unwrap();
    let opts = PathOptions {
        target_size: 16,
        max_repeats: 2,
        seed: 1,
    };
    let tree = find_path(&net, &opts).unwrap();
    assert!(tree.costs.slices >= 4);
    let one = contract(&net, &tree, 1).unwrap();
    let four = contract(&net, &tree, 4).unwrap();
    assert_eq!(one, four);
}

#[test]
fn paths_are_deterministic_and_persist() {
    let net = random_network(12, 8, 2, 5, &mut RngStream::new(44)).unwrap();
    let opts = PathOptions {
        target_size: 32,
        max_repeats: 6,
        seed: 9,
    };
    let tree = find_path(&net, &opts).unwrap();
    assert_eq!(tree, find_path(&net, &opts).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tree.json");
    save_path(&tree, &file).unwrap();
    let loaded = load_path(&file, &net).unwrap();
    assert_eq!(loaded, tree);
    assert_eq!(
        contract(&net, &loaded, 1).unwrap(),
        contract(&net, &tree, 1).unwrap()
    );
    let other = random_network(12, 8, 3, 5, &mut RngStream::new(44)).unwrap();
    assert!(matches!(
        load_path(&file, &other),
        Err(ContractionError::SignatureMismatch { .. })
    ));
}

#[test]
fn target_below_an_input_is_rejected() {
    let net = random_network(4, 0, 4, 3, &mut RngStream::new(45)).unwrap();
    let opts = PathOptions {
        target_size: net.largest_tensor() - 1,
        ..Default::default()
    };
    assert!(matches!(
        find_path(&net, &opts),
        Err(ContractionError::TargetTooSmall { .. })
    ));
}

/// A uniformly random pairing order, valid but unoptimized.
fn random_tree(
    net: &TensorNetwork,
    template: &ContractionTree,
    rng: &mut RngStream,
) -> ContractionTree {
    let mut live: Vec<usize> = (0..net.tensors().len()).collect();
    let mut steps = Vec::new();
    let mut next = live.len();
    while live.len() > 1 {
        let a = live.swap_remove(rng.below(live.len() as u64) as usize);
        let b = live.swap_remove(rng.below(live.len() as u64) as usize);
        steps.push((a, b));
        live.push(next);
        next += 1;
    }
    ContractionTree {
        steps,
        ..template.clone()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn contraction_order_does_not_matter(seed in 0u64..10_000, tensors in 3usize..=12) {
        let mut rng = RngStream::new(seed);
        let net = random_network(tensors, tensors / 2, 2, 4, &mut rng).unwrap();
        let greedy = find_path(&net, &PathOptions::default()).unwrap();
        let base = contract(&net, &greedy, 1).unwrap().value().unwrap();
        for _ in 0..3 {
            let tree = random_tree(&net, &greedy, &mut rng);
            let v = contract(&net, &tree, 1).unwrap().value().unwrap();
            prop_assert!(close(base, v, 1e-12), "{base} vs {v}");
        }
    }
}
