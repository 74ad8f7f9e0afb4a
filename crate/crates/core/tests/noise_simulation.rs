mod common;

use proptest::prelude::*;
use qforge::circuit::{Circuit, GateName, StateVector};
use qforge::noise::*;
use qforge::numerics::RngStream;

fn z_profile(psi: &StateVector) -> Vec<f64> {
    (0..psi.n())
        .map(|q| {
            let stride = 1usize << (psi.n() - 1 - q);
            psi.probabilities()
                .iter()
                .enumerate()
                .map(|(i, p)| if i & stride == 0 { *p } else { -p })
                .sum()
        })
        .collect()
}

#[test]
fn trajectories_agree_with_the_density_matrix() {
    let mut rng = RngStream::new(2024);
    let mut misses = Vec::new();
    for case in 0..20 {
        let n = 2 + case % 5;
        let (c, conf) = common::random_noisy_case(n, &mut rng);
        let rho = density_matrix_run(&c, &conf).unwrap();
        let stats =
            trajectory_average(&c, &conf, 10_000, &RngStream::new(case as u64), z_profile).unwrap();
        for q in 0..n {
            let exact = rho.expectation_z(q).unwrap();
            let dev = (stats.mean[q] - exact).abs();
            // a deterministic observable has zero sample spread
            if dev > 3.0 * stats.std_err[q] + 1e-12 {
                misses.push((case, q, stats.mean[q], exact, stats.std_err[q]));
            }
        }
    }
    assert!(misses.is_empty(), "{misses:?}");
}

#[test]
fn density_matrix_stays_a_state() {
    let mut rng = RngStream::new(7);
    for _ in 0..10 {
        let (c, conf) = common::random_noisy_case(4, &mut rng);
        let rho = density_matrix_run(&c, &conf).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.trace().im.abs() < 1e-12);
        assert!(rho.min_eigenvalue().unwrap() > -1e-12);
        assert!(rho.purity() <= 1.0 + 1e-12);
        let m = rho.matrix();
        assert!(m.max_abs_diff(&m.adjoint()) < 1e-12);
    }
}

#[test]
fn readout_mitigation_recovers_the_zero_state() {
    let n = 4;
    let shots = 8192;
    let noise = vec![(0.95, 0.92); n];
    let mut rng = RngStream::new(11);
    let mut execute = |c: &Circuit| {
        let psi = c.run()?;
        let ideal = psi.sample(shots, &mut rng);
        apply_readout_error(&ideal, &noise, &mut rng)
    };
    let mit = readout_calibrate(&mut execute, n).unwrap();
    let raw = execute(&Circuit::new(n)).unwrap();
    let q = readout_correct(&mit, &raw).unwrap();
    for k in 0..n {
        let z = q.expectation_z(k);
        assert!((z - 1.0).abs() < 0.02, "qubit {k}: {z}");
    }
    let total: f64 = q.probs.values().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn rules_apply_in_order_and_fall_through() {
    let mut c = Circuit::new(2);
    c.x(0).unwrap().x(1).unwrap();
    let mut conf = NoiseConf::new();
    conf.attach(
        Matcher::gate_on(GateName::X, vec![vec![0]]),
        make_channel(ChannelKind::AmplitudeDamping { gamma: 1.0 }).unwrap(),
    )
    .unwrap();
    conf.attach(
        Matcher::gate(GateName::X),
        make_channel(ChannelKind::PhaseDamping { lambda: 0.5 }).unwrap(),
    )
    .unwrap();
    let rho = density_matrix_run(&c, &conf).unwrap();
    assert!((rho.expectation_z(0).unwrap() - 1.0).abs() < 1e-12);
    assert!((rho.expectation_z(1).unwrap() + 1.0).abs() < 1e-12);
    let restored = NoiseConf::from_json(&conf.to_json().unwrap()).unwrap();
    let again = density_matrix_run(&c, &restored).unwrap();
    assert!(rho.matrix().max_abs_diff(&again.matrix()) == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_channel_is_complete(
        family in 0usize..6,
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let kind = match family {
            0 => ChannelKind::Depolarizing { p: a, k: 1 },
            1 => ChannelKind::Depolarizing { p: a, k: 2 },
            2 => ChannelKind::AmplitudeDamping { gamma: a },
            3 => ChannelKind::PhaseDamping { lambda: a },
            4 => ChannelKind::Reset { p: a },
            _ => ChannelKind::ThermalRelaxation { gamma: a, lambda: b },
        };
        let ch = make_channel(kind).unwrap();
        prop_assert!(ch.completeness_defect() <= COMPLETENESS_TOL);
    }

    #[test]
    fn trajectory_log_probabilities_are_nonpositive(seed in 0u64..1000) {
        let mut rng = RngStream::new(seed);
        let (c, conf) = common::random_noisy_case(3, &mut rng);
        let (psi, lp) = mc_trajectory(&c, &conf, &mut rng).unwrap();
        prop_assert!(lp <= 1e-12);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}
