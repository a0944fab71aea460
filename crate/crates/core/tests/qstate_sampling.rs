use proptest::prelude::*;
use qpc_sim::qstate::{
    make_bell, make_single, Basis, BellState, PureState, QuantumRegistry, SingleState,
};
use qpc_sim::rng::RandomStream;
use qpc_sim::stats::within_sigmas;

const N: u64 = 10_000;

#[test]
fn plus_in_z_is_a_fair_coin() {
    let mut rng = RandomStream::from_seed(2024);
    let zeros = (0..N)
        .filter(|_| {
            let (o, _) = make_single(SingleState::Plus)
                .measure(0, Basis::Z, &mut rng)
                .unwrap();
            !o.bit
        })
        .count() as u64;
    assert!(within_sigmas(zeros, N, 0.5, 3.0), "zeros = {zeros}");
}

#[test]
fn bell_marginals_are_uniform_and_correlated() {
    let mut rng = RandomStream::from_seed(77);
    let mut home_zeros = 0u64;
    let mut travel_zeros = 0u64;
    for t in 0..N {
        let phi = make_bell(BellState::PhiPlus);
        // alternate which qubit is measured first
        let (first, second) = if t % 2 == 0 { (0, 1) } else { (1, 0) };
        let (a, s) = phi.measure(first, Basis::Z, &mut rng).unwrap();
        let (b, s) = s.measure(second, Basis::Z, &mut rng).unwrap();
        assert_eq!(a.bit, b.bit);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let home = if first == 0 { a.bit } else { b.bit };
        home_zeros += !home as u64;
        travel_zeros += !b.bit as u64;
    }
    assert!(within_sigmas(home_zeros, N, 0.5, 3.0));
    assert!(within_sigmas(travel_zeros, N, 0.5, 3.0));
}

#[test]
fn z_measurement_disturbs_x_information() {
    let mut rng = RandomStream::from_seed(31337);
    let mut wrong = 0u64;
    for _ in 0..N {
        let (_, s) = make_single(SingleState::Plus)
            .measure(0, Basis::Z, &mut rng)
            .unwrap();
        let (o, _) = s.measure(0, Basis::X, &mut rng).unwrap();
        wrong += o.bit as u64;
    }
    assert!(within_sigmas(wrong, N, 0.5, 3.0), "wrong = {wrong}");
}

fn arb_state() -> impl Strategy<Value = PureState> {
    (1usize..=4)
        .prop_flat_map(|n| proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n))
        .prop_filter_map("non-zero vector", |raw| {
            let norm: f64 = raw.iter().map(|(r, i)| r * r + i * i).sum::<f64>().sqrt();
            (norm > 1e-3).then(|| {
                let amps = raw
                    .iter()
                    .map(|&(r, i)| num_complex::Complex64::new(r / norm, i / norm))
                    .collect();
                PureState::from_amplitudes(amps).unwrap()
            })
        })
}

proptest! {
    #[test]
    fn measurement_preserves_normalization(
        state in arb_state(),
        ops in proptest::collection::vec((0usize..4, any::<bool>()), 1..8),
        seed in any::<u64>(),
    ) {
        let mut rng = RandomStream::from_seed(seed);
        let mut s = state;
        for (q, x) in ops {
            let q = q % s.num_qubits();
            let basis = if x { Basis::X } else { Basis::Z };
            let p0 = s.probability(q, basis, false).unwrap();
            let p1 = s.probability(q, basis, true).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
            let (o, next) = s.measure(q, basis, &mut rng).unwrap();
            prop_assert!((next.norm_sqr() - 1.0).abs() < 1e-12);
            // collapse is an eigenstate of the measurement just made
            prop_assert!((next.probability(q, basis, o.bit).unwrap() - 1.0).abs() < 1e-9);
            s = next;
        }
    }

    #[test]
    fn registry_particles_stay_normalized(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = RandomStream::from_seed(seed);
        let mut reg = QuantumRegistry::new();
        for _ in 0..n {
            let (h, t) = reg.prepare_bell(BellState::PhiPlus);
            let basis = if rng.bit() { Basis::X } else { Basis::Z };
            reg.measure(t, basis, &mut rng).unwrap();
            reg.measure(h, Basis::Z, &mut rng).unwrap();
            prop_assert!((reg.state_of(h).unwrap().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
