use proptest::prelude::*;
use qpc_sim::protocol::{
    check_code_identity, check_xor_identity, encode_report, measure_home, prepare_sequence,
    tp_compare_pair, Report, Secret, UserId, Verdict,
};
use qpc_sim::qstate::{Basis, QuantumRegistry};
use qpc_sim::rng::RandomStream;
use qpc_sim::session::{ComparisonMatrix, SessionConfig};
use qpc_sim::stats::{chi_square_fair_bit, within_sigmas};

#[test]
fn exhaustive_identities() {
    let codes = check_code_identity().unwrap();
    assert_eq!(codes.cases, 4);
    assert!(codes.passed());
    let xor = check_xor_identity().unwrap();
    assert_eq!(xor.cases, 32);
    assert!(xor.passed());
}

#[test]
fn home_codes_are_fair() {
    let mut reg = QuantumRegistry::new();
    let mut rng = RandomStream::from_seed(8080);
    let mut pairs = prepare_sequence(10_000, &mut reg).unwrap();
    let codes = measure_home(&mut pairs, &mut reg, &mut rng).unwrap();
    let zeros = codes.iter().filter(|&&c| !c).count() as u64;
    assert!(within_sigmas(zeros, 10_000, 0.5, 3.0));
    // every travel particle now reads the home code
    for (pair, &c) in pairs.iter().zip(&codes) {
        let p = reg
            .state_of(pair.travel)
            .unwrap()
            .probability(1, Basis::Z, c)
            .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }
}

/// Honest two-user exchange at bit level with codes drawn from real Bell pairs.
fn honest_pair_verdict(a: &Secret, b: &Secret, key: &[bool], rng: &mut RandomStream) -> Verdict {
    let mut reg = QuantumRegistry::new();
    let len = a.len();
    let mut pa = prepare_sequence(len, &mut reg).unwrap();
    let mut pb = prepare_sequence(len, &mut reg).unwrap();
    let ca = measure_home(&mut pa, &mut reg, rng).unwrap();
    let cb = measure_home(&mut pb, &mut reg, rng).unwrap();
    let ma: Vec<bool> = pa
        .iter()
        .map(|p| reg.measure(p.travel, Basis::Z, rng).unwrap().bit)
        .collect();
    let mb: Vec<bool> = pb
        .iter()
        .map(|p| reg.measure(p.travel, Basis::Z, rng).unwrap().bit)
        .collect();
    let report = |from, about, s: &Secret, c: &[bool]| Report {
        from: UserId(from),
        about: UserId(about),
        bits: (0..len)
            .map(|k| encode_report(s.bits()[k], c[k], key[k]))
            .collect(),
    };
    let rab = report(1, 2, a, &ca);
    let rba = report(2, 1, b, &cb);
    let v = tp_compare_pair(&rab, &rba, &ma, &mb).unwrap();
    // swapping roles changes nothing
    assert_eq!(tp_compare_pair(&rba, &rab, &mb, &ma).unwrap(), v);
    v
}

fn first_difference(a: &Secret, b: &Secret) -> Option<usize> {
    a.bits()
        .iter()
        .zip(b.bits())
        .position(|(x, y)| x != y)
        .map(|i| i + 1)
}

#[test]
fn bit_order_examples() {
    let mut rng = RandomStream::from_seed(1);
    let key = rng.bits(4);
    let s = |v| Secret::from_value(v, 3).unwrap();
    assert_eq!(
        honest_pair_verdict(&s(0b101), &s(0b101), &key, &mut rng),
        Verdict::Equal
    );
    assert_eq!(
        honest_pair_verdict(&s(0b100), &s(0b110), &key, &mut rng),
        Verdict::Unequal { first_differing: 2 }
    );
    let t = |v| Secret::from_value(v, 4).unwrap();
    assert_eq!(
        honest_pair_verdict(&t(0b1010), &t(0b0101), &key, &mut rng),
        Verdict::Unequal { first_differing: 1 }
    );
}

#[test]
fn report_bits_are_uniform_for_fixed_secrets() {
    for secret in [Secret::zeros(1), Secret::ones(1)] {
        let mut reg = QuantumRegistry::new();
        let mut rng = RandomStream::from_seed(if secret.bits()[0] { 2 } else { 1 });
        let n = 10_000u64;
        let mut ones = 0;
        for _ in 0..n {
            let key = rng.bit();
            let mut pair = prepare_sequence(1, &mut reg).unwrap();
            let c = measure_home(&mut pair, &mut reg, &mut rng).unwrap()[0];
            ones += encode_report(secret.bits()[0], c, key) as u64;
        }
        assert!(
            !chi_square_fair_bit(ones, n, 0.001).rejected,
            "ones = {ones}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pair_verdict_matches_classical_comparison(
        len in 1usize..=32,
        seed in any::<u64>(),
        force_equal in any::<bool>(),
    ) {
        let mut rng = RandomStream::from_seed(seed);
        let a = Secret::random(len, &mut rng);
        let b = if force_equal { a.clone() } else { Secret::random(len, &mut rng) };
        let key = rng.bits(len);
        let v = honest_pair_verdict(&a, &b, &key, &mut rng);
        let expected = match first_difference(&a, &b) {
            None => Verdict::Equal,
            Some(k) => Verdict::Unequal { first_differing: k },
        };
        prop_assert_eq!(v, expected);
    }

    #[test]
    fn session_matrix_matches_oracle(users in 2usize..=6, bits in 1usize..=32, seed in any::<u64>()) {
        let mut c = SessionConfig::new(users, bits);
        c.seed = seed;
        c.decoys = bits.min(4);
        let out = qpc_sim::run_session(&c).unwrap();
        prop_assert!(!out.aborted());
        prop_assert_eq!(out.matrix, ComparisonMatrix::oracle(&out.secrets));
    }
}
