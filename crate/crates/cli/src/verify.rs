//! Exhaustive invariant checks behind `qpc-sim verify`.

use qpc_sim::protocol::{check_code_identity, check_xor_identity, IdentityCheck};
use qpc_sim::qstate::{make_bell, make_single, Basis, BellState, QuantumRegistry, SingleState};
use qpc_sim::session::modes::{classify_mode, ModeId};
use qpc_sim::session::{qubit_efficiency, ComparisonMatrix};
use qpc_sim::{run_session, Secret, SessionConfig};
use serde::Serialize;

const TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
}

impl CheckResult {
    fn tally(name: &str, outcomes: impl IntoIterator<Item = bool>) -> Self {
        let (mut cases, mut failures) = (0, 0);
        for ok in outcomes {
            cases += 1;
            failures += (!ok) as usize;
        }
        Self {
            name: name.to_string(),
            cases,
            failures,
            passed: cases > 0 && failures == 0,
        }
    }

    fn failed(name: &str, err: impl std::fmt::Display) -> Self {
        Self {
            name: format!("{name} ({err})"),
            cases: 0,
            failures: 1,
            passed: false,
        }
    }
}

impl From<IdentityCheck> for CheckResult {
    fn from(c: IdentityCheck) -> Self {
        Self {
            name: c.name.to_string(),
            cases: c.cases,
            failures: c.failures,
            passed: c.passed(),
        }
    }
}

fn decoy_round_trip() -> CheckResult {
    let outcomes = SingleState::ALL.iter().map(|&s| {
        make_single(s)
            .probability(0, s.basis(), s.bit())
            .is_ok_and(|p| (p - 1.0).abs() < TOL)
    });
    CheckResult::tally("decoy measured in its own basis returns its bit", outcomes)
}

fn bell_correlation() -> CheckResult {
    let phi = make_bell(BellState::PhiPlus);
    let mut outcomes = Vec::new();
    for home in [false, true] {
        for travel in [false, true] {
            let joint = phi.project(0, Basis::Z, home).and_then(|(p, rest)| {
                let q = match rest {
                    Some(r) => r.probability(1, Basis::Z, travel)?,
                    None => 0.0,
                };
                Ok(p * q)
            });
            let expected = if home == travel { 0.5 } else { 0.0 };
            outcomes.push(joint.is_ok_and(|p| (p - expected).abs() < TOL));
        }
    }
    CheckResult::tally("phi+ Z outcomes are perfectly correlated", outcomes)
}

fn efficiency() -> CheckResult {
    let outcomes = (2..=10u64).map(|k| {
        let r = qubit_efficiency(k as usize, 8);
        *r.numer() == 1 && *r.denom() == 2 * k
    });
    CheckResult::tally("qubit efficiency is 1/(2K) for K = 2..10", outcomes)
}

fn exhaustive_two_bit_sessions() -> CheckResult {
    let mut outcomes = Vec::new();
    for a in 0..4u128 {
        for b in 0..4u128 {
            let mut c = SessionConfig::new(2, 2);
            c.seed = (a * 4 + b) as u64;
            c.secrets = Some(vec![
                Secret::from_value(a, 2).expect("fits"),
                Secret::from_value(b, 2).expect("fits"),
            ]);
            outcomes.push(
                run_session(&c).is_ok_and(|o| o.matrix == ComparisonMatrix::oracle(&o.secrets)),
            );
        }
    }
    CheckResult::tally(
        "honest K=2, L=2 sessions agree with classical equality",
        outcomes,
    )
}

fn mode_classification() -> CheckResult {
    let outcomes = (2..=6).map(|k| {
        run_session(&SessionConfig::new(k, 2)).is_ok_and(|o| {
            let (preparers, edges) = o.transcript.quantum_flow();
            classify_mode(&preparers, &edges).id() == Some(ModeId::E)
        })
    });
    CheckResult::tally("session quantum flow classifies as mode e", outcomes)
}

fn registry_accounting() -> CheckResult {
    let mut reg = QuantumRegistry::new();
    let (h, t) = reg.prepare_bell(BellState::PhiPlus);
    let d = reg.prepare_single(SingleState::Minus);
    CheckResult::tally(
        "registry counts two particles per Bell pair",
        [reg.particles_created() == 3, h != t, d != h && d != t],
    )
}

pub fn run_checks() -> Vec<CheckResult> {
    let mut out = vec![
        check_code_identity().map_or_else(|e| CheckResult::failed("code identity", e), Into::into),
        check_xor_identity().map_or_else(|e| CheckResult::failed("xor identity", e), Into::into),
    ];
    out.extend([
        decoy_round_trip(),
        bell_correlation(),
        efficiency(),
        registry_accounting(),
        exhaustive_two_bit_sessions(),
        mode_classification(),
    ]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        let checks = run_checks();
        assert_eq!(checks.len(), 8);
        assert_eq!(checks[0].cases, 4);
        assert_eq!(checks[1].cases, 32);
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
