//! End-to-end execution of one K-user comparison session, plus metrics.

pub mod modes;
mod trials;

pub use trials::{run_trials, PairRecord, ReportBitFrequency, TrialRecord, TrialsSummary};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, AdversaryKind, AdversaryModel, ChannelCheckResult, Taps};
use crate::protocol::{KeyTable, ProtocolError, Secret, ThirdParty, User, UserId, Verdict};
use crate::qstate::QuantumRegistry;
use crate::rng::{Owner, Purpose, RandomStream};
use crate::transcript::{Event, ParticleCounts, Role, Transcript, Visibility};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("at least 2 users are required, got {0}")]
    TooFewUsers(usize),
    #[error("secret length must be at least 1")]
    NoBits,
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("{given} explicit secrets for {users} users")]
    SecretCount { given: usize, users: usize },
    #[error("secret of {user} has {actual} bits, expected {expected}")]
    SecretLength {
        user: UserId,
        expected: usize,
        actual: usize,
    },
    #[error("adversary refers to {0}, which is not a session user")]
    UnknownAdversaryUser(UserId),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub users: usize,
    pub bits: usize,
    pub decoys: usize,
    pub adversary: AdversaryModel,
    pub seed: u64,
    pub trials: u64,
    /// explicit secrets, else drawn uniformly per trial
    pub secrets: Option<Vec<Secret>>,
}

impl SessionConfig {
    /// Honest defaults with `decoys = bits`.
    pub fn new(users: usize, bits: usize) -> Self {
        Self {
            users,
            bits,
            decoys: bits,
            adversary: AdversaryModel::none(),
            seed: 0,
            trials: 1,
            secrets: None,
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.users < 2 {
            return Err(SessionError::TooFewUsers(self.users));
        }
        if self.bits < 1 {
            return Err(SessionError::NoBits);
        }
        if self.trials < 1 {
            return Err(SessionError::NoTrials);
        }
        if let Some(secrets) = &self.secrets {
            if secrets.len() != self.users {
                return Err(SessionError::SecretCount {
                    given: secrets.len(),
                    users: self.users,
                });
            }
            for (i, s) in secrets.iter().enumerate() {
                if s.len() != self.bits {
                    return Err(SessionError::SecretLength {
                        user: UserId::from_index(i),
                        expected: self.bits,
                        actual: s.len(),
                    });
                }
            }
        }
        let in_range = |u: UserId| (1..=self.users).contains(&u.0);
        if let AdversaryKind::DishonestUser { actor } = self.adversary.kind {
            if !in_range(actor) {
                return Err(SessionError::UnknownAdversaryUser(actor));
            }
        }
        if let Taps::Link(target) = self.adversary.taps {
            if self.adversary.is_active() && !in_range(target) {
                return Err(SessionError::UnknownAdversaryUser(target));
            }
        }
        Ok(())
    }

    pub fn user_ids(&self) -> impl Iterator<Item = UserId> {
        (1..=self.users).map(UserId)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    #[serde(rename = "self")]
    SelfCell,
    Equal,
    Unequal,
    Aborted,
}

impl From<Verdict> for Cell {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Equal => Cell::Equal,
            Verdict::Unequal { .. } => Cell::Unequal,
        }
    }
}

/// Symmetric K-by-K table of pair verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComparisonMatrix {
    cells: Vec<Vec<Cell>>,
}

impl ComparisonMatrix {
    fn filled(users: usize, off_diagonal: Cell) -> Self {
        let cells = (0..users)
            .map(|i| {
                (0..users)
                    .map(|j| if i == j { Cell::SelfCell } else { off_diagonal })
                    .collect()
            })
            .collect();
        Self { cells }
    }

    pub fn all_aborted(users: usize) -> Self {
        Self::filled(users, Cell::Aborted)
    }

    /// Classical pairwise equality of the secrets.
    pub fn oracle(secrets: &[Secret]) -> Self {
        let mut m = Self::filled(secrets.len(), Cell::Equal);
        for (i, a) in secrets.iter().enumerate() {
            for (j, b) in secrets.iter().enumerate() {
                if i != j && a != b {
                    m.cells[i][j] = Cell::Unequal;
                }
            }
        }
        m
    }

    fn set(&mut self, i: UserId, j: UserId, cell: Cell) {
        self.cells[i.index()][j.index()] = cell;
        self.cells[j.index()][i.index()] = cell;
    }

    pub fn get(&self, i: UserId, j: UserId) -> Cell {
        self.cells[i.index()][j.index()]
    }

    pub fn users(&self) -> usize {
        self.cells.len()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.cells
    }

    /// Off-diagonal pairs `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (UserId, UserId, Cell)> + '_ {
        let k = self.users();
        (0..k).flat_map(move |i| {
            ((i + 1)..k).map(move |j| {
                (
                    UserId::from_index(i),
                    UserId::from_index(j),
                    self.cells[i][j],
                )
            })
        })
    }
}

/// `L / 2KL` in lowest terms.
pub fn qubit_efficiency(users: usize, bits: usize) -> Ratio<u64> {
    Ratio::new(bits as u64, 2 * users as u64 * bits as u64)
}

mod ratio_str {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio<u64>, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(&format_args!("{}/{}", r.numer(), r.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Ratio<u64>, D::Error> {
        let s = String::deserialize(de)?;
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected n/d"))?;
        let n = n.parse().map_err(serde::de::Error::custom)?;
        let d = d.parse().map_err(serde::de::Error::custom)?;
        Ok(Ratio::new(n, d))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub equal: usize,
    pub unequal: usize,
    pub aborted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub compared_bits: usize,
    /// Bell-pair particles only
    pub consumed_particles: usize,
    pub decoy_particles: usize,
    #[serde(with = "ratio_str")]
    pub qubit_efficiency: Ratio<u64>,
    /// efficiency counting decoys as consumed
    #[serde(with = "ratio_str")]
    pub qubit_efficiency_gross: Ratio<u64>,
    pub aborted: bool,
    /// 1.0 when an active adversary was caught, else 0.0
    pub detection_rate: f64,
    /// a clean verdict that rests on zero decoys
    pub zero_coverage: bool,
    pub decoys_checked: usize,
    pub mismatches: usize,
    pub verdicts: VerdictCounts,
}

/// One link's Step 2 result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LinkCheck {
    pub owner: UserId,
    pub tapped: bool,
    pub check: ChannelCheckResult,
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub matrix: ComparisonMatrix,
    pub transcript: Transcript,
    pub metrics: SessionMetrics,
    pub secrets: Vec<Secret>,
    pub links: Vec<LinkCheck>,
}

impl SessionOutcome {
    pub fn aborted(&self) -> bool {
        self.metrics.aborted
    }
}

/// Runs trial 0 of `config`.
pub fn run_session(config: &SessionConfig) -> Result<SessionOutcome, SessionError> {
    config.validate()?;
    run_trial(config, 0)
}

fn stream(config: &SessionConfig, trial: u64, owner: Owner, purpose: Purpose) -> RandomStream {
    RandomStream::derive(config.seed, trial, owner, purpose)
}

fn link_stream(
    config: &SessionConfig,
    trial: u64,
    owner: Owner,
    purpose: Purpose,
    link: UserId,
) -> RandomStream {
    RandomStream::derive_lane(config.seed, trial, owner, purpose, link.0 as u64)
}

/// Runs one fully isolated trial with streams keyed by `(seed, trial, ..)`.
pub(crate) fn run_trial(
    config: &SessionConfig,
    trial: u64,
) -> Result<SessionOutcome, SessionError> {
    let k = config.users;
    let l = config.bits;
    let mut registry = QuantumRegistry::new();
    let mut transcript = Transcript::new();

    // Preliminary
    let secrets: Vec<Secret> = match &config.secrets {
        Some(s) => s.clone(),
        None => config
            .user_ids()
            .map(|u| {
                Secret::random(
                    l,
                    &mut stream(config, trial, Owner::User(u.0), Purpose::Secrets),
                )
            })
            .collect(),
    };
    let keys = KeyTable::establish(
        k,
        l,
        &mut stream(config, trial, Owner::Session, Purpose::Keys),
    );
    for (&(i, j), key) in keys.iter() {
        transcript.push(
            Visibility::Only(vec![Role::User(i), Role::User(j)]),
            Event::KeyShared {
                pair: (i, j),
                key: key.clone(),
            },
        );
    }
    let mut users = config
        .user_ids()
        .zip(secrets.iter().cloned())
        .map(|(id, s)| User::new(id, s, &keys, k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tp = ThirdParty::new();

    // Steps 1 and 2, link by link
    let mut links = Vec::with_capacity(k);
    for user in users.iter_mut() {
        let id = user.id();
        let me = Role::User(id);
        let bell_pairs = user.prepare(&mut registry)?;
        transcript.private(
            me,
            Event::Prepared {
                user: id,
                bell_pairs,
            },
        );

        let mut decoy_rng = stream(config, trial, Owner::User(id.0), Purpose::Decoys);
        let block = user.emit_block(config.decoys, &mut registry, &mut decoy_rng)?;
        transcript.private(
            me,
            Event::DecoysInserted {
                user: id,
                decoys: config.decoys,
            },
        );

        let mut adv_rng = link_stream(config, trial, Owner::Adversary, Purpose::Adversary, id);
        let particles = block.len();
        let (received, interception) =
            channel::transmit(block, id, &config.adversary, &mut registry, &mut adv_rng)
                .map_err(ProtocolError::from)?;
        transcript.public(Event::QuantumBlock {
            from: me,
            to: Role::ThirdParty,
            particles,
        });
        if let Some(tap) = interception {
            transcript.private(
                tap.attacker.into(),
                Event::Intercepted {
                    attacker: tap.attacker,
                    link_owner: tap.link_owner,
                    outcomes: tap.outcomes,
                },
            );
        }

        let receipt = tp.receive(id, received)?;
        transcript.public(Event::ReceiptConfirmed {
            user: id,
            particles: receipt.particles,
        });
        let disclosure = user.disclose(&receipt)?;
        transcript.public(Event::DecoyDisclosure {
            user: id,
            positions: disclosure.positions.clone(),
            bases: disclosure.bases.clone(),
        });
        let mut check_rng = link_stream(config, trial, Owner::ThirdParty, Purpose::DecoyCheck, id);
        let results = tp.measure_decoys(id, disclosure, &mut registry, &mut check_rng)?;
        transcript.public(Event::DecoyResults {
            user: id,
            bits: results.clone(),
        });
        let check = user.judge(&results)?;
        transcript.public(Event::ChannelVerdict {
            user: id,
            decoys_checked: check.decoys_checked,
            mismatches: check.mismatches,
            verdict: check.verdict,
        });
        tp.accept_verdict(id, &check)?;
        links.push(LinkCheck {
            owner: id,
            tapped: config.adversary.taps_link(id),
            check,
        });
    }

    let halted_by: Vec<UserId> = links
        .iter()
        .filter(|c| !c.check.is_clean())
        .map(|c| c.owner)
        .collect();
    let aborted = !halted_by.is_empty();
    let matrix = if aborted {
        transcript.public(Event::SessionHalted { by: halted_by });
        ComparisonMatrix::all_aborted(k)
    } else {
        // Step 3
        for user in users.iter_mut() {
            let id = user.id();
            let mut rng = stream(config, trial, Owner::User(id.0), Purpose::HomeMeasurement);
            let particles = user.measure_home(&mut registry, &mut rng)?.len();
            transcript.private(
                Role::User(id),
                Event::HomeMeasured {
                    user: id,
                    particles,
                },
            );
            for report in user.publish_reports()? {
                transcript.public(Event::ReportPublished {
                    from: report.from,
                    about: report.about,
                    bits: report.bits.clone(),
                });
                tp.receive_report(report);
            }
        }
        // Step 4
        for link in &links {
            let id = link.owner;
            let decoys = tp.strip(id, &link.check)?;
            transcript.private(Role::ThirdParty, Event::DecoysDropped { user: id, decoys });
            let mut rng = link_stream(
                config,
                trial,
                Owner::ThirdParty,
                Purpose::TravelMeasurement,
                id,
            );
            let particles = tp.measure_travel(id, &mut registry, &mut rng)?.len();
            transcript.private(
                Role::ThirdParty,
                Event::TravelMeasured {
                    user: id,
                    particles,
                },
            );
        }
        // Step 5
        let mut matrix = ComparisonMatrix::all_aborted(k);
        for i in config.user_ids() {
            for j in config.user_ids().filter(|&j| j > i) {
                let verdict = tp.compare(i, j)?;
                transcript.push(
                    Visibility::Only(vec![Role::User(i), Role::User(j), Role::ThirdParty]),
                    Event::ComparisonAnnounced {
                        pair: (i, j),
                        verdict,
                    },
                );
                matrix.set(i, j, verdict.into());
            }
        }
        matrix
    };

    let metrics = compute_metrics(config, &transcript, &matrix, &links, aborted);
    Ok(SessionOutcome {
        matrix,
        transcript,
        metrics,
        secrets,
        links,
    })
}

fn compute_metrics(
    config: &SessionConfig,
    transcript: &Transcript,
    matrix: &ComparisonMatrix,
    links: &[LinkCheck],
    aborted: bool,
) -> SessionMetrics {
    let ParticleCounts {
        bell_particles,
        decoys,
    } = transcript.particle_counts();
    let compared = config.bits as u64;
    let mut verdicts = VerdictCounts::default();
    for (_, _, cell) in matrix.pairs() {
        match cell {
            Cell::Equal => verdicts.equal += 1,
            Cell::Unequal => verdicts.unequal += 1,
            Cell::Aborted => verdicts.aborted += 1,
            Cell::SelfCell => {}
        }
    }
    SessionMetrics {
        compared_bits: config.bits,
        consumed_particles: bell_particles,
        decoy_particles: decoys,
        qubit_efficiency: Ratio::new(compared, bell_particles as u64),
        qubit_efficiency_gross: Ratio::new(compared, (bell_particles + decoys) as u64),
        aborted,
        detection_rate: if aborted && config.adversary.is_active() {
            1.0
        } else {
            0.0
        },
        zero_coverage: links.iter().any(|c| c.check.is_vacuous()),
        decoys_checked: links.iter().map(|c| c.check.decoys_checked).sum(),
        mismatches: links.iter().map(|c| c.check.mismatches).sum(),
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::BasisPolicy;

    fn secrets(values: &[u128], bits: usize) -> Vec<Secret> {
        values
            .iter()
            .map(|&v| Secret::from_value(v, bits).unwrap())
            .collect()
    }

    #[test]
    fn two_equal_users() {
        let mut c = SessionConfig::new(2, 8);
        c.secrets = Some(secrets(&[0xA5, 0xA5], 8));
        let out = run_session(&c).unwrap();
        assert_eq!(out.matrix.get(UserId(1), UserId(2)), Cell::Equal);
        assert_eq!(out.matrix.get(UserId(2), UserId(1)), Cell::Equal);
        assert_eq!(out.matrix.get(UserId(1), UserId(1)), Cell::SelfCell);
    }

    #[test]
    fn three_users_five_five_nine() {
        let mut c = SessionConfig::new(3, 4);
        c.secrets = Some(secrets(&[5, 5, 9], 4));
        c.seed = 17;
        let out = run_session(&c).unwrap();
        assert_eq!(out.matrix, ComparisonMatrix::oracle(&out.secrets));
        assert_eq!(out.matrix.get(UserId(1), UserId(2)), Cell::Equal);
        assert_eq!(out.matrix.get(UserId(1), UserId(3)), Cell::Unequal);
        assert_eq!(out.matrix.get(UserId(2), UserId(3)), Cell::Unequal);
        assert_eq!(
            out.metrics.verdicts,
            VerdictCounts {
                equal: 1,
                unequal: 2,
                aborted: 0
            }
        );
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(qubit_efficiency(2, 8), Ratio::new(1, 4));
        assert_eq!(qubit_efficiency(5, 100), Ratio::new(1, 10));
        assert_eq!(qubit_efficiency(2, 1), Ratio::new(1, 4));
    }

    #[test]
    fn metrics_account_particles() {
        let mut c = SessionConfig::new(3, 5);
        c.decoys = 2;
        let out = run_session(&c).unwrap();
        let m = &out.metrics;
        assert_eq!(m.consumed_particles, 2 * 3 * 5);
        assert_eq!(m.decoy_particles, 3 * 2);
        assert_eq!(m.qubit_efficiency, Ratio::new(1, 6));
        assert_eq!(m.qubit_efficiency_gross, Ratio::new(5, 36));
        assert!(!m.zero_coverage);
        assert_eq!(m.decoys_checked, 6);
    }

    #[test]
    fn abort_fills_matrix() {
        // d = 30 makes survival (3/4)^30 < 2e-4; seed fixed
        let mut c = SessionConfig::new(3, 4);
        c.decoys = 30;
        c.adversary = AdversaryModel::intercept_resend(BasisPolicy::RandomZOrX);
        let out = run_session(&c).unwrap();
        assert!(out.aborted());
        assert_eq!(out.matrix, ComparisonMatrix::all_aborted(3));
        assert_eq!(out.metrics.detection_rate, 1.0);
        assert!(out.links[0].tapped && !out.links[1].tapped);
        assert!(!out
            .transcript
            .entries()
            .iter()
            .any(|e| matches!(e.event, Event::HomeMeasured { .. })));
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            SessionConfig::new(1, 4).validate(),
            Err(SessionError::TooFewUsers(1))
        );
        assert_eq!(
            SessionConfig::new(2, 0).validate(),
            Err(SessionError::NoBits)
        );
        let mut c = SessionConfig::new(2, 4);
        c.trials = 0;
        assert_eq!(c.validate(), Err(SessionError::NoTrials));
        let mut c = SessionConfig::new(2, 4);
        c.secrets = Some(secrets(&[1], 4));
        assert!(matches!(
            c.validate(),
            Err(SessionError::SecretCount { .. })
        ));
        c.secrets = Some(secrets(&[1, 2], 3));
        assert!(matches!(
            c.validate(),
            Err(SessionError::SecretLength { .. })
        ));
        let mut c = SessionConfig::new(2, 4);
        c.adversary = AdversaryModel::dishonest_user(UserId(3), BasisPolicy::AlwaysZ);
        assert_eq!(
            c.validate(),
            Err(SessionError::UnknownAdversaryUser(UserId(3)))
        );
    }

    #[test]
    fn matrix_json_shape() {
        let out = run_session(&{
            let mut c = SessionConfig::new(2, 3);
            c.secrets = Some(secrets(&[3, 3], 3));
            c
        })
        .unwrap();
        assert_eq!(
            serde_json::to_string(&out.matrix).unwrap(),
            r#"[["self","equal"],["equal","self"]]"#
        );
    }
}
