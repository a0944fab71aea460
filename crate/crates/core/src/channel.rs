//! The user-to-TP quantum link: decoy insertion, block transmission through an
//! optional adversary, and the decoy disclosure/measure/compare check.
//!
//! Every link is one-way into the third party. An adversary tapping a link
//! measures every particle of the block because decoy positions are only
//! disclosed after TP confirms receipt.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::UserId;
use crate::qstate::{
    Basis, MeasurementOutcome, ParticleHandle, QStateError, QuantumRegistry, SingleState,
};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("received sequence has {actual} particles, disclosure expects {expected}")]
    SequenceLength { expected: usize, actual: usize },
    #[error("decoy position {position} outside a sequence of {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("disclosed {positions} positions but {bases} bases")]
    MalformedDisclosure { positions: usize, bases: usize },
    #[error("{actual} decoy results for {expected} decoys")]
    ResultCount { expected: usize, actual: usize },
    #[error("decoys cannot be stripped from a link whose check aborted")]
    StripAfterAbort,
    #[error(transparent)]
    QState(#[from] QStateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyPhoton {
    pub state: SingleState,
    pub basis: Basis,
    pub position: usize,
}

/// The sender's private record of where decoys sit and what they are.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoyManifest {
    total_len: usize,
    /// sorted by position
    decoys: Vec<DecoyPhoton>,
}

impl DecoyManifest {
    pub fn total_len(&self) -> usize {
        self.total_len
    }

    pub fn decoys(&self) -> &[DecoyPhoton] {
        &self.decoys
    }

    /// What the sender announces once TP confirms receipt: positions and
    /// preparation bases, never the states themselves.
    pub fn disclosure(&self) -> DecoyDisclosure {
        DecoyDisclosure {
            total_len: self.total_len,
            positions: self.decoys.iter().map(|d| d.position).collect(),
            bases: self.decoys.iter().map(|d| d.basis).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoyDisclosure {
    pub total_len: usize,
    pub positions: Vec<usize>,
    pub bases: Vec<Basis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckVerdict {
    Clean,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelCheckResult {
    pub decoys_checked: usize,
    pub mismatches: usize,
    pub verdict: CheckVerdict,
}

impl ChannelCheckResult {
    fn from_counts(decoys_checked: usize, mismatches: usize) -> Self {
        let verdict = if mismatches > 0 {
            CheckVerdict::Abort
        } else {
            CheckVerdict::Clean
        };
        Self {
            decoys_checked,
            mismatches,
            verdict,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.verdict == CheckVerdict::Clean
    }

    /// A clean verdict with no decoys behind it.
    pub fn is_vacuous(&self) -> bool {
        self.decoys_checked == 0
    }
}

/// Wraps the travel particles with `decoys` freshly prepared decoy photons at
/// uniformly random distinct positions.
pub fn insert_decoys(
    travel: Vec<ParticleHandle>,
    decoys: usize,
    registry: &mut QuantumRegistry,
    rng: &mut RandomStream,
) -> (Vec<ParticleHandle>, DecoyManifest) {
    let total_len = travel.len() + decoys;
    let positions = rng.distinct_sorted(total_len, decoys);
    let mut manifest = Vec::with_capacity(decoys);
    let mut combined = Vec::with_capacity(total_len);
    let mut payload = travel.into_iter();
    let mut next_decoy = positions.iter().peekable();
    for slot in 0..total_len {
        if next_decoy.peek() == Some(&&slot) {
            next_decoy.next();
            let state = SingleState::ALL[rng.below(4)];
            combined.push(registry.prepare_single(state));
            manifest.push(DecoyPhoton {
                state,
                basis: state.basis(),
                position: slot,
            });
        } else {
            combined.push(payload.next().expect("payload and decoys fill every slot"));
        }
    }
    (
        combined,
        DecoyManifest {
            total_len,
            decoys: manifest,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AdversaryKind {
    None,
    /// Measure each particle and send on a freshly prepared eigenstate of the outcome.
    InterceptResend,
    /// Measure each particle and forward the collapsed particle itself.
    MeasureResend,
    /// A registered user eavesdropping on another user's link; behaves as an
    /// intercept-resend outsider there.
    DishonestUser {
        actor: UserId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisPolicy {
    RandomZOrX,
    AlwaysZ,
    AlwaysX,
}

/// Which links an active adversary taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taps {
    Link(UserId),
    /// Every link the adversary does not own.
    AllLinks,
}

/// Identity credited with an interception in transcripts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attacker {
    Outsider,
    User(UserId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryModel {
    pub kind: AdversaryKind,
    pub basis_policy: BasisPolicy,
    pub taps: Taps,
}

impl Default for AdversaryModel {
    fn default() -> Self {
        Self::none()
    }
}

impl AdversaryModel {
    pub fn none() -> Self {
        Self {
            kind: AdversaryKind::None,
            basis_policy: BasisPolicy::RandomZOrX,
            taps: Taps::Link(UserId(1)),
        }
    }

    /// Outside intercept-resend attacker on P1's link.
    pub fn intercept_resend(basis_policy: BasisPolicy) -> Self {
        Self {
            kind: AdversaryKind::InterceptResend,
            basis_policy,
            taps: Taps::Link(UserId(1)),
        }
    }

    /// Outside measure-resend attacker on P1's link.
    pub fn measure_resend(basis_policy: BasisPolicy) -> Self {
        Self {
            kind: AdversaryKind::MeasureResend,
            basis_policy,
            taps: Taps::Link(UserId(1)),
        }
    }

    /// `actor` taps the link of the lowest-numbered other user.
    pub fn dishonest_user(actor: UserId, basis_policy: BasisPolicy) -> Self {
        let victim = if actor == UserId(1) {
            UserId(2)
        } else {
            UserId(1)
        };
        Self {
            kind: AdversaryKind::DishonestUser { actor },
            basis_policy,
            taps: Taps::Link(victim),
        }
    }

    pub fn with_taps(mut self, taps: Taps) -> Self {
        self.taps = taps;
        self
    }

    pub fn is_active(&self) -> bool {
        self.kind != AdversaryKind::None
    }

    pub fn attacker(&self) -> Option<Attacker> {
        match self.kind {
            AdversaryKind::None => None,
            AdversaryKind::InterceptResend | AdversaryKind::MeasureResend => {
                Some(Attacker::Outsider)
            }
            AdversaryKind::DishonestUser { actor } => Some(Attacker::User(actor)),
        }
    }

    /// Whether this adversary interferes with the link owned by `owner`.
    pub fn taps_link(&self, owner: UserId) -> bool {
        if let AdversaryKind::DishonestUser { actor } = self.kind {
            if actor == owner {
                return false;
            }
        }
        self.is_active()
            && match self.taps {
                Taps::Link(target) => target == owner,
                Taps::AllLinks => true,
            }
    }

    fn resends_fresh(&self) -> bool {
        !matches!(self.kind, AdversaryKind::MeasureResend)
    }

    fn choose_basis(&self, rng: &mut RandomStream) -> Basis {
        match self.basis_policy {
            BasisPolicy::AlwaysZ => Basis::Z,
            BasisPolicy::AlwaysX => Basis::X,
            BasisPolicy::RandomZOrX => {
                if rng.bit() {
                    Basis::X
                } else {
                    Basis::Z
                }
            }
        }
    }
}

/// What an adversary learned on one link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interception {
    pub attacker: Attacker,
    pub link_owner: UserId,
    pub outcomes: Vec<MeasurementOutcome>,
}

/// Sends a block from `owner` to TP through `adversary`.
pub fn transmit(
    block: Vec<ParticleHandle>,
    owner: UserId,
    adversary: &AdversaryModel,
    registry: &mut QuantumRegistry,
    rng: &mut RandomStream,
) -> Result<(Vec<ParticleHandle>, Option<Interception>), ChannelError> {
    let attacker = match adversary.attacker() {
        Some(a) if adversary.taps_link(owner) => a,
        _ => return Ok((block, None)),
    };
    let mut outcomes = Vec::with_capacity(block.len());
    let mut forwarded = Vec::with_capacity(block.len());
    for particle in block {
        let basis = adversary.choose_basis(rng);
        let outcome = registry.measure(particle, basis, rng)?;
        outcomes.push(outcome);
        if adversary.resends_fresh() {
            forwarded.push(registry.prepare_single(SingleState::eigenstate(basis, outcome.bit)));
        } else {
            forwarded.push(particle);
        }
    }
    Ok((
        forwarded,
        Some(Interception {
            attacker,
            link_owner: owner,
            outcomes,
        }),
    ))
}

fn check_layout(received_len: usize, disclosure: &DecoyDisclosure) -> Result<(), ChannelError> {
    if disclosure.total_len != received_len {
        return Err(ChannelError::SequenceLength {
            expected: disclosure.total_len,
            actual: received_len,
        });
    }
    if disclosure.positions.len() != disclosure.bases.len() {
        return Err(ChannelError::MalformedDisclosure {
            positions: disclosure.positions.len(),
            bases: disclosure.bases.len(),
        });
    }
    if let Some(&position) = disclosure.positions.iter().find(|&&p| p >= received_len) {
        return Err(ChannelError::PositionOutOfRange {
            position,
            len: received_len,
        });
    }
    Ok(())
}

/// TP's half of the check: measure each disclosed decoy in its disclosed basis.
pub fn measure_disclosed(
    received: &[ParticleHandle],
    disclosure: &DecoyDisclosure,
    registry: &mut QuantumRegistry,
    rng: &mut RandomStream,
) -> Result<Vec<bool>, ChannelError> {
    check_layout(received.len(), disclosure)?;
    disclosure
        .positions
        .iter()
        .zip(&disclosure.bases)
        .map(|(&pos, &basis)| Ok(registry.measure(received[pos], basis, rng)?.bit))
        .collect()
}

/// The sender's half: compare TP's results with the prepared bits.
pub fn compare_decoys(
    manifest: &DecoyManifest,
    results: &[bool],
) -> Result<ChannelCheckResult, ChannelError> {
    if results.len() != manifest.decoys.len() {
        return Err(ChannelError::ResultCount {
            expected: manifest.decoys.len(),
            actual: results.len(),
        });
    }
    let mismatches = manifest
        .decoys
        .iter()
        .zip(results)
        .filter(|(d, &r)| d.state.bit() != r)
        .count();
    Ok(ChannelCheckResult::from_counts(results.len(), mismatches))
}

/// Full decoy check on one received block.
pub fn run_decoy_check(
    received: &[ParticleHandle],
    manifest: &DecoyManifest,
    registry: &mut QuantumRegistry,
    tp_rng: &mut RandomStream,
) -> Result<ChannelCheckResult, ChannelError> {
    let results = measure_disclosed(received, &manifest.disclosure(), registry, tp_rng)?;
    compare_decoys(manifest, &results)
}

/// Drops the disclosed decoys, restoring the travel particles in order.
pub fn strip_decoys(
    received: Vec<ParticleHandle>,
    disclosure: &DecoyDisclosure,
    check: &ChannelCheckResult,
) -> Result<Vec<ParticleHandle>, ChannelError> {
    if !check.is_clean() {
        return Err(ChannelError::StripAfterAbort);
    }
    check_layout(received.len(), disclosure)?;
    let decoy_slots: BTreeSet<usize> = disclosure.positions.iter().copied().collect();
    Ok(received
        .into_iter()
        .enumerate()
        .filter(|(slot, _)| !decoy_slots.contains(slot))
        .map(|(_, particle)| particle)
        .collect())
}
