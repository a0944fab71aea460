//! Ordered record of everything that happens in a session, with a visibility
//! set on each entry so privacy checks can look at one observer's view.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bitstr;
use crate::channel::{Attacker, CheckVerdict};
use crate::protocol::{UserId, Verdict};
use crate::qstate::{Basis, MeasurementOutcome};

/// A party that can observe transcript entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User(UserId),
    ThirdParty,
    /// An outside eavesdropper.
    Outsider,
}

impl From<Attacker> for Role {
    fn from(a: Attacker) -> Self {
        match a {
            Attacker::Outsider => Role::Outsider,
            Attacker::User(u) => Role::User(u),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    /// Sent over the public classical channel or physically observable.
    Public,
    Only(Vec<Role>),
}

impl Visibility {
    pub fn admits(&self, role: Role) -> bool {
        match self {
            Visibility::Public => true,
            Visibility::Only(roles) => roles.contains(&role),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum Event {
    KeyShared {
        pair: (UserId, UserId),
        #[serde(with = "bitstr")]
        key: Vec<bool>,
    },
    Prepared {
        user: UserId,
        bell_pairs: usize,
    },
    DecoysInserted {
        user: UserId,
        decoys: usize,
    },
    QuantumBlock {
        from: Role,
        to: Role,
        particles: usize,
    },
    Intercepted {
        attacker: Attacker,
        link_owner: UserId,
        outcomes: Vec<MeasurementOutcome>,
    },
    ReceiptConfirmed {
        user: UserId,
        particles: usize,
    },
    DecoyDisclosure {
        user: UserId,
        positions: Vec<usize>,
        bases: Vec<Basis>,
    },
    DecoyResults {
        user: UserId,
        #[serde(with = "bitstr")]
        bits: Vec<bool>,
    },
    ChannelVerdict {
        user: UserId,
        decoys_checked: usize,
        mismatches: usize,
        verdict: CheckVerdict,
    },
    SessionHalted {
        by: Vec<UserId>,
    },
    HomeMeasured {
        user: UserId,
        particles: usize,
    },
    ReportPublished {
        from: UserId,
        about: UserId,
        #[serde(with = "bitstr")]
        bits: Vec<bool>,
    },
    DecoysDropped {
        user: UserId,
        decoys: usize,
    },
    TravelMeasured {
        user: UserId,
        particles: usize,
    },
    ComparisonAnnounced {
        pair: (UserId, UserId),
        verdict: Verdict,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub seq: usize,
    pub visibility: Visibility,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<Entry>,
}

/// Per-participant operation tallies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OperationCounts {
    pub prepare: BTreeMap<UserId, usize>,
    pub transmit: BTreeMap<UserId, usize>,
    pub home_measure: BTreeMap<UserId, usize>,
    /// TP's travel-measurement passes, by link owner
    pub travel_measure: BTreeMap<UserId, usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParticleCounts {
    pub bell_particles: usize,
    pub decoys: usize,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, visibility: Visibility, event: Event) {
        let seq = self.entries.len();
        self.entries.push(Entry {
            seq,
            visibility,
            event,
        });
    }

    pub fn private(&mut self, role: Role, event: Event) {
        self.push(Visibility::Only(vec![role]), event);
    }

    pub fn public(&mut self, event: Event) {
        self.push(Visibility::Public, event);
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries `role` may observe, in order.
    pub fn view(&self, role: Role) -> impl Iterator<Item = &Entry> + '_ {
        self.entries
            .iter()
            .filter(move |e| e.visibility.admits(role))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn operation_counts(&self) -> OperationCounts {
        let mut c = OperationCounts::default();
        for e in &self.entries {
            match &e.event {
                Event::Prepared { user, .. } => *c.prepare.entry(*user).or_default() += 1,
                Event::QuantumBlock {
                    from: Role::User(u),
                    ..
                } => *c.transmit.entry(*u).or_default() += 1,
                Event::HomeMeasured { user, .. } => *c.home_measure.entry(*user).or_default() += 1,
                Event::TravelMeasured { user, .. } => {
                    *c.travel_measure.entry(*user).or_default() += 1
                }
                _ => {}
            }
        }
        c
    }

    pub fn particle_counts(&self) -> ParticleCounts {
        let mut c = ParticleCounts::default();
        for e in &self.entries {
            match e.event {
                Event::Prepared { bell_pairs, .. } => c.bell_particles += 2 * bell_pairs,
                Event::DecoysInserted { decoys, .. } => c.decoys += decoys,
                _ => {}
            }
        }
        c
    }

    /// Preparers and directed quantum transmission edges, deduplicated.
    pub fn quantum_flow(&self) -> (Vec<Role>, Vec<(Role, Role)>) {
        let mut preparers = Vec::new();
        let mut edges = Vec::new();
        for e in &self.entries {
            match e.event {
                Event::Prepared { user, .. } if !preparers.contains(&Role::User(user)) => {
                    preparers.push(Role::User(user))
                }
                Event::QuantumBlock { from, to, .. } if !edges.contains(&(from, to)) => {
                    edges.push((from, to))
                }
                _ => {}
            }
        }
        (preparers, edges)
    }
}
