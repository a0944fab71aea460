//! Participant state machines for the comparison protocol.
//!
//! Each user `P_i` holds an `L`-bit secret split into one-bit groups
//! (most significant first) and shares an `L`-bit key with every other user.
//! A run proceeds:
//!
//! 1. every user prepares `L` copies of `|phi+>` and keeps qubit 0 (home),
//! 2. the travel qubits are wrapped in decoys and sent to TP as one block,
//!    then checked through the decoy disclosure,
//! 3. users measure their home particles in Z, giving codes `C^k`, and publish
//!    `R^k = G^k xor C^k xor K^k` for each counterpart,
//! 4. TP drops the decoys and measures the travel particles in Z,
//! 5. TP decides each pair from `R_ij^k xor R_ji^k xor C_T^k`.
//!
//! Calls made out of order return [`ProtocolError::StepOrder`]; they indicate a
//! driver bug, not a protocol abort.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstr;
use crate::channel::{self, ChannelCheckResult, ChannelError, DecoyDisclosure, DecoyManifest};
use crate::qstate::{Basis, BellState, ParticleHandle, QStateError, QuantumRegistry};
use crate::rng::RandomStream;

/// A user identifier, numbered from 1 like `P_1 .. P_K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

impl UserId {
    /// Zero-based position of this user.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        Self(index + 1)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("{who}: {action} is not allowed in phase {phase}")]
    StepOrder {
        who: String,
        action: &'static str,
        phase: &'static str,
    },
    #[error("home particle {k} already measured")]
    DoubleMeasurement { k: usize },
    #[error("length mismatch: {what} has {actual} bits, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("no report from {from} about {about}")]
    MissingReport { from: UserId, about: UserId },
    #[error("no travel measurement recorded for {0}")]
    MissingMeasurement(UserId),
    #[error("receipt belongs to {receipt} but was presented to {user}")]
    ForeignReceipt { receipt: UserId, user: UserId },
    #[error(transparent)]
    Secret(#[from] SecretError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    QState(#[from] QStateError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecretError {
    #[error("malformed secret literal {0:?} (expected 0b..., 0x... or decimal)")]
    Malformed(String),
    #[error("secret literal {literal:?} needs more than {bits} bits")]
    TooWide { literal: String, bits: usize },
}

/// An `L`-bit secret, most significant bit first. Bit `k-1` is group `G^k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Secret {
    bits: Vec<bool>,
}

impl Secret {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self::from_bits(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self::from_bits(vec![true; len])
    }

    pub fn random(len: usize, rng: &mut RandomStream) -> Self {
        Self::from_bits(rng.bits(len))
    }

    /// `value` written with exactly `len` bits.
    pub fn from_value(value: u128, len: usize) -> Result<Self, SecretError> {
        if len < 128 && value >> len != 0 {
            return Err(SecretError::TooWide {
                literal: value.to_string(),
                bits: len,
            });
        }
        let bits = (0..len)
            .rev()
            .map(|i| i < 128 && (value >> i) & 1 == 1)
            .collect();
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Group `G^k`, with `k` counted from 1.
    pub fn group(&self, k: usize) -> bool {
        self.bits[k - 1]
    }

    /// Pads or trims leading zeros to exactly `len` bits.
    pub fn fit(&self, len: usize) -> Result<Self, SecretError> {
        let n = self.bits.len();
        if n <= len {
            let mut bits = vec![false; len - n];
            bits.extend_from_slice(&self.bits);
            return Ok(Self { bits });
        }
        let (head, tail) = self.bits.split_at(n - len);
        if head.iter().any(|&b| b) {
            return Err(SecretError::TooWide {
                literal: self.to_string(),
                bits: len,
            });
        }
        Ok(Self {
            bits: tail.to_vec(),
        })
    }
}

impl fmt::Display for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0b{}", bitstr::to_string(&self.bits))
    }
}

/// Parses `0b1010`, `0x5` or a decimal literal. Binary literals keep their
/// digit count (leading zeros included); the others use the minimal width.
impl FromStr for Secret {
    type Err = SecretError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || SecretError::Malformed(s.to_string());
        let t = s.trim().replace('_', "");
        if let Some(digits) = t.strip_prefix("0b").or_else(|| t.strip_prefix("0B")) {
            if digits.is_empty() {
                return Err(malformed());
            }
            return bitstr::from_str(digits)
                .map(Secret::from_bits)
                .ok_or_else(malformed);
        }
        if let Some(digits) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            if digits.is_empty() {
                return Err(malformed());
            }
            let mut bits = Vec::with_capacity(digits.len() * 4);
            for c in digits.chars() {
                let nibble = c.to_digit(16).ok_or_else(malformed)?;
                bits.extend((0..4).rev().map(|i| (nibble >> i) & 1 == 1));
            }
            return Ok(Secret::from_bits(bits));
        }
        if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit()) {
            return Err(malformed());
        }
        let value: u128 = t.parse().map_err(|_| malformed())?;
        let width = (128 - value.leading_zeros() as usize).max(1);
        Secret::from_value(value, width)
    }
}

impl Serialize for Secret {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Secret {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Pairwise keys from the trusted key-sharing oracle. `{i, j}` and `{j, i}`
/// resolve to the same entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyTable {
    len: usize,
    entries: BTreeMap<(UserId, UserId), Vec<bool>>,
}

fn unordered(a: UserId, b: UserId) -> (UserId, UserId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl KeyTable {
    /// Uniform fresh keys for every pair among `users`.
    pub fn establish(users: usize, len: usize, rng: &mut RandomStream) -> Self {
        let mut entries = BTreeMap::new();
        for i in 1..=users {
            for j in (i + 1)..=users {
                entries.insert((UserId(i), UserId(j)), rng.bits(len));
            }
        }
        Self { len, entries }
    }

    pub fn key_len(&self) -> usize {
        self.len
    }

    pub fn get(&self, a: UserId, b: UserId) -> Option<&[bool]> {
        self.entries.get(&unordered(a, b)).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(UserId, UserId), &Vec<bool>)> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairPhase {
    Prepared,
    HomeMeasured,
}

/// One `|phi+>` of a user's sequence. Qubit 0 is the home particle, qubit 1
/// travels to TP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticlePair {
    /// 1-based position `k` in the sequence
    pub index: usize,
    pub home: ParticleHandle,
    pub travel: ParticleHandle,
    pub phase: PairPhase,
}

pub fn prepare_sequence(
    len: usize,
    registry: &mut QuantumRegistry,
) -> Result<Vec<ParticlePair>, ProtocolError> {
    if len == 0 {
        return Err(ProtocolError::EmptySequence);
    }
    Ok((1..=len)
        .map(|index| {
            let (home, travel) = registry.prepare_bell(BellState::PhiPlus);
            ParticlePair {
                index,
                home,
                travel,
                phase: PairPhase::Prepared,
            }
        })
        .collect())
}

/// Z-measures every home particle; returns the codes `C^1 .. C^L`.
pub fn measure_home(
    pairs: &mut [ParticlePair],
    registry: &mut QuantumRegistry,
    rng: &mut RandomStream,
) -> Result<Vec<bool>, ProtocolError> {
    if let Some(p) = pairs.iter().find(|p| p.phase == PairPhase::HomeMeasured) {
        return Err(ProtocolError::DoubleMeasurement { k: p.index });
    }
    let mut codes = Vec::with_capacity(pairs.len());
    for pair in pairs.iter_mut() {
        codes.push(registry.measure(pair.home, Basis::Z, rng)?.bit);
        pair.phase = PairPhase::HomeMeasured;
    }
    Ok(codes)
}

pub fn encode_report(secret_bit: bool, code_bit: bool, key_bit: bool) -> bool {
    secret_bit ^ code_bit ^ key_bit
}

/// TP's code for one position: 0 when both travel outcomes agree.
pub fn tp_code(m_i: bool, m_j: bool) -> bool {
    m_i != m_j
}

/// A user's published report about one counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub from: UserId,
    pub about: UserId,
    #[serde(with = "bitstr")]
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "result")]
pub enum Verdict {
    Equal,
    /// `first_differing` is the 1-based group index where the scan stopped.
    Unequal {
        first_differing: usize,
    },
}

/// Pair decision over `R_ij^k xor R_ji^k xor C_T^k`, stopping at the first
/// nonzero position.
pub fn tp_compare_pair(
    report_ij: &Report,
    report_ji: &Report,
    tp_bits_i: &[bool],
    tp_bits_j: &[bool],
) -> Result<Verdict, ProtocolError> {
    let len = report_ij.bits.len();
    for (what, actual) in [
        ("counterpart report", report_ji.bits.len()),
        ("TP record of first user", tp_bits_i.len()),
        ("TP record of second user", tp_bits_j.len()),
    ] {
        if actual != len {
            return Err(ProtocolError::LengthMismatch {
                what,
                expected: len,
                actual,
            });
        }
    }
    for k in 0..len {
        let r = report_ij.bits[k] ^ report_ji.bits[k] ^ tp_code(tp_bits_i[k], tp_bits_j[k]);
        if r {
            return Ok(Verdict::Unequal {
                first_differing: k + 1,
            });
        }
    }
    Ok(Verdict::Equal)
}

/// TP's private bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TpRecord {
    pub measurements: BTreeMap<UserId, Vec<bool>>,
    pub reports: BTreeMap<(UserId, UserId), Report>,
}

/// Z-measures a user's restored travel sequence and files the result.
pub fn tp_measure_travel(
    record: &mut TpRecord,
    user: UserId,
    travel: &[ParticleHandle],
    registry: &mut QuantumRegistry,
    rng: &mut RandomStream,
) -> Result<Vec<bool>, ProtocolError> {
    let bits = travel
        .iter()
        .map(|&p| Ok(registry.measure(p, Basis::Z, rng)?.bit))
        .collect::<Result<Vec<bool>, ProtocolError>>()?;
    record.measurements.insert(user, bits.clone());
    Ok(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum UserPhase {
    Keyed,
    Prepared,
    Sent,
    Disclosed,
    Cleared,
    Halted,
    Measured,
    Reported,
}

impl UserPhase {
    fn name(self) -> &'static str {
        match self {
            Self::Keyed => "keyed",
            Self::Prepared => "prepared",
            Self::Sent => "sent",
            Self::Disclosed => "disclosed",
            Self::Cleared => "cleared",
            Self::Halted => "halted",
            Self::Measured => "measured",
            Self::Reported => "reported",
        }
    }
}

/// TP's acknowledgement that a block arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub from: UserId,
    pub particles: usize,
}

/// User `P_i`.
#[derive(Debug, Clone)]
pub struct User {
    id: UserId,
    secret: Secret,
    keys: BTreeMap<UserId, Vec<bool>>,
    phase: UserPhase,
    pairs: Vec<ParticlePair>,
    manifest: Option<DecoyManifest>,
    check: Option<ChannelCheckResult>,
    codes: Vec<bool>,
}

impl User {
    /// Preliminary: take the secret and this user's row of the key table.
    pub fn new(
        id: UserId,
        secret: Secret,
        keys: &KeyTable,
        users: usize,
    ) -> Result<Self, ProtocolError> {
        if secret.len() != keys.key_len() {
            return Err(ProtocolError::LengthMismatch {
                what: "secret",
                expected: keys.key_len(),
                actual: secret.len(),
            });
        }
        let mut own = BTreeMap::new();
        for j in (1..=users).map(UserId).filter(|&j| j != id) {
            let key = keys.get(id, j).ok_or(ProtocolError::UnknownUser(j))?;
            own.insert(j, key.to_vec());
        }
        Ok(Self {
            id,
            secret,
            keys: own,
            phase: UserPhase::Keyed,
            pairs: Vec::new(),
            manifest: None,
            check: None,
            codes: Vec::new(),
        })
    }

    pub fn id(&self) -> UserId {
        self.id
    }

    pub fn secret(&self) -> &Secret {
        &self.secret
    }

    pub fn pairs(&self) -> &[ParticlePair] {
        &self.pairs
    }

    pub fn check(&self) -> Option<&ChannelCheckResult> {
        self.check.as_ref()
    }

    fn expect(&self, phase: UserPhase, action: &'static str) -> Result<(), ProtocolError> {
        if self.phase == phase {
            Ok(())
        } else {
            Err(ProtocolError::StepOrder {
                who: self.id.to_string(),
                action,
                phase: self.phase.name(),
            })
        }
    }

    /// Step 1.
    pub fn prepare(&mut self, registry: &mut QuantumRegistry) -> Result<usize, ProtocolError> {
        self.expect(UserPhase::Keyed, "prepare")?;
        self.pairs = prepare_sequence(self.secret.len(), registry)?;
        self.phase = UserPhase::Prepared;
        Ok(self.pairs.len())
    }

    /// Step 2, first half: wrap the travel sequence in decoys for sending.
    pub fn emit_block(
        &mut self,
        decoys: usize,
        registry: &mut QuantumRegistry,
        rng: &mut RandomStream,
    ) -> Result<Vec<ParticleHandle>, ProtocolError> {
        self.expect(UserPhase::Prepared, "send")?;
        let travel = self.pairs.iter().map(|p| p.travel).collect();
        let (block, manifest) = channel::insert_decoys(travel, decoys, registry, rng);
        self.manifest = Some(manifest);
        self.phase = UserPhase::Sent;
        Ok(block)
    }

    /// Step 2: disclose decoy positions and bases, only against TP's receipt.
    pub fn disclose(&mut self, receipt: &Receipt) -> Result<DecoyDisclosure, ProtocolError> {
        self.expect(UserPhase::Sent, "disclose decoys")?;
        if receipt.from != self.id {
            return Err(ProtocolError::ForeignReceipt {
                receipt: receipt.from,
                user: self.id,
            });
        }
        self.phase = UserPhase::Disclosed;
        Ok(self.manifest.as_ref().expect("set when sent").disclosure())
    }

    /// Step 2: compare TP's decoy results against the prepared states.
    pub fn judge(&mut self, results: &[bool]) -> Result<ChannelCheckResult, ProtocolError> {
        self.expect(UserPhase::Disclosed, "judge decoys")?;
        let check =
            channel::compare_decoys(self.manifest.as_ref().expect("set when sent"), results)?;
        self.check = Some(check);
        self.phase = if check.is_clean() {
            UserPhase::Cleared
        } else {
            UserPhase::Halted
        };
        Ok(check)
    }

    /// Step 3: measure home particles, producing the codes `C^k`.
    pub fn measure_home(
        &mut self,
        registry: &mut QuantumRegistry,
        rng: &mut RandomStream,
    ) -> Result<&[bool], ProtocolError> {
        if self.phase == UserPhase::Measured || self.phase == UserPhase::Reported {
            return Err(ProtocolError::DoubleMeasurement { k: 1 });
        }
        self.expect(UserPhase::Cleared, "measure home particles")?;
        self.codes = measure_home(&mut self.pairs, registry, rng)?;
        self.phase = UserPhase::Measured;
        Ok(&self.codes)
    }

    /// Step 3: one report per counterpart, ascending by counterpart id.
    pub fn publish_reports(&mut self) -> Result<Vec<Report>, ProtocolError> {
        self.expect(UserPhase::Measured, "publish reports")?;
        let reports = self
            .keys
            .iter()
            .map(|(&about, key)| Report {
                from: self.id,
                about,
                bits: self
                    .secret
                    .bits()
                    .iter()
                    .zip(&self.codes)
                    .zip(key)
                    .map(|((&g, &c), &k)| encode_report(g, c, k))
                    .collect(),
            })
            .collect();
        self.phase = UserPhase::Reported;
        Ok(reports)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LinkPhase {
    Received,
    Checked,
    Cleared,
    Stripped,
    Measured,
}

impl LinkPhase {
    fn name(self) -> &'static str {
        match self {
            Self::Received => "received",
            Self::Checked => "checked",
            Self::Cleared => "cleared",
            Self::Stripped => "stripped",
            Self::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone)]
struct Link {
    phase: LinkPhase,
    block: Vec<ParticleHandle>,
    disclosure: Option<DecoyDisclosure>,
    travel: Vec<ParticleHandle>,
}

/// The semi-honest third party.
#[derive(Debug, Clone, Default)]
pub struct ThirdParty {
    links: BTreeMap<UserId, Link>,
    record: TpRecord,
}

impl ThirdParty {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self) -> &TpRecord {
        &self.record
    }

    fn link(
        &mut self,
        user: UserId,
        phase: LinkPhase,
        action: &'static str,
    ) -> Result<&mut Link, ProtocolError> {
        let link = self
            .links
            .get_mut(&user)
            .ok_or(ProtocolError::UnknownUser(user))?;
        if link.phase != phase {
            return Err(ProtocolError::StepOrder {
                who: format!("TP({user})"),
                action,
                phase: link.phase.name(),
            });
        }
        Ok(link)
    }

    /// Step 2: accept a block; the returned receipt unlocks the disclosure.
    pub fn receive(
        &mut self,
        from: UserId,
        block: Vec<ParticleHandle>,
    ) -> Result<Receipt, ProtocolError> {
        if let Some(link) = self.links.get(&from) {
            return Err(ProtocolError::StepOrder {
                who: format!("TP({from})"),
                action: "receive block",
                phase: link.phase.name(),
            });
        }
        let receipt = Receipt {
            from,
            particles: block.len(),
        };
        self.links.insert(
            from,
            Link {
                phase: LinkPhase::Received,
                block,
                disclosure: None,
                travel: Vec::new(),
            },
        );
        Ok(receipt)
    }

    /// Step 2: measure the disclosed decoys in the disclosed bases.
    pub fn measure_decoys(
        &mut self,
        from: UserId,
        disclosure: DecoyDisclosure,
        registry: &mut QuantumRegistry,
        rng: &mut RandomStream,
    ) -> Result<Vec<bool>, ProtocolError> {
        let link = self.link(from, LinkPhase::Received, "measure decoys")?;
        let results = channel::measure_disclosed(&link.block, &disclosure, registry, rng)?;
        link.disclosure = Some(disclosure);
        link.phase = LinkPhase::Checked;
        Ok(results)
    }

    /// Learns the sender's verdict; a clean link may proceed to Step 4.
    pub fn accept_verdict(
        &mut self,
        from: UserId,
        check: &ChannelCheckResult,
    ) -> Result<(), ProtocolError> {
        let link = self.link(from, LinkPhase::Checked, "accept verdict")?;
        if check.is_clean() {
            link.phase = LinkPhase::Cleared;
        }
        Ok(())
    }

    /// Step 4: drop the decoys to restore the travel sequence.
    pub fn strip(
        &mut self,
        from: UserId,
        check: &ChannelCheckResult,
    ) -> Result<usize, ProtocolError> {
        let link = self.link(from, LinkPhase::Cleared, "drop decoys")?;
        let block = std::mem::take(&mut link.block);
        let disclosure = link.disclosure.as_ref().expect("set when checked");
        let dropped = disclosure.positions.len();
        link.travel = channel::strip_decoys(block, disclosure, check)?;
        link.phase = LinkPhase::Stripped;
        Ok(dropped)
    }

    /// Step 4: Z-measure the restored travel sequence of `from`.
    pub fn measure_travel(
        &mut self,
        from: UserId,
        registry: &mut QuantumRegistry,
        rng: &mut RandomStream,
    ) -> Result<Vec<bool>, ProtocolError> {
        let link = self.link(from, LinkPhase::Stripped, "measure travel particles")?;
        let travel = std::mem::take(&mut link.travel);
        link.phase = LinkPhase::Measured;
        tp_measure_travel(&mut self.record, from, &travel, registry, rng)
    }

    /// Step 3: file a published report.
    pub fn receive_report(&mut self, report: Report) {
        self.record
            .reports
            .insert((report.from, report.about), report);
    }

    /// Step 5 for one pair.
    pub fn compare(&self, i: UserId, j: UserId) -> Result<Verdict, ProtocolError> {
        let r = &self.record;
        let report_ij = r
            .reports
            .get(&(i, j))
            .ok_or(ProtocolError::MissingReport { from: i, about: j })?;
        let report_ji = r
            .reports
            .get(&(j, i))
            .ok_or(ProtocolError::MissingReport { from: j, about: i })?;
        let m_i = r
            .measurements
            .get(&i)
            .ok_or(ProtocolError::MissingMeasurement(i))?;
        let m_j = r
            .measurements
            .get(&j)
            .ok_or(ProtocolError::MissingMeasurement(j))?;
        tp_compare_pair(report_ij, report_ji, m_i, m_j)
    }
}

/// Result of one exhaustive identity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }
}

/// Realizable `(home, travel)` outcome branches of one `|phi+>`, with their
/// probabilities, found by projecting the home particle and then reading off
/// the travel particle's populated branch.
pub fn bell_branches() -> Result<Vec<(f64, bool, bool)>, QStateError> {
    let phi = crate::qstate::make_bell(BellState::PhiPlus);
    let mut out = Vec::new();
    for home in [false, true] {
        let (p_home, post) = phi.project(0, Basis::Z, home)?;
        let Some(post) = post else { continue };
        for travel in [false, true] {
            let p_travel = post.probability(1, Basis::Z, travel)?;
            if p_travel > crate::qstate::NORM_TOLERANCE {
                out.push((p_home * p_travel, home, travel));
            }
        }
    }
    Ok(out)
}

/// `C_i xor C_j xor C_T = 0` over every joint branch of two pairs.
pub fn check_code_identity() -> Result<IdentityCheck, QStateError> {
    let branches = bell_branches()?;
    let mut check = IdentityCheck {
        name: "C_i xor C_j xor C_T = 0 over joint Bell branches",
        cases: 0,
        failures: 0,
    };
    for &(_, c_i, m_i) in &branches {
        for &(_, c_j, m_j) in &branches {
            check.cases += 1;
            if c_i ^ c_j ^ tp_code(m_i, m_j) {
                check.failures += 1;
            }
        }
    }
    Ok(check)
}

/// Per-bit comparison value equals `g_i xor g_j` for every secret bit pair,
/// key bit and joint Bell branch.
pub fn check_xor_identity() -> Result<IdentityCheck, QStateError> {
    let branches = bell_branches()?;
    let mut check = IdentityCheck {
        name: "per-bit comparison equals g_i xor g_j",
        cases: 0,
        failures: 0,
    };
    for g_i in [false, true] {
        for g_j in [false, true] {
            for key in [false, true] {
                for &(_, c_i, m_i) in &branches {
                    for &(_, c_j, m_j) in &branches {
                        check.cases += 1;
                        let r = Report {
                            from: UserId(1),
                            about: UserId(2),
                            bits: vec![encode_report(g_i, c_i, key)],
                        };
                        let s = Report {
                            from: UserId(2),
                            about: UserId(1),
                            bits: vec![encode_report(g_j, c_j, key)],
                        };
                        let verdict =
                            tp_compare_pair(&r, &s, &[m_i], &[m_j]).expect("equal lengths");
                        let differs = matches!(verdict, Verdict::Unequal { .. });
                        if differs != (g_i ^ g_j) {
                            check.failures += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(check)
}
