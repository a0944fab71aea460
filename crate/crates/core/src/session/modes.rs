//! Taxonomy of how QPC protocols prepare and move quantum carriers.
//!
//! Only mode (e) is executable here; the rest are descriptors used for
//! classification and reporting.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::transcript::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeId {
    A,
    B,
    C,
    D1,
    D2,
    E,
    F,
    G,
    H,
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeId::A => "a",
            ModeId::B => "b",
            ModeId::C => "c",
            ModeId::D1 => "d1",
            ModeId::D2 => "d2",
            ModeId::E => "e",
            ModeId::F => "f",
            ModeId::G => "g",
            ModeId::H => "h",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparers {
    /// TP alone prepares.
    ThirdParty,
    /// A single user prepares.
    OneUser,
    /// Users each prepare their own carriers.
    Users,
    /// TP and the users all prepare.
    Everyone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransmissionShape {
    Circled,
    OneWayDivergent,
    BidirectionalDivergent,
    Bidirectional,
    OneWayConvergent,
    Hybrid,
    OneWay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeDescriptor {
    pub id: ModeId,
    pub name: &'static str,
    pub preparers: Preparers,
    pub transmission_shape: TransmissionShape,
    /// reference numbers of protocols using this mode
    pub citations: &'static [u32],
}

const fn mode(
    id: ModeId,
    name: &'static str,
    preparers: Preparers,
    transmission_shape: TransmissionShape,
    citations: &'static [u32],
) -> ModeDescriptor {
    ModeDescriptor {
        id,
        name,
        preparers,
        transmission_shape,
        citations,
    }
}

pub const MODES: [ModeDescriptor; 9] = [
    mode(
        ModeId::A,
        "centralized preparation, circled",
        Preparers::ThirdParty,
        TransmissionShape::Circled,
        &[38, 42, 49, 63],
    ),
    mode(
        ModeId::B,
        "centralized preparation, one-way divergent",
        Preparers::ThirdParty,
        TransmissionShape::OneWayDivergent,
        &[
            36, 37, 40, 43, 44, 45, 46, 47, 51, 54, 55, 56, 58, 59, 60, 61, 63,
        ],
    ),
    mode(
        ModeId::C,
        "centralized preparation, bidirectional divergent",
        Preparers::ThirdParty,
        TransmissionShape::BidirectionalDivergent,
        &[34, 48, 62],
    ),
    mode(
        ModeId::D1,
        "scattered preparation, bidirectional (TP and users)",
        Preparers::Everyone,
        TransmissionShape::Bidirectional,
        &[39, 64],
    ),
    mode(
        ModeId::D2,
        "scattered preparation, bidirectional (between users)",
        Preparers::Users,
        TransmissionShape::Bidirectional,
        &[53],
    ),
    mode(
        ModeId::E,
        "scattered preparation, one-way convergent",
        Preparers::Users,
        TransmissionShape::OneWayConvergent,
        &[41],
    ),
    mode(
        ModeId::F,
        "scattered preparation, hybrid",
        Preparers::Users,
        TransmissionShape::Hybrid,
        &[50],
    ),
    mode(
        ModeId::G,
        "scattered preparation, one-way",
        Preparers::Users,
        TransmissionShape::OneWay,
        &[52],
    ),
    mode(
        ModeId::H,
        "centralized preparation, one-way",
        Preparers::OneUser,
        TransmissionShape::OneWay,
        &[57],
    ),
];

pub fn descriptor(id: ModeId) -> &'static ModeDescriptor {
    MODES
        .iter()
        .find(|m| m.id == id)
        .expect("every id has a descriptor")
}

/// The mode this simulator executes.
pub fn executed_mode() -> &'static ModeDescriptor {
    descriptor(ModeId::E)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Mode(&'static ModeDescriptor),
    Unclassified,
}

impl Classification {
    pub fn id(&self) -> Option<ModeId> {
        match self {
            Classification::Mode(m) => Some(m.id),
            Classification::Unclassified => None,
        }
    }
}

/// Maps a role graph (who prepares, which directed quantum transmissions
/// occur) onto one of the modes.
pub fn classify_mode(preparers: &[Role], edges: &[(Role, Role)]) -> Classification {
    let is_user = |r: &Role| matches!(r, Role::User(_));
    let preparers: BTreeSet<Role> = preparers.iter().copied().collect();
    let edges: BTreeSet<(Role, Role)> = edges.iter().copied().filter(|(a, b)| a != b).collect();
    if edges
        .iter()
        .any(|(a, b)| *a == Role::Outsider || *b == Role::Outsider)
    {
        return Classification::Unclassified;
    }

    let tp_prepares = preparers.contains(&Role::ThirdParty);
    let user_preparers = preparers.iter().filter(|r| is_user(r)).count();
    let down = edges.iter().filter(|(a, _)| *a == Role::ThirdParty).count();
    let up = edges.iter().filter(|(_, b)| *b == Role::ThirdParty).count();
    let lateral: Vec<_> = edges
        .iter()
        .filter(|(a, b)| is_user(a) && is_user(b))
        .collect();
    let mutual_lateral = lateral.iter().any(|(a, b)| edges.contains(&(*b, *a)));
    let has_lateral = !lateral.is_empty();

    // every user that sends to TP also prepared what it sends
    let senders_prepare = edges
        .iter()
        .filter(|(a, b)| is_user(a) && *b == Role::ThirdParty)
        .all(|(a, _)| preparers.contains(a));

    let id = match (tp_prepares, user_preparers) {
        (true, 0) => match (down > 0, up > 0, has_lateral) {
            (true, true, true) => Some(ModeId::A),
            (true, false, false) => Some(ModeId::B),
            (true, true, false) => Some(ModeId::C),
            _ => None,
        },
        (true, n) if n >= 1 => (down > 0 && up > 0 && !has_lateral).then_some(ModeId::D1),
        (false, 1) => (down == 0 && up == 0 && has_lateral && !mutual_lateral).then_some(ModeId::H),
        (false, n) if n >= 2 && down == 0 => match (up > 0, has_lateral, mutual_lateral) {
            (true, false, _) if senders_prepare => Some(ModeId::E),
            (false, true, true) => Some(ModeId::D2),
            (true, true, true) => Some(ModeId::F),
            (true, true, false) => Some(ModeId::G),
            _ => None,
        },
        _ => None,
    };
    id.map_or(Classification::Unclassified, |id| {
        Classification::Mode(descriptor(id))
    })
}
