//! Minimal pure-state simulator.
//!
//! Amplitudes are stored little-endian by qubit index: amplitude `i` belongs to
//! the basis state whose qubit `q` equals bit `q` of `i`, i.e. the ket is written
//! `|q_{n-1} ... q_1 q_0>`. A Bell pair therefore lives at qubits 0 and 1 with
//! amplitudes ordered `|00>, |01>, |10>, |11>`.
//!
//! Only preparation and projective measurement are modeled. Measurement takes
//! the state by value and hands back the collapsed successor.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomStream;

pub const MAX_QUBITS: usize = 4;
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QStateError {
    #[error("qubit count {0} outside 1..={MAX_QUBITS}")]
    QubitCount(usize),
    #[error("expected {expected} amplitudes, got {actual}")]
    AmplitudeCount { expected: usize, actual: usize },
    #[error("amplitudes are not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("qubit index {index} out of range for a {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("particle handle refers to an unknown system")]
    UnknownParticle,
}

/// Measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    /// Computational basis `{|0>, |1>}`.
    Z,
    /// Hadamard basis `{|+>, |->}`.
    X,
}

/// A projective measurement result. Bit 0 means `|0>` (Z) or `|+>` (X).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub bit: bool,
    pub basis: Basis,
}

/// The four single-qubit states used as decoys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SingleState {
    Zero,
    One,
    Plus,
    Minus,
}

impl SingleState {
    pub const ALL: [SingleState; 4] = [Self::Zero, Self::One, Self::Plus, Self::Minus];

    pub fn basis(self) -> Basis {
        match self {
            Self::Zero | Self::One => Basis::Z,
            Self::Plus | Self::Minus => Basis::X,
        }
    }

    /// The bit this state encodes in its own basis.
    pub fn bit(self) -> bool {
        matches!(self, Self::One | Self::Minus)
    }

    /// The eigenstate of `basis` encoding `bit`.
    pub fn eigenstate(basis: Basis, bit: bool) -> Self {
        match (basis, bit) {
            (Basis::Z, false) => Self::Zero,
            (Basis::Z, true) => Self::One,
            (Basis::X, false) => Self::Plus,
            (Basis::X, true) => Self::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BellState {
    /// `(|00> + |11>)/sqrt(2)`
    PhiPlus,
    /// `(|01> + |10>)/sqrt(2)`
    PsiPlus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn make_single(which: SingleState) -> PureState {
    let s = FRAC_1_SQRT_2;
    let amps = match which {
        SingleState::Zero => [1.0, 0.0],
        SingleState::One => [0.0, 1.0],
        SingleState::Plus => [s, s],
        SingleState::Minus => [s, -s],
    };
    PureState {
        num_qubits: 1,
        amplitudes: amps.iter().copied().map(real).collect(),
    }
}

pub fn make_bell(which: BellState) -> PureState {
    let s = FRAC_1_SQRT_2;
    let amps = match which {
        BellState::PhiPlus => [s, 0.0, 0.0, s],
        BellState::PsiPlus => [0.0, s, s, 0.0],
    };
    PureState {
        num_qubits: 2,
        amplitudes: amps.iter().copied().map(real).collect(),
    }
}

/// `|<reference|state>|^2`
pub fn fidelity_check(state: &PureState, reference: &PureState) -> Result<f64, QStateError> {
    if state.num_qubits != reference.num_qubits {
        return Err(QStateError::DimensionMismatch {
            left: state.num_qubits,
            right: reference.num_qubits,
        });
    }
    let overlap: Complex64 = reference
        .amplitudes
        .iter()
        .zip(&state.amplitudes)
        .map(|(r, s)| r.conj() * s)
        .sum();
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, QStateError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(QStateError::AmplitudeCount {
                expected: len.next_power_of_two(),
                actual: len,
            });
        }
        let num_qubits = len.trailing_zeros() as usize;
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(QStateError::QubitCount(num_qubits));
        }
        let state = Self {
            num_qubits,
            amplitudes,
        };
        let n = state.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(QStateError::NotNormalized(n));
        }
        Ok(state)
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis_state(num_qubits: usize, index: usize) -> Result<Self, QStateError> {
        if !(1..=MAX_QUBITS).contains(&num_qubits) {
            return Err(QStateError::QubitCount(num_qubits));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QStateError::QubitOutOfRange { index, num_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = real(1.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_index(&self, qubit: usize) -> Result<(), QStateError> {
        if qubit >= self.num_qubits {
            Err(QStateError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn hadamard(&mut self, qubit: usize) {
        let mask = 1usize << qubit;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a = self.amplitudes[i];
                let b = self.amplitudes[i | mask];
                self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                self.amplitudes[i | mask] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    /// Probability of reading `bit` on `qubit` in `basis`.
    pub fn probability(&self, qubit: usize, basis: Basis, bit: bool) -> Result<f64, QStateError> {
        self.check_index(qubit)?;
        let mut rotated;
        let state = match basis {
            Basis::Z => self,
            Basis::X => {
                rotated = self.clone();
                rotated.hadamard(qubit);
                &rotated
            }
        };
        let mask = 1usize << qubit;
        Ok(state
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask != 0) == bit)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Collapse onto the `bit` branch of a `basis` measurement of `qubit`.
    ///
    /// Returns the branch probability and, when it is nonzero, the renormalized
    /// post-measurement state.
    pub fn project(
        &self,
        qubit: usize,
        basis: Basis,
        bit: bool,
    ) -> Result<(f64, Option<PureState>), QStateError> {
        self.check_index(qubit)?;
        let mut work = self.clone();
        if basis == Basis::X {
            work.hadamard(qubit);
        }
        let mask = 1usize << qubit;
        let mut prob = 0.0;
        for (i, a) in work.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == bit {
                prob += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        if prob <= NORM_TOLERANCE {
            return Ok((0.0, None));
        }
        let scale = prob.sqrt().recip();
        for a in &mut work.amplitudes {
            *a *= scale;
        }
        if basis == Basis::X {
            work.hadamard(qubit);
        }
        debug_assert!((work.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
        Ok((prob, Some(work)))
    }

    /// Born-rule measurement of one qubit; consumes the state.
    pub fn measure(
        self,
        qubit: usize,
        basis: Basis,
        rng: &mut RandomStream,
    ) -> Result<(MeasurementOutcome, PureState), QStateError> {
        let p0 = self.probability(qubit, basis, false)?;
        let drawn = rng.uniform() >= p0;
        // a branch below the tolerance is treated as impossible
        let (bit, collapsed) = match self.project(qubit, basis, drawn)? {
            (_, Some(s)) => (drawn, s),
            (_, None) => {
                let other = self.project(qubit, basis, !drawn)?.1;
                (
                    !drawn,
                    other.expect("a normalized state has a populated branch"),
                )
            }
        };
        Ok((MeasurementOutcome { bit, basis }, collapsed))
    }
}

/// A reference to one qubit of a system held in a [`QuantumRegistry`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParticleHandle {
    system: usize,
    qubit: usize,
}

impl ParticleHandle {
    pub fn system(&self) -> usize {
        self.system
    }

    pub fn qubit(&self) -> usize {
        self.qubit
    }
}

/// The physical world of one session: every prepared system, addressed by
/// particle handles. Particles of the same system share one [`PureState`].
#[derive(Debug, Default, Clone)]
pub struct QuantumRegistry {
    systems: Vec<Option<PureState>>,
    particles_created: usize,
}

impl QuantumRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert(&mut self, state: PureState) -> usize {
        self.particles_created += state.num_qubits();
        self.systems.push(Some(state));
        self.systems.len() - 1
    }

    pub fn prepare_single(&mut self, which: SingleState) -> ParticleHandle {
        let system = self.insert(make_single(which));
        ParticleHandle { system, qubit: 0 }
    }

    /// Prepares a Bell pair and returns handles to its qubits 0 and 1.
    pub fn prepare_bell(&mut self, which: BellState) -> (ParticleHandle, ParticleHandle) {
        let system = self.insert(make_bell(which));
        (
            ParticleHandle { system, qubit: 0 },
            ParticleHandle { system, qubit: 1 },
        )
    }

    pub fn state_of(&self, particle: ParticleHandle) -> Result<&PureState, QStateError> {
        self.systems
            .get(particle.system)
            .and_then(Option::as_ref)
            .ok_or(QStateError::UnknownParticle)
    }

    pub fn measure(
        &mut self,
        particle: ParticleHandle,
        basis: Basis,
        rng: &mut RandomStream,
    ) -> Result<MeasurementOutcome, QStateError> {
        let slot = self
            .systems
            .get_mut(particle.system)
            .ok_or(QStateError::UnknownParticle)?;
        let state = slot.take().ok_or(QStateError::UnknownParticle)?;
        match state.clone().measure(particle.qubit, basis, rng) {
            Ok((outcome, collapsed)) => {
                *slot = Some(collapsed);
                Ok(outcome)
            }
            Err(e) => {
                *slot = Some(state);
                Err(e)
            }
        }
    }

    /// Total qubits ever prepared in this registry.
    pub fn particles_created(&self) -> usize {
        self.particles_created
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_amps(state: &PureState, expected: &[f64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (a, e) in state.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im.abs() < 1e-15, "{a} vs {e}");
        }
    }

    #[test]
    fn single_states() {
        let s = FRAC_1_SQRT_2;
        assert_amps(&make_single(SingleState::Zero), &[1.0, 0.0]);
        assert_amps(&make_single(SingleState::One), &[0.0, 1.0]);
        assert_amps(&make_single(SingleState::Plus), &[s, s]);
        assert_amps(&make_single(SingleState::Minus), &[s, -s]);
    }

    #[test]
    fn bell_states() {
        let s = FRAC_1_SQRT_2;
        let phi = make_bell(BellState::PhiPlus);
        assert_amps(&phi, &[s, 0.0, 0.0, s]);
        assert!((phi.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
        assert_amps(&make_bell(BellState::PsiPlus), &[0.0, s, s, 0.0]);
    }

    #[test]
    fn eigenstate_measures_deterministically() {
        let mut rng = RandomStream::from_seed(1);
        for _ in 0..100 {
            let (o, _) = make_single(SingleState::Zero)
                .measure(0, Basis::Z, &mut rng)
                .unwrap();
            assert!(!o.bit);
        }
    }

    #[test]
    fn decoy_round_trip_exhaustive() {
        for which in SingleState::ALL {
            let state = make_single(which);
            let p = state.probability(0, which.basis(), which.bit()).unwrap();
            assert!((p - 1.0).abs() < 1e-12, "{which:?}");
            let mut rng = RandomStream::from_seed(9);
            let (o, _) = state.measure(0, which.basis(), &mut rng).unwrap();
            assert_eq!(o.bit, which.bit());
            assert_eq!(SingleState::eigenstate(which.basis(), which.bit()), which);
        }
    }

    #[test]
    fn bell_z_correlation_exhaustive() {
        let phi = make_bell(BellState::PhiPlus);
        for home_bit in [false, true] {
            let (p, collapsed) = phi.project(0, Basis::Z, home_bit).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            let collapsed = collapsed.unwrap();
            let same = collapsed.probability(1, Basis::Z, home_bit).unwrap();
            let diff = collapsed.probability(1, Basis::Z, !home_bit).unwrap();
            assert!((same - 1.0).abs() < 1e-12);
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn psi_plus_is_anticorrelated() {
        let psi = make_bell(BellState::PsiPlus);
        let (_, c) = psi.project(0, Basis::Z, false).unwrap();
        assert!((c.unwrap().probability(1, Basis::Z, true).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_basis_collapse_lands_on_eigenstate() {
        let (p, c) = make_single(SingleState::Zero)
            .project(0, Basis::X, true)
            .unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let f = fidelity_check(&c.unwrap(), &make_single(SingleState::Minus)).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let zero = make_single(SingleState::Zero);
        let plus = make_single(SingleState::Plus);
        let minus = make_single(SingleState::Minus);
        assert!((fidelity_check(&zero, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity_check(&plus, &minus).unwrap().abs() < 1e-15);
        // |<+|0>|^2 = (1/sqrt2)^2
        assert!((fidelity_check(&zero, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            fidelity_check(&zero, &make_bell(BellState::PhiPlus)),
            Err(QStateError::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn out_of_range_qubit() {
        let mut rng = RandomStream::from_seed(0);
        let err = make_bell(BellState::PhiPlus).measure(2, Basis::Z, &mut rng);
        assert_eq!(
            err.unwrap_err(),
            QStateError::QubitOutOfRange {
                index: 2,
                num_qubits: 2
            }
        );
    }

    #[test]
    fn constructor_validation() {
        assert!(PureState::from_amplitudes(vec![real(1.0), real(1.0)]).is_err());
        assert!(PureState::from_amplitudes(vec![real(1.0); 3]).is_err());
        assert!(PureState::from_amplitudes(vec![real(1.0)]).is_err());
        assert!(PureState::basis_state(5, 0).is_err());
        let s = PureState::basis_state(4, 0b1010).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert!((s.probability(1, Basis::Z, true).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.probability(0, Basis::Z, false).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn little_endian_ordering() {
        // amplitude index 0b01 means qubit 0 = 1, qubit 1 = 0
        let s = PureState::basis_state(2, 0b01).unwrap();
        assert!((s.probability(0, Basis::Z, true).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.probability(1, Basis::Z, false).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn registry_shares_pair_state() {
        let mut reg = QuantumRegistry::new();
        let mut rng = RandomStream::from_seed(5);
        for _ in 0..200 {
            let (home, travel) = reg.prepare_bell(BellState::PhiPlus);
            let a = reg.measure(home, Basis::Z, &mut rng).unwrap();
            let b = reg.measure(travel, Basis::Z, &mut rng).unwrap();
            assert_eq!(a.bit, b.bit);
        }
        assert_eq!(reg.particles_created(), 400);
    }
}
