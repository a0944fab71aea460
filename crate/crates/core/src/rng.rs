//! Seeded random streams.
//!
//! Every random draw in the simulator flows through a [`RandomStream`]. Streams
//! are derived from a root seed plus a path of labels (trial index, participant,
//! purpose), so adding a participant or a new purpose never perturbs the draws
//! of an unrelated stream.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Secrets = 1,
    Keys = 2,
    Decoys = 3,
    Adversary = 4,
    DecoyCheck = 5,
    HomeMeasurement = 6,
    TravelMeasurement = 7,
}

/// Who a derived stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Session,
    User(usize),
    ThirdParty,
    Adversary,
}

impl Owner {
    fn tag(self) -> u64 {
        match self {
            Owner::Session => 0,
            Owner::ThirdParty => 1,
            Owner::Adversary => 2,
            Owner::User(i) => 0x100 + i as u64,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(acc: u64, label: u64) -> u64 {
    splitmix64(acc ^ splitmix64(label))
}

/// A deterministic random stream backed by ChaCha8.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for one `(seed, trial, owner, purpose)` coordinate.
    pub fn derive(seed: u64, trial: u64, owner: Owner, purpose: Purpose) -> Self {
        Self::derive_lane(seed, trial, owner, purpose, 0)
    }

    /// Like [`RandomStream::derive`], with an extra lane label for owners that
    /// need one stream per link (the third party, the adversary).
    pub fn derive_lane(seed: u64, trial: u64, owner: Owner, purpose: Purpose, lane: u64) -> Self {
        let mut acc = splitmix64(seed);
        acc = mix(acc, trial);
        acc = mix(acc, owner.tag());
        acc = mix(acc, purpose as u64);
        acc = mix(acc, lane);
        Self::from_seed(acc)
    }

    /// Uniform sample in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bit(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    pub fn bits(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.bit()).collect()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// `amount` distinct indices drawn uniformly from `0..len`, sorted ascending.
    pub fn distinct_sorted(&mut self, len: usize, amount: usize) -> Vec<usize> {
        let mut picked = rand::seq::index::sample(&mut self.rng, len, amount).into_vec();
        picked.sort_unstable();
        picked
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_coordinates_same_draws() {
        let mut a = RandomStream::derive(42, 3, Owner::User(1), Purpose::Decoys);
        let mut b = RandomStream::derive(42, 3, Owner::User(1), Purpose::Decoys);
        let xs: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn coordinates_are_independent() {
        let base = RandomStream::derive(42, 3, Owner::User(1), Purpose::Decoys).next_u64();
        let others = [
            RandomStream::derive(43, 3, Owner::User(1), Purpose::Decoys).next_u64(),
            RandomStream::derive(42, 4, Owner::User(1), Purpose::Decoys).next_u64(),
            RandomStream::derive(42, 3, Owner::User(2), Purpose::Decoys).next_u64(),
            RandomStream::derive(42, 3, Owner::ThirdParty, Purpose::Decoys).next_u64(),
            RandomStream::derive(42, 3, Owner::User(1), Purpose::Keys).next_u64(),
            RandomStream::derive_lane(42, 3, Owner::User(1), Purpose::Decoys, 1).next_u64(),
        ];
        for o in others {
            assert_ne!(base, o);
        }
    }

    #[test]
    fn distinct_sorted_is_distinct_and_sorted() {
        let mut rng = RandomStream::from_seed(7);
        for _ in 0..100 {
            let v = rng.distinct_sorted(20, 8);
            assert_eq!(v.len(), 8);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v.iter().all(|&x| x < 20));
        }
        assert!(rng.distinct_sorted(5, 0).is_empty());
    }
}
