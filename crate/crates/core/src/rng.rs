//! Counter-based random substreams.
//!
//! Every draw in a trial comes from a stream keyed by `(master_seed, trial, tag)`.
//! The key is the full 256-bit ChaCha seed, so streams for different trials or
//! tags never overlap and a trial's draws do not depend on which thread ran it
//! or in which order trials were scheduled.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

/// Purpose of a substream within one trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum DrawTag {
    UserChannel = 1,
    JammerChannel = 2,
    PilotChoice = 3,
    JammerSequence = 4,
    TrainingNoise = 5,
    DataPhase = 6,
    Auxiliary = 7,
}

#[derive(Clone, Debug)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, trial: u64, tag: DrawTag) -> Self {
        Self::from_key(master_seed, trial, tag as u64)
    }

    /// Stream keyed by an arbitrary tag value (tests and ad-hoc studies).
    pub fn from_key(master_seed: u64, trial: u64, tag: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&trial.to_le_bytes());
        seed[16..24].copy_from_slice(&tag.to_le_bytes());
        // domain separator
        seed[24..32].copy_from_slice(b"antijam\0");
        Self { rng: ChaCha8Rng::from_seed(seed) }
    }

    pub fn standard_normal<T: Real>(&mut self) -> T {
        let z: f64 = self.rng.sample(StandardNormal);
        T::lit(z)
    }

    /// Circularly symmetric complex Gaussian with total variance `var`.
    pub fn complex_normal<T: Real>(&mut self, var: T) -> Complex<T> {
        let s = (var / T::lit(2.0)).sqrt();
        let re: T = self.standard_normal();
        let im: T = self.standard_normal();
        Complex::new(re * s, im * s)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn uniform<T: Real>(&mut self) -> T {
        T::lit(self.rng.random::<f64>())
    }
}


/// The independent substreams one Monte Carlo trial draws from.
#[derive(Clone, Debug)]
pub struct TrialStreams {
    pub user_channel: RandomStream,
    pub jammer_channel: RandomStream,
    pub pilot: RandomStream,
    pub jammer_sequence: RandomStream,
    pub noise: RandomStream,
    pub data: RandomStream,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: u64) -> Self {
        Self {
            user_channel: RandomStream::new(master_seed, trial, DrawTag::UserChannel),
            jammer_channel: RandomStream::new(master_seed, trial, DrawTag::JammerChannel),
            pilot: RandomStream::new(master_seed, trial, DrawTag::PilotChoice),
            jammer_sequence: RandomStream::new(master_seed, trial, DrawTag::JammerSequence),
            noise: RandomStream::new(master_seed, trial, DrawTag::TrainingNoise),
            data: RandomStream::new(master_seed, trial, DrawTag::DataPhase),
        }
    }
}
