//! System parameters, pilot codebook, and channel / jammer generation.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMat, ComplexVec};
use crate::rng::RandomStream;
use crate::scalar::Real;

/// How training and data powers are derived from the average budgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PowerPolicy<T> {
    /// `p_t = p_d = P`, `q_t = q_d = Q`.
    Uniform,
    Explicit { p_t: T, p_d: T, q_t: T, q_d: T },
}

/// Which side of the retransmission threshold test is compared against ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// `|s_jᵀs_u*| ≤ ε`
    Amplitude,
    /// `|s_jᵀs_u*|² ≤ ε`
    #[default]
    Squared,
}

/// Which overlap the MMSE coefficient is computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MmseMode {
    /// Ground-truth `|s_jᵀs_u*|²`.
    Oracle,
    /// Blind large-array estimate from the received pilot.
    #[default]
    Blind,
}

/// Which overlaps enter the closed-form rate after a protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RateAccounting {
    #[default]
    TrueOverlap,
    EstimatedOverlap,
}

/// Search space for the retransmitted pilot under deterministic jamming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OptMode {
    /// Best codeword of the pilot codebook.
    #[default]
    Codebook,
    /// Eigenvector of the smallest eigenvalue of the jammer Gram estimate.
    Eigen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig<T> {
    /// Number of BS antennas `M`.
    pub m: usize,
    /// Coherence block length `T` in symbols.
    pub coherence: usize,
    /// Pilot length `τ`.
    pub tau: usize,
    pub beta_u: T,
    pub beta_j: T,
    /// User average power budget `P`.
    pub p: T,
    /// Jammer average power budget `Q`.
    pub q: T,
    pub power_policy: PowerPolicy<T>,
    /// When false the jammer is silent during the data phase (`q_d = 0`).
    pub jam_data_phase: bool,
    pub epsilon: T,
    pub n_max: usize,
    pub master_seed: u64,
    pub threshold_on: ThresholdMode,
    pub mmse_mode: MmseMode,
    pub rate_accounting: RateAccounting,
    pub opt_mode: OptMode,
}

impl<T: Real> Default for SystemConfig<T> {
    fn default() -> Self {
        Self {
            m: 50,
            coherence: 200,
            tau: 20,
            beta_u: T::one(),
            beta_j: T::one(),
            p: T::one(),
            q: T::one(),
            power_policy: PowerPolicy::Uniform,
            jam_data_phase: true,
            epsilon: T::lit(0.1),
            n_max: 2,
            master_seed: 0x5eed,
            threshold_on: ThresholdMode::Squared,
            mmse_mode: MmseMode::Blind,
            rate_accounting: RateAccounting::TrueOverlap,
            opt_mode: OptMode::Codebook,
        }
    }
}

impl<T: Real> SystemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::config("M", "antenna count must be positive"));
        }
        if self.tau == 0 || self.tau >= self.coherence {
            return Err(Error::config(
                "tau",
                format!("need 0 < tau < T, got tau={} T={}", self.tau, self.coherence),
            ));
        }
        if self.n_max == 0 {
            return Err(Error::config("n_max", "must be at least 1"));
        }
        if self.n_max * self.tau >= self.coherence {
            return Err(Error::config(
                "n_max",
                format!("need n_max*tau < T, got {}*{} >= {}", self.n_max, self.tau, self.coherence),
            ));
        }
        for (key, v) in [("beta_u", self.beta_u), ("beta_j", self.beta_j)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::config(key, format!("must be positive and finite, got {v}")));
            }
        }
        for (key, v) in [("P", self.p), ("Q", self.q)] {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::config(key, format!("must be non-negative and finite, got {v}")));
            }
        }
        if !(self.epsilon >= T::zero()) {
            return Err(Error::config("epsilon", "must be non-negative"));
        }
        if let PowerPolicy::Explicit { p_t, p_d, q_t, q_d } = self.power_policy {
            for (key, v) in [("p_t", p_t), ("p_d", p_d), ("q_t", q_t), ("q_d", q_d)] {
                if !(v >= T::zero()) || !v.is_finite() {
                    return Err(Error::config(key, format!("must be non-negative and finite, got {v}")));
                }
            }
            let tau = T::from_count(self.tau);
            let data = T::from_count(self.coherence - self.tau);
            let total = T::from_count(self.coherence);
            let slack = T::one() + T::lit(1e-12);
            if tau * p_t + data * p_d > total * self.p * slack {
                return Err(Error::config("p_t", "user energy budget tau*p_t + (T-tau)*p_d <= T*P violated"));
            }
            if tau * q_t + data * q_d > total * self.q * slack {
                return Err(Error::config("q_t", "jammer energy budget tau*q_t + (T-tau)*q_d <= T*Q violated"));
            }
        }
        Ok(())
    }

    pub fn p_t(&self) -> T {
        match self.power_policy {
            PowerPolicy::Uniform => self.p,
            PowerPolicy::Explicit { p_t, .. } => p_t,
        }
    }

    pub fn p_d(&self) -> T {
        match self.power_policy {
            PowerPolicy::Uniform => self.p,
            PowerPolicy::Explicit { p_d, .. } => p_d,
        }
    }

    pub fn q_t(&self) -> T {
        match self.power_policy {
            PowerPolicy::Uniform => self.q,
            PowerPolicy::Explicit { q_t, .. } => q_t,
        }
    }

    pub fn q_d(&self) -> T {
        if !self.jam_data_phase {
            return T::zero();
        }
        match self.power_policy {
            PowerPolicy::Uniform => self.q,
            PowerPolicy::Explicit { q_d, .. } => q_d,
        }
    }

    /// Sets `P = Q = 10^(snr_db/10)` under unit noise variance.
    pub fn with_snr_db(mut self, snr_db: T) -> Self {
        let lin = T::lit(10.0).powf(snr_db / T::lit(10.0));
        self.p = lin;
        self.q = lin;
        self
    }

    /// Threshold test used by both retransmission protocols.
    pub fn overlap_within_threshold(&self, overlap_sq: T) -> bool {
        match self.threshold_on {
            ThresholdMode::Squared => overlap_sq <= self.epsilon,
            ThresholdMode::Amplitude => overlap_sq.max(T::zero()).sqrt() <= self.epsilon,
        }
    }
}

/// τ mutually orthogonal unit-norm pilots (normalized DFT columns).
#[derive(Clone, Debug)]
pub struct PilotCodebook<T> {
    tau: usize,
    codewords: Vec<ComplexVec<T>>,
}

impl<T: Real> PilotCodebook<T> {
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, k: usize) -> &ComplexVec<T> {
        &self.codewords[k]
    }

    pub fn codewords(&self) -> &[ComplexVec<T>] {
        &self.codewords
    }

    pub fn gram(&self) -> ComplexMat<T> {
        let n = self.codewords.len();
        ComplexMat::from_fn(n, n, |i, k| self.codewords[i].hdot(&self.codewords[k]).expect("equal lengths"))
    }
}

pub fn make_codebook<T: Real>(tau: usize) -> Result<PilotCodebook<T>> {
    if tau < 1 {
        return Err(Error::param("pilot length tau must be at least 1"));
    }
    let amp = 1.0 / (tau as f64).sqrt();
    let codewords = (0..tau)
        .map(|k| {
            ComplexVec::from_fn(tau, |n| {
                // reduce k*n mod tau first so the angle stays exact for large tau
                let angle = 2.0 * PI * (((k * n) % tau) as f64) / tau as f64;
                Complex::new(T::lit(amp * angle.cos()), T::lit(amp * angle.sin()))
            })
        })
        .collect();
    Ok(PilotCodebook { tau, codewords })
}

/// `CN(0, beta I_M)` channel vector.
pub fn gen_channel<T: Real>(rng: &mut RandomStream, m: usize, beta: T) -> Result<ComplexVec<T>> {
    if m == 0 {
        return Err(Error::param("channel length M must be positive"));
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::param(format!("channel variance must be positive, got {beta}")));
    }
    Ok(ComplexVec::from_fn(m, |_| rng.complex_normal(beta)))
}

#[derive(Clone, Debug, PartialEq)]
pub enum JammerKind<T> {
    Absent,
    /// i.i.d. `CN(0, 1/τ)` entries, so `E{‖s_j‖²} = 1`.
    RandomGaussian,
    /// Gaussian draw normalized to `‖s_j‖ = 1`.
    RandomUnitSphere,
    /// The same sequence in every transmission round.
    Deterministic(ComplexVec<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct JammerModel<T> {
    pub kind: JammerKind<T>,
    pub data_phase_active: bool,
}

impl<T: Real> JammerModel<T> {
    pub fn new(kind: JammerKind<T>) -> Self {
        Self { kind, data_phase_active: true }
    }

    pub fn is_random(&self) -> bool {
        matches!(self.kind, JammerKind::RandomGaussian | JammerKind::RandomUnitSphere)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, JammerKind::Deterministic(_))
    }
}

pub fn draw_jammer_sequence<T: Real>(
    rng: &mut RandomStream,
    model: &JammerModel<T>,
    tau: usize,
) -> Result<ComplexVec<T>> {
    if tau < 1 {
        return Err(Error::param("pilot length tau must be at least 1"));
    }
    match &model.kind {
        JammerKind::Absent => Ok(ComplexVec::zeros(tau)),
        JammerKind::RandomGaussian => {
            let var = T::one() / T::from_count(tau);
            Ok(ComplexVec::from_fn(tau, |_| rng.complex_normal(var)))
        }
        JammerKind::RandomUnitSphere => loop {
            let g = ComplexVec::from_fn(tau, |_| rng.complex_normal(T::one()));
            let norm = g.norm_sqr().sqrt();
            if norm > T::zero() {
                break Ok(g.scale(T::one() / norm));
            }
        },
        JammerKind::Deterministic(seq) => {
            if seq.len() != tau {
                return Err(Error::param(format!(
                    "deterministic jamming sequence has length {}, expected {tau}",
                    seq.len()
                )));
            }
            Ok(seq.clone())
        }
    }
}

/// `|s_jᵀ s_u*|²`
pub fn overlap_sq<T: Real>(s_j: &ComplexVec<T>, s_u: &ComplexVec<T>) -> Result<T> {
    Ok(s_j.dot_conj(s_u)?.norm_sqr())
}
