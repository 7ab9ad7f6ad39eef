//! Pilot retransmission protocols run by the BS against random and
//! deterministic jamming.
//!
//! Both protocols talk to the physical layer through [`PilotLink`]: a
//! [`SimulatedLink`] synthesizes received blocks from channels and noise,
//! while a [`LimitLink`] reports the exact large-array limits of the blind
//! estimators, which makes protocol decisions checkable without noise.

use crate::error::{Error, Result};
use crate::estimation::{despread, estimate_jammer_gram, estimate_overlap, receive_pilot_block};
use crate::linalg::{project_psd, ComplexMat, ComplexVec};
use crate::model::{draw_jammer_sequence, overlap_sq, JammerModel, OptMode, PilotCodebook, SystemConfig};
use crate::rng::{RandomStream, TrialStreams};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundObservation<T> {
    pub overlap_true: T,
    pub overlap_est: T,
}

pub trait PilotLink<T: Real> {
    /// Transmit `pilot` for one training round and report the overlaps.
    fn transmit(&mut self, pilot: &ComplexVec<T>) -> Result<RoundObservation<T>>;

    /// BS estimate of `s_j* s_jᵀ` from the most recent round.
    fn jammer_gram(&mut self) -> Result<ComplexMat<T>>;
}

/// Finite-array link: fixed channels for the coherence block, fresh noise and
/// (for random kinds) a fresh jamming sequence every round.
pub struct SimulatedLink<'a, T> {
    cfg: &'a SystemConfig<T>,
    g_u: &'a ComplexVec<T>,
    g_j: &'a ComplexVec<T>,
    jammer: &'a JammerModel<T>,
    jammer_rng: &'a mut RandomStream,
    noise_rng: &'a mut RandomStream,
    last: Option<(ComplexMat<T>, ComplexVec<T>)>,
}

impl<'a, T: Real> SimulatedLink<'a, T> {
    pub fn new(
        cfg: &'a SystemConfig<T>,
        g_u: &'a ComplexVec<T>,
        g_j: &'a ComplexVec<T>,
        jammer: &'a JammerModel<T>,
        jammer_rng: &'a mut RandomStream,
        noise_rng: &'a mut RandomStream,
    ) -> Self {
        Self { cfg, g_u, g_j, jammer, jammer_rng, noise_rng, last: None }
    }
}

impl<T: Real> PilotLink<T> for SimulatedLink<'_, T> {
    fn transmit(&mut self, pilot: &ComplexVec<T>) -> Result<RoundObservation<T>> {
        let s_j = draw_jammer_sequence(self.jammer_rng, self.jammer, self.cfg.tau)?;
        let block = receive_pilot_block(self.cfg, self.g_u, self.g_j, pilot, &s_j, Some(self.noise_rng))?;
        // without training-phase jamming power there is no contamination to detect
        let overlap_est = if self.cfg.q_t() > T::zero() {
            estimate_overlap(&despread(&block, pilot)?, self.cfg)?
        } else {
            T::zero()
        };
        let overlap_true = overlap_sq(&s_j, pilot)?;
        self.last = Some((block, pilot.clone()));
        Ok(RoundObservation { overlap_true, overlap_est })
    }

    fn jammer_gram(&mut self) -> Result<ComplexMat<T>> {
        let (block, pilot) = self.last.as_ref().ok_or_else(|| Error::Unsupported("no pilot received yet".into()))?;
        estimate_jammer_gram(block, pilot, self.cfg)
    }
}

/// `M → ∞` link: estimators return their almost-sure limits exactly.
#[derive(Clone, Debug)]
pub struct LimitLink<T> {
    s_j: ComplexVec<T>,
}

impl<T: Real> LimitLink<T> {
    pub fn new(s_j: ComplexVec<T>) -> Self {
        Self { s_j }
    }
}

impl<T: Real> PilotLink<T> for LimitLink<T> {
    fn transmit(&mut self, pilot: &ComplexVec<T>) -> Result<RoundObservation<T>> {
        let o = overlap_sq(&self.s_j, pilot)?;
        Ok(RoundObservation { overlap_true: o, overlap_est: o })
    }

    fn jammer_gram(&mut self) -> Result<ComplexMat<T>> {
        Ok(ComplexMat::outer(&self.s_j.conj(), &self.s_j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    ThresholdMet,
    NMaxReached,
    OptNoBetter,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord<T> {
    /// Codeword index, `None` for an eigen-mode pilot outside the codebook.
    pub pilot_index: Option<usize>,
    pub overlap_true: T,
    pub overlap_est: T,
}

#[derive(Clone, Debug)]
pub struct ProtocolTrace<T> {
    pub rounds: Vec<RoundRecord<T>>,
    pub n_used: usize,
    pub stop_reason: StopReason,
    /// Round the BS processes for data detection.
    pub chosen_round: usize,
    /// Pilot proposed for retransmission under deterministic jamming.
    pub opt_pilot: Option<ComplexVec<T>>,
    /// The BS's predicted quadratic form for `opt_pilot`.
    pub opt_predicted: Option<T>,
}

impl<T: Real> ProtocolTrace<T> {
    pub fn chosen(&self) -> &RoundRecord<T> {
        &self.rounds[self.chosen_round]
    }

    pub fn true_overlaps(&self) -> Vec<T> {
        self.rounds.iter().map(|r| r.overlap_true).collect()
    }

    pub fn estimated_overlaps(&self) -> Vec<T> {
        self.rounds.iter().map(|r| r.overlap_est).collect()
    }
}

fn argmin_lowest_index<T: Real>(xs: impl IntoIterator<Item = T>) -> Option<(usize, T)> {
    let mut best: Option<(usize, T)> = None;
    for (i, x) in xs.into_iter().enumerate() {
        match best {
            Some((_, b)) if !(x < b) => {}
            _ => best = Some((i, x)),
        }
    }
    best
}

/// Random-jamming protocol: retransmit a fresh random codeword until the
/// estimated overlap passes the threshold or `n_max` rounds were spent; the
/// round with the smallest estimated overlap is processed.
pub fn run_algorithm1_on<T: Real, L: PilotLink<T>>(
    cfg: &SystemConfig<T>,
    link: &mut L,
    codebook: &PilotCodebook<T>,
    pilot_rng: &mut RandomStream,
) -> Result<ProtocolTrace<T>> {
    cfg.validate()?;
    let mut rounds = Vec::with_capacity(cfg.n_max);
    let stop_reason = loop {
        let k = pilot_rng.index(codebook.len());
        let obs = link.transmit(codebook.codeword(k))?;
        rounds.push(RoundRecord { pilot_index: Some(k), overlap_true: obs.overlap_true, overlap_est: obs.overlap_est });
        if cfg.overlap_within_threshold(obs.overlap_est) {
            break StopReason::ThresholdMet;
        }
        if rounds.len() == cfg.n_max {
            break StopReason::NMaxReached;
        }
    };
    let (chosen_round, _) = argmin_lowest_index(rounds.iter().map(|r| r.overlap_est)).expect("at least one round");
    Ok(ProtocolTrace {
        n_used: rounds.len(),
        rounds,
        stop_reason,
        chosen_round,
        opt_pilot: None,
        opt_predicted: None,
    })
}

pub fn run_algorithm1<T: Real>(
    cfg: &SystemConfig<T>,
    g_u: &ComplexVec<T>,
    g_j: &ComplexVec<T>,
    jammer: &JammerModel<T>,
    streams: &mut TrialStreams,
) -> Result<ProtocolTrace<T>> {
    if jammer.is_deterministic() {
        return Err(Error::param("random-jamming protocol needs a random or absent jammer"));
    }
    let codebook = crate::model::make_codebook(cfg.tau)?;
    let mut link = SimulatedLink::new(cfg, g_u, g_j, jammer, &mut streams.jammer_sequence, &mut streams.noise);
    run_algorithm1_on(cfg, &mut link, &codebook, &mut streams.pilot)
}

/// Deterministic-jamming protocol starting from codeword `first_pilot`: if the
/// first round fails the threshold, the BS estimates the jammer Gram matrix,
/// picks the pilot minimizing the predicted contamination and requests one
/// retransmission only when that prediction beats the first round's estimate.
pub fn run_algorithm2_on<T: Real, L: PilotLink<T>>(
    cfg: &SystemConfig<T>,
    link: &mut L,
    codebook: &PilotCodebook<T>,
    first_pilot: usize,
    mode: OptMode,
) -> Result<ProtocolTrace<T>> {
    cfg.validate()?;
    if first_pilot >= codebook.len() {
        return Err(Error::param(format!("first pilot index {first_pilot} outside codebook of {}", codebook.len())));
    }
    let first = link.transmit(codebook.codeword(first_pilot))?;
    let mut trace = ProtocolTrace {
        rounds: vec![RoundRecord {
            pilot_index: Some(first_pilot),
            overlap_true: first.overlap_true,
            overlap_est: first.overlap_est,
        }],
        n_used: 1,
        stop_reason: StopReason::ThresholdMet,
        chosen_round: 0,
        opt_pilot: None,
        opt_predicted: None,
    };
    if cfg.overlap_within_threshold(first.overlap_est) {
        return Ok(trace);
    }

    let gram = link.jammer_gram()?;
    let (pilot, pilot_index, predicted) = match mode {
        OptMode::Codebook => {
            let (k, q) = argmin_lowest_index(
                codebook.codewords().iter().map(|c| gram.pilot_quadratic_form(c).expect("codeword length matches")),
            )
            .expect("non-empty codebook");
            (codebook.codeword(k).clone(), Some(k), q)
        }
        OptMode::Eigen => {
            // clipping keeps the eigenvectors and their order
            let (_, eig) = project_psd(&gram)?;
            let v = eig.vectors.column(0);
            let norm = v.norm_sqr().sqrt();
            // xᵀ Ŝ x* = vᴴ Ŝ v for x = v*
            let pilot = v.conj().scale(T::one() / norm);
            let q = gram.pilot_quadratic_form(&pilot)?.max(T::zero());
            (pilot, None, q)
        }
    };
    trace.opt_pilot = Some(pilot.clone());
    trace.opt_predicted = Some(predicted);

    if !(predicted < first.overlap_est) {
        trace.stop_reason = StopReason::OptNoBetter;
        return Ok(trace);
    }
    if cfg.n_max < 2 {
        trace.stop_reason = StopReason::NMaxReached;
        return Ok(trace);
    }
    let second = link.transmit(&pilot)?;
    trace.rounds.push(RoundRecord { pilot_index, overlap_true: second.overlap_true, overlap_est: second.overlap_est });
    trace.n_used = 2;
    trace.chosen_round = 1;
    trace.stop_reason = StopReason::NMaxReached;
    Ok(trace)
}

pub fn run_algorithm2<T: Real>(
    cfg: &SystemConfig<T>,
    g_u: &ComplexVec<T>,
    g_j: &ComplexVec<T>,
    jammer: &JammerModel<T>,
    streams: &mut TrialStreams,
    mode: OptMode,
) -> Result<ProtocolTrace<T>> {
    if jammer.is_random() {
        return Err(Error::param("deterministic-jamming protocol needs a deterministic (or absent) jammer"));
    }
    let codebook = crate::model::make_codebook(cfg.tau)?;
    let first = streams.pilot.index(codebook.len());
    let mut link = SimulatedLink::new(cfg, g_u, g_j, jammer, &mut streams.jammer_sequence, &mut streams.noise);
    run_algorithm2_on(cfg, &mut link, &codebook, first, mode)
}
