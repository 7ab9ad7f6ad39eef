//! Trial engine and moment oracle.
//!
//! Trials are keyed by `(master_seed, trial index)` and may run on any number
//! of threads; per-trial results are collected in index order and reduced with
//! compensated summation, so averages do not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::{despread, estimate_overlap, mmse_estimate, receive_pilot_block};
use crate::linalg::{ComplexMat, ComplexVec};
use crate::model::{
    draw_jammer_sequence, gen_channel, make_codebook, overlap_sq, JammerKind, JammerModel, PilotCodebook,
    RateAccounting, SystemConfig,
};
use crate::protocols::{run_algorithm1_on, run_algorithm2_on, SimulatedLink};
use crate::rates::{effective_sinr, rate_for_overlap, rate_random_jamming};
use crate::rng::{RandomStream, TrialStreams};
use crate::scalar::{mean_and_stderr, CompensatedSum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    /// Single pilot transmission, no counter-measure.
    Conventional,
    /// Random-jamming retransmission protocol.
    Alg1,
    /// Deterministic-jamming retransmission protocol.
    Alg2,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Conventional, Scheme::Alg1, Scheme::Alg2];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Conventional => "conventional",
            Scheme::Alg1 => "alg1",
            Scheme::Alg2 => "alg2",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conventional" => Ok(Scheme::Conventional),
            "alg1" => Ok(Scheme::Alg1),
            "alg2" => Ok(Scheme::Alg2),
            _ => Err(format!("unknown scheme `{s}` (expected conventional, alg1 or alg2)")),
        }
    }
}

/// How the jamming sequence of each realization is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JammerScenario {
    Absent,
    /// Fresh `CN(0, I/τ)` sequence every round.
    RandomGaussian,
    /// Fresh uniformly random unit-norm sequence every round.
    RandomUnitSphere,
    /// One `CN(0, I/τ)` draw per realization, repeated in every round.
    FixedGaussian,
    /// A uniformly random codeword per realization, repeated in every round.
    Codeword,
    /// Repeats the codeword the user sends first (the jammer knows the default pilot).
    PilotCopy,
}

impl JammerScenario {
    pub fn name(self) -> &'static str {
        match self {
            JammerScenario::Absent => "absent",
            JammerScenario::RandomGaussian => "random_gaussian",
            JammerScenario::RandomUnitSphere => "random_unit_sphere",
            JammerScenario::FixedGaussian => "fixed_gaussian",
            JammerScenario::Codeword => "codeword",
            JammerScenario::PilotCopy => "pilot_copy",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, JammerScenario::RandomGaussian | JammerScenario::RandomUnitSphere)
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, JammerScenario::FixedGaussian | JammerScenario::Codeword | JammerScenario::PilotCopy)
    }

    /// Jammer model for one realization. Deterministic scenarios consume
    /// their draw from `rng` here; random ones draw per round later.
    fn realize<T: Real>(
        self,
        rng: &mut RandomStream,
        codebook: &PilotCodebook<T>,
        first_pilot: usize,
    ) -> Result<JammerModel<T>> {
        let tau = codebook.tau();
        let kind = match self {
            JammerScenario::Absent => JammerKind::Absent,
            JammerScenario::RandomGaussian => JammerKind::RandomGaussian,
            JammerScenario::RandomUnitSphere => JammerKind::RandomUnitSphere,
            JammerScenario::FixedGaussian => {
                let seq = draw_jammer_sequence(rng, &JammerModel::new(JammerKind::RandomGaussian), tau)?;
                JammerKind::Deterministic(seq)
            }
            JammerScenario::Codeword => JammerKind::Deterministic(codebook.codeword(rng.index(tau)).clone()),
            JammerScenario::PilotCopy => JammerKind::Deterministic(codebook.codeword(first_pilot).clone()),
        };
        Ok(JammerModel::new(kind))
    }
}

impl fmt::Display for JammerScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JammerScenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "absent" => JammerScenario::Absent,
            "random_gaussian" => JammerScenario::RandomGaussian,
            "random_unit_sphere" => JammerScenario::RandomUnitSphere,
            "fixed_gaussian" => JammerScenario::FixedGaussian,
            "codeword" => JammerScenario::Codeword,
            "pilot_copy" => JammerScenario::PilotCopy,
            _ => {
                return Err(format!(
                    "unknown jammer `{s}` (expected absent, random_gaussian, random_unit_sphere, \
                     fixed_gaussian, codeword or pilot_copy)"
                ))
            }
        })
    }
}

/// A scheme together with the jamming it is evaluated against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemeRun {
    pub scheme: Scheme,
    pub jammer: JammerScenario,
}

impl SchemeRun {
    pub fn new(scheme: Scheme, jammer: JammerScenario) -> Self {
        Self { scheme, jammer }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.scheme {
            Scheme::Conventional => true,
            Scheme::Alg1 => !self.jammer.is_deterministic(),
            Scheme::Alg2 => !self.jammer.is_random(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("scheme {} cannot run against a {} jammer", self.scheme, self.jammer)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult<T> {
    pub scheme: Scheme,
    pub rate: T,
    pub n_used: usize,
    pub overlap_sq: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateSummary<T> {
    pub mean_rate: T,
    pub stderr: T,
    /// `n_used_histogram[n]` = trials that spent `n` transmissions.
    pub n_used_histogram: Vec<usize>,
    pub mean_n_used: T,
    pub n_trials: usize,
}

fn overlap_for_accounting<T: Real>(cfg: &SystemConfig<T>, true_ov: T, est_ov: T) -> T {
    match cfg.rate_accounting {
        RateAccounting::TrueOverlap => true_ov,
        RateAccounting::EstimatedOverlap => est_ov,
    }
}

/// One realization of `(s_u, s_j)` (and channels where the scheme needs the
/// received signal), evaluated with the closed-form rate.
pub fn run_trial<T: Real>(
    cfg: &SystemConfig<T>,
    run: SchemeRun,
    codebook: &PilotCodebook<T>,
    trial: u64,
) -> Result<TrialResult<T>> {
    let mut st = TrialStreams::new(cfg.master_seed, trial);
    let tau = cfg.tau;
    let report = match run.scheme {
        Scheme::Conventional => {
            let first = st.pilot.index(tau);
            let s_u = codebook.codeword(first);
            let jammer = run.jammer.realize(&mut st.jammer_sequence, codebook, first)?;
            let s_j = draw_jammer_sequence(&mut st.jammer_sequence, &jammer, tau)?;
            let true_ov = overlap_sq(&s_j, s_u)?;
            let ov = match cfg.rate_accounting {
                RateAccounting::TrueOverlap => true_ov,
                RateAccounting::EstimatedOverlap => {
                    let g_u = gen_channel(&mut st.user_channel, cfg.m, cfg.beta_u)?;
                    let g_j = gen_channel(&mut st.jammer_channel, cfg.m, cfg.beta_j)?;
                    let block = receive_pilot_block(cfg, &g_u, &g_j, s_u, &s_j, Some(&mut st.noise))?;
                    if cfg.q_t() > T::zero() {
                        estimate_overlap(&despread(&block, s_u)?, cfg)?
                    } else {
                        T::zero()
                    }
                }
            };
            rate_for_overlap(cfg, ov, 1)?
        }
        Scheme::Alg1 => {
            let jammer = run.jammer.realize(&mut st.jammer_sequence, codebook, 0)?;
            let g_u = gen_channel(&mut st.user_channel, cfg.m, cfg.beta_u)?;
            let g_j = gen_channel(&mut st.jammer_channel, cfg.m, cfg.beta_j)?;
            let mut link = SimulatedLink::new(cfg, &g_u, &g_j, &jammer, &mut st.jammer_sequence, &mut st.noise);
            let trace = run_algorithm1_on(cfg, &mut link, codebook, &mut st.pilot)?;
            let overlaps = match cfg.rate_accounting {
                RateAccounting::TrueOverlap => trace.true_overlaps(),
                RateAccounting::EstimatedOverlap => trace.estimated_overlaps(),
            };
            rate_random_jamming(cfg, &overlaps)?
        }
        Scheme::Alg2 => {
            let first = st.pilot.index(tau);
            let jammer = run.jammer.realize(&mut st.jammer_sequence, codebook, first)?;
            let g_u = gen_channel(&mut st.user_channel, cfg.m, cfg.beta_u)?;
            let g_j = gen_channel(&mut st.jammer_channel, cfg.m, cfg.beta_j)?;
            let mut link = SimulatedLink::new(cfg, &g_u, &g_j, &jammer, &mut st.jammer_sequence, &mut st.noise);
            let trace = run_algorithm2_on(cfg, &mut link, codebook, first, cfg.opt_mode)?;
            let last = trace.chosen();
            rate_for_overlap(cfg, overlap_for_accounting(cfg, last.overlap_true, last.overlap_est), trace.n_used)?
        }
    };
    Ok(TrialResult { scheme: run.scheme, rate: report.rate, n_used: report.n_used, overlap_sq: report.overlap_sq_used })
}

/// All per-trial results in trial-index order. Runs on the current rayon pool.
pub fn simulate_trials<T: Real>(cfg: &SystemConfig<T>, run: SchemeRun, n_trials: usize) -> Result<Vec<TrialResult<T>>> {
    if n_trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    cfg.validate()?;
    run.validate()?;
    let codebook = make_codebook::<T>(cfg.tau)?;
    (0..n_trials as u64).into_par_iter().map(|t| run_trial(cfg, run, &codebook, t)).collect()
}

pub fn summarize<T: Real>(results: &[TrialResult<T>], n_max: usize) -> RateSummary<T> {
    let rates: Vec<T> = results.iter().map(|r| r.rate).collect();
    let (mean_rate, stderr) = mean_and_stderr(&rates);
    let mut hist = vec![0usize; n_max.max(results.iter().map(|r| r.n_used).max().unwrap_or(0)) + 1];
    for r in results {
        hist[r.n_used] += 1;
    }
    let n_sum: usize = results.iter().map(|r| r.n_used).sum();
    RateSummary {
        mean_rate,
        stderr,
        n_used_histogram: hist,
        mean_n_used: T::from_count(n_sum) / T::from_count(results.len().max(1)),
        n_trials: results.len(),
    }
}

pub fn average_rate<T: Real>(cfg: &SystemConfig<T>, run: SchemeRun, n_trials: usize) -> Result<RateSummary<T>> {
    let results = simulate_trials(cfg, run, n_trials)?;
    Ok(summarize(&results, cfg.n_max))
}

/// Mean and standard error of the per-trial rate difference `a - b`. Runs
/// with the same seed share their first-round draws, so pairing by trial
/// index removes the common sequence noise from the comparison.
pub fn paired_difference<T: Real>(a: &[TrialResult<T>], b: &[TrialResult<T>]) -> Result<(T, T)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::dim(format!("paired comparison of {} and {} trials", a.len(), b.len())));
    }
    let diffs: Vec<T> = a.iter().zip(b).map(|(x, y)| x.rate - y.rate).collect();
    Ok(mean_and_stderr(&diffs))
}

/// Unit pilot `s_u` (codeword 0) and jamming sequence `s_j` of unit norm with
/// `|s_jᵀs_u*|² = overlap` exactly, built from codewords 0 and 1.
pub fn sequences_with_overlap<T: Real>(
    codebook: &PilotCodebook<T>,
    overlap: T,
) -> Result<(ComplexVec<T>, ComplexVec<T>)> {
    if !(overlap >= T::zero() && overlap <= T::one()) {
        return Err(Error::param(format!("overlap must lie in [0, 1], got {overlap}")));
    }
    let s_u = codebook.codeword(0).clone();
    if overlap == T::one() {
        return Ok((s_u.clone(), s_u));
    }
    if codebook.len() < 2 {
        return Err(Error::param("an overlap below 1 needs tau >= 2"));
    }
    let s_j = s_u.scale(overlap.sqrt()).add(&codebook.codeword(1).scale((T::one() - overlap).sqrt()))?;
    Ok((s_u, s_j))
}

/// Empirical vs closed-form moments of the effective noise after MRC.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport<T> {
    pub e1_emp: T,
    pub e1_th: T,
    pub e1_stderr: T,
    pub e2_emp: T,
    pub e2_th: T,
    pub e2_stderr: T,
    pub e3_emp: T,
    pub e3_th: T,
    pub e3_stderr: T,
    /// `p_d |E{‖ĝ_u‖²}|²`
    pub signal_emp: T,
    pub signal_th: T,
    pub sinr_emp: T,
    pub sinr_th: T,
    /// `E{‖ĝ_u‖⁴} / (M(M+1)γ_u²)`, which should tend to 1.
    pub fourth_moment_ratio: T,
    pub gamma_u: T,
    pub trials: usize,
}

fn rel_err<T: Real>(emp: T, th: T) -> T {
    if th == T::zero() {
        if emp == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        ((emp - th) / th).abs()
    }
}

impl<T: Real> MomentReport<T> {
    pub fn e1_rel_err(&self) -> T {
        rel_err(self.e1_emp, self.e1_th)
    }
    pub fn e2_rel_err(&self) -> T {
        rel_err(self.e2_emp, self.e2_th)
    }
    pub fn e3_rel_err(&self) -> T {
        rel_err(self.e3_emp, self.e3_th)
    }
    pub fn signal_rel_err(&self) -> T {
        rel_err(self.signal_emp, self.signal_th)
    }
    pub fn sinr_rel_err(&self) -> T {
        rel_err(self.sinr_emp, self.sinr_th)
    }

    /// Moments within `moment_tol` and SINR within `sinr_tol` relative error.
    /// A zero tolerance is never met by a stochastic estimate.
    pub fn within(&self, moment_tol: T, sinr_tol: T) -> bool {
        let strict = |e: T, tol: T| e < tol || (e == T::zero() && tol > T::zero());
        strict(self.e1_rel_err(), moment_tol)
            && strict(self.e2_rel_err(), moment_tol)
            && strict(self.e3_rel_err(), moment_tol)
            && strict(self.sinr_rel_err(), sinr_tol)
    }
}

struct MomentSample<T> {
    e1: T,
    e2: T,
    e3: T,
    g2: T,
    g4: T,
}

/// Monte Carlo check of the effective-noise moments for fixed sequences with
/// the prescribed overlap; channels, noise and data symbols are redrawn each
/// trial and the MMSE coefficient uses the true overlap.
pub fn verify_appendix<T: Real>(cfg: &SystemConfig<T>, overlap: T, n_trials: usize) -> Result<MomentReport<T>> {
    cfg.validate()?;
    if n_trials < 2 {
        return Err(Error::param("need at least two trials"));
    }
    let codebook = make_codebook::<T>(cfg.tau)?;
    let (s_u, s_j) = sequences_with_overlap(&codebook, overlap)?;
    let true_ov = overlap_sq(&s_j, &s_u)?;
    let m = cfg.m;
    let mf = T::from_count(m);
    let (p_t, p_d, q_t, q_d) = (cfg.p_t(), cfg.p_d(), cfg.q_t(), cfg.q_d());
    let (_, gamma_u) = crate::estimation::mmse_coefficient(cfg, true_ov)?;
    let mean_g2 = mf * gamma_u;

    let samples: Vec<MomentSample<T>> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<MomentSample<T>> {
            let mut st = TrialStreams::new(cfg.master_seed, trial);
            let g_u = gen_channel(&mut st.user_channel, m, cfg.beta_u)?;
            let g_j = gen_channel(&mut st.jammer_channel, m, cfg.beta_j)?;
            let block = receive_pilot_block(cfg, &g_u, &g_j, &s_u, &s_j, Some(&mut st.noise))?;
            let est = mmse_estimate(&despread(&block, &s_u)?, cfg, true_ov)?;
            let g_hat = est.g_hat;
            let e_u = g_u.sub(&g_hat)?;
            let n_d = ComplexVec::from_fn(m, |_| st.data.complex_normal(T::one()));
            let x_u: Complex<T> = st.data.complex_normal(T::one());
            let x_j: Complex<T> = st.data.complex_normal(T::one());
            let g2 = g_hat.norm_sqr();
            let self_term = (Complex::new(g2 - mean_g2, T::zero()) + g_hat.hdot(&e_u)?) * x_u;
            Ok(MomentSample {
                e1: p_d * self_term.norm_sqr(),
                e2: q_d * (g_hat.hdot(&g_j)? * x_j).norm_sqr(),
                e3: g_hat.hdot(&n_d)?.norm_sqr(),
                g2,
                g4: g2 * g2,
            })
        })
        .collect::<Result<_>>()?;

    let col = |f: fn(&MomentSample<T>) -> T| samples.iter().map(f).collect::<Vec<T>>();
    let (e1_emp, e1_stderr) = mean_and_stderr(&col(|s| s.e1));
    let (e2_emp, e2_stderr) = mean_and_stderr(&col(|s| s.e2));
    let (e3_emp, e3_stderr) = mean_and_stderr(&col(|s| s.e3));
    let g2_mean = samples.iter().map(|s| s.g2).collect::<CompensatedSum<T>>().value() / T::from_count(n_trials);
    let g4_mean = samples.iter().map(|s| s.g4).collect::<CompensatedSum<T>>().value() / T::from_count(n_trials);

    let ratio = cfg.beta_j / cfg.beta_u;
    let e1_th = mf * gamma_u * p_d * cfg.beta_u;
    let e2_th = if q_d == T::zero() {
        T::zero()
    } else {
        mf * q_d * gamma_u * (cfg.beta_j + mf * gamma_u * (q_t / p_t) * ratio * ratio * true_ov)
    };
    let e3_th = mf * gamma_u;
    let signal_emp = p_d * g2_mean * g2_mean;
    let signal_th = p_d * mf * mf * gamma_u * gamma_u;
    Ok(MomentReport {
        e1_emp,
        e1_th,
        e1_stderr,
        e2_emp,
        e2_th,
        e2_stderr,
        e3_emp,
        e3_th,
        e3_stderr,
        signal_emp,
        signal_th,
        sinr_emp: signal_emp / (e1_emp + e2_emp + e3_emp),
        sinr_th: effective_sinr(cfg, gamma_u, true_ov)?,
        fourth_moment_ratio: g4_mean / (mf * (mf + T::one()) * gamma_u * gamma_u),
        gamma_u,
        trials: n_trials,
    })
}

/// Root-mean-square error of the clamped blind overlap estimate for fixed
/// sequences with the given true overlap.
pub fn overlap_estimator_rmse<T: Real>(cfg: &SystemConfig<T>, overlap: T, n_trials: usize) -> Result<T> {
    cfg.validate()?;
    let codebook = make_codebook::<T>(cfg.tau)?;
    let (s_u, s_j) = sequences_with_overlap(&codebook, overlap)?;
    let sq: Vec<T> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<T> {
            let mut st = TrialStreams::new(cfg.master_seed, trial);
            let g_u = gen_channel(&mut st.user_channel, cfg.m, cfg.beta_u)?;
            let g_j = gen_channel(&mut st.jammer_channel, cfg.m, cfg.beta_j)?;
            let block = receive_pilot_block(cfg, &g_u, &g_j, &s_u, &s_j, Some(&mut st.noise))?;
            let e = estimate_overlap(&despread(&block, &s_u)?, cfg)? - overlap;
            Ok(e * e)
        })
        .collect::<Result<_>>()?;
    let mse = sq.into_iter().collect::<CompensatedSum<T>>().value() / T::from_count(n_trials);
    Ok(mse.sqrt())
}

/// Median Frobenius error of the jammer Gram estimate for a fixed `s_j`
/// against pilot codeword 0.
pub fn jammer_gram_median_error<T: Real>(cfg: &SystemConfig<T>, s_j: &ComplexVec<T>, n_trials: usize) -> Result<T> {
    cfg.validate()?;
    let codebook = make_codebook::<T>(cfg.tau)?;
    let s_u = codebook.codeword(0).clone();
    let truth = ComplexMat::outer(&s_j.conj(), s_j);
    let mut errs: Vec<T> = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| -> Result<T> {
            let mut st = TrialStreams::new(cfg.master_seed, trial);
            let g_u = gen_channel(&mut st.user_channel, cfg.m, cfg.beta_u)?;
            let g_j = gen_channel(&mut st.jammer_channel, cfg.m, cfg.beta_j)?;
            let block = receive_pilot_block(cfg, &g_u, &g_j, &s_u, s_j, Some(&mut st.noise))?;
            let est = crate::estimation::estimate_jammer_gram(&block, &s_u, cfg)?;
            Ok(est.sub(&truth)?.frobenius_norm())
        })
        .collect::<Result<_>>()?;
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = errs.len();
    Ok(if n % 2 == 1 { errs[n / 2] } else { (errs[n / 2 - 1] + errs[n / 2]) / T::lit(2.0) })
}
