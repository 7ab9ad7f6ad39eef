//! Closed-form effective SINR and achievable rates, with and without pilot
//! retransmission.

use crate::error::{Error, Result};
use crate::estimation::mmse_coefficient;
use crate::model::SystemConfig;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReport<T> {
    /// Effective SINR.
    pub rho: T,
    /// Achievable rate in bits/s/Hz.
    pub rate: T,
    /// Number of pilot transmissions spent.
    pub n_used: usize,
    /// Jamming-pilot contamination term in the SINR denominator.
    pub alpha: T,
    pub overlap_sq_used: T,
    pub gamma_u: T,
    /// `1 − n_used·τ/T`.
    pub prelog: T,
}

/// `M (q_d q_t / p_t) (β_j/β_u)² |s_jᵀs_u*|² γ_u`.
pub fn contamination_term<T: Real>(cfg: &SystemConfig<T>, gamma_u: T, overlap_sq: T) -> Result<T> {
    let p_t = cfg.p_t();
    if !(p_t > T::zero()) {
        return Err(Error::param("p_t must be positive"));
    }
    let ratio = cfg.beta_j / cfg.beta_u;
    Ok(T::from_count(cfg.m) * (cfg.q_d() * cfg.q_t() / p_t) * ratio * ratio * overlap_sq * gamma_u)
}

pub fn effective_sinr<T: Real>(cfg: &SystemConfig<T>, gamma_u: T, overlap_sq: T) -> Result<T> {
    if !(gamma_u >= T::zero()) {
        return Err(Error::param(format!("gamma_u must be non-negative, got {gamma_u}")));
    }
    if !(overlap_sq >= T::zero()) {
        return Err(Error::param(format!("overlap must be non-negative, got {overlap_sq}")));
    }
    let alpha = contamination_term(cfg, gamma_u, overlap_sq)?;
    let p_d = cfg.p_d();
    Ok(T::from_count(cfg.m) * p_d * gamma_u / (p_d * cfg.beta_u + cfg.q_d() * cfg.beta_j + alpha + T::one()))
}

pub fn prelog<T: Real>(cfg: &SystemConfig<T>, n_used: usize) -> Result<T> {
    if n_used == 0 || n_used * cfg.tau >= cfg.coherence {
        return Err(Error::param(format!(
            "need 1 <= n_used and n_used*tau < T, got n_used={n_used} tau={} T={}",
            cfg.tau, cfg.coherence
        )));
    }
    Ok(T::one() - T::from_count(n_used * cfg.tau) / T::from_count(cfg.coherence))
}

pub fn rate<T: Real>(cfg: &SystemConfig<T>, rho: T, n_used: usize) -> Result<T> {
    if !(rho >= T::zero()) {
        return Err(Error::param(format!("rho must be non-negative, got {rho}")));
    }
    Ok(prelog(cfg, n_used)? * rho.ln_1p() / T::LN_2())
}

/// Large-array rate limit in the form `(1−τ/T) log2(p_t p_d β_u² / (q_t q_d β_j² |s_jᵀs_u*|²))`,
/// or `+∞` when the training phase is free of contamination.
///
/// Note this form drops the `1 +` inside the logarithm; the exact limit of
/// [`rate`] is [`saturation_rate`].
pub fn asymptotic_rate_limit<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T) -> T {
    match saturation_sinr(cfg, overlap_sq) {
        None => T::infinity(),
        Some(rho) => (T::one() - T::from_count(cfg.tau) / T::from_count(cfg.coherence)) * rho.log2(),
    }
}

/// Exact `M → ∞` limit of [`rate`] with a single transmission:
/// `(1−τ/T) log2(1 + p_t p_d β_u² / (q_t q_d β_j² |s_jᵀs_u*|²))`.
pub fn saturation_rate<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T) -> T {
    match saturation_sinr(cfg, overlap_sq) {
        None => T::infinity(),
        Some(rho) => (T::one() - T::from_count(cfg.tau) / T::from_count(cfg.coherence)) * rho.ln_1p() / T::LN_2(),
    }
}

fn saturation_sinr<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T) -> Option<T> {
    let contaminated = cfg.q_t() * cfg.q_d() * overlap_sq;
    if contaminated == T::zero() {
        return None;
    }
    let ratio = cfg.beta_u / cfg.beta_j;
    Some(cfg.p_t() * cfg.p_d() * ratio * ratio / contaminated)
}

/// Rate when the BS processes a pilot with overlap `overlap_sq` after
/// spending `n_used` transmissions. γ_u is derived from the same overlap.
pub fn rate_for_overlap<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T, n_used: usize) -> Result<RateReport<T>> {
    let (_, gamma_u) = mmse_coefficient(cfg, overlap_sq)?;
    let alpha = contamination_term(cfg, gamma_u, overlap_sq)?;
    let rho = effective_sinr(cfg, gamma_u, overlap_sq)?;
    let prelog = prelog(cfg, n_used)?;
    Ok(RateReport {
        rho,
        rate: prelog * rho.ln_1p() / T::LN_2(),
        n_used,
        alpha,
        overlap_sq_used: overlap_sq,
        gamma_u,
        prelog,
    })
}

/// Random-jamming retransmission rate: the best of the `overlaps.len()`
/// buffered transmissions is processed.
pub fn rate_random_jamming<T: Real>(cfg: &SystemConfig<T>, overlaps: &[T]) -> Result<RateReport<T>> {
    if overlaps.is_empty() {
        return Err(Error::param("no transmissions to choose from"));
    }
    if overlaps.len() > cfg.n_max {
        return Err(Error::param(format!("{} transmissions exceed n_max={}", overlaps.len(), cfg.n_max)));
    }
    let best = overlaps.iter().copied().fold(T::infinity(), T::min);
    rate_for_overlap(cfg, best, overlaps.len())
}

/// Deterministic-jamming retransmission rate. The first pilot is kept when it
/// passes the threshold test (`cfg.threshold_on`), otherwise the optimized
/// pilot is used with two transmissions.
pub fn rate_deterministic_jamming<T: Real>(
    cfg: &SystemConfig<T>,
    overlap_first: T,
    overlap_opt: Option<T>,
) -> Result<RateReport<T>> {
    if !(overlap_first >= T::zero()) {
        return Err(Error::param(format!("overlap must be non-negative, got {overlap_first}")));
    }
    if cfg.overlap_within_threshold(overlap_first) {
        return rate_for_overlap(cfg, overlap_first, 1);
    }
    let opt = overlap_opt.ok_or_else(|| Error::param("retransmission branch needs the optimized pilot's overlap"))?;
    rate_for_overlap(cfg, opt, 2)
}
