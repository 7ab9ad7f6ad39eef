//! Training-phase signal chain and the large-array blind estimators of the
//! jammer statistics.

use crate::error::{Error, Result};
use crate::linalg::{project_psd, ComplexMat, ComplexVec};
use crate::model::{overlap_sq, MmseMode, SystemConfig};
use crate::rng::RandomStream;
use crate::scalar::Real;

/// Everything the BS and the simulator know after one pilot transmission.
#[derive(Clone, Debug)]
pub struct TrainingOutcome<T> {
    /// `M × τ` received pilot block.
    pub block: ComplexMat<T>,
    /// De-spread observation, length `M`.
    pub despread: ComplexVec<T>,
    pub c_u: T,
    pub g_hat: ComplexVec<T>,
    pub gamma_u: T,
    /// Ground truth `|s_jᵀs_u*|²` (simulation only).
    pub overlap_true: T,
    /// Clamped blind estimate; `None` when the jammer has no training power.
    pub overlap_est: Option<T>,
    /// PSD estimate of `s_j* s_jᵀ`; `None` when the jammer has no training power.
    pub jammer_gram_est: Option<ComplexMat<T>>,
}

/// `Y_t = √(τ p_t) g_u s_uᵀ + √(τ q_t) g_j s_jᵀ + N_t`.
///
/// Passing `noise = None` leaves out `N_t`, which is how tests isolate the
/// signal terms.
pub fn receive_pilot_block<T: Real>(
    cfg: &SystemConfig<T>,
    g_u: &ComplexVec<T>,
    g_j: &ComplexVec<T>,
    s_u: &ComplexVec<T>,
    s_j: &ComplexVec<T>,
    noise: Option<&mut RandomStream>,
) -> Result<ComplexMat<T>> {
    let (m, tau) = (cfg.m, cfg.tau);
    if g_u.len() != m || g_j.len() != m {
        return Err(Error::dim(format!(
            "channels of length {}/{} for M={m}",
            g_u.len(),
            g_j.len()
        )));
    }
    if s_u.len() != tau || s_j.len() != tau {
        return Err(Error::dim(format!(
            "sequences of length {}/{} for tau={tau}",
            s_u.len(),
            s_j.len()
        )));
    }
    let tau_f = T::from_count(tau);
    let a_u = (tau_f * cfg.p_t()).sqrt();
    let a_j = (tau_f * cfg.q_t()).sqrt();
    let mut y = ComplexMat::from_fn(m, tau, |r, c| g_u[r] * s_u[c] * a_u + g_j[r] * s_j[c] * a_j);
    if let Some(rng) = noise {
        for r in 0..m {
            for c in 0..tau {
                y[(r, c)] = y[(r, c)] + rng.complex_normal(T::one());
            }
        }
    }
    Ok(y)
}

/// `y_t = Y_t s_u*`.
pub fn despread<T: Real>(block: &ComplexMat<T>, s_u: &ComplexVec<T>) -> Result<ComplexVec<T>> {
    block.mul_vec(&s_u.conj())
}

/// `(c_u, γ_u)` for a given `|s_jᵀs_u*|²`.
pub fn mmse_coefficient<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T) -> Result<(T, T)> {
    if !(overlap_sq >= T::zero()) {
        return Err(Error::param(format!("overlap must be non-negative, got {overlap_sq}")));
    }
    let tau = T::from_count(cfg.tau);
    let root = (tau * cfg.p_t()).sqrt();
    let denom = tau * cfg.p_t() * cfg.beta_u + tau * cfg.q_t() * cfg.beta_j * overlap_sq + T::one();
    let c_u = root * cfg.beta_u / denom;
    Ok((c_u, c_u * root * cfg.beta_u))
}

#[derive(Clone, Debug)]
pub struct MmseEstimate<T> {
    pub c_u: T,
    pub g_hat: ComplexVec<T>,
    pub gamma_u: T,
}

pub fn mmse_estimate<T: Real>(
    despread: &ComplexVec<T>,
    cfg: &SystemConfig<T>,
    overlap_sq: T,
) -> Result<MmseEstimate<T>> {
    let (c_u, gamma_u) = mmse_coefficient(cfg, overlap_sq)?;
    Ok(MmseEstimate { c_u, g_hat: despread.scale(c_u), gamma_u })
}

fn require_training_jammer<T: Real>(cfg: &SystemConfig<T>, what: &str) -> Result<()> {
    if !(cfg.q_t() > T::zero()) || !(cfg.beta_j > T::zero()) {
        return Err(Error::Unsupported(format!("{what} needs q_t > 0 and beta_j > 0")));
    }
    Ok(())
}

/// Unclamped blind estimate of `|s_jᵀs_u*|²` from the de-spread pilot.
pub fn estimate_overlap_raw<T: Real>(despread: &ComplexVec<T>, cfg: &SystemConfig<T>) -> Result<T> {
    require_training_jammer(cfg, "overlap estimation")?;
    let tau = T::from_count(cfg.tau);
    let m = T::from_count(despread.len());
    let (p_t, q_t) = (cfg.p_t(), cfg.q_t());
    Ok(despread.norm_sqr() / (tau * q_t * m * cfg.beta_j)
        - p_t * cfg.beta_u / (q_t * cfg.beta_j)
        - T::one() / (tau * q_t * cfg.beta_j))
}

/// Blind overlap estimate clamped to `[0, 1]`.
pub fn estimate_overlap<T: Real>(despread: &ComplexVec<T>, cfg: &SystemConfig<T>) -> Result<T> {
    Ok(clamp_overlap(estimate_overlap_raw(despread, cfg)?))
}

pub fn clamp_overlap<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

/// Unprojected estimate of `s_j* s_jᵀ`.
pub fn estimate_jammer_gram_raw<T: Real>(
    block: &ComplexMat<T>,
    s_u: &ComplexVec<T>,
    cfg: &SystemConfig<T>,
) -> Result<ComplexMat<T>> {
    require_training_jammer(cfg, "jammer Gram estimation")?;
    if block.cols() != s_u.len() {
        return Err(Error::dim(format!("block has {} columns, pilot length {}", block.cols(), s_u.len())));
    }
    let tau = T::from_count(block.cols());
    let m = T::from_count(block.rows());
    let (p_t, q_t) = (cfg.p_t(), cfg.q_t());
    let gram = block.gram().scale(T::one() / (tau * q_t * cfg.beta_j * m));
    let pilot = ComplexMat::outer(&s_u.conj(), s_u).scale(p_t * cfg.beta_u / (q_t * cfg.beta_j));
    let ident = ComplexMat::identity(block.cols()).scale(T::one() / (tau * q_t * cfg.beta_j));
    gram.sub(&pilot)?.sub(&ident)
}

/// Hermitian PSD estimate of `s_j* s_jᵀ`.
pub fn estimate_jammer_gram<T: Real>(
    block: &ComplexMat<T>,
    s_u: &ComplexVec<T>,
    cfg: &SystemConfig<T>,
) -> Result<ComplexMat<T>> {
    let raw = estimate_jammer_gram_raw(block, s_u, cfg)?;
    Ok(project_psd(&raw)?.0)
}

/// Runs the full training chain for one transmission. The MMSE coefficient
/// follows `cfg.mmse_mode`; with no training-phase jamming power both modes
/// coincide since the overlap term vanishes.
pub fn run_training<T: Real>(
    cfg: &SystemConfig<T>,
    g_u: &ComplexVec<T>,
    g_j: &ComplexVec<T>,
    s_u: &ComplexVec<T>,
    s_j: &ComplexVec<T>,
    noise: &mut RandomStream,
) -> Result<TrainingOutcome<T>> {
    let block = receive_pilot_block(cfg, g_u, g_j, s_u, s_j, Some(noise))?;
    let y_t = despread(&block, s_u)?;
    let overlap_true = overlap_sq(s_j, s_u)?;
    let jammed = cfg.q_t() > T::zero();
    let overlap_est = if jammed { Some(estimate_overlap(&y_t, cfg)?) } else { None };
    let jammer_gram_est = if jammed { Some(estimate_jammer_gram(&block, s_u, cfg)?) } else { None };
    let used = match cfg.mmse_mode {
        MmseMode::Oracle => overlap_true,
        MmseMode::Blind => overlap_est.unwrap_or(T::zero()),
    };
    let est = mmse_estimate(&y_t, cfg, used)?;
    Ok(TrainingOutcome {
        block,
        despread: y_t,
        c_u: est.c_u,
        g_hat: est.g_hat,
        gamma_u: est.gamma_u,
        overlap_true,
        overlap_est,
        jammer_gram_est,
    })
}

/// Limit of `‖y_t‖²/M` as `M → ∞`: `τ p_t β_u + τ q_t β_j |s_jᵀs_u*|² + 1`.
pub fn despread_power_limit<T: Real>(cfg: &SystemConfig<T>, overlap_sq: T) -> T {
    let tau = T::from_count(cfg.tau);
    tau * cfg.p_t() * cfg.beta_u + tau * cfg.q_t() * cfg.beta_j * overlap_sq + T::one()
}

/// Limit of `Y_tᴴY_t/M`: `τ p_t β_u s_u* s_uᵀ + τ q_t β_j s_j* s_jᵀ + I`.
pub fn block_gram_limit<T: Real>(cfg: &SystemConfig<T>, s_u: &ComplexVec<T>, s_j: &ComplexVec<T>) -> Result<ComplexMat<T>> {
    let tau = T::from_count(cfg.tau);
    let user = ComplexMat::outer(&s_u.conj(), s_u).scale(tau * cfg.p_t() * cfg.beta_u);
    let jam = ComplexMat::outer(&s_j.conj(), s_j).scale(tau * cfg.q_t() * cfg.beta_j);
    user.add(&jam)?.add(&ComplexMat::identity(s_u.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use crate::model::{gen_channel, make_codebook};
    use crate::rng::DrawTag;

    fn cfg(m: usize, tau: usize) -> SystemConfig<f64> {
        SystemConfig { m, tau, coherence: 200, ..Default::default() }
    }

    fn rand_vec(len: usize, seed: u64, tag: DrawTag) -> ComplexVec<f64> {
        let mut s = RandomStream::new(seed, 0, tag);
        ComplexVec::from_fn(len, |_| s.complex_normal(1.0))
    }

    #[test]
    fn silent_noiseless_block_is_zero() {
        let mut c = cfg(3, 2);
        c.power_policy = crate::model::PowerPolicy::Explicit { p_t: 0.0, p_d: 1.0, q_t: 0.0, q_d: 1.0 };
        let y = receive_pilot_block(
            &c,
            &rand_vec(3, 1, DrawTag::UserChannel),
            &rand_vec(3, 1, DrawTag::JammerChannel),
            &rand_vec(2, 1, DrawTag::PilotChoice),
            &rand_vec(2, 1, DrawTag::JammerSequence),
            None,
        )
        .unwrap();
        assert_eq!(y.frobenius_norm(), 0.0);
    }

    #[test]
    fn user_only_block_is_rank_one() {
        let mut c = cfg(4, 3);
        c.power_policy = crate::model::PowerPolicy::Explicit { p_t: 2.0, p_d: 1.0, q_t: 0.0, q_d: 1.0 };
        let g_u = rand_vec(4, 2, DrawTag::UserChannel);
        let s_u = make_codebook::<f64>(3).unwrap().codeword(1).clone();
        let y = receive_pilot_block(&c, &g_u, &rand_vec(4, 2, DrawTag::JammerChannel), &s_u, &rand_vec(3, 2, DrawTag::JammerSequence), None)
            .unwrap();
        let expect = ComplexMat::outer(&g_u, &s_u).scale((3.0f64 * 2.0).sqrt());
        assert_eq!(y, expect);
    }

    #[test]
    fn full_block_matches_termwise_recomputation() {
        let c = SystemConfig::<f64> { m: 2, tau: 2, coherence: 10, p: 1.7, q: 0.6, ..Default::default() };
        let g_u = rand_vec(2, 3, DrawTag::UserChannel);
        let g_j = rand_vec(2, 3, DrawTag::JammerChannel);
        let s_u = rand_vec(2, 3, DrawTag::PilotChoice);
        let s_j = rand_vec(2, 3, DrawTag::JammerSequence);
        let mut noise = RandomStream::new(3, 0, DrawTag::TrainingNoise);
        let y = receive_pilot_block(&c, &g_u, &g_j, &s_u, &s_j, Some(&mut noise)).unwrap();

        // independent oracle: replay the noise stream, evaluate each entry by hand
        let mut replay = RandomStream::new(3, 0, DrawTag::TrainingNoise);
        let (au, aj) = ((2.0 * 1.7f64).sqrt(), (2.0 * 0.6f64).sqrt());
        for r in 0..2 {
            for k in 0..2 {
                let n: Complex<f64> = replay.complex_normal(1.0);
                let want = g_u[r] * s_u[k] * au + g_j[r] * s_j[k] * aj + n;
                assert!((y[(r, k)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let c = cfg(3, 2);
        let err = receive_pilot_block(
            &c,
            &rand_vec(4, 1, DrawTag::UserChannel),
            &rand_vec(3, 1, DrawTag::JammerChannel),
            &rand_vec(2, 1, DrawTag::PilotChoice),
            &rand_vec(2, 1, DrawTag::JammerSequence),
            None,
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
        assert!(despread(&ComplexMat::<f64>::zeros(3, 3), &ComplexVec::zeros(2)).is_err());
    }

    #[test]
    fn despread_identity() {
        let y = ComplexMat::<f64>::identity(3);
        let e1 = ComplexVec::from_real(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(despread(&y, &e1).unwrap(), e1);
    }

    #[test]
    fn despread_removes_orthogonal_jammer() {
        let c = cfg(5, 4);
        let cb = make_codebook::<f64>(4).unwrap();
        let g_u = rand_vec(5, 4, DrawTag::UserChannel);
        let g_j = rand_vec(5, 4, DrawTag::JammerChannel);
        let y = receive_pilot_block(&c, &g_u, &g_j, cb.codeword(0), cb.codeword(2), None).unwrap();
        let yt = despread(&y, cb.codeword(0)).unwrap();
        let want = g_u.scale((4.0f64).sqrt());
        assert!(yt.sub(&want).unwrap().norm_sqr().sqrt() < 1e-13);
    }

    #[test]
    fn despread_matches_naive_loop() {
        let mut s = RandomStream::new(9, 0, DrawTag::Auxiliary);
        let y = ComplexMat::<f64>::from_fn(3, 3, |_, _| s.complex_normal(1.0));
        let su = ComplexVec::from_fn(3, |_| s.complex_normal(1.0));
        let got = despread(&y, &su).unwrap();
        for r in 0..3 {
            let mut acc = Complex::new(0.0, 0.0);
            for k in 0..3 {
                acc += y[(r, k)] * su[k].conj();
            }
            assert!((got[r] - acc).norm() < 1e-15);
        }
    }

    #[test]
    fn gamma_jam_free_training() {
        let mut c = SystemConfig::<f64> { tau: 10, ..Default::default() };
        c.power_policy = crate::model::PowerPolicy::Explicit { p_t: 1.0, p_d: 1.0, q_t: 0.0, q_d: 1.0 };
        let (_, g) = mmse_coefficient(&c, 0.7).unwrap();
        assert!((g - 10.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_full_overlap() {
        let c = SystemConfig::<f64> { tau: 10, ..Default::default() };
        let (_, g) = mmse_coefficient(&c, 1.0).unwrap();
        assert!((g - 10.0 / 21.0).abs() < 1e-15);
        assert!(mmse_coefficient(&c, -0.1).is_err());
    }

    #[test]
    fn gamma_tends_to_beta_with_training_power() {
        let mut c = SystemConfig::<f64> { tau: 10, beta_u: 0.7, ..Default::default() };
        c.power_policy = crate::model::PowerPolicy::Explicit { p_t: 1e12, p_d: 0.0, q_t: 0.0, q_d: 0.0 };
        c.p = 1e12;
        let (_, g) = mmse_coefficient(&c, 0.5).unwrap();
        assert!((g - 0.7).abs() < 1e-9);
    }

    #[test]
    fn overlap_estimate_inverts_the_limit() {
        let c = SystemConfig::<f64> { m: 16, tau: 10, p: 2.0, q: 3.0, beta_u: 0.5, beta_j: 1.5, ..Default::default() };
        let target = despread_power_limit(&c, 0.3);
        // ‖y‖²/M = target exactly with a constant-modulus vector
        let y = ComplexVec::from_fn(16, |_| Complex::new(target.sqrt(), 0.0));
        let est = estimate_overlap(&y, &c).unwrap();
        assert!((est - 0.3).abs() < 1e-12, "{est}");
    }

    #[test]
    fn overlap_estimate_clamps() {
        let c = SystemConfig::<f64> { m: 4, tau: 10, ..Default::default() };
        let target = despread_power_limit(&c, -0.02);
        let y = ComplexVec::from_fn(4, |_| Complex::new(target.sqrt(), 0.0));
        assert!((estimate_overlap_raw(&y, &c).unwrap() + 0.02).abs() < 1e-12);
        assert_eq!(estimate_overlap(&y, &c).unwrap(), 0.0);
        assert_eq!(clamp_overlap(1.3), 1.0);
    }

    #[test]
    fn estimators_refuse_silent_training_jammer() {
        let mut c = SystemConfig::<f64> { m: 4, tau: 2, ..Default::default() };
        c.q = 0.0;
        let y = ComplexVec::zeros(4);
        assert!(matches!(estimate_overlap(&y, &c), Err(Error::Unsupported(_))));
        let b = ComplexMat::zeros(4, 2);
        assert!(matches!(estimate_jammer_gram(&b, &ComplexVec::zeros(2), &c), Err(Error::Unsupported(_))));
    }

    /// Block whose Gram is exactly `M` times the large-array limit.
    fn limit_block(c: &SystemConfig<f64>, s_u: &ComplexVec<f64>, s_j: &ComplexVec<f64>) -> ComplexMat<f64> {
        let g = block_gram_limit(c, s_u, s_j).unwrap();
        let eig = crate::linalg::hermitian_eigen(&g).unwrap();
        // Y = sqrt(M) Λ^{1/2} Vᴴ padded with zero rows => YᴴY = M G
        let tau = s_u.len();
        let m = c.m as f64;
        ComplexMat::from_fn(c.m, tau, |r, k| {
            if r < tau {
                eig.vectors[(k, r)].conj() * (m * eig.values[r].max(0.0)).sqrt()
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn gram_estimate_recovers_jammer_outer_product_at_the_limit() {
        let c = SystemConfig::<f64> { m: 12, tau: 4, p: 2.0, q: 0.5, ..Default::default() };
        let cb = make_codebook::<f64>(4).unwrap();
        let s_j = rand_vec(4, 12, DrawTag::JammerSequence).scale(0.5);
        let y = limit_block(&c, cb.codeword(1), &s_j);
        let est = estimate_jammer_gram(&y, cb.codeword(1), &c).unwrap();
        let truth = ComplexMat::outer(&s_j.conj(), &s_j);
        assert!(est.sub(&truth).unwrap().frobenius_norm() < 1e-10);
        assert!(est.is_hermitian(1e-14));
    }

    #[test]
    fn gram_estimate_tau_two_basis_vector() {
        let c = SystemConfig::<f64> { m: 6, tau: 2, ..Default::default() };
        let s_u = make_codebook::<f64>(2).unwrap().codeword(0).clone();
        let s_j = ComplexVec::from_real(&[1.0, 0.0]).unwrap();
        let y = limit_block(&c, &s_u, &s_j);
        let est = estimate_jammer_gram(&y, &s_u, &c).unwrap();
        let want = ComplexMat::from_fn(2, 2, |r, k| Complex::new(if r == 0 && k == 0 { 1.0 } else { 0.0 }, 0.0));
        assert!(est.sub(&want).unwrap().frobenius_norm() < 1e-10);
    }

    #[test]
    fn run_training_fills_outcome() {
        let c = SystemConfig::<f64> { m: 32, tau: 8, ..Default::default() };
        let cb = make_codebook::<f64>(8).unwrap();
        let mut s1 = RandomStream::new(1, 0, DrawTag::UserChannel);
        let mut s2 = RandomStream::new(1, 0, DrawTag::JammerChannel);
        let g_u = gen_channel(&mut s1, 32, 1.0).unwrap();
        let g_j = gen_channel(&mut s2, 32, 1.0).unwrap();
        let mut n = RandomStream::new(1, 0, DrawTag::TrainingNoise);
        let out = run_training(&c, &g_u, &g_j, cb.codeword(0), cb.codeword(0), &mut n).unwrap();
        assert!((out.overlap_true - 1.0).abs() < 1e-12);
        assert!(out.gamma_u >= 0.0 && out.gamma_u <= c.beta_u);
        let e = out.overlap_est.unwrap();
        assert!((0.0..=1.0).contains(&e));
        assert!(out.jammer_gram_est.unwrap().is_hermitian(1e-12));
        assert_eq!(out.g_hat, out.despread.scale(out.c_u));
    }
}
