use antijam::model::PowerPolicy;
use antijam::rates::{prelog, rate_deterministic_jamming, rate_for_overlap, rate_random_jamming, saturation_rate};
use antijam::Config;
use proptest::prelude::*;

// effective SINR and rate written out directly from the closed form
fn rate_oracle(c: &Config, ov: f64, n: usize) -> f64 {
    let (m, tau) = (c.m as f64, c.tau as f64);
    let (p_t, p_d, q_t, q_d) = (c.p_t(), c.p_d(), c.q_t(), c.q_d());
    let gamma = tau * p_t * c.beta_u * c.beta_u / (tau * p_t * c.beta_u + tau * q_t * c.beta_j * ov + 1.0);
    let alpha = m * (q_d * q_t / p_t) * (c.beta_j / c.beta_u).powi(2) * ov * gamma;
    let rho = m * p_d * gamma / (p_d * c.beta_u + q_d * c.beta_j + alpha + 1.0);
    (1.0 - n as f64 * tau / c.coherence as f64) * (1.0 + rho).log2()
}

fn arb_config() -> impl Strategy<Value = Config> {
    (1usize..600, 1usize..30, 0.05f64..3.0, 0.05f64..3.0, 0.1f64..30.0, 0.0f64..30.0).prop_map(
        |(m, tau, beta_u, beta_j, p, q)| Config { m, tau, coherence: 200, beta_u, beta_j, p, q, ..Default::default() },
    )
}

proptest! {
    #[test]
    fn closed_form_matches_oracle(c in arb_config(), ov in 0.0f64..=1.0, n in 1usize..=2) {
        let r = rate_for_overlap(&c, ov, n).unwrap().rate;
        let o = rate_oracle(&c, ov, n);
        prop_assert!((r - o).abs() <= 1e-10 * o.abs().max(1.0), "{r} vs {o}");
        prop_assert!(r >= 0.0);
    }

    #[test]
    fn rate_decreases_with_overlap(c in arb_config(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r_lo = rate_for_overlap(&c, lo, 1).unwrap().rate;
        let r_hi = rate_for_overlap(&c, hi, 1).unwrap().rate;
        prop_assert!(r_hi <= r_lo + 1e-12);
    }

    #[test]
    fn rate_increases_with_antennas(c in arb_config(), ov in 0.0f64..=1.0) {
        let bigger = Config { m: c.m + 1, ..c.clone() };
        prop_assert!(rate_for_overlap(&bigger, ov, 1).unwrap().rate >= rate_for_overlap(&c, ov, 1).unwrap().rate);
    }

    #[test]
    fn random_jamming_uses_best_round(c in arb_config(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let two = rate_random_jamming(&c, &[a, b]).unwrap();
        let expect = rate_for_overlap(&c, a.min(b), 2).unwrap().rate;
        prop_assert!((two.rate - expect).abs() <= 1e-12 * expect.max(1.0));
        prop_assert_eq!(two.n_used, 2);
        // a second round never helps when the first already had the smaller overlap
        if a <= b {
            prop_assert!(two.rate <= rate_random_jamming(&c, &[a]).unwrap().rate + 1e-12);
        }
    }

    #[test]
    fn sinr_decreases_with_jammer_power(
        c in arb_config(), ov in 0.0f64..=1.0, q_t in 0.0f64..5.0, q_d in 0.0f64..5.0, dt in 0.0f64..5.0, dd in 0.0f64..5.0,
    ) {
        let with = |q_t: f64, q_d: f64| Config {
            power_policy: PowerPolicy::Explicit { p_t: c.p, p_d: c.p, q_t, q_d },
            q: 20.0,
            ..c.clone()
        };
        let base = rate_for_overlap(&with(q_t, q_d), ov, 1).unwrap().rho;
        prop_assert!(rate_for_overlap(&with(q_t + dt, q_d), ov, 1).unwrap().rho <= base * (1.0 + 1e-12));
        prop_assert!(rate_for_overlap(&with(q_t, q_d + dd), ov, 1).unwrap().rho <= base * (1.0 + 1e-12));
    }

    #[test]
    fn min_selection_never_increases_contamination(c in arb_config(), ovs in prop::collection::vec(0.0f64..=1.0, 1..=2)) {
        let list = rate_random_jamming(&c, &ovs).unwrap();
        let first = rate_for_overlap(&c, ovs[0], 1).unwrap();
        prop_assert!(list.alpha <= first.alpha);
    }

    #[test]
    fn prelog_is_linear_in_rounds(c in arb_config(), n in 1usize..=2) {
        let expect = 1.0 - (n * c.tau) as f64 / 200.0;
        prop_assert!((prelog(&c, n).unwrap() - expect).abs() < 1e-15);
    }
}

#[test]
fn doubling_antennas_adds_prelog_bit_without_pilot_jamming() {
    let c = Config {
        tau: 10,
        power_policy: PowerPolicy::Explicit { p_t: 1.0, p_d: 1.0, q_t: 0.0, q_d: 1.0 },
        ..Default::default()
    };
    let mut last_gap = f64::INFINITY;
    for m in [100usize, 1_000, 10_000, 100_000, 1_000_000] {
        let r1 = rate_for_overlap(&Config { m, ..c.clone() }, 0.7, 1).unwrap().rate;
        let r2 = rate_for_overlap(&Config { m: 2 * m, ..c.clone() }, 0.7, 1).unwrap().rate;
        let gap = 0.95 - (r2 - r1);
        assert!(gap >= 0.0 && gap < last_gap, "M={m}: gap {gap}");
        last_gap = gap;
    }
    assert!(last_gap < 1e-5);
}

#[test]
fn pilot_jamming_saturates_the_rate() {
    let c = Config { tau: 10, ..Default::default() };
    let limit = saturation_rate(&c, 0.25);
    let oracle = 0.95 * (1.0f64 + 4.0).log2();
    assert!((limit - oracle).abs() < 1e-12);
    let mut prev = 0.0;
    for m in [10usize, 100, 1_000, 10_000, 100_000, 1_000_000] {
        let r = rate_for_overlap(&Config { m, ..c.clone() }, 0.25, 1).unwrap().rate;
        assert!(r > prev && r < limit);
        prev = r;
    }
    assert!(limit - prev < 1e-3);
}

#[test]
fn deterministic_jamming_rate_follows_the_decision() {
    let c = Config::default();
    // first round below threshold: a single transmission
    let r = rate_deterministic_jamming(&c, 0.05, Some(0.0)).unwrap();
    assert_eq!(r.n_used, 1);
    // better prediction: two transmissions at the predicted overlap
    let r = rate_deterministic_jamming(&c, 0.6, Some(0.1)).unwrap();
    assert_eq!(r.n_used, 2);
    assert!((r.rate - rate_oracle(&c, 0.1, 2)).abs() < 1e-12);
    assert!(rate_deterministic_jamming(&c, 0.6, None).is_err());
}
