//! Flat `key = value` run configuration (one pair per line, `#` comments).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{MmseMode, OptMode, PowerPolicy, RateAccounting, SystemConfig, ThresholdMode};
use crate::montecarlo::{JammerScenario, Scheme, SchemeRun};
use crate::sweep::SweepAxis;

/// Everything a CLI run needs besides the command-line flags.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemConfig<f64>,
    pub trials: usize,
    /// Schemes with the jamming each is evaluated against.
    pub runs: Vec<SchemeRun>,
    pub axis: Option<SweepAxis>,
    pub values: Vec<f64>,
    /// Overlaps checked by the moment oracle.
    pub overlaps: Vec<f64>,
    pub tolerance: f64,
    pub sinr_tolerance: f64,
}

pub const DEFAULT_TRIALS: usize = 50_000;

pub fn default_jammer(scheme: Scheme) -> JammerScenario {
    match scheme {
        Scheme::Conventional | Scheme::Alg1 => JammerScenario::RandomGaussian,
        Scheme::Alg2 => JammerScenario::FixedGaussian,
    }
}

pub fn default_runs() -> Vec<SchemeRun> {
    Scheme::ALL.iter().map(|&s| SchemeRun::new(s, default_jammer(s))).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            trials: DEFAULT_TRIALS,
            runs: default_runs(),
            axis: None,
            values: Vec::new(),
            overlaps: vec![0.0, 0.5, 1.0],
            tolerance: 0.03,
            sinr_tolerance: 0.05,
        }
    }
}

impl RunConfig {
    /// Defaults of the `verify-appendix` subcommand.
    pub fn moment_check_defaults() -> Self {
        Self {
            system: SystemConfig { m: 20, tau: 8, coherence: 200, mmse_mode: MmseMode::Oracle, ..Default::default() },
            trials: 100_000,
            ..Default::default()
        }
    }

    pub fn load(path: &Path, base: RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_with_base(&text, base)
    }

    pub fn parse_with_base(text: &str, base: RunConfig) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let mut cfg = base;
        let mut jammers: BTreeMap<Scheme, JammerScenario> = BTreeMap::new();
        let mut schemes: Option<Vec<Scheme>> = None;
        let mut explicit = [None::<f64>; 4];
        let mut policy: Option<String> = None;
        let sys = &mut cfg.system;

        for (key, value) in &kv {
            let v = value.as_str();
            match key.as_str() {
                "M" => sys.m = parse(key, v)?,
                "T" => sys.coherence = parse(key, v)?,
                "tau" => sys.tau = parse(key, v)?,
                "beta_u" => sys.beta_u = parse(key, v)?,
                "beta_j" => sys.beta_j = parse(key, v)?,
                "P" => sys.p = parse(key, v)?,
                "Q" => sys.q = parse(key, v)?,
                "snr_db" => {
                    let db: f64 = parse(key, v)?;
                    *sys = sys.clone().with_snr_db(db);
                }
                "power_policy" => policy = Some(v.to_string()),
                "p_t" => explicit[0] = Some(parse(key, v)?),
                "p_d" => explicit[1] = Some(parse(key, v)?),
                "q_t" => explicit[2] = Some(parse(key, v)?),
                "q_d" => explicit[3] = Some(parse(key, v)?),
                "jam_data_phase" => sys.jam_data_phase = parse_bool(key, v)?,
                "epsilon" => sys.epsilon = parse(key, v)?,
                "n_max" => sys.n_max = parse(key, v)?,
                "seed" => sys.master_seed = parse(key, v)?,
                "threshold_on" => {
                    sys.threshold_on = match v {
                        "amplitude" => ThresholdMode::Amplitude,
                        "squared" => ThresholdMode::Squared,
                        _ => return Err(Error::config(key, format!("expected amplitude or squared, got `{v}`"))),
                    }
                }
                "mmse_mode" => {
                    sys.mmse_mode = match v {
                        "oracle" => MmseMode::Oracle,
                        "blind" => MmseMode::Blind,
                        _ => return Err(Error::config(key, format!("expected oracle or blind, got `{v}`"))),
                    }
                }
                "rate_accounting" => {
                    sys.rate_accounting = match v {
                        "true_overlap" => RateAccounting::TrueOverlap,
                        "estimated_overlap" => RateAccounting::EstimatedOverlap,
                        _ => {
                            return Err(Error::config(key, format!("expected true_overlap or estimated_overlap, got `{v}`")))
                        }
                    }
                }
                "opt_mode" => {
                    sys.opt_mode = match v {
                        "codebook" => OptMode::Codebook,
                        "eigen" => OptMode::Eigen,
                        _ => return Err(Error::config(key, format!("expected codebook or eigen, got `{v}`"))),
                    }
                }
                "trials" => cfg.trials = parse(key, v)?,
                "schemes" => {
                    let list = split_list(v)
                        .map(|s| s.parse::<Scheme>().map_err(|e| Error::config(key, e)))
                        .collect::<Result<Vec<_>>>()?;
                    schemes = Some(list);
                }
                "jammer_conventional" | "jammer_alg1" | "jammer_alg2" => {
                    let scheme: Scheme = key.trim_start_matches("jammer_").parse().expect("known scheme");
                    jammers.insert(scheme, v.parse().map_err(|e: String| Error::config(key, e))?);
                }
                "axis" => cfg.axis = Some(v.parse().map_err(|e: String| Error::config(key, e))?),
                "values" => cfg.values = parse_values(key, v)?,
                "overlaps" => cfg.overlaps = parse_values(key, v)?,
                "tolerance" => cfg.tolerance = parse(key, v)?,
                "sinr_tolerance" => cfg.sinr_tolerance = parse(key, v)?,
                _ => return Err(Error::config(key, "unknown key")),
            }
        }

        match policy.as_deref() {
            None | Some("uniform") if explicit.iter().all(Option::is_none) => {
                if policy.is_some() {
                    cfg.system.power_policy = PowerPolicy::Uniform;
                }
            }
            None | Some("explicit") => {
                let names = ["p_t", "p_d", "q_t", "q_d"];
                let mut vals = [0.0; 4];
                for i in 0..4 {
                    vals[i] = explicit[i].ok_or_else(|| Error::config(names[i], "explicit power policy needs p_t, p_d, q_t and q_d"))?;
                }
                cfg.system.power_policy = PowerPolicy::Explicit { p_t: vals[0], p_d: vals[1], q_t: vals[2], q_d: vals[3] };
            }
            Some("uniform") => return Err(Error::config("power_policy", "uniform policy takes no p_t/p_d/q_t/q_d")),
            Some(other) => return Err(Error::config("power_policy", format!("expected uniform or explicit, got `{other}`"))),
        }

        if let Some(list) = schemes {
            if list.is_empty() {
                return Err(Error::config("schemes", "at least one scheme is required"));
            }
            cfg.runs = list.into_iter().map(|s| SchemeRun::new(s, default_jammer(s))).collect();
        }
        for run in cfg.runs.iter_mut() {
            if let Some(&j) = jammers.get(&run.scheme) {
                run.jammer = j;
            }
        }
        for run in &cfg.runs {
            run.validate()
                .map_err(|e| Error::config(format!("jammer_{}", run.scheme), e.to_string()))?;
        }
        if cfg.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        cfg.system.validate()?;
        Ok(cfg)
    }
}

impl FromStr for RunConfig {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        Self::parse_with_base(text, RunConfig::default())
    }
}

/// Key/value pairs in file order; duplicate keys are an error.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::config(format!("line {}", lineno + 1), "empty key"));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::config(k, "duplicate key"));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse<V: FromStr>(key: &str, v: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    v.parse::<V>().map_err(|e| Error::config(key, format!("cannot parse `{v}`: {e}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{v}`"))),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Comma-separated numbers, or an inclusive range `start:step:stop`.
pub fn parse_values(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: f64 = parse(key, parts[0])?;
        let step: f64 = parse(key, parts[1])?;
        let stop: f64 = parse(key, parts[2])?;
        if !(step > 0.0) || stop < start {
            return Err(Error::config(key, "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // integer multiples keep values free of accumulated drift
        return Ok((0..=n).map(|i| round_sig(start + step * i as f64)).collect());
    }
    split_list(v).map(|s| parse::<f64>(key, s)).collect()
}

fn round_sig(x: f64) -> f64 {
    format!("{x:.12}").parse().unwrap_or(x)
}
