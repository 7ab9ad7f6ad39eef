//! Parameter sweeps producing one CSV row per (axis value, scheme).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::montecarlo::{average_rate, RateSummary, SchemeRun};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Training fraction τ/T; τ is rounded to the nearest integer.
    TauOverT,
    M,
    SnrDb,
    Epsilon,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::TauOverT => "tau_over_T",
            SweepAxis::M => "M",
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Epsilon => "epsilon",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &SystemConfig<f64>, value: f64) -> Result<SystemConfig<f64>> {
        let bad = |msg: String| Error::param(format!("{} = {value}: {msg}", self.name()));
        if !value.is_finite() {
            return Err(bad("not a finite number".into()));
        }
        let mut cfg = base.clone();
        match self {
            SweepAxis::TauOverT => {
                let tau = (value * base.coherence as f64).round();
                if tau < 1.0 {
                    return Err(bad("gives fewer than one pilot symbol".into()));
                }
                cfg.tau = tau as usize;
            }
            SweepAxis::M => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(bad("M must be a positive integer".into()));
                }
                cfg.m = value as usize;
            }
            SweepAxis::SnrDb => cfg = cfg.with_snr_db(value),
            SweepAxis::Epsilon => cfg.epsilon = value,
        }
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "tau_over_T" | "tau_over_t" => Ok(SweepAxis::TauOverT),
            "M" | "m" => Ok(SweepAxis::M),
            "snr_db" => Ok(SweepAxis::SnrDb),
            "epsilon" => Ok(SweepAxis::Epsilon),
            _ => Err(format!("unknown axis `{s}` (expected tau_over_T, M, snr_db or epsilon)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub runs: Vec<SchemeRun>,
    pub base: SystemConfig<f64>,
    pub n_trials: usize,
    /// Appended to the scheme name in the `scheme` column.
    pub label_suffix: String,
}

impl SweepSpec {
    pub fn from_run_config(rc: &RunConfig) -> Result<Self> {
        let axis = rc.axis.ok_or_else(|| Error::config("axis", "a sweep needs an axis"))?;
        Ok(Self {
            axis,
            values: rc.values.clone(),
            runs: rc.runs.clone(),
            base: rc.system.clone(),
            n_trials: rc.trials,
            label_suffix: String::new(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.values.is_empty() {
            return Err(Error::config("values", "at least one axis value is required"));
        }
        if self.values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("values", "axis values must be strictly increasing"));
        }
        if self.n_trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        for run in &self.runs {
            run.validate()?;
        }
        for &v in &self.values {
            self.axis.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheme: String,
    pub summary: RateSummary<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "axis,value,scheme,mean_rate,stderr,mean_n_used,n_trials,seed";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.axis,
            self.value,
            self.scheme,
            self.summary.mean_rate,
            self.summary.stderr,
            self.summary.mean_n_used,
            self.summary.n_trials,
            self.seed
        )
    }
}

/// Runs every (value, scheme) cell. `threads = None` uses the global pool.
pub fn run_sweep(spec: &SweepSpec, threads: Option<usize>) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    with_threads(threads, || {
        let mut rows = Vec::with_capacity(spec.values.len() * spec.runs.len());
        for &value in &spec.values {
            let cfg = spec.axis.apply(&spec.base, value)?;
            for &run in &spec.runs {
                let summary = average_rate(&cfg, run, spec.n_trials)?;
                rows.push(SweepRow {
                    axis: spec.axis,
                    value,
                    scheme: format!("{}{}", run.scheme, spec.label_suffix),
                    summary,
                    seed: cfg.master_seed,
                });
            }
        }
        Ok(rows)
    })?
}

/// Runs `f` on a dedicated pool of `threads` workers, or the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::config("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn write_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Rate against training fraction at 0 and 10 dB.
    Fig2,
    /// Rate against antenna count at 5 dB.
    Fig3,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig2" => Ok(Preset::Fig2),
            "fig3" => Ok(Preset::Fig3),
            _ => Err(format!("unknown preset `{s}` (expected fig2 or fig3)")),
        }
    }
}

impl Preset {
    pub const DEFAULT_TRIALS: usize = 50_000;

    /// Sweeps that make up the preset, built on `rc` (its axis and values are
    /// replaced; schemes, jammers and system parameters are kept).
    pub fn specs(self, rc: &RunConfig) -> Vec<SweepSpec> {
        let spec = |axis, values: Vec<f64>, base: SystemConfig<f64>, suffix: String| SweepSpec {
            axis,
            values,
            runs: rc.runs.clone(),
            base,
            n_trials: rc.trials,
            label_suffix: suffix,
        };
        match self {
            Preset::Fig2 => {
                let fractions: Vec<f64> = (1..=24).map(|i| f64::from(i) / 50.0).collect();
                [0.0, 10.0]
                    .iter()
                    .map(|&db| {
                        let base = rc.system.clone().with_snr_db(db);
                        spec(SweepAxis::TauOverT, fractions.clone(), base, format!("@snr_db={db}"))
                    })
                    .collect()
            }
            Preset::Fig3 => {
                let mut ms = vec![10.0, 20.0];
                ms.extend((1..=10).map(|i| f64::from(i) * 50.0));
                let base = SystemConfig { tau: 20, ..rc.system.clone() }.with_snr_db(5.0);
                vec![spec(SweepAxis::M, ms, base, String::new())]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{JammerScenario, Scheme};

    fn small_spec() -> SweepSpec {
        SweepSpec {
            axis: SweepAxis::M,
            values: vec![4.0, 8.0],
            runs: vec![SchemeRun::new(Scheme::Conventional, JammerScenario::RandomGaussian)],
            base: SystemConfig { tau: 4, coherence: 40, ..Default::default() },
            n_trials: 50,
            label_suffix: String::new(),
        }
    }

    #[test]
    fn axis_application() {
        let base = SystemConfig::<f64>::default();
        assert_eq!(SweepAxis::TauOverT.apply(&base, 0.1).unwrap().tau, 20);
        assert_eq!(SweepAxis::M.apply(&base, 64.0).unwrap().m, 64);
        assert!(SweepAxis::M.apply(&base, 6.5).is_err());
        let err = SweepAxis::TauOverT.apply(&base, 0.5).unwrap_err();
        assert!(err.to_string().contains("tau_over_T = 0.5"), "{err}");
    }

    #[test]
    fn rejects_empty_or_unsorted() {
        let mut s = small_spec();
        s.runs.clear();
        assert!(run_sweep(&s, None).is_err());
        let mut s = small_spec();
        s.values = vec![8.0, 4.0];
        assert!(run_sweep(&s, None).is_err());
    }

    #[test]
    fn csv_shape() {
        let rows = run_sweep(&small_spec(), Some(1)).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("M,4,conventional,"));
        assert!(lines[1].ends_with(",50,24301"));
    }

    #[test]
    fn presets_are_valid() {
        let rc = RunConfig::default();
        for p in [Preset::Fig2, Preset::Fig3] {
            for s in p.specs(&rc) {
                s.validate().unwrap();
            }
        }
    }
}
