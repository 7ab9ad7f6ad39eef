//! Command-line front end: simulation, sweeps, named presets and the
//! effective-noise moment check.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use antijam::config::RunConfig;
use antijam::montecarlo::{average_rate, verify_appendix};
use antijam::sweep::{run_sweep, with_threads, write_csv, Preset, SweepRow, SweepSpec};
use antijam::{Error, MomentReport};

#[derive(Parser, Debug)]
#[command(name = "antijam", version, about = "Massive MIMO uplink jamming and pilot retransmission simulator")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials per point; overrides `trials` from the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average rate of each configured scheme at a single operating point.
    Simulate,
    /// Sweep one parameter (`axis`, `values` in the config).
    Sweep,
    /// Compare empirical effective-noise moments with their closed forms.
    VerifyAppendix,
    /// Run a named preset sweep (fig2 or fig3).
    Preset { name: String },
}

enum Failure {
    Usage(String),
    Tolerance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("antijam: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli, base: RunConfig) -> Result<RunConfig, Failure> {
    let mut rc = match &cli.config {
        Some(path) => RunConfig::load(path, base).map_err(|e| match e {
            Error::Io(io) => Failure::Usage(format!("cannot read config {}: {io}", path.display())),
            other => other.into(),
        })?,
        None => base,
    };
    if let Some(seed) = cli.seed {
        rc.system.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(Failure::Usage("--trials must be at least 1".into()));
        }
        rc.trials = trials;
    }
    Ok(rc)
}

fn open_out(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate => simulate(&cli),
        Command::Sweep => {
            let rc = load(&cli, RunConfig::default())?;
            let spec = SweepSpec::from_run_config(&rc)?;
            emit_rows(&cli, &run_sweep(&spec, cli.threads)?)
        }
        Command::Preset { name } => {
            let preset: Preset = name.parse().map_err(Failure::Usage)?;
            let rc = load(&cli, RunConfig { trials: Preset::DEFAULT_TRIALS, ..RunConfig::default() })?;
            let mut rows = Vec::new();
            for spec in preset.specs(&rc) {
                rows.extend(run_sweep(&spec, cli.threads)?);
            }
            emit_rows(&cli, &rows)
        }
        Command::VerifyAppendix => verify(&cli),
    }
}

fn emit_rows(cli: &Cli, rows: &[SweepRow]) -> Result<(), Failure> {
    let out = open_out(cli.out.as_deref())?;
    write_csv(out, rows)?;
    Ok(())
}

fn simulate(cli: &Cli) -> Result<(), Failure> {
    let rc = load(cli, RunConfig::default())?;
    let summaries = with_threads(cli.threads, || {
        rc.runs
            .iter()
            .map(|&run| average_rate(&rc.system, run, rc.trials).map(|s| (run, s)))
            .collect::<Result<Vec<_>, Error>>()
    })??;
    let mut out = open_out(cli.out.as_deref())?;
    let mut write = || -> io::Result<()> {
        writeln!(out, "scheme,jammer,mean_rate,stderr,mean_n_used,n_trials,seed")?;
        for (run, s) in &summaries {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                run.scheme, run.jammer, s.mean_rate, s.stderr, s.mean_n_used, s.n_trials, rc.system.master_seed
            )?;
        }
        out.flush()
    };
    write().map_err(|e| Failure::Usage(format!("cannot write output: {e}")))?;
    for (run, s) in &summaries {
        let hist: Vec<String> = s.n_used_histogram.iter().enumerate().skip(1).map(|(n, c)| format!("N={n}: {c}")).collect();
        eprintln!("{} vs {}: {:.6} ± {:.6} bits/s/Hz ({})", run.scheme, run.jammer, s.mean_rate, s.stderr, hist.join(", "));
    }
    Ok(())
}

fn verify(cli: &Cli) -> Result<(), Failure> {
    let rc = load(cli, RunConfig::moment_check_defaults())?;
    if rc.overlaps.is_empty() {
        return Err(Failure::Usage("`overlaps`: at least one overlap is required".into()));
    }
    let reports = with_threads(cli.threads, || {
        rc.overlaps
            .iter()
            .map(|&ov| verify_appendix(&rc.system, ov, rc.trials).map(|r| (ov, r)))
            .collect::<Result<Vec<_>, Error>>()
    })??;

    let mut out = open_out(cli.out.as_deref())?;
    let mut all_ok = true;
    let mut write = || -> io::Result<()> {
        writeln!(out, "overlap,quantity,empirical,closed_form,rel_err,stderr,tolerance,pass")?;
        for (ov, r) in &reports {
            for (name, emp, th, err, se, tol) in rows_of(r, rc.tolerance, rc.sinr_tolerance) {
                let ok = err < tol;
                all_ok &= ok;
                let se = se.map(|v| v.to_string()).unwrap_or_default();
                writeln!(out, "{ov},{name},{emp},{th},{err},{se},{tol},{ok}")?;
            }
        }
        out.flush()
    };
    write().map_err(|e| Failure::Usage(format!("cannot write output: {e}")))?;

    for (ov, r) in &reports {
        eprintln!(
            "overlap {ov}: E1 {:.3e}  E2 {:.3e}  E3 {:.3e}  SINR {:.3e} (relative errors, {} trials; E|g|^4 ratio {:.4})",
            r.e1_rel_err(),
            r.e2_rel_err(),
            r.e3_rel_err(),
            r.sinr_rel_err(),
            r.trials,
            r.fourth_moment_ratio
        );
    }
    let ok = all_ok && reports.iter().all(|(_, r)| r.within(rc.tolerance, rc.sinr_tolerance));
    eprintln!("{}", if ok { "all moments within tolerance" } else { "moment check FAILED" });
    if ok {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

type Row = (&'static str, f64, f64, f64, Option<f64>, f64);

fn rows_of(r: &MomentReport<f64>, tol: f64, sinr_tol: f64) -> [Row; 4] {
    [
        ("E1", r.e1_emp, r.e1_th, r.e1_rel_err(), Some(r.e1_stderr), tol),
        ("E2", r.e2_emp, r.e2_th, r.e2_rel_err(), Some(r.e2_stderr), tol),
        ("E3", r.e3_emp, r.e3_th, r.e3_rel_err(), Some(r.e3_stderr), tol),
        ("SINR", r.sinr_emp, r.sinr_th, r.sinr_rel_err(), None, sinr_tol),
    ]
}
