use std::path::Path;
use std::process::{Command, Output};

fn antijam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_antijam")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn assert_no_panic(o: &Output) {
    assert!(!stderr(o).contains("panicked"), "{}", stderr(o));
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let o = antijam(&["verify-appendix", "--config", "/definitely/not/here.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.cfg"));
}

#[test]
fn zero_tolerance_always_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.cfg", "tolerance = 0\nsinr_tolerance = 0\n");
    let o = antijam(&["verify-appendix", "--config", &cfg, "--trials", "500"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("overlap,quantity,empirical,closed_form"));
}

#[test]
fn default_moment_check_passes() {
    let o = antijam(&["verify-appendix"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = stdout(&o).lines().count();
    assert_eq!(rows, 1 + 3 * 4);
}

#[test]
fn malformed_configs_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (body, key) in [
        ("M = 4\nwhatever = 1\n", "whatever"),
        ("tau = -3\n", "tau"),
        ("epsilon = lots\n", "epsilon"),
        ("threshold_on = cubed\n", "threshold_on"),
        ("schemes = alg1, alg7\n", "schemes"),
        ("jammer_alg2 = random_gaussian\n", "jammer_alg2"),
        ("n_max = 0\n", "n_max"),
        ("tau = 150\n", "tau"),
        ("axis = M\nvalues = 30, 20\n", "values"),
        ("axis = M\nvalues = 1:0:5\n", "values"),
        ("values = 10\n", "axis"),
        ("schemes =\n", "schemes"),
    ] {
        let cfg = write_config(dir.path(), "bad.cfg", body);
        let o = antijam(&["sweep", "--config", &cfg, "--trials", "10"]);
        assert_eq!(o.status.code(), Some(2), "{body:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "{body:?} should mention {key}: {}", stderr(&o));
        assert_no_panic(&o);
    }
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        vec!["simulate", "--trials", "0"],
        vec!["simulate", "--threads", "0"],
        vec!["simulate", "--seed", "minus-one"],
        vec!["preset", "fig4"],
        vec!["launch"],
    ] {
        let o = antijam(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_no_panic(&o);
    }
}

#[test]
fn unwritable_output_is_reported() {
    let o = antijam(&["simulate", "--trials", "5", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent-dir/x.csv"));
}

#[test]
fn sweep_csv_shape_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.cfg", "axis = M\nvalues = 10:10:30\ntau = 8\nseed = 99\n");
    let out = dir.path().join("s.csv");
    let o = antijam(&["sweep", "--config", &cfg, "--trials", "300", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "axis,value,scheme,mean_rate,stderr,mean_n_used,n_trials,seed");
    assert_eq!(lines.len(), 1 + 3 * 3);

    // the M = 20 row re-run on its own gives the same mean rate, digit for digit
    let row: Vec<&str> = lines.iter().find(|l| l.starts_with("M,20,alg2,")).unwrap().split(',').collect();
    let single = write_config(dir.path(), "one.cfg", "M = 20\ntau = 8\nseed = 99\nschemes = alg2\n");
    let o = antijam(&["simulate", "--config", &single, "--trials", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sim = stdout(&o);
    let fields: Vec<&str> = sim.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[2], row[3]);
    assert_eq!(fields[6], row[7]);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.cfg", "axis = tau_over_T\nvalues = 0.04, 0.1\n");
    let run = |threads: &str| {
        let o = antijam(&["sweep", "--config", &cfg, "--trials", "400", "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("2"));
    assert_eq!(one, run("5"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "seed = 1\nschemes = conventional\n");
    let a = stdout(&antijam(&["simulate", "--config", &cfg, "--trials", "200"]));
    let b = stdout(&antijam(&["simulate", "--config", &cfg, "--trials", "200", "--seed", "2"]));
    assert!(a.contains(",1\n") && b.contains(",2\n"));
    assert_ne!(a.lines().nth(1).unwrap().split(',').nth(2), b.lines().nth(1).unwrap().split(',').nth(2));
}

#[test]
fn presets_emit_every_row() {
    let o = antijam(&["preset", "fig2", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 3 * 24 * 2);
    assert!(text.contains("tau_over_T,0.48,alg2@snr_db=10,"));
    assert!(text.contains("tau_over_T,0.02,conventional@snr_db=0,"));

    let o = antijam(&["preset", "fig3", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1 + 3 * 12);
    assert!(text.contains("M,500,alg1,"));
}
