use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hetnet_da::experiment::read_figure_csv;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hetnet-da"));
    for var in ["HETNET_TRIALS", "HETNET_SEED", "HETNET_OUT", "HETNET_JOBS", "HETNET_BITS", "HETNET_CONFIG"] {
        c.env_remove(var);
    }
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn figure9(out: &Path, jobs: &str) -> String {
    let o = run(bin().args(["figure", "9", "--trials", "12", "--seed", "5", "--jobs", jobs, "--out"]).arg(out));
    assert!(o.status.success(), "{}", stderr(&o));
    fs::read_to_string(out.join("fig9_nats.csv")).unwrap()
}

#[test]
fn check_passes_at_defaults() {
    let o = run(bin().args(["check", "--trials", "4000"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn figure_output_is_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = figure9(&dir.path().join("a"), "1");
    let b = figure9(&dir.path().join("b"), "1");
    let c = figure9(&dir.path().join("c"), "2");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let table = read_figure_csv(&a).unwrap();
    assert_eq!(table.meta("figure"), Some("9"));
    assert_eq!(table.meta("trials"), Some("12"));
    assert_eq!(table.rows.len(), 7);
    let da: Vec<f64> = table.rows.iter().map(|r| r.analytic_da.unwrap()).collect();
    assert!(da.windows(2).all(|w| w[0] == w[1]), "{da:?}");
}

#[test]
fn bits_flag_rescales_and_renames() {
    let dir = tempfile::tempdir().unwrap();
    let nats = read_figure_csv(&figure9(dir.path(), "1")).unwrap();
    let o = run(bin()
        .args(["figure", "9", "--trials", "12", "--seed", "5", "--bits", "--out"])
        .arg(dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let bits = read_figure_csv(&fs::read_to_string(dir.path().join("fig9_bits.csv")).unwrap()).unwrap();
    assert_eq!(bits.meta("unit"), Some("bit/s/Hz"));
    for (n, b) in nats.rows.iter().zip(&bits.rows) {
        let (n, b) = (n.mc_ca.unwrap(), b.mc_ca.unwrap());
        assert!((b * std::f64::consts::LN_2 - n).abs() < 1e-12 * n);
    }
}

#[test]
fn environment_overrides_flags_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["figure", "2"])
        .env("HETNET_TRIALS", "30")
        .env("HETNET_SEED", "9")
        .env("HETNET_OUT", dir.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_figure_csv(&fs::read_to_string(dir.path().join("fig2_prob.csv")).unwrap()).unwrap();
    assert_eq!(t.meta("trials"), Some("30"));
    assert_eq!(t.meta("seed"), Some("9"));
    assert_eq!(t.rows.len(), 21);
}

#[test]
fn sweep_spec_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(
        &spec,
        format!(
            "sweep_var = \"l_m\"\nvalues = [60, 120]\ntrials = 10\nseed = 3\nname = \"antennas\"\nout_dir = {:?}\n[base]\nl_s = 40\n",
            dir.path().join("out").display().to_string()
        ),
    )
    .unwrap();
    let o = run(bin().args(["sweep", "--jobs", "1"]).arg(&spec));
    assert!(o.status.success(), "{}", stderr(&o));
    let t = read_figure_csv(&fs::read_to_string(dir.path().join("out/antennas_nats.csv")).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r.config.l_s == 40));
    assert_eq!(t.rows[1].config.l_m, 120);
}

#[test]
fn bad_inputs_fail_with_a_summary() {
    let o = run(bin().args(["figure", "11"]));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no figure 11"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "alpha = 1.5\np_m = -1\n").unwrap();
    let o = run(bin().args(["check", "--config"]).arg(&cfg));
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("alpha must exceed 2") && e.contains("p_m"), "{e}");

    let spec = dir.path().join("spec.toml");
    fs::write(&spec, "sweep_var = \"p_m\"\nvalues = [5, 1]\n").unwrap();
    let o = run(bin().arg("sweep").arg(&spec));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strictly increasing"));
}

#[test]
fn failed_points_give_nonzero_exit_but_keep_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(
        &spec,
        format!(
            "sweep_var = \"r_p\"\nvalues = [30, 5000]\ntrials = 8\nout_dir = {:?}\n",
            dir.path().display().to_string()
        ),
    )
    .unwrap();
    let o = run(bin().args(["sweep", "--jobs", "1"]).arg(&spec));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("r_p must be smaller than big_r"));
    let t = read_figure_csv(&fs::read_to_string(dir.path().join("sweep_nats.csv")).unwrap()).unwrap();
    assert!(t.rows[0].error.is_empty());
    assert!(!t.rows[1].error.is_empty());
    assert_eq!(t.meta("failed_points"), Some("1"));
}
