use hetnet_da::association::ClusterSpec;
use hetnet_da::bounds::{system_se_ca, system_se_da};
use hetnet_da::experiment::{
    figure_table, parse_sweep_spec, read_figure_csv, render_config, run_sweep, validate_config, RunOptions, SweepVar,
};
use hetnet_da::{Error, NetworkConfig};
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = NetworkConfig> {
    (
        (1e-9f64..1e-5, 1e-9f64..1e-5, 1e-8f64..1e-3, 1e-3f64..100.0, 1e-3f64..10.0, 1e-3f64..1.0),
        (1e-15f64..1e-9, 2.01f64..6.0, 1e2f64..1e4, 1.0f64..99.0, 1usize..512, 1usize..256),
    )
        .prop_map(|((lm, ls, lu, pm, ps, q), (s2, alpha, big_r, r_p, l_m, l_s))| NetworkConfig {
            lambda_m: lm,
            lambda_s: ls,
            lambda_u: lu,
            p_m: pm,
            p_s: ps,
            q,
            sigma2: s2,
            alpha,
            big_r,
            r_p,
            l_m,
            l_s,
        })
}

#[test]
fn csv_rows_rederive_their_analytic_values() {
    let opts = RunOptions {
        trials: 8,
        seed: 3,
        ..RunOptions::default()
    };
    let table = figure_table(4, &NetworkConfig::default(), &opts).unwrap();
    let back = read_figure_csv(&table.to_csv().unwrap()).unwrap();
    assert_eq!(back.rows, table.rows);
    assert_eq!(back.metadata, table.metadata);
    for row in &back.rows {
        let cl = ClusterSpec::from_config(&row.config);
        assert_eq!(row.analytic_da, Some(system_se_da(&row.config, &cl).unwrap().se));
        assert_eq!(row.analytic_ca, Some(system_se_ca(&row.config, &cl).unwrap().se));
        assert!((row.config.lambda_s / row.config.lambda_m - row.x).abs() < 1e-12);
        assert_eq!(row.n_trials, Some(8));
    }
}

#[test]
fn sweep_writes_named_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_sweep_spec(&format!(
        "sweep_var = \"antenna_budget\"\nvalues = [25, 50]\nbudget = 200\ntrials = 4\nname = \"split\"\nout_dir = {:?}\n",
        dir.path().display().to_string()
    ))
    .unwrap();
    assert!(matches!(spec.sweep_var, SweepVar::AntennaBudget { antennas, .. } if antennas == 200.0));
    let (path, table) = run_sweep(&spec, &RunOptions::default()).unwrap();
    assert_eq!(path, dir.path().join("split_nats.csv"));
    let back = read_figure_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.rows, table.rows);
    for row in &back.rows {
        let sbs_antennas = row.config.l_s as f64 * row.config.lambda_s / row.config.lambda_m;
        assert!((sbs_antennas - 200.0).abs() < 1e-9);
    }
}

#[test]
fn config_errors_are_aggregated() {
    match validate_config("alpha = 1.0\nbogus = 3\nl_m = 2.5\nr_p = \"x\"\n") {
        Err(Error::Config(v)) => assert_eq!(v.len(), 4, "{v:?}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(validate_config("p_m = = 4"), Err(Error::Parse(_))));
}

#[test]
fn sweep_spec_errors_are_aggregated() {
    match parse_sweep_spec("sweep_var = \"nope\"\nvalues = []\ntrials = 0\n") {
        Err(Error::Config(v)) => assert!(v.len() >= 2, "{v:?}"),
        other => panic!("{other:?}"),
    }
    assert!(parse_sweep_spec("sweep_var = \"l_s\"\nvalues = [10, 12.5]\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rendered_config_reads_back_exactly(cfg in config_strategy()) {
        prop_assert_eq!(validate_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn parsers_never_panic(raw in "\\PC{0,200}") {
        let _ = validate_config(&raw);
        let _ = parse_sweep_spec(&raw);
        let _ = read_figure_csv(&raw);
    }

    #[test]
    fn parsers_survive_near_miss_documents(
        key in prop::sample::select(vec!["alpha", "l_m", "values", "sweep_var", "r_p", "trials", "budget"]),
        value in prop::sample::select(vec!["-1", "0", "1e400", "nan", "inf", "[1, 2]", "\"p_m\"", "3.5", "{}", "true"]),
    ) {
        let raw = format!("{key} = {value}\n");
        let _ = validate_config(&raw);
        let _ = parse_sweep_spec(&format!("sweep_var = \"p_m\"\nvalues = [1]\n{raw}"));
    }
}

fn corpus(target: &str) -> Vec<String> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    assert!(!files.is_empty());
    files.iter().map(|p| std::fs::read_to_string(p).unwrap()).collect()
}

#[test]
fn fuzz_seeds_hold_the_target_invariants() {
    for text in corpus("parse_config") {
        if let Ok(cfg) = validate_config(&text) {
            assert_eq!(validate_config(&render_config(&cfg)).unwrap(), cfg);
        }
    }
    let mut parsed = 0;
    for text in corpus("parse_sweep_spec") {
        if let Ok(spec) = parse_sweep_spec(&text) {
            assert!(spec.values.windows(2).all(|w| w[0] < w[1]));
            parsed += 1;
        }
    }
    assert_eq!(parsed, 2);
    let mut read = 0;
    for text in corpus("read_figure_csv") {
        if let Ok(table) = read_figure_csv(&text) {
            assert_eq!(read_figure_csv(&table.to_csv().unwrap()).unwrap(), table);
            read += 1;
        }
    }
    assert_eq!(read, 2);
}
