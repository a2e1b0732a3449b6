//! Figure definitions and the sweep runner.

use std::f64::consts::LN_2;
use std::path::{Path, PathBuf};

use super::sweep::{SweepSpec, SweepVar, DEFAULT_POWER_BUDGET};
use super::table::{FigureRow, FigureTable};
use crate::association::{ca_fixed_point, da_probabilities, AssociationRule, ClusterSpec};
use crate::bounds::{system_se_ca, system_se_da};
use crate::config::{NetworkConfig, FIELD_NAMES};
use crate::error::{invalid, Result};
use crate::sim::{association_frequency, run_trials, TrialOptions, Z95};

/// Figures the runner knows.
pub const FIGURES: [u32; 8] = [2, 3, 4, 5, 6, 7, 8, 9];

/// What the y-axis of a figure shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Probability that a user of the tagged macro cell is served by an MBS.
    MacroAssociation,
    /// Per-user uplink spectral efficiency of the tagged macro cell.
    SpectralEfficiency,
}

/// One curve: a base configuration and a swept variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub base: NetworkConfig,
    pub var: SweepVar,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigurePlan {
    pub id: u32,
    pub quantity: Quantity,
    pub series: Vec<Series>,
}

const POWERS: [f64; 7] = [0.1, 1.0, 5.0, 10.0, 20.0, 30.0, 40.0];

/// Sweep definition of figure `id` over `base`.
pub fn figure_plan(id: u32, base: &NetworkConfig) -> Result<FigurePlan> {
    let one = |var: SweepVar, values: &[f64]| {
        vec![Series {
            label: String::new(),
            base: *base,
            var,
            values: values.to_vec(),
        }]
    };
    let (quantity, series) = match id {
        2 => (
            Quantity::MacroAssociation,
            [2.0, 5.0, 10.0]
                .iter()
                .map(|&ratio| Series {
                    label: format!("lambda_s_ratio={ratio}"),
                    base: NetworkConfig {
                        lambda_s: ratio * base.lambda_m,
                        ..*base
                    },
                    var: SweepVar::PM,
                    values: POWERS.to_vec(),
                })
                .collect(),
        ),
        3 => (Quantity::SpectralEfficiency, one(SweepVar::RP, &[10.0, 20.0, 30.0, 40.0, 50.0])),
        4 => (
            Quantity::SpectralEfficiency,
            one(SweepVar::LambdaSRatio, &[1.0, 2.0, 4.0, 6.0, 8.0, 10.0]),
        ),
        5 => (
            Quantity::SpectralEfficiency,
            one(SweepVar::LambdaURatio, &[5.0, 10.0, 15.0, 20.0, 25.0, 30.0]),
        ),
        6 => (Quantity::SpectralEfficiency, one(SweepVar::LM, &[50.0, 75.0, 100.0, 125.0, 150.0])),
        7 => (Quantity::SpectralEfficiency, one(SweepVar::LS, &[20.0, 40.0, 60.0, 80.0, 100.0])),
        8 => (
            Quantity::SpectralEfficiency,
            [150.0, 200.0, 300.0]
                .iter()
                .map(|&antennas| Series {
                    label: format!("budget={antennas}"),
                    base: *base,
                    var: SweepVar::AntennaBudget {
                        antennas,
                        power: DEFAULT_POWER_BUDGET,
                    },
                    values: vec![10.0, 15.0, 25.0, 50.0, 75.0],
                })
                .collect(),
        ),
        9 => (Quantity::SpectralEfficiency, one(SweepVar::PM, &POWERS)),
        other => return Err(invalid("figure", format!("no figure {other}; known: 2..=9"))),
    };
    Ok(FigurePlan { id, quantity, series })
}

/// Monte Carlo and output settings shared by every point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Paired trials per point, or sampled users per point for association
    /// figures.
    pub trials: usize,
    pub seed: u64,
    pub jobs: usize,
    /// Report spectral efficiency in bits instead of nats.
    pub bits: bool,
    pub out_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trials: 2000,
            seed: 1,
            jobs: 0,
            bits: false,
            out_dir: PathBuf::from("."),
        }
    }
}

impl RunOptions {
    fn unit(&self, q: Quantity) -> &'static str {
        match q {
            Quantity::MacroAssociation => "prob",
            Quantity::SpectralEfficiency if self.bits => "bits",
            Quantity::SpectralEfficiency => "nats",
        }
    }

    fn trial_options(&self) -> TrialOptions {
        TrialOptions {
            trials: self.trials,
            master_seed: self.seed,
            jobs: self.jobs,
        }
    }
}

/// Mean, 95% half-width and standard error.
type Mc = [Option<f64>; 3];

fn mc_triple(mean: f64, se: f64) -> Mc {
    [Some(mean), Some(Z95 * se), Some(se)]
}

fn set_mc(row: &mut FigureRow, da: Mc, ca: Mc) {
    [row.mc_da, row.mc_da_ci, row.mc_da_se] = da;
    [row.mc_ca, row.mc_ca_ci, row.mc_ca_se] = ca;
    row.ratio_mc = row.mc_da.zip(row.mc_ca).map(|(d, c)| d / c);
    row.ratio_analytic = row.analytic_da.zip(row.analytic_ca).map(|(d, c)| d / c);
}

/// Association probabilities at one point: analytic DA and CA, and their
/// Monte Carlo frequencies over `opts.trials` typical users. Failures are
/// recorded in the row.
pub fn association_point(cfg: &NetworkConfig, opts: &RunOptions, row: &mut FigureRow) {
    if let Err(e) = cfg.validate() {
        row.record_error("config", &e);
        return;
    }
    let cluster = ClusterSpec::from_config(cfg);
    row.analytic_da = Some(da_probabilities(cfg).0);
    match ca_fixed_point(cfg, &cluster) {
        Ok(p) => {
            let m = cluster.tagged_m;
            let ks = cluster.tagged_row();
            let total: usize = ks.iter().sum();
            let a = &p.a_m_ca[m];
            row.analytic_ca = Some(if total == 0 {
                a.iter().sum::<f64>() / a.len() as f64
            } else {
                ks.iter().zip(a).map(|(&k, a)| k as f64 * a).sum::<f64>() / total as f64
            });
            row.ca_threshold = Some(p.tagged_threshold(&cluster));
        }
        Err(e) => row.record_error("ca fixed point", &e),
    }
    let mut da = [None; 3];
    let mut ca = [None; 3];
    match association_frequency(cfg, AssociationRule::Decoupled, opts.trials, opts.seed, opts.jobs) {
        Ok(est) => da = mc_triple(est.mean, est.std_error),
        Err(e) => row.record_error("mc da", &e),
    }
    if let Some(c) = row.ca_threshold {
        match association_frequency(cfg, AssociationRule::Coupled { c }, opts.trials, opts.seed, opts.jobs) {
            Ok(est) => ca = mc_triple(est.mean, est.std_error),
            Err(e) => row.record_error("mc ca", &e),
        }
    }
    set_mc(row, da, ca);
    row.n_trials = Some(opts.trials);
}

/// Spectral efficiency at one point: system lower bounds for DA and CA and
/// paired Monte Carlo estimates. Failures are recorded in the row.
pub fn spectral_efficiency_point(cfg: &NetworkConfig, opts: &RunOptions, row: &mut FigureRow) {
    if let Err(e) = cfg.validate() {
        row.record_error("config", &e);
        return;
    }
    let scale = if opts.bits { 1.0 / LN_2 } else { 1.0 };
    let cluster = ClusterSpec::from_config(cfg);
    match system_se_da(cfg, &cluster) {
        Ok(b) => row.analytic_da = Some(b.se * scale),
        Err(e) => row.record_error("bound da", &e),
    }
    match system_se_ca(cfg, &cluster) {
        Ok(b) => row.analytic_ca = Some(b.se * scale),
        Err(e) => row.record_error("bound ca", &e),
    }
    let (mut da, mut ca) = ([None; 3], [None; 3]);
    match run_trials(cfg, &cluster, &opts.trial_options()) {
        Ok(r) => {
            da = mc_triple(r.da.mean * scale, r.da.std_error * scale);
            ca = mc_triple(r.ca.mean * scale, r.ca.std_error * scale);
            row.diff_mc = Some(r.diff.mean * scale);
            row.diff_mc_ci = Some(r.diff.ci_halfwidth * scale);
            row.rejection_da = Some(r.da.rejection_rate());
            row.rejection_ca = Some(r.ca.rejection_rate());
            row.ca_threshold = Some(r.ca_threshold);
        }
        Err(e) => row.record_error("mc", &e),
    }
    set_mc(row, da, ca);
    row.n_trials = Some(opts.trials);
}

/// Evaluate every point of `plan`, in series then value order.
pub fn evaluate_plan(plan: &FigurePlan, opts: &RunOptions) -> Result<Vec<FigureRow>> {
    if opts.trials < 2 {
        return Err(invalid("trials", "need at least two"));
    }
    let mut rows = Vec::new();
    for series in &plan.series {
        for &x in &series.values {
            let cfg = series.var.apply(&series.base, x);
            let mut row = FigureRow::new(series.label.clone(), x, cfg.as_ref().copied().unwrap_or(series.base));
            match cfg {
                Err(e) => row.record_error("sweep", &e),
                Ok(cfg) => match plan.quantity {
                    Quantity::MacroAssociation => association_point(&cfg, opts, &mut row),
                    Quantity::SpectralEfficiency => spectral_efficiency_point(&cfg, opts, &mut row),
                },
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

fn metadata(
    figure: &str,
    plan: &FigurePlan,
    base: &NetworkConfig,
    opts: &RunOptions,
    rows: &[FigureRow],
) -> Vec<(String, String)> {
    let quantity = match plan.quantity {
        Quantity::MacroAssociation => "macro_association_probability",
        Quantity::SpectralEfficiency => "uplink_spectral_efficiency",
    };
    let unit = match plan.quantity {
        Quantity::MacroAssociation => "1",
        Quantity::SpectralEfficiency if opts.bits => "bit/s/Hz",
        Quantity::SpectralEfficiency => "nat/s/Hz",
    };
    let worst = rows
        .iter()
        .flat_map(|r| [r.rejection_da, r.rejection_ca])
        .flatten()
        .fold(0.0f64, f64::max);
    let mut m: Vec<(String, String)> = vec![
        ("figure".into(), figure.into()),
        ("quantity".into(), quantity.into()),
        ("unit".into(), unit.into()),
        ("sweep_var".into(), plan.series.first().map(|s| s.var.to_string()).unwrap_or_default()),
        ("trials".into(), opts.trials.to_string()),
        ("seed".into(), opts.seed.to_string()),
        ("version".into(), format!("v{}", env!("CARGO_PKG_VERSION"))),
        ("max_rejection_rate".into(), worst.to_string()),
        ("failed_points".into(), rows.iter().filter(|r| !r.error.is_empty()).count().to_string()),
    ];
    for (k, v) in base.echo() {
        m.push((format!("base.{k}"), v));
    }
    debug_assert_eq!(m.len(), 9 + FIELD_NAMES.len());
    m
}

/// Compute figure `id` on top of `base`.
pub fn figure_table(id: u32, base: &NetworkConfig, opts: &RunOptions) -> Result<FigureTable> {
    let plan = figure_plan(id, base)?;
    let rows = evaluate_plan(&plan, opts)?;
    Ok(FigureTable {
        metadata: metadata(&id.to_string(), &plan, base, opts, &rows),
        rows,
    })
}

/// Output path of figure `id`.
pub fn figure_path(id: u32, opts: &RunOptions) -> Result<PathBuf> {
    let plan = figure_plan(id, &NetworkConfig::default())?;
    Ok(opts.out_dir.join(format!("fig{id}_{}.csv", opts.unit(plan.quantity))))
}

/// Compute figure `id` and write `fig<id>_<unit>.csv` into `opts.out_dir`.
pub fn run_figure(id: u32, base: &NetworkConfig, opts: &RunOptions) -> Result<(PathBuf, FigureTable)> {
    let table = figure_table(id, base, opts)?;
    let path = figure_path(id, opts)?;
    table.write(&path)?;
    Ok((path, table))
}

/// Run a sweep spec and write `<name>_<unit>.csv` into its `out_dir`.
/// `opts` supplies the worker count and unit; trials, seed and directory come
/// from the spec.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<(PathBuf, FigureTable)> {
    let opts = RunOptions {
        trials: spec.trials,
        seed: spec.seed,
        out_dir: spec.out_dir.clone(),
        ..opts.clone()
    };
    let plan = FigurePlan {
        id: 0,
        quantity: Quantity::SpectralEfficiency,
        series: vec![Series {
            label: String::new(),
            base: spec.base,
            var: spec.sweep_var,
            values: spec.values.clone(),
        }],
    };
    let rows = evaluate_plan(&plan, &opts)?;
    let table = FigureTable {
        metadata: metadata(&spec.name, &plan, &spec.base, &opts, &rows),
        rows,
    };
    let path = output_path(&opts.out_dir, &spec.name, opts.unit(plan.quantity));
    table.write(&path)?;
    Ok((path, table))
}

fn output_path(dir: &Path, stem: &str, unit: &str) -> PathBuf {
    dir.join(format!("{stem}_{unit}.csv"))
}
