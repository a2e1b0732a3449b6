//! Sweep specifications: which parameter moves, over which values, on top of
//! which base configuration.

use std::fmt;
use std::path::PathBuf;

use toml::{Table, Value};

use super::document::{config_from_table, number};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Default total SBS transmit power in a macro cell for budget sweeps (W).
pub const DEFAULT_POWER_BUDGET: f64 = 0.2;

/// The quantity a sweep moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepVar {
    PM,
    RP,
    /// `lambda_s / lambda_m`.
    LambdaSRatio,
    /// `lambda_u / lambda_m`.
    LambdaURatio,
    LM,
    LS,
    /// Sweeps `l_s` with `antennas` SBS antennas and `power` W of SBS power
    /// per macro cell: `lambda_s = lambda_m antennas / l_s` and
    /// `p_s = power l_s / antennas`.
    AntennaBudget { antennas: f64, power: f64 },
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::PM => "p_m",
            SweepVar::RP => "r_p",
            SweepVar::LambdaSRatio => "lambda_s_ratio",
            SweepVar::LambdaURatio => "lambda_u_ratio",
            SweepVar::LM => "l_m",
            SweepVar::LS => "l_s",
            SweepVar::AntennaBudget { .. } => "antenna_budget",
        }
    }

    fn integer_valued(&self) -> bool {
        matches!(self, SweepVar::LM | SweepVar::LS | SweepVar::AntennaBudget { .. })
    }

    /// `base` with this variable set to `value`. The result is not
    /// range-checked.
    pub fn apply(&self, base: &NetworkConfig, value: f64) -> Result<NetworkConfig> {
        let mut cfg = *base;
        match *self {
            SweepVar::PM => cfg.p_m = value,
            SweepVar::RP => cfg.r_p = value,
            SweepVar::LambdaSRatio => cfg.lambda_s = value * cfg.lambda_m,
            SweepVar::LambdaURatio => cfg.lambda_u = value * cfg.lambda_m,
            SweepVar::LM => cfg.set_field("l_m", value)?,
            SweepVar::LS => cfg.set_field("l_s", value)?,
            SweepVar::AntennaBudget { antennas, power } => {
                cfg.set_field("l_s", value)?;
                let sbs_per_cell = antennas / value;
                cfg.lambda_s = cfg.lambda_m * sbs_per_cell;
                cfg.p_s = power / sbs_per_cell;
            }
        }
        Ok(cfg)
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepVar::AntennaBudget { antennas, power } => {
                write!(f, "antenna_budget(antennas={antennas}, power={power})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// A one-dimensional sweep read from a spec document.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: NetworkConfig,
    pub sweep_var: SweepVar,
    pub values: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Output file stem.
    pub name: String,
}

const KEYS: [&str; 9] = [
    "sweep_var", "values", "trials", "seed", "out_dir", "name", "budget", "power_budget", "base",
];

/// Parse a sweep spec document.
///
/// ```toml
/// sweep_var = "l_s"
/// values = [20, 40, 60]
/// trials = 500
/// seed = 7
/// out_dir = "results"
///
/// [base]
/// p_m = 20
/// ```
///
/// `antenna_budget` sweeps also take `budget` (total SBS antennas per macro
/// cell) and optionally `power_budget`.
pub fn parse_sweep_spec(raw: &str) -> Result<SweepSpec> {
    let table: Table = raw.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
    let mut errs = Vec::new();
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            errs.push(format!("unknown key `{key}`"));
        }
    }

    let base = match table.get("base") {
        None => NetworkConfig::default(),
        Some(Value::Table(t)) => match config_from_table(t, NetworkConfig::default()) {
            Ok(c) => c,
            Err(Error::Config(v)) => {
                errs.extend(v.into_iter().map(|m| format!("base.{m}")));
                NetworkConfig::default()
            }
            Err(e) => return Err(e),
        },
        Some(_) => {
            errs.push("base must be a table".into());
            NetworkConfig::default()
        }
    };

    let budget = optional_positive(&table, "budget", &mut errs);
    let power = optional_positive(&table, "power_budget", &mut errs).unwrap_or(DEFAULT_POWER_BUDGET);
    let sweep_var = match table.get("sweep_var").map(|v| v.as_str()) {
        None => {
            errs.push("sweep_var is required".into());
            None
        }
        Some(None) => {
            errs.push("sweep_var must be a string".into());
            None
        }
        Some(Some(s)) => match s {
            "p_m" => Some(SweepVar::PM),
            "r_p" => Some(SweepVar::RP),
            "lambda_s_ratio" => Some(SweepVar::LambdaSRatio),
            "lambda_u_ratio" => Some(SweepVar::LambdaURatio),
            "l_m" => Some(SweepVar::LM),
            "l_s" => Some(SweepVar::LS),
            "antenna_budget" => match budget {
                Some(antennas) => Some(SweepVar::AntennaBudget { antennas, power }),
                None => {
                    errs.push("antenna_budget sweeps need `budget`".into());
                    None
                }
            },
            other => {
                errs.push(format!("unknown sweep_var `{other}`"));
                None
            }
        },
    };
    if budget.is_some() && !matches!(sweep_var, Some(SweepVar::AntennaBudget { .. }) | None) {
        errs.push("`budget` only applies to antenna_budget sweeps".into());
    }

    let values = match table.get("values") {
        Some(Value::Array(items)) => {
            let vals: Vec<f64> = items.iter().filter_map(number).collect();
            if vals.len() != items.len() {
                errs.push("values must all be numbers".into());
            }
            vals
        }
        Some(_) => {
            errs.push("values must be an array".into());
            Vec::new()
        }
        None => {
            errs.push("values is required".into());
            Vec::new()
        }
    };
    if values.is_empty() && table.get("values").is_some_and(|v| v.is_array()) {
        errs.push("values must not be empty".into());
    }
    if values.iter().any(|v| !v.is_finite()) {
        errs.push("values must be finite".into());
    } else if values.windows(2).any(|w| w[1] <= w[0]) {
        errs.push("values must be strictly increasing".into());
    }
    if let Some(var) = sweep_var {
        if var.integer_valued() && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            errs.push(format!("{} values must be positive integers", var.name()));
        }
    }

    let trials = match table.get("trials") {
        None => 1000,
        Some(Value::Integer(n)) if *n >= 1 => *n as usize,
        Some(_) => {
            errs.push("trials must be a positive integer".into());
            0
        }
    };
    let seed = match table.get("seed") {
        None => 1,
        Some(Value::Integer(n)) if *n >= 0 => *n as u64,
        Some(_) => {
            errs.push("seed must be a non-negative integer".into());
            0
        }
    };
    let out_dir = match table.get("out_dir") {
        None => PathBuf::from("."),
        Some(Value::String(s)) if !s.is_empty() => PathBuf::from(s),
        Some(_) => {
            errs.push("out_dir must be a non-empty string".into());
            PathBuf::new()
        }
    };
    let name = match table.get("name") {
        None => "sweep".to_string(),
        Some(Value::String(s)) if valid_stem(s) => s.clone(),
        Some(_) => {
            errs.push("name must be a non-empty string of letters, digits, '-' or '_'".into());
            String::new()
        }
    };

    match sweep_var {
        Some(sweep_var) if errs.is_empty() => Ok(SweepSpec {
            base,
            sweep_var,
            values,
            trials,
            seed,
            out_dir,
            name,
        }),
        _ => Err(Error::Config(errs)),
    }
}

fn optional_positive(table: &Table, key: &str, errs: &mut Vec<String>) -> Option<f64> {
    let v = table.get(key)?;
    match number(v) {
        Some(x) if x.is_finite() && x > 0.0 => Some(x),
        _ => {
            errs.push(format!("{key} must be a positive number"));
            None
        }
    }
}

fn valid_stem(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}
