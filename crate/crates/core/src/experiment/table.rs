//! CSV result tables: `#`-prefixed metadata lines, one header row, one row
//! per sweep point. Every row echoes the full configuration it was computed
//! from.

use std::fs;
use std::path::Path;

use crate::config::{NetworkConfig, FIELD_NAMES};
use crate::error::{Error, Result};

/// Columns before the configuration echo.
pub const RESULT_COLUMNS: [&str; 19] = [
    "series",
    "x",
    "analytic_da",
    "analytic_ca",
    "mc_da",
    "mc_da_ci",
    "mc_da_se",
    "mc_ca",
    "mc_ca_ci",
    "mc_ca_se",
    "ratio_analytic",
    "ratio_mc",
    "diff_mc",
    "diff_mc_ci",
    "rejection_da",
    "rejection_ca",
    "ca_threshold",
    "n_trials",
    "error",
];

/// One sweep point. Missing values (failed or not applicable) are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub series: String,
    pub x: f64,
    pub analytic_da: Option<f64>,
    pub analytic_ca: Option<f64>,
    pub mc_da: Option<f64>,
    pub mc_da_ci: Option<f64>,
    pub mc_da_se: Option<f64>,
    pub mc_ca: Option<f64>,
    pub mc_ca_ci: Option<f64>,
    pub mc_ca_se: Option<f64>,
    pub ratio_analytic: Option<f64>,
    pub ratio_mc: Option<f64>,
    pub diff_mc: Option<f64>,
    pub diff_mc_ci: Option<f64>,
    pub rejection_da: Option<f64>,
    pub rejection_ca: Option<f64>,
    pub ca_threshold: Option<f64>,
    pub n_trials: Option<usize>,
    /// Empty when every quantity was computed.
    pub error: String,
    pub config: NetworkConfig,
}

impl FigureRow {
    pub fn new(series: impl Into<String>, x: f64, config: NetworkConfig) -> Self {
        FigureRow {
            series: series.into(),
            x,
            analytic_da: None,
            analytic_ca: None,
            mc_da: None,
            mc_da_ci: None,
            mc_da_se: None,
            mc_ca: None,
            mc_ca_ci: None,
            mc_ca_se: None,
            ratio_analytic: None,
            ratio_mc: None,
            diff_mc: None,
            diff_mc_ci: None,
            rejection_da: None,
            rejection_ca: None,
            ca_threshold: None,
            n_trials: None,
            error: String::new(),
            config,
        }
    }

    /// Append a failure message, keeping earlier ones.
    pub fn record_error(&mut self, what: &str, e: &Error) {
        if !self.error.is_empty() {
            self.error.push_str("; ");
        }
        self.error.push_str(&format!("{what}: {e}"));
    }

    fn optionals(&self) -> [Option<f64>; 16] {
        [
            self.analytic_da,
            self.analytic_ca,
            self.mc_da,
            self.mc_da_ci,
            self.mc_da_se,
            self.mc_ca,
            self.mc_ca_ci,
            self.mc_ca_se,
            self.ratio_analytic,
            self.ratio_mc,
            self.diff_mc,
            self.diff_mc_ci,
            self.rejection_da,
            self.rejection_ca,
            self.ca_threshold,
            self.n_trials.map(|n| n as f64),
        ]
    }

    fn record(&self) -> Vec<String> {
        let mut out = vec![self.series.clone(), self.x.to_string()];
        out.extend(self.optionals().iter().take(15).map(|v| fmt_opt(*v)));
        out.push(self.n_trials.map(|n| n.to_string()).unwrap_or_default());
        out.push(self.error.clone());
        out.extend(self.config.echo().into_iter().map(|(_, v)| v));
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => String::new(),
    }
}

/// Metadata plus rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    /// `(key, value)` pairs written as `# key = value` lines, in order.
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<FigureRow>,
}

impl FigureTable {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            if k.contains(['\n', '=']) || v.contains('\n') {
                return Err(Error::Parse(format!("metadata entry `{k}` cannot be written on one line")));
            }
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let header: Vec<&str> = RESULT_COLUMNS.iter().chain(FIELD_NAMES.iter()).copied().collect();
        w.write_record(&header)?;
        for row in &self.rows {
            w.write_record(row.record())?;
        }
        let body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Parse a table written by [`FigureTable::to_csv`].
pub fn read_figure_csv(text: &str) -> Result<FigureTable> {
    let mut metadata = Vec::new();
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        let Some(rest) = line.strip_prefix('#') else { break };
        body_start += line.len();
        let rest = rest.trim();
        let (k, v) = rest
            .split_once(" = ")
            .ok_or_else(|| Error::Parse(format!("metadata line without ` = `: `{rest}`")))?;
        metadata.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(&text.as_bytes()[body_start..]);
    let header = rdr.headers()?.clone();
    let want: Vec<&str> = RESULT_COLUMNS.iter().chain(FIELD_NAMES.iter()).copied().collect();
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::Parse("unexpected header row".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = |i: usize| rec.get(i).unwrap_or("");
        let opt = |i: usize| -> Result<Option<f64>> {
            let s = at(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse(format!("row {}: column `{}` is not a number: `{s}`", line + 1, want[i])))
            }
        };
        let x = opt(1)?.ok_or_else(|| Error::Parse(format!("row {}: missing x", line + 1)))?;
        let mut config = NetworkConfig::default();
        for (j, name) in FIELD_NAMES.iter().enumerate() {
            let v = opt(RESULT_COLUMNS.len() + j)?
                .ok_or_else(|| Error::Parse(format!("row {}: missing `{name}`", line + 1)))?;
            config.set_field(name, v)?;
        }
        let n_trials = match opt(17)? {
            None => None,
            Some(v) if v >= 0.0 && v.fract() == 0.0 => Some(v as usize),
            Some(v) => return Err(Error::Parse(format!("row {}: n_trials `{v}` is not a count", line + 1))),
        };
        rows.push(FigureRow {
            series: at(0).to_string(),
            x,
            analytic_da: opt(2)?,
            analytic_ca: opt(3)?,
            mc_da: opt(4)?,
            mc_da_ci: opt(5)?,
            mc_da_se: opt(6)?,
            mc_ca: opt(7)?,
            mc_ca_ci: opt(8)?,
            mc_ca_se: opt(9)?,
            ratio_analytic: opt(10)?,
            ratio_mc: opt(11)?,
            diff_mc: opt(12)?,
            diff_mc_ci: opt(13)?,
            rejection_da: opt(14)?,
            rejection_ca: opt(15)?,
            ca_threshold: opt(16)?,
            n_trials,
            error: at(18).to_string(),
            config,
        });
    }
    Ok(FigureTable { metadata, rows })
}
