//! Configuration documents, figure sweeps and CSV result tables.

mod check;
mod document;
mod figures;
mod sweep;
mod table;

pub use check::{run_checks, CheckOutcome};
pub use document::{config_from_table, render_config, validate_config};
pub use figures::{
    association_point, evaluate_plan, figure_path, figure_plan, figure_table, run_figure, run_sweep,
    spectral_efficiency_point, FigurePlan, Quantity, RunOptions, Series, FIGURES,
};
pub use sweep::{parse_sweep_spec, SweepSpec, SweepVar, DEFAULT_POWER_BUDGET};
pub use table::{read_figure_csv, FigureRow, FigureTable, RESULT_COLUMNS};
