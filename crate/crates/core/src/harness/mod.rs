//! Experiment configuration, sweeps and CSV outputs.

pub mod config;
pub mod experiment;

pub use config::{parse_count, parse_distribution, CurveConfig, ExperimentConfig, FaultSource, Heuristic, ScenarioConfig, SearchFamily};
pub use experiment::{
    analytical_waste, emit_waste_curve, heuristic_period, period_row, read_results, run_experiment,
    run_experiment_rows, with_workers, write_csv, CurveRow, ErrorRow, ExperimentReport, PeriodRow, ResultRow,
    CURVES_HEADER, ERRORS_HEADER, PERIODS_HEADER, RESULTS_HEADER,
};
