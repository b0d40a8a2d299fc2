//! Sweep execution and CSV outputs.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FaultSource, Heuristic, SearchFamily};
use crate::analysis::{
    beta_lim, optimize_period, period_daly, period_optimal_exponential, period_rfo, period_young,
    waste_no_prediction, waste_with_prediction,
};
use crate::error::{Error, Result};
use crate::model::{CostParams, PredictorParams};
use crate::search::{best_period, evaluate, mean_stderr, SearchSpec};
use crate::simulator::{simulate, Policy};
use crate::tracegen::{ingest_fta_durations, instance_seed, EventTrace, PredictionMode, TraceRecipe};

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub heuristic: String,
    pub period_s: f64,
    pub mean_waste: f64,
    pub waste_stderr: f64,
    pub mean_makespan_s: f64,
    #[serde(rename = "gain_vs_RFO_percent")]
    pub gain_vs_rfo_percent: Option<f64>,
    pub instances: usize,
}

/// One row of `periods.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub mu_s: f64,
    pub young_s: f64,
    pub young_dev_percent: f64,
    pub daly_s: f64,
    pub daly_dev_percent: f64,
    pub rfo_s: f64,
    pub rfo_dev_percent: f64,
    pub optimal_s: f64,
}

/// One row of `errors.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scenario_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub heuristic: String,
    pub instance: usize,
    pub seed: u64,
    pub message: String,
}

/// One row of `curves.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub scenario_id: String,
    #[serde(rename = "N")]
    pub n: u64,
    pub heuristic: String,
    pub period_s: f64,
    pub analytical_waste: Option<f64>,
    pub simulated_mean_waste: Option<f64>,
    pub simulated_stderr: Option<f64>,
    pub valid: bool,
}

/// Young, Daly, RFO and exact Exponential periods for a platform MTBF `mu`.
pub fn period_row(n: u64, mu: f64, costs: &CostParams) -> Result<PeriodRow> {
    let optimal = period_optimal_exponential(mu, costs.checkpoint)?;
    let dev = |t: f64| 100.0 * (t - optimal) / optimal;
    let (young, daly, rfo) = (period_young(mu, costs.checkpoint), period_daly(mu, costs), period_rfo(mu, costs)?);
    Ok(PeriodRow {
        n,
        mu_s: mu,
        young_s: young,
        young_dev_percent: dev(young),
        daly_s: daly,
        daly_dev_percent: dev(daly),
        rfo_s: rfo,
        rfo_dev_percent: dev(rfo),
        optimal_s: optimal,
    })
}

/// What an experiment run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub results: Vec<ResultRow>,
    pub periods: Vec<PeriodRow>,
    pub errors: Vec<ErrorRow>,
    pub curves: Vec<CurveRow>,
}

/// Policy family of a heuristic, used for curves and period search.
fn family_policy(family: SearchFamily, period: f64, costs: &CostParams, pred: &PredictorParams) -> Policy {
    let threshold = beta_lim(costs, pred);
    match family {
        SearchFamily::Periodic => Policy::Periodic { period },
        SearchFamily::OptimalPrediction => Policy::ThresholdTrust { period, threshold },
        SearchFamily::InexactPrediction => Policy::Inexact { period, threshold },
    }
}

fn heuristic_family(h: Heuristic) -> SearchFamily {
    match h {
        Heuristic::Young | Heuristic::Daly | Heuristic::Rfo => SearchFamily::Periodic,
        Heuristic::OptimalPrediction => SearchFamily::OptimalPrediction,
        Heuristic::InexactPrediction => SearchFamily::InexactPrediction,
        Heuristic::BestPeriod(f) => f,
    }
}

/// Analytical period of a heuristic; best-period heuristics start from the
/// analytical period of their family.
pub fn heuristic_period(h: Heuristic, mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    Ok(match h {
        Heuristic::Young => period_young(mu, costs.checkpoint),
        Heuristic::Daly => period_daly(mu, costs),
        Heuristic::Rfo | Heuristic::BestPeriod(SearchFamily::Periodic) => period_rfo(mu, costs)?.max(costs.checkpoint),
        _ => optimize_period(mu, pred, costs)?.period,
    })
}

/// Analytical waste of a policy family at `period`.
pub fn analytical_waste(family: SearchFamily, period: f64, mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    match family {
        SearchFamily::Periodic => Ok(waste_no_prediction(period, mu, costs)?.waste_total),
        _ => waste_with_prediction(period, mu, pred, costs),
    }
}

/// Simulates `policy` on every trace; failures are recorded, not propagated.
fn run_instances(
    policy: &Policy,
    traces: &[std::result::Result<EventTrace, String>],
    costs: &CostParams,
    t_base: f64,
) -> Vec<std::result::Result<(f64, f64), String>> {
    traces
        .par_iter()
        .map(|tr| match tr {
            Ok(tr) => simulate(tr, policy, costs, t_base, tr.seed)
                .map(|o| (o.waste, o.makespan))
                .map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        })
        .collect()
}

struct Cell<'a> {
    cfg: &'a ExperimentConfig,
    scenario_id: String,
    n: u64,
    mu: f64,
    t_base: f64,
    pred: PredictorParams,
    costs: CostParams,
    exact: Vec<std::result::Result<EventTrace, String>>,
    inexact: Vec<std::result::Result<EventTrace, String>>,
}

impl Cell<'_> {
    fn traces(&self, family: SearchFamily) -> &[std::result::Result<EventTrace, String>] {
        if family == SearchFamily::InexactPrediction {
            &self.inexact
        } else {
            &self.exact
        }
    }

    fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.cfg.instances as u64).map(|i| instance_seed(self.cfg.base_seed, i))
    }

    fn record_errors(&self, h: &str, outcomes: &[std::result::Result<(f64, f64), String>], errors: &mut Vec<ErrorRow>) {
        for ((i, o), seed) in outcomes.iter().enumerate().zip(self.seeds()) {
            if let Err(message) = o {
                errors.push(ErrorRow {
                    scenario_id: self.scenario_id.clone(),
                    n: self.n,
                    heuristic: h.to_string(),
                    instance: i,
                    seed,
                    message: message.clone(),
                });
            }
        }
    }

    /// Runs one heuristic; returns `(period, wastes, makespans)` of successful instances.
    fn run(&self, h: Heuristic, errors: &mut Vec<ErrorRow>) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let family = heuristic_family(h);
        let mut period = heuristic_period(h, self.mu, &self.pred, &self.costs)?;
        if let Heuristic::BestPeriod(_) = h {
            let ok: Vec<EventTrace> = self.traces(family).iter().filter_map(|t| t.as_ref().ok().cloned()).collect();
            let spec = SearchSpec::around(period, self.costs.checkpoint);
            let policy = family_policy(family, period, &self.costs, &self.pred);
            match best_period(&policy, &ok, &self.costs, self.t_base, &spec) {
                Ok(r) => period = r.best.period,
                Err(e) => log::warn!("{} N={} {h}: search failed: {e}", self.scenario_id, self.n),
            }
        }
        let policy = family_policy(family, period, &self.costs, &self.pred);
        let outcomes = run_instances(&policy, self.traces(family), &self.costs, self.t_base);
        self.record_errors(h.as_str(), &outcomes, errors);
        let (wastes, makespans) = outcomes.iter().filter_map(|o| o.as_ref().ok()).copied().unzip();
        Ok((period, wastes, makespans))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn scenario_label(cfg: &ExperimentConfig, pred: &PredictorParams, ratio: f64) -> String {
    let multi = cfg.predictors.len() > 1 || cfg.cp_ratios.len() > 1;
    if multi {
        format!("{}/r={}/p={}/cp={}", cfg.scenario.id, pred.recall, pred.precision, ratio)
    } else {
        cfg.scenario.id.clone()
    }
}

/// Runs every cell of the sweep and collects the rows, without writing files.
pub fn run_experiment_rows(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let unit_dist = match &cfg.scenario.source {
        FaultSource::Synthetic(spec) => spec.clone(),
        FaultSource::Fta { path, .. } => ingest_fta_durations(path)?,
    };
    let per_unit = match &cfg.scenario.source {
        FaultSource::Synthetic(_) => 1,
        FaultSource::Fta { processors_per_unit, .. } => *processors_per_unit,
    };
    let mut report = ExperimentReport::default();
    let mut ns = cfg.scenario.n_processors.clone();
    ns.sort_unstable();
    ns.dedup();

    for &n in &ns {
        let n_units = (n / per_unit).max(1);
        let mu = unit_dist.mean() / n_units as f64;
        if cfg.scenario.source.is_exponential() {
            match period_row(n, mu, &cfg.costs) {
                Ok(row) => report.periods.push(row),
                Err(e) => log::warn!("periods for N={n}: {e}"),
            }
        }
    }
    if cfg.scenario.analytic_only || cfg.heuristics.is_empty() {
        return Ok(report);
    }

    let mut heuristics = cfg.heuristics.clone();
    heuristics.sort();
    heuristics.dedup();
    let needs_inexact = heuristics.iter().any(Heuristic::needs_inexact_traces);

    for &ratio in &cfg.cp_ratios {
        let costs = cfg.costs_for(ratio)?;
        for pred in &cfg.predictors {
            let scenario_id = scenario_label(cfg, pred, ratio);
            for &n in &ns {
                let n_units = (n / per_unit).max(1);
                let recipe = TraceRecipe {
                    unit_dist: unit_dist.clone(),
                    n_units,
                    horizon: cfg.scenario.horizon,
                    job_start: cfg.scenario.job_start,
                    predictor: *pred,
                    false_law: cfg.scenario.false_law.clone(),
                    mode: PredictionMode::Exact,
                };
                let gen = |r: &TraceRecipe| -> Vec<std::result::Result<EventTrace, String>> {
                    (0..cfg.instances as u64)
                        .into_par_iter()
                        .map(|i| r.generate(instance_seed(cfg.base_seed, i)).map_err(|e| e.to_string()))
                        .collect()
                };
                let exact = gen(&recipe);
                let inexact = if needs_inexact {
                    gen(&recipe.with_mode(PredictionMode::Inexact { window: 2.0 * costs.checkpoint }))
                } else {
                    Vec::new()
                };
                let cell = Cell {
                    cfg,
                    scenario_id: scenario_id.clone(),
                    n,
                    mu: recipe.platform_mtbf(),
                    t_base: cfg.t_base(n),
                    pred: *pred,
                    costs,
                    exact,
                    inexact,
                };
                for (i, tr) in cell.exact.iter().chain(cell.inexact.iter()).enumerate() {
                    if let Err(message) = tr {
                        report.errors.push(ErrorRow {
                            scenario_id: scenario_id.clone(),
                            n,
                            heuristic: "trace".into(),
                            instance: i % cfg.instances,
                            seed: instance_seed(cfg.base_seed, (i % cfg.instances) as u64),
                            message: message.clone(),
                        });
                    }
                }

                let mut rfo_errors = Vec::new();
                let baseline = cell.run(Heuristic::Rfo, &mut rfo_errors).map_err(|e| e.to_string());
                let rfo_makespan = match &baseline {
                    Ok((_, _, m)) if !m.is_empty() => Some(mean(m)),
                    _ => None,
                };
                for &h in &heuristics {
                    let run = if h == Heuristic::Rfo {
                        report.errors.append(&mut rfo_errors);
                        baseline.clone()
                    } else {
                        cell.run(h, &mut report.errors).map_err(|e| e.to_string())
                    };
                    let (period, wastes, makespans) = match run {
                        Ok(r) => r,
                        Err(e) => {
                            report.errors.push(ErrorRow {
                                scenario_id: scenario_id.clone(),
                                n,
                                heuristic: h.as_str().into(),
                                instance: 0,
                                seed: cfg.base_seed,
                                message: e,
                            });
                            continue;
                        }
                    };
                    if wastes.is_empty() {
                        continue;
                    }
                    let (mean_waste, waste_stderr) = mean_stderr(&wastes);
                    let mean_makespan = mean(&makespans);
                    let gain = if h == Heuristic::Rfo {
                        rfo_makespan.map(|_| 0.0)
                    } else {
                        rfo_makespan.map(|m| 100.0 * (m - mean_makespan) / m)
                    };
                    log::info!(
                        "{scenario_id} N={n} {h}: T={period:.1} waste={mean_waste:.4} makespan={mean_makespan:.0}"
                    );
                    report.results.push(ResultRow {
                        scenario_id: scenario_id.clone(),
                        n,
                        heuristic: h.as_str().into(),
                        period_s: period,
                        mean_waste,
                        waste_stderr,
                        mean_makespan_s: mean_makespan,
                        gain_vs_rfo_percent: gain,
                        instances: wastes.len(),
                    });
                }

                if let Some(curve) = &cfg.curve {
                    report.curves.extend(curve_rows(&cell, curve.heuristic, &curve.grid, curve.points)?);
                }
            }
        }
    }
    Ok(report)
}

fn curve_rows(cell: &Cell<'_>, h: Heuristic, grid: &[f64], points: usize) -> Result<Vec<CurveRow>> {
    let family = heuristic_family(h);
    let grid: Vec<f64> = if grid.is_empty() {
        let center = heuristic_period(h, cell.mu, &cell.pred, &cell.costs)?;
        let lo = cell.costs.checkpoint.max(center / 4.0);
        let hi = 4.0 * center;
        (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect()
    } else {
        grid.to_vec()
    };
    let traces: Vec<EventTrace> = cell.traces(family).iter().filter_map(|t| t.as_ref().ok().cloned()).collect();
    emit_waste_curve(&cell.scenario_id, cell.n, h, family, &grid, &traces, cell.mu, &cell.pred, &cell.costs, cell.t_base)
}

/// Pairs analytical and simulated waste over a grid of periods. Periods
/// below `C` are kept and flagged invalid. Simulation failures leave the
/// simulated columns empty.
#[allow(clippy::too_many_arguments)]
pub fn emit_waste_curve(
    scenario_id: &str,
    n: u64,
    heuristic: Heuristic,
    family: SearchFamily,
    grid: &[f64],
    traces: &[EventTrace],
    mu: f64,
    pred: &PredictorParams,
    costs: &CostParams,
    t_base: f64,
) -> Result<Vec<CurveRow>> {
    grid.iter()
        .map(|&t| {
            let mut row = CurveRow {
                scenario_id: scenario_id.to_string(),
                n,
                heuristic: heuristic.as_str().into(),
                period_s: t,
                analytical_waste: None,
                simulated_mean_waste: None,
                simulated_stderr: None,
                valid: false,
            };
            if t <= costs.checkpoint {
                return Ok(row);
            }
            row.analytical_waste = analytical_waste(family, t, mu, pred, costs).ok();
            if !traces.is_empty() {
                match evaluate(&family_policy(family, t, costs, pred), traces, costs, t_base) {
                    Ok(score) => {
                        row.simulated_mean_waste = Some(score.mean_waste);
                        row.simulated_stderr = Some(score.stderr);
                    }
                    Err(e) => log::warn!("curve point T={t}: {e}"),
                }
            }
            row.valid = row.analytical_waste.is_some();
            Ok(row)
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], header: &[&str], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const RESULTS_HEADER: [&str; 9] = [
    "scenario_id",
    "N",
    "heuristic",
    "period_s",
    "mean_waste",
    "waste_stderr",
    "mean_makespan_s",
    "gain_vs_RFO_percent",
    "instances",
];
pub const PERIODS_HEADER: [&str; 9] = [
    "N",
    "mu_s",
    "young_s",
    "young_dev_percent",
    "daly_s",
    "daly_dev_percent",
    "rfo_s",
    "rfo_dev_percent",
    "optimal_s",
];
pub const ERRORS_HEADER: [&str; 6] = ["scenario_id", "N", "heuristic", "instance", "seed", "message"];
pub const CURVES_HEADER: [&str; 8] = [
    "scenario_id",
    "N",
    "heuristic",
    "period_s",
    "analytical_waste",
    "simulated_mean_waste",
    "simulated_stderr",
    "valid",
];

/// Runs the sweep and writes `results.csv`, `periods.csv`, `errors.csv`
/// and, when a curve is configured, `curves.csv` into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    fs::create_dir_all(out_dir)?;
    let report = run_experiment_rows(cfg)?;
    write_csv(&report.results, &RESULTS_HEADER, File::create(out_dir.join("results.csv"))?)?;
    write_csv(&report.periods, &PERIODS_HEADER, File::create(out_dir.join("periods.csv"))?)?;
    write_csv(&report.errors, &ERRORS_HEADER, File::create(out_dir.join("errors.csv"))?)?;
    if cfg.curve.is_some() {
        write_csv(&report.curves, &CURVES_HEADER, File::create(out_dir.join("curves.csv"))?)?;
    }
    Ok(report)
}

/// Reads a `results.csv` back.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<ResultRow>, _>>()?;
    Ok(rows)
}

/// Runs `f` on a pool bounded by `CKPT_WORKERS` when it is set.
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var("CKPT_WORKERS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| Error::Config(format!("CKPT_WORKERS must be a positive integer, got '{v}'")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}
