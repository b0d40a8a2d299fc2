use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ckpt_core::analysis::{
    beta_lim, optimize_period, period_no_pred, period_pred, period_pred_approx, waste_no_prediction,
    waste_simple_policy, waste_with_prediction,
};
use ckpt_core::harness::{
    parse_count, parse_distribution, period_row, run_experiment, with_workers, write_csv, ExperimentConfig,
    FaultSource, PERIODS_HEADER,
};
use ckpt_core::model::{mu_platform, parse_duration, CostParams, PlatformParams, PredictorParams, DAY};
use ckpt_core::search::{best_period, SearchSpec};
use ckpt_core::simulator::{simulate, Policy};
use ckpt_core::tracegen::{
    empirical_conditional_survival, ingest_fta_durations, instance_seed, parse_fta_durations, read_trace_csv,
    write_trace_csv, DistributionSpec, FalsePredictionLaw, PredictionMode, TraceRecipe,
};
use ckpt_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ckpt", version, about = "Checkpoint periods, waste models and fault-trace simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Young, Daly, RFO and exact Exponential periods per platform size (CSV)
    Periods(PeriodsArgs),
    /// Analytical waste at a given period
    Waste(WasteArgs),
    /// Recommended period with and without acting on predictions
    Optimize(OptimizeArgs),
    /// Simulate one policy on a trace file
    Simulate(SimulateArgs),
    /// Generate a synthetic trace (CSV)
    GenTrace(GenTraceArgs),
    /// Brute-force search for the best period by simulation
    BestPeriod(BestPeriodArgs),
    /// Summarize an availability-duration log
    IngestFta(IngestArgs),
    /// Run an experiment config and write CSV results
    Experiment(ExperimentArgs),
}

fn duration(s: &str) -> std::result::Result<f64, String> {
    parse_duration(s).map_err(|e| e.to_string())
}

fn count(s: &str) -> std::result::Result<u64, String> {
    parse_count(s).map_err(|e| e.to_string())
}

#[derive(Args, Clone)]
struct CostArgs {
    /// Regular checkpoint duration
    #[arg(long = "c", value_parser = duration, default_value = "600")]
    checkpoint: f64,
    /// Proactive checkpoint duration (defaults to the regular one)
    #[arg(long = "cp", value_parser = duration)]
    proactive: Option<f64>,
    /// Downtime
    #[arg(long = "d", value_parser = duration, default_value = "60")]
    downtime: f64,
    /// Recovery duration
    #[arg(long = "r-cost", value_parser = duration, default_value = "600")]
    recovery: f64,
}

impl CostArgs {
    fn costs(&self) -> Result<CostParams> {
        CostParams::new(self.checkpoint, self.proactive.unwrap_or(self.checkpoint), self.downtime, self.recovery)
    }
}

#[derive(Args, Clone)]
struct PredictorArgs {
    #[arg(long, default_value_t = 0.0)]
    recall: f64,
    #[arg(long, default_value_t = 1.0)]
    precision: f64,
}

impl PredictorArgs {
    fn predictor(&self) -> Result<PredictorParams> {
        PredictorParams::new(self.recall, self.precision)
    }
}

#[derive(Args)]
struct PeriodsArgs {
    /// Individual component MTBF
    #[arg(long, value_parser = duration, default_value = "125y")]
    mtbf_ind: f64,
    /// Processor counts, e.g. `2^10` (repeatable, comma-separated)
    #[arg(long = "n", value_parser = count, value_delimiter = ',', required = true)]
    n: Vec<u64>,
    #[command(flatten)]
    costs: CostArgs,
}

#[derive(Args)]
struct WasteArgs {
    /// Period
    #[arg(long = "t", value_parser = duration)]
    period: f64,
    /// Platform MTBF
    #[arg(long, value_parser = duration)]
    mtbf: f64,
    /// Trust probability of the randomized policy
    #[arg(long)]
    q: Option<f64>,
    #[command(flatten)]
    costs: CostArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Platform MTBF
    #[arg(long, value_parser = duration)]
    mtbf: f64,
    #[command(flatten)]
    costs: CostArgs,
    #[command(flatten)]
    predictor: PredictorArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// `periodic`, `threshold:BETA`, `random:Q` or `inexact:BETA`
    #[arg(long, default_value = "periodic")]
    policy: String,
    #[arg(long = "t", value_parser = duration)]
    period: f64,
    /// Useful work of the job
    #[arg(long, value_parser = duration)]
    tbase: f64,
    #[arg(long, value_parser = duration, default_value = "2y")]
    horizon: f64,
    #[arg(long, value_parser = duration, default_value = "0")]
    job_start: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    costs: CostArgs,
}

#[derive(Args, Clone)]
struct TraceArgs {
    /// `exp`, `weibull:K`, `uniform` or `fta:FILE`
    #[arg(long, default_value = "exp")]
    dist: String,
    /// Mean of the per-unit law (ignored for `fta`)
    #[arg(long, value_parser = duration, default_value = "125y")]
    mean: f64,
    /// Number of independent units
    #[arg(long = "n", value_parser = count)]
    n: u64,
    #[arg(long, value_parser = duration, default_value = "2y")]
    horizon: f64,
    #[arg(long, value_parser = duration, default_value = "1y")]
    job_start: f64,
    /// Draw false-prediction gaps from a uniform law instead of the fault family
    #[arg(long)]
    uniform_false: bool,
    #[command(flatten)]
    predictor: PredictorArgs,
}

impl TraceArgs {
    fn recipe(&self, mode: PredictionMode) -> Result<TraceRecipe> {
        let (unit_dist, default_false) = match parse_distribution(&self.dist, self.mean)? {
            FaultSource::Synthetic(spec) => (spec, FalsePredictionLaw::FaultFamily),
            FaultSource::Fta { path, .. } => (ingest_fta_durations(&path)?, FalsePredictionLaw::Uniform),
        };
        Ok(TraceRecipe {
            unit_dist,
            n_units: self.n,
            horizon: self.horizon,
            job_start: self.job_start,
            predictor: self.predictor.predictor()?,
            false_law: if self.uniform_false { FalsePredictionLaw::Uniform } else { default_false },
            mode,
        })
    }
}

#[derive(Args)]
struct GenTraceArgs {
    #[command(flatten)]
    trace: TraceArgs,
    /// Actual faults strike uniformly within this window after the prediction
    #[arg(long, value_parser = duration)]
    inexact_window: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Periodic,
    Prediction,
    Inexact,
}

#[derive(Args)]
struct BestPeriodArgs {
    #[command(flatten)]
    trace: TraceArgs,
    #[arg(long, value_enum, default_value = "periodic")]
    family: Family,
    /// Useful work (defaults to 10000 years divided by the unit count)
    #[arg(long, value_parser = duration)]
    tbase: Option<f64>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 2)]
    rounds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    costs: CostArgs,
}

#[derive(Args)]
struct IngestArgs {
    file: PathBuf,
    /// Report P(X >= t | X >= tau) for `t,tau`
    #[arg(long, value_delimiter = ',')]
    survival: Option<Vec<f64>>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the instance count
    #[arg(long)]
    instances: Option<usize>,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Print makespans in days
    #[arg(long)]
    days: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match with_workers(|| run(cli.command)).and_then(|r| r) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match command {
        Command::Periods(a) => {
            let costs = a.costs.costs()?;
            let rows = a
                .n
                .iter()
                .map(|&n| period_row(n, mu_platform(&PlatformParams::new(n, a.mtbf_ind)?), &costs))
                .collect::<Result<Vec<_>>>()?;
            write_csv(&rows, &PERIODS_HEADER, &mut out)?;
        }
        Command::Waste(a) => {
            let costs = a.costs.costs()?;
            let pred = a.predictor.predictor()?;
            let plain = waste_no_prediction(a.period, a.mtbf, &costs)?;
            writeln!(out, "waste_no_prediction\t{}", plain.waste_total)?;
            writeln!(out, "  checkpointing\t{}", plain.waste_ff)?;
            writeln!(out, "  faults\t{}", plain.waste_fault)?;
            if !plain.valid {
                writeln!(out, "  warning\ta component lies outside [0, 1]")?;
            }
            writeln!(out, "waste_with_prediction\t{}", waste_with_prediction(a.period, a.mtbf, &pred, &costs)?)?;
            if let Some(q) = a.q {
                let w = waste_simple_policy(a.period, q, a.mtbf, &pred, &costs)?;
                writeln!(out, "waste_simple_policy\t{}", w.waste_total)?;
            }
        }
        Command::Optimize(a) => {
            let costs = a.costs.costs()?;
            let pred = a.predictor.predictor()?;
            let rec = optimize_period(a.mtbf, &pred, &costs)?;
            writeln!(out, "period\t{}", rec.period)?;
            writeln!(out, "waste\t{}", rec.predicted_waste)?;
            writeln!(out, "branch\t{}", rec.branch.as_str())?;
            writeln!(out, "clamped\t{}", rec.clamped)?;
            writeln!(out, "trust_threshold\t{}", beta_lim(&costs, &pred))?;
            writeln!(out, "period_no_prediction\t{}", period_no_pred(a.mtbf, &pred, &costs)?)?;
            if pred.recall < 1.0 {
                writeln!(out, "period_prediction\t{}", period_pred(a.mtbf, &pred, &costs)?)?;
                writeln!(out, "period_prediction_approx\t{}", period_pred_approx(a.mtbf, costs.checkpoint, pred.recall)?)?;
            }
        }
        Command::Simulate(a) => {
            let costs = a.costs.costs()?;
            let policy = parse_policy(&a.policy, a.period)?;
            let trace = read_trace_csv(File::open(&a.trace)?, &a.trace, a.horizon, a.job_start)?;
            let o = simulate(&trace, &policy, &costs, a.tbase, a.seed)?;
            writeln!(out, "makespan_s\t{}", o.makespan)?;
            writeln!(out, "waste\t{}", o.waste)?;
            writeln!(out, "{:?}", o.counts)?;
        }
        Command::GenTrace(a) => {
            let mode = match a.inexact_window {
                Some(window) => PredictionMode::Inexact { window },
                None => PredictionMode::Exact,
            };
            let trace = a.trace.recipe(mode)?.generate(a.seed)?;
            match &a.out {
                Some(p) => write_trace_csv(&trace, File::create(p)?)?,
                None => write_trace_csv(&trace, &mut out)?,
            }
            log::info!("{} events", trace.len());
        }
        Command::BestPeriod(a) => {
            let costs = a.costs.costs()?;
            let pred = a.trace.predictor.predictor()?;
            let mode = match a.family {
                Family::Inexact => PredictionMode::Inexact { window: 2.0 * costs.checkpoint },
                _ => PredictionMode::Exact,
            };
            let recipe = a.trace.recipe(mode)?;
            let mu = recipe.platform_mtbf();
            let t_base = a.tbase.unwrap_or(10_000.0 * ckpt_core::model::YEAR / a.trace.n as f64);
            let traces = (0..a.instances as u64)
                .map(|i| recipe.generate(instance_seed(a.seed, i)))
                .collect::<Result<Vec<_>>>()?;
            let threshold = beta_lim(&costs, &pred);
            let (policy, t_ref) = match a.family {
                Family::Periodic => {
                    let t = ckpt_core::analysis::period_rfo(mu, &costs)?.max(costs.checkpoint);
                    (Policy::Periodic { period: t }, t)
                }
                Family::Prediction | Family::Inexact => {
                    let t = optimize_period(mu, &pred, &costs)?.period;
                    let p = if matches!(a.family, Family::Inexact) {
                        Policy::Inexact { period: t, threshold }
                    } else {
                        Policy::ThresholdTrust { period: t, threshold }
                    };
                    (p, t)
                }
            };
            let mut spec = SearchSpec::around(t_ref, costs.checkpoint);
            spec.refinement_rounds = a.rounds;
            let r = best_period(&policy, &traces, &costs, t_base, &spec)?;
            writeln!(out, "analytical_period_s\t{t_ref}")?;
            writeln!(out, "best_period_s\t{}", r.best.period)?;
            writeln!(out, "mean_waste\t{}", r.best.mean_waste)?;
            writeln!(out, "waste_stderr\t{}", r.best.stderr)?;
        }
        Command::IngestFta(a) => {
            let text = std::fs::read_to_string(&a.file)?;
            let samples = parse_fta_durations(&text, &a.file)?;
            let spec = DistributionSpec::EmpiricalDurations { samples: samples.clone() };
            writeln!(out, "count\t{}", samples.len())?;
            writeln!(out, "mean_s\t{}", spec.mean())?;
            writeln!(out, "min_s\t{}", samples.iter().cloned().fold(f64::INFINITY, f64::min))?;
            writeln!(out, "max_s\t{}", samples.iter().cloned().fold(0.0, f64::max))?;
            if let Some(v) = a.survival {
                if v.len() != 2 {
                    return Err(Error::InvalidParameter("--survival takes exactly two values: t,tau".into()));
                }
                writeln!(out, "survival\t{}", empirical_conditional_survival(&samples, v[0], v[1])?)?;
            }
        }
        Command::Experiment(a) => {
            let mut cfg = ExperimentConfig::from_path(&a.config)?;
            if let Some(k) = a.instances {
                cfg.instances = k;
            }
            if let Some(s) = a.seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let report = run_experiment(&cfg, &a.out)?;
            let scale = if a.days { DAY } else { 1.0 };
            let unit = if a.days { "d" } else { "s" };
            for r in &report.results {
                writeln!(
                    out,
                    "{}\tN={}\t{}\tT={:.0}s\twaste={:.4}\tmakespan={:.2}{unit}\tgain={}",
                    r.scenario_id,
                    r.n,
                    r.heuristic,
                    r.period_s,
                    r.mean_waste,
                    r.mean_makespan_s / scale,
                    r.gain_vs_rfo_percent.map_or("-".into(), |g| format!("{g:.1}%")),
                )?;
            }
            if !report.errors.is_empty() {
                eprintln!("{} instance errors recorded in errors.csv", report.errors.len());
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn parse_policy(text: &str, period: f64) -> Result<Policy> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text, None),
    };
    let value = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| Error::Config(format!("policy '{text}' needs a value")))
            .and_then(|v| parse_duration(v).map_err(|_| Error::Config(format!("bad policy value in '{text}'"))))
    };
    Ok(match name {
        "periodic" => Policy::Periodic { period },
        "threshold" => Policy::ThresholdTrust { period, threshold: value(arg)? },
        "inexact" => Policy::Inexact { period, threshold: value(arg)? },
        "random" => Policy::RandomTrust { period, q: value(arg)? },
        _ => return Err(Error::Config(format!("unknown policy '{text}'"))),
    })
}
