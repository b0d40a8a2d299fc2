//! Experiment configuration files.
//!
//! A config is a TOML document with `[scenario]`, `[predictor]`, `[costs]`
//! and `[run]` tables. Durations are numbers of seconds or strings with a
//! unit suffix (`"2y"`, `"10min"`); list-valued keys take a scalar or an array.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{parse_duration, CostParams, PredictorParams, YEAR};
use crate::tracegen::{DistributionSpec, FalsePredictionLaw};

/// Where per-unit fault inter-arrival times come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FaultSource {
    /// A parametric family; its mean is the individual MTBF.
    Synthetic(DistributionSpec),
    /// Availability durations read from a log; one unit groups several processors.
    Fta { path: PathBuf, processors_per_unit: u64 },
}

impl FaultSource {
    pub fn is_exponential(&self) -> bool {
        matches!(self, Self::Synthetic(DistributionSpec::Exponential { .. }))
    }
}

/// Parses `exp`, `weibull:K`, `uniform` or `fta:PATH`; `mean` sets the
/// expectation of parametric laws.
pub fn parse_distribution(text: &str, mean: f64) -> Result<FaultSource> {
    let text = text.trim();
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text, None),
    };
    let source = match (name.to_ascii_lowercase().as_str(), arg) {
        ("exp" | "exponential", None) => FaultSource::Synthetic(DistributionSpec::Exponential { mean }),
        ("uniform", None) => FaultSource::Synthetic(DistributionSpec::UniformMean { mean }),
        ("weibull", Some(k)) => {
            let shape = k
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad Weibull shape '{k}'")))?;
            FaultSource::Synthetic(DistributionSpec::Weibull { shape, mean })
        }
        ("fta", Some(path)) if !path.is_empty() => FaultSource::Fta { path: PathBuf::from(path), processors_per_unit: 4 },
        _ => return Err(Error::Config(format!("unknown distribution '{text}'"))),
    };
    if let FaultSource::Synthetic(spec) = &source {
        spec.validate()?;
    }
    Ok(source)
}

/// Policy families whose best fixed period is searched by simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SearchFamily {
    Periodic,
    OptimalPrediction,
    InexactPrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    Young,
    Daly,
    Rfo,
    OptimalPrediction,
    InexactPrediction,
    BestPeriod(SearchFamily),
}

impl Heuristic {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Young => "Young",
            Self::Daly => "Daly",
            Self::Rfo => "RFO",
            Self::OptimalPrediction => "OptimalPrediction",
            Self::InexactPrediction => "InexactPrediction",
            Self::BestPeriod(SearchFamily::Periodic) => "BestPeriod",
            Self::BestPeriod(SearchFamily::OptimalPrediction) => "BestPeriod-OptimalPrediction",
            Self::BestPeriod(SearchFamily::InexactPrediction) => "BestPeriod-InexactPrediction",
        }
    }

    pub fn needs_inexact_traces(&self) -> bool {
        matches!(self, Self::InexactPrediction | Self::BestPeriod(SearchFamily::InexactPrediction))
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "young" => Self::Young,
            "daly" => Self::Daly,
            "rfo" => Self::Rfo,
            "optimalprediction" => Self::OptimalPrediction,
            "inexactprediction" => Self::InexactPrediction,
            "bestperiod" | "bestperiod-periodic" | "bestperiod-rfo" => Self::BestPeriod(SearchFamily::Periodic),
            "bestperiod-optimalprediction" => Self::BestPeriod(SearchFamily::OptimalPrediction),
            "bestperiod-inexactprediction" => Self::BestPeriod(SearchFamily::InexactPrediction),
            other => return Err(Error::Config(format!("unknown heuristic '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub source: FaultSource,
    pub n_processors: Vec<u64>,
    pub horizon: f64,
    pub job_start: f64,
    /// `T_base = years_per_platform / N`.
    pub years_per_platform: f64,
    pub false_law: FalsePredictionLaw,
    pub analytic_only: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub heuristic: Heuristic,
    /// Explicit periods; when empty, `points` geometric points around the heuristic's period.
    pub grid: Vec<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub predictors: Vec<PredictorParams>,
    /// Base costs; the proactive cost is set from `cp_ratios`.
    pub costs: CostParams,
    /// `Cp / C` values to sweep.
    pub cp_ratios: Vec<f64>,
    pub heuristics: Vec<Heuristic>,
    pub instances: usize,
    pub base_seed: u64,
    pub curve: Option<CurveConfig>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Duration {
    Seconds(f64),
    Text(String),
}

impl Duration {
    fn seconds(&self) -> Result<f64> {
        match self {
            Self::Seconds(v) => Ok(*v),
            Self::Text(t) => parse_duration(t),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v],
            Self::Many(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Count {
    Int(u64),
    Text(String),
}

impl Count {
    fn value(&self) -> Result<u64> {
        match self {
            Self::Int(v) => Ok(*v),
            Self::Text(t) => parse_count(t),
        }
    }
}

/// Parses `65536` or `2^16`.
pub fn parse_count(text: &str) -> Result<u64> {
    let t = text.trim();
    let bad = || Error::Config(format!("bad processor count '{text}'"));
    if let Some((base, exp)) = t.split_once('^') {
        let base: u64 = base.trim().parse().map_err(|_| bad())?;
        let exp: u32 = exp.trim().parse().map_err(|_| bad())?;
        base.checked_pow(exp).ok_or_else(bad)
    } else {
        t.parse().map_err(|_| bad())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    #[serde(default)]
    predictor: RawPredictor,
    costs: RawCosts,
    #[serde(default)]
    run: RawRun,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "default_id")]
    id: String,
    distribution: String,
    mtbf_ind: Option<Duration>,
    n: OneOrMany<Count>,
    horizon: Option<Duration>,
    job_start: Option<Duration>,
    years_per_platform: Option<f64>,
    processors_per_unit: Option<u64>,
    false_predictions: Option<String>,
    #[serde(default)]
    analytic_only: bool,
}

fn default_id() -> String {
    "scenario".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPredictor {
    recall: OneOrMany<f64>,
    precision: OneOrMany<f64>,
}

impl Default for RawPredictor {
    fn default() -> Self {
        Self { recall: OneOrMany::One(0.0), precision: OneOrMany::One(1.0) }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    checkpoint: Duration,
    recovery: Duration,
    downtime: Duration,
    cp_ratio: Option<OneOrMany<f64>>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawRun {
    heuristics: Option<OneOrMany<String>>,
    instances: Option<usize>,
    seed: Option<u64>,
    curve_heuristic: Option<String>,
    curve_grid: Option<Vec<Duration>>,
    curve_points: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        // relative log paths are resolved against the config file
        if let FaultSource::Fta { path: log, .. } = &mut cfg.scenario.source {
            if log.is_relative() {
                if let Some(dir) = path.parent() {
                    *log = dir.join(&*log);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let s = raw.scenario;
        let mtbf_ind = s.mtbf_ind.map(|d| d.seconds()).transpose()?.unwrap_or(125.0 * YEAR);
        let mut source = parse_distribution(&s.distribution, mtbf_ind)?;
        if let (FaultSource::Fta { processors_per_unit, .. }, Some(k)) = (&mut source, s.processors_per_unit) {
            *processors_per_unit = k;
        }
        let false_law = match s.false_predictions.as_deref().map(str::to_ascii_lowercase).as_deref() {
            None if matches!(source, FaultSource::Fta { .. }) => FalsePredictionLaw::Uniform,
            None | Some("family") => FalsePredictionLaw::FaultFamily,
            Some("uniform") => FalsePredictionLaw::Uniform,
            Some(other) => return Err(Error::Config(format!("unknown false-prediction law '{other}'"))),
        };
        let n_processors = s.n.into_vec().iter().map(Count::value).collect::<Result<Vec<_>>>()?;
        let scenario = ScenarioConfig {
            id: s.id,
            source,
            n_processors,
            horizon: s.horizon.map(|d| d.seconds()).transpose()?.unwrap_or(2.0 * YEAR),
            job_start: s.job_start.map(|d| d.seconds()).transpose()?.unwrap_or(YEAR),
            years_per_platform: s.years_per_platform.unwrap_or(10_000.0),
            false_law,
            analytic_only: s.analytic_only,
        };

        let recalls = raw.predictor.recall.into_vec();
        let precisions = raw.predictor.precision.into_vec();
        let mut predictors = Vec::new();
        for &r in &recalls {
            for &p in &precisions {
                predictors.push(PredictorParams::new(r, p)?);
            }
        }

        let c = raw.costs.checkpoint.seconds()?;
        let costs = CostParams::new(c, c, raw.costs.downtime.seconds()?, raw.costs.recovery.seconds()?)?;
        let cp_ratios = raw.costs.cp_ratio.map(OneOrMany::into_vec).unwrap_or_else(|| vec![1.0]);

        let heuristics = match raw.run.heuristics {
            Some(h) => h.into_vec().iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
            None => vec![Heuristic::Rfo, Heuristic::OptimalPrediction],
        };
        let curve = match raw.run.curve_heuristic {
            None => None,
            Some(h) => Some(CurveConfig {
                heuristic: h.parse()?,
                grid: raw
                    .run
                    .curve_grid
                    .unwrap_or_default()
                    .iter()
                    .map(Duration::seconds)
                    .collect::<Result<_>>()?,
                points: raw.run.curve_points.unwrap_or(20),
            }),
        };
        let cfg = Self {
            scenario,
            predictors,
            costs,
            cp_ratios,
            heuristics,
            instances: raw.run.instances.unwrap_or(100),
            base_seed: raw.run.seed.unwrap_or(0),
            curve,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        let fail = |m: String| Err(Error::Config(m));
        if s.n_processors.is_empty() || s.n_processors.contains(&0) {
            return fail("processor counts must be a nonempty list of positive integers".into());
        }
        if let FaultSource::Fta { processors_per_unit, .. } = &s.source {
            if *processors_per_unit == 0 {
                return fail("processors_per_unit must be positive".into());
            }
        }
        if !(s.horizon > 0.0 && s.job_start >= 0.0 && s.job_start < s.horizon) {
            return fail(format!("need 0 <= job_start < horizon, got {} and {}", s.job_start, s.horizon));
        }
        if !(s.years_per_platform > 0.0) {
            return fail("years_per_platform must be positive".into());
        }
        if self.predictors.is_empty() {
            return fail("predictor list is empty".into());
        }
        if self.cp_ratios.is_empty() || self.cp_ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return fail("cp_ratio must be a nonempty list of nonnegative numbers".into());
        }
        if self.instances == 0 {
            return fail("instances must be at least 1".into());
        }
        if let Some(c) = &self.curve {
            if c.grid.is_empty() && c.points < 2 {
                return fail("curve needs an explicit grid or at least two points".into());
            }
        }
        Ok(())
    }

    /// Costs with `Cp = ratio * C`.
    pub fn costs_for(&self, ratio: f64) -> Result<CostParams> {
        CostParams::new(self.costs.checkpoint, ratio * self.costs.checkpoint, self.costs.downtime, self.costs.recovery)
    }

    /// `T_base` for a platform of `n` processors.
    pub fn t_base(&self, n: u64) -> f64 {
        self.scenario.years_per_platform * YEAR / n as f64
    }
}
