//! Failure traces: synthetic per-unit renewal processes, log-based empirical
//! laws, prediction labeling, false-prediction streams and merging.

mod dist;
mod io;

pub use dist::{renewal_times, DistributionSpec, Sampler};
pub use io::{ingest_fta_durations, parse_fta_durations, read_trace_csv, write_trace_csv};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::model::PredictorParams;

/// What happens at an event time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    UnpredictedFault,
    /// A correct prediction; the fault itself strikes at `actual_fault_time`.
    TruePrediction { actual_fault_time: f64 },
    FalsePrediction,
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            Self::UnpredictedFault => 0,
            Self::TruePrediction { .. } => 1,
            Self::FalsePrediction => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::UnpredictedFault => "fault",
            Self::TruePrediction { .. } => "pred_true",
            Self::FalsePrediction => "pred_false",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

/// Time-ordered stream of faults and predictions over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    events: Vec<Event>,
    pub horizon: f64,
    pub job_start: f64,
    pub seed: u64,
}

impl EventTrace {
    /// Checks ordering and bounds.
    pub fn new(events: Vec<Event>, horizon: f64, job_start: f64, seed: u64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(job_start >= 0.0 && job_start < horizon) {
            return Err(invalid(format!("job start {job_start} outside [0, {horizon})")));
        }
        let mut prev = f64::NEG_INFINITY;
        for e in &events {
            if !(e.time >= 0.0 && e.time <= horizon) {
                return Err(invalid(format!("event time {} outside [0, {horizon}]", e.time)));
            }
            if e.time < prev {
                return Err(invalid(format!("events not sorted at time {}", e.time)));
            }
            if let EventKind::TruePrediction { actual_fault_time } = e.kind {
                if !(actual_fault_time >= e.time) || !actual_fault_time.is_finite() {
                    return Err(invalid(format!(
                        "fault time {actual_fault_time} precedes its prediction at {}",
                        e.time
                    )));
                }
            }
            prev = e.time;
        }
        Ok(Self { events, horizon, job_start, seed })
    }

    /// A trace with no events.
    pub fn empty(horizon: f64, job_start: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon, job_start, 0)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Same horizon and start, events removed.
    pub fn without_events(&self) -> Self {
        Self { events: Vec::new(), ..self.clone() }
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of instance `i` derived from a base seed.
pub fn instance_seed(base: u64, i: u64) -> u64 {
    base ^ splitmix64(i)
}

/// Independent random substreams of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Faults = 1,
    Labels = 2,
    FalsePredictions = 3,
    Inexact = 4,
    Policy = 5,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Merged, sorted fault dates of `n_units` independent renewal processes.
pub fn gen_platform_fault_trace(dist: &DistributionSpec, n_units: u64, horizon: f64, seed: u64) -> Result<Vec<f64>> {
    if n_units == 0 {
        return Err(invalid("at least one unit is required"));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    if let DistributionSpec::EmpiricalDurations { samples } = dist {
        if n_units > samples.len() as u64 {
            log::warn!(
                "{n_units} units drawn from only {} empirical durations",
                samples.len()
            );
        }
    }
    let sampler = dist.sampler()?;
    let mut rng = stream_rng(seed, Stream::Faults);
    let mut faults = Vec::new();
    for _ in 0..n_units {
        renewal_times(&sampler, horizon, &mut rng, &mut faults);
    }
    faults.sort_by(f64::total_cmp);
    Ok(faults)
}

/// Splits faults into `(predicted, unpredicted)` with one Bernoulli(r) draw each.
pub fn label_predictions(faults: &[f64], recall: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(0.0..=1.0).contains(&recall) {
        return Err(invalid(format!("recall must be in [0, 1], got {recall}")));
    }
    let mut rng = stream_rng(seed, Stream::Labels);
    let mut predicted = Vec::new();
    let mut unpredicted = Vec::new();
    for &f in faults {
        if rng.random_bool(recall) {
            predicted.push(f);
        } else {
            unpredicted.push(f);
        }
    }
    Ok((predicted, unpredicted))
}

/// Where a predicted fault actually strikes relative to its prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionMode {
    /// At the predicted date.
    Exact,
    /// Uniformly in `(t, t + window]`.
    Inexact { window: f64 },
}

/// Pairs `(prediction time, actual fault time)` for predicted faults.
pub fn place_predicted_faults(predicted: &[f64], mode: PredictionMode, seed: u64) -> Vec<(f64, f64)> {
    match mode {
        PredictionMode::Exact => predicted.iter().map(|&t| (t, t)).collect(),
        PredictionMode::Inexact { window } => {
            let mut rng = stream_rng(seed, Stream::Inexact);
            predicted
                .iter()
                .map(|&t| (t, t + window * (1.0 - rng.random::<f64>())))
                .collect()
        }
    }
}

/// Mean inter-arrival time of false predictions, `p mu / (r (1 - p))`;
/// `None` when there are none.
pub fn false_prediction_mean(pred: &PredictorParams, mu: f64) -> Option<f64> {
    if pred.precision >= 1.0 || pred.recall <= 0.0 {
        None
    } else {
        Some(pred.precision * mu / (pred.recall * (1.0 - pred.precision)))
    }
}

/// Renewal process of false predictions whose law is `family` rescaled to
/// the false-prediction mean.
pub fn gen_false_predictions(
    family: &DistributionSpec,
    pred: &PredictorParams,
    mu: f64,
    horizon: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    pred.validate()?;
    let Some(mean) = false_prediction_mean(pred, mu) else {
        return Ok(Vec::new());
    };
    let sampler = family.rescaled(mean)?.sampler()?;
    let mut rng = stream_rng(seed, Stream::FalsePredictions);
    let mut out = Vec::new();
    renewal_times(&sampler, horizon, &mut rng, &mut out);
    Ok(out)
}

/// Merges the three event lists into a trace, dropping events before `job_start`.
///
/// Ties are broken by kind (fault, true prediction, false prediction), then by
/// position in the source list.
pub fn merge_events(
    unpredicted: &[f64],
    true_predictions: &[(f64, f64)],
    false_predictions: &[f64],
    horizon: f64,
    job_start: f64,
    seed: u64,
) -> Result<EventTrace> {
    let mut keyed: Vec<(Event, usize)> = Vec::with_capacity(
        unpredicted.len() + true_predictions.len() + false_predictions.len(),
    );
    keyed.extend(unpredicted.iter().enumerate().map(|(i, &time)| {
        (Event { time, kind: EventKind::UnpredictedFault }, i)
    }));
    keyed.extend(true_predictions.iter().enumerate().map(|(i, &(time, actual))| {
        (Event { time, kind: EventKind::TruePrediction { actual_fault_time: actual } }, i)
    }));
    keyed.extend(false_predictions.iter().enumerate().map(|(i, &time)| {
        (Event { time, kind: EventKind::FalsePrediction }, i)
    }));
    keyed.retain(|(e, _)| e.time >= job_start);
    keyed.sort_by(|(a, i), (b, j)| {
        a.time
            .total_cmp(&b.time)
            .then(a.kind.rank().cmp(&b.kind.rank()))
            .then(i.cmp(j))
    });
    EventTrace::new(keyed.into_iter().map(|(e, _)| e).collect(), horizon, job_start, seed)
}

/// Mean gap between successive sorted fault dates.
pub fn estimate_platform_mtbf(faults: &[f64]) -> Result<f64> {
    if faults.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two faults, got {}",
            faults.len()
        )));
    }
    Ok((faults[faults.len() - 1] - faults[0]) / (faults.len() - 1) as f64)
}

/// `P(X >= t | X >= tau)` as a ratio of sample counts.
pub fn empirical_conditional_survival(samples: &[f64], t: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0 && t >= tau) {
        return Err(invalid(format!("need t >= tau >= 0, got t = {t}, tau = {tau}")));
    }
    let above_tau = samples.iter().filter(|&&x| x >= tau).count();
    if above_tau == 0 {
        return Err(Error::InsufficientData(format!("no sample is at least {tau}")));
    }
    let above_t = samples.iter().filter(|&&x| x >= t).count();
    Ok(above_t as f64 / above_tau as f64)
}

/// Law of false-prediction inter-arrival times.
#[derive(Debug, Clone, PartialEq)]
pub enum FalsePredictionLaw {
    /// Same family as the per-unit fault law.
    FaultFamily,
    Uniform,
}

/// Everything needed to generate one instance of a platform scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecipe {
    /// Per-unit fault inter-arrival law.
    pub unit_dist: DistributionSpec,
    pub n_units: u64,
    pub horizon: f64,
    pub job_start: f64,
    pub predictor: PredictorParams,
    pub false_law: FalsePredictionLaw,
    pub mode: PredictionMode,
}

impl TraceRecipe {
    /// Platform MTBF implied by the unit law, `mean / n_units`.
    pub fn platform_mtbf(&self) -> f64 {
        self.unit_dist.mean() / self.n_units as f64
    }

    pub fn with_mode(&self, mode: PredictionMode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Generates the trace of one instance. Exact and inexact recipes that
    /// differ only in `mode` share faults, labels and false predictions.
    pub fn generate(&self, seed: u64) -> Result<EventTrace> {
        self.predictor.validate()?;
        let faults = gen_platform_fault_trace(&self.unit_dist, self.n_units, self.horizon, seed)?;
        let (predicted, unpredicted) = label_predictions(&faults, self.predictor.recall, seed)?;
        let true_preds = place_predicted_faults(&predicted, self.mode, seed);
        let family = match self.false_law {
            FalsePredictionLaw::FaultFamily => self.unit_dist.clone(),
            FalsePredictionLaw::Uniform => DistributionSpec::UniformMean { mean: 1.0 },
        };
        let false_preds =
            gen_false_predictions(&family, &self.predictor, self.platform_mtbf(), self.horizon, seed)?;
        merge_events(&unpredicted, &true_preds, &false_preds, self.horizon, self.job_start, seed)
    }
}
