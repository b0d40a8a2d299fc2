//! Discrete-event execution of a checkpointed job against a fault trace.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{beta_lim, optimize_period};
use crate::error::{invalid, Error, Result};
use crate::model::{CostParams, PredictorParams};
use crate::tracegen::{stream_rng, EventKind, EventTrace, Stream};

/// Trust probability `q` for prediction offsets in `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustInterval {
    pub lo: f64,
    pub hi: f64,
    pub q: f64,
}

/// A checkpointing strategy with period `period`.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Never acts on predictions.
    Periodic { period: f64 },
    /// Trusts a prediction iff its offset is at least `threshold`.
    ThresholdTrust { period: f64, threshold: f64 },
    /// Trusts each actionable prediction with probability `q`.
    RandomTrust { period: f64, q: f64 },
    /// Trusts with the probability of the interval containing the offset.
    PiecewiseTrust { period: f64, intervals: Vec<TrustInterval> },
    /// Threshold trust, meant for traces with inexact fault dates.
    Inexact { period: f64, threshold: f64 },
}

impl Policy {
    pub fn period(&self) -> f64 {
        match self {
            Self::Periodic { period }
            | Self::ThresholdTrust { period, .. }
            | Self::RandomTrust { period, .. }
            | Self::PiecewiseTrust { period, .. }
            | Self::Inexact { period, .. } => *period,
        }
    }

    /// Same strategy with another period.
    pub fn with_period(&self, period: f64) -> Self {
        let mut p = self.clone();
        match &mut p {
            Self::Periodic { period: t }
            | Self::ThresholdTrust { period: t, .. }
            | Self::RandomTrust { period: t, .. }
            | Self::PiecewiseTrust { period: t, .. }
            | Self::Inexact { period: t, .. } => *t = period,
        }
        p
    }

    pub fn validate(&self, costs: &CostParams) -> Result<()> {
        let t = self.period();
        if !(t.is_finite() && t >= costs.checkpoint) {
            return Err(invalid(format!("period {t} is below the checkpoint cost {}", costs.checkpoint)));
        }
        match self {
            Self::Periodic { .. } => Ok(()),
            Self::ThresholdTrust { threshold, .. } | Self::Inexact { threshold, .. } => {
                if *threshold >= 0.0 {
                    Ok(())
                } else {
                    Err(invalid(format!("threshold must be nonnegative, got {threshold}")))
                }
            }
            Self::RandomTrust { q, .. } => check_probability(*q),
            Self::PiecewiseTrust { intervals, .. } => {
                let first = intervals.first().ok_or_else(|| invalid("no trust intervals"))?;
                if (first.lo - costs.proactive_checkpoint).abs() > 1e-9 * t.max(1.0) {
                    return Err(invalid("trust intervals must start at the proactive checkpoint cost"));
                }
                for w in intervals.windows(2) {
                    if w[0].hi != w[1].lo {
                        return Err(invalid("trust intervals must be contiguous"));
                    }
                }
                for iv in intervals {
                    if !(iv.hi > iv.lo) {
                        return Err(invalid(format!("empty trust interval [{}, {})", iv.lo, iv.hi)));
                    }
                    check_probability(iv.q)?;
                }
                if (intervals[intervals.len() - 1].hi - t).abs() > 1e-9 * t.max(1.0) {
                    return Err(invalid("trust intervals must end at the period"));
                }
                Ok(())
            }
        }
    }

    fn trusts(&self, offset: f64, rng: &mut ChaCha8Rng) -> bool {
        match self {
            Self::Periodic { .. } => false,
            Self::ThresholdTrust { threshold, .. } | Self::Inexact { threshold, .. } => offset >= *threshold,
            Self::RandomTrust { q, .. } => rng.random_bool(*q),
            Self::PiecewiseTrust { intervals, .. } => {
                let iv = intervals
                    .iter()
                    .find(|iv| offset < iv.hi)
                    .unwrap_or(&intervals[intervals.len() - 1]);
                rng.random_bool(iv.q)
            }
        }
    }
}

fn check_probability(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(invalid(format!("trust probability must be in [0, 1], got {q}")))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimCounts {
    pub unpredicted_faults_hit: u64,
    pub trusted_predictions: u64,
    pub ignored_predictions: u64,
    pub false_alarms_paid: u64,
    pub periodic_ckpts: u64,
    pub proactive_ckpts: u64,
    pub rollbacks: u64,
}

/// Where the non-useful time went.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimeLedger {
    pub checkpoint: f64,
    /// Rolled-back work plus aborted checkpoints, downtimes and recoveries.
    pub lost: f64,
    pub downtime: f64,
    pub recovery: f64,
}

impl TimeLedger {
    pub fn overhead(&self) -> f64 {
        self.checkpoint + self.lost + self.downtime + self.recovery
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOutcome {
    pub makespan: f64,
    pub waste: f64,
    pub counts: SimCounts,
    pub ledger: TimeLedger,
}

/// `(T_final - T_base) / T_final`.
pub fn waste_of(makespan: f64, t_base: f64) -> f64 {
    (makespan - t_base) / makespan
}

#[derive(Debug, Clone, Copy)]
enum Phase {
    Work,
    Regular { start: f64 },
    Proactive { start: f64, progress: f64 },
    Down { start: f64 },
    Recover { start: f64 },
}

struct Job<'a> {
    policy: &'a Policy,
    costs: &'a CostParams,
    t_base: f64,
    period: f64,
    now: f64,
    phase: Phase,
    committed: f64,
    work_since: f64,
    work_base: f64,
    period_target: f64,
    rolled_back: bool,
    counts: SimCounts,
    ledger: TimeLedger,
}

impl Job<'_> {
    fn new_period(&mut self) {
        self.period_target = self.committed + (self.period - self.costs.checkpoint).min(self.t_base - self.committed);
    }

    fn resume_work(&mut self) {
        self.phase = Phase::Work;
        self.work_since = self.now;
        self.work_base = self.committed;
    }

    fn progress(&self, at: f64) -> f64 {
        self.work_base + (at - self.work_since)
    }

    fn activity_end(&self) -> f64 {
        match self.phase {
            Phase::Work => self.work_since + (self.period_target - self.work_base),
            Phase::Regular { start } => start + self.costs.checkpoint,
            Phase::Proactive { start, .. } => start + self.costs.proactive_checkpoint,
            Phase::Down { start } => start + self.costs.downtime,
            Phase::Recover { start } => start + self.costs.recovery,
        }
    }

    /// Completes the current activity at `self.now`; returns true when the job is done.
    fn complete(&mut self) -> bool {
        match self.phase {
            Phase::Work => self.phase = Phase::Regular { start: self.now },
            Phase::Regular { .. } => {
                self.ledger.checkpoint += self.costs.checkpoint;
                self.counts.periodic_ckpts += 1;
                self.committed = self.period_target;
                if self.committed >= self.t_base {
                    return true;
                }
                self.new_period();
                self.resume_work();
            }
            Phase::Proactive { progress, .. } => {
                self.ledger.checkpoint += self.costs.proactive_checkpoint;
                self.counts.proactive_ckpts += 1;
                self.committed = progress;
                self.resume_work();
            }
            Phase::Down { .. } => {
                self.ledger.downtime += self.costs.downtime;
                self.phase = Phase::Recover { start: self.now };
            }
            Phase::Recover { .. } => {
                self.ledger.recovery += self.costs.recovery;
                if self.rolled_back {
                    self.new_period();
                    self.rolled_back = false;
                }
                self.resume_work();
            }
        }
        false
    }

    fn fault(&mut self, t: f64) {
        let lost_work = match self.phase {
            Phase::Work => self.progress(t) - self.committed,
            Phase::Regular { start } => {
                self.ledger.lost += t - start;
                self.period_target - self.committed
            }
            Phase::Proactive { start, progress } => {
                self.ledger.lost += t - start;
                progress - self.committed
            }
            Phase::Down { start } | Phase::Recover { start } => {
                self.ledger.lost += t - start;
                0.0
            }
        };
        self.ledger.lost += lost_work;
        if lost_work > 0.0 {
            self.rolled_back = true;
        }
        self.counts.rollbacks += 1;
        self.phase = Phase::Down { start: t };
    }

    /// Handles a prediction announced for time `t`; the proactive checkpoint,
    /// if any, occupies `[t - Cp, t]`.
    fn prediction(&mut self, t: f64, is_true: bool, rng: &mut ChaCha8Rng) {
        let cp = self.costs.proactive_checkpoint;
        let decision_time = t - cp;
        let working_then = match self.phase {
            Phase::Work => true,
            Phase::Regular { start } => start >= decision_time,
            _ => false,
        };
        if !(working_then && decision_time >= self.work_since) {
            self.counts.ignored_predictions += 1;
            return;
        }
        let offset = t - self.work_since;
        if !self.policy.trusts(offset, rng) {
            self.counts.ignored_predictions += 1;
            return;
        }
        self.counts.trusted_predictions += 1;
        if !is_true {
            self.counts.false_alarms_paid += 1;
        }
        self.phase = Phase::Proactive { start: decision_time, progress: self.progress(decision_time) };
    }
}

/// Runs a job of `t_base` seconds of work from `trace.job_start` under `policy`.
pub fn simulate(trace: &EventTrace, policy: &Policy, costs: &CostParams, t_base: f64, seed: u64) -> Result<SimOutcome> {
    costs.validate()?;
    policy.validate(costs)?;
    if !(t_base.is_finite() && t_base > 0.0) {
        return Err(invalid(format!("job length must be positive, got {t_base}")));
    }
    if policy.period() <= costs.checkpoint {
        // no useful work fits in a period
        return Err(Error::HorizonExhausted { horizon: trace.horizon, time: trace.job_start, progress: 0.0, total: t_base });
    }
    let mut rng = stream_rng(seed, Stream::Policy);
    let mut job = Job {
        policy,
        costs,
        t_base,
        period: policy.period(),
        now: trace.job_start,
        phase: Phase::Work,
        committed: 0.0,
        work_since: trace.job_start,
        work_base: 0.0,
        period_target: 0.0,
        rolled_back: false,
        counts: SimCounts::default(),
        ledger: TimeLedger::default(),
    };
    job.new_period();

    let events = trace.events();
    let mut next = events.partition_point(|e| e.time < trace.job_start);
    // fault dates of true predictions, earliest first
    let mut pending: BinaryHeap<Reverse<OrdF64>> = BinaryHeap::new();

    loop {
        let end = job.activity_end();
        let pending_time = pending.peek().map(|r| r.0 .0);
        let trace_time = events.get(next).map(|e| e.time);
        let event_time = match (pending_time, trace_time) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => f64::INFINITY,
        };
        if event_time < end {
            job.now = event_time;
            if pending_time == Some(event_time) {
                pending.pop();
                job.fault(event_time);
                continue;
            }
            let e = events[next];
            next += 1;
            match e.kind {
                EventKind::UnpredictedFault => {
                    job.counts.unpredicted_faults_hit += 1;
                    job.fault(e.time);
                }
                EventKind::TruePrediction { actual_fault_time } => {
                    pending.push(Reverse(OrdF64(actual_fault_time)));
                    job.prediction(e.time, true, &mut rng);
                }
                EventKind::FalsePrediction => job.prediction(e.time, false, &mut rng),
            }
            continue;
        }
        if end > trace.horizon {
            return Err(Error::HorizonExhausted {
                horizon: trace.horizon,
                time: job.now,
                progress: job.committed,
                total: t_base,
            });
        }
        job.now = end;
        if job.complete() {
            break;
        }
    }

    let makespan = job.now - trace.job_start;
    let balance = makespan - (t_base + job.ledger.overhead());
    if balance.abs() > 1e-9 * makespan.max(1.0) {
        return Err(Error::Precondition(format!(
            "time ledger does not balance: makespan {makespan}, residual {balance}"
        )));
    }
    Ok(SimOutcome { makespan, waste: waste_of(makespan, t_base), counts: job.counts, ledger: job.ledger })
}

/// Threshold-trust policy at the recommended period, with threshold `Cp/p`.
pub fn optimal_prediction_policy(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<Policy> {
    let rec = optimize_period(mu, pred, costs)?;
    Ok(Policy::ThresholdTrust { period: rec.period, threshold: beta_lim(costs, pred) })
}

pub fn run_optimal_prediction(
    trace: &EventTrace,
    mu: f64,
    pred: &PredictorParams,
    costs: &CostParams,
    t_base: f64,
) -> Result<SimOutcome> {
    simulate(trace, &optimal_prediction_policy(mu, pred, costs)?, costs, t_base, trace.seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
