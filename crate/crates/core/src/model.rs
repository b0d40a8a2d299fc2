//! Domain parameters and the fault-rate algebra shared by every other module.
//!
//! All durations are `f64` seconds. A year is 365 days.

use crate::error::{invalid, Result};

pub const MINUTE: f64 = 60.0;
pub const HOUR: f64 = 3_600.0;
pub const DAY: f64 = 86_400.0;
pub const YEAR: f64 = 365.0 * DAY;

/// Default cap factor for the admissible period interval `[C, alpha * mu]`.
pub const DEFAULT_ALPHA: f64 = 0.27;

/// Parses a duration such as `600`, `10min`, `1.5h`, `2d` or `125y` into seconds.
pub fn parse_duration(text: &str) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic())
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| invalid(format!("bad duration `{text}`")))?;
    let scale = match unit.trim() {
        "" | "s" => 1.0,
        "min" | "m" => MINUTE,
        "h" => HOUR,
        "d" => DAY,
        "y" => YEAR,
        other => return Err(invalid(format!("unknown duration unit `{other}` in `{text}`"))),
    };
    let seconds = value * scale;
    if !seconds.is_finite() {
        return Err(invalid(format!("duration `{text}` is not finite")));
    }
    Ok(seconds)
}

/// Checkpoint, proactive checkpoint, downtime and recovery durations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Regular (periodic) checkpoint `C`.
    pub checkpoint: f64,
    /// Proactive checkpoint `Cp`, taken just before a trusted prediction.
    pub proactive_checkpoint: f64,
    /// Downtime `D` after each fault.
    pub downtime: f64,
    /// Recovery `R` from the last checkpoint.
    pub recovery: f64,
}

impl CostParams {
    pub fn new(checkpoint: f64, proactive_checkpoint: f64, downtime: f64, recovery: f64) -> Result<Self> {
        let costs = Self {
            checkpoint,
            proactive_checkpoint,
            downtime,
            recovery,
        };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.checkpoint,
            self.proactive_checkpoint,
            self.downtime,
            self.recovery,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("cost parameters must be finite: {self:?}")));
        }
        if self.checkpoint <= 0.0 {
            return Err(invalid(format!("checkpoint C must be > 0, got {}", self.checkpoint)));
        }
        if self.proactive_checkpoint < 0.0 || self.downtime < 0.0 || self.recovery < 0.0 {
            return Err(invalid(format!("Cp, D and R must be >= 0: {self:?}")));
        }
        Ok(())
    }

    /// `D + R`, the fixed cost paid after every fault.
    pub fn downtime_recovery(&self) -> f64 {
        self.downtime + self.recovery
    }
}

/// Recall `r` and precision `p` of a fault predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    pub recall: f64,
    pub precision: f64,
}

impl PredictorParams {
    pub fn new(recall: f64, precision: f64) -> Result<Self> {
        let pred = Self { recall, precision };
        pred.validate()?;
        Ok(pred)
    }

    /// A predictor that never announces anything.
    pub fn none() -> Self {
        Self {
            recall: 0.0,
            precision: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.recall) {
            return Err(invalid(format!("recall must lie in [0, 1], got {}", self.recall)));
        }
        if !(self.precision > 0.0 && self.precision <= 1.0) {
            return Err(invalid(format!(
                "precision must lie in (0, 1], got {}",
                self.precision
            )));
        }
        Ok(())
    }
}

/// `N` identical components with individual MTBF `mu_ind`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformParams {
    pub n_processors: u64,
    pub individual_mtbf: f64,
}

impl PlatformParams {
    pub fn new(n_processors: u64, individual_mtbf: f64) -> Result<Self> {
        if n_processors == 0 {
            return Err(invalid("platform needs at least one processor"));
        }
        if !(individual_mtbf > 0.0 && individual_mtbf.is_finite()) {
            return Err(invalid(format!(
                "individual MTBF must be positive and finite, got {individual_mtbf}"
            )));
        }
        Ok(Self {
            n_processors,
            individual_mtbf,
        })
    }
}

/// Platform MTBF `mu = mu_ind / N`.
pub fn mu_platform(platform: &PlatformParams) -> f64 {
    platform.individual_mtbf / platform.n_processors as f64
}

/// Mean times between the different event classes. Infinite values mean the
/// class never occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRates {
    /// `mu`: all actual faults.
    pub platform_mtbf: f64,
    /// `mu_P`: predictions, true and false.
    pub predicted_mtbf: f64,
    /// `mu_NP`: unpredicted faults.
    pub unpredicted_mtbf: f64,
    /// `mu_e`: every event (predictions plus unpredicted faults).
    pub event_mtbf: f64,
}

/// Splits the platform fault rate into predicted and unpredicted streams.
pub fn derive_rates(mu: f64, pred: &PredictorParams) -> Result<EventRates> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!("MTBF must be positive and finite, got {mu}")));
    }
    pred.validate()?;
    let r = pred.recall;
    let p = pred.precision;

    let unpredicted_mtbf = if r >= 1.0 { f64::INFINITY } else { mu / (1.0 - r) };
    let predicted_mtbf = if r <= 0.0 { f64::INFINITY } else { p * mu / r };
    let event_rate = recip(predicted_mtbf) + recip(unpredicted_mtbf);

    Ok(EventRates {
        platform_mtbf: mu,
        predicted_mtbf,
        unpredicted_mtbf,
        event_mtbf: 1.0 / event_rate,
    })
}

fn recip(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

/// Probability of two or more faults in a window of length `t` when faults
/// form a Poisson process of mean inter-arrival `mu`.
pub fn multi_fault_probability(t: f64, mu: f64) -> f64 {
    let beta = t / mu;
    // 1 - (1 + b) e^-b, written to stay accurate for tiny b
    -(-beta).exp_m1() - beta * (-beta).exp()
}

/// The interval `[C, alpha * mu_ref]` of periods for which the first-order
/// waste model is trusted, plus the companion sanity checks on `C` and `D + R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    downtime_recovery: f64,
}

impl AdmissibleInterval {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    /// `C <= alpha * mu_ref`.
    pub fn checkpoint_fits(&self) -> bool {
        self.lower <= self.upper
    }

    /// `D + R <= alpha * mu_ref`.
    pub fn downtime_recovery_fits(&self) -> bool {
        self.downtime_recovery <= self.upper
    }

    pub fn contains(&self, period: f64) -> bool {
        !self.is_empty() && period >= self.lower && period <= self.upper
    }

    /// Clamps `period` into the interval; `None` when the interval is empty.
    pub fn clamp(&self, period: f64) -> Option<f64> {
        (!self.is_empty()).then(|| period.clamp(self.lower, self.upper))
    }
}

pub fn admissible_interval(costs: &CostParams, mu_ref: f64, alpha: f64) -> Result<AdmissibleInterval> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be > 0, got {alpha}")));
    }
    if !(mu_ref > 0.0) {
        return Err(invalid(format!("reference MTBF must be > 0, got {mu_ref}")));
    }
    Ok(AdmissibleInterval {
        lower: costs.checkpoint,
        upper: alpha * mu_ref,
        alpha,
        downtime_recovery: costs.downtime_recovery(),
    })
}
