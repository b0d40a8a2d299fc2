//! Closed-form waste and optimal checkpoint periods.
//!
//! Without prediction the first-order waste of a period `T` is
//! `C/T + (1 - C/T)(D + R + T/2)/mu`. With a predictor trusted only for
//! predictions falling at least `Cp/p` into the period, the waste is
//! piecewise: [`waste_1`] below `Cp/p` and [`waste_2`] above it.

pub mod roots;

use crate::error::{invalid, precondition, Error, Result};
use crate::model::{CostParams, PredictorParams};

const CUBIC_REL_TOL: f64 = 1e-9;
const EXPONENTIAL_ABS_TOL: f64 = 0.5;

/// The two factors of the total waste and their composition
/// `total = ff + fault - ff * fault`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WasteBreakdown {
    pub waste_ff: f64,
    pub waste_fault: f64,
    pub waste_total: f64,
    /// False when a component left `[0, 1]`; the model is first-order and
    /// values are reported as computed, not clamped.
    pub valid: bool,
}

impl WasteBreakdown {
    pub fn compose(waste_ff: f64, waste_fault: f64) -> Self {
        let waste_total = waste_ff + waste_fault - waste_ff * waste_fault;
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        Self {
            waste_ff,
            waste_fault,
            waste_total,
            valid: unit(waste_ff) && unit(waste_fault) && unit(waste_total),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    NoPrediction,
    Prediction,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::NoPrediction => "no-prediction",
            Branch::Prediction => "prediction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodRecommendation {
    pub period: f64,
    pub predicted_waste: f64,
    pub branch: Branch,
    /// The period sits on a bound (`C` or `Cp/p`) rather than at the interior
    /// stationary point.
    pub clamped: bool,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("MTBF must be positive and finite, got {mu}")))
    }
}

/// Young: `sqrt(2 mu C) + C`.
pub fn period_young(mu: f64, checkpoint: f64) -> f64 {
    (2.0 * mu * checkpoint).sqrt() + checkpoint
}

/// Daly's first-order period: `sqrt(2 (mu + D + R) C) + C`.
pub fn period_daly(mu: f64, costs: &CostParams) -> f64 {
    (2.0 * (mu + costs.downtime_recovery()) * costs.checkpoint).sqrt() + costs.checkpoint
}

/// Refined first-order period `sqrt(2 (mu - (D + R)) C)`.
pub fn period_rfo(mu: f64, costs: &CostParams) -> Result<f64> {
    check_mu(mu)?;
    let dr = costs.downtime_recovery();
    if mu <= dr {
        return Err(precondition(format!(
            "RFO needs mu > D + R (mu = {mu}, D + R = {dr})"
        )));
    }
    Ok((2.0 * (mu - dr) * costs.checkpoint).sqrt())
}

pub fn waste_no_prediction(period: f64, mu: f64, costs: &CostParams) -> Result<WasteBreakdown> {
    check_mu(mu)?;
    let c = costs.checkpoint;
    if !(period >= c) {
        return Err(precondition(format!("period {period} shorter than checkpoint {c}")));
    }
    let ff = c / period;
    let fault = (costs.downtime_recovery() + period / 2.0) / mu;
    Ok(WasteBreakdown::compose(ff, fault))
}

/// Expected makespan for Exponential faults:
/// `(mu + D) e^{R/mu} (e^{T/mu} - 1) T_base / (T - C)`.
pub fn exact_exponential_makespan(period: f64, mu: f64, costs: &CostParams, t_base: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(period > costs.checkpoint) {
        return Err(precondition(format!(
            "period {period} must exceed checkpoint {}",
            costs.checkpoint
        )));
    }
    if !(t_base > 0.0) {
        return Err(invalid(format!("base time must be > 0, got {t_base}")));
    }
    Ok((mu + costs.downtime) * (costs.recovery / mu).exp() * (period / mu).exp_m1() * t_base
        / (period - costs.checkpoint))
}

/// Exact optimal period for Exponential faults, by golden-section
/// minimization of `(e^{T/mu} - 1) / (T - C)` on `[C + 1, 5 (sqrt(2 mu C) + C)]`.
pub fn period_optimal_exponential(mu: f64, checkpoint: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(checkpoint > 0.0 && checkpoint < mu) {
        return Err(precondition(format!(
            "need 0 < C < mu (C = {checkpoint}, mu = {mu})"
        )));
    }
    let objective = |t: f64| (t / mu).exp_m1() / (t - checkpoint);
    let hi = 5.0 * period_young(mu, checkpoint);
    roots::golden_section_min(objective, checkpoint + 1.0, hi, EXPONENTIAL_ABS_TOL)
}

/// Stationary point of the Exponential makespan in Lambert form,
/// `mu (1 + C/mu + W0(-e^{-C/mu - 1}))`. Diagnostic only; the authoritative
/// value is [`period_optimal_exponential`].
pub fn period_optimal_exponential_lambert(mu: f64, checkpoint: f64) -> Result<f64> {
    check_mu(mu)?;
    let c = checkpoint / mu;
    let w = roots::lambert_w0(-(-c - 1.0).exp())?;
    Ok(mu * (1.0 + c + w))
}

/// Waste of the randomized policy that trusts each actionable prediction
/// with probability `q`.
pub fn waste_simple_policy(
    period: f64,
    q: f64,
    mu: f64,
    pred: &PredictorParams,
    costs: &CostParams,
) -> Result<WasteBreakdown> {
    check_mu(mu)?;
    pred.validate()?;
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid(format!("trust probability must lie in [0, 1], got {q}")));
    }
    let (c, cp) = (costs.checkpoint, costs.proactive_checkpoint);
    if !(period >= c.max(cp)) {
        return Err(precondition(format!(
            "period {period} shorter than max(C, Cp) = {}",
            c.max(cp)
        )));
    }
    let (r, p) = (pred.recall, pred.precision);
    let qr = q * r;
    let fault = ((1.0 - qr) * period / 2.0 + costs.downtime_recovery() + qr / p * cp
        - qr * cp * cp / (p * period) * (1.0 - p / 2.0))
        / mu;
    Ok(WasteBreakdown::compose(c / period, fault))
}

/// Break-even offset `Cp / p`: predictions earlier in the period are not
/// worth a proactive checkpoint.
pub fn beta_lim(costs: &CostParams, pred: &PredictorParams) -> f64 {
    costs.proactive_checkpoint / pred.precision
}

/// Coefficients of `waste_2(T) = u/T^2 + v/T + w + x T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionWasteCoefficients {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub x: f64,
}

impl PredictionWasteCoefficients {
    pub fn new(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Self {
        let (r, p) = (pred.recall, pred.precision);
        let (c, cp) = (costs.checkpoint, costs.proactive_checkpoint);
        let dr = costs.downtime_recovery();
        let quad = r * cp * cp / (2.0 * mu * p * p);
        Self {
            u: c * quad,
            v: c * (1.0 - (r * cp / p + dr) / mu) - quad,
            w: (-(1.0 - r) * c / 2.0 + r * cp / p + dr) / mu,
            x: (1.0 - r) / (2.0 * mu),
        }
    }

    pub fn eval(&self, period: f64) -> f64 {
        self.u / (period * period) + self.v / period + self.w + self.x * period
    }
}

/// Waste when no prediction is ever acted upon (`T <= Cp/p`).
pub fn waste_1(period: f64, mu: f64, costs: &CostParams) -> f64 {
    let c = costs.checkpoint;
    let dr = costs.downtime_recovery();
    c * (1.0 - dr / mu) / period + (dr - c / 2.0) / mu + period / (2.0 * mu)
}

/// Waste when predictions in `[Cp/p, T]` are acted upon (`T >= Cp/p`).
pub fn waste_2(period: f64, mu: f64, pred: &PredictorParams, costs: &CostParams) -> f64 {
    PredictionWasteCoefficients::new(mu, pred, costs).eval(period)
}

/// Piecewise waste of the threshold policy with threshold `Cp/p`.
pub fn waste_with_prediction(period: f64, mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    check_mu(mu)?;
    pred.validate()?;
    if !(period >= costs.checkpoint) {
        return Err(precondition(format!(
            "period {period} shorter than checkpoint {}",
            costs.checkpoint
        )));
    }
    if period <= beta_lim(costs, pred) {
        Ok(waste_1(period, mu, costs))
    } else {
        Ok(waste_2(period, mu, pred, costs))
    }
}

/// Best period on `[C, Cp/p]`: `max(C, min(T_RFO, Cp/p))`.
pub fn period_no_pred(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    pred.validate()?;
    let rfo = period_rfo(mu, costs)?;
    Ok(costs.checkpoint.max(rfo.min(beta_lim(costs, pred))))
}

/// Minimizer of [`waste_2`] over `(0, inf)`: the best nonnegative real root of
/// the derivative polynomial `x T^3 - v T - 2u`.
pub fn period_extremum(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    check_mu(mu)?;
    pred.validate()?;
    if pred.recall >= 1.0 {
        return Err(precondition("recall 1 leaves no periodic regime (x = 0)"));
    }
    let k = PredictionWasteCoefficients::new(mu, pred, costs);
    if k.u == 0.0 {
        // x T^3 - v T = 0: the zero root is spurious
        return Ok((k.v.max(0.0) / k.x).sqrt());
    }
    let candidates: Vec<f64> = if k.v >= 0.0 {
        // convex: exactly one positive root, bracketed explicitly
        let poly = |t: f64| (k.x * t * t * t - k.v * t - 2.0 * k.u, 3.0 * k.x * t * t - k.v);
        let mut hi = (10.0 * (k.v / k.x + 1.0).sqrt()).max(10.0 * (2.0 * k.u / k.x).cbrt());
        let mut doublings = 0;
        while poly(hi).0 <= 0.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::NonConvergence("cannot bracket waste extremum".into()));
            }
        }
        vec![roots::newton_bisect(poly, f64::MIN_POSITIVE, hi, CUBIC_REL_TOL)?]
    } else {
        roots::nonnegative_cubic_roots(k.x, 0.0, -k.v, -2.0 * k.u, CUBIC_REL_TOL)?
    };
    candidates
        .into_iter()
        .filter(|&t| t > 0.0)
        .min_by(|a, b| k.eval(*a).total_cmp(&k.eval(*b)))
        .ok_or_else(|| Error::NonConvergence("derivative of waste has no positive root".into()))
}

/// Best period on `[max(C, Cp/p), inf)`.
pub fn period_pred(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<f64> {
    let k = PredictionWasteCoefficients::new(mu, pred, costs);
    let extremum = period_extremum(mu, pred, costs)?;
    let bound = costs.checkpoint.max(beta_lim(costs, pred));
    if k.v >= 0.0 {
        return Ok(bound.max(extremum));
    }
    // nonconvex case: compare the admissible roots with the lower bound
    let mut best = bound;
    for t in roots::nonnegative_cubic_roots(k.x, 0.0, -k.v, -2.0 * k.u, CUBIC_REL_TOL)? {
        if t >= bound && k.eval(t) < k.eval(best) {
            best = t;
        }
    }
    Ok(best)
}

/// Large-MTBF approximation `sqrt(2 mu C / (1 - r))`.
pub fn period_pred_approx(mu: f64, checkpoint: f64, recall: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(0.0..1.0).contains(&recall) {
        return Err(precondition(format!("need 0 <= r < 1, got {recall}")));
    }
    Ok((2.0 * mu * checkpoint / (1.0 - recall)).sqrt())
}

/// Chooses between ignoring the predictor (`T_NoPred`) and the threshold
/// policy (`T_Pred`), whichever gives the lower waste. Ties go to the
/// prediction branch. With recall 0 both wastes coincide above `Cp/p`, so the
/// result is the minimizer over `[C, inf)`, reported as no-prediction.
pub fn optimize_period(mu: f64, pred: &PredictorParams, costs: &CostParams) -> Result<PeriodRecommendation> {
    let rfo = period_rfo(mu, costs)?;
    let no_pred = period_no_pred(mu, pred, costs)?;
    let no_pred_waste = waste_1(no_pred, mu, costs);
    let with_pred = period_pred(mu, pred, costs)?;
    let with_pred_waste = waste_2(with_pred, mu, pred, costs);

    if with_pred_waste <= no_pred_waste {
        let branch = if pred.recall > 0.0 {
            Branch::Prediction
        } else {
            Branch::NoPrediction
        };
        let interior = match branch {
            Branch::Prediction => period_extremum(mu, pred, costs)?,
            Branch::NoPrediction => rfo,
        };
        Ok(PeriodRecommendation {
            period: with_pred,
            predicted_waste: with_pred_waste,
            branch,
            clamped: with_pred != interior,
        })
    } else {
        Ok(PeriodRecommendation {
            period: no_pred,
            predicted_waste: no_pred_waste,
            branch: Branch::NoPrediction,
            clamped: no_pred != rfo,
        })
    }
}
