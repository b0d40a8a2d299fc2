//! Brute-force search for the best fixed period of a policy family.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::model::CostParams;
use crate::simulator::{simulate, Policy};
use crate::tracegen::EventTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpec {
    /// Candidate periods, strictly increasing.
    pub grid: Vec<f64>,
    pub refinement_rounds: usize,
}

impl SearchSpec {
    /// 30 geometric points over `[max(C, T_ref/10), 10 T_ref]` plus `T_ref`, two refinement rounds.
    pub fn around(t_ref: f64, checkpoint: f64) -> Self {
        let lo = checkpoint.max(t_ref / 10.0);
        let hi = (10.0 * t_ref).max(lo);
        let n = 30;
        let mut grid: Vec<f64> = (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect();
        grid.push(t_ref.max(checkpoint));
        sort_dedup(&mut grid);
        Self { grid, refinement_rounds: 2 }
    }

    pub fn validate(&self, checkpoint: f64) -> Result<()> {
        if self.grid.is_empty() {
            return Err(invalid("search grid is empty"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("search grid must be strictly increasing"));
        }
        if self.grid[0] < checkpoint {
            return Err(invalid(format!("grid starts below the checkpoint cost {checkpoint}")));
        }
        Ok(())
    }
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub period: f64,
    pub mean_waste: f64,
    pub stderr: f64,
    pub mean_makespan: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: CandidateScore,
    /// Every evaluated candidate, sorted by period.
    pub evaluated: Vec<CandidateScore>,
}

/// Mean outcome of `policy` over `traces`; trace `i` uses its own seed.
pub fn evaluate(policy: &Policy, traces: &[EventTrace], costs: &CostParams, t_base: f64) -> Result<CandidateScore> {
    if traces.is_empty() {
        return Err(invalid("no traces to evaluate"));
    }
    if policy.period() <= costs.checkpoint {
        // a period made only of checkpointing never completes the job
        return Ok(CandidateScore { period: policy.period(), mean_waste: 1.0, stderr: 0.0, mean_makespan: f64::INFINITY });
    }
    let outcomes = traces
        .par_iter()
        .map(|tr| simulate(tr, policy, costs, t_base, tr.seed).map(|o| (o.waste, o.makespan)))
        .collect::<Result<Vec<(f64, f64)>>>();
    let outcomes = match outcomes {
        Ok(o) => o,
        // the job cannot finish within some trace at this period
        Err(Error::HorizonExhausted { .. }) => {
            return Ok(CandidateScore { period: policy.period(), mean_waste: 1.0, stderr: 0.0, mean_makespan: f64::INFINITY })
        }
        Err(e) => return Err(e),
    };
    let wastes: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (mean_waste, stderr) = mean_stderr(&wastes);
    let mean_makespan = outcomes.iter().map(|o| o.1).sum::<f64>() / outcomes.len() as f64;
    Ok(CandidateScore { period: policy.period(), mean_waste, stderr, mean_makespan })
}

/// Sample mean and standard error (sample standard deviation over sqrt(n)).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evaluates every grid period of `family` on the same traces and returns the
/// one with the smallest mean waste (smaller period on ties), then refines
/// around it.
pub fn best_period(
    family: &Policy,
    traces: &[EventTrace],
    costs: &CostParams,
    t_base: f64,
    spec: &SearchSpec,
) -> Result<SearchResult> {
    spec.validate(costs.checkpoint)?;
    let mut evaluated: Vec<CandidateScore> = Vec::new();
    let mut grid = spec.grid.clone();
    for round in 0..=spec.refinement_rounds {
        let fresh: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|t| !evaluated.iter().any(|c| c.period == *t))
            .collect();
        for t in fresh {
            evaluated.push(evaluate(&family.with_period(t), traces, costs, t_base)?);
        }
        evaluated.sort_by(|a, b| a.period.total_cmp(&b.period));
        let best = incumbent(&evaluated);
        log::debug!("search round {round}: best period {} waste {}", evaluated[best].period, evaluated[best].mean_waste);
        if round == spec.refinement_rounds {
            break;
        }
        let lo = evaluated[best.saturating_sub(1)].period;
        let hi = evaluated[(best + 1).min(evaluated.len() - 1)].period;
        if hi <= lo {
            break;
        }
        grid = (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
    }
    let best = evaluated[incumbent(&evaluated)];
    Ok(SearchResult { best, evaluated })
}

fn incumbent(sorted: &[CandidateScore]) -> usize {
    let mut best = 0;
    for (i, c) in sorted.iter().enumerate() {
        if c.mean_waste < sorted[best].mean_waste {
            best = i;
        }
    }
    best
}
