//! One test per acceptance criterion; each prints a PASS/FAIL line.

use rayon::prelude::*;

use ckpt_core::analysis::{
    beta_lim, optimize_period, period_daly, period_optimal_exponential, period_rfo, period_young,
    waste_no_prediction, waste_simple_policy, waste_1, waste_2, waste_with_prediction,
};
use ckpt_core::harness::period_row;
use ckpt_core::model::{mu_platform, CostParams, PlatformParams, PredictorParams, DAY, YEAR};
use ckpt_core::search::{best_period, evaluate, SearchSpec};
use ckpt_core::simulator::{simulate, Policy};
use ckpt_core::tracegen::{
    estimate_platform_mtbf, gen_platform_fault_trace, instance_seed, DistributionSpec, Event, EventKind,
    EventTrace, FalsePredictionLaw, PredictionMode, TraceRecipe,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances and sizes
const TABLE_FIRST_ORDER_TOL_S: f64 = 1.0;
const TABLE_OPTIMAL_TOL_S: f64 = 2.0;
const CONTINUITY_REL_TOL: f64 = 1e-10;
const REDUCTION_REL_TOL: f64 = 1e-12;
const PROPERTY_DRAWS: usize = 1_000;
const ENDPOINT_DRAWS: usize = 100;
const SIM_INSTANCES: usize = 50;
const WEIBULL_INSTANCES: usize = 20;
const ANALYSIS_REL_TOL: f64 = 0.10;
const GAIN_2_16: (f64, f64) = (8.0, 3.0);
const GAIN_2_19: (f64, f64) = (19.0, 4.0);
const GAIN_WEIBULL: (f64, f64) = (37.0, 8.0);
const MTBF_ESTIMATE_REL_TOL: f64 = 0.03;
const BEST_PERIOD_REL_TOL: f64 = 0.10;
const BEST_PERIOD_INSTANCES: usize = 100;
const SIGMA: f64 = 2.0;
const SEED: u64 = 2013;

const TABLE_1: [(u32, f64, f64, f64, f64); 10] = [
    (10, 68_567.0, 68_573.0, 67_961.0, 68_240.0),
    (11, 48_660.0, 48_668.0, 48_052.0, 48_320.0),
    (12, 34_584.0, 34_595.0, 33_972.0, 34_189.0),
    (13, 24_630.0, 24_646.0, 24_014.0, 24_231.0),
    (14, 17_592.0, 17_615.0, 16_968.0, 17_194.0),
    (15, 12_615.0, 12_648.0, 11_982.0, 12_218.0),
    (16, 9_096.0, 9_142.0, 8_449.0, 8_701.0),
    (17, 6_608.0, 6_673.0, 5_941.0, 6_214.0),
    (18, 4_848.0, 4_940.0, 4_154.0, 4_458.0),
    (19, 3_604.0, 3_733.0, 2_869.0, 3_218.0),
];

fn report(criterion: &str, ok: bool, detail: String) {
    println!("{} {criterion}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

fn table_costs() -> CostParams {
    CostParams::new(600.0, 600.0, 60.0, 600.0).unwrap()
}

fn good_predictor() -> PredictorParams {
    PredictorParams::new(0.85, 0.82).unwrap()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Synthetic platform of `n` processors with individual MTBF of 125 years.
struct Scenario {
    recipe: TraceRecipe,
    mu: f64,
    t_base: f64,
    costs: CostParams,
    pred: PredictorParams,
}

impl Scenario {
    fn new(unit_dist: DistributionSpec, n: u64, pred: PredictorParams) -> Self {
        let recipe = TraceRecipe {
            unit_dist,
            n_units: n,
            horizon: 2.0 * YEAR,
            job_start: YEAR,
            predictor: pred,
            false_law: FalsePredictionLaw::FaultFamily,
            mode: PredictionMode::Exact,
        };
        Self { mu: recipe.platform_mtbf(), recipe, t_base: 10_000.0 * YEAR / n as f64, costs: table_costs(), pred }
    }

    fn exponential(n: u64) -> Self {
        Self::new(DistributionSpec::Exponential { mean: 125.0 * YEAR }, n, good_predictor())
    }

    fn traces(&self, instances: usize, mode: PredictionMode) -> Vec<EventTrace> {
        let recipe = self.recipe.with_mode(mode);
        (0..instances as u64)
            .into_par_iter()
            .map(|i| recipe.generate(instance_seed(SEED, i)).unwrap())
            .collect()
    }

    fn inexact(&self) -> PredictionMode {
        PredictionMode::Inexact { window: 2.0 * self.costs.checkpoint }
    }

    /// Per-instance `(waste, makespan)`.
    fn run(&self, policy: &Policy, traces: &[EventTrace]) -> (Vec<f64>, Vec<f64>) {
        traces
            .par_iter()
            .map(|t| {
                let o = simulate(t, policy, &self.costs, self.t_base, t.seed).unwrap();
                (o.waste, o.makespan)
            })
            .unzip()
    }

    fn rfo(&self) -> Policy {
        Policy::Periodic { period: period_rfo(self.mu, &self.costs).unwrap() }
    }

    fn optimal_prediction(&self) -> Policy {
        let t = optimize_period(self.mu, &self.pred, &self.costs).unwrap().period;
        Policy::ThresholdTrust { period: t, threshold: beta_lim(&self.costs, &self.pred) }
    }

    fn inexact_prediction(&self) -> Policy {
        let t = optimize_period(self.mu, &self.pred, &self.costs).unwrap().period;
        Policy::Inexact { period: t, threshold: beta_lim(&self.costs, &self.pred) }
    }
}

fn gain_percent(base: &[f64], other: &[f64]) -> f64 {
    let b = base.iter().sum::<f64>() / base.len() as f64;
    let o = other.iter().sum::<f64>() / other.len() as f64;
    100.0 * (b - o) / b
}

/// `a <= b` holds, or the paired difference is within `SIGMA` standard errors.
fn ordered_or_tie(a: &[f64], b: &[f64]) -> (bool, String) {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let (m, se) = mean_se(&diffs);
    let ok = m >= -SIGMA * se;
    let verdict = if m.abs() <= SIGMA * se { "tie" } else if m > 0.0 { "ordered" } else { "reversed" };
    (ok, format!("gap {:.3} d ± {:.3} d ({verdict})", m / DAY, se / DAY))
}

#[test]
fn criterion_01_period_table() {
    let costs = table_costs();
    let mut misses = Vec::new();
    for &(k, young, daly, rfo, optimal) in &TABLE_1 {
        let n = 1u64 << k;
        let mu = mu_platform(&PlatformParams::new(n, 125.0 * YEAR).unwrap());
        let row = period_row(n, mu, &costs).unwrap();
        for (name, got, want, tol) in [
            ("Young", row.young_s, young, TABLE_FIRST_ORDER_TOL_S),
            ("Daly", row.daly_s, daly, TABLE_FIRST_ORDER_TOL_S),
            ("RFO", row.rfo_s, rfo, TABLE_FIRST_ORDER_TOL_S),
            ("Optimal", row.optimal_s, optimal, TABLE_OPTIMAL_TOL_S),
        ] {
            if (got.round() - want).abs() > tol {
                misses.push(format!("2^{k} {name} {got:.1} vs {want}"));
            }
        }
    }
    report(
        "criterion 1 (period table)",
        misses.is_empty(),
        if misses.is_empty() { "all rows within tolerance".into() } else { misses.join("; ") },
    );
}

fn random_params(rng: &mut ChaCha8Rng) -> (f64, CostParams, PredictorParams) {
    let mu = 10f64.powf(rng.random_range(3.0..7.0));
    let mut span = || rng.random_range(1.0..=0.1 * mu);
    let costs = CostParams::new(span(), span(), span(), span()).unwrap();
    let p = 1.0 - rng.random::<f64>();
    let r = rng.random_range(0.0..1.0);
    (mu, costs, PredictorParams::new(r, p).unwrap())
}

#[test]
fn criterion_02_formula_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_cont: f64 = 0.0;
    let mut worst_red: f64 = 0.0;
    for _ in 0..PROPERTY_DRAWS {
        let (mu, costs, pred) = random_params(&mut rng);
        let b = beta_lim(&costs, &pred);
        let w1 = waste_1(b, mu, &costs);
        let w2 = waste_2(b, mu, &pred, &costs);
        worst_cont = worst_cont.max((w1 - w2).abs() / w1.abs().max(1.0));

        let zero = PredictorParams::new(0.0, pred.precision).unwrap();
        let t = costs.checkpoint * (1.0 + 50.0 * rng.random::<f64>());
        let a = waste_with_prediction(t, mu, &zero, &costs).unwrap();
        let e = waste_no_prediction(t, mu, &costs).unwrap().waste_total;
        worst_red = worst_red.max((a - e).abs() / e.abs().max(1.0));
    }
    report(
        "criterion 2 (formula identities)",
        worst_cont <= CONTINUITY_REL_TOL && worst_red <= REDUCTION_REL_TOL,
        format!("continuity {worst_cont:.2e}, reduction {worst_red:.2e} over {PROPERTY_DRAWS} draws"),
    );
}

#[test]
fn criterion_03_endpoint_trust() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut violations = 0;
    for _ in 0..ENDPOINT_DRAWS {
        let (mu, costs, pred) = random_params(&mut rng);
        let t = costs.checkpoint.max(costs.proactive_checkpoint) * (1.0 + 20.0 * rng.random::<f64>());
        let at = |q: f64| waste_simple_policy(t, q, mu, &pred, &costs).unwrap().waste_total;
        let best = at(0.0).min(at(1.0));
        if [0.25, 0.5, 0.75].iter().any(|&q| best > at(q)) {
            violations += 1;
        }
    }
    report(
        "criterion 3 (endpoint trust)",
        violations == 0,
        format!("{violations} violations over {ENDPOINT_DRAWS} parameter sets"),
    );
}

#[test]
fn criterion_04_threshold_sweep() {
    let sc = Scenario::exponential(1 << 16);
    let traces = sc.traces(SIM_INSTANCES, PredictionMode::Exact);
    let t = optimize_period(sc.mu, &sc.pred, &sc.costs).unwrap().period;
    let b = beta_lim(&sc.costs, &sc.pred);
    let scores: Vec<(f64, f64, f64)> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&f| {
            let (w, _) = sc.run(&Policy::ThresholdTrust { period: t, threshold: f * b }, &traces);
            let (m, se) = mean_se(&w);
            (f, m, se)
        })
        .collect();
    let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let at_lim = scores.iter().find(|s| s.0 == 1.0).unwrap();
    let detail = scores.iter().map(|s| format!("{}x: {:.5}±{:.5}", s.0, s.1, s.2)).collect::<Vec<_>>().join(", ");
    report("criterion 4 (trust threshold sweep)", at_lim.1 - min <= SIGMA * at_lim.2, detail);
}

#[test]
fn criterion_05_simulation_matches_analysis() {
    let sc = Scenario::exponential(1 << 16);
    let traces = sc.traces(SIM_INSTANCES, PredictionMode::Exact);
    let t_rfo = period_rfo(sc.mu, &sc.costs).unwrap();
    let (w_rfo, _) = sc.run(&sc.rfo(), &traces);
    let (sim_rfo, _) = mean_se(&w_rfo);
    let ana_rfo = waste_no_prediction(t_rfo, sc.mu, &sc.costs).unwrap().waste_total;

    let rec = optimize_period(sc.mu, &sc.pred, &sc.costs).unwrap();
    let (w_opt, _) = sc.run(&sc.optimal_prediction(), &traces);
    let (sim_opt, _) = mean_se(&w_opt);
    let ana_opt = waste_with_prediction(rec.period, sc.mu, &sc.pred, &sc.costs).unwrap();

    let err_rfo = (sim_rfo - ana_rfo).abs() / ana_rfo;
    let err_opt = (sim_opt - ana_opt).abs() / ana_opt;
    report(
        "criterion 5 (simulation vs analysis)",
        err_rfo <= ANALYSIS_REL_TOL && err_opt <= ANALYSIS_REL_TOL,
        format!(
            "RFO {sim_rfo:.4} vs {ana_rfo:.4} ({:.1}%), OptimalPrediction {sim_opt:.4} vs {ana_opt:.4} ({:.1}%)",
            100.0 * err_rfo,
            100.0 * err_opt
        ),
    );
}

struct GainRun {
    rfo: Vec<f64>,
    opt: Vec<f64>,
    inexact: Vec<f64>,
    young: Vec<f64>,
    daly: Vec<f64>,
}

fn gain_run(sc: &Scenario, instances: usize) -> GainRun {
    let exact = sc.traces(instances, PredictionMode::Exact);
    let inexact = sc.traces(instances, sc.inexact());
    let young = Policy::Periodic { period: period_young(sc.mu, sc.costs.checkpoint) };
    let daly = Policy::Periodic { period: period_daly(sc.mu, &sc.costs) };
    GainRun {
        rfo: sc.run(&sc.rfo(), &exact).1,
        opt: sc.run(&sc.optimal_prediction(), &exact).1,
        inexact: sc.run(&sc.inexact_prediction(), &inexact).1,
        young: sc.run(&young, &exact).1,
        daly: sc.run(&daly, &exact).1,
    }
}

fn days(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64 / DAY
}

#[test]
fn criterion_06_and_08_exponential_gains() {
    let mut gains_ok = true;
    let mut order_ok = true;
    let mut details = Vec::new();
    let mut orders = Vec::new();
    for (k, (target, tol)) in [(16u32, GAIN_2_16), (19, GAIN_2_19)] {
        let sc = Scenario::exponential(1 << k);
        let g = gain_run(&sc, SIM_INSTANCES);
        let gain = gain_percent(&g.rfo, &g.opt);
        gains_ok &= (gain - target).abs() <= tol;
        details.push(format!(
            "2^{k}: RFO {:.2} d, OptimalPrediction {:.2} d, gain {gain:.1}% (target {target}±{tol})",
            days(&g.rfo),
            days(&g.opt)
        ));
        let (a, da) = ordered_or_tie(&g.opt, &g.inexact);
        let (b, db) = ordered_or_tie(&g.inexact, &g.rfo);
        order_ok &= a && b;
        orders.push(format!(
            "2^{k}: Optimal {:.2} d <= Inexact {:.2} d [{da}] <= RFO {:.2} d [{db}]",
            days(&g.opt),
            days(&g.inexact),
            days(&g.rfo)
        ));
    }
    println!("{} criterion 8 (inexact ordering, exponential): {}", if order_ok { "PASS" } else { "FAIL" }, orders.join("; "));
    report("criterion 6 (exponential gains)", gains_ok, details.join("; "));
    assert!(order_ok, "criterion 8 (exponential): {}", orders.join("; "));
}

#[test]
fn criterion_07_and_08_weibull_gains() {
    let sc = Scenario::new(DistributionSpec::Weibull { shape: 0.5, mean: 125.0 * YEAR }, 1 << 16, good_predictor());
    let g = gain_run(&sc, WEIBULL_INSTANCES);
    let gain = gain_percent(&g.rfo, &g.opt);
    let (target, tol) = GAIN_WEIBULL;
    let (rfo, young, daly) = (days(&g.rfo), days(&g.young), days(&g.daly));
    let ok = (gain - target).abs() <= tol && rfo < young && rfo < daly;
    let (a, da) = ordered_or_tie(&g.opt, &g.inexact);
    let (b, db) = ordered_or_tie(&g.inexact, &g.rfo);
    println!(
        "{} criterion 8 (inexact ordering, Weibull): Optimal {:.2} d <= Inexact {:.2} d [{da}] <= RFO {rfo:.2} d [{db}]",
        if a && b { "PASS" } else { "FAIL" },
        days(&g.opt),
        days(&g.inexact),
    );
    report(
        "criterion 7 (Weibull gains)",
        ok,
        format!(
            "Young {young:.2} d, Daly {daly:.2} d, RFO {rfo:.2} d, OptimalPrediction {:.2} d, gain {gain:.1}% (target {target}±{tol})",
            days(&g.opt)
        ),
    );
    assert!(a && b, "criterion 8 (Weibull)");
}

#[test]
fn criterion_09_platform_mtbf_estimate() {
    let n = 1_024u64;
    let mu_ind = 125.0 * YEAR;
    let window = 20_000.0 * YEAR;
    assert!(window >= 20.0 * mu_ind / n as f64);
    let mut details = Vec::new();
    let mut ok = true;
    for spec in [
        DistributionSpec::Exponential { mean: mu_ind },
        DistributionSpec::Weibull { shape: 0.7, mean: mu_ind },
    ] {
        let faults = gen_platform_fault_trace(&spec, n, window, SEED).unwrap();
        let est = estimate_platform_mtbf(&faults).unwrap();
        let err = (est / (mu_ind / n as f64) - 1.0).abs();
        ok &= err <= MTBF_ESTIMATE_REL_TOL;
        details.push(format!("{}: {:.1} s vs {:.1} s ({:.2}%)", spec.family_label(), est, mu_ind / n as f64, 100.0 * err));
    }
    report("criterion 9 (platform MTBF)", ok, details.join("; "));
}

#[test]
fn criterion_10_best_period() {
    let sc = Scenario::exponential(1 << 16);
    let traces = sc.traces(BEST_PERIOD_INSTANCES, PredictionMode::Exact);
    let t_rfo = period_rfo(sc.mu, &sc.costs).unwrap();
    let spec = SearchSpec::around(t_rfo, sc.costs.checkpoint);
    let r = best_period(&Policy::Periodic { period: t_rfo }, &traces, &sc.costs, sc.t_base, &spec).unwrap();
    let rfo = evaluate(&sc.rfo(), &traces, &sc.costs, sc.t_base).unwrap();
    let optimal = period_optimal_exponential(sc.mu, sc.costs.checkpoint).unwrap();
    let dev = (r.best.period - optimal).abs() / optimal;
    report(
        "criterion 10 (best period)",
        r.best.mean_waste <= rfo.mean_waste && dev <= BEST_PERIOD_REL_TOL,
        format!(
            "T* {:.0} s vs optimum {optimal:.0} s ({:.1}%), waste {:.5} vs RFO {:.5}",
            r.best.period,
            100.0 * dev,
            r.best.mean_waste,
            rfo.mean_waste
        ),
    );
}

#[test]
fn criterion_11_simulator_micro_oracles() {
    let trace = |events| EventTrace::new(events, 1e6, 0.0, 0).unwrap();
    let costs = CostParams::new(10.0, 8.0, 5.0, 8.0).unwrap();
    let periodic = Policy::Periodic { period: 100.0 };
    let a = simulate(&trace(vec![]), &periodic, &costs, 180.0, 0).unwrap().makespan;
    let fault = Event { time: 150.0, kind: EventKind::UnpredictedFault };
    let b = simulate(&trace(vec![fault]), &periodic, &costs, 180.0, 0).unwrap().makespan;
    let pred = Event { time: 60.0, kind: EventKind::TruePrediction { actual_fault_time: 60.0 } };
    let threshold = Policy::ThresholdTrust { period: 100.0, threshold: 8.0 };
    let c = simulate(&trace(vec![pred]), &threshold, &costs, 90.0, 0).unwrap().makespan;
    report(
        "criterion 11 (simulator micro-oracles)",
        (a, b, c) == (200.0, 263.0, 121.0),
        format!("makespans {a}, {b}, {c}"),
    );
}

#[test]
fn recall_matters_more_than_precision() {
    let weibull = DistributionSpec::Weibull { shape: 0.7, mean: 125.0 * YEAR };
    let waste = |r: f64, p: f64| {
        let sc = Scenario::new(weibull.clone(), 1 << 16, PredictorParams::new(r, p).unwrap());
        let traces = sc.traces(WEIBULL_INSTANCES, PredictionMode::Exact);
        sc.run(&sc.optimal_prediction(), &traces).0
    };
    let base = waste(0.8, 0.8);
    let low_recall = waste(0.4, 0.8);
    let low_precision = waste(0.8, 0.4);
    // recall gain minus precision gain, per instance
    let diffs: Vec<f64> = low_recall.iter().zip(&low_precision).map(|(a, b)| a - b).collect();
    let (m, se) = mean_se(&diffs);
    let (b, _) = mean_se(&base);
    report(
        "recall vs precision",
        m > SIGMA * se,
        format!(
            "waste r=0.8/p=0.8 {b:.4}; recall gain {:.4}, precision gain {:.4}, difference {m:.4} ± {se:.4}",
            mean_se(&low_recall).0 - b,
            mean_se(&low_precision).0 - b
        ),
    );
}
