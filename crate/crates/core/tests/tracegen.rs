use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ckpt_core::model::{PredictorParams, YEAR};
use ckpt_core::tracegen::{
    estimate_platform_mtbf, gen_platform_fault_trace, ingest_fta_durations, merge_events, read_trace_csv,
    write_trace_csv, DistributionSpec, EventKind, FalsePredictionLaw, PredictionMode, TraceRecipe,
};

fn recipe(mode: PredictionMode) -> TraceRecipe {
    TraceRecipe {
        unit_dist: DistributionSpec::Exponential { mean: 125.0 * YEAR },
        n_units: 1 << 16,
        horizon: 2.0 * YEAR,
        job_start: 0.0,
        predictor: PredictorParams::new(0.9, 0.8).unwrap(),
        false_law: FalsePredictionLaw::FaultFamily,
        mode,
    }
}

/// Kolmogorov-Smirnov statistic of `xs` against U(0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

#[test]
fn inexact_offsets_are_uniform() {
    let window = 1_200.0;
    let mut offsets = Vec::new();
    let mut seed = 0;
    while offsets.len() < 10_000 {
        let trace = recipe(PredictionMode::Inexact { window }).generate(seed).unwrap();
        for e in trace.events() {
            if let EventKind::TruePrediction { actual_fault_time } = e.kind {
                let d = actual_fault_time - e.time;
                assert!(d > 0.0 && d <= window);
                offsets.push(d / window);
            }
        }
        seed += 1;
    }
    offsets.truncate(10_000);
    // asymptotic critical value at significance 0.01
    let critical = 1.628 / (offsets.len() as f64).sqrt();
    assert!(ks_uniform(offsets) < critical);
}

#[test]
fn ks_statistic_detects_non_uniform_sample() {
    let skewed: Vec<f64> = (0..10_000).map(|i| (i as f64 / 10_000.0).powi(2)).collect();
    assert!(ks_uniform(skewed) > 0.1);
}

#[test]
fn merge_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut draw = |n: usize| {
        let mut v: Vec<f64> = (0..n).map(|_| (rng.random_range(0.0..1_000.0f64)).round()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let (a, b, c) = (draw(4_000), draw(3_000), draw(3_000));
    let pairs: Vec<(f64, f64)> = b.iter().map(|&t| (t, t)).collect();
    let trace = merge_events(&a, &pairs, &c, 1_000.0, 0.0, 0).unwrap();
    let mut oracle: Vec<(f64, u8)> = a
        .iter()
        .map(|&t| (t, 0))
        .chain(b.iter().map(|&t| (t, 1)))
        .chain(c.iter().map(|&t| (t, 2)))
        .collect();
    oracle.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let got: Vec<(f64, u8)> = trace
        .events()
        .iter()
        .map(|e| {
            let k = match e.kind {
                EventKind::UnpredictedFault => 0,
                EventKind::TruePrediction { .. } => 1,
                EventKind::FalsePrediction => 2,
            };
            (e.time, k)
        })
        .collect();
    assert_eq!(got, oracle);
}

#[test]
fn generation_is_byte_identical() {
    let csv = |seed| {
        let mut buf = Vec::new();
        write_trace_csv(&recipe(PredictionMode::Exact).generate(seed).unwrap(), &mut buf).unwrap();
        buf
    };
    assert_eq!(csv(17), csv(17));
    assert_ne!(csv(17), csv(18));
}

#[test]
fn csv_round_trip_of_generated_trace() {
    let trace = recipe(PredictionMode::Inexact { window: 1_200.0 }).generate(3).unwrap();
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf).unwrap();
    let back = read_trace_csv(buf.as_slice(), std::path::Path::new("mem"), trace.horizon, trace.job_start).unwrap();
    assert_eq!(back.events(), trace.events());
}

#[test]
fn log_based_mean_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let samples: Vec<f64> = (0..3_010).map(|_| rng.random_range(60.0..5e6f64)).collect();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "# availability intervals (s)").unwrap();
    for s in &samples {
        writeln!(file, "{s}").unwrap();
    }
    let spec = ingest_fta_durations(file.path()).unwrap();
    let direct = samples.iter().sum::<f64>() / samples.len() as f64;
    assert!((spec.mean() / direct - 1.0).abs() < 1e-9);
    assert!(matches!(ingest_fta_durations(std::path::Path::new("/nonexistent/x")), Err(_)));
}

#[test]
fn weibull_unit_mean_matches_scale_identity() {
    use rand_distr::Distribution;
    let spec = DistributionSpec::Weibull { shape: 0.7, mean: 125.0 * YEAR };
    let s = spec.sampler().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let m = (0..1_000_000).map(|_| s.sample(&mut rng)).sum::<f64>() / 1e6;
    assert!((m / (125.0 * YEAR) - 1.0).abs() < 0.02);
}

#[test]
fn superposition_rate_over_long_window() {
    let n = 256u64;
    let mu_ind = 125.0 * YEAR;
    let window = 2_000.0 * mu_ind / n as f64;
    let faults = gen_platform_fault_trace(&DistributionSpec::Exponential { mean: mu_ind }, n, window, 5).unwrap();
    let rate = faults.len() as f64 / window;
    assert!((rate / (n as f64 / mu_ind) - 1.0).abs() < 0.05);
    let est = estimate_platform_mtbf(&faults).unwrap();
    assert!((est / (mu_ind / n as f64) - 1.0).abs() < 0.05);
}
