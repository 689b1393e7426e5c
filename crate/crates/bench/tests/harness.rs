use bamc::baselines::{Schedule, ScheduleKind};
use bamc_bench::experiment::{normalized_path, parse_records, records_to_csv, sweep_sa_rates};
use bamc_bench::figure::{emit_figure_data, quantile_series, single_run_series, FigureTable};
use bamc_bench::summary::{quantile_summary, rolling_median};
use bamc_bench::{run_experiment, Algorithm, ExperimentConfig, ModelId, RunRecord, Settings};
use proptest::prelude::*;

fn config(algorithm: Algorithm, parallel: bool) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelId::TinyHmm,
        algorithm,
        iterations: 300,
        runs: 6,
        base_seed: 42,
        parallel,
        ..ExperimentConfig::default()
    }
}

#[test]
fn serial_and_parallel_files_match() {
    let dir = tempfile::tempdir().unwrap();
    let algorithms = [
        Algorithm::Bamc,
        Algorithm::Mh,
        Algorithm::Sa(Schedule::new(ScheduleKind::Exponential, 1.0, 0.9).unwrap()),
    ];
    for algorithm in algorithms {
        let mut outputs = Vec::new();
        for parallel in [false, true] {
            let out = dir.path().join(format!("{}-{parallel}.csv", algorithm.id()));
            let c = ExperimentConfig {
                out: Some(out.clone()),
                ..config(algorithm, parallel)
            };
            run_experiment(&c).unwrap();
            outputs.push(std::fs::read(normalized_path(&out)).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{algorithm}");
    }
}

#[test]
fn records_round_trip_through_csv() {
    let output = run_experiment(&config(Algorithm::Bamc, true)).unwrap();
    for with_elapsed in [false, true] {
        let bytes = records_to_csv(&output.records, with_elapsed).unwrap();
        let back = parse_records(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), output.records.len());
        for (a, b) in back.iter().zip(&output.records) {
            assert_eq!((a.run_id, a.iteration, a.is_new_map), (b.run_id, b.iteration, b.is_new_map));
            assert_eq!(a.sample_log_weight.to_bits(), b.sample_log_weight.to_bits());
            assert_eq!(a.best_log_weight_so_far.to_bits(), b.best_log_weight_so_far.to_bits());
        }
    }
}

fn synthetic(runs: usize, iterations: usize, value: impl Fn(usize, usize) -> f64) -> Vec<RunRecord> {
    (0..runs)
        .flat_map(|r| {
            let value = &value;
            (1..=iterations).map(move |i| RunRecord {
                run_id: r,
                iteration: i,
                sample_log_weight: value(r, i),
                best_log_weight_so_far: value(r, i),
                is_new_map: false,
                elapsed_ms: 0.0,
            })
        })
        .collect()
}

#[test]
fn quantiles_of_known_spread() {
    // Run r sits at r - i at iteration i, so at every iteration the runs
    // span an evenly spaced grid.
    let records = synthetic(5, 4, |r, i| r as f64 - i as f64);
    let s = quantile_summary(&records, &[0.25, 0.5, 0.75]).unwrap();
    assert_eq!(s.iterations, vec![1, 2, 3, 4]);
    for (k, offset) in [1.0, 2.0, 3.0].iter().enumerate() {
        let want: Vec<f64> = (1..=4).map(|i| offset - i as f64).collect();
        assert_eq!(s.series[k], want);
    }
    let table = emit_figure_data(&s.iterations, &quantile_series(&s)).unwrap();
    assert_eq!(table.series_names(), ["q0.25", "q0.5", "q0.75"]);
}

#[test]
fn figure_output_is_deterministic() {
    let make = || {
        let output = run_experiment(&config(Algorithm::Mh, true)).unwrap();
        let s = quantile_summary(&output.records, &[0.25, 0.5, 0.75]).unwrap();
        let run0: Vec<&RunRecord> = output.records.iter().filter(|r| r.run_id == 0).collect();
        let samples: Vec<f64> = run0.iter().map(|r| r.sample_log_weight).collect();
        let best: Vec<f64> = run0.iter().map(|r| r.best_log_weight_so_far).collect();
        let single = emit_figure_data(&s.iterations, &single_run_series(&samples, &best, 101).unwrap()).unwrap();
        let quant = emit_figure_data(&s.iterations, &quantile_series(&s)).unwrap();
        (quant.to_csv().unwrap(), single.to_csv().unwrap(), quant.to_svg("mh"))
    };
    let a = make();
    assert_eq!(a, make());
    assert_eq!(FigureTable::from_csv(a.0.as_slice()).unwrap().to_csv().unwrap(), a.0);
}

#[test]
fn sweep_orders_rates_best_first() {
    let base = ExperimentConfig {
        iterations: 200,
        runs: 8,
        ..config(Algorithm::Bamc, true)
    };
    let results = sweep_sa_rates(&base, ScheduleKind::Exponential, &bamc_bench::SA_RATES).unwrap();
    assert_eq!(results.len(), 4);
    assert!(results.windows(2).all(|w| w[0].median > w[1].median
        || (w[0].median == w[1].median && w[0].iqr <= w[1].iqr)));
    assert!(results.iter().all(|r| r.finals.len() == 8));
}

#[test]
fn config_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    std::fs::write(
        &path,
        "model = hmm16  # bundled data\nalgorithm = sa\nschedule = exponential\nrate = 0.9\niterations = 20\nruns = 2\nseed = 9\nparallel = false\n",
    )
    .unwrap();
    let c = Settings::load(&path).unwrap().into_config().unwrap();
    assert_eq!(c.model, ModelId::Hmm16);
    assert_eq!(c.iterations, 20);
    assert_eq!(c.seed_for_run(1), 10);
    assert!(!c.parallel);
    match c.algorithm {
        Algorithm::Sa(s) => assert_eq!((s.kind(), s.rate(), s.t0()), (ScheduleKind::Exponential, 0.9, 1.0)),
        other => panic!("{other}"),
    }
    let output = run_experiment(&c).unwrap();
    assert_eq!(output.records.len(), 40);
    assert!(output.records.iter().all(|r| r.sample_log_weight.is_finite()));
}

/// Direct definition: sort the clipped window and take its lower median.
fn naive_rolling_median(xs: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(xs.len());
            let mut w = xs[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            w[(w.len() - 1) / 2]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rolling_median_matches_definition(
        xs in prop::collection::vec(prop_oneof![-100.0f64..100.0, Just(f64::NEG_INFINITY), Just(0.0)], 0..300),
        half in 0usize..60,
    ) {
        let window = 2 * half + 1;
        prop_assert_eq!(rolling_median(&xs, window).unwrap(), naive_rolling_median(&xs, window));
    }
}
