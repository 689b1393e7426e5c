//! Running experiments and the per-iteration CSV format.
//!
//! A records file has the header
//!
//! ```text
//! run_id,iteration,sample_log_weight,best_log_weight_so_far,is_new_map,elapsed_ms
//! ```
//!
//! with one row per iteration per run, ordered by run then iteration. Reals
//! are written with 17 significant digits (`-inf` for impossible traces).
//! The companion `*.normalized.csv` drops `elapsed_ms` and is byte-identical
//! across repeated or parallel runs of the same configuration.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use bamc::baselines::{mh_map_search, sa_search, Schedule, ScheduleKind};
use bamc::search::bamc_search;
use bamc::{SearchReport, SeededRng};
use rand::SeedableRng;
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::HarnessError;
use crate::summary::{median, quantile_sorted, sorted};

pub const HEADER: [&str; 6] = [
    "run_id",
    "iteration",
    "sample_log_weight",
    "best_log_weight_so_far",
    "is_new_map",
    "elapsed_ms",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub run_id: usize,
    /// 1-based.
    pub iteration: usize,
    pub sample_log_weight: f64,
    pub best_log_weight_so_far: f64,
    pub is_new_map: bool,
    pub elapsed_ms: f64,
}

/// Flatten one search into records.
pub fn records_from_report(run_id: usize, report: &SearchReport) -> Vec<RunRecord> {
    let mut best = f64::NEG_INFINITY;
    report
        .records
        .iter()
        .map(|r| {
            if r.is_new_map {
                best = r.log_weight;
            }
            RunRecord {
                run_id,
                iteration: r.iteration,
                sample_log_weight: r.log_weight,
                best_log_weight_so_far: best,
                is_new_map: r.is_new_map,
                elapsed_ms: r.elapsed_ms,
            }
        })
        .collect()
}

/// One search with the configured algorithm and the given seed.
pub fn run_once(config: &ExperimentConfig, run: usize) -> Result<SearchReport, HarnessError> {
    let program = config.build_model()?;
    run_with(config, &*program, run)
}

fn run_with(
    config: &ExperimentConfig,
    program: &(dyn bamc::Program + Sync),
    run: usize,
) -> Result<SearchReport, HarnessError> {
    let mut rng = SeededRng::seed_from_u64(config.seed_for_run(run));
    let n = config.iterations;
    let result = match &config.algorithm {
        Algorithm::Bamc => bamc_search(program, n, &mut rng),
        Algorithm::Mh => mh_map_search(program, n, &mut rng),
        Algorithm::Sa(schedule) => sa_search(program, schedule, n, &mut rng),
    };
    result.map_err(|source| HarnessError::Search { run, source })
}

/// Every run of the experiment, in run order whatever the parallelism.
pub fn execute(config: &ExperimentConfig) -> Result<Vec<SearchReport>, HarnessError> {
    config.validate()?;
    let program = config.build_model()?;
    let program = &*program;
    if config.parallel {
        (0..config.runs)
            .into_par_iter()
            .map(|r| run_with(config, program, r))
            .collect()
    } else {
        (0..config.runs).map(|r| run_with(config, program, r)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub reports: Vec<SearchReport>,
    pub records: Vec<RunRecord>,
    /// Files written, when the config names an output path.
    pub files: Vec<PathBuf>,
}

/// Execute the experiment and, when `config.out` is set, write the records
/// CSV, its normalized companion and a `.meta` sidecar describing the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    let reports = execute(config)?;
    let records: Vec<RunRecord> = reports
        .iter()
        .enumerate()
        .flat_map(|(run, report)| records_from_report(run, report))
        .collect();
    audit_monotone(&records)?;
    let mut files = Vec::new();
    if let Some(out) = &config.out {
        write_records(out, &records, true)?;
        let normalized = normalized_path(out);
        write_records(&normalized, &records, false)?;
        let meta = meta_path(out);
        std::fs::write(&meta, config.describe()).map_err(|e| HarnessError::io(&meta, e))?;
        files.extend([out.clone(), normalized, meta]);
    }
    Ok(ExperimentOutput {
        reports,
        records,
        files,
    })
}

/// `runs.csv` → `runs.normalized.csv`.
pub fn normalized_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.normalized.csv"))
}

/// `runs.csv` → `runs.csv.meta`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta");
    path.with_file_name(name)
}

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn records_to_csv(records: &[RunRecord], with_elapsed: bool) -> Result<Vec<u8>, HarnessError> {
    let columns = if with_elapsed { &HEADER[..] } else { &HEADER[..5] };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns)?;
    for r in records {
        let mut row = vec![
            r.run_id.to_string(),
            r.iteration.to_string(),
            format_real(r.sample_log_weight),
            format_real(r.best_log_weight_so_far),
            r.is_new_map.to_string(),
        ];
        if with_elapsed {
            row.push(format!("{:.3}", r.elapsed_ms));
        }
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| HarnessError::Data(e.to_string()))
}

pub fn write_records(path: &Path, records: &[RunRecord], with_elapsed: bool) -> Result<(), HarnessError> {
    let bytes = records_to_csv(records, with_elapsed)?;
    let mut f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(&bytes).map_err(|e| HarnessError::io(path, e))
}

/// Read a records file, with or without the `elapsed_ms` column.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_records(file)
}

pub fn parse_records<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let with_elapsed = match header.len() {
        6 => true,
        5 => false,
        _ => return Err(HarnessError::Data(format!("unexpected header {header:?}"))),
    };
    let expected = if with_elapsed { &HEADER[..] } else { &HEADER[..5] };
    if header != expected {
        return Err(HarnessError::Data(format!("unexpected header {header:?}")));
    }
    let field = |row: &csv::StringRecord, i: usize| -> Result<String, HarnessError> {
        row.get(i)
            .map(str::to_string)
            .ok_or_else(|| HarnessError::Data(format!("missing column {}", HEADER[i])))
    };
    let bad = |what: &str, v: &str| HarnessError::Data(format!("bad {what} `{v}`"));
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let get = |i| field(&row, i);
        let run_id = get(0)?;
        let iteration = get(1)?;
        let sample = get(2)?;
        let best = get(3)?;
        let is_new = get(4)?;
        out.push(RunRecord {
            run_id: run_id.parse().map_err(|_| bad("run_id", &run_id))?,
            iteration: iteration.parse().map_err(|_| bad("iteration", &iteration))?,
            sample_log_weight: sample.parse().map_err(|_| bad("sample_log_weight", &sample))?,
            best_log_weight_so_far: best.parse().map_err(|_| bad("best_log_weight_so_far", &best))?,
            is_new_map: is_new.parse().map_err(|_| bad("is_new_map", &is_new))?,
            elapsed_ms: if with_elapsed {
                let e = get(5)?;
                e.parse().map_err(|_| bad("elapsed_ms", &e))?
            } else {
                0.0
            },
        });
    }
    Ok(out)
}

/// Check that `best_log_weight_so_far` never decreases within a run.
pub fn audit_monotone(records: &[RunRecord]) -> Result<(), HarnessError> {
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.run_id == b.run_id && b.best_log_weight_so_far < a.best_log_weight_so_far {
            return Err(HarnessError::Data(format!(
                "run {}: best log-weight drops from {} to {} at iteration {}",
                b.run_id, a.best_log_weight_so_far, b.best_log_weight_so_far, b.iteration
            )));
        }
    }
    Ok(())
}

/// Final best log-weight of each run.
pub fn final_bests(reports: &[SearchReport]) -> Vec<f64> {
    reports.iter().map(SearchReport::best_log_weight).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub rate: f64,
    pub median: f64,
    pub iqr: f64,
    pub finals: Vec<f64>,
}

/// Run simulated annealing with `kind` at every rate and order the results
/// best first: highest median final log-weight, then smallest interquartile
/// range, then the earlier rate in `rates`.
pub fn sweep_sa_rates(
    base: &ExperimentConfig,
    kind: ScheduleKind,
    rates: &[f64],
) -> Result<Vec<RateResult>, HarnessError> {
    let mut results = Vec::with_capacity(rates.len());
    for &rate in rates {
        let schedule = Schedule::new(kind, 1.0, rate).map_err(|e| HarnessError::Config(e.to_string()))?;
        let config = ExperimentConfig {
            algorithm: Algorithm::Sa(schedule),
            out: None,
            ..base.clone()
        };
        let finals = final_bests(&execute(&config)?);
        let s = sorted(&finals);
        results.push(RateResult {
            rate,
            median: median(&finals)?,
            iqr: quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25),
            finals,
        });
    }
    results.sort_by(|a, b| b.median.total_cmp(&a.median).then(a.iqr.total_cmp(&b.iqr)));
    Ok(results)
}
