//! Bayesian ascent Monte Carlo: anytime MAP search driven by ORPM.

use std::time::Instant;

use rand::Rng;

use crate::error::{SearchError, UpdateError};
use crate::orpm::BeliefStore;
use crate::trace::{execute, Program, Trace};

/// A trace that beat every trace sampled before it.
#[derive(Debug, Clone)]
pub struct MapEstimate {
    pub trace: Trace,
    pub log_weight: f64,
    /// 1-based iteration that produced the trace.
    pub iteration: usize,
    /// Wall time since the search started.
    pub elapsed_ms: f64,
}

/// Equality ignores `elapsed_ms`.
impl PartialEq for MapEstimate {
    fn eq(&self, other: &Self) -> bool {
        self.trace == other.trace
            && self.log_weight.to_bits() == other.log_weight.to_bits()
            && self.iteration == other.iteration
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Log-weight of the trace executed in this iteration.
    pub log_weight: f64,
    pub is_new_map: bool,
    pub elapsed_ms: f64,
}

/// Equality ignores `elapsed_ms`.
impl PartialEq for IterationRecord {
    fn eq(&self, other: &Self) -> bool {
        self.iteration == other.iteration
            && self.log_weight.to_bits() == other.log_weight.to_bits()
            && self.is_new_map == other.is_new_map
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchReport {
    pub records: Vec<IterationRecord>,
    pub estimates: Vec<MapEstimate>,
}

impl SearchReport {
    pub fn best(&self) -> Option<&MapEstimate> {
        self.estimates.last()
    }

    pub fn best_log_weight(&self) -> f64 {
        self.best().map_or(f64::NEG_INFINITY, |e| e.log_weight)
    }

    pub fn sample_log_weights(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.log_weight).collect()
    }
}

/// Running maximum over sampled traces; shared by every searcher.
#[derive(Debug, Clone)]
pub(crate) struct MapTracker {
    started: Instant,
    max_log_weight: f64,
    report: SearchReport,
}

impl MapTracker {
    pub(crate) fn new() -> Self {
        MapTracker {
            started: Instant::now(),
            max_log_weight: f64::NEG_INFINITY,
            report: SearchReport::default(),
        }
    }

    pub(crate) fn next_iteration(&self) -> usize {
        self.report.records.len() + 1
    }

    /// Record a sampled trace; returns whether it became the new MAP estimate.
    pub(crate) fn observe(&mut self, trace: &Trace) -> bool {
        let iteration = self.next_iteration();
        let elapsed_ms = self.started.elapsed().as_secs_f64() * 1e3;
        let is_new_map = trace.log_weight > self.max_log_weight;
        if is_new_map {
            self.max_log_weight = trace.log_weight;
            self.report.estimates.push(MapEstimate {
                trace: trace.clone(),
                log_weight: trace.log_weight,
                iteration,
                elapsed_ms,
            });
        }
        self.report.records.push(IterationRecord {
            iteration,
            log_weight: trace.log_weight,
            is_new_map,
            elapsed_ms,
        });
        is_new_map
    }

    pub(crate) fn report(&self) -> &SearchReport {
        &self.report
    }

    pub(crate) fn into_report(self) -> SearchReport {
        self.report
    }
}

/// Credit each choice in `trace` with the log-weight accrued after it was
/// made: `final_log_weight - prefix_log_weight`. Entries are visited last to
/// first. Traces of zero probability are skipped entirely.
pub fn attribute_rewards(
    trace: &Trace,
    final_log_weight: f64,
    store: &mut BeliefStore,
) -> Result<(), UpdateError> {
    if final_log_weight == f64::NEG_INFINITY {
        return Ok(());
    }
    for entry in trace.entries.iter().rev() {
        let reward = final_log_weight - entry.prefix_log_weight;
        store.update(entry.address, &entry.value, reward)?;
    }
    Ok(())
}

/// An in-progress BaMC search that can be advanced one iteration at a time.
pub struct Bamc<P> {
    program: P,
    store: BeliefStore,
    tracker: MapTracker,
}

impl<P: Program> Bamc<P> {
    pub fn new(program: P) -> Self {
        Bamc {
            program,
            store: BeliefStore::new(),
            tracker: MapTracker::new(),
        }
    }

    /// Run the program once with ORPM choosing every value, then update the
    /// running MAP estimate and the beliefs.
    pub fn iterate<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool, SearchError> {
        let store = &mut self.store;
        let trace = execute(&self.program, |address, dist| store.select(*address, dist, rng).0)
            .map_err(|source| SearchError::Execution {
                iteration: self.tracker.next_iteration(),
                source,
                partial: Box::new(self.tracker.report().clone()),
            })?;
        let improved = self.tracker.observe(&trace);
        attribute_rewards(&trace, trace.log_weight, &mut self.store)?;
        Ok(improved)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, iterations: usize, rng: &mut R) -> Result<(), SearchError> {
        if iterations == 0 {
            return Err(SearchError::NoIterations);
        }
        for _ in 0..iterations {
            self.iterate(rng)?;
        }
        Ok(())
    }

    pub fn store(&self) -> &BeliefStore {
        &self.store
    }

    pub fn report(&self) -> &SearchReport {
        self.tracker.report()
    }

    pub fn into_report(self) -> SearchReport {
        self.tracker.into_report()
    }
}

/// Run BaMC on `program` for `iterations` program executions.
pub fn bamc_search<P: Program, R: Rng + ?Sized>(
    program: P,
    iterations: usize,
    rng: &mut R,
) -> Result<SearchReport, SearchError> {
    let mut search = Bamc::new(program);
    search.run(iterations, rng)?;
    Ok(search.into_report())
}
