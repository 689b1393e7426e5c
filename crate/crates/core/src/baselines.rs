//! Metropolis-Hastings and simulated annealing over program traces.
//!
//! Both searchers share a single-site kernel: pick one choice of the current
//! trace uniformly, redraw it from its prior, and re-execute the program.
//! Choices downstream of the redrawn site keep their old value when the
//! distribution at the same position has the same kind and still supports
//! it; otherwise they are drawn fresh from the prior. The acceptance ratio
//! carries the matching forward/backward proposal correction.

use std::fmt;

use rand::Rng;

use crate::dist::{Distribution, Value};
use crate::error::{ExecutionError, ScheduleError, SearchError};
use crate::search::{MapTracker, SearchReport};
use crate::trace::{execute, Program, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `t0 * rate^t`
    Exponential,
    /// `T <- T / (1 + rate * T)`, applied once per iteration.
    LundyMees,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Exponential => "exponential",
            ScheduleKind::LundyMees => "lundy-mees",
        })
    }
}

/// Annealing schedule. Temperatures are floored at `f64::MIN_POSITIVE` so
/// they stay strictly positive after the closed form underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    t0: f64,
    rate: f64,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, t0: f64, rate: f64) -> Result<Self, ScheduleError> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(ScheduleError::InitialTemperature(t0));
        }
        match kind {
            ScheduleKind::Exponential if !(rate > 0.0 && rate < 1.0) => {
                Err(ScheduleError::ExponentialRate(rate))
            }
            ScheduleKind::LundyMees if !(rate.is_finite() && rate > 0.0) => {
                Err(ScheduleError::LundyMeesRate(rate))
            }
            _ => Ok(Schedule { kind, t0, rate }),
        }
    }

    pub fn exponential(rate: f64) -> Result<Self, ScheduleError> {
        Self::new(ScheduleKind::Exponential, 1.0, rate)
    }

    pub fn lundy_mees(rate: f64) -> Result<Self, ScheduleError> {
        Self::new(ScheduleKind::LundyMees, 1.0, rate)
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Temperature at iteration `t` (0-based).
    pub fn temperature(&self, t: usize) -> f64 {
        match self.kind {
            ScheduleKind::Exponential => self.exponential_at(t),
            ScheduleKind::LundyMees => {
                let mut temp = self.t0;
                for _ in 0..t {
                    temp = self.lundy_mees_step(temp);
                }
                temp.max(f64::MIN_POSITIVE)
            }
        }
    }

    /// The temperature sequence `temperature(0), temperature(1), ...`.
    pub fn temperatures(&self) -> impl Iterator<Item = f64> + '_ {
        let mut lm = self.t0;
        (0..).map(move |t| match self.kind {
            ScheduleKind::Exponential => self.exponential_at(t),
            ScheduleKind::LundyMees => {
                let current = lm;
                lm = self.lundy_mees_step(lm);
                current.max(f64::MIN_POSITIVE)
            }
        })
    }

    fn exponential_at(&self, t: usize) -> f64 {
        let t = i32::try_from(t).unwrap_or(i32::MAX);
        (self.t0 * self.rate.powi(t)).max(f64::MIN_POSITIVE)
    }

    fn lundy_mees_step(&self, temp: f64) -> f64 {
        temp / (1.0 + self.rate * temp)
    }
}

/// Log of the acceptance ratio `(l' - l) / temperature + correction`.
///
/// A zero-probability proposal is rejected unless the current state is also
/// impossible; leaving an impossible state is always accepted.
pub fn log_acceptance(current: f64, proposed: f64, correction: f64, temperature: f64) -> f64 {
    if proposed == f64::NEG_INFINITY {
        return if current == f64::NEG_INFINITY { 0.0 } else { f64::NEG_INFINITY };
    }
    if current == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let delta = proposed - current;
    let scaled = if delta == 0.0 { 0.0 } else { delta / temperature };
    scaled + correction
}

pub fn acceptance_probability(current: f64, proposed: f64, correction: f64, temperature: f64) -> f64 {
    log_acceptance(current, proposed, correction, temperature).exp().min(1.0)
}

/// A proposed trace with its log proposal-ratio correction
/// `log q(old | new) - log q(new | old)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub trace: Trace,
    pub correction: f64,
    /// Position that was redrawn; `None` for a trace without choices.
    pub site: Option<usize>,
}

/// Single-site prior-redraw proposal from `current`.
pub fn propose<R: Rng + ?Sized>(
    program: &(impl Program + ?Sized),
    current: &Trace,
    rng: &mut R,
) -> Result<Proposal, ExecutionError> {
    let n_old = current.entries.len();
    if n_old == 0 {
        let trace = execute(program, |_, dist| dist.sample(rng))?;
        return Ok(Proposal {
            trace,
            correction: 0.0,
            site: None,
        });
    }
    let site = rng.random_range(0..n_old);
    let redrawn = current.entries[site].dist.sample(rng);

    let mut reused = vec![false; n_old];
    let mut fresh = Vec::new();
    let trace = execute(program, |address, dist: &Distribution| -> Value {
        let p = address.position;
        if p < site {
            reused[p] = true;
            return current.entries[p].value.clone();
        }
        if p == site {
            fresh.push(p);
            return redrawn.clone();
        }
        if let Some(old) = current.entries.get(p) {
            if reusable(&old.dist, &old.value, dist) {
                reused[p] = true;
                return old.value.clone();
            }
        }
        fresh.push(p);
        dist.sample(rng)
    })?;

    let n_new = trace.entries.len();
    let fresh_log_density: f64 = fresh.iter().map(|&p| trace.entries[p].log_density).sum();
    let stale_log_density: f64 = current
        .entries
        .iter()
        .zip(&reused)
        .filter(|(_, r)| !**r)
        .map(|(e, _)| e.log_density)
        .sum();
    let correction =
        (n_old as f64).ln() - (n_new as f64).ln() + stale_log_density - fresh_log_density;
    Ok(Proposal {
        trace,
        correction,
        site: Some(site),
    })
}

fn reusable(old_dist: &Distribution, old_value: &Value, dist: &Distribution) -> bool {
    old_dist.kind() == dist.kind()
        && dist
            .log_density(old_value)
            .is_ok_and(|lp| lp > f64::NEG_INFINITY)
}

/// Shared MH/SA driver: `temperature(t)` scales the log-weight difference
/// of the `t`-th proposal.
fn chain_search<P, R, T>(
    program: &P,
    iterations: usize,
    rng: &mut R,
    mut temperature: T,
) -> Result<SearchReport, SearchError>
where
    P: Program + ?Sized,
    R: Rng + ?Sized,
    T: FnMut(usize) -> f64,
{
    if iterations == 0 {
        return Err(SearchError::NoIterations);
    }
    let mut tracker = MapTracker::new();
    let abort = |tracker: &MapTracker, source| SearchError::Execution {
        iteration: tracker.next_iteration(),
        source,
        partial: Box::new(tracker.report().clone()),
    };

    let mut current = execute(program, |_, dist| dist.sample(rng)).map_err(|e| abort(&tracker, e))?;
    tracker.observe(&current);

    for t in 0..iterations - 1 {
        let proposal = propose(program, &current, rng).map_err(|e| abort(&tracker, e))?;
        tracker.observe(&proposal.trace);
        let accept = acceptance_probability(
            current.log_weight,
            proposal.trace.log_weight,
            proposal.correction,
            temperature(t),
        );
        let u: f64 = rng.random();
        if u < accept {
            current = proposal.trace;
        }
    }
    Ok(tracker.into_report())
}

/// Lightweight Metropolis-Hastings used as a MAP searcher: every executed
/// trace, accepted or not, competes for the MAP estimate.
pub fn mh_map_search<P, R>(program: &P, iterations: usize, rng: &mut R) -> Result<SearchReport, SearchError>
where
    P: Program + ?Sized,
    R: Rng + ?Sized,
{
    chain_search(program, iterations, rng, |_| 1.0)
}

/// Simulated annealing: MH with the log-weight difference divided by the
/// scheduled temperature.
pub fn sa_search<P, R>(
    program: &P,
    schedule: &Schedule,
    iterations: usize,
    rng: &mut R,
) -> Result<SearchReport, SearchError>
where
    P: Program + ?Sized,
    R: Rng + ?Sized,
{
    let mut temps = schedule.temperatures();
    chain_search(program, iterations, rng, move |_| {
        temps.next().expect("unbounded temperature sequence")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{scripted, trace_log_weight, Checkpoint, FnProgram};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_temperatures() {
        let e = Schedule::exponential(0.9).unwrap();
        assert!((e.temperature(2) - 0.81).abs() < 1e-15);
        let lm = Schedule::lundy_mees(0.1).unwrap();
        assert!((lm.temperature(1) - 1.0 / 1.1).abs() < 1e-15);
        assert_eq!(e.temperature(0), 1.0);
        assert_eq!(lm.temperature(0), 1.0);
        let s = Schedule::new(ScheduleKind::LundyMees, 2.5, 0.3).unwrap();
        let seq: Vec<f64> = s.temperatures().take(50).collect();
        for (t, temp) in seq.iter().enumerate() {
            assert_eq!(*temp, s.temperature(t));
        }
    }

    #[test]
    fn invalid_schedules() {
        assert!(Schedule::exponential(1.0).is_err());
        assert!(Schedule::exponential(0.0).is_err());
        assert!(Schedule::lundy_mees(0.0).is_err());
        assert!(Schedule::new(ScheduleKind::Exponential, 0.0, 0.5).is_err());
    }

    #[test]
    fn temperatures_stay_positive_after_underflow() {
        let e = Schedule::exponential(0.8).unwrap();
        let temps: Vec<f64> = e.temperatures().take(5000).collect();
        assert!(temps.iter().all(|t| *t > 0.0));
        assert!(temps.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn acceptance_edge_cases() {
        assert_eq!(acceptance_probability(-3.0, -3.0, 0.0, 1.0), 1.0);
        assert!(acceptance_probability(-3.0, -4.0, 0.0, 1e-6) < 1e-300);
        assert_eq!(acceptance_probability(-3.0, -3.0, 0.0, 0.0), 1.0);
        assert_eq!(acceptance_probability(f64::NEG_INFINITY, -3.0, 0.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(-3.0, f64::NEG_INFINITY, 0.0, 1.0), 0.0);
        let p = acceptance_probability(0.0, -1.0, 0.0, 1.0);
        assert!((p - (-1.0f64).exp()).abs() < 1e-15);
        assert!((acceptance_probability(0.0, -1.0, 0.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_program_never_moves() {
        let p = scripted(vec![Checkpoint::Sample(
            Distribution::categorical(vec![1.0]).unwrap(),
        )]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = mh_map_search(&p, 100, &mut rng).unwrap();
        assert_eq!(report.estimates.len(), 1);
        assert!(report.records.iter().all(|r| r.log_weight == 0.0));
    }

    fn branching_program() -> impl Program {
        // The first choice decides how many normal draws follow.
        FnProgram::new(|values: &[Value], step| {
            let n_extra = match values.first() {
                None => return Ok(Checkpoint::Sample(Distribution::categorical(vec![0.3, 0.7])?)),
                Some(v) => 1 + v.as_int().unwrap() as usize,
            };
            if step <= n_extra {
                let prev = values.last().unwrap().as_real().unwrap_or(0.0);
                Ok(Checkpoint::Sample(Distribution::normal(prev, 1.0)?))
            } else if step == n_extra + 1 {
                let x = values.last().unwrap().as_real().unwrap();
                Ok(Checkpoint::Observe(Distribution::normal(x, 0.5)?, Value::Real(1.0)))
            } else {
                Ok(Checkpoint::Done)
            }
        })
    }

    #[test]
    fn proposals_recompute_consistently() {
        let p = branching_program();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut current = execute(&p, |_, d| d.sample(&mut rng)).unwrap();
        for _ in 0..500 {
            let prop = propose(&p, &current, &mut rng).unwrap();
            let t = &prop.trace;
            assert!((trace_log_weight(t, &t.observation_terms) - t.log_weight).abs() < 1e-9);
            assert!(prop.correction.is_finite());
            current = prop.trace;
        }
    }

    #[test]
    fn redraw_at_structural_choice_accounts_for_length_change() {
        let p = branching_program();
        let current = execute(&p, |a, _| match a.position {
            0 => Value::Int(0),
            _ => Value::Real(0.25 * a.position as f64),
        })
        .unwrap();
        assert_eq!(current.entries.len(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let prop = propose(&p, &current, &mut rng).unwrap();
            if prop.site == Some(0) && prop.trace.entries[0].value == Value::Int(1) {
                // position 1 is reused, position 2 is fresh
                assert_eq!(prop.trace.entries[1].value, current.entries[1].value);
                let expected = (2f64).ln() - (3f64).ln() + current.entries[0].log_density
                    - prop.trace.entries[0].log_density
                    - prop.trace.entries[2].log_density;
                assert!((prop.correction - expected).abs() < 1e-12);
                return;
            }
        }
        panic!("structural redraw never proposed");
    }

    #[test]
    fn unit_temperature_annealing_is_mh() {
        let p = branching_program();
        let mut a = ChaCha8Rng::seed_from_u64(4);
        let mut b = ChaCha8Rng::seed_from_u64(4);
        let mh = mh_map_search(&p, 300, &mut a).unwrap();
        let sa = chain_search(&p, 300, &mut b, |_| 1.0).unwrap();
        assert_eq!(mh, sa);
    }
}
