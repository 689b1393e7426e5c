//! Hidden Markov models as probabilistic programs, plus a Viterbi oracle.

use crate::dist::{Distribution, Value};
use crate::error::{ModelError, ProgramError};
use crate::trace::{start_stepwise, Checkpoint, Execution, Program, Stepwise};

/// Largest number of hidden paths a fixed-parameter HMM may have.
pub const MAX_ENUMERABLE_PATHS: f64 = 1e5;

/// Fully specified HMM parameters. Rows are probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    pub initial: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    pub emission: Vec<Vec<f64>>,
}

impl HmmParams {
    pub fn n_hidden(&self) -> usize {
        self.initial.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emission.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.n_hidden();
        if k == 0 {
            return Err(ModelError::Invalid("HMM needs at least one hidden state".into()));
        }
        check_row("initial distribution", &self.initial)?;
        check_matrix("transition", &self.transition, k, k)?;
        check_matrix("emission", &self.emission, k, self.n_symbols())
    }
}

fn check_row(what: &str, row: &[f64]) -> Result<(), ModelError> {
    Distribution::categorical(row.to_vec())
        .map(|_| ())
        .map_err(|e| ModelError::Invalid(format!("{what}: {e}")))
}

fn check_matrix(what: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), ModelError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(ModelError::Invalid(format!("{what} matrix must be {rows}x{cols}")));
    }
    for (i, row) in m.iter().enumerate() {
        check_row(&format!("{what} row {i}"), row)?;
    }
    Ok(())
}

fn check_observations(observations: &[usize], n_symbols: usize) -> Result<(), ModelError> {
    match observations.iter().find(|&&y| y >= n_symbols) {
        Some(y) => Err(ModelError::Invalid(format!(
            "observation {y} outside 0..{n_symbols}"
        ))),
        None => Ok(()),
    }
}

/// An HMM whose transition matrix is unknown: each row carries a Dirichlet
/// prior. The emission matrix and initial distribution are known.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmSpec {
    pub initial: Vec<f64>,
    pub emission: Vec<Vec<f64>>,
    pub transition_prior: Vec<Vec<f64>>,
    pub observations: Vec<usize>,
}

impl HmmSpec {
    pub fn n_hidden(&self) -> usize {
        self.initial.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.emission.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.n_hidden();
        if k == 0 {
            return Err(ModelError::Invalid("HMM needs at least one hidden state".into()));
        }
        check_row("initial distribution", &self.initial)?;
        check_matrix("emission", &self.emission, k, self.n_symbols())?;
        if self.transition_prior.len() != k {
            return Err(ModelError::Invalid(format!("need {k} transition prior rows")));
        }
        for (i, row) in self.transition_prior.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::Invalid(format!("transition prior row {i} must have {k} entries")));
            }
            Distribution::dirichlet(row.clone())
                .map_err(|e| ModelError::Invalid(format!("transition prior row {i}: {e}")))?;
        }
        check_observations(&self.observations, self.n_symbols())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Transitions {
    Known(Vec<Distribution>),
    Unknown(Vec<Distribution>),
}

/// HMM program. With unknown transitions it first samples every row of the
/// transition matrix, then for each time step samples the hidden state and
/// observes the emitted symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmProgram {
    initial: Distribution,
    transitions: Transitions,
    emission: Vec<Distribution>,
    observations: Vec<Value>,
}

impl HmmProgram {
    fn n_row_choices(&self) -> usize {
        match &self.transitions {
            Transitions::Known(_) => 0,
            Transitions::Unknown(priors) => priors.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

fn categorical_rows(rows: &[Vec<f64>]) -> Vec<Distribution> {
    rows.iter()
        .map(|r| Distribution::Categorical { probs: r.clone() })
        .collect()
}

fn model_error(msg: &str) -> ProgramError {
    ProgramError::Model(msg.into())
}

impl Stepwise for HmmProgram {
    fn checkpoint(&self, values: &[Value], step: usize) -> Result<Checkpoint, ProgramError> {
        let n_rows = self.n_row_choices();
        if let Transitions::Unknown(priors) = &self.transitions {
            if step < n_rows {
                return Ok(Checkpoint::Sample(priors[step].clone()));
            }
        }
        let u = step - n_rows;
        let t = u / 2;
        if t >= self.observations.len() {
            return Ok(Checkpoint::Done);
        }
        let state_at = |t: usize| -> Result<usize, ProgramError> {
            values
                .get(n_rows + t)
                .and_then(Value::as_int)
                .map(|k| k as usize)
                .ok_or_else(|| model_error("hidden state missing"))
        };
        if u % 2 == 0 {
            let dist = if t == 0 {
                self.initial.clone()
            } else {
                let prev = state_at(t - 1)?;
                match &self.transitions {
                    Transitions::Known(rows) => rows[prev].clone(),
                    Transitions::Unknown(_) => {
                        let row = values[prev]
                            .as_vector()
                            .ok_or_else(|| model_error("transition row is not a vector"))?;
                        Distribution::Categorical { probs: row.to_vec() }
                    }
                }
            };
            Ok(Checkpoint::Sample(dist))
        } else {
            let state = state_at(t)?;
            Ok(Checkpoint::Observe(
                self.emission[state].clone(),
                self.observations[t].clone(),
            ))
        }
    }
}

impl Program for HmmProgram {
    fn start(&self) -> Box<dyn Execution + '_> {
        start_stepwise(self)
    }
}

/// Fixed-parameter HMM small enough to enumerate every hidden path.
pub fn tiny_hmm_program(params: &HmmParams, observations: &[usize]) -> Result<HmmProgram, ModelError> {
    params.validate()?;
    check_observations(observations, params.n_symbols())?;
    let paths = (params.n_hidden() as f64).powi(observations.len() as i32);
    if paths > MAX_ENUMERABLE_PATHS {
        return Err(ModelError::TooLarge {
            count: paths,
            limit: MAX_ENUMERABLE_PATHS as u64,
        });
    }
    Ok(HmmProgram {
        initial: Distribution::Categorical {
            probs: params.initial.clone(),
        },
        transitions: Transitions::Known(categorical_rows(&params.transition)),
        emission: categorical_rows(&params.emission),
        observations: observations.iter().map(|&y| Value::Int(y as i64)).collect(),
    })
}

/// HMM with Dirichlet-distributed transition rows.
pub fn hmm16_program(spec: &HmmSpec) -> Result<HmmProgram, ModelError> {
    spec.validate()?;
    Ok(HmmProgram {
        initial: Distribution::Categorical {
            probs: spec.initial.clone(),
        },
        transitions: Transitions::Unknown(
            spec.transition_prior
                .iter()
                .map(|a| Distribution::Dirichlet {
                    concentration: a.clone(),
                })
                .collect(),
        ),
        emission: categorical_rows(&spec.emission),
        observations: spec.observations.iter().map(|&y| Value::Int(y as i64)).collect(),
    })
}

/// The three-state, five-step HMM used for exact correctness checks.
pub fn tiny_hmm() -> (HmmParams, Vec<usize>) {
    let params = HmmParams {
        initial: vec![0.5, 0.3, 0.2],
        transition: vec![
            vec![0.6, 0.3, 0.1],
            vec![0.2, 0.5, 0.3],
            vec![0.25, 0.25, 0.5],
        ],
        emission: vec![
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.6, 0.3],
            vec![0.2, 0.2, 0.6],
        ],
    };
    (params, vec![0, 2, 1, 2, 0])
}

/// Most probable hidden path and its joint log-probability with the
/// observations, by max-product dynamic programming. Ties go to the lowest
/// state index.
pub fn viterbi_oracle(params: &HmmParams, observations: &[usize]) -> Result<(Vec<usize>, f64), ModelError> {
    params.validate()?;
    check_observations(observations, params.n_symbols())?;
    let k = params.n_hidden();
    let Some((&first, rest)) = observations.split_first() else {
        return Ok((Vec::new(), 0.0));
    };
    let ln = |p: f64| p.ln();
    let mut score: Vec<f64> = (0..k)
        .map(|s| ln(params.initial[s]) + ln(params.emission[s][first]))
        .collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(rest.len());
    for &y in rest {
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut from = vec![0; k];
        for (s, slot) in next.iter_mut().enumerate() {
            for (prev, prev_score) in score.iter().enumerate() {
                let cand = prev_score + ln(params.transition[prev][s]);
                if cand > *slot {
                    *slot = cand;
                    from[s] = prev;
                }
            }
            *slot += ln(params.emission[s][y]);
        }
        back.push(from);
        score = next;
    }
    let (mut state, best) = score
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (s, v)| if *v > acc.1 { (s, *v) } else { acc });
    let mut path = vec![state];
    for from in back.iter().rev() {
        state = from[state];
        path.push(state);
    }
    path.reverse();
    Ok((path, best))
}
