//! Plain-text format for a ground-truth HMM and a sequence sampled from it.
//!
//! ```text
//! # comment
//! hidden 16
//! symbols 16
//! initial
//! <hidden reals>
//! transition
//! <hidden lines of hidden reals>
//! emission
//! <hidden lines of symbols reals>
//! states
//! <hidden state per step, whitespace separated>
//! observations
//! <symbol per step, whitespace separated>
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Reals are written
//! with 17 significant digits so a file round-trips exactly.

use std::fmt::Write as _;

use rand::Rng;

use crate::dist::Distribution;
use crate::error::ModelError;
use crate::models::hmm::{HmmParams, HmmSpec};

/// The shipped ground truth for the 16-state benchmark.
pub const HMM16_DATA: &str = include_str!("../../data/hmm16.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub params: HmmParams,
    pub states: Vec<usize>,
    pub observations: Vec<usize>,
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Invalid(msg.into())
}

impl GroundTruth {
    pub fn bundled_hmm16() -> Self {
        Self::parse(HMM16_DATA).expect("bundled hmm16 data is well formed")
    }

    /// Draw parameters (Dirichlet(1) transition rows, a near-diagonal
    /// emission matrix with `diagonal` on the diagonal) and a sequence of
    /// `length` steps.
    pub fn generate<R: Rng + ?Sized>(n_hidden: usize, diagonal: f64, length: usize, rng: &mut R) -> Self {
        let off = (1.0 - diagonal) / (n_hidden - 1) as f64;
        let emission: Vec<Vec<f64>> = (0..n_hidden)
            .map(|i| (0..n_hidden).map(|j| if i == j { diagonal } else { off }).collect())
            .collect();
        let prior = Distribution::Dirichlet {
            concentration: vec![1.0; n_hidden],
        };
        let transition: Vec<Vec<f64>> = (0..n_hidden)
            .map(|_| prior.sample(rng).as_vector().unwrap().to_vec())
            .collect();
        let initial = vec![1.0 / n_hidden as f64; n_hidden];
        let draw = |probs: &[f64], rng: &mut R| {
            Distribution::Categorical { probs: probs.to_vec() }
                .sample(rng)
                .as_int()
                .unwrap() as usize
        };
        let mut states: Vec<usize> = Vec::with_capacity(length);
        let mut observations = Vec::with_capacity(length);
        for t in 0..length {
            let s = if t == 0 {
                draw(initial.as_slice(), rng)
            } else {
                draw(transition[states[t - 1]].as_slice(), rng)
            };
            states.push(s);
            observations.push(draw(emission[s].as_slice(), rng));
        }
        GroundTruth {
            params: HmmParams {
                initial,
                transition,
                emission,
            },
            states,
            observations,
        }
    }

    /// The unknown-transition benchmark built on this ground truth:
    /// Dirichlet(`concentration`) priors on every transition row.
    pub fn spec(&self, concentration: f64) -> HmmSpec {
        let k = self.params.n_hidden();
        HmmSpec {
            initial: self.params.initial.clone(),
            emission: self.params.emission.clone(),
            transition_prior: vec![vec![concentration; k]; k],
            observations: self.observations.clone(),
        }
    }

    pub fn render(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let row = |xs: &[f64]| xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let ints = |xs: &[usize]| xs.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "hidden {}", self.params.n_hidden());
        let _ = writeln!(out, "symbols {}", self.params.n_symbols());
        let _ = writeln!(out, "initial\n{}", row(&self.params.initial));
        let _ = writeln!(out, "transition");
        for r in &self.params.transition {
            let _ = writeln!(out, "{}", row(r));
        }
        let _ = writeln!(out, "emission");
        for r in &self.params.emission {
            let _ = writeln!(out, "{}", row(r));
        }
        let _ = writeln!(out, "states\n{}", ints(&self.states));
        let _ = writeln!(out, "observations\n{}", ints(&self.observations));
        out
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<usize, ModelError> {
            let line = lines.next().ok_or_else(|| invalid(format!("missing `{key}`")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(invalid(format!("expected `{key}`, found `{line}`")));
            }
            parts
                .next()
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| invalid(format!("bad count in `{line}`")))
        };
        let hidden = header("hidden")?;
        let symbols = header("symbols")?;

        let mut section = |key: &str, rows: usize| -> Result<Vec<Vec<f64>>, ModelError> {
            match lines.next() {
                Some(l) if l == key => {}
                other => return Err(invalid(format!("expected `{key}`, found {other:?}"))),
            }
            (0..rows)
                .map(|_| {
                    let line = lines.next().ok_or_else(|| invalid(format!("`{key}` is short")))?;
                    line.split_whitespace()
                        .map(|x| x.parse::<f64>().map_err(|e| invalid(format!("{key}: {e}"))))
                        .collect()
                })
                .collect()
        };
        let initial = section("initial", 1)?.remove(0);
        let transition = section("transition", hidden)?;
        let emission = section("emission", hidden)?;
        let to_ints = |rows: Vec<Vec<f64>>, key: &str| -> Result<Vec<usize>, ModelError> {
            rows[0]
                .iter()
                .map(|x| {
                    if x.fract() == 0.0 && *x >= 0.0 {
                        Ok(*x as usize)
                    } else {
                        Err(invalid(format!("{key}: {x} is not an index")))
                    }
                })
                .collect()
        };
        let states = to_ints(section("states", 1)?, "states")?;
        let observations = to_ints(section("observations", 1)?, "observations")?;

        let params = HmmParams {
            initial,
            transition,
            emission,
        };
        params.validate()?;
        if params.n_symbols() != symbols {
            return Err(invalid(format!("emission has {} symbols, header says {symbols}", params.n_symbols())));
        }
        if states.len() != observations.len() {
            return Err(invalid("states and observations differ in length"));
        }
        if states.iter().any(|&s| s >= hidden) || observations.iter().any(|&y| y >= symbols) {
            return Err(invalid("index out of range"));
        }
        Ok(GroundTruth {
            params,
            states,
            observations,
        })
    }
}
