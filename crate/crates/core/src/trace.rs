//! The stepwise execution protocol and trace accounting.
//!
//! A [`Program`] is started to obtain an [`Execution`], which is stepped until
//! it reports [`Checkpoint::Done`]. A `Sample` checkpoint must be answered
//! with a value on the next step; every other checkpoint is resumed with
//! `None`. [`run_program`] drives an execution to completion, asking a guide
//! for each sampled value and accumulating the trace log-weight.

use std::fmt;

use crate::dist::{Distribution, Signature, Value};
use crate::error::{ExecutionError, ProgramError};

/// One step of a running program.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    /// Request a value drawn from the distribution.
    Sample(Distribution),
    /// Condition on `value` having been drawn from the distribution.
    Observe(Distribution, Value),
    /// A program output; ignored by the searchers.
    Output(Value),
    Done,
}

/// A single resumable run of a program.
pub trait Execution {
    /// Advance to the next checkpoint. `supplied` answers a preceding
    /// `Sample` and must be `None` otherwise.
    fn step(&mut self, supplied: Option<Value>) -> Result<Checkpoint, ProgramError>;
}

/// A probabilistic program: deterministic given the values supplied at its
/// sample checkpoints.
pub trait Program {
    fn start(&self) -> Box<dyn Execution + '_>;
}

impl<P: Program + ?Sized> Program for &P {
    fn start(&self) -> Box<dyn Execution + '_> {
        (**self).start()
    }
}

/// Identifies a random choice: its ordinal within the run and the
/// fingerprint of the distribution it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address {
    pub position: usize,
    pub signature: Signature,
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}@{}", self.position, self.signature)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub address: Address,
    pub dist: Distribution,
    pub value: Value,
    /// `dist.log_density(value)`, cached.
    pub log_density: f64,
    /// Accumulated log-weight right after this choice's own density was added.
    pub prefix_log_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Log-likelihood of each observation, in program order.
    pub observation_terms: Vec<f64>,
    pub log_weight: f64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().map(|e| &e.value)
    }

    /// Whether the trace has nonzero probability.
    pub fn is_feasible(&self) -> bool {
        self.log_weight > f64::NEG_INFINITY
    }
}

/// Log-weight of a trace recomputed from scratch: the log-densities of its
/// entries plus the given observation log-likelihoods.
pub fn trace_log_weight(trace: &Trace, observation_terms: &[f64]) -> f64 {
    let choices: f64 = trace
        .entries
        .iter()
        .map(|e| e.dist.log_density(&e.value).unwrap_or(f64::NAN))
        .sum();
    choices + observation_terms.iter().sum::<f64>()
}

/// Execute `program` to completion. `guide` picks the value at every sample
/// checkpoint; `sink` receives program outputs.
pub fn run_program<G, S>(
    program: &(impl Program + ?Sized),
    mut guide: G,
    mut sink: S,
) -> Result<Trace, ExecutionError>
where
    G: FnMut(&Address, &Distribution) -> Value,
    S: FnMut(&Value),
{
    let mut exec = program.start();
    let mut trace = Trace::default();
    let mut log_weight = 0.0;
    let mut supplied = None;
    loop {
        let checkpoint = match exec.step(supplied.take()) {
            Ok(c) => c,
            Err(source) => {
                trace.log_weight = log_weight;
                return Err(ExecutionError::Program {
                    source,
                    partial: Box::new(trace),
                });
            }
        };
        match checkpoint {
            Checkpoint::Sample(dist) => {
                let address = Address {
                    position: trace.entries.len(),
                    signature: dist.signature(),
                };
                let value = guide(&address, &dist);
                let lp = match dist.log_density(&value) {
                    Ok(lp) => lp,
                    Err(source) => {
                        trace.log_weight = log_weight;
                        return Err(ExecutionError::Distribution {
                            address,
                            source,
                            partial: Box::new(trace),
                        });
                    }
                };
                if !(lp > f64::NEG_INFINITY) {
                    trace.log_weight = log_weight;
                    return Err(ExecutionError::OutOfSupport {
                        address,
                        partial: Box::new(trace),
                    });
                }
                log_weight += lp;
                trace.entries.push(TraceEntry {
                    address,
                    dist,
                    value: value.clone(),
                    log_density: lp,
                    prefix_log_weight: log_weight,
                });
                supplied = Some(value);
            }
            Checkpoint::Observe(dist, value) => {
                let lp = match dist.log_density(&value) {
                    Ok(lp) => lp,
                    Err(e) => {
                        trace.log_weight = log_weight;
                        return Err(ExecutionError::Program {
                            source: e.into(),
                            partial: Box::new(trace),
                        });
                    }
                };
                log_weight += lp;
                trace.observation_terms.push(lp);
            }
            Checkpoint::Output(z) => sink(&z),
            Checkpoint::Done => break,
        }
    }
    trace.log_weight = log_weight;
    Ok(trace)
}

/// [`run_program`] without an output sink.
pub fn execute<G>(program: &(impl Program + ?Sized), guide: G) -> Result<Trace, ExecutionError>
where
    G: FnMut(&Address, &Distribution) -> Value,
{
    run_program(program, guide, |_| {})
}

/// A model written as a function of the values supplied so far.
///
/// `checkpoint` receives the sampled values in order and the number of
/// checkpoints already emitted, and returns the next checkpoint. Closures of
/// that shape implement it, and [`start_stepwise`] turns any implementor into
/// an [`Execution`].
pub trait Stepwise {
    fn checkpoint(&self, values: &[Value], step: usize) -> Result<Checkpoint, ProgramError>;
}

impl<F> Stepwise for F
where
    F: Fn(&[Value], usize) -> Result<Checkpoint, ProgramError>,
{
    fn checkpoint(&self, values: &[Value], step: usize) -> Result<Checkpoint, ProgramError> {
        self(values, step)
    }
}

/// A [`Program`] backed by a closure; handy for small models and tests.
pub struct FnProgram<F> {
    body: F,
}

impl<F> FnProgram<F>
where
    F: Fn(&[Value], usize) -> Result<Checkpoint, ProgramError>,
{
    pub fn new(body: F) -> Self {
        FnProgram { body }
    }
}

impl<F> Program for FnProgram<F>
where
    F: Fn(&[Value], usize) -> Result<Checkpoint, ProgramError>,
{
    fn start(&self) -> Box<dyn Execution + '_> {
        start_stepwise(&self.body)
    }
}

/// Start a run of a [`Stepwise`] model, enforcing the checkpoint protocol.
pub fn start_stepwise<S: Stepwise + ?Sized>(model: &S) -> Box<dyn Execution + '_> {
    Box::new(StepwiseExecution {
        model,
        values: Vec::new(),
        steps: 0,
        awaiting_value: false,
        done: false,
    })
}

struct StepwiseExecution<'a, S: ?Sized> {
    model: &'a S,
    values: Vec<Value>,
    steps: usize,
    awaiting_value: bool,
    done: bool,
}

impl<S: Stepwise + ?Sized> Execution for StepwiseExecution<'_, S> {
    fn step(&mut self, supplied: Option<Value>) -> Result<Checkpoint, ProgramError> {
        if self.done {
            return Err(ProgramError::Protocol("stepped after Done".into()));
        }
        match (self.awaiting_value, supplied) {
            (true, Some(v)) => self.values.push(v),
            (true, None) => return Err(ProgramError::Protocol("sample left unanswered".into())),
            (false, Some(_)) => {
                return Err(ProgramError::Protocol("value supplied without a sample".into()))
            }
            (false, None) => {}
        }
        let checkpoint = self.model.checkpoint(&self.values, self.steps)?;
        self.steps += 1;
        self.awaiting_value = matches!(checkpoint, Checkpoint::Sample(_));
        self.done = matches!(checkpoint, Checkpoint::Done);
        Ok(checkpoint)
    }
}

/// A program that replays a fixed list of checkpoints, ignoring the values
/// it is supplied.
pub fn scripted(checkpoints: Vec<Checkpoint>) -> impl Program {
    FnProgram::new(move |_, step| Ok(checkpoints.get(step).cloned().unwrap_or(Checkpoint::Done)))
}
