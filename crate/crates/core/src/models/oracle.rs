//! Exhaustive MAP search over programs with finite discrete choices.

use crate::dist::{Distribution, Value};
use crate::error::{ExecutionError, ModelError};
use crate::trace::{execute, Address, Program, Trace};

pub const MAX_ENUMERATED_TRACES: u64 = 1_000_000;

/// Enumerate every trace of `program` and return the one with the highest
/// log-weight. Traces are visited in lexicographic order of their value
/// sequences, so ties resolve to the smallest sequence.
pub fn brute_force_map(program: &(impl Program + ?Sized)) -> Result<(Trace, f64), ModelError> {
    let mut best: Option<Trace> = None;
    for_each_trace(program, |trace| {
        if best.as_ref().is_none_or(|b| trace.log_weight > b.log_weight) {
            best = Some(trace);
        }
    })?;
    let best = best.expect("at least one trace is enumerated");
    let lw = best.log_weight;
    Ok((best, lw))
}

/// Call `visit` on every trace of `program` in lexicographic order.
pub fn for_each_trace(
    program: &(impl Program + ?Sized),
    mut visit: impl FnMut(Trace),
) -> Result<u64, ModelError> {
    // Index into each site's support; sites past the prefix start at 0.
    let mut prefix: Vec<usize> = Vec::new();
    let mut count = 0u64;
    loop {
        let mut sizes: Vec<usize> = Vec::new();
        let mut unsupported: Option<(Address, Distribution)> = None;
        let result = execute(program, |address, dist| {
            let Some(support) = dist.finite_support() else {
                unsupported.get_or_insert((*address, dist.clone()));
                return Value::Int(i64::MIN);
            };
            let p = address.position;
            if p >= prefix.len() {
                prefix.push(0);
            }
            sizes.push(support.len());
            support[prefix[p]].clone()
        });
        if let Some((address, dist)) = unsupported {
            return Err(ModelError::Unsupported {
                kind: dist.kind(),
                address,
            });
        }
        let trace = result.map_err(|e: ExecutionError| ModelError::Execution(e))?;
        count += 1;
        if count > MAX_ENUMERATED_TRACES {
            return Err(ModelError::TooLarge {
                count: count as f64,
                limit: MAX_ENUMERATED_TRACES,
            });
        }
        prefix.truncate(sizes.len());
        visit(trace);

        match (0..sizes.len()).rev().find(|&p| prefix[p] + 1 < sizes[p]) {
            Some(p) => {
                prefix.truncate(p + 1);
                prefix[p] += 1;
            }
            None => return Ok(count),
        }
    }
}
