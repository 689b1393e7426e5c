//! One-dimensional Gaussian mixture with unknown component means and
//! per-datum assignments: continuous and discrete choices in one program.

use crate::dist::{Distribution, Value};
use crate::error::{ModelError, ProgramError};
use crate::trace::{start_stepwise, Checkpoint, Execution, Program, Stepwise};

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    /// Prior probability of each component.
    pub component_prior: Vec<f64>,
    /// `(mean, sd)` of the normal prior on each component mean.
    pub mean_prior: Vec<(f64, f64)>,
    pub noise_sd: f64,
    pub data: Vec<f64>,
}

impl MixtureSpec {
    pub fn n_components(&self) -> usize {
        self.component_prior.len()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let k = self.n_components();
        if k == 0 {
            return Err(ModelError::Invalid("mixture needs at least one component".into()));
        }
        Distribution::categorical(self.component_prior.clone())
            .map_err(|e| ModelError::Invalid(format!("component prior: {e}")))?;
        if self.mean_prior.len() != k {
            return Err(ModelError::Invalid(format!("need {k} mean priors")));
        }
        for &(m, sd) in &self.mean_prior {
            Distribution::normal(m, sd).map_err(|e| ModelError::Invalid(format!("mean prior: {e}")))?;
        }
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(ModelError::Invalid(format!("noise sd {}", self.noise_sd)));
        }
        if self.data.is_empty() {
            return Err(ModelError::Invalid("mixture needs data".into()));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::Invalid("data must be finite".into()));
        }
        Ok(())
    }

    /// Two equally weighted components with N(0, 10) mean priors.
    pub fn two_clusters(data: Vec<f64>, noise_sd: f64) -> Self {
        MixtureSpec {
            component_prior: vec![0.5, 0.5],
            mean_prior: vec![(0.0, 10.0); 2],
            noise_sd,
            data,
        }
    }
}

/// Samples each component mean, then for each datum samples its component
/// and observes the datum under that component.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmProgram {
    means: Vec<Distribution>,
    assignment: Distribution,
    noise_sd: f64,
    data: Vec<Value>,
}

impl Stepwise for GmmProgram {
    fn checkpoint(&self, values: &[Value], step: usize) -> Result<Checkpoint, ProgramError> {
        let k = self.means.len();
        if step < k {
            return Ok(Checkpoint::Sample(self.means[step].clone()));
        }
        let u = step - k;
        let i = u / 2;
        if i >= self.data.len() {
            return Ok(Checkpoint::Done);
        }
        if u % 2 == 0 {
            return Ok(Checkpoint::Sample(self.assignment.clone()));
        }
        let component = values
            .get(k + i)
            .and_then(Value::as_int)
            .ok_or_else(|| ProgramError::Model("assignment missing".into()))? as usize;
        let mean = values[component]
            .as_real()
            .ok_or_else(|| ProgramError::Model("component mean is not real".into()))?;
        Ok(Checkpoint::Observe(
            Distribution::normal(mean, self.noise_sd)?,
            self.data[i].clone(),
        ))
    }
}

impl Program for GmmProgram {
    fn start(&self) -> Box<dyn Execution + '_> {
        start_stepwise(self)
    }
}

pub fn gmm_program(spec: &MixtureSpec) -> Result<GmmProgram, ModelError> {
    spec.validate()?;
    Ok(GmmProgram {
        means: spec
            .mean_prior
            .iter()
            .map(|&(mean, sd)| Distribution::Normal { mean, sd })
            .collect(),
        assignment: Distribution::Categorical {
            probs: spec.component_prior.clone(),
        },
        noise_sd: spec.noise_sd,
        data: spec.data.iter().map(|&x| Value::Real(x)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{execute, Address};
    use std::f64::consts::PI;

    fn fixed(means: Vec<f64>, labels: Vec<i64>) -> impl FnMut(&Address, &Distribution) -> Value {
        move |a, _| {
            if a.position < means.len() {
                Value::Real(means[a.position])
            } else {
                Value::Int(labels[a.position - means.len()])
            }
        }
    }

    #[test]
    fn single_component_at_mode() {
        let spec = MixtureSpec {
            component_prior: vec![1.0],
            mean_prior: vec![(0.0, 1.0)],
            noise_sd: 1.0,
            data: vec![0.0],
        };
        let p = gmm_program(&spec).unwrap();
        let t = execute(&p, fixed(vec![0.0], vec![0])).unwrap();
        assert!((t.log_weight - 2.0 * (-0.5 * (2.0 * PI).ln())).abs() < 1e-12);
    }

    #[test]
    fn label_permutation_preserves_log_weight() {
        let spec = MixtureSpec::two_clusters(vec![-1.0, 0.5, 2.0, 3.5], 1.0);
        let p = gmm_program(&spec).unwrap();
        let a = execute(&p, fixed(vec![-0.5, 3.0], vec![0, 0, 1, 1])).unwrap();
        let b = execute(&p, fixed(vec![3.0, -0.5], vec![1, 1, 0, 0])).unwrap();
        assert!((a.log_weight - b.log_weight).abs() < 1e-9);
    }

    #[test]
    fn empty_data_is_rejected() {
        assert!(gmm_program(&MixtureSpec::two_clusters(vec![], 1.0)).is_err());
        let mut spec = MixtureSpec::two_clusters(vec![1.0], 1.0);
        spec.noise_sd = 0.0;
        assert!(gmm_program(&spec).is_err());
    }
}
