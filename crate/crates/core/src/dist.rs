//! Primitive distributions and the values they produce.
//!
//! Every density is returned in log space (nats). Values outside the support
//! score `-inf`; malformed parameters or a value of the wrong shape are errors.

use std::f64::consts::PI;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use rand_distr::Distribution as Sampler;
use statrs::function::gamma::ln_gamma;

use crate::error::DistError;

const SUM_TOLERANCE: f64 = 1e-12;
const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A value drawn from, or observed under, a [`Distribution`].
///
/// Equality and hashing are by exact representation: reals compare by bit
/// pattern, so `0.0` and `-0.0` are different values and `NaN` equals itself.
#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Vector(Vec<f64>),
}

impl Value {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(k) => Some(*k),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Real(_) => "real",
            Value::Vector(_) => "real-vector",
        }
    }

    /// Total order: integers, then reals, then vectors; within a variant by
    /// value (vectors lexicographically).
    pub fn cmp_lex(&self, other: &Value) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Vector(a), Value::Vector(b)) => {
                for (x, y) in a.iter().zip(b) {
                    match x.total_cmp(y) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => self.variant_rank().cmp(&other.variant_rank()),
        }
    }

    fn variant_rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Real(_) => 1,
            Value::Vector(_) => 2,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Vector(a), Value::Vector(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.variant_rank().hash(state);
        match self {
            Value::Int(k) => k.hash(state),
            Value::Real(x) => x.to_bits().hash(state),
            Value::Vector(v) => {
                v.len().hash(state);
                for x in v {
                    x.to_bits().hash(state);
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(k) => write!(f, "{k}"),
            Value::Real(x) => write!(f, "{x}"),
            Value::Vector(v) => {
                write!(f, "[")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistKind {
    Categorical,
    UniformDiscrete,
    Poisson,
    Normal,
    UniformContinuous,
    Gamma,
    Beta,
    Dirichlet,
}

impl DistKind {
    /// Discrete kinds take integer values.
    pub fn is_discrete(self) -> bool {
        matches!(
            self,
            DistKind::Categorical | DistKind::UniformDiscrete | DistKind::Poisson
        )
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DistKind::Categorical => "categorical",
            DistKind::UniformDiscrete => "uniform-discrete",
            DistKind::Poisson => "poisson",
            DistKind::Normal => "normal",
            DistKind::UniformContinuous => "uniform-continuous",
            DistKind::Gamma => "gamma",
            DistKind::Beta => "beta",
            DistKind::Dirichlet => "dirichlet",
        };
        f.write_str(name)
    }
}

/// The closed set of primitive distributions a program may sample from or
/// observe under.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Index `k` with probability `probs[k]`.
    Categorical { probs: Vec<f64> },
    /// Integers in `low..=high`, equally likely.
    UniformDiscrete { low: i64, high: i64 },
    Poisson { rate: f64 },
    Normal { mean: f64, sd: f64 },
    /// Reals in `[low, high]`.
    UniformContinuous { low: f64, high: f64 },
    /// Shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
    Beta { alpha: f64, beta: f64 },
    Dirichlet { concentration: Vec<f64> },
}

/// Fingerprint of a distribution's kind and parameters (rounded to 12
/// significant digits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub u64);

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl Distribution {
    pub fn categorical(probs: Vec<f64>) -> Result<Self, DistError> {
        let d = Distribution::Categorical { probs };
        d.validate().map(|_| d)
    }

    pub fn uniform_discrete(low: i64, high: i64) -> Result<Self, DistError> {
        let d = Distribution::UniformDiscrete { low, high };
        d.validate().map(|_| d)
    }

    pub fn poisson(rate: f64) -> Result<Self, DistError> {
        let d = Distribution::Poisson { rate };
        d.validate().map(|_| d)
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self, DistError> {
        let d = Distribution::Normal { mean, sd };
        d.validate().map(|_| d)
    }

    pub fn uniform_continuous(low: f64, high: f64) -> Result<Self, DistError> {
        let d = Distribution::UniformContinuous { low, high };
        d.validate().map(|_| d)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self, DistError> {
        let d = Distribution::Gamma { shape, rate };
        d.validate().map(|_| d)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self, DistError> {
        let d = Distribution::Beta { alpha, beta };
        d.validate().map(|_| d)
    }

    pub fn dirichlet(concentration: Vec<f64>) -> Result<Self, DistError> {
        let d = Distribution::Dirichlet { concentration };
        d.validate().map(|_| d)
    }

    pub fn kind(&self) -> DistKind {
        match self {
            Distribution::Categorical { .. } => DistKind::Categorical,
            Distribution::UniformDiscrete { .. } => DistKind::UniformDiscrete,
            Distribution::Poisson { .. } => DistKind::Poisson,
            Distribution::Normal { .. } => DistKind::Normal,
            Distribution::UniformContinuous { .. } => DistKind::UniformContinuous,
            Distribution::Gamma { .. } => DistKind::Gamma,
            Distribution::Beta { .. } => DistKind::Beta,
            Distribution::Dirichlet { .. } => DistKind::Dirichlet,
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> DistError {
        DistError::InvalidParameters {
            kind: self.kind(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        match self {
            Distribution::Categorical { probs } => {
                if probs.is_empty() {
                    return Err(self.invalid("no categories"));
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(self.invalid("probabilities must be finite and nonnegative"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > SUM_TOLERANCE {
                    return Err(self.invalid(format!("probabilities sum to {total}")));
                }
            }
            Distribution::UniformDiscrete { low, high } => {
                if low > high {
                    return Err(self.invalid(format!("empty range {low}..={high}")));
                }
            }
            Distribution::Poisson { rate } => {
                if !positive(*rate) {
                    return Err(self.invalid(format!("rate {rate}")));
                }
            }
            Distribution::Normal { mean, sd } => {
                if !mean.is_finite() || !positive(*sd) {
                    return Err(self.invalid(format!("mean {mean}, sd {sd}")));
                }
            }
            Distribution::UniformContinuous { low, high } => {
                if !low.is_finite() || !high.is_finite() || low >= high {
                    return Err(self.invalid(format!("range [{low}, {high}]")));
                }
            }
            Distribution::Gamma { shape, rate } => {
                if !positive(*shape) || !positive(*rate) {
                    return Err(self.invalid(format!("shape {shape}, rate {rate}")));
                }
            }
            Distribution::Beta { alpha, beta } => {
                if !positive(*alpha) || !positive(*beta) {
                    return Err(self.invalid(format!("alpha {alpha}, beta {beta}")));
                }
            }
            Distribution::Dirichlet { concentration } => {
                if concentration.len() < 2 {
                    return Err(self.invalid("need at least two components"));
                }
                if !concentration.iter().all(|a| positive(*a)) {
                    return Err(self.invalid("concentrations must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Log of the pmf or pdf at `value`, `-inf` outside the support.
    pub fn log_density(&self, value: &Value) -> Result<f64, DistError> {
        self.validate()?;
        let mismatch = || DistError::TypeMismatch {
            kind: self.kind(),
            value: value.type_name(),
        };
        let lp = match self {
            Distribution::Categorical { probs } => {
                let k = value.as_int().ok_or_else(mismatch)?;
                match usize::try_from(k).ok().and_then(|k| probs.get(k)) {
                    Some(p) => p.ln(),
                    None => f64::NEG_INFINITY,
                }
            }
            Distribution::UniformDiscrete { low, high } => {
                let k = value.as_int().ok_or_else(mismatch)?;
                if (*low..=*high).contains(&k) {
                    -((*high as f64) - (*low as f64) + 1.0).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Poisson { rate } => {
                let k = value.as_int().ok_or_else(mismatch)?;
                if k < 0 {
                    f64::NEG_INFINITY
                } else {
                    let k = k as f64;
                    k * rate.ln() - rate - ln_gamma(k + 1.0)
                }
            }
            Distribution::Normal { mean, sd } => {
                let x = value.as_real().ok_or_else(mismatch)?;
                if !x.is_finite() {
                    f64::NEG_INFINITY
                } else {
                    let z = (x - mean) / sd;
                    -0.5 * (2.0 * PI).ln() - sd.ln() - 0.5 * z * z
                }
            }
            Distribution::UniformContinuous { low, high } => {
                let x = value.as_real().ok_or_else(mismatch)?;
                if x >= *low && x <= *high {
                    -(high - low).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Gamma { shape, rate } => {
                let x = value.as_real().ok_or_else(mismatch)?;
                if x > 0.0 && x.is_finite() {
                    shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * x.ln() - rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Beta { alpha, beta } => {
                let x = value.as_real().ok_or_else(mismatch)?;
                if x > 0.0 && x < 1.0 {
                    ln_gamma(alpha + beta) - ln_gamma(*alpha) - ln_gamma(*beta)
                        + (alpha - 1.0) * x.ln()
                        + (beta - 1.0) * (1.0 - x).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Dirichlet { concentration } => {
                let xs = value.as_vector().ok_or_else(mismatch)?;
                if xs.len() != concentration.len() {
                    return Err(mismatch());
                }
                let total: f64 = xs.iter().sum();
                if xs.iter().any(|x| !(*x > 0.0)) || (total - 1.0).abs() > SIMPLEX_TOLERANCE {
                    f64::NEG_INFINITY
                } else {
                    let norm = ln_gamma(concentration.iter().sum())
                        - concentration.iter().map(|a| ln_gamma(*a)).sum::<f64>();
                    let body: f64 = concentration
                        .iter()
                        .zip(xs)
                        .filter(|(a, _)| **a != 1.0)
                        .map(|(a, x)| (a - 1.0) * x.ln())
                        .sum();
                    norm + body
                }
            }
        };
        Ok(lp)
    }

    /// Draw one value. Parameters are assumed valid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            Distribution::Categorical { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut last_positive = 0;
                for (k, p) in probs.iter().enumerate() {
                    if *p > 0.0 {
                        last_positive = k;
                        acc += p;
                        if u < acc {
                            return Value::Int(k as i64);
                        }
                    }
                }
                Value::Int(last_positive as i64)
            }
            Distribution::UniformDiscrete { low, high } => Value::Int(rng.random_range(*low..=*high)),
            Distribution::Poisson { rate } => {
                let k: f64 = rand_distr::Poisson::new(*rate)
                    .expect("validated rate")
                    .sample(rng);
                Value::Int(k as i64)
            }
            Distribution::Normal { mean, sd } => {
                let n = rand_distr::Normal::new(*mean, *sd).expect("validated normal");
                Value::Real(n.sample(rng))
            }
            Distribution::UniformContinuous { low, high } => {
                Value::Real(rng.random_range(*low..=*high))
            }
            Distribution::Gamma { shape, rate } => {
                let g = rand_distr::Gamma::new(*shape, 1.0 / rate).expect("validated gamma");
                loop {
                    let x = g.sample(rng);
                    if x > 0.0 && x.is_finite() {
                        return Value::Real(x);
                    }
                }
            }
            Distribution::Beta { alpha, beta } => {
                let b = rand_distr::Beta::new(*alpha, *beta).expect("validated beta");
                loop {
                    let x = b.sample(rng);
                    if x > 0.0 && x < 1.0 {
                        return Value::Real(x);
                    }
                }
            }
            Distribution::Dirichlet { concentration } => {
                let gammas: Vec<_> = concentration
                    .iter()
                    .map(|a| rand_distr::Gamma::new(*a, 1.0).expect("validated concentration"))
                    .collect();
                loop {
                    let draws: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
                    let total: f64 = draws.iter().sum();
                    let xs: Vec<f64> = draws.iter().map(|x| x / total).collect();
                    if total.is_finite() && xs.iter().all(|x| *x > 0.0) {
                        return Value::Vector(xs);
                    }
                }
            }
        }
    }

    /// Enumerate the support of a finite discrete distribution, in increasing
    /// order. `None` for continuous or unbounded kinds.
    pub fn finite_support(&self) -> Option<Vec<Value>> {
        match self {
            Distribution::Categorical { probs } => Some(
                probs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(k, _)| Value::Int(k as i64))
                    .collect(),
            ),
            Distribution::UniformDiscrete { low, high } => {
                Some((*low..=*high).map(Value::Int).collect())
            }
            _ => None,
        }
    }

    pub fn signature(&self) -> Signature {
        let mut h = DefaultHasher::new();
        self.kind().hash(&mut h);
        match self {
            Distribution::Categorical { probs } => hash_reals(&mut h, probs),
            Distribution::UniformDiscrete { low, high } => {
                low.hash(&mut h);
                high.hash(&mut h);
            }
            Distribution::Poisson { rate } => hash_reals(&mut h, &[*rate]),
            Distribution::Normal { mean, sd } => hash_reals(&mut h, &[*mean, *sd]),
            Distribution::UniformContinuous { low, high } => hash_reals(&mut h, &[*low, *high]),
            Distribution::Gamma { shape, rate } => hash_reals(&mut h, &[*shape, *rate]),
            Distribution::Beta { alpha, beta } => hash_reals(&mut h, &[*alpha, *beta]),
            Distribution::Dirichlet { concentration } => hash_reals(&mut h, concentration),
        }
        Signature(h.finish())
    }
}

fn hash_reals(h: &mut DefaultHasher, xs: &[f64]) {
    xs.len().hash(h);
    for x in xs {
        round_significant(*x).hash(h);
    }
}

/// `x` as (mantissa, exponent) with a 12-digit mantissa.
fn round_significant(x: f64) -> (i64, i32) {
    const DIGITS: i32 = 12;
    if !x.is_finite() {
        return (x.to_bits() as i64, i32::MAX);
    }
    if x == 0.0 {
        return (0, 0);
    }
    let mut exp = x.abs().log10().floor() as i32;
    let mut mantissa = (x / 10f64.powi(exp - (DIGITS - 1))).round() as i64;
    if mantissa.abs() >= 10i64.pow(DIGITS as u32) {
        mantissa /= 10;
        exp += 1;
    }
    (mantissa, exp)
}
