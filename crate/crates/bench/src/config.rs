use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bamc::baselines::{Schedule, ScheduleKind};
use bamc::models::{gmm_program, hmm16_program, tiny_hmm, tiny_hmm_program, GroundTruth, MixtureSpec};
use bamc::trace::{scripted, Checkpoint, Program};
use bamc::Distribution;

use crate::error::HarnessError;

/// Benchmark models the harness knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelId {
    /// One categorical choice with a single outcome.
    SingleChoice,
    TinyHmm,
    Hmm16,
    Gmm,
}

impl FromStr for ModelId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-choice" => Ok(ModelId::SingleChoice),
            "tiny-hmm" => Ok(ModelId::TinyHmm),
            "hmm16" => Ok(ModelId::Hmm16),
            "gmm" => Ok(ModelId::Gmm),
            other => Err(HarnessError::Config(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelId::SingleChoice => "single-choice",
            ModelId::TinyHmm => "tiny-hmm",
            ModelId::Hmm16 => "hmm16",
            ModelId::Gmm => "gmm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    Bamc,
    Mh,
    Sa(Schedule),
}

impl Algorithm {
    pub fn id(&self) -> &'static str {
        match self {
            Algorithm::Bamc => "bamc",
            Algorithm::Mh => "mh",
            Algorithm::Sa(_) => "sa",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Sa(s) => write!(f, "sa-{}-{}", s.kind(), s.rate()),
            other => f.write_str(other.id()),
        }
    }
}

pub fn parse_schedule_kind(s: &str) -> Result<ScheduleKind, HarnessError> {
    match s {
        "exponential" => Ok(ScheduleKind::Exponential),
        "lundy-mees" => Ok(ScheduleKind::LundyMees),
        other => Err(HarnessError::Config(format!("unknown schedule `{other}`"))),
    }
}

/// One experiment: `runs` independent searches of one algorithm on one
/// model. Run `r` is seeded with `base_seed + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelId,
    /// Ground-truth file for `hmm16`; the bundled data when `None`.
    pub data: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub parallel: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelId::TinyHmm,
            data: None,
            algorithm: Algorithm::Bamc,
            iterations: 4000,
            runs: 50,
            base_seed: 0,
            parallel: true,
            out: None,
        }
    }
}

/// Raw `key = value` settings as read from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub model: Option<String>,
    pub data: Option<PathBuf>,
    pub algorithm: Option<String>,
    pub schedule: Option<String>,
    pub rate: Option<f64>,
    pub t0: Option<f64>,
    pub iterations: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub parallel: Option<bool>,
    pub out: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| HarnessError::Config(format!("bad value for `{key}`: {e}")))
}

impl Settings {
    /// Parse a plain-text file of `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "model" => s.model = Some(value.to_string()),
                "data" => s.data = Some(value.into()),
                "algorithm" => s.algorithm = Some(value.to_string()),
                "schedule" => s.schedule = Some(value.to_string()),
                "rate" => s.rate = Some(parse_value(key, value)?),
                "t0" => s.t0 = Some(parse_value(key, value)?),
                "iterations" => s.iterations = Some(parse_value(key, value)?),
                "runs" => s.runs = Some(parse_value(key, value)?),
                "seed" => s.seed = Some(parse_value(key, value)?),
                "parallel" => s.parallel = Some(parse_value(key, value)?),
                "out" => s.out = Some(value.into()),
                other => return Err(HarnessError::Config(format!("line {}: unknown key `{other}`", n + 1))),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    /// Fields set in `other` take precedence.
    pub fn overlay(self, other: Settings) -> Settings {
        Settings {
            model: other.model.or(self.model),
            data: other.data.or(self.data),
            algorithm: other.algorithm.or(self.algorithm),
            schedule: other.schedule.or(self.schedule),
            rate: other.rate.or(self.rate),
            t0: other.t0.or(self.t0),
            iterations: other.iterations.or(self.iterations),
            runs: other.runs.or(self.runs),
            seed: other.seed.or(self.seed),
            parallel: other.parallel.or(self.parallel),
            out: other.out.or(self.out),
        }
    }

    pub fn into_config(self) -> Result<ExperimentConfig, HarnessError> {
        let defaults = ExperimentConfig::default();
        let model = match &self.model {
            Some(m) => m.parse()?,
            None => defaults.model,
        };
        let algorithm = match self.algorithm.as_deref().unwrap_or("bamc") {
            "bamc" => Algorithm::Bamc,
            "mh" => Algorithm::Mh,
            "sa" => {
                let kind = parse_schedule_kind(self.schedule.as_deref().unwrap_or("exponential"))?;
                let rate = self
                    .rate
                    .ok_or_else(|| HarnessError::Config("simulated annealing needs `rate`".into()))?;
                let schedule = Schedule::new(kind, self.t0.unwrap_or(1.0), rate)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
                Algorithm::Sa(schedule)
            }
            other => return Err(HarnessError::Config(format!("unknown algorithm `{other}`"))),
        };
        let config = ExperimentConfig {
            model,
            data: self.data,
            algorithm,
            iterations: self.iterations.unwrap_or(defaults.iterations),
            runs: self.runs.unwrap_or(defaults.runs),
            base_seed: self.seed.unwrap_or(defaults.base_seed),
            parallel: self.parallel.unwrap_or(defaults.parallel),
            out: self.out,
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.iterations == 0 {
            return Err(HarnessError::Config("iterations must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Self-describing `key = value` dump, loadable by [`Settings::parse`]
    /// apart from the informational keys after the blank line.
    pub fn describe(&self) -> String {
        let mut lines = vec![
            format!("model = {}", self.model),
            format!("algorithm = {}", self.algorithm.id()),
        ];
        if let Some(d) = &self.data {
            lines.push(format!("data = {}", d.display()));
        }
        if let Algorithm::Sa(s) = &self.algorithm {
            lines.push(format!("schedule = {}", s.kind()));
            lines.push(format!("rate = {}", s.rate()));
            lines.push(format!("t0 = {}", s.t0()));
        }
        lines.push(format!("iterations = {}", self.iterations));
        lines.push(format!("runs = {}", self.runs));
        lines.push(format!("seed = {}", self.base_seed));
        lines.push(format!("parallel = {}", self.parallel));
        if let Some(o) = &self.out {
            lines.push(format!("out = {}", o.display()));
        }
        lines.push(String::new());
        lines.push("# seed policy: run r uses seed + r".into());
        lines.push("# temperature schedules advance once per iteration".into());
        lines.push(format!("# {}", self.model_description()));
        lines.join("\n") + "\n"
    }

    fn model_description(&self) -> String {
        match self.model {
            ModelId::SingleChoice => "single categorical choice with one outcome".into(),
            ModelId::TinyHmm => "3 hidden states, 3 symbols, 5 observations, fixed parameters".into(),
            ModelId::Hmm16 => "16 hidden states, 16 symbols, Dirichlet(1) transition rows, 0.7-diagonal emission".into(),
            ModelId::Gmm => "3-component 1-D Gaussian mixture, N(0, 10) mean priors, noise sd 1, 24 points".into(),
        }
    }

    pub fn build_model(&self) -> Result<Box<dyn Program + Sync>, HarnessError> {
        let model = |e: bamc::ModelError| HarnessError::Config(e.to_string());
        Ok(match self.model {
            ModelId::SingleChoice => Box::new(scripted(vec![Checkpoint::Sample(
                Distribution::categorical(vec![1.0]).map_err(|e| HarnessError::Config(e.to_string()))?,
            )])),
            ModelId::TinyHmm => {
                let (params, obs) = tiny_hmm();
                Box::new(tiny_hmm_program(&params, &obs).map_err(model)?)
            }
            ModelId::Hmm16 => {
                let gt = match &self.data {
                    None => GroundTruth::bundled_hmm16(),
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
                        GroundTruth::parse(&text).map_err(model)?
                    }
                };
                Box::new(hmm16_program(&gt.spec(1.0)).map_err(model)?)
            }
            ModelId::Gmm => Box::new(gmm_program(&default_mixture()).map_err(model)?),
        })
    }
}

/// 24 points in three groups near -6, 0 and 5.
pub fn default_mixture() -> MixtureSpec {
    let data = vec![
        -6.8, -6.1, -5.4, -6.5, -5.9, -6.2, -5.1, -7.0, //
        0.3, -0.4, 0.9, 0.1, -0.8, 0.5, -0.2, 0.6, //
        4.4, 5.2, 5.9, 4.8, 5.5, 4.1, 5.0, 5.7,
    ];
    MixtureSpec {
        component_prior: vec![1.0 / 3.0; 3],
        mean_prior: vec![(0.0, 10.0); 3],
        noise_sd: 1.0,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_value_file() {
        let text = "# sweep\nmodel = hmm16\nalgorithm = sa\nschedule = lundy-mees # LM\nrate=0.9\nruns = 3\niterations = 10\nseed = 7\n";
        let c = Settings::parse(text).unwrap().into_config().unwrap();
        assert_eq!(c.model, ModelId::Hmm16);
        assert_eq!(c.runs, 3);
        assert_eq!(c.seed_for_run(2), 9);
        match c.algorithm {
            Algorithm::Sa(s) => {
                assert_eq!(s.kind(), ScheduleKind::LundyMees);
                assert_eq!(s.rate(), 0.9);
            }
            other => panic!("unexpected {other:?}"),
        }
        let again = Settings::parse(&c.describe()).unwrap().into_config().unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn config_errors() {
        assert!(Settings::parse("model hmm16").is_err());
        assert!(Settings::parse("colour = blue").is_err());
        assert!(Settings::parse("runs = many").is_err());
        let bad = |text: &str| Settings::parse(text).unwrap().into_config().is_err();
        assert!(bad("model = pdia"));
        assert!(bad("algorithm = gibbs"));
        assert!(bad("algorithm = sa"));
        assert!(bad("algorithm = sa\nrate = 1.5"));
        assert!(bad("runs = 0"));
        assert!(bad("iterations = 0"));
    }

    #[test]
    fn command_line_overrides_file() {
        let file = Settings::parse("model = gmm\nruns = 4").unwrap();
        let cli = Settings {
            runs: Some(2),
            ..Settings::default()
        };
        let c = file.overlay(cli).into_config().unwrap();
        assert_eq!((c.model, c.runs), (ModelId::Gmm, 2));
    }
}
