//! Anytime MAP estimation for probabilistic programs.
//!
//! Programs are written against the stepwise [`trace::Program`] protocol and
//! searched by:
//!
//! - [`search::bamc_search`], Bayesian ascent Monte Carlo: repeated program
//!   runs where every random choice is picked by open randomized probability
//!   matching ([`orpm`]) over beliefs about the log-weight still to come;
//! - [`baselines::mh_map_search`] and [`baselines::sa_search`], single-site
//!   Metropolis-Hastings and simulated annealing over traces.
//!
//! Every searcher reports each trace that beats all earlier ones, so the last
//! [`search::MapEstimate`] is always the best answer so far.
//!
//! ```
//! use bamc::models::{brute_force_map, tiny_hmm, tiny_hmm_program};
//! use bamc::search::bamc_search;
//! use rand::SeedableRng;
//!
//! let (params, obs) = tiny_hmm();
//! let program = tiny_hmm_program(&params, &obs).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let report = bamc_search(&program, 2000, &mut rng).unwrap();
//! let (_, exact) = brute_force_map(&program).unwrap();
//! assert!(report.best_log_weight() <= exact + 1e-12);
//! ```

pub mod baselines;
pub mod dist;
pub mod error;
pub mod models;
pub mod orpm;
pub mod search;
pub mod trace;

pub use dist::{DistKind, Distribution, Value};
pub use error::{DistError, ExecutionError, ModelError, ProgramError, SearchError};
pub use search::{bamc_search, MapEstimate, SearchReport};
pub use trace::{run_program, trace_log_weight, Checkpoint, Program, Trace};

/// The deterministic generator used throughout tests and experiments.
pub type SeededRng = rand_chacha::ChaCha8Rng;
