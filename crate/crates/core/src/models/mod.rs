//! Benchmark programs and exact oracles.

pub mod data;
pub mod gmm;
pub mod hmm;
pub mod oracle;

pub use data::GroundTruth;
pub use gmm::{gmm_program, GmmProgram, MixtureSpec};
pub use hmm::{hmm16_program, tiny_hmm, tiny_hmm_program, viterbi_oracle, HmmParams, HmmProgram, HmmSpec};
pub use oracle::{brute_force_map, for_each_trace};
