//! Regenerate `data/hmm16.txt`, the ground truth for the 16-state benchmark.
//!
//!     cargo run -p bamc-core --example generate_hmm16 > crates/core/data/hmm16.txt

use bamc::models::GroundTruth;
use bamc::SeededRng;
use rand::SeedableRng;

const SEED: u64 = 20150216;

fn main() {
    let mut rng = SeededRng::seed_from_u64(SEED);
    let gt = GroundTruth::generate(16, 0.7, 50, &mut rng);
    let header = format!(
        "Ground-truth HMM for the 16-state benchmark.\n\
         16 hidden states, 16 symbols, 50 steps, uniform initial distribution.\n\
         Transition rows ~ Dirichlet(1); emission 0.7 on the diagonal, 0.02 elsewhere.\n\
         Generated by `generate_hmm16` with ChaCha8 seed {SEED}."
    );
    print!("{}", gt.render(&header));
}
