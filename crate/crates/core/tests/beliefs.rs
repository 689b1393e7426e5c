use bamc::orpm::{draw_mean_belief, update_stats, BeliefStore, RewardStats};
use bamc::trace::Address;
use bamc::{Distribution, SeededRng, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

fn batch(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn stats_of(xs: &[f64]) -> RewardStats {
    xs.iter().fold(None, |s, &x| Some(update_stats(s, x).unwrap())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn running_statistics_equal_batch(xs in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let s = stats_of(&xs);
        let (mean, var) = batch(&xs);
        prop_assert_eq!(s.count(), xs.len() as u64);
        prop_assert!((s.mean() - mean).abs() <= 1e-9 * mean.abs().max(1.0));
        prop_assert!((s.variance().unwrap() - var).abs() <= 1e-9 * var.max(1.0));
    }
}

#[test]
fn mean_belief_variance_shrinks_with_count() {
    let mut rng = SeededRng::seed_from_u64(17);
    for n in [2usize, 4, 16] {
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).sin() * 3.0).collect();
        let s = stats_of(&xs);
        let expected = s.variance().unwrap() / n as f64;
        let draws: Vec<f64> = (0..10_000).map(|_| draw_mean_belief(&s, 1.0, &mut rng)).collect();
        let (m, v) = batch(&draws);
        assert!((v / expected - 1.0).abs() < 0.2, "n={n}: {v} vs {expected}");
        assert!((m - s.mean()).abs() < 4.0 * (expected / 10_000.0).sqrt() + 1e-12);
    }
}

fn categorical_address(d: &Distribution) -> Address {
    Address {
        position: 0,
        signature: d.signature(),
    }
}

/// Fraction of selections of arm 0 over steps 500..1000 of a two-arm
/// problem with deterministic rewards 1 and 0.
fn bandit_run(seed: u64) -> f64 {
    let d = Distribution::categorical(vec![0.5, 0.5]).unwrap();
    let addr = categorical_address(&d);
    let mut store = BeliefStore::new();
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut good = 0;
    for step in 0..1000 {
        let (v, _) = store.select(addr, &d, &mut rng);
        let reward = if v == Value::Int(0) { 1.0 } else { 0.0 };
        if step >= 500 && reward == 1.0 {
            good += 1;
        }
        store.update(addr, &v, reward).unwrap();
    }
    good as f64 / 500.0
}

#[test]
fn bandit_settles_on_the_better_arm() {
    let mean = (0..20).map(bandit_run).sum::<f64>() / 20.0;
    assert!(mean > 0.9, "{mean}");
}

/// Selections made when every reward is offset by `shift`, with the reward
/// noise and the selection randomness drawn from fixed seeds.
fn shifted_selections(shift: f64) -> Vec<Value> {
    let d = Distribution::categorical(vec![0.2, 0.3, 0.5]).unwrap();
    let addr = categorical_address(&d);
    let mut store = BeliefStore::new();
    let mut rng = SeededRng::seed_from_u64(99);
    let mut noise = SeededRng::seed_from_u64(100);
    let base = [0.5, -1.0, 0.0];
    (0..400)
        .map(|_| {
            let (v, _) = store.select(addr, &d, &mut rng);
            let z: f64 = noise.sample(StandardNormal);
            let reward = base[v.as_int().unwrap() as usize] + z + shift;
            store.update(addr, &v, reward).unwrap();
            v
        })
        .collect()
}

#[test]
fn constant_reward_shift_leaves_selection_unchanged() {
    let reference = shifted_selections(0.0);
    for shift in [-50.0, 3.25, 1000.0] {
        assert_eq!(shifted_selections(shift), reference, "shift {shift}");
    }
}

#[test]
fn continuous_choice_set_keeps_growing() {
    let d = Distribution::normal(0.0, 3.0).unwrap();
    let addr = categorical_address(&d);
    let mut store = BeliefStore::new();
    let mut rng = SeededRng::seed_from_u64(4);
    let mut noise = SeededRng::seed_from_u64(5);
    let mut sizes = Vec::new();
    for i in 0..2000 {
        let (v, _) = store.select(addr, &d, &mut rng);
        let x = v.as_real().unwrap();
        let z: f64 = noise.sample(StandardNormal);
        store.update(addr, &v, -(x - 2.0).powi(2) + z).unwrap();
        if i % 500 == 499 {
            sizes.push(store.get(&addr).unwrap().choices().len());
        }
    }
    assert!(sizes.windows(2).all(|w| w[1] > w[0]), "{sizes:?}");
    // The most-selected value is near the optimum.
    let point = store.get(&addr).unwrap();
    let top = point
        .choices()
        .iter()
        .max_by_key(|c| c.stats.map_or(0, |s| s.count()))
        .unwrap();
    assert!((top.value.as_real().unwrap() - 2.0).abs() < 1.0, "{:?}", top.value);
}
