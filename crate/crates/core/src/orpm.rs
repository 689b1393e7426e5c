//! Open randomized probability matching.
//!
//! Each random-choice site keeps a [`SelectionPoint`]: the values tried there
//! so far, each with running statistics of the rewards it earned. Selection
//! is Thompson sampling over normal beliefs, extended with a "random choice"
//! slot that stands for a fresh draw from the site's distribution. When the
//! random slot wins, a new value is drawn and joins the choice set, so the
//! set can grow without bound over countable or continuous domains.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};

use crate::dist::{Distribution, Value};
use crate::error::UpdateError;
use crate::trace::Address;

/// Running count, mean and sum of squared deviations of a reward stream
/// (Welford's method).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RewardStats {
    pub fn from_reward(reward: f64) -> Result<Self, UpdateError> {
        if !reward.is_finite() {
            return Err(UpdateError::NonFiniteReward(reward));
        }
        Ok(RewardStats {
            n: 1,
            mean: reward,
            m2: 0.0,
        })
    }

    pub fn update(&mut self, reward: f64) -> Result<(), UpdateError> {
        if !reward.is_finite() {
            return Err(UpdateError::NonFiniteReward(reward));
        }
        self.n += 1;
        let delta = reward - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (reward - self.mean);
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Sample variance, defined once two rewards have been seen.
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }
}

/// Fold one reward into possibly-empty statistics.
pub fn update_stats(stats: Option<RewardStats>, reward: f64) -> Result<RewardStats, UpdateError> {
    match stats {
        None => RewardStats::from_reward(reward),
        Some(mut s) => {
            s.update(reward)?;
            Ok(s)
        }
    }
}

fn draw_normal<R: Rng + ?Sized>(mean: f64, var: f64, rng: &mut R) -> f64 {
    // Always consume one standard normal so that seed-paired runs stay aligned
    // whatever the variance.
    let z: f64 = StandardNormal.sample(rng);
    mean + var.sqrt() * z
}

/// One draw from the belief about a single reward: Normal(mean, var), with
/// `fallback_var` standing in while fewer than two rewards are known.
pub fn draw_reward_belief<R: Rng + ?Sized>(stats: &RewardStats, fallback_var: f64, rng: &mut R) -> f64 {
    draw_normal(stats.mean, belief_variance(stats, fallback_var, true), rng)
}

/// One draw from the belief about the mean reward: Normal(mean, var / n).
pub fn draw_mean_belief<R: Rng + ?Sized>(stats: &RewardStats, fallback_var: f64, rng: &mut R) -> f64 {
    draw_mean_with(stats, belief_variance(stats, fallback_var, true), rng)
}

fn draw_mean_with<R: Rng + ?Sized>(stats: &RewardStats, var: f64, rng: &mut R) -> f64 {
    draw_normal(stats.mean, var / stats.n as f64, rng)
}

fn belief_variance(stats: &RewardStats, fallback_var: f64, own_spread: bool) -> f64 {
    match stats.variance() {
        Some(v) if own_spread => v,
        _ => fallback_var,
    }
}

/// True when every reward folded into `stats` is the same up to rounding.
fn is_degenerate(stats: &RewardStats) -> bool {
    match stats.variance() {
        Some(v) => v.sqrt() <= 1e-9 * stats.mean.abs().max(1.0),
        None => true,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub value: Value,
    /// `None` until the first reward arrives.
    pub stats: Option<RewardStats>,
}

/// Beliefs about the values tried at one random-choice site.
#[derive(Debug, Clone)]
pub struct SelectionPoint {
    address: Address,
    choices: Vec<Choice>,
    index: HashMap<Value, usize>,
    aggregate: Option<RewardStats>,
}

impl SelectionPoint {
    pub fn new(address: Address) -> Self {
        SelectionPoint {
            address,
            choices: Vec::new(),
            index: HashMap::new(),
            aggregate: None,
        }
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub fn choice(&self, value: &Value) -> Option<&Choice> {
        self.index.get(value).map(|&i| &self.choices[i])
    }

    /// Statistics over every reward observed at this point.
    pub fn aggregate(&self) -> Option<&RewardStats> {
        self.aggregate.as_ref()
    }

    /// Variance used for choices with a single reward: the point's pooled
    /// sample variance when the rewards seen here differ, 1 otherwise.
    pub fn fallback_variance(&self) -> f64 {
        match self.aggregate {
            Some(a) if self.has_spread() => a.m2 / (a.n - 1) as f64,
            _ => 1.0,
        }
    }

    /// Whether the rewards observed at this point are not all equal.
    pub fn has_spread(&self) -> bool {
        self.aggregate.is_some_and(|a| !is_degenerate(&a) && a.m2.is_finite())
    }

    fn push(&mut self, value: Value) -> usize {
        let i = self.choices.len();
        self.index.insert(value.clone(), i);
        self.choices.push(Choice { value, stats: None });
        i
    }

    /// Record a reward for `value`, adding it as a choice if unseen.
    pub fn update(&mut self, value: &Value, reward: f64) -> Result<(), UpdateError> {
        if !reward.is_finite() {
            return Err(UpdateError::NonFiniteReward(reward));
        }
        let i = match self.index.get(value) {
            Some(&i) => i,
            None => self.push(value.clone()),
        };
        let choice = &mut self.choices[i];
        choice.stats = Some(update_stats(choice.stats, reward)?);
        self.aggregate = Some(update_stats(self.aggregate, reward)?);
        Ok(())
    }

    /// Pick a value for this site.
    ///
    /// Returns the value and whether it was freshly drawn from `dist` and
    /// appended to the choice set. Choices that have not been rewarded yet do
    /// not compete; with no rewarded choice the random slot wins outright.
    ///
    /// Until the point has seen two different rewards, every choice uses
    /// `fallback_var`: a choice whose rewards are all equal would otherwise
    /// hold a zero-variance belief and shut out every untried value.
    pub fn select_value<R: Rng + ?Sized>(
        &mut self,
        dist: &Distribution,
        fallback_var: f64,
        rng: &mut R,
    ) -> (Value, bool) {
        debug_assert_eq!(dist.signature(), self.address.signature);
        let mut best_choice = None;
        let own_spread = self.has_spread();
        let rated = || {
            self.choices
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.stats.as_ref().map(|s| (i, s)))
        };

        // Guess the reward of a random choice: the mean belief of whichever
        // choice has the highest reward draw.
        let mut best_reward = f64::NEG_INFINITY;
        let mut best_belief = None;
        for (_, stats) in rated() {
            let var = belief_variance(stats, fallback_var, own_spread);
            let reward = draw_normal(stats.mean, var, rng);
            if reward >= best_reward {
                best_reward = reward;
                best_belief = Some((stats, var));
            }
        }

        if let Some((belief, var)) = best_belief {
            let mut best_reward = draw_mean_with(belief, var, rng);
            for (i, stats) in rated() {
                let var = belief_variance(stats, fallback_var, own_spread);
                let reward = draw_mean_with(stats, var, rng);
                if reward >= best_reward {
                    best_reward = reward;
                    best_choice = Some(i);
                }
            }
        }

        match best_choice {
            Some(i) => (self.choices[i].value.clone(), false),
            None => {
                let value = dist.sample(rng);
                if self.index.contains_key(&value) {
                    (value, false)
                } else {
                    self.push(value.clone());
                    (value, true)
                }
            }
        }
    }
}

/// Selection points keyed by address, owned by one search.
#[derive(Debug, Clone, Default)]
pub struct BeliefStore {
    points: HashMap<Address, SelectionPoint>,
}

impl BeliefStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, address: &Address) -> Option<&SelectionPoint> {
        self.points.get(address)
    }

    pub fn point_mut(&mut self, address: Address) -> &mut SelectionPoint {
        self.points
            .entry(address)
            .or_insert_with(|| SelectionPoint::new(address))
    }

    pub fn points(&self) -> impl Iterator<Item = &SelectionPoint> {
        self.points.values()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn update(&mut self, address: Address, value: &Value, reward: f64) -> Result<(), UpdateError> {
        self.point_mut(address).update(value, reward)
    }

    /// ORPM selection at `address`, creating the point on first visit.
    pub fn select<R: Rng + ?Sized>(&mut self, address: Address, dist: &Distribution, rng: &mut R) -> (Value, bool) {
        let point = self.point_mut(address);
        let fallback = point.fallback_variance();
        point.select_value(dist, fallback, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats_of(rewards: &[f64]) -> RewardStats {
        rewards
            .iter()
            .fold(None, |s, r| Some(update_stats(s, *r).unwrap()))
            .unwrap()
    }

    fn address_for(dist: &Distribution) -> Address {
        Address {
            position: 0,
            signature: dist.signature(),
        }
    }

    #[test]
    fn welford_small_cases() {
        let s = stats_of(&[5.0]);
        assert_eq!((s.count(), s.mean(), s.m2()), (1, 5.0, 0.0));
        assert_eq!(s.variance(), None);
        let s = stats_of(&[1.0, 3.0]);
        assert_eq!(s.mean(), 2.0);
        assert_eq!(s.variance(), Some(2.0));
    }

    #[test]
    fn non_finite_reward_is_rejected() {
        assert!(update_stats(None, f64::NEG_INFINITY).is_err());
        let mut s = stats_of(&[1.0]);
        assert!(matches!(s.update(f64::NAN), Err(UpdateError::NonFiniteReward(_))));
        assert_eq!(s.count(), 1);
    }

    #[test]
    fn welford_matches_batch_on_normal_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = stats_of(&xs);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((s.mean() - mean).abs() < 1e-9);
        assert!((s.variance().unwrap() - var).abs() < 1e-9);
        assert!(s.mean().abs() < 0.05);
        assert!((s.variance().unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn degenerate_beliefs_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = stats_of(&[2.0, 2.0, 2.0]);
        for _ in 0..100 {
            assert_eq!(draw_reward_belief(&s, 1.0, &mut rng), 2.0);
            assert_eq!(draw_mean_belief(&s, 1.0, &mut rng), 2.0);
        }
    }

    fn moments(xs: &[f64]) -> (f64, f64) {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        (m, v)
    }

    #[test]
    fn belief_draw_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let single = stats_of(&[4.0]);
        let draws: Vec<f64> = (0..10_000).map(|_| draw_reward_belief(&single, 1.0, &mut rng)).collect();
        assert!((moments(&draws).0 - 4.0).abs() < 0.05);

        // rewards {-1, 1} have mean 0 and sample variance 2; {-1,1,-1,1} variance 4/3
        let unit = stats_of(&[-(0.5f64).sqrt(), (0.5f64).sqrt()]);
        assert!((unit.variance().unwrap() - 1.0).abs() < 1e-12);
        let draws: Vec<f64> = (0..10_000).map(|_| draw_reward_belief(&unit, 1.0, &mut rng)).collect();
        assert!((moments(&draws).1 - 1.0).abs() < 0.1);

        let c = (0.75f64).sqrt();
        let four = stats_of(&[-c, c, -c, c]);
        assert!((four.variance().unwrap() - 1.0).abs() < 1e-12);
        let draws: Vec<f64> = (0..10_000).map(|_| draw_mean_belief(&four, 1.0, &mut rng)).collect();
        assert!((moments(&draws).1 - 0.25).abs() < 0.05);
    }

    #[test]
    fn mean_belief_with_one_reward_matches_reward_belief() {
        let s = stats_of(&[1.5]);
        let mut a = ChaCha8Rng::seed_from_u64(4);
        let mut b = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            assert_eq!(draw_reward_belief(&s, 2.0, &mut a), draw_mean_belief(&s, 2.0, &mut b));
        }
    }

    #[test]
    fn empty_point_draws_fresh() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (v, is_new) = p.select_value(&d, 1.0, &mut rng);
        assert!(is_new);
        assert_eq!(p.choices().len(), 1);
        assert_eq!(p.choices()[0].value, v);
        assert!(p.choices()[0].stats.is_none());
    }

    #[test]
    fn degenerate_two_choice_point_prefers_higher_mean() {
        let d = Distribution::categorical(vec![0.5, 0.5]).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        for _ in 0..3 {
            p.update(&Value::Int(0), 10.0).unwrap();
            p.update(&Value::Int(1), 0.0).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            assert_eq!(p.select_value(&d, 1.0, &mut rng), (Value::Int(0), false));
        }
    }

    #[test]
    fn ties_favor_existing_choices() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        for x in [0.1, 0.2, 0.3] {
            p.update(&Value::Real(x), 7.0).unwrap();
            p.update(&Value::Real(x), 7.0).unwrap();
        }
        p.update(&Value::Real(0.4), 1.0).unwrap();
        p.update(&Value::Real(0.4), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let (v, is_new) = p.select_value(&d, 1.0, &mut rng);
            assert!(!is_new);
            assert_ne!(v, Value::Real(0.4));
        }
        assert_eq!(p.choices().len(), 4);
    }

    #[test]
    fn point_without_reward_spread_keeps_exploring() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        for _ in 0..5 {
            p.update(&Value::Real(0.5), 3.0).unwrap();
        }
        assert!(!p.has_spread());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fresh = (0..2000)
            .filter(|_| p.clone().select_value(&d, 1.0, &mut rng).1)
            .count();
        // Threshold and the lone choice share one belief, so the random slot
        // wins half the time.
        assert!((fresh as f64 / 2000.0 - 0.5).abs() < 0.05, "{fresh}");
        p.update(&Value::Real(0.7), 1.0).unwrap();
        assert!(p.has_spread());
    }

    #[test]
    fn single_rated_choice_is_replaced_half_the_time() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut fresh = 0;
        for _ in 0..10_000 {
            let mut p = SelectionPoint::new(address_for(&d));
            p.update(&Value::Real(0.5), 3.0).unwrap();
            if p.select_value(&d, 1.0, &mut rng).1 {
                fresh += 1;
            }
        }
        let frac = fresh as f64 / 10_000.0;
        assert!((frac - 0.5).abs() < 0.05, "fraction new {frac}");
    }

    #[test]
    fn fallback_variance_borrows_point_scale() {
        let d = Distribution::categorical(vec![0.5, 0.5]).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        assert_eq!(p.fallback_variance(), 1.0);
        p.update(&Value::Int(0), 1.0).unwrap();
        assert_eq!(p.fallback_variance(), 1.0);
        p.update(&Value::Int(1), 5.0).unwrap();
        assert_eq!(p.fallback_variance(), 8.0);
        let agg = p.aggregate().unwrap();
        assert_eq!(agg.count(), 2);
    }

    #[test]
    fn open_choice_set_grows_for_continuous_domain() {
        let d = Distribution::normal(0.0, 1.0).unwrap();
        let mut p = SelectionPoint::new(address_for(&d));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut sizes = Vec::new();
        for _ in 0..2000 {
            let (v, _) = p.select_value(&d, p.fallback_variance(), &mut rng);
            let x = v.as_real().unwrap();
            let noise: f64 = StandardNormal.sample(&mut rng);
            p.update(&v, -x * x + noise).unwrap();
            sizes.push(p.choices().len());
        }
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
        assert!(*sizes.last().unwrap() > 10);
    }
}
