//! Learning classifier system over action-letter contexts.
//!
//! Rules map a fixed-length context (the last few letters of a player
//! sequence, `#` as wildcard) to an action letter. Matching rules bid a
//! fraction of their strength; the winner acts and pays its bid to the
//! previous winner of the episode. A genetic step runs every `ga_period`
//! iterations and replaces the weakest quarter of the population.

mod discovery;
mod env;
mod io;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sequence::ActionSymbol;

pub use discovery::{ga_discover, DiscoveryReport, MinerStats};
pub use env::{ConstantOracle, Environment, MatchEnv, OracleEnv, StepResult, ZeroRewardEnv};
pub use io::{read_curve_csv, read_population_csv, write_curve_csv, write_population_csv};
pub use train::{random_baseline, train, LearningCurve, TrainOutcome};

pub const WILDCARD: char = '#';
/// Letters a condition position may hold, wildcard last.
pub const CONDITION_ALPHABET: [char; 6] = ['A', 'C', 'G', 'T', '-', WILDCARD];

#[derive(Debug, Error)]
pub enum LcsError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("condition {0:?} has the wrong length or letters")]
    Condition(String),
    #[error("context {0:?} has the wrong length")]
    Context(String),
    #[error("{0}")]
    Env(String),
    #[error("schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRule {
    pub condition: String,
    pub action: ActionSymbol,
    pub strength: f64,
}

impl ClassifierRule {
    pub fn new(condition: &str, action: ActionSymbol, strength: f64) -> Result<Self, LcsError> {
        if condition.is_empty() || !condition.chars().all(|c| CONDITION_ALPHABET.contains(&c)) {
            return Err(LcsError::Condition(condition.to_string()));
        }
        if action == ActionSymbol::Idle {
            return Err(LcsError::Condition(format!("{condition} -> -")));
        }
        Ok(ClassifierRule {
            condition: condition.to_string(),
            action,
            strength: strength.max(0.0),
        })
    }

    pub fn matches(&self, context: &str) -> bool {
        self.condition.len() == context.len()
            && self
                .condition
                .bytes()
                .zip(context.bytes())
                .all(|(c, x)| c == WILDCARD as u8 || c == x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LcsConfig {
    pub population_size: usize,
    pub bid_fraction: f64,
    pub ga_period: usize,
    pub max_iterations: usize,
    pub reward_win: f64,
    pub reward_play: f64,
    pub rng_seed: u64,
    pub context_len: usize,
    /// Iterations per learning-curve sample.
    pub eval_window: usize,
    pub initial_strength: f64,
    /// Chance that a random or covering condition position is `#`.
    pub wildcard_rate: f64,
    pub mutation_rate: f64,
    /// Share of discovery offspring whose condition comes from mined strings.
    pub miner_seed_rate: f64,
    /// Cover when the match set holds less than this share of the mean
    /// rule strength (an empty match set always triggers covering).
    pub cover_threshold: f64,
}

impl Default for LcsConfig {
    fn default() -> Self {
        LcsConfig {
            population_size: 200,
            bid_fraction: 0.1,
            ga_period: 4000,
            max_iterations: 200_000,
            reward_win: 1000.0,
            reward_play: 50.0,
            rng_seed: 0,
            context_len: 5,
            eval_window: 1000,
            initial_strength: 100.0,
            wildcard_rate: 0.33,
            mutation_rate: 0.04,
            miner_seed_rate: 0.5,
            cover_threshold: 0.5,
        }
    }
}

impl LcsConfig {
    pub fn validate(&self) -> Result<(), LcsError> {
        let bad = |m: &str| Err(LcsError::Config(m.to_string()));
        if self.population_size < 4 {
            return bad("population_size must be at least 4");
        }
        if !(self.bid_fraction > 0.0 && self.bid_fraction < 1.0) {
            return bad("bid_fraction must lie in (0, 1)");
        }
        if self.ga_period == 0 {
            return bad("ga_period must be at least 1");
        }
        if !(self.reward_win > self.reward_play && self.reward_play > 0.0) {
            return bad("need reward_win > reward_play > 0");
        }
        if self.context_len == 0 || self.eval_window == 0 {
            return bad("context_len and eval_window must be positive");
        }
        if !(0.0..=1.0).contains(&self.wildcard_rate) || !(0.0..=1.0).contains(&self.mutation_rate)
            || !(0.0..=1.0).contains(&self.miner_seed_rate)
        {
            return bad("rates must lie in [0, 1]");
        }
        if self.cover_threshold < 0.0 {
            return bad("cover_threshold must be non-negative");
        }
        if self.initial_strength < 0.0 {
            return bad("initial_strength must be non-negative");
        }
        Ok(())
    }
}

/// Indices of rules whose condition matches the context.
pub fn match_set(context: &str, population: &[ClassifierRule]) -> Vec<usize> {
    population
        .iter()
        .enumerate()
        .filter(|(_, r)| r.matches(context))
        .map(|(i, _)| i)
        .collect()
}

/// Bid-proportional choice among `matched`; uniform if every bid is zero.
pub fn select_action<R: Rng>(
    matched: &[usize],
    population: &[ClassifierRule],
    bid_fraction: f64,
    rng: &mut R,
) -> Option<(usize, ActionSymbol)> {
    if matched.is_empty() {
        return None;
    }
    let total: f64 = matched.iter().map(|&i| bid_fraction * population[i].strength).sum();
    let winner = if total > 0.0 {
        let mut x = rng.random::<f64>() * total;
        let mut w = *matched.last().expect("non-empty");
        for &i in matched {
            let bid = bid_fraction * population[i].strength;
            if x < bid {
                w = i;
                break;
            }
            x -= bid;
        }
        w
    } else {
        matched[rng.random_range(0..matched.len())]
    };
    Some((winner, population[winner].action))
}

/// Strength bookkeeping for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BrigadeOutcome {
    /// Bid lost to the environment because there was no previous winner.
    pub dissipated: f64,
    /// Strengths that had to be clamped at zero.
    pub clamps: usize,
}

/// The current winner pays its bid to the previous winner, then receives
/// the external reward.
pub fn bucket_brigade_update(
    population: &mut [ClassifierRule],
    current: usize,
    previous: Option<usize>,
    reward: f64,
    bid_fraction: f64,
) -> BrigadeOutcome {
    let mut out = BrigadeOutcome::default();
    let bid = bid_fraction * population[current].strength;
    population[current].strength -= bid;
    match previous {
        Some(p) => population[p].strength += bid,
        None => out.dissipated = bid,
    }
    population[current].strength += reward;
    for i in std::iter::once(current).chain(previous) {
        if population[i].strength < 0.0 {
            population[i].strength = 0.0;
            out.clamps += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rule(c: &str, a: ActionSymbol, s: f64) -> ClassifierRule {
        ClassifierRule::new(c, a, s).unwrap()
    }

    #[test]
    fn matching() {
        assert!(rule("##CCT", ActionSymbol::G, 1.0).matches("TCCCT"));
        assert!(!rule("AAAAA", ActionSymbol::G, 1.0).matches("TCCCT"));
        assert!(rule("#####", ActionSymbol::G, 1.0).matches("-A-GT"));
        assert!(!rule("####", ActionSymbol::G, 1.0).matches("TCCCT"));
        let pop = vec![rule("##CCT", ActionSymbol::G, 1.0), rule("AAAAA", ActionSymbol::A, 1.0)];
        assert_eq!(match_set("TCCCT", &pop), vec![0]);
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(ClassifierRule::new("ABCDE", ActionSymbol::A, 1.0).is_err());
        assert!(ClassifierRule::new("#####", ActionSymbol::Idle, 1.0).is_err());
    }

    #[test]
    fn single_match_always_wins() {
        let pop = vec![rule("#####", ActionSymbol::T, 5.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(select_action(&[0], &pop, 0.1, &mut rng), Some((0, ActionSymbol::T)));
        }
    }

    #[test]
    fn bids_set_win_odds() {
        let pop = vec![rule("#####", ActionSymbol::A, 300.0), rule("#####", ActionSymbol::C, 100.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40_000;
        let wins = (0..n)
            .filter(|_| select_action(&[0, 1], &pop, 0.1, &mut rng).unwrap().0 == 0)
            .count();
        assert!((wins as f64 / n as f64 - 0.75).abs() < 0.01);
    }

    #[test]
    fn zero_bids_are_uniform() {
        let pop = vec![rule("#####", ActionSymbol::A, 0.0), rule("#####", ActionSymbol::C, 0.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let wins = (0..n)
            .filter(|_| select_action(&[0, 1], &pop, 0.1, &mut rng).unwrap().0 == 0)
            .count();
        assert!((wins as f64 / n as f64 - 0.5).abs() < 0.02);
        assert_eq!(select_action(&[], &pop, 0.1, &mut rng), None);
    }

    #[test]
    fn brigade_arithmetic() {
        let mut pop = vec![rule("#####", ActionSymbol::A, 100.0), rule("#####", ActionSymbol::C, 50.0)];
        let out = bucket_brigade_update(&mut pop, 0, Some(1), 0.0, 0.1);
        assert!((pop[0].strength - 90.0).abs() < 1e-12);
        assert!((pop[1].strength - 60.0).abs() < 1e-12);
        assert_eq!(out.dissipated, 0.0);

        let mut pop = vec![rule("#####", ActionSymbol::A, 100.0)];
        let out = bucket_brigade_update(&mut pop, 0, None, 0.0, 0.1);
        assert!((pop[0].strength - 90.0).abs() < 1e-12);
        assert!((out.dissipated - 10.0).abs() < 1e-12);

        let mut pop = vec![rule("#####", ActionSymbol::G, 100.0)];
        bucket_brigade_update(&mut pop, 0, None, 1000.0, 0.1);
        assert!((pop[0].strength - 1090.0).abs() < 1e-12);
    }

    #[test]
    fn config_defaults_validate() {
        LcsConfig::default().validate().unwrap();
        let bad = LcsConfig {
            reward_win: 10.0,
            ..LcsConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
