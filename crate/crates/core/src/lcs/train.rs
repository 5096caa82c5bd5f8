use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::discovery::{ga_discover, MinerStats};
use super::env::{Environment, Reward};
use super::{bucket_brigade_update, match_set, select_action, ClassifierRule, LcsConfig, LcsError, CONDITION_ALPHABET, WILDCARD};
use crate::sequence::ActionSymbol;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    /// (iteration at the end of a block, share of correct actions in it)
    pub samples: Vec<(usize, f64)>,
}

impl LearningCurve {
    pub fn last(&self) -> Option<f64> {
        self.samples.last().map(|s| s.1)
    }

    /// Best proportion reached at or before `iteration`.
    pub fn best_until(&self, iteration: usize) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| s.0 <= iteration)
            .map(|s| s.1)
            .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.max(p))))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub population: Vec<ClassifierRule>,
    pub curve: LearningCurve,
    /// Iterations (1-based) at which rule discovery ran.
    pub ga_iterations: Vec<usize>,
    pub covering_events: usize,
    pub clamp_events: usize,
}

fn random_condition(rng: &mut ChaCha8Rng, len: usize, wildcard_rate: f64) -> String {
    (0..len)
        .map(|_| {
            if rng.random::<f64>() < wildcard_rate {
                WILDCARD
            } else {
                CONDITION_ALPHABET[rng.random_range(0..5)]
            }
        })
        .collect()
}

fn random_action(rng: &mut ChaCha8Rng) -> ActionSymbol {
    ActionSymbol::ACTIONS[rng.random_range(0..4)]
}

/// Fresh, fully random population.
pub(crate) fn initial_population(config: &LcsConfig, rng: &mut ChaCha8Rng) -> Vec<ClassifierRule> {
    (0..config.population_size)
        .map(|_| ClassifierRule {
            condition: random_condition(rng, config.context_len, 0.5),
            action: random_action(rng),
            strength: config.initial_strength,
        })
        .collect()
}

/// True for an empty match set, or one whose total strength is below
/// `threshold` times the population mean.
fn needs_cover(matched: &[usize], population: &[ClassifierRule], threshold: f64) -> bool {
    if matched.is_empty() {
        return true;
    }
    let mean = population.iter().map(|r| r.strength).sum::<f64>() / population.len() as f64;
    let local: f64 = matched.iter().map(|&i| population[i].strength).sum();
    local < threshold * mean
}

/// Replace the weakest rule with one built from the context.
fn cover(population: &mut [ClassifierRule], context: &str, config: &LcsConfig, rng: &mut ChaCha8Rng) -> usize {
    let mean = population.iter().map(|r| r.strength).sum::<f64>() / population.len() as f64;
    let condition = context
        .chars()
        .map(|c| if rng.random::<f64>() < config.wildcard_rate { WILDCARD } else { c })
        .collect();
    let weakest = (0..population.len())
        .min_by(|&a, &b| population[a].strength.total_cmp(&population[b].strength))
        .expect("non-empty population");
    population[weakest] = ClassifierRule {
        condition,
        action: random_action(rng),
        strength: mean,
    };
    weakest
}

/// Run the classifier system for `config.max_iterations` steps.
pub fn train<E: Environment>(env: &mut E, config: &LcsConfig, stats: &MinerStats) -> Result<TrainOutcome, LcsError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut population = initial_population(config, &mut rng);
    let mut curve = LearningCurve::default();
    let mut ga_iterations = Vec::new();
    let mut covering_events = 0;
    let mut clamp_events = 0;
    let mut previous: Option<usize> = None;
    let mut block_correct = 0usize;
    let mut block_len = 0usize;

    for iteration in 1..=config.max_iterations {
        let context = env.context().to_string();
        if context.len() != config.context_len {
            return Err(LcsError::Context(context));
        }
        let mut matched = match_set(&context, &population);
        if needs_cover(&matched, &population, config.cover_threshold) {
            let slot = cover(&mut population, &context, config, &mut rng);
            covering_events += 1;
            if previous == Some(slot) {
                previous = None;
            }
            if !matched.contains(&slot) {
                matched.push(slot);
            }
        }
        let (winner, action) =
            select_action(&matched, &population, config.bid_fraction, &mut rng).expect("match set is non-empty");
        let step = env.respond(action);
        let reward = match step.reward {
            Reward::None => 0.0,
            Reward::Play => config.reward_play,
            Reward::Win => config.reward_win,
        };
        clamp_events += bucket_brigade_update(&mut population, winner, previous, reward, config.bid_fraction).clamps;
        previous = if step.episode_over { None } else { Some(winner) };

        block_len += 1;
        block_correct += usize::from(step.correct);
        if block_len == config.eval_window || iteration == config.max_iterations {
            curve.samples.push((iteration, block_correct as f64 / block_len as f64));
            block_len = 0;
            block_correct = 0;
        }

        if iteration % config.ga_period == 0 {
            ga_discover(&mut population, stats, config, &mut rng);
            ga_iterations.push(iteration);
            previous = None;
        }
    }
    Ok(TrainOutcome {
        population,
        curve,
        ga_iterations,
        covering_events,
        clamp_events,
    })
}

/// Share of correct answers when acting uniformly at random.
pub fn random_baseline<E: Environment>(env: &mut E, iterations: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut correct = 0usize;
    for _ in 0..iterations {
        correct += usize::from(env.respond(random_action(&mut rng)).correct);
    }
    correct as f64 / iterations.max(1) as f64
}
