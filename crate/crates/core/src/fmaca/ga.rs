use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fitness, FmacaError, LabeledPattern};
use crate::fca::{FcaRuleVector, FuzzyRule, ALL_RULES};

const TOURNAMENT: usize = 2;
const IDENTITY_RULE: u8 = 204;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 40,
            mutation_rate: 0.05,
            crossover_rate: 0.8,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), FmacaError> {
        if self.population_size < 2 {
            return Err(FmacaError::Config("population_size must be at least 2".into()));
        }
        for (name, r) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(FmacaError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaOutcome {
    pub best: FcaRuleVector,
    pub best_fitness: f64,
    /// Best rule vector of each generation, starting with the initial one.
    pub history: Vec<(FcaRuleVector, f64)>,
}

fn random_rule(rng: &mut ChaCha8Rng) -> FuzzyRule {
    FuzzyRule::new(ALL_RULES[rng.random_range(0..ALL_RULES.len())] as u32).expect("table rule")
}

fn random_chromosome(rng: &mut ChaCha8Rng, n: usize) -> FcaRuleVector {
    FcaRuleVector::new((0..n).map(|_| random_rule(rng)).collect()).expect("non-empty")
}

fn pick<'a>(rng: &mut ChaCha8Rng, scored: &'a [(FcaRuleVector, f64)]) -> &'a FcaRuleVector {
    let mut best = &scored[rng.random_range(0..scored.len())];
    for _ in 1..TOURNAMENT {
        let c = &scored[rng.random_range(0..scored.len())];
        if c.1 > best.1 {
            best = c;
        }
    }
    &best.0
}

/// Evolve a rule vector that sorts `subset` into `k` pure basin groups.
///
/// The initial population is random except for one all-identity
/// chromosome. Selection is by tournament with a single elite; the run
/// stops early once a perfect grouping appears.
pub fn evolve_rules(subset: &[LabeledPattern], k: usize, config: &GaConfig) -> Result<GaOutcome, FmacaError> {
    config.validate()?;
    let n = subset.first().ok_or(FmacaError::EmptyTraining)?.features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let kseed = config.rng_seed ^ 0x5EED;

    let mut population: Vec<FcaRuleVector> = (0..config.population_size - 1)
        .map(|_| random_chromosome(&mut rng, n))
        .collect();
    population.push(FcaRuleVector::uniform(FuzzyRule::new(IDENTITY_RULE as u32)?, n));

    let score = |pop: Vec<FcaRuleVector>| -> Result<Vec<(FcaRuleVector, f64)>, FmacaError> {
        pop.into_par_iter()
            .map(|c| fitness(&c, subset, k, kseed).map(|f| (c, f)))
            .collect()
    };
    let best_of = |scored: &[(FcaRuleVector, f64)]| -> (FcaRuleVector, f64) {
        let mut b = &scored[0];
        for s in scored {
            if s.1 > b.1 {
                b = s;
            }
        }
        b.clone()
    };

    let mut scored = score(population)?;
    let mut history = vec![best_of(&scored)];
    for _ in 0..config.generations {
        if history.last().expect("non-empty").1 >= 1.0 {
            break;
        }
        let elite = best_of(&scored).0;
        let mut next = vec![elite];
        while next.len() < config.population_size {
            let a = pick(&mut rng, &scored).clone();
            let b = pick(&mut rng, &scored);
            let mut child = a;
            if n > 1 && rng.random::<f64>() < config.crossover_rate {
                let cut = rng.random_range(1..n);
                child.rules_mut()[cut..].copy_from_slice(&b.rules()[cut..]);
            }
            for cell in child.rules_mut() {
                if rng.random::<f64>() < config.mutation_rate {
                    *cell = random_rule(&mut rng);
                }
            }
            next.push(child);
        }
        scored = score(next)?;
        history.push(best_of(&scored));
    }
    let (best, best_fitness) = history
        .iter()
        .fold(history[0].clone(), |acc, h| if h.1 > acc.1 { h.clone() } else { acc });
    Ok(GaOutcome {
        best,
        best_fitness,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fca::FuzzyState;

    fn two_blobs() -> Vec<LabeledPattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        (0..40)
            .map(|i| {
                let (lo, label) = if i % 2 == 0 { (0.0, 1) } else { (0.7, 2) };
                let f: Vec<f64> = (0..3).map(|_| lo + rng.random::<f64>() * 0.3).collect();
                LabeledPattern::new(FuzzyState::new(f).unwrap(), label)
            })
            .collect()
    }

    #[test]
    fn separable_blobs_reach_full_purity() {
        let out = evolve_rules(&two_blobs(), 2, &GaConfig::default().with_seed(3)).unwrap();
        assert_eq!(out.best_fitness, 1.0);
    }

    #[test]
    fn deterministic() {
        let cfg = GaConfig {
            population_size: 8,
            generations: 3,
            ..GaConfig::default()
        };
        let mut data = two_blobs();
        for p in data.iter_mut().step_by(3) {
            p.label = 3 - p.label;
        }
        let a = evolve_rules(&data, 2, &cfg).unwrap();
        let b = evolve_rules(&data, 2, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn config_checks() {
        let bad = GaConfig {
            population_size: 1,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = GaConfig {
            mutation_rate: 1.5,
            ..GaConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
