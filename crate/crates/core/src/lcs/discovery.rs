use rand::Rng;

use super::{ClassifierRule, LcsConfig, CONDITION_ALPHABET, WILDCARD};
use crate::miner::{PatternReport, WILDCARD as MOTIF_WILDCARD};
use crate::sequence::ActionSymbol;

/// What the sequence miner contributes to rule discovery.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MinerStats {
    /// Frequent patterns, most frequent first.
    pub patterns: Vec<String>,
    /// Motif templates, `x` as wildcard.
    pub motifs: Vec<String>,
}

impl MinerStats {
    /// Take the `top` most frequent patterns of a report.
    pub fn from_report(report: &PatternReport, top: usize, motifs: Vec<String>) -> Self {
        MinerStats {
            patterns: report.totals().into_iter().take(top).map(|(p, _)| p).collect(),
            motifs,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty() && self.motifs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryReport {
    /// Population slots that received offspring.
    pub replaced: Vec<usize>,
}

/// Turn a mined string into a condition: motif wildcards and idle letters
/// become `#`, then it is cut or left-padded with `#` to length `len`.
pub(crate) fn condition_from(source: &str, len: usize) -> String {
    let mapped: Vec<char> = source
        .chars()
        .map(|c| if c == MOTIF_WILDCARD as char || c == '-' { WILDCARD } else { c })
        .collect();
    let tail = &mapped[mapped.len().saturating_sub(len)..];
    std::iter::repeat_n(WILDCARD, len - tail.len()).chain(tail.iter().copied()).collect()
}

fn roulette<R: Rng>(pool: &[usize], population: &[ClassifierRule], rng: &mut R) -> usize {
    let total: f64 = pool.iter().map(|&i| population[i].strength).sum();
    if total <= 0.0 {
        return pool[rng.random_range(0..pool.len())];
    }
    let mut x = rng.random::<f64>() * total;
    for &i in pool {
        if x < population[i].strength {
            return i;
        }
        x -= population[i].strength;
    }
    *pool.last().expect("non-empty pool")
}

/// Replace the weakest quarter of the population.
///
/// Offspring conditions come from the miner's frequent patterns and motifs
/// with probability `config.miner_seed_rate` (always uniform crossover of
/// the two parents' conditions when the miner found nothing). Actions are inherited from one of two
/// strength-weighted parents. Every condition letter and the action then
/// mutate with `config.mutation_rate`. Offspring strength is the parents'
/// mean.
pub fn ga_discover<R: Rng>(
    population: &mut [ClassifierRule],
    stats: &MinerStats,
    config: &LcsConfig,
    rng: &mut R,
) -> DiscoveryReport {
    let n = population.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| population[a].strength.total_cmp(&population[b].strength).then(a.cmp(&b)));
    let cut = (n / 4).max(1);
    let (weak, strong) = order.split_at(cut);
    let pool: Vec<usize> = if strong.is_empty() { weak.to_vec() } else { strong.to_vec() };
    let sources: Vec<&String> = stats.patterns.iter().chain(&stats.motifs).collect();

    let mut offspring = Vec::with_capacity(weak.len());
    for _ in weak {
        let a = roulette(&pool, population, rng);
        let b = roulette(&pool, population, rng);
        let (pa, pb) = (&population[a], &population[b]);
        let mut condition: Vec<char> = if sources.is_empty() || rng.random::<f64>() >= config.miner_seed_rate {
            pa.condition
                .chars()
                .zip(pb.condition.chars())
                .map(|(x, y)| if rng.random::<bool>() { x } else { y })
                .collect()
        } else {
            condition_from(sources[rng.random_range(0..sources.len())], config.context_len)
                .chars()
                .collect()
        };
        for c in condition.iter_mut() {
            if rng.random::<f64>() < config.mutation_rate {
                *c = CONDITION_ALPHABET[rng.random_range(0..CONDITION_ALPHABET.len())];
            }
        }
        let mut action = if rng.random::<bool>() { pa.action } else { pb.action };
        if rng.random::<f64>() < config.mutation_rate {
            action = ActionSymbol::ACTIONS[rng.random_range(0..4)];
        }
        offspring.push(ClassifierRule {
            condition: condition.into_iter().collect(),
            action,
            strength: (pa.strength + pb.strength) / 2.0,
        });
    }
    for (&slot, child) in weak.iter().zip(offspring) {
        population[slot] = child;
    }
    DiscoveryReport { replaced: weak.to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conditions_from_mined_strings() {
        assert_eq!(condition_from("xxCCT", 5), "##CCT");
        assert_eq!(condition_from("CCT", 5), "##CCT");
        assert_eq!(condition_from("AATCCCT", 5), "TCCCT");
        assert_eq!(condition_from("A-C", 3), "A#C");
    }

    #[test]
    fn uniform_population_stays_uniform_without_mutation() {
        let cfg = LcsConfig {
            mutation_rate: 0.0,
            ..LcsConfig::default()
        };
        let mut pop = vec![ClassifierRule::new("AC#GT", ActionSymbol::T, 10.0).unwrap(); 40];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rep = ga_discover(&mut pop, &MinerStats::default(), &cfg, &mut rng);
        assert_eq!(rep.replaced.len(), 10);
        assert_eq!(pop.len(), 40);
        assert!(pop.iter().all(|r| r.condition == "AC#GT" && r.action == ActionSymbol::T && r.strength == 10.0));
    }

    #[test]
    fn mutation_differences_are_bounded() {
        let cfg = LcsConfig {
            mutation_rate: 0.1,
            ..LcsConfig::default()
        };
        let mut pop = vec![ClassifierRule::new("AAAAA", ActionSymbol::A, 10.0).unwrap(); 400];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rep = ga_discover(&mut pop, &MinerStats::default(), &cfg, &mut rng);
        let changed: usize = rep
            .replaced
            .iter()
            .map(|&i| pop[i].condition.chars().filter(|&c| c != 'A').count())
            .sum();
        let positions = (rep.replaced.len() * 5) as f64;
        assert!((changed as f64) < positions * 0.1 * 1.5);
    }

    #[test]
    fn planted_motif_reaches_offspring() {
        let cfg = LcsConfig::default();
        let mut pop: Vec<ClassifierRule> = (0..100)
            .map(|i| ClassifierRule::new("AAAAA", ActionSymbol::G, i as f64).unwrap())
            .collect();
        let stats = MinerStats {
            patterns: vec![],
            motifs: vec!["xxCCT".into()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rep = ga_discover(&mut pop, &stats, &cfg, &mut rng);
        let hits = rep.replaced.iter().filter(|&&i| pop[i].matches("TCCCT")).count();
        assert!(hits >= 5, "{hits}");
    }
}
