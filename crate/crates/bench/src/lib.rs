//! Fixtures shared by the benchmarks.

use seqsoccer::fca::{FcaRuleVector, FuzzyState};
use seqsoccer::fmaca::LabeledPattern;
use seqsoccer::pipeline::synthetic_dataset;
use seqsoccer::sequence::encode_match;
use seqsoccer::sim::{run_match, FieldConfig, MatchLog, PolicyKind};

/// A seeded chaser-vs-random match.
pub fn match_log(cycles: usize, seed: u64) -> MatchLog {
    let cfg = FieldConfig::default().with_cycles(cycles).with_seed(seed);
    run_match(PolicyKind::Chaser, PolicyKind::Random, &cfg).expect("default field is valid")
}

/// Player sequences of one match, concatenated.
pub fn player_text(cycles: usize, window: usize, seed: u64) -> String {
    let log = match_log(cycles, seed);
    let (_, players) = encode_match(&log, window).expect("match has cycles");
    players.into_iter().map(|p| p.letters).collect()
}

/// A rule vector of length `n` cycling through a few mixing rules.
pub fn rule_vector(n: usize) -> FcaRuleVector {
    const CYCLE: [u32; 6] = [238, 254, 51, 252, 170, 85];
    FcaRuleVector::from_numbers(&(0..n).map(|i| CYCLE[i % CYCLE.len()]).collect::<Vec<_>>())
        .expect("all rules are fuzzy")
}

pub fn ramp_state(n: usize) -> FuzzyState {
    FuzzyState::new((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()).expect("values in [0, 1]")
}

pub fn dataset(n: usize, size: usize) -> Vec<LabeledPattern> {
    synthetic_dataset(n, size, 17)
}
