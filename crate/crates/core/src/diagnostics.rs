//! Entropy and mutual-information measurements of fuzzy CA rule vectors.
//!
//! Both measures work on binarized states (cell `>= threshold` is 1). Entropy
//! is per-cell temporal Shannon entropy over a moving window, averaged over
//! cells and window positions. Mutual information is computed between two
//! spatial patterns and normalized by the smaller marginal entropy, so a
//! pattern compared with a copy of itself scores exactly 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fca::{step_into, FcaRuleVector};

/// Entropy level reported for complex rule populations, kept as a reference
/// value next to measured results.
pub const EDGE_OF_CHAOS_ENTROPY: f64 = 0.84;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("invalid diagnostics config: {0}")]
    Config(&'static str),
    #[error("patterns differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    pub window: usize,
    pub run_steps: usize,
    pub trials: usize,
    pub binarize_threshold: f64,
    pub mi_lag: usize,
    pub rng_seed: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            window: 10,
            run_steps: 10_000,
            trials: 15,
            binarize_threshold: 0.5,
            mi_lag: 1,
            rng_seed: 0,
        }
    }
}

impl DiagnosticsConfig {
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        if self.window < 2 {
            return Err(DiagnosticsError::Config("window must be >= 2"));
        }
        if self.run_steps < self.window {
            return Err(DiagnosticsError::Config("run_steps must be >= window"));
        }
        if self.trials == 0 {
            return Err(DiagnosticsError::Config("trials must be >= 1"));
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return Err(DiagnosticsError::Config("threshold must lie in (0, 1)"));
        }
        if self.mi_lag == 0 {
            return Err(DiagnosticsError::Config("mi_lag must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub mean_entropy: f64,
    pub std_dev: f64,
    pub per_trial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub mean_mi: f64,
    pub per_trial: Vec<f64>,
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// Mean per-cell binary entropy of a window; `window[t][i]` is cell `i` at
/// time `t`.
pub fn site_entropy(window: &[Vec<u8>]) -> f64 {
    let Some(first) = window.first() else {
        return 0.0;
    };
    let cells = first.len();
    if cells == 0 {
        return 0.0;
    }
    let w = window.len() as f64;
    let total: f64 = (0..cells)
        .map(|i| {
            let ones = window.iter().filter(|row| row[i] != 0).count() as f64;
            h2(ones / w)
        })
        .sum();
    total / cells as f64
}

/// Normalized mutual information between two equal-length bit patterns.
pub fn mutual_information(p1: &[u8], p2: &[u8]) -> Result<f64, DiagnosticsError> {
    if p1.len() != p2.len() {
        return Err(DiagnosticsError::LengthMismatch(p1.len(), p2.len()));
    }
    Ok(mi_unchecked(p1, p2))
}

fn mi_unchecked(p1: &[u8], p2: &[u8]) -> f64 {
    let n = p1.len();
    if n == 0 {
        return 0.0;
    }
    let mut joint = [0usize; 4];
    for (&a, &b) in p1.iter().zip(p2) {
        joint[2 * usize::from(a != 0) + usize::from(b != 0)] += 1;
    }
    let hx = count_entropy(&[joint[0] + joint[1], joint[2] + joint[3]], n);
    let hy = count_entropy(&[joint[0] + joint[2], joint[1] + joint[3]], n);
    let norm = hx.min(hy);
    if norm <= 0.0 {
        return 0.0;
    }
    // Written as H(x) + H(y) - H(x,y) so that a copy gives exactly 1.
    let mi = hx + hy - count_entropy(&joint, n);
    (mi / norm).clamp(0.0, 1.0)
}

fn count_entropy(counts: &[usize], n: usize) -> f64 {
    let nf = n as f64;
    let mut sorted: Vec<usize> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable();
    -sorted
        .iter()
        .map(|&c| {
            let p = c as f64 / nf;
            p * p.log2()
        })
        .sum::<f64>()
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Runs the automaton from a random state and returns binarized states for
/// t = 0..=run_steps.
fn binarized_run(rules: &FcaRuleVector, config: &DiagnosticsConfig, trial: usize) -> Vec<Vec<u8>> {
    let mut rng = trial_rng(config.rng_seed, trial);
    let n = rules.len();
    let mut cells: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut next = Vec::with_capacity(n);
    let bin = |c: &[f64]| -> Vec<u8> {
        c.iter()
            .map(|&v| u8::from(v >= config.binarize_threshold))
            .collect()
    };
    let mut out = Vec::with_capacity(config.run_steps + 1);
    out.push(bin(&cells));
    for _ in 0..config.run_steps {
        step_into(&cells, rules.rules(), &mut next);
        std::mem::swap(&mut cells, &mut next);
        out.push(bin(&cells));
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Moving-window entropy averaged over window positions, after discarding
/// the first `window` steps as transient.
fn trial_entropy(series: &[Vec<u8>], w: usize) -> f64 {
    let body = &series[w.min(series.len())..];
    if body.len() < w {
        return site_entropy(body);
    }
    let positions = body.len() - w + 1;
    let total: f64 = (0..positions).map(|s| site_entropy(&body[s..s + w])).sum();
    total / positions as f64
}

fn trial_mi(series: &[Vec<u8>], w: usize, lag: usize) -> f64 {
    let start = w.min(series.len());
    if series.len() <= start + lag {
        return 0.0;
    }
    let samples = series.len() - start - lag;
    let total: f64 = (start..start + samples)
        .map(|t| mi_unchecked(&series[t], &series[t + lag]))
        .sum();
    total / samples as f64
}

pub fn measure_entropy(
    rules: &FcaRuleVector,
    config: &DiagnosticsConfig,
) -> Result<EntropyReport, DiagnosticsError> {
    config.validate()?;
    let per_trial: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| trial_entropy(&binarized_run(rules, config, trial), config.window))
        .collect();
    let (mean_entropy, std_dev) = mean_std(&per_trial);
    Ok(EntropyReport {
        mean_entropy,
        std_dev,
        per_trial,
    })
}

pub fn measure_mi(
    rules: &FcaRuleVector,
    config: &DiagnosticsConfig,
) -> Result<MiReport, DiagnosticsError> {
    config.validate()?;
    let per_trial: Vec<f64> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            trial_mi(
                &binarized_run(rules, config, trial),
                config.window,
                config.mi_lag,
            )
        })
        .collect();
    let (mean_mi, _) = mean_std(&per_trial);
    Ok(MiReport { mean_mi, per_trial })
}

/// Entropy and MI from the same trial runs.
pub fn measure_both(
    rules: &FcaRuleVector,
    config: &DiagnosticsConfig,
) -> Result<(EntropyReport, MiReport), DiagnosticsError> {
    config.validate()?;
    let pairs: Vec<(f64, f64)> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let series = binarized_run(rules, config, trial);
            (
                trial_entropy(&series, config.window),
                trial_mi(&series, config.window, config.mi_lag),
            )
        })
        .collect();
    let ent: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mi: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mean_entropy, std_dev) = mean_std(&ent);
    let (mean_mi, _) = mean_std(&mi);
    Ok((
        EntropyReport {
            mean_entropy,
            std_dev,
            per_trial: ent,
        },
        MiReport {
            mean_mi,
            per_trial: mi,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fca::FuzzyRule;

    fn column(bits: &[u8]) -> Vec<Vec<u8>> {
        bits.iter().map(|&b| vec![b]).collect()
    }

    #[test]
    fn entropy_of_constant_window_is_zero() {
        assert_eq!(site_entropy(&column(&[0; 10])), 0.0);
    }

    #[test]
    fn entropy_of_alternation_is_one() {
        let bits: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        assert_eq!(site_entropy(&column(&bits)), 1.0);
    }

    #[test]
    fn entropy_nine_to_one() {
        let mut bits = vec![0u8; 10];
        bits[3] = 1;
        let expected = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        assert!((site_entropy(&column(&bits)) - expected).abs() < 1e-12);
        assert!((expected - 0.4690).abs() < 1e-4);
    }

    #[test]
    fn mi_of_copy_is_one() {
        let p = [0, 1, 1, 0, 1, 0, 0, 0];
        assert_eq!(mutual_information(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn mi_with_constant_is_zero() {
        let p = [1, 1, 1, 1];
        let q = [0, 1, 0, 1];
        assert_eq!(mutual_information(&p, &q).unwrap(), 0.0);
    }

    #[test]
    fn mi_length_mismatch() {
        assert!(matches!(
            mutual_information(&[0, 1], &[0]),
            Err(DiagnosticsError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn mi_of_independent_patterns_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<u8> = (0..4000).map(|_| rng.random_range(0..2)).collect();
        let b: Vec<u8> = (0..4000).map(|_| rng.random_range(0..2)).collect();
        assert!(mutual_information(&a, &b).unwrap() < 0.05);
    }

    #[test]
    fn config_validation() {
        let bad = DiagnosticsConfig {
            window: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = DiagnosticsConfig {
            binarize_threshold: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(DiagnosticsConfig::default().validate().is_ok());
    }

    fn quick() -> DiagnosticsConfig {
        DiagnosticsConfig {
            run_steps: 400,
            trials: 4,
            rng_seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn zero_rule_is_dead() {
        let rules = FcaRuleVector::uniform(FuzzyRule::new(0).unwrap(), 12);
        let e = measure_entropy(&rules, &quick()).unwrap();
        assert_eq!(e.mean_entropy, 0.0);
        assert_eq!(e.std_dev, 0.0);
        assert_eq!(measure_mi(&rules, &quick()).unwrap().mean_mi, 0.0);
    }

    #[test]
    fn complement_rule_alternates() {
        let rules = FcaRuleVector::uniform(FuzzyRule::new(51).unwrap(), 12);
        let e = measure_entropy(&rules, &quick()).unwrap();
        assert_eq!(e.mean_entropy, 1.0);
        let cfg = DiagnosticsConfig {
            mi_lag: 2,
            ..quick()
        };
        assert_eq!(measure_mi(&rules, &cfg).unwrap().mean_mi, 1.0);
    }

    #[test]
    fn identity_rule_copies() {
        let rules = FcaRuleVector::uniform(FuzzyRule::new(204).unwrap(), 16);
        for lag in [1, 3, 7] {
            let cfg = DiagnosticsConfig { mi_lag: lag, ..quick() };
            assert_eq!(measure_mi(&rules, &cfg).unwrap().mean_mi, 1.0);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let rules = FcaRuleVector::from_numbers(&[238, 17, 85, 250, 5, 204]).unwrap();
        let a = measure_both(&rules, &quick()).unwrap();
        let b = measure_both(&rules, &quick()).unwrap();
        assert_eq!(a, b);
    }
}
