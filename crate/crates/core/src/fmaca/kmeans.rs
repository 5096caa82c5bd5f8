//! K-means over attractor states, seeded with distinct terminal values.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FmacaError;
use crate::fca::FuzzyState;

const MAX_ITERATIONS: usize = 100;

/// Cluster index per terminal plus the fitted centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Set when fewer distinct terminals than requested clusters existed.
    pub reduced: bool,
}

impl Grouping {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest(centroids: &[Vec<f64>], point: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, point);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Cluster terminal states into at most `k` groups.
///
/// The first centroid is a seeded pick among the distinct terminals; each
/// further centroid is the distinct terminal farthest from those already
/// chosen. Lloyd iterations follow, and the returned assignment is always
/// nearest-centroid with respect to the returned centroids.
pub fn group_basins(terminals: &[FuzzyState], k: usize, seed: u64) -> Result<Grouping, FmacaError> {
    if terminals.is_empty() {
        return Err(FmacaError::EmptyTraining);
    }
    if k == 0 {
        return Err(FmacaError::InvalidK);
    }
    let mut seen = HashSet::new();
    let distinct: Vec<&FuzzyState> = terminals.iter().filter(|t| seen.insert(t.quantized())).collect();
    let k_eff = k.min(distinct.len());
    let reduced = k_eff < k;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..distinct.len());
    let mut centroids: Vec<Vec<f64>> = vec![distinct[first].cells().to_vec()];
    let mut min_d: Vec<f64> = distinct
        .iter()
        .map(|d| sq_dist(d.cells(), &centroids[0]))
        .collect();
    while centroids.len() < k_eff {
        let (far, _) = min_d
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let c = distinct[far].cells().to_vec();
        for (m, d) in min_d.iter_mut().zip(&distinct) {
            *m = m.min(sq_dist(d.cells(), &c));
        }
        centroids.push(c);
    }

    let dim = terminals[0].len();
    let mut assignment: Vec<usize> = terminals.iter().map(|t| nearest(&centroids, t.cells())).collect();
    for _ in 0..MAX_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k_eff];
        let mut counts = vec![0usize; k_eff];
        for (t, &a) in terminals.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(t.cells()) {
                *s += v;
            }
        }
        for (c, (s, &n)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            if n > 0 {
                *c = s.iter().map(|v| v / n as f64).collect();
            }
        }
        let next: Vec<usize> = terminals.iter().map(|t| nearest(&centroids, t.cells())).collect();
        if next == assignment {
            break;
        }
        assignment = next;
    }
    Ok(Grouping {
        assignment,
        centroids,
        reduced,
    })
}
