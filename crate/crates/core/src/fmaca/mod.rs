//! Tree-structured fuzzy multiple-attractor CA classifier.
//!
//! Each internal node holds an evolved rule vector. A pattern is run to its
//! attractor, the attractor is assigned to the nearest basin centroid, and
//! the pattern descends into that child until it reaches a leaf.

mod feedback;
mod ga;
mod kmeans;
mod tree;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fca::{evolve, FcaError, FcaRuleVector, FuzzyState, DEFAULT_TOLERANCE};

pub use feedback::{ca_feedback, encode_window, symbol_value, Feedback, TreeAdvisor, FEATURE_MAP_VERSION};
pub use ga::{evolve_rules, GaConfig, GaOutcome};
pub use kmeans::{group_basins, nearest, Grouping};
pub use tree::{build_tree, build_tree_with, classify, classify_detailed, Classification, FmacaNode, FmacaTree, TreeConfig};

/// Class used for goal-labelled windows.
pub const GOAL_CLASS: u32 = 1;
/// Class used for threat or failure windows.
pub const THREAT_CLASS: u32 = 2;

/// Step budget when running a pattern to its attractor.
pub const EVOLVE_MAX_STEPS: usize = 128;

#[derive(Debug, Error)]
pub enum FmacaError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("number of clusters must be at least 1")]
    InvalidK,
    #[error("label {label} outside 1..={classes}")]
    LabelOutOfRange { label: u32, classes: u32 },
    #[error("pattern has {found} features, expected {expected}")]
    Dimension { found: usize, expected: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown symbol {0:?} in feedback window")]
    Symbol(char),
    #[error("tree schema version {found}, expected {expected}")]
    Schema { found: u32, expected: u32 },
    #[error(transparent)]
    Fca(#[from] FcaError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPattern {
    pub features: FuzzyState,
    pub label: u32,
}

impl LabeledPattern {
    pub fn new(features: FuzzyState, label: u32) -> Self {
        LabeledPattern { features, label }
    }
}

/// Where a pattern ends up under a rule vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinAssignment {
    pub terminal: FuzzyState,
    /// Quantized terminal, usable as a hash key.
    pub basin_id: Vec<i64>,
    /// The trajectory was cut off before settling.
    pub overflow: bool,
}

pub fn basin_of(pattern: &FuzzyState, rules: &FcaRuleVector) -> Result<BasinAssignment, FmacaError> {
    let traj = evolve(pattern, rules, EVOLVE_MAX_STEPS, DEFAULT_TOLERANCE)?;
    let terminal = traj.attractor().clone();
    Ok(BasinAssignment {
        basin_id: terminal.quantized(),
        overflow: traj.is_truncated(),
        terminal,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttractorBasin {
    pub basin_id: usize,
    pub attractor: FuzzyState,
    pub members: Vec<usize>,
}

/// Group patterns by exact (quantized) attractor, in order of first appearance.
pub fn attractor_basins(patterns: &[FuzzyState], rules: &FcaRuleVector) -> Result<Vec<AttractorBasin>, FmacaError> {
    let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut basins: Vec<AttractorBasin> = Vec::new();
    for (i, p) in patterns.iter().enumerate() {
        let b = basin_of(p, rules)?;
        let id = *index.entry(b.basin_id).or_insert_with(|| {
            basins.push(AttractorBasin {
                basin_id: basins.len(),
                attractor: b.terminal.clone(),
                members: Vec::new(),
            });
            basins.len() - 1
        });
        basins[id].members.push(i);
    }
    Ok(basins)
}

/// Weighted purity: sum over groups of the majority count, over the total.
pub fn purity(assignment: &[usize], labels: &[u32]) -> f64 {
    if assignment.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for (&a, &l) in assignment.iter().zip(labels) {
        *counts.entry((a, l)).or_default() += 1;
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for ((a, _), n) in counts {
        let b = best.entry(a).or_default();
        *b = (*b).max(n);
    }
    best.values().sum::<usize>() as f64 / assignment.len() as f64
}

/// Purity of the k-cluster grouping of the subset's attractors.
pub fn fitness(rules: &FcaRuleVector, subset: &[LabeledPattern], k: usize, seed: u64) -> Result<f64, FmacaError> {
    if subset.is_empty() {
        return Err(FmacaError::EmptyTraining);
    }
    let terminals = subset
        .iter()
        .map(|p| basin_of(&p.features, rules).map(|b| b.terminal))
        .collect::<Result<Vec<_>, _>>()?;
    let grouping = group_basins(&terminals, k, seed)?;
    let labels: Vec<u32> = subset.iter().map(|p| p.label).collect();
    Ok(purity(&grouping.assignment, &labels))
}

/// Majority label, ties to the smaller class id.
pub(crate) fn majority(labels: impl IntoIterator<Item = u32>) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut best: Option<(u32, usize)> = None;
    for (l, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((l, n));
        }
    }
    best.map(|(l, _)| l)
}
