use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::feedback::FEATURE_MAP_VERSION;
use super::ga::{evolve_rules, GaConfig};
use super::kmeans::{group_basins, nearest};
use super::{basin_of, majority, FmacaError, LabeledPattern};
use crate::fca::{FcaRuleVector, FuzzyState};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_node_size: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 8,
            min_node_size: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum FmacaNode {
    Leaf {
        class: u32,
        /// Training members here did not all share `class`.
        impure: bool,
        #[serde(skip)]
        members: Vec<usize>,
    },
    Internal {
        rules: FcaRuleVector,
        k: usize,
        centroids: Vec<Vec<f64>>,
        children: Vec<FmacaNode>,
        #[serde(skip)]
        members: Vec<usize>,
    },
}

impl FmacaNode {
    /// Training indices that reached this node. Empty after deserializing.
    pub fn members(&self) -> &[usize] {
        match self {
            FmacaNode::Leaf { members, .. } | FmacaNode::Internal { members, .. } => members,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            FmacaNode::Leaf { .. } => 0,
            FmacaNode::Internal { children, .. } => 1 + children.iter().map(FmacaNode::depth).max().unwrap_or(0),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            FmacaNode::Leaf { .. } => 1,
            FmacaNode::Internal { children, .. } => children.iter().map(FmacaNode::leaf_count).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FmacaTree {
    pub schema_version: u32,
    pub feature_map_version: u32,
    pub dimension: usize,
    pub classes: u32,
    pub root: FmacaNode,
}

impl FmacaTree {
    pub fn single_leaf(class: u32, dimension: usize, classes: u32) -> Self {
        FmacaTree {
            schema_version: SCHEMA_VERSION,
            feature_map_version: FEATURE_MAP_VERSION,
            dimension,
            classes,
            root: FmacaNode::Leaf {
                class,
                impure: false,
                members: Vec::new(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String, FmacaError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), FmacaError> {
        Ok(serde_json::to_writer_pretty(out, self)?)
    }

    pub fn read_json<R: Read>(input: R) -> Result<Self, FmacaError> {
        let tree: FmacaTree = serde_json::from_reader(input)?;
        if tree.schema_version != SCHEMA_VERSION {
            return Err(FmacaError::Schema {
                found: tree.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(tree)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: u32,
    /// Routing passed through an unsettled trajectory or an impure leaf.
    pub flagged: bool,
}

pub fn build_tree(training: &[LabeledPattern], classes: u32, ga: &GaConfig) -> Result<FmacaTree, FmacaError> {
    build_tree_with(training, classes, ga, &TreeConfig::default())
}

pub fn build_tree_with(
    training: &[LabeledPattern],
    classes: u32,
    ga: &GaConfig,
    config: &TreeConfig,
) -> Result<FmacaTree, FmacaError> {
    ga.validate()?;
    let dimension = training.first().ok_or(FmacaError::EmptyTraining)?.features.len();
    for p in training {
        if p.label == 0 || p.label > classes {
            return Err(FmacaError::LabelOutOfRange { label: p.label, classes });
        }
        if p.features.len() != dimension {
            return Err(FmacaError::Dimension {
                found: p.features.len(),
                expected: dimension,
            });
        }
    }
    let mut builder = Builder {
        training,
        ga,
        config,
        nodes_built: 0,
    };
    let all: Vec<usize> = (0..training.len()).collect();
    let root = builder.partition(all, 0)?;
    Ok(FmacaTree {
        schema_version: SCHEMA_VERSION,
        feature_map_version: FEATURE_MAP_VERSION,
        dimension,
        classes,
        root,
    })
}

struct Builder<'a> {
    training: &'a [LabeledPattern],
    ga: &'a GaConfig,
    config: &'a TreeConfig,
    nodes_built: u64,
}

impl Builder<'_> {
    fn leaf(&self, members: Vec<usize>, fallback: u32) -> FmacaNode {
        let class = majority(members.iter().map(|&i| self.training[i].label)).unwrap_or(fallback);
        let impure = members.iter().any(|&i| self.training[i].label != class);
        FmacaNode::Leaf { class, impure, members }
    }

    fn partition(&mut self, members: Vec<usize>, depth: usize) -> Result<FmacaNode, FmacaError> {
        let labels: BTreeSet<u32> = members.iter().map(|&i| self.training[i].label).collect();
        if labels.len() <= 1 || depth >= self.config.max_depth || members.len() < self.config.min_node_size {
            return Ok(self.leaf(members, 0));
        }
        let k = labels.len();
        let subset: Vec<LabeledPattern> = members.iter().map(|&i| self.training[i].clone()).collect();
        let node_seed = self.ga.rng_seed.wrapping_add(self.nodes_built.wrapping_mul(0x9E37_79B9));
        self.nodes_built += 1;
        let ga = self.ga.clone().with_seed(node_seed);
        let outcome = evolve_rules(&subset, k, &ga)?;

        let terminals = subset
            .iter()
            .map(|p| basin_of(&p.features, &outcome.best).map(|b| b.terminal))
            .collect::<Result<Vec<_>, _>>()?;
        let grouping = group_basins(&terminals, k, ga.rng_seed ^ 0x5EED)?;
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); grouping.k()];
        for (&m, &g) in members.iter().zip(&grouping.assignment) {
            groups[g].push(m);
        }
        if groups.iter().filter(|g| !g.is_empty()).count() < 2 {
            return Ok(self.leaf(members, 0));
        }
        let parent_majority = majority(members.iter().map(|&i| self.training[i].label)).unwrap_or(0);
        let mut children = Vec::with_capacity(groups.len());
        for g in groups {
            if g.is_empty() {
                children.push(self.leaf(g, parent_majority));
            } else {
                children.push(self.partition(g, depth + 1)?);
            }
        }
        Ok(FmacaNode::Internal {
            rules: outcome.best,
            k: grouping.k(),
            centroids: grouping.centroids,
            children,
            members,
        })
    }
}

pub fn classify(tree: &FmacaTree, pattern: &FuzzyState) -> Result<u32, FmacaError> {
    classify_detailed(tree, pattern).map(|c| c.class)
}

/// Route a pattern to a leaf.
///
/// An attractor that was cut off before settling is still sent to the
/// nearest centroid, but the result is flagged.
pub fn classify_detailed(tree: &FmacaTree, pattern: &FuzzyState) -> Result<Classification, FmacaError> {
    if pattern.len() != tree.dimension {
        return Err(FmacaError::Dimension {
            found: pattern.len(),
            expected: tree.dimension,
        });
    }
    let mut node = &tree.root;
    let mut flagged = false;
    loop {
        match node {
            FmacaNode::Leaf { class, impure, .. } => {
                return Ok(Classification {
                    class: *class,
                    flagged: flagged || *impure,
                })
            }
            FmacaNode::Internal {
                rules,
                centroids,
                children,
                ..
            } => {
                let b = basin_of(pattern, rules)?;
                flagged |= b.overflow;
                node = &children[nearest(centroids, b.terminal.cells())];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(v: &[f64]) -> FuzzyState {
        FuzzyState::new(v.to_vec()).unwrap()
    }

    fn small_ga() -> GaConfig {
        GaConfig {
            population_size: 12,
            generations: 10,
            ..GaConfig::default()
        }
    }

    #[test]
    fn single_class_is_one_leaf() {
        let data = vec![
            LabeledPattern::new(st(&[0.1, 0.2]), 2),
            LabeledPattern::new(st(&[0.7, 0.9]), 2),
        ];
        let tree = build_tree(&data, 2, &small_ga()).unwrap();
        assert!(matches!(tree.root, FmacaNode::Leaf { class: 2, impure: false, .. }));
        assert_eq!(classify(&tree, &st(&[0.5, 0.5])).unwrap(), 2);
    }

    #[test]
    fn identical_conflict_becomes_impure_majority_leaf() {
        let data = vec![
            LabeledPattern::new(st(&[0.3, 0.3]), 1),
            LabeledPattern::new(st(&[0.3, 0.3]), 2),
            LabeledPattern::new(st(&[0.3, 0.3]), 2),
        ];
        let tree = build_tree(&data, 2, &small_ga()).unwrap();
        assert!(matches!(tree.root, FmacaNode::Leaf { class: 2, impure: true, .. }));
        assert!(classify_detailed(&tree, &st(&[0.3, 0.3])).unwrap().flagged);
    }

    #[test]
    fn separable_training_set_is_learned() {
        let mut data = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0 * 0.3;
            data.push(LabeledPattern::new(st(&[t, 0.3 - t, 0.1]), 1));
            data.push(LabeledPattern::new(st(&[0.7 + t, 1.0 - t, 0.9]), 2));
        }
        let tree = build_tree(&data, 2, &small_ga()).unwrap();
        for p in &data {
            assert_eq!(classify(&tree, &p.features).unwrap(), p.label);
        }
        assert!(tree.root.depth() <= 8);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_tree(&[], 2, &small_ga()), Err(FmacaError::EmptyTraining)));
        let data = vec![LabeledPattern::new(st(&[0.1]), 3)];
        assert!(matches!(
            build_tree(&data, 2, &small_ga()),
            Err(FmacaError::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn json_roundtrip_and_schema() {
        let data = vec![
            LabeledPattern::new(st(&[0.1, 0.1]), 1),
            LabeledPattern::new(st(&[0.9, 0.9]), 2),
        ];
        let tree = build_tree(&data, 2, &small_ga()).unwrap();
        let text = tree.to_json().unwrap();
        let back = FmacaTree::read_json(text.as_bytes()).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        for p in &data {
            assert_eq!(classify(&back, &p.features).unwrap(), p.label);
        }
        let bad = text.replacen("\"schema_version\": 1", "\"schema_version\": 4", 1);
        assert!(matches!(FmacaTree::read_json(bad.as_bytes()), Err(FmacaError::Schema { found: 4, .. })));
    }
}
