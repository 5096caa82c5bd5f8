use crate::fca::FuzzyState;
use crate::sim::{ShotAdvice, ShotAdvisor};

use super::tree::{classify_detailed, FmacaTree};
use super::{FmacaError, GOAL_CLASS};

/// Version of the letter-to-feature mapping below; stored in trees.
pub const FEATURE_MAP_VERSION: u32 = 1;

pub fn symbol_value(c: char) -> Option<f64> {
    match c {
        'A' => Some(0.2),
        'C' => Some(0.4),
        'G' => Some(0.6),
        'T' => Some(0.8),
        '-' => Some(0.0),
        _ => None,
    }
}

/// One cell per letter.
pub fn encode_window(window: &str) -> Result<FuzzyState, FmacaError> {
    let cells = window
        .chars()
        .map(|c| symbol_value(c).ok_or(FmacaError::Symbol(c)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FuzzyState::new(cells)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feedback {
    pub advice: ShotAdvice,
    pub flagged: bool,
}

/// Judge a shot from the trailing letters of a player's sequence.
///
/// Only the last `tree.dimension` letters are used. A shorter window gives
/// no grounds for a veto, so the shot proceeds with a flag.
pub fn ca_feedback(tree: &FmacaTree, window: &str) -> Result<Feedback, FmacaError> {
    let n = window.chars().count();
    if n < tree.dimension {
        return Ok(Feedback {
            advice: ShotAdvice::Proceed,
            flagged: true,
        });
    }
    let tail: String = window.chars().skip(n - tree.dimension).collect();
    let c = classify_detailed(tree, &encode_window(&tail)?)?;
    Ok(Feedback {
        advice: if c.class == GOAL_CLASS {
            ShotAdvice::Proceed
        } else {
            ShotAdvice::Veto
        },
        flagged: c.flagged,
    })
}

/// A trained tree plugged into the shooting behaviour.
#[derive(Debug, Clone)]
pub struct TreeAdvisor {
    tree: FmacaTree,
}

impl TreeAdvisor {
    pub fn new(tree: FmacaTree) -> Self {
        TreeAdvisor { tree }
    }
}

impl ShotAdvisor for TreeAdvisor {
    fn advise(&self, recent_actions: &str) -> ShotAdvice {
        ca_feedback(&self.tree, recent_actions)
            .map(|f| f.advice)
            .unwrap_or(ShotAdvice::Proceed)
    }
}
