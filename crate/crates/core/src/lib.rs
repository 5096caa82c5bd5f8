//! Sequence-driven learning for a small soccer simulator.
//!
//! Matches are played in [`sim`], turned into letter sequences by
//! [`sequence`], mined for repeats and motifs in [`miner`], and used to train
//! a fuzzy CA tree classifier ([`fmaca`], built on [`fca`]) and a learning
//! classifier system ([`lcs`]). [`diagnostics`] measures entropy and mutual
//! information of CA rule vectors, and [`pipeline`] chains the stages through
//! files.

mod artifact;
pub mod diagnostics;
pub mod fca;
pub mod fmaca;
pub mod lcs;
pub mod miner;
pub mod pipeline;
pub mod sequence;
pub mod sim;

/// Version stamped on every artifact this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

pub use fca::{FcaRuleVector, FuzzyRule, FuzzyState};
pub use sequence::{ActionSymbol, GameSequence, PlayerSequence};
pub use sim::{AgentId, FieldConfig, MatchLog, Team};
