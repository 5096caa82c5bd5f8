//! Cycle-based 2-D soccer simulator.
//!
//! Agents submit commands during a cycle. Instant commands (`say`,
//! `sense_body`, `change_view`) take effect immediately under their frequency
//! limits; movement commands (`turn`, `dash`, `kick`, `catch`) queue and one
//! per agent runs when the cycle ends. When several are queued the seeded
//! match RNG picks which.
//!
//! Coordinates are metres with the origin at the centre spot. Home attacks
//! towards +x, away towards -x. Headings are degrees in `[-180, 180)`.

mod command;
mod config;
mod match_log;
mod policy;
mod shooting;
mod types;
mod world;

use thiserror::Error;

pub use command::*;
pub use config::{FieldConfig, Physics};
pub use match_log::{run_match, run_world, CycleRecord, MatchLog, Outcome};
pub use policy::{
    AgentPolicy, ChaserPolicy, NullPolicy, PolicyError, PolicyInput, PolicyKind, RandomPolicy,
    ShooterPolicy,
};
pub use shooting::{
    letter_of, proximity, ShootPhase, CLOCKWISE_BODY, CLOCKWISE_CAMERA, COUNTER_BODY, COUNTER_CAMERA,
    FACE_BALL, KICK_MACRO, ShootingBehavior, ShootingConfig, ShotAdvice, ShotAdvisor,
};
pub use types::{bearing, normalize_angle, AgentId, AgentState, BallState, Score, Team};
pub use world::{EventKind, MatchEvent, Perception, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("stale command issued at cycle {issued}, current cycle is {current}")]
    StaleCommand { issued: usize, current: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed match log: {0}")]
    Format(String),
    #[error("schema version {found} not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PartialEq for SimError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SimError::UnknownAgent(a), SimError::UnknownAgent(b)) => a == b,
            (
                SimError::StaleCommand { issued: a, current: b },
                SimError::StaleCommand { issued: c, current: d },
            ) => a == c && b == d,
            (SimError::Config(a), SimError::Config(b)) => a == b,
            _ => false,
        }
    }
}
