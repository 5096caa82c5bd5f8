use serde::{Deserialize, Serialize};

use super::SimError;

/// Physics constants. The defaults are soccer-server-like magnitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    /// Metres per cycle per unit of dash power.
    pub dash_gain: f64,
    /// Metres per cycle per unit of kick power.
    pub kick_gain: f64,
    pub ball_decay: f64,
    pub player_decay: f64,
    /// Draw 0/1/2 perceptions per cycle instead of exactly one.
    pub perception_jitter: bool,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            dash_gain: 0.01,
            kick_gain: 0.05,
            ball_decay: 0.94,
            player_decay: 0.4,
            perception_jitter: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub length: f64,
    pub width: f64,
    pub goal_width: f64,
    pub kickable_distance: f64,
    pub cycle_count: usize,
    pub rng_seed: u64,
    #[serde(default = "default_players")]
    pub players_per_team: usize,
    #[serde(default)]
    pub physics: Physics,
}

fn default_players() -> usize {
    3
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            length: 105.0,
            width: 68.0,
            goal_width: 14.0,
            kickable_distance: 1.0,
            cycle_count: 1000,
            rng_seed: 0,
            players_per_team: default_players(),
            physics: Physics::default(),
        }
    }
}

impl FieldConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_cycles(mut self, cycles: usize) -> Self {
        self.cycle_count = cycles;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::Config(m.to_string()));
        if !(self.length > 0.0) {
            return fail("length must be > 0");
        }
        if !(self.width > 0.0) {
            return fail("width must be > 0");
        }
        if !(self.goal_width > 0.0 && self.goal_width < self.width) {
            return fail("goal_width must lie in (0, width)");
        }
        if !(self.kickable_distance > 0.0) {
            return fail("kickable_distance must be > 0");
        }
        if self.cycle_count == 0 {
            return fail("cycle_count must be > 0");
        }
        if self.players_per_team == 0 || self.players_per_team > 13 {
            return fail("players_per_team must lie in 1..=13");
        }
        let p = &self.physics;
        if !(p.ball_decay >= 0.0 && p.ball_decay < 1.0) {
            return fail("ball_decay must lie in [0, 1)");
        }
        if !(p.player_decay >= 0.0 && p.player_decay < 1.0) {
            return fail("player_decay must lie in [0, 1)");
        }
        if !(p.dash_gain >= 0.0 && p.kick_gain >= 0.0) {
            return fail("gains must be non-negative");
        }
        Ok(())
    }

    pub fn half_length(&self) -> f64 {
        self.length / 2.0
    }

    pub fn half_width(&self) -> f64 {
        self.width / 2.0
    }

    /// Centre of the goal `team` attacks.
    pub fn goal_for(&self, team: super::Team) -> (f64, f64) {
        (team.attack_sign() * self.half_length(), 0.0)
    }
}
