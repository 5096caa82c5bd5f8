use std::fmt;

use serde::{Deserialize, Serialize};

/// Single-letter agent identifier (`'a'`, `'b'`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub char);

impl AgentId {
    pub fn from_index(i: usize) -> Self {
        AgentId((b'a' + i as u8) as char)
    }

    pub fn letter(self) -> char {
        self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Team {
    Home,
    Away,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    /// +1 for the side attacking towards +x.
    pub fn attack_sign(self) -> f64 {
        match self {
            Team::Home => 1.0,
            Team::Away => -1.0,
        }
    }
}

/// Normalize an angle in degrees to `[-180, 180)`.
pub fn normalize_angle(deg: f64) -> f64 {
    if !deg.is_finite() {
        return 0.0;
    }
    let a = (deg + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negatives
    if a >= 180.0 {
        a - 360.0
    } else {
        a
    }
}

/// Bearing in degrees of the vector (dx, dy).
pub fn bearing(dx: f64, dy: f64) -> f64 {
    normalize_angle(dy.atan2(dx).to_degrees())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub team: Team,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl AgentState {
    pub fn new(id: AgentId, team: Team, x: f64, y: f64, heading: f64) -> Self {
        AgentState {
            id,
            team,
            x,
            y,
            heading: normalize_angle(heading),
            speed: 0.0,
        }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (x - self.x).hypot(y - self.y)
    }

    /// Angle of (x, y) relative to the current heading, in `[-180, 180)`.
    pub fn relative_angle_to(&self, x: f64, y: f64) -> f64 {
        normalize_angle(bearing(x - self.x, y - self.y) - self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BallState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl BallState {
    pub fn at(x: f64, y: f64) -> Self {
        BallState { x, y, vx: 0.0, vy: 0.0 }
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub home: u32,
    pub away: u32,
}
