use serde::{Deserialize, Serialize};

pub const TURN_RANGE: (f64, f64) = (-180.0, 180.0);
pub const DASH_RANGE: (f64, f64) = (-30.0, 100.0);
pub const KICK_POWER_RANGE: (f64, f64) = (0.0, 100.0);
pub const KICK_DIRECTION_RANGE: (f64, f64) = (-180.0, 180.0);
pub const SAY_MAX_CHARS: usize = 512;
pub const SENSE_BODY_PER_CYCLE: u32 = 3;
pub const CHANGE_VIEW_PER_CYCLE: u32 = 1;
/// A teammate hears at most one message from a speaker every this many cycles.
pub const SAY_HEARING_INTERVAL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewQuality {
    High,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewWidth {
    Narrow,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandKind {
    Turn { moment: f64 },
    Dash { power: f64 },
    Kick { power: f64, direction: f64 },
    Catch,
    Say { text: String },
    SenseBody,
    ChangeView { quality: ViewQuality, width: ViewWidth },
}

fn clamp_to(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if v.is_nan() {
        0.0f64.clamp(lo, hi)
    } else {
        v.clamp(lo, hi)
    }
}

impl CommandKind {
    /// Movement commands execute at the end of the cycle, one per agent.
    pub fn is_movement(&self) -> bool {
        matches!(
            self,
            CommandKind::Turn { .. } | CommandKind::Dash { .. } | CommandKind::Kick { .. } | CommandKind::Catch
        )
    }

    /// Pull every argument into its legal range.
    pub fn clamped(self) -> CommandKind {
        match self {
            CommandKind::Turn { moment } => CommandKind::Turn {
                moment: clamp_to(moment, TURN_RANGE),
            },
            CommandKind::Dash { power } => CommandKind::Dash {
                power: clamp_to(power, DASH_RANGE),
            },
            CommandKind::Kick { power, direction } => CommandKind::Kick {
                power: clamp_to(power, KICK_POWER_RANGE),
                direction: clamp_to(direction, KICK_DIRECTION_RANGE),
            },
            CommandKind::Say { text } => CommandKind::Say {
                text: text.chars().take(SAY_MAX_CHARS).collect(),
            },
            other => other,
        }
    }

    pub fn in_range(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        match self {
            CommandKind::Turn { moment } => within(*moment, TURN_RANGE),
            CommandKind::Dash { power } => within(*power, DASH_RANGE),
            CommandKind::Kick { power, direction } => {
                within(*power, KICK_POWER_RANGE) && within(*direction, KICK_DIRECTION_RANGE)
            }
            CommandKind::Say { text } => text.chars().count() <= SAY_MAX_CHARS,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub kind: CommandKind,
    pub issued_cycle: usize,
}

impl Command {
    pub fn new(kind: CommandKind, issued_cycle: usize) -> Self {
        Command { kind, issued_cycle }
    }

    pub fn turn(moment: f64, cycle: usize) -> Self {
        Command::new(CommandKind::Turn { moment }, cycle)
    }

    pub fn dash(power: f64, cycle: usize) -> Self {
        Command::new(CommandKind::Dash { power }, cycle)
    }

    pub fn kick(power: f64, direction: f64, cycle: usize) -> Self {
        Command::new(CommandKind::Kick { power, direction }, cycle)
    }
}

/// What `submit_command` did with a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ack {
    /// Movement command waiting for the end of the cycle.
    Queued,
    /// Instant command applied now.
    Applied,
    /// `say` accepted; `heard` tells whether teammates receive it.
    Said { heard: bool },
    /// Over the per-cycle frequency limit; dropped.
    RateLimited,
}
