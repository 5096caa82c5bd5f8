//! Scripted shooting behaviour.
//!
//! The procedure is a small state machine: find the ball, approach it, round
//! it until ball and goal are both in view, face the ball, ask the classifier
//! for a veto, and kick. The rounding and facing manoeuvres are written as
//! action-letter macros; each letter becomes one cycle's command:
//!
//! | letter | command                                   |
//! |--------|-------------------------------------------|
//! | `A`    | turn towards the ball                     |
//! | `C`    | dash towards the ball                     |
//! | `G`    | kick towards the goal                     |
//! | `T`    | orbit step: turn to the tangent, then dash |

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::command::CommandKind;
use super::{AgentState, BallState, FieldConfig};
use crate::sequence::ActionSymbol;

pub const CLOCKWISE_BODY: &str = "AGGGT";
pub const CLOCKWISE_CAMERA: &str = "ACCCT";
pub const COUNTER_BODY: &str = "AAACT";
pub const COUNTER_CAMERA: &str = "TTTAC";
pub const FACE_BALL: &str = "ATACT";
pub const KICK_MACRO: &str = "AATAA";

/// Verdict from the in-game classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotAdvice {
    Proceed,
    Veto,
}

/// Anything that can judge a shot from the shooter's recent action letters.
pub trait ShotAdvisor: Send + Sync {
    fn advise(&self, recent_actions: &str) -> ShotAdvice;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingConfig {
    /// Stop approaching once `100 / distance` exceeds this.
    pub proximity_threshold: f64,
    /// Full width of the view cone in degrees.
    pub view_width: f64,
    /// Heading error tolerated before dashing.
    pub aim_tolerance: f64,
    /// Rounding macro repetitions before giving up and facing the ball.
    pub max_round_reps: usize,
    /// Vetoes accepted in a row before shooting anyway.
    pub max_vetoes: usize,
    /// Desired distance to the ball when closing in.
    pub stand_off: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            proximity_threshold: 20.0,
            view_width: 90.0,
            aim_tolerance: 10.0,
            max_round_reps: 3,
            max_vetoes: 3,
            stand_off: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootPhase {
    FindBall,
    Approach,
    Round { clockwise: bool, step: usize, reps: usize },
    FaceBall { step: usize },
    Feedback,
    Kick,
}

pub fn proximity(distance: f64) -> f64 {
    if distance <= 0.0 {
        f64::INFINITY
    } else {
        100.0 / distance
    }
}

/// Per-agent shooting state machine.
#[derive(Clone)]
pub struct ShootingBehavior {
    phase: ShootPhase,
    config: ShootingConfig,
    advisor: Option<Arc<dyn ShotAdvisor>>,
    history: String,
    vetoes: usize,
}

impl std::fmt::Debug for ShootingBehavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShootingBehavior")
            .field("phase", &self.phase)
            .field("history", &self.history)
            .field("vetoes", &self.vetoes)
            .finish()
    }
}

const HISTORY_CAP: usize = 64;

impl ShootingBehavior {
    pub fn new(config: ShootingConfig) -> Self {
        ShootingBehavior {
            phase: ShootPhase::FindBall,
            config,
            advisor: None,
            history: String::new(),
            vetoes: 0,
        }
    }

    pub fn with_advisor(mut self, advisor: Arc<dyn ShotAdvisor>) -> Self {
        self.advisor = Some(advisor);
        self
    }

    pub fn phase(&self) -> ShootPhase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: ShootPhase) {
        self.phase = phase;
    }

    /// Letters of the commands emitted so far (most recent last).
    pub fn history(&self) -> &str {
        &self.history
    }

    fn in_view(&self, me: &AgentState, x: f64, y: f64) -> bool {
        me.relative_angle_to(x, y).abs() <= self.config.view_width / 2.0
    }

    fn letter_command(&self, letter: u8, clockwise: bool, me: &AgentState, ball: &BallState, field: &FieldConfig) -> CommandKind {
        let ball_rel = me.relative_angle_to(ball.x, ball.y);
        match letter {
            b'A' => CommandKind::Turn { moment: ball_rel },
            b'C' => CommandKind::Dash {
                power: self.closing_power(me, ball, field),
            },
            b'G' => {
                let (gx, gy) = field.goal_for(me.team);
                CommandKind::Kick {
                    power: 100.0,
                    direction: goal_direction(me, ball, gx, gy),
                }
            }
            _ => {
                // tangent to the circle around the ball
                let tangent = ball_rel + if clockwise { 90.0 } else { -90.0 };
                let tangent = super::normalize_angle(tangent);
                if tangent.abs() > self.config.aim_tolerance {
                    CommandKind::Turn { moment: tangent }
                } else {
                    CommandKind::Dash { power: 60.0 }
                }
            }
        }
    }

    fn closing_power(&self, me: &AgentState, ball: &BallState, field: &FieldConfig) -> f64 {
        let gap = me.distance_to(ball.x, ball.y) - self.config.stand_off;
        if gap <= 0.0 || field.physics.dash_gain <= 0.0 {
            0.0
        } else {
            (gap / field.physics.dash_gain).min(100.0)
        }
    }

    /// Next command for this cycle, given the agent's own state and the
    /// latest ball observation.
    pub fn next_command(&mut self, me: &AgentState, ball: &BallState, field: &FieldConfig) -> CommandKind {
        let cmd = self.decide(me, ball, field);
        if let Some(sym) = letter_of(&cmd) {
            if self.history.len() >= HISTORY_CAP {
                self.history.remove(0);
            }
            self.history.push(sym.as_char());
        }
        cmd
    }

    fn decide(&mut self, me: &AgentState, ball: &BallState, field: &FieldConfig) -> CommandKind {
        let (gx, gy) = field.goal_for(me.team);
        // phases that finish without emitting fall through; bounded so a
        // misconfigured machine cannot spin
        for _ in 0..8 {
            let dist = me.distance_to(ball.x, ball.y);
            let ball_rel = me.relative_angle_to(ball.x, ball.y);
            match self.phase {
                ShootPhase::FindBall => {
                    if self.in_view(me, ball.x, ball.y) {
                        self.phase = ShootPhase::Approach;
                        continue;
                    }
                    let sweep = self.config.view_width.copysign(ball_rel);
                    return CommandKind::Turn { moment: sweep };
                }
                ShootPhase::Approach => {
                    if proximity(dist) > self.config.proximity_threshold {
                        self.phase = ShootPhase::Round {
                            clockwise: goal_is_right(me, ball, gx, gy),
                            step: 0,
                            reps: 0,
                        };
                        continue;
                    }
                    if !self.in_view(me, ball.x, ball.y) {
                        self.phase = ShootPhase::FindBall;
                        continue;
                    }
                    if ball_rel.abs() > self.config.aim_tolerance {
                        return CommandKind::Turn { moment: ball_rel };
                    }
                    return CommandKind::Dash { power: 100.0 };
                }
                ShootPhase::Round { clockwise, step, reps } => {
                    if self.in_view(me, ball.x, ball.y) && self.in_view(me, gx, gy) {
                        self.phase = ShootPhase::FaceBall { step: 0 };
                        continue;
                    }
                    if reps >= self.config.max_round_reps {
                        self.phase = ShootPhase::FaceBall { step: 0 };
                        continue;
                    }
                    let script: Vec<u8> = if clockwise {
                        [CLOCKWISE_BODY, CLOCKWISE_CAMERA].concat().into_bytes()
                    } else {
                        [COUNTER_BODY, COUNTER_CAMERA].concat().into_bytes()
                    };
                    let letter = script[step];
                    let (step, reps) = if step + 1 == script.len() {
                        (0, reps + 1)
                    } else {
                        (step + 1, reps)
                    };
                    self.phase = ShootPhase::Round { clockwise, step, reps };
                    return self.letter_command(letter, clockwise, me, ball, field);
                }
                ShootPhase::FaceBall { step } => {
                    let script = FACE_BALL.as_bytes();
                    if step >= script.len() {
                        self.phase = ShootPhase::Feedback;
                        continue;
                    }
                    self.phase = ShootPhase::FaceBall { step: step + 1 };
                    return self.letter_command(script[step], goal_is_right(me, ball, gx, gy), me, ball, field);
                }
                ShootPhase::Feedback => {
                    let advice = self
                        .advisor
                        .as_ref()
                        .map_or(ShotAdvice::Proceed, |a| a.advise(&self.history));
                    if advice == ShotAdvice::Veto && self.vetoes < self.config.max_vetoes {
                        self.vetoes += 1;
                        let clockwise = !goal_is_right(me, ball, gx, gy);
                        // emit the first reversed letter now; otherwise the
                        // in-view check would skip the rounding entirely
                        let first = if clockwise { CLOCKWISE_BODY } else { COUNTER_BODY }.as_bytes()[0];
                        self.phase = ShootPhase::Round { clockwise, step: 1, reps: 0 };
                        return self.letter_command(first, clockwise, me, ball, field);
                    }
                    self.vetoes = 0;
                    self.phase = ShootPhase::Kick;
                    continue;
                }
                ShootPhase::Kick => {
                    if dist > field.kickable_distance {
                        if dist > 100.0 / self.config.proximity_threshold * 2.0 {
                            self.phase = ShootPhase::FindBall;
                            continue;
                        }
                        if ball_rel.abs() > self.config.aim_tolerance {
                            return CommandKind::Turn { moment: ball_rel };
                        }
                        return CommandKind::Dash {
                            power: self.closing_power(me, ball, field).max(10.0),
                        };
                    }
                    self.phase = ShootPhase::FindBall;
                    return CommandKind::Kick {
                        power: 100.0,
                        direction: goal_direction(me, ball, gx, gy),
                    };
                }
            }
        }
        CommandKind::Turn { moment: 0.0 }
    }
}

/// Kick direction (relative to the body) that sends the ball at the goal.
fn goal_direction(me: &AgentState, ball: &BallState, gx: f64, gy: f64) -> f64 {
    let absolute = super::bearing(gx - ball.x, gy - ball.y);
    super::normalize_angle(absolute - me.heading)
}

/// Facing the ball, is the goal on the right-hand side?
fn goal_is_right(me: &AgentState, ball: &BallState, gx: f64, gy: f64) -> bool {
    let (bx, by) = (ball.x - me.x, ball.y - me.y);
    let (tx, ty) = (gx - ball.x, gy - ball.y);
    bx * ty - by * tx < 0.0
}

/// Action letter for an emitted command.
pub fn letter_of(cmd: &CommandKind) -> Option<ActionSymbol> {
    match cmd {
        CommandKind::Turn { .. } => Some(ActionSymbol::A),
        CommandKind::Dash { .. } => Some(ActionSymbol::C),
        CommandKind::Kick { .. } => Some(ActionSymbol::G),
        _ => None,
    }
}
