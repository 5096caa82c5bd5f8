use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::command::{CommandKind, ViewQuality, ViewWidth};
use super::shooting::{ShootingBehavior, ShootingConfig, ShotAdvisor};
use super::{AgentId, FieldConfig, Perception, SimError, Team};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyError(pub String);

impl fmt::Display for PolicyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for PolicyError {}

/// What an agent sees when it is asked to act.
pub struct PolicyInput<'a> {
    pub me: AgentId,
    pub cycle: usize,
    /// Snapshots delivered this cycle (possibly none).
    pub fresh: &'a [Perception],
    /// Most recent snapshot ever received, including this cycle's.
    pub latest: Option<&'a Perception>,
    pub field: &'a FieldConfig,
}

pub trait AgentPolicy {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Vec<CommandKind>, PolicyError>;
}

#[derive(Debug, Default)]
pub struct NullPolicy;

impl AgentPolicy for NullPolicy {
    fn act(&mut self, _: &PolicyInput<'_>) -> Result<Vec<CommandKind>, PolicyError> {
        Ok(Vec::new())
    }
}

/// Runs the shooting state machine on the latest snapshot.
#[derive(Debug)]
pub struct ShooterPolicy {
    behavior: ShootingBehavior,
}

impl ShooterPolicy {
    pub fn new(config: ShootingConfig) -> Self {
        ShooterPolicy {
            behavior: ShootingBehavior::new(config),
        }
    }

    pub fn with_advisor(config: ShootingConfig, advisor: Arc<dyn ShotAdvisor>) -> Self {
        ShooterPolicy {
            behavior: ShootingBehavior::new(config).with_advisor(advisor),
        }
    }

    pub fn behavior(&self) -> &ShootingBehavior {
        &self.behavior
    }
}

impl AgentPolicy for ShooterPolicy {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Vec<CommandKind>, PolicyError> {
        let Some(view) = input.latest else {
            return Ok(Vec::new());
        };
        let me = view
            .agent(input.me)
            .ok_or_else(|| PolicyError(format!("agent {} missing from perception", input.me)))?;
        Ok(vec![self.behavior.next_command(me, &view.ball, input.field)])
    }
}

/// Team player: the side's nearest agent goes for the ball and dribbles it
/// towards the opponent goal, passing forward now and then or when an
/// opponent closes in, and shooting once within `SHOOT_RANGE`. The others
/// take up support positions ahead of the ball.
#[derive(Debug)]
pub struct ChaserPolicy {
    rng: ChaCha8Rng,
}

const SHOOT_RANGE: f64 = 25.0;
const DRIBBLE_POWER: f64 = 2.0;
const PASS_RATE: f64 = 0.1;
const PRESSURE_RADIUS: f64 = 2.0;
const CLEAR_RATE: f64 = 0.2;

impl ChaserPolicy {
    pub fn new(seed: u64) -> Self {
        ChaserPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

fn face_or_dash(rel: f64, tolerance: f64, power: f64) -> CommandKind {
    if rel.abs() > tolerance {
        CommandKind::Turn { moment: rel }
    } else {
        CommandKind::Dash { power }
    }
}

impl AgentPolicy for ChaserPolicy {
    fn act(&mut self, input: &PolicyInput<'_>) -> Result<Vec<CommandKind>, PolicyError> {
        let Some(view) = input.latest else {
            return Ok(Vec::new());
        };
        let Some(me) = view.agent(input.me) else {
            return Err(PolicyError(format!("agent {} missing from perception", input.me)));
        };
        let field = input.field;
        let ball = view.ball;
        let dist = me.distance_to(ball.x, ball.y);
        let sign = me.team.attack_sign();
        let mates: Vec<_> = view.agents.iter().filter(|a| a.team == me.team && a.id != me.id).collect();
        // Where a rolling ball will come to rest; whoever is nearest there
        // goes for it, so a pass is left to its receiver.
        let drift = 1.0 / (1.0 - field.physics.ball_decay);
        let (rx, ry) = (ball.x + ball.vx * drift, ball.y + ball.vy * drift);
        let rest = me.distance_to(rx, ry);
        let closer_mate = mates.iter().any(|a| {
            let d = a.distance_to(rx, ry);
            d < rest || (d == rest && a.id < me.id)
        });

        if closer_mate && dist > field.kickable_distance {
            let lane = if (me.id.letter() as u32).is_multiple_of(2) { 12.0 } else { -12.0 };
            let tx = (ball.x + sign * 10.0).clamp(-field.half_length() + 2.0, field.half_length() - 2.0);
            let ty = lane;
            if me.distance_to(tx, ty) < 2.0 {
                return Ok(Vec::new());
            }
            return Ok(vec![face_or_dash(me.relative_angle_to(tx, ty), 20.0, 60.0)]);
        }
        if dist > field.kickable_distance {
            let (cx, cy) = if rest < dist { (rx, ry) } else { (ball.x, ball.y) };
            let d = me.distance_to(cx, cy);
            if d <= 0.5 {
                return Ok(Vec::new());
            }
            let power = if d > 3.0 { 100.0 } else { 50.0 };
            return Ok(vec![face_or_dash(me.relative_angle_to(cx, cy), 15.0, power)]);
        }

        let (gx, gy) = field.goal_for(me.team);
        let aim = |x: f64, y: f64| super::normalize_angle(super::bearing(x - ball.x, y - ball.y) - me.heading);
        let to_goal = ((gx - ball.x).powi(2) + (gy - ball.y).powi(2)).sqrt();
        if to_goal <= SHOOT_RANGE {
            return Ok(vec![CommandKind::Kick {
                power: 100.0,
                direction: aim(gx, gy),
            }]);
        }
        let pressed = view
            .agents
            .iter()
            .any(|a| a.team != me.team && a.distance_to(ball.x, ball.y) <= PRESSURE_RADIUS);
        let pressed = pressed && self.rng.random::<f64>() < CLEAR_RATE;
        if pressed || self.rng.random::<f64>() < PASS_RATE {
            let target = mates
                .iter()
                .filter(|a| (a.x - me.x) * sign > 0.0)
                .max_by(|a, b| (a.x * sign).total_cmp(&(b.x * sign)));
            if let Some(t) = target {
                let d = ((t.x - ball.x).powi(2) + (t.y - ball.y).powi(2)).sqrt();
                return Ok(vec![CommandKind::Kick {
                    power: (d * 1.1).clamp(5.0, 100.0),
                    direction: aim(t.x, t.y),
                }]);
            }
            if pressed {
                return Ok(vec![CommandKind::Kick {
                    power: 60.0,
                    direction: aim(gx, gy),
                }]);
            }
        }
        let goal_rel = me.relative_angle_to(gx, gy);
        let cmd = if goal_rel.abs() > 30.0 {
            CommandKind::Turn { moment: goal_rel }
        } else if dist < 0.6 {
            CommandKind::Kick {
                power: DRIBBLE_POWER,
                direction: aim(gx, gy),
            }
        } else {
            CommandKind::Dash {
                power: (dist * 50.0).clamp(10.0, 60.0),
            }
        };
        Ok(vec![cmd])
    }
}

/// Fires random barrages of commands, arguments often out of range.
#[derive(Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl AgentPolicy for RandomPolicy {
    fn act(&mut self, _: &PolicyInput<'_>) -> Result<Vec<CommandKind>, PolicyError> {
        let n = self.rng.random_range(0..=4);
        let r = &mut self.rng;
        Ok((0..n)
            .map(|_| match r.random_range(0..7) {
                0 => CommandKind::Turn {
                    moment: r.random_range(-400.0..400.0),
                },
                1 => CommandKind::Dash {
                    power: r.random_range(-100.0..200.0),
                },
                2 => CommandKind::Kick {
                    power: r.random_range(-50.0..200.0),
                    direction: r.random_range(-360.0..360.0),
                },
                3 => CommandKind::Catch,
                4 => CommandKind::Say { text: "go".into() },
                5 => CommandKind::SenseBody,
                _ => CommandKind::ChangeView {
                    quality: if r.random() { ViewQuality::High } else { ViewQuality::Low },
                    width: if r.random() { ViewWidth::Narrow } else { ViewWidth::Normal },
                },
            })
            .collect())
    }
}

fn agent_seed(seed: u64, agent_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(agent_index as u64 + 1)
}

/// Named built-in policies selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Null,
    Shooter,
    Chaser,
    Random,
}

impl PolicyKind {
    /// Build the policy for one agent. `seed` feeds the policies that draw
    /// random numbers.
    pub fn build(self, agent_index: usize, seed: u64) -> Box<dyn AgentPolicy> {
        match self {
            PolicyKind::Null => Box::new(NullPolicy),
            PolicyKind::Shooter => Box::new(ShooterPolicy::new(ShootingConfig::default())),
            PolicyKind::Chaser => Box::new(ChaserPolicy::new(agent_seed(seed, agent_index))),
            PolicyKind::Random => Box::new(RandomPolicy::new(agent_seed(seed, agent_index))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Null => "null",
            PolicyKind::Shooter => "shooter",
            PolicyKind::Chaser => "chaser",
            PolicyKind::Random => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = SimError;
    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "null" => Ok(PolicyKind::Null),
            "shooter" => Ok(PolicyKind::Shooter),
            "chaser" => Ok(PolicyKind::Chaser),
            "random" => Ok(PolicyKind::Random),
            other => Err(SimError::Config(format!("unknown policy {other:?}"))),
        }
    }
}

/// Policy choice per team.
pub fn team_policy(team: Team, home: PolicyKind, away: PolicyKind) -> PolicyKind {
    match team {
        Team::Home => home,
        Team::Away => away,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_match, run_world, AgentState, BallState, EventKind, World};

    fn near_goal_world(cycles: usize) -> World {
        let config = FieldConfig::default().with_cycles(cycles).with_seed(5);
        let agents = vec![
            AgentState::new(AgentId('a'), Team::Home, 30.0, 5.0, 0.0),
            AgentState::new(AgentId('d'), Team::Away, -30.0, 0.0, 180.0),
        ];
        World::with_setup(config, agents, BallState::at(35.0, 3.0)).unwrap()
    }

    #[test]
    fn shooter_scores_against_empty_defence() {
        let world = near_goal_world(500);
        let mut policies: Vec<Box<dyn AgentPolicy>> = vec![
            Box::new(ShooterPolicy::new(ShootingConfig::default())),
            Box::new(NullPolicy),
        ];
        let log = run_world(world, &mut policies, "shooter", "null");
        assert!(log.score.home >= 1, "{:?}", log.score);
        assert_eq!(log.score.away, 0);
    }

    #[test]
    fn chaser_scores_against_empty_defence() {
        let world = near_goal_world(500);
        let mut policies: Vec<Box<dyn AgentPolicy>> = vec![Box::new(ChaserPolicy::new(1)), Box::new(NullPolicy)];
        let log = run_world(world, &mut policies, "chaser", "null");
        assert!(log.score.home >= 1, "{:?}", log.score);
    }

    #[test]
    fn chasers_hold_the_ball_and_pass() {
        let config = FieldConfig::default().with_cycles(1000).with_seed(42);
        let log = run_match(PolicyKind::Chaser, PolicyKind::Null, &config).unwrap();
        let held = log.cycles.iter().filter(|c| c.possession.is_some()).count();
        assert!(held >= 100, "possession in only {held} cycles");
        let holders: std::collections::BTreeSet<_> = log.cycles.iter().filter_map(|c| c.possession).collect();
        assert!(holders.len() >= 2, "{holders:?}");
        assert!(log.events().any(|e| matches!(e.kind, EventKind::PassCompleted { .. })));
    }

    #[test]
    fn support_players_wait_without_ball() {
        let config = FieldConfig::default();
        let me = AgentState::new(AgentId('b'), Team::Home, 10.0, 12.0, 0.0);
        let mate = AgentState::new(AgentId('a'), Team::Home, 0.5, 0.0, 0.0);
        let view = Perception {
            cycle: 0,
            agents: vec![mate, me],
            ball: BallState::at(0.0, 0.0),
        };
        let input = PolicyInput {
            me: AgentId('b'),
            cycle: 0,
            fresh: &[],
            latest: Some(&view),
            field: &config,
        };
        let cmds = ChaserPolicy::new(0).act(&input).unwrap();
        assert!(cmds.is_empty(), "{cmds:?}");
    }

    #[test]
    fn policy_names_roundtrip() {
        for k in [PolicyKind::Null, PolicyKind::Shooter, PolicyKind::Chaser, PolicyKind::Random] {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("goalie".parse::<PolicyKind>().is_err());
    }
}
