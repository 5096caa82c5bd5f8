use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::command::{
    Ack, Command, CommandKind, CHANGE_VIEW_PER_CYCLE, SAY_HEARING_INTERVAL, SENSE_BODY_PER_CYCLE,
};
use super::{normalize_angle, AgentId, AgentState, BallState, FieldConfig, Score, SimError, Team};

const COMMAND_STREAM: u64 = 0;
const PERCEPTION_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Goal {
        team: Team,
        scorer: Option<AgentId>,
    },
    PossessionChange {
        agent: AgentId,
    },
    PassCompleted {
        from: AgentId,
        to: AgentId,
    },
    Kick {
        agent: AgentId,
        power: f64,
        direction: f64,
        effective: bool,
        /// The resulting ball path crosses the opponent goal mouth.
        on_target: bool,
    },
    Turn {
        agent: AgentId,
        moment: f64,
    },
    Move {
        agent: AgentId,
        power: f64,
    },
    Catch {
        agent: AgentId,
    },
    Idle,
}

impl EventKind {
    /// The agent whose movement command produced this event, if any.
    pub fn actor(&self) -> Option<AgentId> {
        match self {
            EventKind::Kick { agent, .. }
            | EventKind::Turn { agent, .. }
            | EventKind::Move { agent, .. }
            | EventKind::Catch { agent } => Some(*agent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchEvent {
    pub cycle: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// A snapshot of the whole field. Positions are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perception {
    pub cycle: usize,
    pub agents: Vec<AgentState>,
    pub ball: BallState,
}

impl Perception {
    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }
}

#[derive(Debug, Clone, Default)]
struct InstantLimits {
    sense_body: u32,
    change_view: u32,
    last_heard_say: Option<usize>,
}

/// The simulated field, advanced one cycle at a time by a single owner.
#[derive(Debug, Clone)]
pub struct World {
    config: FieldConfig,
    cycle: usize,
    agents: Vec<AgentState>,
    ball: BallState,
    possession: Option<AgentId>,
    last_holder: Option<AgentId>,
    last_kicker: Option<AgentId>,
    score: Score,
    queued: Vec<Vec<CommandKind>>,
    limits: Vec<InstantLimits>,
    rng: ChaCha8Rng,
    perception_rng: ChaCha8Rng,
}

impl World {
    /// Kick-off layout: home on the left facing +x, away on the right.
    pub fn new(config: FieldConfig) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.players_per_team;
        let mut agents = Vec::with_capacity(2 * n);
        for team in [Team::Home, Team::Away] {
            for k in 0..n {
                let idx = agents.len();
                let depth = config.half_length() * (0.2 + 0.6 * (k as f64 + 0.5) / n as f64);
                let lane = config.width * ((k as f64 + 0.5) / n as f64 - 0.5) * 0.8;
                let x = -team.attack_sign() * depth;
                let heading = if team == Team::Home { 0.0 } else { -180.0 };
                agents.push(AgentState::new(AgentId::from_index(idx), team, x, lane, heading));
            }
        }
        World::with_setup(config, agents, BallState::default())
    }

    /// A world with explicit agent and ball placement.
    pub fn with_setup(config: FieldConfig, agents: Vec<AgentState>, ball: BallState) -> Result<Self, SimError> {
        config.validate()?;
        for (i, a) in agents.iter().enumerate() {
            if agents[..i].iter().any(|b| b.id == a.id) {
                return Err(SimError::Config(format!("duplicate agent id {}", a.id)));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        rng.set_stream(COMMAND_STREAM);
        let mut perception_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        perception_rng.set_stream(PERCEPTION_STREAM);
        let n = agents.len();
        let mut world = World {
            config,
            cycle: 0,
            agents,
            ball,
            possession: None,
            last_holder: None,
            last_kicker: None,
            score: Score::default(),
            queued: vec![Vec::new(); n],
            limits: vec![InstantLimits::default(); n],
            rng,
            perception_rng,
        };
        for i in 0..n {
            world.clamp_agent(i);
        }
        world.possession = world.nearest_possessor();
        world.last_holder = world.possession;
        Ok(world)
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn ball(&self) -> &BallState {
        &self.ball
    }

    pub fn possession(&self) -> Option<AgentId> {
        self.possession
    }

    pub fn score(&self) -> Score {
        self.score
    }

    fn index_of(&self, id: AgentId) -> Result<usize, SimError> {
        self.agents
            .iter()
            .position(|a| a.id == id)
            .ok_or(SimError::UnknownAgent(id))
    }

    pub fn snapshot(&self) -> Perception {
        Perception {
            cycle: self.cycle,
            agents: self.agents.clone(),
            ball: self.ball,
        }
    }

    /// Accept a command for the current cycle. Arguments are clamped first.
    pub fn submit_command(&mut self, agent: AgentId, command: Command) -> Result<Ack, SimError> {
        let idx = self.index_of(agent)?;
        if command.issued_cycle != self.cycle {
            return Err(SimError::StaleCommand {
                issued: command.issued_cycle,
                current: self.cycle,
            });
        }
        let kind = command.kind.clamped();
        if kind.is_movement() {
            self.queued[idx].push(kind);
            return Ok(Ack::Queued);
        }
        let limits = &mut self.limits[idx];
        Ok(match kind {
            CommandKind::SenseBody => {
                if limits.sense_body >= SENSE_BODY_PER_CYCLE {
                    Ack::RateLimited
                } else {
                    limits.sense_body += 1;
                    Ack::Applied
                }
            }
            CommandKind::ChangeView { .. } => {
                if limits.change_view >= CHANGE_VIEW_PER_CYCLE {
                    Ack::RateLimited
                } else {
                    limits.change_view += 1;
                    Ack::Applied
                }
            }
            CommandKind::Say { .. } => {
                let heard = limits
                    .last_heard_say
                    .is_none_or(|c| self.cycle >= c + SAY_HEARING_INTERVAL);
                if heard {
                    limits.last_heard_say = Some(self.cycle);
                }
                Ack::Said { heard }
            }
            _ => unreachable!("movement commands handled above"),
        })
    }

    /// Perception snapshots each agent receives this cycle. With jitter on,
    /// each agent draws 0, 1 or 2 with probabilities 0.1 / 0.8 / 0.1.
    pub fn deliver_perceptions(&mut self) -> Vec<Vec<Perception>> {
        let snap = self.snapshot();
        (0..self.agents.len())
            .map(|_| {
                let count = if self.config.physics.perception_jitter {
                    let u: f64 = self.perception_rng.random();
                    if u < 0.1 {
                        0
                    } else if u < 0.9 {
                        1
                    } else {
                        2
                    }
                } else {
                    1
                };
                vec![snap.clone(); count]
            })
            .collect()
    }

    fn clamp_agent(&mut self, i: usize) {
        let (hl, hw) = (self.config.half_length(), self.config.half_width());
        let a = &mut self.agents[i];
        a.x = a.x.clamp(-hl, hl);
        a.y = a.y.clamp(-hw, hw);
        a.heading = normalize_angle(a.heading);
    }

    fn nearest_possessor(&self) -> Option<AgentId> {
        let mut best: Option<(f64, AgentId)> = None;
        for a in &self.agents {
            let d = a.distance_to(self.ball.x, self.ball.y);
            if d <= self.config.kickable_distance && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, a.id));
            }
        }
        best.map(|(_, id)| id)
    }

    fn team_of(&self, id: AgentId) -> Option<Team> {
        self.agent(id).map(|a| a.team)
    }

    /// Would a ball at `(x, y)` with velocity `(vx, vy)` reach the goal that
    /// `team` attacks, given the decay?
    fn heads_into_goal(&self, team: Team, x: f64, y: f64, vx: f64, vy: f64) -> bool {
        let sign = team.attack_sign();
        let goal_x = sign * self.config.half_length();
        if vx * sign <= 0.0 {
            return false;
        }
        let t = (goal_x - x) / vx;
        let cross_y = y + vy * t;
        let path = (goal_x - x).hypot(cross_y - y);
        let reach = (vx.hypot(vy)) / (1.0 - self.config.physics.ball_decay);
        cross_y.abs() <= self.config.goal_width / 2.0 && path <= reach
    }

    /// Execute one selected movement command per agent, move everything,
    /// detect goals and possession, and advance the cycle counter.
    pub fn step_cycle(&mut self) -> Vec<MatchEvent> {
        let cycle = self.cycle;
        let mut events = Vec::new();
        let physics = self.config.physics.clone();

        let chosen: Vec<Option<CommandKind>> = (0..self.agents.len())
            .map(|i| {
                let mut q = std::mem::take(&mut self.queued[i]);
                match q.len() {
                    0 => None,
                    1 => q.pop(),
                    n => {
                        let pick = self.rng.random_range(0..n);
                        Some(q.swap_remove(pick))
                    }
                }
            })
            .collect();

        for (i, cmd) in chosen.into_iter().enumerate() {
            let Some(cmd) = cmd else { continue };
            let id = self.agents[i].id;
            let kind = match cmd {
                CommandKind::Turn { moment } => {
                    let a = &mut self.agents[i];
                    a.heading = normalize_angle(a.heading + moment);
                    EventKind::Turn { agent: id, moment }
                }
                CommandKind::Dash { power } => {
                    self.agents[i].speed = power * physics.dash_gain;
                    EventKind::Move { agent: id, power }
                }
                CommandKind::Kick { power, direction } => {
                    let a = &self.agents[i];
                    let effective = a.distance_to(self.ball.x, self.ball.y) <= self.config.kickable_distance;
                    let mut on_target = false;
                    if effective {
                        let angle = (a.heading + direction).to_radians();
                        let impulse = power * physics.kick_gain;
                        self.ball.vx += impulse * angle.cos();
                        self.ball.vy += impulse * angle.sin();
                        on_target =
                            self.heads_into_goal(a.team, self.ball.x, self.ball.y, self.ball.vx, self.ball.vy);
                        self.last_kicker = Some(id);
                    }
                    EventKind::Kick {
                        agent: id,
                        power,
                        direction,
                        effective,
                        on_target,
                    }
                }
                CommandKind::Catch => EventKind::Catch { agent: id },
                _ => unreachable!("only movement commands are queued"),
            };
            events.push(MatchEvent { cycle, kind });
        }

        for i in 0..self.agents.len() {
            let a = &mut self.agents[i];
            let h = a.heading.to_radians();
            a.x += a.speed * h.cos();
            a.y += a.speed * h.sin();
            a.speed *= physics.player_decay;
            self.clamp_agent(i);
        }

        if let Some(team) = self.advance_ball() {
            match team {
                Team::Home => self.score.home += 1,
                Team::Away => self.score.away += 1,
            }
            let scorer = self.last_kicker.filter(|k| self.team_of(*k) == Some(team));
            events.push(MatchEvent {
                cycle,
                kind: EventKind::Goal { team, scorer },
            });
            self.ball = BallState::default();
            self.last_kicker = None;
        }

        self.possession = self.nearest_possessor();
        if let Some(p) = self.possession {
            if self.last_holder != Some(p) {
                events.push(MatchEvent {
                    cycle,
                    kind: EventKind::PossessionChange { agent: p },
                });
                if let Some(prev) = self.last_holder {
                    if self.last_kicker == Some(prev) && self.team_of(prev) == self.team_of(p) {
                        events.push(MatchEvent {
                            cycle,
                            kind: EventKind::PassCompleted { from: prev, to: p },
                        });
                    }
                }
                self.last_holder = Some(p);
            }
        }

        if events.is_empty() {
            events.push(MatchEvent {
                cycle,
                kind: EventKind::Idle,
            });
        }
        for l in &mut self.limits {
            l.sense_body = 0;
            l.change_view = 0;
        }
        self.cycle += 1;
        events
    }

    /// Move the ball one cycle; returns the scoring team on a goal.
    fn advance_ball(&mut self) -> Option<Team> {
        let (hl, hw) = (self.config.half_length(), self.config.half_width());
        let half_goal = self.config.goal_width / 2.0;
        let b = self.ball;
        let (nx, ny) = (b.x + b.vx, b.y + b.vy);
        for (team, line) in [(Team::Home, hl), (Team::Away, -hl)] {
            let crossed = if line > 0.0 { nx > line } else { nx < line };
            if crossed && b.vx != 0.0 {
                let t = (line - b.x) / b.vx;
                let cross_y = b.y + b.vy * t;
                if (0.0..=1.0).contains(&t) && cross_y.abs() <= half_goal {
                    return Some(team);
                }
            }
        }
        let decay = self.config.physics.ball_decay;
        let mut next = BallState {
            x: nx,
            y: ny,
            vx: b.vx * decay,
            vy: b.vy * decay,
        };
        if nx.abs() > hl || ny.abs() > hw {
            next.x = nx.clamp(-hl, hl);
            next.y = ny.clamp(-hw, hw);
            next.vx = 0.0;
            next.vy = 0.0;
        }
        self.ball = next;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FieldConfig {
        FieldConfig {
            players_per_team: 1,
            ..FieldConfig::default()
        }
    }

    fn solo(x: f64, y: f64, heading: f64, ball: BallState) -> World {
        let a = AgentState::new(AgentId('a'), Team::Home, x, y, heading);
        World::with_setup(cfg(), vec![a], ball).unwrap()
    }

    #[test]
    fn turn_executes_at_end_of_cycle() {
        let mut w = solo(0.0, 10.0, 0.0, BallState::default());
        assert_eq!(w.submit_command(AgentId('a'), Command::turn(90.0, 0)).unwrap(), Ack::Queued);
        assert_eq!(w.agent(AgentId('a')).unwrap().heading, 0.0);
        let ev = w.step_cycle();
        assert_eq!(w.agent(AgentId('a')).unwrap().heading, 90.0);
        assert!(matches!(ev[0].kind, EventKind::Turn { moment, .. } if moment == 90.0));
    }

    #[test]
    fn dash_clamped_before_queueing() {
        let mut w = solo(0.0, 10.0, 0.0, BallState::default());
        w.submit_command(AgentId('a'), Command::dash(150.0, 0)).unwrap();
        let ev = w.step_cycle();
        assert!(matches!(ev[0].kind, EventKind::Move { power, .. } if power == 100.0));
        assert!((w.agent(AgentId('a')).unwrap().x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn only_one_movement_command_runs() {
        let mut w = solo(0.0, 10.0, 0.0, BallState::default());
        w.submit_command(AgentId('a'), Command::turn(30.0, 0)).unwrap();
        w.submit_command(AgentId('a'), Command::dash(50.0, 0)).unwrap();
        let ev = w.step_cycle();
        let moves = ev.iter().filter(|e| e.kind.actor().is_some()).count();
        assert_eq!(moves, 1);
    }

    #[test]
    fn duplicate_choice_depends_on_seed_only() {
        let pick = |seed: u64| {
            let a = AgentState::new(AgentId('a'), Team::Home, 0.0, 10.0, 0.0);
            let mut w = World::with_setup(cfg().with_seed(seed), vec![a], BallState::default()).unwrap();
            w.submit_command(AgentId('a'), Command::turn(30.0, 0)).unwrap();
            w.submit_command(AgentId('a'), Command::dash(50.0, 0)).unwrap();
            w.step_cycle()[0].kind.clone()
        };
        assert_eq!(pick(3), pick(3));
        let variety: std::collections::HashSet<String> =
            (0..20).map(|s| format!("{:?}", pick(s))).collect();
        assert_eq!(variety.len(), 2);
    }

    #[test]
    fn errors() {
        let mut w = solo(0.0, 0.0, 0.0, BallState::default());
        assert_eq!(
            w.submit_command(AgentId('z'), Command::turn(1.0, 0)),
            Err(SimError::UnknownAgent(AgentId('z')))
        );
        w.step_cycle();
        assert!(matches!(
            w.submit_command(AgentId('a'), Command::turn(1.0, 0)),
            Err(SimError::StaleCommand { issued: 0, current: 1 })
        ));
    }

    #[test]
    fn far_kick_is_ineffective() {
        let mut w = solo(0.0, 0.0, 0.0, BallState::at(5.0, 0.0));
        w.submit_command(AgentId('a'), Command::kick(100.0, 0.0, 0)).unwrap();
        let ev = w.step_cycle();
        assert!(matches!(ev[0].kind, EventKind::Kick { effective: false, .. }));
        assert_eq!(w.ball().speed(), 0.0);
    }

    #[test]
    fn goal_on_line_crossing() {
        // ball 0.5 m short of the right goal line moving 2 m/cycle: first
        // cycle crosses inside the mouth
        let hl = cfg().half_length();
        let ball = BallState {
            x: hl - 0.5,
            y: 1.0,
            vx: 2.0,
            vy: 0.0,
        };
        let mut w = solo(-10.0, 0.0, 0.0, ball);
        let ev = w.step_cycle();
        assert!(ev
            .iter()
            .any(|e| matches!(e.kind, EventKind::Goal { team: Team::Home, .. })));
        assert_eq!(w.score().home, 1);
        assert_eq!(*w.ball(), BallState::default());
        let ev = w.step_cycle();
        assert!(matches!(ev[0].kind, EventKind::Idle));
        assert_eq!(*w.ball(), BallState::default());
    }

    #[test]
    fn wide_shot_goes_out_not_in() {
        let hl = cfg().half_length();
        let ball = BallState {
            x: hl - 0.5,
            y: 20.0,
            vx: 2.0,
            vy: 0.0,
        };
        let mut w = solo(-10.0, 0.0, 0.0, ball);
        w.step_cycle();
        assert_eq!(w.score(), Score::default());
        assert_eq!(w.ball().x, hl);
        assert_eq!(w.ball().speed(), 0.0);
    }

    #[test]
    fn ball_decays() {
        let ball = BallState {
            x: 0.0,
            y: 0.0,
            vx: 1.0,
            vy: 0.5,
        };
        let mut w = solo(-30.0, 0.0, 0.0, ball);
        let mut last = w.ball().speed();
        for _ in 0..50 {
            w.step_cycle();
            assert!(w.ball().speed() <= last);
            last = w.ball().speed();
        }
    }

    #[test]
    fn possession_and_pass_events() {
        let a = AgentState::new(AgentId('a'), Team::Home, 0.0, 0.0, 0.0);
        let b = AgentState::new(AgentId('b'), Team::Home, 6.0, 0.0, 180.0);
        let mut w = World::with_setup(cfg(), vec![a, b], BallState::at(0.5, 0.0)).unwrap();
        assert_eq!(w.possession(), Some(AgentId('a')));
        w.submit_command(AgentId('a'), Command::kick(20.0, 0.0, 0)).unwrap();
        let mut all = w.step_cycle();
        for _ in 0..20 {
            all.extend(w.step_cycle());
        }
        assert!(all
            .iter()
            .any(|e| e.kind == EventKind::PassCompleted { from: AgentId('a'), to: AgentId('b') }));
    }

    #[test]
    fn perceptions_without_jitter() {
        let mut c = cfg();
        c.physics.perception_jitter = false;
        let mut w = World::new(c).unwrap();
        for _ in 0..10 {
            assert!(w.deliver_perceptions().iter().all(|p| p.len() == 1));
            w.step_cycle();
        }
    }

    #[test]
    fn perceptions_jitter_mean() {
        let mut w = World::new(cfg().with_seed(17)).unwrap();
        let mut totals = vec![0usize; w.agents().len()];
        let mut saw_zero = false;
        for _ in 0..1000 {
            for (t, p) in totals.iter_mut().zip(w.deliver_perceptions()) {
                saw_zero |= p.is_empty();
                *t += p.len();
            }
            w.step_cycle();
        }
        assert!(saw_zero);
        assert!(totals.iter().all(|&t| (900..=1100).contains(&t)), "{totals:?}");
    }

    #[test]
    fn instant_command_limits() {
        let mut w = solo(0.0, 0.0, 0.0, BallState::default());
        let id = AgentId('a');
        for _ in 0..3 {
            assert_eq!(w.submit_command(id, Command::new(CommandKind::SenseBody, 0)).unwrap(), Ack::Applied);
        }
        assert_eq!(
            w.submit_command(id, Command::new(CommandKind::SenseBody, 0)).unwrap(),
            Ack::RateLimited
        );
        let say = |c| Command::new(CommandKind::Say { text: "hi".into() }, c);
        assert_eq!(w.submit_command(id, say(0)).unwrap(), Ack::Said { heard: true });
        assert_eq!(w.submit_command(id, say(0)).unwrap(), Ack::Said { heard: false });
        w.step_cycle();
        assert_eq!(w.submit_command(id, say(1)).unwrap(), Ack::Said { heard: false });
        assert_eq!(
            w.submit_command(id, Command::new(CommandKind::SenseBody, 1)).unwrap(),
            Ack::Applied
        );
        w.step_cycle();
        assert_eq!(w.submit_command(id, say(2)).unwrap(), Ack::Said { heard: true });
    }
}
