use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::command::Command;
use super::policy::{team_policy, AgentPolicy, PolicyInput, PolicyKind};
use super::world::{EventKind, MatchEvent, Perception, World};
use super::{AgentId, AgentState, BallState, FieldConfig, Score, SimError, Team};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    HomeWin,
    AwayWin,
    Draw,
}

impl Outcome {
    pub fn from_score(score: Score) -> Self {
        match score.home.cmp(&score.away) {
            std::cmp::Ordering::Greater => Outcome::HomeWin,
            std::cmp::Ordering::Less => Outcome::AwayWin,
            std::cmp::Ordering::Equal => Outcome::Draw,
        }
    }
}

/// State at the end of one cycle plus what happened during it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub agents: Vec<AgentState>,
    pub ball: BallState,
    pub possession: Option<AgentId>,
    pub events: Vec<MatchEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchLog {
    pub config: FieldConfig,
    pub home_policy: String,
    pub away_policy: String,
    pub cycles: Vec<CycleRecord>,
    pub outcome: Outcome,
    pub score: Score,
    /// False when a policy failed and the match stopped early.
    pub valid: bool,
    pub abort_reason: Option<String>,
}

impl MatchLog {
    pub fn events(&self) -> impl Iterator<Item = &MatchEvent> {
        self.cycles.iter().flat_map(|c| c.events.iter())
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.cycles
            .first()
            .map(|c| c.agents.iter().map(|a| a.id).collect())
            .unwrap_or_default()
    }

    pub fn team_of(&self, id: AgentId) -> Option<Team> {
        self.cycles
            .first()
            .and_then(|c| c.agents.iter().find(|a| a.id == id))
            .map(|a| a.team)
    }

    pub fn goals(&self) -> impl Iterator<Item = (usize, Team, Option<AgentId>)> + '_ {
        self.events().filter_map(|e| match e.kind {
            EventKind::Goal { team, scorer } => Some((e.cycle, team, scorer)),
            _ => None,
        })
    }

    /// JSON Lines: header, one line per cycle, trailer.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SimError> {
        let header = HeaderLine {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            seed: self.config.rng_seed,
            home_policy: self.home_policy.clone(),
            away_policy: self.away_policy.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for c in &self.cycles {
            serde_json::to_writer(&mut out, c)?;
            out.write_all(b"\n")?;
        }
        let trailer = TrailerLine {
            outcome: self.outcome,
            score: self.score,
            valid: self.valid,
            abort_reason: self.abort_reason.clone(),
        };
        serde_json::to_writer(&mut out, &trailer)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<MatchLog, SimError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| SimError::Format("empty log".into()))??;
        let header: HeaderLine = serde_json::from_str(&first)?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(SimError::Schema {
                found: header.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        let mut raw: Vec<String> = Vec::new();
        for l in lines {
            let l = l?;
            if !l.trim().is_empty() {
                raw.push(l);
            }
        }
        let last = raw.pop().ok_or_else(|| SimError::Format("missing trailer".into()))?;
        let trailer: TrailerLine = serde_json::from_str(&last)?;
        let cycles = raw
            .iter()
            .map(|l| serde_json::from_str::<CycleRecord>(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MatchLog {
            config: header.config,
            home_policy: header.home_policy,
            away_policy: header.away_policy,
            cycles,
            outcome: trailer.outcome,
            score: trailer.score,
            valid: trailer.valid,
            abort_reason: trailer.abort_reason,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    schema_version: u32,
    config: FieldConfig,
    seed: u64,
    home_policy: String,
    away_policy: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrailerLine {
    outcome: Outcome,
    score: Score,
    valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
}

/// Play a match with built-in policies on the default kick-off layout.
pub fn run_match(home: PolicyKind, away: PolicyKind, config: &FieldConfig) -> Result<MatchLog, SimError> {
    let world = World::new(config.clone())?;
    let seed = config.rng_seed;
    let mut policies: Vec<Box<dyn AgentPolicy>> = world
        .agents()
        .iter()
        .enumerate()
        .map(|(i, a)| team_policy(a.team, home, away).build(i, seed))
        .collect();
    Ok(run_world(world, &mut policies, home.name(), away.name()))
}

/// Play out an already-built world. `policies[i]` drives `world.agents()[i]`.
pub fn run_world(
    mut world: World,
    policies: &mut [Box<dyn AgentPolicy>],
    home_name: &str,
    away_name: &str,
) -> MatchLog {
    let config = world.config().clone();
    let ids: Vec<AgentId> = world.agents().iter().map(|a| a.id).collect();
    let mut memory: Vec<Option<Perception>> = vec![None; ids.len()];
    let mut cycles = Vec::with_capacity(config.cycle_count);
    let mut abort_reason = None;

    'outer: for _ in 0..config.cycle_count {
        let cycle = world.cycle();
        let delivered = world.deliver_perceptions();
        for (i, fresh) in delivered.into_iter().enumerate() {
            if let Some(last) = fresh.last() {
                memory[i] = Some(last.clone());
            }
            let input = PolicyInput {
                me: ids[i],
                cycle,
                fresh: &fresh,
                latest: memory[i].as_ref(),
                field: &config,
            };
            let Some(policy) = policies.get_mut(i) else { continue };
            match policy.act(&input) {
                Ok(cmds) => {
                    for kind in cmds {
                        world
                            .submit_command(ids[i], Command::new(kind, cycle))
                            .expect("agent exists and cycle is current");
                    }
                }
                Err(e) => {
                    abort_reason = Some(format!("policy for agent {} failed at cycle {cycle}: {e}", ids[i]));
                    break 'outer;
                }
            }
        }
        let events = world.step_cycle();
        cycles.push(CycleRecord {
            cycle,
            agents: world.agents().to_vec(),
            ball: *world.ball(),
            possession: world.possession(),
            events,
        });
    }

    let score = world.score();
    MatchLog {
        config,
        home_policy: home_name.to_string(),
        away_policy: away_name.to_string(),
        cycles,
        outcome: Outcome::from_score(score),
        score,
        valid: abort_reason.is_none(),
        abort_reason,
    }
}
