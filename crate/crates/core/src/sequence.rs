//! DNA-style encodings of matches.
//!
//! A game sequence has one letter per aggregation window: the id of the agent
//! that held the ball for a strict majority of the window's cycles, or `'-'`.
//! A player sequence has one action letter per window, `'-'` whenever the
//! player was not the window's possessor.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{AgentId, EventKind, MatchLog};
use crate::SCHEMA_VERSION;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("symbol {0:?} is outside the action alphabet")]
    UnknownSymbol(char),
    #[error("match log has no cycles")]
    EmptyLog,
    #[error("window must span at least one cycle")]
    ZeroWindow,
    #[error("player {0} does not appear in the log")]
    UnknownPlayer(AgentId),
    #[error("malformed sequence file: {0}")]
    Format(String),
    #[error("schema version {found} not supported (expected {expected})")]
    Schema { found: u32, expected: u32 },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CodecError {
    fn from(e: std::io::Error) -> Self {
        CodecError::Io(e.to_string())
    }
}

pub const IDLE: char = '-';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionSymbol {
    A,
    C,
    G,
    T,
    #[serde(rename = "-")]
    Idle,
}

impl ActionSymbol {
    pub const ACTIONS: [ActionSymbol; 4] = [ActionSymbol::A, ActionSymbol::C, ActionSymbol::G, ActionSymbol::T];

    pub fn from_char(c: char) -> Result<Self, CodecError> {
        match c {
            'A' => Ok(ActionSymbol::A),
            'C' => Ok(ActionSymbol::C),
            'G' => Ok(ActionSymbol::G),
            'T' => Ok(ActionSymbol::T),
            IDLE => Ok(ActionSymbol::Idle),
            other => Err(CodecError::UnknownSymbol(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            ActionSymbol::A => 'A',
            ActionSymbol::C => 'C',
            ActionSymbol::G => 'G',
            ActionSymbol::T => 'T',
            ActionSymbol::Idle => IDLE,
        }
    }

    pub fn kind(self) -> ActionKind {
        match self {
            ActionSymbol::A => ActionKind::TurnTowardBall,
            ActionSymbol::C => ActionKind::MoveTowardBall,
            ActionSymbol::G => ActionKind::KickTowardGoal,
            ActionSymbol::T => ActionKind::PassToTeammate,
            ActionSymbol::Idle => ActionKind::Idle,
        }
    }
}

impl fmt::Display for ActionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    TurnTowardBall,
    MoveTowardBall,
    KickTowardGoal,
    PassToTeammate,
    Idle,
}

impl ActionKind {
    pub fn symbol(self) -> ActionSymbol {
        match self {
            ActionKind::TurnTowardBall => ActionSymbol::A,
            ActionKind::MoveTowardBall => ActionSymbol::C,
            ActionKind::KickTowardGoal => ActionSymbol::G,
            ActionKind::PassToTeammate => ActionSymbol::T,
            ActionKind::Idle => ActionSymbol::Idle,
        }
    }

    /// Tie-break rank when two actions are equally frequent in a window.
    fn priority(self) -> u8 {
        match self {
            ActionKind::KickTowardGoal => 4,
            ActionKind::PassToTeammate => 3,
            ActionKind::MoveTowardBall => 2,
            ActionKind::TurnTowardBall => 1,
            ActionKind::Idle => 0,
        }
    }
}

pub fn decode_symbol(symbol: char) -> Result<ActionKind, CodecError> {
    ActionSymbol::from_char(symbol).map(ActionSymbol::kind)
}

/// True when every character is in `{A, C, G, T, -}`.
pub fn is_action_text(s: &str) -> bool {
    s.chars().all(|c| ActionSymbol::from_char(c).is_ok())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSequence {
    pub letters: String,
    pub window_cycles: usize,
}

impl GameSequence {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerSequence {
    pub player_id: AgentId,
    pub letters: String,
}

fn windows(len: usize, w: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..len.div_ceil(w)).map(move |t| t * w..((t + 1) * w).min(len))
}

pub fn encode_game(log: &MatchLog, window_cycles: usize) -> Result<GameSequence, CodecError> {
    if window_cycles == 0 {
        return Err(CodecError::ZeroWindow);
    }
    if log.cycles.is_empty() {
        return Err(CodecError::EmptyLog);
    }
    let letters = windows(log.cycles.len(), window_cycles)
        .map(|range| {
            let span = range.len();
            let mut counts: Vec<(AgentId, usize)> = Vec::new();
            for rec in &log.cycles[range] {
                if let Some(p) = rec.possession {
                    match counts.iter_mut().find(|(id, _)| *id == p) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((p, 1)),
                    }
                }
            }
            counts
                .into_iter()
                .find(|&(_, c)| 2 * c > span)
                .map_or(IDLE, |(id, _)| id.letter())
        })
        .collect();
    Ok(GameSequence {
        letters,
        window_cycles,
    })
}

/// Per-cycle executed action of `player`, with kicks relabelled as passes
/// when the next different possessor is a teammate.
fn player_actions(log: &MatchLog, player: AgentId) -> Vec<Option<ActionKind>> {
    let team = log.team_of(player);
    log.cycles
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            rec.events.iter().find_map(|e| match e.kind {
                EventKind::Turn { agent, .. } if agent == player => Some(ActionKind::TurnTowardBall),
                EventKind::Move { agent, .. } if agent == player => Some(ActionKind::MoveTowardBall),
                EventKind::Kick { agent, effective, .. } if agent == player => {
                    let next_holder = log.cycles[i..]
                        .iter()
                        .skip_while(|r| r.possession == Some(player))
                        .find_map(|r| r.possession);
                    let is_pass = effective
                        && next_holder.is_some_and(|q| q != player && log.team_of(q) == team);
                    Some(if is_pass {
                        ActionKind::PassToTeammate
                    } else {
                        ActionKind::KickTowardGoal
                    })
                }
                _ => None,
            })
        })
        .collect()
}

pub fn encode_player(log: &MatchLog, game: &GameSequence, player: AgentId) -> Result<PlayerSequence, CodecError> {
    if log.cycles.is_empty() {
        return Err(CodecError::EmptyLog);
    }
    if log.team_of(player).is_none() {
        return Err(CodecError::UnknownPlayer(player));
    }
    if game.window_cycles == 0 {
        return Err(CodecError::ZeroWindow);
    }
    let actions = player_actions(log, player);
    let game_letters: Vec<char> = game.letters.chars().collect();
    let letters = windows(log.cycles.len(), game.window_cycles)
        .enumerate()
        .map(|(t, range)| {
            if game_letters.get(t) != Some(&player.letter()) {
                return IDLE;
            }
            let mut counts: Vec<(ActionKind, usize)> = Vec::new();
            for a in actions[range].iter().flatten() {
                match counts.iter_mut().find(|(k, _)| k == a) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((*a, 1)),
                }
            }
            counts
                .into_iter()
                .max_by_key(|&(k, c)| (c, k.priority()))
                .map_or(IDLE, |(k, _)| k.symbol().as_char())
        })
        .collect();
    Ok(PlayerSequence {
        player_id: player,
        letters,
    })
}

/// Game sequence plus one player sequence per agent.
pub fn encode_match(log: &MatchLog, window_cycles: usize) -> Result<(GameSequence, Vec<PlayerSequence>), CodecError> {
    let game = encode_game(log, window_cycles)?;
    let players = log
        .agent_ids()
        .into_iter()
        .map(|id| encode_player(log, &game, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((game, players))
}

/// Window index containing `cycle`.
pub fn window_of(cycle: usize, window_cycles: usize) -> usize {
    cycle / window_cycles.max(1)
}

/// Identifies a record in a sequence file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceId {
    Game { game: String },
    Player { player: AgentId, game: String },
}

impl fmt::Display for SequenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceId::Game { game } => write!(f, "game:{game}"),
            SequenceId::Player { player, game } => write!(f, "player:{player}@game:{game}"),
        }
    }
}

impl std::str::FromStr for SequenceId {
    type Err = CodecError;
    fn from_str(s: &str) -> Result<Self, CodecError> {
        if let Some(game) = s.strip_prefix("game:") {
            return Ok(SequenceId::Game { game: game.to_string() });
        }
        if let Some(rest) = s.strip_prefix("player:") {
            if let Some((p, g)) = rest.split_once("@game:") {
                let mut chars = p.chars();
                if let (Some(c), None) = (chars.next(), chars.next()) {
                    return Ok(SequenceId::Player {
                        player: AgentId(c),
                        game: g.to_string(),
                    });
                }
            }
        }
        Err(CodecError::Format(format!("bad header {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FastaRecord {
    pub id: SequenceId,
    pub letters: String,
}

/// Header comment carrying the schema version, then `>id` / letters pairs.
pub fn write_fasta<W: Write>(mut out: W, records: &[FastaRecord]) -> Result<(), CodecError> {
    writeln!(out, ";schema_version={SCHEMA_VERSION}")?;
    for r in records {
        writeln!(out, ">{}", r.id)?;
        writeln!(out, "{}", r.letters)?;
    }
    Ok(())
}

pub fn read_fasta<R: BufRead>(input: R) -> Result<Vec<FastaRecord>, CodecError> {
    let mut records: Vec<FastaRecord> = Vec::new();
    let mut version = None;
    for line in input.lines() {
        let line = line?;
        let line = line.trim_end();
        if let Some(v) = line.strip_prefix(";schema_version=") {
            let found: u32 = v.parse().map_err(|_| CodecError::Format(line.to_string()))?;
            if found != SCHEMA_VERSION {
                return Err(CodecError::Schema {
                    found,
                    expected: SCHEMA_VERSION,
                });
            }
            version = Some(found);
        } else if line.starts_with(';') || line.is_empty() {
            continue;
        } else if let Some(h) = line.strip_prefix('>') {
            records.push(FastaRecord {
                id: h.trim().parse()?,
                letters: String::new(),
            });
        } else {
            let rec = records
                .last_mut()
                .ok_or_else(|| CodecError::Format("sequence before header".into()))?;
            rec.letters.push_str(line.trim());
        }
    }
    if version.is_none() {
        return Err(CodecError::Format("missing schema_version line".into()));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{AgentState, BallState, CycleRecord, FieldConfig, MatchEvent, Outcome, Score, Team};

    fn roster() -> Vec<AgentState> {
        vec![
            AgentState::new(AgentId('a'), Team::Home, 0.0, 0.0, 0.0),
            AgentState::new(AgentId('b'), Team::Home, 5.0, 0.0, 0.0),
            AgentState::new(AgentId('c'), Team::Away, 9.0, 0.0, 0.0),
        ]
    }

    fn log_from(possession: &[Option<char>], events: &[Vec<EventKind>]) -> MatchLog {
        let cycles = possession
            .iter()
            .enumerate()
            .map(|(i, p)| CycleRecord {
                cycle: i,
                agents: roster(),
                ball: BallState::default(),
                possession: p.map(AgentId),
                events: events
                    .get(i)
                    .cloned()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|kind| MatchEvent { cycle: i, kind })
                    .collect(),
            })
            .collect();
        MatchLog {
            config: FieldConfig::default(),
            home_policy: "test".into(),
            away_policy: "test".into(),
            cycles,
            outcome: Outcome::Draw,
            score: Score::default(),
            valid: true,
            abort_reason: None,
        }
    }

    #[test]
    fn uniform_possession() {
        let log = log_from(&[Some('a'); 60], &[]);
        assert_eq!(encode_game(&log, 1).unwrap().letters, "a".repeat(60));
    }

    #[test]
    fn majority_per_window() {
        // windows of 3 cycles: a,b,b,none,a
        let p = [
            Some('a'), Some('a'), None,
            Some('b'), Some('b'), Some('b'),
            Some('b'), Some('a'), Some('b'),
            None, None, Some('a'),
            Some('a'), Some('a'), Some('c'),
        ];
        let log = log_from(&p, &[]);
        assert_eq!(encode_game(&log, 3).unwrap().letters, "abb-a");
    }

    #[test]
    fn no_strict_majority_is_idle() {
        let log = log_from(&[Some('a'), Some('b')], &[]);
        assert_eq!(encode_game(&log, 2).unwrap().letters, "-");
    }

    #[test]
    fn player_actions_map_through_table() {
        let a = AgentId('a');
        let ev = vec![
            vec![EventKind::Turn { agent: a, moment: 10.0 }],
            vec![EventKind::Move { agent: a, power: 50.0 }],
            vec![EventKind::Move { agent: a, power: 50.0 }],
            vec![EventKind::Kick {
                agent: a,
                power: 100.0,
                direction: 0.0,
                effective: true,
                on_target: true,
            }],
        ];
        let log = log_from(&[Some('a'); 4], &ev);
        let game = encode_game(&log, 1).unwrap();
        assert_eq!(encode_player(&log, &game, a).unwrap().letters, "ACCG");
        assert_eq!(encode_player(&log, &game, AgentId('b')).unwrap().letters, "----");
    }

    #[test]
    fn kick_to_teammate_is_pass() {
        let a = AgentId('a');
        let kick = EventKind::Kick {
            agent: a,
            power: 30.0,
            direction: 0.0,
            effective: true,
            on_target: false,
        };
        let p = [Some('a'), Some('a'), None, Some('b')];
        let log = log_from(&p, &[vec![], vec![kick.clone()]]);
        let game = encode_game(&log, 2).unwrap();
        assert_eq!(game.letters, "a-");
        assert_eq!(encode_player(&log, &game, a).unwrap().letters, "T-");
        // same kick intercepted by the opponent stays a kick
        let p = [Some('a'), Some('a'), None, Some('c')];
        let log = log_from(&p, &[vec![], vec![kick.clone()]]);
        assert_eq!(encode_player(&log, &game, a).unwrap().letters, "G-");
    }

    #[test]
    fn tie_prefers_scoring_actions() {
        let a = AgentId('a');
        let ev = vec![
            vec![EventKind::Turn { agent: a, moment: 1.0 }],
            vec![EventKind::Move { agent: a, power: 1.0 }],
        ];
        let log = log_from(&[Some('a'); 2], &ev);
        let game = encode_game(&log, 2).unwrap();
        assert_eq!(encode_player(&log, &game, a).unwrap().letters, "C");
    }

    #[test]
    fn errors() {
        let log = log_from(&[Some('a')], &[]);
        assert_eq!(encode_game(&log, 0), Err(CodecError::ZeroWindow));
        let empty = log_from(&[], &[]);
        assert_eq!(encode_game(&empty, 1), Err(CodecError::EmptyLog));
        let game = encode_game(&log, 1).unwrap();
        assert_eq!(
            encode_player(&log, &game, AgentId('q')),
            Err(CodecError::UnknownPlayer(AgentId('q')))
        );
    }

    #[test]
    fn decode() {
        assert_eq!(decode_symbol('G').unwrap(), ActionKind::KickTowardGoal);
        assert_eq!(decode_symbol('-').unwrap(), ActionKind::Idle);
        assert_eq!(decode_symbol('Z'), Err(CodecError::UnknownSymbol('Z')));
    }

    #[test]
    fn fasta_roundtrip() {
        let recs = vec![
            FastaRecord {
                id: SequenceId::Game { game: "m001".into() },
                letters: "ab-a".into(),
            },
            FastaRecord {
                id: SequenceId::Player {
                    player: AgentId('a'),
                    game: "m001".into(),
                },
                letters: "AC-G".into(),
            },
        ];
        let mut buf = Vec::new();
        write_fasta(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(">player:a@game:m001\nAC-G\n"));
        assert_eq!(read_fasta(&buf[..]).unwrap(), recs);
        assert!(read_fasta(&b">game:x\nAA\n"[..]).is_err());
        assert!(matches!(
            read_fasta(&b";schema_version=2\n"[..]),
            Err(CodecError::Schema { found: 2, .. })
        ));
    }
}
