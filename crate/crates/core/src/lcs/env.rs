use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LcsError;
use crate::miner::{AnnotatedSequence, MotifLabel};
use crate::sequence::ActionSymbol;

const LETTERS: [char; 5] = ['A', 'C', 'G', 'T', '-'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reward {
    None,
    Play,
    Win,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepResult {
    pub correct: bool,
    pub reward: Reward,
    pub episode_over: bool,
}

/// A source of contexts that grades the action taken in each.
pub trait Environment {
    /// The last `context_len` letters.
    fn context(&self) -> &str;
    fn correct_action(&self) -> ActionSymbol;
    /// Grade `action` and move on to the next context.
    fn respond(&mut self, action: ActionSymbol) -> StepResult;
}

/// Letter stream with planted `CCT` runs.
///
/// Contexts ending in `CCT` call for a kick (`G`) and pay the win reward.
/// Elsewhere the right action depends on the last letter only. A wrong
/// action ends the episode.
#[derive(Debug, Clone)]
pub struct OracleEnv {
    rng: ChaCha8Rng,
    window: String,
    pending: VecDeque<char>,
    plant_rate: f64,
}

pub const PLANTED: &str = "CCT";

impl OracleEnv {
    pub fn new(context_len: usize, seed: u64) -> Self {
        Self::with_plant_rate(context_len, seed, 0.15)
    }

    pub fn with_plant_rate(context_len: usize, seed: u64, plant_rate: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = (0..context_len).map(|_| LETTERS[rng.random_range(0..5)]).collect();
        OracleEnv {
            rng,
            window,
            pending: VecDeque::new(),
            plant_rate,
        }
    }

    pub fn is_goal_context(context: &str) -> bool {
        context.len() >= 5 && context.ends_with(PLANTED)
    }

    /// The right answer for a context.
    pub fn answer(context: &str) -> ActionSymbol {
        if Self::is_goal_context(context) {
            return ActionSymbol::G;
        }
        match context.chars().last() {
            Some('A') => ActionSymbol::C,
            Some('G') => ActionSymbol::T,
            _ => ActionSymbol::A,
        }
    }

    fn advance(&mut self) {
        if self.pending.is_empty() {
            if self.rng.random::<f64>() < self.plant_rate {
                self.pending.extend(PLANTED.chars());
            } else {
                self.pending.push_back(LETTERS[self.rng.random_range(0..5)]);
            }
        }
        let c = self.pending.pop_front().expect("refilled above");
        self.window.remove(0);
        self.window.push(c);
    }
}

impl Environment for OracleEnv {
    fn context(&self) -> &str {
        &self.window
    }

    fn correct_action(&self) -> ActionSymbol {
        Self::answer(&self.window)
    }

    fn respond(&mut self, action: ActionSymbol) -> StepResult {
        let goal = Self::is_goal_context(&self.window);
        let correct = action == self.correct_action();
        self.advance();
        StepResult {
            correct,
            reward: match (correct, goal) {
                (true, true) => Reward::Win,
                (true, false) => Reward::Play,
                _ => Reward::None,
            },
            episode_over: !correct || goal,
        }
    }
}

/// Random contexts where `G` is always right.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    rng: ChaCha8Rng,
    window: String,
}

impl ConstantOracle {
    pub fn new(context_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = (0..context_len).map(|_| LETTERS[rng.random_range(0..5)]).collect();
        ConstantOracle { rng, window }
    }
}

impl Environment for ConstantOracle {
    fn context(&self) -> &str {
        &self.window
    }

    fn correct_action(&self) -> ActionSymbol {
        ActionSymbol::G
    }

    fn respond(&mut self, action: ActionSymbol) -> StepResult {
        let correct = action == ActionSymbol::G;
        self.window.remove(0);
        self.window.push(LETTERS[self.rng.random_range(0..5)]);
        StepResult {
            correct,
            reward: if correct { Reward::Play } else { Reward::None },
            episode_over: !correct,
        }
    }
}

/// Random contexts, a random right answer each step, and no reward ever.
#[derive(Debug, Clone)]
pub struct ZeroRewardEnv {
    rng: ChaCha8Rng,
    window: String,
    answer: ActionSymbol,
}

impl ZeroRewardEnv {
    pub fn new(context_len: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = (0..context_len).map(|_| LETTERS[rng.random_range(0..5)]).collect();
        let answer = ActionSymbol::ACTIONS[rng.random_range(0..4)];
        ZeroRewardEnv { rng, window, answer }
    }
}

impl Environment for ZeroRewardEnv {
    fn context(&self) -> &str {
        &self.window
    }

    fn correct_action(&self) -> ActionSymbol {
        self.answer
    }

    fn respond(&mut self, action: ActionSymbol) -> StepResult {
        let correct = action == self.answer;
        self.window.remove(0);
        self.window.push(LETTERS[self.rng.random_range(0..5)]);
        self.answer = ActionSymbol::ACTIONS[self.rng.random_range(0..4)];
        StepResult {
            correct,
            reward: Reward::None,
            episode_over: !correct,
        }
    }
}

/// Replays recorded player sequences: the right action is the one the
/// player actually took, and a goal at that position pays the win reward.
#[derive(Debug, Clone)]
pub struct MatchEnv {
    /// (context, action taken, goal here, last position of its sequence)
    steps: Vec<(String, ActionSymbol, bool, bool)>,
    pos: usize,
}

impl MatchEnv {
    pub fn new(corpus: &[AnnotatedSequence], context_len: usize) -> Result<Self, LcsError> {
        let mut steps = Vec::new();
        for seq in corpus {
            let letters = seq.letters.as_bytes();
            let mut last = None;
            for pos in context_len..letters.len() {
                let Ok(action) = ActionSymbol::from_char(letters[pos] as char) else {
                    return Err(LcsError::Env(format!("bad letter in sequence {}", seq.id)));
                };
                if action == ActionSymbol::Idle {
                    continue;
                }
                let goal = seq
                    .annotations
                    .iter()
                    .any(|a| a.index == pos && a.label == MotifLabel::Goal);
                let context = seq.letters[pos - context_len..pos].to_string();
                steps.push((context, action, goal, false));
                last = Some(steps.len() - 1);
            }
            if let Some(l) = last {
                steps[l].3 = true;
            }
        }
        if steps.is_empty() {
            return Err(LcsError::Env("corpus has no action positions".into()));
        }
        Ok(MatchEnv { steps, pos: 0 })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl Environment for MatchEnv {
    fn context(&self) -> &str {
        &self.steps[self.pos].0
    }

    fn correct_action(&self) -> ActionSymbol {
        self.steps[self.pos].1
    }

    fn respond(&mut self, action: ActionSymbol) -> StepResult {
        let (_, right, goal, end) = self.steps[self.pos];
        let correct = action == right;
        self.pos = (self.pos + 1) % self.steps.len();
        StepResult {
            correct,
            reward: match (correct, goal) {
                (true, true) => Reward::Win,
                (true, false) => Reward::Play,
                _ => Reward::None,
            },
            episode_over: !correct || goal || end,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::Annotation;

    #[test]
    fn oracle_answers() {
        assert_eq!(OracleEnv::answer("TCCCT"), ActionSymbol::G);
        assert_eq!(OracleEnv::answer("CACCT"), ActionSymbol::G);
        assert_eq!(OracleEnv::answer("AAAAT"), ActionSymbol::A);
        assert_eq!(OracleEnv::answer("TTTTA"), ActionSymbol::C);
        assert_eq!(OracleEnv::answer("TTTTG"), ActionSymbol::T);
        assert_eq!(OracleEnv::answer("TTTT-"), ActionSymbol::A);
    }

    #[test]
    fn oracle_plants_goal_contexts() {
        let mut env = OracleEnv::new(5, 3);
        let mut goals = 0;
        for _ in 0..5000 {
            assert_eq!(env.context().len(), 5);
            if OracleEnv::is_goal_context(env.context()) {
                goals += 1;
            }
            let a = env.correct_action();
            let r = env.respond(a);
            assert!(r.correct);
            assert_ne!(r.reward, Reward::None);
        }
        assert!(goals > 300, "{goals}");
    }

    #[test]
    fn wrong_action_ends_episode() {
        let mut env = ConstantOracle::new(5, 0);
        let r = env.respond(ActionSymbol::A);
        assert!(!r.correct && r.episode_over && r.reward == Reward::None);
        let r = env.respond(ActionSymbol::G);
        assert!(r.correct && !r.episode_over && r.reward == Reward::Play);
    }

    #[test]
    fn match_env_replays() {
        let corpus = vec![AnnotatedSequence {
            id: "p".into(),
            letters: "AC-CTG-A".into(),
            annotations: vec![Annotation {
                index: 5,
                label: MotifLabel::Goal,
            }],
        }];
        let mut env = MatchEnv::new(&corpus, 3).unwrap();
        assert_eq!(env.len(), 4);
        assert_eq!(env.context(), "AC-");
        assert_eq!(env.correct_action(), ActionSymbol::C);
        env.respond(ActionSymbol::C);
        assert_eq!(env.context(), "C-C");
        env.respond(ActionSymbol::T);
        let r = env.respond(ActionSymbol::G);
        assert_eq!(r.reward, Reward::Win);
        assert!(MatchEnv::new(&corpus[..0], 3).is_err());
    }
}
