//! Fuzzy cellular automata over a one-dimensional, null-boundary lattice.
//!
//! Only the sixteen three-neighbourhood rules that can be written with fuzzy
//! OR and NOT are supported: the eight OR-combinations of `{left, self, right}`
//! and their complements. Fuzzy OR is the bounded sum `min(1, a + b)` and
//! fuzzy NOT is `1 - a`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The non-complemented rules. Each is the Wolfram number of an OR over a
/// subset of the neighbourhood: 240 = left, 204 = self, 170 = right.
pub const BASE_RULES: [u8; 8] = [0, 170, 204, 238, 240, 250, 252, 254];

/// All sixteen supported rules, bases first then complements in matching order.
pub const ALL_RULES: [u8; 16] = [
    0, 170, 204, 238, 240, 250, 252, 254, 255, 85, 51, 17, 15, 5, 3, 1,
];

const LEFT_MASK: u8 = 240;
const SELF_MASK: u8 = 204;
const RIGHT_MASK: u8 = 170;

/// Default fixed-point / recurrence tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Grid used to hash states when looking for recurrences.
pub const QUANTIZATION_GRID: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcaError {
    #[error("rule {0} has no fuzzy OR/NOT form")]
    UnknownRule(u32),
    #[error("cell value {value} at index {index} is outside [0, 1]")]
    CellOutOfRange { index: usize, value: f64 },
    #[error("state has {state} cells but the rule vector has {rules}")]
    SizeMismatch { state: usize, rules: usize },
    #[error("an automaton needs at least one cell")]
    Empty,
    #[error("cannot parse {0:?}")]
    Parse(String),
}

/// A validated fuzzy rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct FuzzyRule(u8);

impl FuzzyRule {
    pub fn new(number: u32) -> Result<Self, FcaError> {
        u8::try_from(number)
            .ok()
            .filter(|n| ALL_RULES.contains(n))
            .map(FuzzyRule)
            .ok_or(FcaError::UnknownRule(number))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn is_complemented(self) -> bool {
        !BASE_RULES.contains(&self.0)
    }

    /// The non-complemented rule this one is built on.
    pub fn base(self) -> FuzzyRule {
        if self.is_complemented() {
            FuzzyRule(255 - self.0)
        } else {
            self
        }
    }

    pub fn complement(self) -> FuzzyRule {
        FuzzyRule(255 - self.0)
    }

    /// Which of (left, self, right) the rule reads.
    pub fn neighbours(self) -> [bool; 3] {
        let b = self.base().0;
        [
            b & LEFT_MASK == LEFT_MASK,
            b & SELF_MASK == SELF_MASK,
            b & RIGHT_MASK == RIGHT_MASK,
        ]
    }

    pub fn eval(self, left: f64, centre: f64, right: f64) -> f64 {
        let [l, c, r] = self.neighbours();
        let mut sum = 0.0;
        if l {
            sum += left;
        }
        if c {
            sum += centre;
        }
        if r {
            sum += right;
        }
        let or = sum.min(1.0);
        if self.is_complemented() {
            1.0 - or
        } else {
            or
        }
    }
}

impl TryFrom<u32> for FuzzyRule {
    type Error = FcaError;
    fn try_from(n: u32) -> Result<Self, FcaError> {
        FuzzyRule::new(n)
    }
}

impl From<FuzzyRule> for u32 {
    fn from(r: FuzzyRule) -> u32 {
        r.0 as u32
    }
}

impl fmt::Display for FuzzyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Evaluate a rule by number on one neighbourhood.
pub fn eval_rule(rule: u32, left: f64, centre: f64, right: f64) -> Result<f64, FcaError> {
    Ok(FuzzyRule::new(rule)?.eval(left, centre, right))
}

/// Cell values, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FuzzyState(Vec<f64>);

impl FuzzyState {
    pub fn new(cells: Vec<f64>) -> Result<Self, FcaError> {
        if cells.is_empty() {
            return Err(FcaError::Empty);
        }
        for (index, &value) in cells.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(FcaError::CellOutOfRange { index, value });
            }
        }
        Ok(FuzzyState(cells))
    }

    pub fn zeros(n: usize) -> Self {
        FuzzyState(vec![0.0; n.max(1)])
    }

    pub fn cells(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs_diff(&self, other: &FuzzyState) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Integer key on the quantization grid.
    pub fn quantized(&self) -> Vec<i64> {
        self.0
            .iter()
            .map(|v| (v / QUANTIZATION_GRID).round() as i64)
            .collect()
    }

    /// Threshold each cell; values `>= threshold` become 1.
    pub fn binarize(&self, threshold: f64) -> Vec<u8> {
        self.0.iter().map(|&v| u8::from(v >= threshold)).collect()
    }
}

impl TryFrom<Vec<f64>> for FuzzyState {
    type Error = FcaError;
    fn try_from(v: Vec<f64>) -> Result<Self, FcaError> {
        FuzzyState::new(v)
    }
}

impl From<FuzzyState> for Vec<f64> {
    fn from(s: FuzzyState) -> Vec<f64> {
        s.0
    }
}

impl FromStr for FuzzyState {
    type Err = FcaError;
    fn from_str(s: &str) -> Result<Self, FcaError> {
        let cells = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| FcaError::Parse(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        FuzzyState::new(cells)
    }
}

impl fmt::Display for FuzzyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v:.2}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Per-cell rules of a hybrid automaton with null boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<FuzzyRule>", into = "Vec<FuzzyRule>")]
pub struct FcaRuleVector(Vec<FuzzyRule>);

impl FcaRuleVector {
    pub fn new(rules: Vec<FuzzyRule>) -> Result<Self, FcaError> {
        if rules.is_empty() {
            return Err(FcaError::Empty);
        }
        Ok(FcaRuleVector(rules))
    }

    pub fn from_numbers(numbers: &[u32]) -> Result<Self, FcaError> {
        let rules = numbers
            .iter()
            .map(|&n| FuzzyRule::new(n))
            .collect::<Result<Vec<_>, _>>()?;
        FcaRuleVector::new(rules)
    }

    pub fn uniform(rule: FuzzyRule, n: usize) -> Self {
        FcaRuleVector(vec![rule; n.max(1)])
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.0
    }

    pub fn rules_mut(&mut self) -> &mut [FuzzyRule] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn numbers(&self) -> Vec<u32> {
        self.0.iter().map(|&r| r.into()).collect()
    }

    pub fn dependency_matrix(&self) -> DependencyMatrix {
        dependency_matrix(self)
    }
}

impl TryFrom<Vec<FuzzyRule>> for FcaRuleVector {
    type Error = FcaError;
    fn try_from(v: Vec<FuzzyRule>) -> Result<Self, FcaError> {
        FcaRuleVector::new(v)
    }
}

impl From<FcaRuleVector> for Vec<FuzzyRule> {
    fn from(v: FcaRuleVector) -> Vec<FuzzyRule> {
        v.0
    }
}

impl FromStr for FcaRuleVector {
    type Err = FcaError;
    fn from_str(s: &str) -> Result<Self, FcaError> {
        let numbers = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| FcaError::Parse(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        FcaRuleVector::from_numbers(&numbers)
    }
}

impl fmt::Display for FcaRuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Boolean matrix: `rows[i][j]` is true when cell `i` reads cell `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyMatrix {
    rows: Vec<Vec<bool>>,
}

impl DependencyMatrix {
    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    /// Rows rendered as `"1100"`-style bit strings.
    pub fn row_strings(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }
}

pub fn dependency_matrix(rules: &FcaRuleVector) -> DependencyMatrix {
    let n = rules.len();
    let rows = rules
        .rules()
        .iter()
        .enumerate()
        .map(|(i, rule)| {
            let [l, c, r] = rule.neighbours();
            let mut row = vec![false; n];
            if l && i > 0 {
                row[i - 1] = true;
            }
            if c {
                row[i] = true;
            }
            if r && i + 1 < n {
                row[i + 1] = true;
            }
            row
        })
        .collect();
    DependencyMatrix { rows }
}

/// One synchronous update with null boundary.
pub fn step(state: &FuzzyState, rules: &FcaRuleVector) -> Result<FuzzyState, FcaError> {
    if state.len() != rules.len() {
        return Err(FcaError::SizeMismatch {
            state: state.len(),
            rules: rules.len(),
        });
    }
    Ok(step_unchecked(state, rules))
}

pub(crate) fn step_unchecked(state: &FuzzyState, rules: &FcaRuleVector) -> FuzzyState {
    let mut next = Vec::with_capacity(state.len());
    step_into(state.cells(), rules.rules(), &mut next);
    FuzzyState(next)
}

/// Raw-slice step used by hot loops; `out` is cleared first.
pub(crate) fn step_into(cells: &[f64], rules: &[FuzzyRule], out: &mut Vec<f64>) {
    let n = cells.len();
    out.clear();
    for i in 0..n {
        let left = if i > 0 { cells[i - 1] } else { 0.0 };
        let right = if i + 1 < n { cells[i + 1] } else { 0.0 };
        out.push(rules[i].eval(left, cells[i], right));
    }
}

/// How an evolution run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    /// `states[index]` maps to itself.
    FixedPoint { index: usize },
    /// `states[start..start + period]` repeats.
    Cycle { start: usize, period: usize },
    Truncated { max_steps: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<FuzzyState>,
    pub terminal: Terminal,
}

impl Trajectory {
    /// The attractor representative: the fixed point, the lexicographically
    /// smallest state of a cycle, or the last state reached when truncated.
    pub fn attractor(&self) -> &FuzzyState {
        match self.terminal {
            Terminal::FixedPoint { index } => &self.states[index],
            Terminal::Cycle { start, period } => self.states[start..start + period]
                .iter()
                .min_by(|a, b| lex_cmp(a, b))
                .expect("cycle has at least one state"),
            Terminal::Truncated { .. } => self.states.last().expect("trajectory is never empty"),
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self.terminal, Terminal::Truncated { .. })
    }
}

fn lex_cmp(a: &FuzzyState, b: &FuzzyState) -> std::cmp::Ordering {
    a.quantized().cmp(&b.quantized())
}

/// Iterate `step` until a fixed point, a recurrence, or `max_steps` updates.
pub fn evolve(
    state: &FuzzyState,
    rules: &FcaRuleVector,
    max_steps: usize,
    tolerance: f64,
) -> Result<Trajectory, FcaError> {
    if state.len() != rules.len() {
        return Err(FcaError::SizeMismatch {
            state: state.len(),
            rules: rules.len(),
        });
    }
    let recur_tol = tolerance.max(QUANTIZATION_GRID);
    let mut states = vec![state.clone()];
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    seen.insert(state.quantized(), 0);

    for _ in 0..max_steps.max(1) {
        let current = states.last().expect("non-empty");
        let next = step_unchecked(current, rules);
        let t = states.len() - 1;
        if next.max_abs_diff(current) <= tolerance {
            return Ok(Trajectory {
                states,
                terminal: Terminal::FixedPoint { index: t },
            });
        }
        let key = next.quantized();
        if let Some(&start) = seen.get(&key) {
            if next.max_abs_diff(&states[start]) <= recur_tol {
                let period = t + 1 - start;
                return Ok(Trajectory {
                    states,
                    terminal: Terminal::Cycle { start, period },
                });
            }
        }
        seen.insert(key, t + 1);
        states.push(next);
    }
    Ok(Trajectory {
        states,
        terminal: Terminal::Truncated {
            max_steps: max_steps.max(1),
        },
    })
}
