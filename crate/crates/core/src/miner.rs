//! Repeat and motif mining over symbol sequences.
//!
//! Sequences are plain ASCII strings. `'-'` is an ordinary symbol for
//! enumeration and counting; only motif templates treat anything specially
//! (`'x'` is a single-symbol wildcard).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error("invalid pattern query: min_len {min} max_len {max}")]
    Query { min: usize, max: usize },
    #[error("pattern must not be empty")]
    EmptyPattern,
    #[error("window length {window} differs from template length {template}")]
    LengthMismatch { window: usize, template: usize },
    #[error("invalid motif template {0:?}")]
    Template(String),
    #[error("corpus has no {0} annotations")]
    NoAnnotations(MotifLabel),
    #[error("lookback {lookback} is shorter than the template ({template})")]
    Lookback { lookback: usize, template: usize },
    #[error("unknown label {0:?}")]
    Label(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternQuery {
    pub min_len: usize,
    pub max_len: usize,
}

impl PatternQuery {
    pub fn new(min_len: usize, max_len: usize) -> Result<Self, MinerError> {
        if min_len == 0 || min_len > max_len {
            return Err(MinerError::Query {
                min: min_len,
                max: max_len,
            });
        }
        Ok(PatternQuery { min_len, max_len })
    }
}

/// All distinct substrings with length in `[min_len, max_len]`.
pub fn enumerate_unique(sequence: &str, query: PatternQuery) -> BTreeSet<String> {
    let bytes = sequence.as_bytes();
    let mut seen: HashSet<&[u8]> = HashSet::new();
    for len in query.min_len..=query.max_len.min(bytes.len()) {
        for w in bytes.windows(len) {
            seen.insert(w);
        }
    }
    seen.into_iter()
        .map(|w| String::from_utf8_lossy(w).into_owned())
        .collect()
}

/// Overlapping occurrences and their 0-based starts.
pub fn count_occurrences(sequence: &str, pattern: &str) -> Result<(usize, Vec<usize>), MinerError> {
    if pattern.is_empty() {
        return Err(MinerError::EmptyPattern);
    }
    let starts = match_starts(sequence.as_bytes(), pattern.as_bytes());
    Ok((starts.len(), starts))
}

fn match_starts(seq: &[u8], pat: &[u8]) -> Vec<usize> {
    if pat.len() > seq.len() {
        return Vec::new();
    }
    seq.windows(pat.len())
        .enumerate()
        .filter(|(_, w)| *w == pat)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TandemRun {
    pub start: usize,
    pub copies: usize,
}

/// Maximal runs of two or more back-to-back copies of `pattern`, scanned left
/// to right. Runs never share a pattern copy.
pub fn find_tandem_repeats(sequence: &str, pattern: &str) -> Result<Vec<TandemRun>, MinerError> {
    if pattern.is_empty() {
        return Err(MinerError::EmptyPattern);
    }
    let seq = sequence.as_bytes();
    let pat = pattern.as_bytes();
    let m = pat.len();
    let mut runs = Vec::new();
    let mut i = 0;
    while i + m <= seq.len() {
        let mut copies = 0;
        while i + (copies + 1) * m <= seq.len() && &seq[i + copies * m..i + (copies + 1) * m] == pat {
            copies += 1;
        }
        if copies >= 2 {
            runs.push(TandemRun { start: i, copies });
            i += copies * m;
        } else {
            i += 1;
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotifLabel {
    Goal,
    Threat,
}

impl fmt::Display for MotifLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MotifLabel::Goal => "goal",
            MotifLabel::Threat => "threat",
        })
    }
}

impl FromStr for MotifLabel {
    type Err = MinerError;
    fn from_str(s: &str) -> Result<Self, MinerError> {
        match s {
            "goal" => Ok(MotifLabel::Goal),
            "threat" => Ok(MotifLabel::Threat),
            other => Err(MinerError::Label(other.to_string())),
        }
    }
}

/// Percentage band a motif's occurrence rate falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConfidenceBand {
    #[serde(rename = "95")]
    P95,
    #[serde(rename = "75")]
    P75,
    #[serde(rename = "50")]
    P50,
    #[serde(rename = "<50")]
    Below50,
}

impl ConfidenceBand {
    pub fn from_rate(percent: f64) -> Self {
        if percent >= 95.0 {
            ConfidenceBand::P95
        } else if percent >= 75.0 {
            ConfidenceBand::P75
        } else if percent >= 50.0 {
            ConfidenceBand::P50
        } else {
            ConfidenceBand::Below50
        }
    }
}

impl fmt::Display for ConfidenceBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConfidenceBand::P95 => "95%",
            ConfidenceBand::P75 => "75%",
            ConfidenceBand::P50 => "50%",
            ConfidenceBand::Below50 => "<50%",
        })
    }
}

pub const WILDCARD: u8 = b'x';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Motif {
    template: String,
    pub label: MotifLabel,
    pub band: Option<ConfidenceBand>,
    /// Let `'x'` match the idle symbol `'-'` too.
    pub wildcard_matches_idle: bool,
}

impl Motif {
    pub fn new(template: &str, label: MotifLabel) -> Result<Self, MinerError> {
        if template.is_empty() || !template.is_ascii() {
            return Err(MinerError::Template(template.to_string()));
        }
        Ok(Motif {
            template: template.to_string(),
            label,
            band: None,
            wildcard_matches_idle: false,
        })
    }

    pub fn goal(template: &str) -> Result<Self, MinerError> {
        Motif::new(template, MotifLabel::Goal)
    }

    pub fn threat(template: &str) -> Result<Self, MinerError> {
        Motif::new(template, MotifLabel::Threat)
    }

    pub fn with_idle_wildcard(mut self, on: bool) -> Self {
        self.wildcard_matches_idle = on;
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn len(&self) -> usize {
        self.template.len()
    }

    pub fn is_empty(&self) -> bool {
        self.template.is_empty()
    }

    fn matches_bytes(&self, window: &[u8]) -> bool {
        self.template.as_bytes().iter().zip(window).all(|(&t, &w)| {
            if t == WILDCARD {
                w != b'-' || self.wildcard_matches_idle
            } else {
                t == w
            }
        })
    }

    /// True when some window of `text` matches.
    pub fn occurs_in(&self, text: &str) -> bool {
        let m = self.len();
        text.len() >= m && text.as_bytes().windows(m).any(|w| self.matches_bytes(w))
    }
}

pub fn match_motif(window: &str, motif: &Motif) -> Result<bool, MinerError> {
    if window.len() != motif.len() {
        return Err(MinerError::LengthMismatch {
            window: window.len(),
            template: motif.len(),
        });
    }
    Ok(motif.matches_bytes(window.as_bytes()))
}

/// An event (goal or threat) at a position in a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub index: usize,
    pub label: MotifLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSequence {
    pub id: String,
    pub letters: String,
    pub annotations: Vec<Annotation>,
}

impl AnnotatedSequence {
    /// The `lookback` letters ending at (and including) `index`, cut short at
    /// the sequence start.
    pub fn window_before(&self, index: usize, lookback: usize) -> &str {
        let end = (index + 1).min(self.letters.len());
        let start = end.saturating_sub(lookback);
        &self.letters[start..end]
    }
}

/// Percentage of events carrying the motif's label whose preceding
/// `lookback` window contains a match.
pub fn motif_occurrence_rate(
    corpus: &[AnnotatedSequence],
    motif: &Motif,
    lookback: usize,
) -> Result<f64, MinerError> {
    if lookback < motif.len() {
        return Err(MinerError::Lookback {
            lookback,
            template: motif.len(),
        });
    }
    let mut events = 0usize;
    let mut hits = 0usize;
    for seq in corpus {
        for ann in seq.annotations.iter().filter(|a| a.label == motif.label) {
            events += 1;
            if motif.occurs_in(seq.window_before(ann.index, lookback)) {
                hits += 1;
            }
        }
    }
    if events == 0 {
        return Err(MinerError::NoAnnotations(motif.label));
    }
    Ok(100.0 * hits as f64 / events as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRow {
    pub pattern: String,
    pub occurrences: usize,
    pub sequence_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TandemRow {
    pub pattern: String,
    pub start: usize,
    pub copies: usize,
    pub sequence_id: String,
}

/// Per-sequence occurrence counts and tandem runs, side by side.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    pub rows: Vec<PatternRow>,
    pub tandem_runs: Vec<TandemRow>,
}

impl PatternReport {
    /// Mine each `(id, sequence)` pair: enumerate patterns, count them, and
    /// locate tandem runs. Rows below `min_count` occurrences are dropped.
    pub fn build<'a, I>(sequences: I, query: PatternQuery, min_count: usize) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut report = PatternReport::default();
        for (id, seq) in sequences {
            for pattern in enumerate_unique(seq, query) {
                let starts = match_starts(seq.as_bytes(), pattern.as_bytes());
                if starts.len() >= min_count.max(1) {
                    report.rows.push(PatternRow {
                        pattern: pattern.clone(),
                        occurrences: starts.len(),
                        sequence_id: id.to_string(),
                    });
                }
                if starts.len() >= 2 {
                    for run in find_tandem_repeats(seq, &pattern).expect("pattern non-empty") {
                        report.tandem_runs.push(TandemRow {
                            pattern: pattern.clone(),
                            start: run.start,
                            copies: run.copies,
                            sequence_id: id.to_string(),
                        });
                    }
                }
            }
        }
        report
    }

    /// Total occurrences per pattern across all sequences, most frequent
    /// first (ties by pattern).
    pub fn totals(&self) -> Vec<(String, usize)> {
        let mut acc: BTreeMap<&str, usize> = BTreeMap::new();
        for row in &self.rows {
            *acc.entry(&row.pattern).or_default() += row.occurrences;
        }
        let mut v: Vec<(String, usize)> = acc.into_iter().map(|(p, c)| (p.to_string(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v
    }
}

/// One row of the goal/threat table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifStat {
    pub label: MotifLabel,
    pub template: String,
    pub occurrence_pct: f64,
    pub band: ConfidenceBand,
    pub events: usize,
}

/// Occurrence rates of every distinct concrete window seen before events of
/// `label`, plus any extra templates, sorted by rate.
pub fn motif_table(
    corpus: &[AnnotatedSequence],
    label: MotifLabel,
    motif_len: usize,
    lookback: usize,
    extra_templates: &[&str],
) -> Result<Vec<MotifStat>, MinerError> {
    let events = corpus
        .iter()
        .flat_map(|s| s.annotations.iter())
        .filter(|a| a.label == label)
        .count();
    if events == 0 {
        return Err(MinerError::NoAnnotations(label));
    }
    let mut templates: BTreeSet<String> = extra_templates.iter().map(|s| s.to_string()).collect();
    for seq in corpus {
        for ann in seq.annotations.iter().filter(|a| a.label == label) {
            let w = seq.window_before(ann.index, motif_len);
            if w.len() == motif_len && !w.contains('-') {
                templates.insert(w.to_string());
            }
        }
    }
    let mut stats = Vec::new();
    for t in templates {
        let motif = Motif::new(&t, label)?;
        let pct = motif_occurrence_rate(corpus, &motif, lookback.max(motif.len()))?;
        stats.push(MotifStat {
            label,
            template: t,
            occurrence_pct: pct,
            band: ConfidenceBand::from_rate(pct),
            events,
        });
    }
    stats.sort_by(|a, b| {
        b.occurrence_pct
            .total_cmp(&a.occurrence_pct)
            .then_with(|| a.template.cmp(&b.template))
    });
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: usize, b: usize) -> PatternQuery {
        PatternQuery::new(a, b).unwrap()
    }

    #[test]
    fn unique_examples() {
        let got: Vec<String> = enumerate_unique("ACAC", q(2, 2)).into_iter().collect();
        assert_eq!(got, vec!["AC", "CA"]);
        assert!(enumerate_unique("", q(1, 3)).is_empty());
        let got: Vec<String> = enumerate_unique("AAAA", q(1, 2)).into_iter().collect();
        assert_eq!(got, vec!["A", "AA"]);
        assert!(enumerate_unique("ACG", q(4, 6)).is_empty());
    }

    #[test]
    fn bad_query() {
        assert!(PatternQuery::new(0, 3).is_err());
        assert!(PatternQuery::new(4, 3).is_err());
    }

    #[test]
    fn occurrence_examples() {
        assert_eq!(count_occurrences("ACCCACCC", "ACCC").unwrap(), (2, vec![0, 4]));
        assert_eq!(count_occurrences("AAAA", "AA").unwrap(), (3, vec![0, 1, 2]));
        assert_eq!(count_occurrences("GATTACA", "GATTACA").unwrap(), (1, vec![0]));
        assert_eq!(count_occurrences("AC", "ACG").unwrap(), (0, vec![]));
        assert_eq!(count_occurrences("AC", ""), Err(MinerError::EmptyPattern));
    }

    #[test]
    fn tandem_examples() {
        assert_eq!(
            find_tandem_repeats("CACACA", "CA").unwrap(),
            vec![TandemRun { start: 0, copies: 3 }]
        );
        assert!(find_tandem_repeats("CAXCA", "CA").unwrap().is_empty());
        assert_eq!(
            find_tandem_repeats("ACCCACCCACCC", "ACCC").unwrap(),
            vec![TandemRun { start: 0, copies: 3 }]
        );
        assert_eq!(
            find_tandem_repeats("GCACATTCACA", "CA").unwrap(),
            vec![
                TandemRun { start: 1, copies: 2 },
                TandemRun { start: 7, copies: 2 }
            ]
        );
    }

    #[test]
    fn goal_table_rows_match_template() {
        let goal = Motif::goal("xxCCT").unwrap();
        assert!(match_motif("TCCCT", &goal).unwrap());
        assert!(match_motif("CACCT", &goal).unwrap());
        assert!(!match_motif("AAAAA", &goal).unwrap());
        assert!(match_motif("AAAA", &goal).is_err());
    }

    #[test]
    fn wildcard_and_idle() {
        let m = Motif::goal("xxCCT").unwrap();
        assert!(!match_motif("-ACCT", &m).unwrap());
        assert!(match_motif("-ACCT", &m.clone().with_idle_wildcard(true)).unwrap());
        let all = Motif::goal("xxx").unwrap().with_idle_wildcard(true);
        assert!(match_motif("-G-", &all).unwrap());
    }

    fn corpus_with(windows: &[&str]) -> Vec<AnnotatedSequence> {
        windows
            .iter()
            .enumerate()
            .map(|(i, w)| AnnotatedSequence {
                id: format!("g{i}"),
                letters: format!("AAAA{w}"),
                annotations: vec![Annotation {
                    index: 4 + w.len() - 1,
                    label: MotifLabel::Goal,
                }],
            })
            .collect()
    }

    #[test]
    fn occurrence_rate_all_and_none() {
        let m = Motif::goal("xxCCT").unwrap();
        let c = corpus_with(&["TCCCT", "TCCCT", "TCCCT"]);
        assert_eq!(motif_occurrence_rate(&c, &m, 10).unwrap(), 100.0);
        let c = corpus_with(&["GGGGG", "AAAAA"]);
        assert_eq!(motif_occurrence_rate(&c, &m, 10).unwrap(), 0.0);
    }

    #[test]
    fn occurrence_rate_errors() {
        let m = Motif::goal("xxCCT").unwrap();
        let mut c = corpus_with(&["TCCCT"]);
        assert!(matches!(
            motif_occurrence_rate(&c, &m, 3),
            Err(MinerError::Lookback { .. })
        ));
        c[0].annotations.clear();
        assert_eq!(
            motif_occurrence_rate(&c, &m, 10),
            Err(MinerError::NoAnnotations(MotifLabel::Goal))
        );
    }

    #[test]
    fn window_before_clips_at_start() {
        let s = AnnotatedSequence {
            id: "p".into(),
            letters: "ACGTA".into(),
            annotations: vec![],
        };
        assert_eq!(s.window_before(2, 10), "ACG");
        assert_eq!(s.window_before(4, 2), "TA");
    }

    #[test]
    fn report_has_both_statistics() {
        let r = PatternReport::build([("a", "CACACA")], q(2, 2), 1);
        let ca = r.rows.iter().find(|r| r.pattern == "CA").unwrap();
        assert_eq!(ca.occurrences, 3);
        assert!(r
            .tandem_runs
            .iter()
            .any(|t| t.pattern == "CA" && t.start == 0 && t.copies == 3));
        assert_eq!(r.totals()[0], ("CA".to_string(), 3));
    }

    #[test]
    fn bands() {
        assert_eq!(ConfidenceBand::from_rate(96.0), ConfidenceBand::P95);
        assert_eq!(ConfidenceBand::from_rate(75.0), ConfidenceBand::P75);
        assert_eq!(ConfidenceBand::from_rate(60.0), ConfidenceBand::P50);
        assert_eq!(ConfidenceBand::from_rate(10.0), ConfidenceBand::Below50);
    }
}
