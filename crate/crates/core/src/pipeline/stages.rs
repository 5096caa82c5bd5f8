use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::{load_corpus, LoadedCorpus};
use super::{
    create, open, DiagnoseSection, FmacaSection, LcsEnvKind, LcsSection, MineSection, PipelineError, CURVE_FILE,
    MOTIFS_FILE, PATTERNS_FILE, POPULATION_FILE, TANDEM_FILE,
};
use crate::artifact::{read_schema_line, write_schema_line};
use crate::diagnostics::measure_both;
use crate::fca::{FcaRuleVector, FuzzyState};
use crate::fmaca::{build_tree_with, encode_window, evolve_rules, FmacaTree, LabeledPattern, GOAL_CLASS, THREAT_CLASS};
use crate::lcs::{train, write_curve_csv, write_population_csv, MatchEnv, MinerStats, OracleEnv, TrainOutcome};
use crate::miner::{motif_table, AnnotatedSequence, MinerError, MotifLabel, MotifStat, PatternQuery, PatternReport, PatternRow, TandemRow};
use crate::sequence::SequenceId;
use crate::SCHEMA_VERSION;

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<std::fs::File>>, PipelineError> {
    let mut out = BufWriter::new(create(path)?);
    write_schema_line(&mut out).map_err(|e| PipelineError::io(path, e))?;
    Ok(csv::Writer::from_writer(out))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<impl BufRead>, PipelineError> {
    let mut input = open(path)?;
    match read_schema_line(&mut input).map_err(|e| PipelineError::io(path, e))? {
        Some(SCHEMA_VERSION) => Ok(csv::Reader::from_reader(input)),
        Some(found) => Err(PipelineError::Schema {
            path: path.to_path_buf(),
            found,
        }),
        None => Err(PipelineError::Invalid(format!("{}: missing schema_version line", path.display()))),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let mut r = csv_reader(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

/// Columns: pattern, occurrences, sequence_id.
pub fn write_pattern_csv(path: &Path, rows: &[PatternRow]) -> Result<(), PipelineError> {
    write_rows(path, rows)
}

pub fn read_pattern_csv(path: &Path) -> Result<Vec<PatternRow>, PipelineError> {
    read_rows(path)
}

/// Columns: pattern, start, copies, sequence_id.
pub fn write_tandem_csv(path: &Path, rows: &[TandemRow]) -> Result<(), PipelineError> {
    write_rows(path, rows)
}

/// Columns: label, template, occurrence_pct, band, events.
pub fn write_motif_csv(path: &Path, rows: &[MotifStat]) -> Result<(), PipelineError> {
    write_rows(path, rows)
}

pub fn read_motif_csv(path: &Path) -> Result<Vec<MotifStat>, PipelineError> {
    read_rows(path)
}

fn player_records(records: &[crate::sequence::FastaRecord]) -> Vec<(String, &str)> {
    records
        .iter()
        .filter(|r| matches!(r.id, SequenceId::Player { .. }))
        .map(|r| (r.id.to_string(), r.letters.as_str()))
        .collect()
}

/// Frequent patterns and tandem runs of the player sequences, and the
/// goal/threat motif table.
pub fn mine_stage(corpus_dir: &Path, out_dir: &Path, section: &MineSection) -> Result<Vec<PathBuf>, PipelineError> {
    let corpus = load_corpus(corpus_dir)?;
    let query = PatternQuery::new(section.min_len, section.max_len)?;
    let players = player_records(&corpus.records);
    let report = PatternReport::build(players.iter().map(|(id, s)| (id.as_str(), *s)), query, section.min_count);
    let patterns = out_dir.join(PATTERNS_FILE);
    let tandem = out_dir.join(TANDEM_FILE);
    write_pattern_csv(&patterns, &report.rows)?;
    write_tandem_csv(&tandem, &report.tandem_runs)?;

    let motif_path = out_dir.join(MOTIFS_FILE);
    motifs_stage(&corpus, &motif_path, section)?;
    Ok(vec![patterns, tandem, motif_path])
}

/// Goal and threat motif table of an annotated corpus.
pub fn motifs_stage(corpus: &LoadedCorpus, path: &Path, section: &MineSection) -> Result<Vec<PathBuf>, PipelineError> {
    let templates: Vec<&str> = section.templates.iter().map(String::as_str).collect();
    let mut motifs = Vec::new();
    for label in [MotifLabel::Goal, MotifLabel::Threat] {
        match motif_table(&corpus.annotated, label, section.motif_len, section.lookback, &templates) {
            Ok(rows) => motifs.extend(rows),
            Err(MinerError::NoAnnotations(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if section.wildcard_matches_idle {
        motifs = recompute_with_idle(&corpus.annotated, motifs, section.lookback)?;
    }
    write_motif_csv(path, &motifs)?;
    Ok(vec![path.to_path_buf()])
}

fn recompute_with_idle(
    corpus: &[AnnotatedSequence],
    rows: Vec<MotifStat>,
    lookback: usize,
) -> Result<Vec<MotifStat>, PipelineError> {
    use crate::miner::{motif_occurrence_rate, ConfidenceBand, Motif};
    rows.into_iter()
        .map(|mut r| {
            let m = Motif::new(&r.template, r.label)?.with_idle_wildcard(true);
            r.occurrence_pct = motif_occurrence_rate(corpus, &m, lookback.max(m.len()))?;
            r.band = ConfidenceBand::from_rate(r.occurrence_pct);
            Ok(r)
        })
        .collect()
}

/// Labelled windows ending at each annotated event.
///
/// Events too close to the start of a sequence for a full window are
/// skipped. When there are goal windows but no threat windows, unannotated
/// windows ending on an action letter stand in as threats, evenly spaced
/// through the corpus and as many as there are goals.
pub fn training_windows(corpus: &[AnnotatedSequence], window: usize) -> Result<Vec<LabeledPattern>, PipelineError> {
    let mut out = Vec::new();
    for seq in corpus {
        for a in &seq.annotations {
            let w = seq.window_before(a.index, window);
            if w.len() == window {
                let label = match a.label {
                    MotifLabel::Goal => GOAL_CLASS,
                    MotifLabel::Threat => THREAT_CLASS,
                };
                out.push(LabeledPattern::new(encode_window(w)?, label));
            }
        }
    }
    let goals = out.iter().filter(|p| p.label == GOAL_CLASS).count();
    if goals > 0 && goals == out.len() {
        let mut candidates = Vec::new();
        for seq in corpus {
            for (i, c) in seq.letters.char_indices() {
                if i + 1 >= window && c != '-' && seq.annotations.iter().all(|a| a.index != i) {
                    candidates.push(seq.window_before(i, window));
                }
            }
        }
        let take = goals.min(candidates.len());
        for j in 0..take {
            let w = candidates[j * candidates.len() / take];
            out.push(LabeledPattern::new(encode_window(w)?, THREAT_CLASS));
        }
    }
    Ok(out)
}

/// Train the feedback tree on the corpus windows and write it as JSON.
pub fn fmaca_stage(corpus_dir: &Path, tree_path: &Path, section: &FmacaSection) -> Result<Vec<PathBuf>, PipelineError> {
    let corpus = load_corpus(corpus_dir)?;
    let training = training_windows(&corpus.annotated, section.window)?;
    let tree = if training.is_empty() {
        FmacaTree::single_leaf(GOAL_CLASS, section.window, section.classes)
    } else {
        build_tree_with(&training, section.classes, &section.ga, &section.tree)?
    };
    tree.write_json(BufWriter::new(create(tree_path)?))?;
    Ok(vec![tree_path.to_path_buf()])
}

/// Miner output as seen by rule discovery: frequent patterns from
/// `patterns.csv` and goal templates from `motifs.csv`, when present.
fn miner_stats(out_dir: &Path, top: usize) -> Result<MinerStats, PipelineError> {
    let mut stats = MinerStats::default();
    let patterns = out_dir.join(PATTERNS_FILE);
    if patterns.is_file() {
        let rows = read_pattern_csv(&patterns)?;
        let report = PatternReport {
            rows,
            tandem_runs: Vec::new(),
        };
        stats.patterns = report.totals().into_iter().take(top).map(|(p, _)| p).collect();
    }
    let motifs = out_dir.join(MOTIFS_FILE);
    if motifs.is_file() {
        let mut rows: Vec<MotifStat> = read_motif_csv(&motifs)?
            .into_iter()
            .filter(|r| r.label == MotifLabel::Goal)
            .collect();
        rows.sort_by(|a, b| b.occurrence_pct.total_cmp(&a.occurrence_pct).then_with(|| a.template.cmp(&b.template)));
        stats.motifs = rows.into_iter().take(top).map(|r| r.template).collect();
    }
    Ok(stats)
}

pub fn lcs_stage(corpus_dir: &Path, out_dir: &Path, section: &LcsSection) -> Result<Vec<PathBuf>, PipelineError> {
    let stats = miner_stats(out_dir, section.top_patterns)?;
    let cfg = &section.lcs;
    let outcome: TrainOutcome = match section.env {
        LcsEnvKind::Oracle => train(&mut OracleEnv::new(cfg.context_len, cfg.rng_seed), cfg, &stats)?,
        LcsEnvKind::Match => {
            let corpus = load_corpus(corpus_dir)?;
            let mut env = MatchEnv::new(&corpus.annotated, cfg.context_len)?;
            train(&mut env, cfg, &stats)?
        }
    };
    let pop = out_dir.join(POPULATION_FILE);
    let curve = out_dir.join(CURVE_FILE);
    write_population_csv(BufWriter::new(create(&pop)?), &outcome.population)?;
    write_curve_csv(BufWriter::new(create(&curve)?), &outcome.curve)?;
    Ok(vec![pop, curve])
}

/// Two noisy classes split on mean feature value.
pub fn synthetic_dataset(n: usize, size: usize, seed: u64) -> Vec<LabeledPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size)
        .map(|_| {
            let cells: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mean = cells.iter().sum::<f64>() / n as f64;
            let mut label = if mean < 0.5 { GOAL_CLASS } else { THREAT_CLASS };
            if rng.random::<f64>() < 0.1 {
                label = GOAL_CLASS + THREAT_CLASS - label;
            }
            LabeledPattern::new(FuzzyState::new(cells).expect("cells in [0, 1]"), label)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub generation: usize,
    pub n: usize,
    pub mean_entropy: f64,
    pub std_entropy: f64,
    pub mean_mi: f64,
}

pub fn write_diagnostics_csv<W: Write>(mut out: W, rows: &[DiagnosticsRow]) -> Result<(), PipelineError> {
    write_schema_line(&mut out).map_err(|e| PipelineError::io(Path::new("<diagnostics>"), e))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| PipelineError::io(Path::new("<diagnostics>"), e))?;
    Ok(())
}

fn read_rules_file(path: &Path) -> Result<FcaRuleVector, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join(",");
    let cleaned: Vec<&str> = body.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    Ok(cleaned.join(",").parse::<FcaRuleVector>().map_err(crate::fmaca::FmacaError::from)?)
}

/// Entropy and mutual information of the best rule vector of every GA
/// generation, per lattice size. With a rules file, that vector alone is
/// measured as generation 0.
pub fn diagnose_stage(path: &Path, section: &DiagnoseSection) -> Result<Vec<PathBuf>, PipelineError> {
    let mut rows = Vec::new();
    let mut measure = |generation: usize, rules: &FcaRuleVector| -> Result<(), PipelineError> {
        let (e, m) = measure_both(rules, &section.diagnostics)?;
        rows.push(DiagnosticsRow {
            generation,
            n: rules.len(),
            mean_entropy: e.mean_entropy,
            std_entropy: e.std_dev,
            mean_mi: m.mean_mi,
        });
        Ok(())
    };
    if let Some(file) = &section.rules_file {
        measure(0, &read_rules_file(file)?)?;
    } else {
        for &n in &section.dimensions {
            if n == 0 {
                return Err(PipelineError::Invalid("lattice size must be positive".into()));
            }
            let data = synthetic_dataset(n, section.dataset_size.max(2), section.ga.rng_seed.wrapping_add(n as u64));
            let ga = section.ga.clone().with_seed(section.ga.rng_seed.wrapping_add(n as u64));
            let outcome = evolve_rules(&data, 2, &ga)?;
            for (g, (rules, _)) in outcome.history.iter().enumerate() {
                measure(g, rules)?;
            }
        }
    }
    write_diagnostics_csv(BufWriter::new(create(path)?), &rows)?;
    Ok(vec![path.to_path_buf()])
}
