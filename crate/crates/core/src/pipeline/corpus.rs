use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineError, SimulateSection};
use crate::miner::{AnnotatedSequence, Annotation, MotifLabel};
use crate::sequence::{encode_match, read_fasta, window_of, write_fasta, FastaRecord, PlayerSequence, SequenceId};
use crate::sim::{run_match, AgentId, EventKind, MatchLog};
use crate::SCHEMA_VERSION;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub match_id: String,
    /// Paths are relative to the manifest's directory.
    pub log_path: PathBuf,
    pub sequence_path: PathBuf,
    pub annotations_path: PathBuf,
    pub seed: u64,
    pub goals: usize,
    pub threats: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub window_cycles: usize,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        let m: CorpusManifest = serde_json::from_reader(BufReader::new(file))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::Schema {
                path: path.to_path_buf(),
                found: m.schema_version,
            });
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), PipelineError> {
        let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }

    /// Every referenced file exists and match ids are unique.
    pub fn validate(&self, dir: &Path) -> Result<(), PipelineError> {
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(&e.match_id) {
                return Err(PipelineError::Invalid(format!("duplicate match id {}", e.match_id)));
            }
            for p in [&e.log_path, &e.sequence_path, &e.annotations_path] {
                if !dir.join(p).is_file() {
                    return Err(PipelineError::Missing(dir.join(p)));
                }
            }
        }
        Ok(())
    }
}

/// Per-match annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub schema_version: u32,
    pub match_id: String,
    pub sequences: Vec<AnnotatedSequence>,
}

pub fn match_id(index: usize) -> String {
    format!("match_{index:03}")
}

/// Attach goal and threat events to the player sequences of one match.
///
/// A goal is credited to its scorer, or failing that to the last player of
/// the scoring side who held the ball. A threat is an on-target kick that
/// is not followed by a goal for the kicker before the next kick.
pub fn annotate_match(
    log: &MatchLog,
    players: &[PlayerSequence],
    window_cycles: usize,
    game: &str,
) -> Vec<AnnotatedSequence> {
    let mut out: Vec<AnnotatedSequence> = players
        .iter()
        .map(|p| AnnotatedSequence {
            id: SequenceId::Player {
                player: p.player_id,
                game: game.to_string(),
            }
            .to_string(),
            letters: p.letters.clone(),
            annotations: Vec::new(),
        })
        .collect();
    let slot = |id: AgentId| players.iter().position(|p| p.player_id == id);
    let events: Vec<_> = log.events().collect();
    let mut last_holder: Vec<(usize, AgentId)> = Vec::new();
    for c in &log.cycles {
        if let Some(h) = c.possession {
            last_holder.push((c.cycle, h));
        }
    }

    for (i, e) in events.iter().enumerate() {
        match e.kind {
            EventKind::Goal { team, scorer } => {
                let credited = scorer.or_else(|| {
                    last_holder
                        .iter()
                        .rev()
                        .filter(|(cy, _)| *cy <= e.cycle)
                        .map(|(_, h)| *h)
                        .find(|h| log.team_of(*h) == Some(team))
                        .or_else(|| log.agent_ids().into_iter().find(|a| log.team_of(*a) == Some(team)))
                });
                if let Some(k) = credited.and_then(slot) {
                    out[k].annotations.push(Annotation {
                        index: window_of(e.cycle, window_cycles),
                        label: MotifLabel::Goal,
                    });
                }
            }
            EventKind::Kick {
                agent,
                on_target: true,
                effective: true,
                ..
            } => {
                let scored = events[i + 1..]
                    .iter()
                    .take_while(|n| !matches!(n.kind, EventKind::Kick { effective: true, .. }))
                    .any(|n| matches!(n.kind, EventKind::Goal { scorer: Some(s), .. } if s == agent));
                if !scored {
                    if let Some(k) = slot(agent) {
                        out[k].annotations.push(Annotation {
                            index: window_of(e.cycle, window_cycles),
                            label: MotifLabel::Threat,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    out
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

/// Play `section.matches` matches with seeds `seed, seed + 1, ...` and write
/// their logs into `dir`. Returns the log paths in match order.
pub fn simulate_matches(section: &SimulateSection, seed: u64, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if section.matches == 0 {
        return Err(PipelineError::Invalid("need at least one match".into()));
    }
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    (0..section.matches)
        .into_par_iter()
        .map(|i| {
            let config = section.field.clone().with_seed(seed + i as u64).with_cycles(section.cycles);
            let log = run_match(section.home_policy, section.away_policy, &config)?;
            let path = dir.join(format!("{}.jsonl", match_id(i)));
            let file = File::create(&path).map_err(|e| PipelineError::io(&path, e))?;
            log.write_jsonl(BufWriter::new(file))?;
            Ok(path)
        })
        .collect()
}

/// Encode and annotate each log, writing sequences, annotations and the
/// manifest next to the logs.
pub fn encode_corpus(log_paths: &[PathBuf], window_cycles: usize, dir: &Path) -> Result<CorpusManifest, PipelineError> {
    let entries = log_paths
        .par_iter()
        .enumerate()
        .map(|(i, path)| -> Result<ManifestEntry, PipelineError> {
            let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
            let log = MatchLog::read_jsonl(BufReader::new(file))?;
            let id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| match_id(i));
            let (game, players) = encode_match(&log, window_cycles)?;
            let mut records = vec![FastaRecord {
                id: SequenceId::Game { game: id.clone() },
                letters: game.letters.clone(),
            }];
            records.extend(players.iter().map(|p| FastaRecord {
                id: SequenceId::Player {
                    player: p.player_id,
                    game: id.clone(),
                },
                letters: p.letters.clone(),
            }));
            let seq_name = format!("{id}.fasta");
            let file = File::create(dir.join(&seq_name)).map_err(|e| PipelineError::io(&dir.join(&seq_name), e))?;
            write_fasta(BufWriter::new(file), &records)?;

            let sequences = annotate_match(&log, &players, window_cycles, &id);
            let goals = sequences
                .iter()
                .flat_map(|s| &s.annotations)
                .filter(|a| a.label == MotifLabel::Goal)
                .count();
            let threats = sequences.iter().map(|s| s.annotations.len()).sum::<usize>() - goals;
            let ann_name = format!("{id}.annotations.json");
            write_json(
                &dir.join(&ann_name),
                &AnnotationFile {
                    schema_version: SCHEMA_VERSION,
                    match_id: id.clone(),
                    sequences,
                },
            )?;
            let log_name = path
                .strip_prefix(dir)
                .map(Path::to_path_buf)
                .unwrap_or_else(|_| path.clone());
            Ok(ManifestEntry {
                match_id: id,
                log_path: log_name,
                sequence_path: seq_name.into(),
                annotations_path: ann_name.into(),
                seed: log.config.rng_seed,
                goals,
                threats,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = CorpusManifest {
        schema_version: SCHEMA_VERSION,
        window_cycles,
        created_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        entries,
    };
    manifest.write(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Simulate and encode a whole corpus into `dir`.
pub fn build_corpus(
    section: &SimulateSection,
    seed: u64,
    window_cycles: usize,
    dir: &Path,
) -> Result<CorpusManifest, PipelineError> {
    let logs = simulate_matches(section, seed, dir)?;
    encode_corpus(&logs, window_cycles, dir)
}

/// A corpus read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub manifest: CorpusManifest,
    pub records: Vec<FastaRecord>,
    pub annotated: Vec<AnnotatedSequence>,
}

pub fn load_corpus(dir: &Path) -> Result<LoadedCorpus, PipelineError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(PipelineError::Missing(manifest_path));
    }
    let manifest = CorpusManifest::read(&manifest_path)?;
    manifest.validate(dir)?;
    let mut records = Vec::new();
    let mut annotated = Vec::new();
    for e in &manifest.entries {
        let p = dir.join(&e.sequence_path);
        let file = File::open(&p).map_err(|err| PipelineError::io(&p, err))?;
        records.extend(read_fasta(BufReader::new(file))?);
        let p = dir.join(&e.annotations_path);
        let file = File::open(&p).map_err(|err| PipelineError::io(&p, err))?;
        let ann: AnnotationFile = serde_json::from_reader(BufReader::new(file))?;
        if ann.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::Schema {
                path: p,
                found: ann.schema_version,
            });
        }
        annotated.extend(ann.sequences);
    }
    Ok(LoadedCorpus {
        manifest,
        records,
        annotated,
    })
}
