//! End-to-end runs: simulate, encode, mine, train both learners, and
//! measure CA dynamics. Stages talk to each other only through files in the
//! output directory, so any suffix of the pipeline can be rerun.

mod corpus;
mod stages;

use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsConfig, DiagnosticsError};
use crate::fmaca::{FmacaError, GaConfig, TreeConfig};
use crate::lcs::{LcsConfig, LcsError};
use crate::miner::MinerError;
use crate::sequence::CodecError;
use crate::sim::{FieldConfig, PolicyKind, SimError};
use crate::SCHEMA_VERSION;

pub use corpus::{
    annotate_match, build_corpus, encode_corpus, load_corpus, match_id, simulate_matches, AnnotationFile,
    CorpusManifest, LoadedCorpus, ManifestEntry, MANIFEST_FILE,
};
pub use stages::{
    diagnose_stage, fmaca_stage, lcs_stage, mine_stage, motifs_stage, read_motif_csv, read_pattern_csv, synthetic_dataset,
    training_windows, write_diagnostics_csv, write_motif_csv, write_pattern_csv, write_tandem_csv, DiagnosticsRow,
};

pub const CORPUS_DIR: &str = "corpus";
pub const PATTERNS_FILE: &str = "patterns.csv";
pub const TANDEM_FILE: &str = "tandem_runs.csv";
pub const MOTIFS_FILE: &str = "motifs.csv";
pub const TREE_FILE: &str = "tree.json";
pub const POPULATION_FILE: &str = "lcs_population.csv";
pub const CURVE_FILE: &str = "lcs_curve.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage} failed")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("missing input {0}")]
    Missing(PathBuf),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: schema version {found}, expected {SCHEMA_VERSION}")]
    Schema { path: PathBuf, found: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Fmaca(#[from] FmacaError),
    #[error(transparent)]
    Lcs(#[from] LcsError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// The stage that failed, if this came out of `pipeline_run`.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Simulate,
    Encode,
    Mine,
    TrainFmaca,
    TrainLcs,
    Diagnose,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Simulate,
        Stage::Encode,
        Stage::Mine,
        Stage::TrainFmaca,
        Stage::TrainLcs,
        Stage::Diagnose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Simulate => "simulate",
            Stage::Encode => "encode",
            Stage::Mine => "mine",
            Stage::TrainFmaca => "train-fmaca",
            Stage::TrainLcs => "train-lcs",
            Stage::Diagnose => "diagnose",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::Invalid(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub matches: usize,
    pub cycles: usize,
    pub home_policy: PolicyKind,
    pub away_policy: PolicyKind,
    pub field: FieldConfig,
    pub seed: Option<u64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            matches: 100,
            cycles: 1000,
            home_policy: PolicyKind::Chaser,
            away_policy: PolicyKind::Random,
            field: FieldConfig::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodeSection {
    pub window_cycles: usize,
}

impl Default for EncodeSection {
    fn default() -> Self {
        EncodeSection { window_cycles: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MineSection {
    pub min_len: usize,
    pub max_len: usize,
    pub min_count: usize,
    pub motif_len: usize,
    pub lookback: usize,
    /// Templates always reported in the motif table.
    pub templates: Vec<String>,
    pub wildcard_matches_idle: bool,
}

impl Default for MineSection {
    fn default() -> Self {
        MineSection {
            min_len: 2,
            max_len: 8,
            min_count: 2,
            motif_len: 5,
            lookback: 10,
            templates: vec!["xxCCT".into()],
            wildcard_matches_idle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FmacaSection {
    /// Letters per training window.
    pub window: usize,
    /// Class labels the tree may emit. The corpus only uses goal and threat.
    pub classes: u32,
    pub ga: GaConfig,
    pub tree: TreeConfig,
    pub seed: Option<u64>,
}

impl Default for FmacaSection {
    fn default() -> Self {
        FmacaSection {
            window: 5,
            classes: 2,
            ga: GaConfig::default(),
            tree: TreeConfig::default(),
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LcsEnvKind {
    Oracle,
    Match,
}

impl FromStr for LcsEnvKind {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, PipelineError> {
        match s {
            "oracle" => Ok(LcsEnvKind::Oracle),
            "match" => Ok(LcsEnvKind::Match),
            other => Err(PipelineError::Invalid(format!("unknown environment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LcsSection {
    pub env: LcsEnvKind,
    pub lcs: LcsConfig,
    /// How many frequent patterns seed rule discovery.
    pub top_patterns: usize,
    pub seed: Option<u64>,
}

impl Default for LcsSection {
    fn default() -> Self {
        LcsSection {
            env: LcsEnvKind::Match,
            lcs: LcsConfig {
                max_iterations: 100_000,
                ..LcsConfig::default()
            },
            top_patterns: 20,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseSection {
    /// Lattice sizes to evolve and measure.
    pub dimensions: Vec<usize>,
    /// Points in the synthetic training set per dimension.
    pub dataset_size: usize,
    pub ga: GaConfig,
    pub diagnostics: DiagnosticsConfig,
    /// Measure this rule vector instead of evolving one.
    pub rules_file: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        DiagnoseSection {
            dimensions: vec![10, 15, 20, 30],
            dataset_size: 100,
            ga: GaConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            rules_file: None,
            seed: None,
        }
    }
}

/// Everything a pipeline run needs. Missing keys take desk-scale defaults;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Stages to run, in pipeline order.
    pub stages: Vec<Stage>,
    pub simulate: SimulateSection,
    pub encode: EncodeSection,
    pub mine: MineSection,
    pub fmaca: FmacaSection,
    pub lcs: LcsSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            out_dir: PathBuf::from("out"),
            stages: Stage::ALL.to_vec(),
            simulate: SimulateSection::default(),
            encode: EncodeSection::default(),
            mine: MineSection::default(),
            fmaca: FmacaSection::default(),
            lcs: LcsSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::Schema {
                path: PathBuf::from("<config>"),
                found: cfg.schema_version,
            });
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Replace the master seed and drop per-stage seed overrides.
    pub fn with_master_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.simulate.seed = None;
        self.fmaca.seed = None;
        self.lcs.seed = None;
        self.diagnose.seed = None;
        self
    }

    /// Fill every stage seed, deriving unset ones from the master seed, and
    /// copy them into the nested learner configs.
    pub fn resolve(mut self) -> Self {
        let s = self.seed;
        let sim = *self.simulate.seed.get_or_insert(s);
        self.simulate.field.rng_seed = sim;
        let f = *self.fmaca.seed.get_or_insert(s.wrapping_add(1));
        self.fmaca.ga.rng_seed = f;
        let l = *self.lcs.seed.get_or_insert(s.wrapping_add(2));
        self.lcs.lcs.rng_seed = l;
        let d = *self.diagnose.seed.get_or_insert(s.wrapping_add(3));
        self.diagnose.ga.rng_seed = d;
        self.diagnose.diagnostics.rng_seed = d.wrapping_add(1);
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PipelineError::Invalid("stages must be listed once each, in pipeline order".into()));
        }
        if self.simulate.matches == 0 || self.simulate.cycles == 0 {
            return Err(PipelineError::Invalid("simulate needs at least one match and one cycle".into()));
        }
        if self.encode.window_cycles == 0 {
            return Err(PipelineError::Invalid("encode.window_cycles must be positive".into()));
        }
        if self.fmaca.classes < 2 {
            return Err(PipelineError::Invalid("fmaca.classes must be at least 2".into()));
        }
        if self.fmaca.window == 0 {
            return Err(PipelineError::Invalid("fmaca.window must be positive".into()));
        }
        self.simulate.field.validate()?;
        self.fmaca.ga.validate()?;
        self.lcs.lcs.validate()?;
        self.diagnose.ga.validate()?;
        self.diagnose.diagnostics.validate()?;
        Ok(())
    }
}

/// Files written by a pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PipelineReport {
    pub artifacts: Vec<PathBuf>,
}

fn in_stage<T>(stage: Stage, r: Result<T, PipelineError>) -> Result<T, PipelineError> {
    r.map_err(|e| PipelineError::Stage {
        stage,
        source: Box::new(e),
    })
}

/// Run the configured stages in order. Earlier artifacts stay on disk when
/// a later stage fails.
pub fn pipeline_run(config: &RunConfig) -> Result<PipelineReport, PipelineError> {
    let config = config.clone().resolve();
    config.validate()?;
    let out = &config.out_dir;
    let corpus_dir = out.join(CORPUS_DIR);
    fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
    let resolved = out.join(RESOLVED_CONFIG_FILE);
    fs::write(&resolved, serde_json::to_string_pretty(&config)?).map_err(|e| PipelineError::io(&resolved, e))?;
    let mut report = PipelineReport {
        artifacts: vec![resolved],
    };

    for &stage in &config.stages {
        let produced = match stage {
            Stage::Simulate => in_stage(
                stage,
                simulate_matches(&config.simulate, config.simulate.seed.unwrap_or(config.seed), &corpus_dir),
            )?,
            Stage::Encode => in_stage(stage, encode_logs(&corpus_dir, config.encode.window_cycles))?,
            Stage::Mine => in_stage(stage, mine_stage(&corpus_dir, out, &config.mine))?,
            Stage::TrainFmaca => in_stage(stage, fmaca_stage(&corpus_dir, &out.join(TREE_FILE), &config.fmaca))?,
            Stage::TrainLcs => in_stage(stage, lcs_stage(&corpus_dir, out, &config.lcs))?,
            Stage::Diagnose => in_stage(stage, diagnose_stage(&out.join(DIAGNOSTICS_FILE), &config.diagnose))?,
        };
        report.artifacts.extend(produced);
    }
    Ok(report)
}

/// Encode every match log found in `dir` and write the manifest there.
pub fn encode_logs(dir: &Path, window_cycles: usize) -> Result<Vec<PathBuf>, PipelineError> {
    if !dir.is_dir() {
        return Err(PipelineError::Missing(dir.to_path_buf()));
    }
    let mut logs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    logs.sort();
    if logs.is_empty() {
        return Err(PipelineError::Missing(dir.join("*.jsonl")));
    }
    let manifest = encode_corpus(&logs, window_cycles, dir)?;
    let mut out = vec![dir.join(MANIFEST_FILE)];
    for e in &manifest.entries {
        out.push(dir.join(&e.sequence_path));
        out.push(dir.join(&e.annotations_path));
    }
    Ok(out)
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    if !path.is_file() {
        return Err(PipelineError::Missing(path.to_path_buf()));
    }
    File::open(path).map(BufReader::new).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<File, PipelineError> {
    File::create(path).map_err(|e| PipelineError::io(path, e))
}
