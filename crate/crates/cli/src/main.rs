//! Command-line front end: one subcommand per pipeline stage plus `pipeline`
//! for the whole run.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seqsoccer::fca::{dependency_matrix, evolve, FcaRuleVector, FuzzyState, Terminal};
use seqsoccer::fmaca::{ca_feedback, FmacaTree};
use seqsoccer::miner::{PatternQuery, PatternReport};
use seqsoccer::pipeline::{
    diagnose_stage, encode_logs, fmaca_stage, lcs_stage, load_corpus, mine_stage, motifs_stage, pipeline_run,
    simulate_matches, write_pattern_csv, write_tandem_csv, LcsEnvKind, PipelineError, RunConfig, Stage, CORPUS_DIR,
    CURVE_FILE, DIAGNOSTICS_FILE, MOTIFS_FILE, PATTERNS_FILE, TANDEM_FILE, TREE_FILE,
};
use seqsoccer::sequence::{encode_match, read_fasta, write_fasta, FastaRecord, SequenceId};
use seqsoccer::sim::{run_match, MatchLog, PolicyKind};

#[derive(Parser, Debug)]
#[command(name = "seqsoccer", version, about = "Simulate, encode, mine and learn from soccer matches")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed. Replaces every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play matches and write their logs.
    Simulate(SimulateArgs),
    /// Turn match logs into game and player sequences.
    Encode(EncodeArgs),
    /// Frequent patterns and tandem runs of player sequences.
    Mine(MineArgs),
    /// Goal and threat motif statistics of an annotated corpus.
    Motifs(MotifsArgs),
    /// Evolve one state under a fuzzy CA.
    FcaRun(FcaRunArgs),
    /// Train the goal/threat classification tree.
    TrainFmaca(TrainFmacaArgs),
    /// Ask a trained tree about a window of action letters.
    Feedback(FeedbackArgs),
    /// Train the classifier system.
    TrainLcs(TrainLcsArgs),
    /// Entropy and mutual information of evolved rule vectors.
    Diagnose(DiagnoseArgs),
    /// Run every configured stage in order.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    matches: Option<usize>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    home_policy: Option<PolicyKind>,
    #[arg(long)]
    away_policy: Option<PolicyKind>,
    /// Write a single match log here instead of filling the corpus directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// A single match log. Without it every log in the corpus is encoded.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, requires = "log")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MineArgs {
    /// Sequence file to mine. Without it the corpus is mined and the motif
    /// table written too.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long)]
    min: Option<usize>,
    #[arg(long)]
    max: Option<usize>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MotifsArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    lookback: Option<usize>,
    #[arg(long)]
    len: Option<usize>,
    /// Extra template to report; repeatable.
    #[arg(long = "template")]
    templates: Vec<String>,
    #[arg(long)]
    wildcard_matches_idle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FcaRunArgs {
    #[arg(long)]
    rules: FcaRuleVector,
    #[arg(long)]
    state: FuzzyState,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args, Debug)]
struct TrainFmacaArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FeedbackArgs {
    #[arg(long)]
    tree: PathBuf,
    /// Recent action letters, oldest first.
    #[arg(long)]
    window: String,
}

#[derive(Args, Debug)]
struct TrainLcsArgs {
    #[arg(long)]
    env: Option<LcsEnvKind>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    ga_period: Option<usize>,
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    /// A rules file, or `random` to evolve vectors on synthetic data.
    #[arg(long)]
    rules: Option<String>,
    /// Lattice sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Stages to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    stages: Vec<Stage>,
}

struct Ctx {
    config: RunConfig,
    verbose: bool,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Ctx> {
        let mut config = match &cli.config {
            Some(p) => RunConfig::read(p).with_context(|| format!("reading config {}", p.display()))?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            config = config.with_master_seed(seed);
        }
        if let Some(dir) = &cli.out_dir {
            config.out_dir = dir.clone();
        }
        Ok(Ctx {
            config: config.resolve(),
            verbose: cli.verbose,
        })
    }

    fn out(&self) -> &Path {
        &self.config.out_dir
    }

    fn corpus(&self, given: Option<&PathBuf>) -> PathBuf {
        given.cloned().unwrap_or_else(|| self.out().join(CORPUS_DIR))
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(self.out()).with_context(|| format!("creating {}", self.out().display()))
    }

    fn wrote(&self, paths: &[PathBuf]) {
        for p in paths {
            self.note(format!("wrote {}", p.display()));
        }
    }
}

fn staged<T>(stage: Stage, r: Result<T, PipelineError>) -> Result<T> {
    r.with_context(|| format!("stage {stage} failed"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut ctx = Ctx::load(&cli)?;
    ctx.config.validate()?;
    match cli.command {
        Command::Simulate(a) => simulate(&mut ctx, a),
        Command::Encode(a) => encode(&mut ctx, a),
        Command::Mine(a) => mine(&mut ctx, a),
        Command::Motifs(a) => motifs(&mut ctx, a),
        Command::FcaRun(a) => fca_run(a),
        Command::TrainFmaca(a) => train_fmaca(&mut ctx, a),
        Command::Feedback(a) => feedback(a),
        Command::TrainLcs(a) => train_lcs(&mut ctx, a),
        Command::Diagnose(a) => diagnose(&mut ctx, a),
        Command::Pipeline(a) => pipeline(&mut ctx, a),
    }
}

fn simulate(ctx: &mut Ctx, a: SimulateArgs) -> Result<()> {
    let s = &mut ctx.config.simulate;
    if let Some(m) = a.matches {
        s.matches = m;
    }
    if let Some(c) = a.cycles {
        s.cycles = c;
    }
    if let Some(p) = a.home_policy {
        s.home_policy = p;
    }
    if let Some(p) = a.away_policy {
        s.away_policy = p;
    }
    let seed = s.seed.unwrap_or(ctx.config.seed);
    if let Some(out) = a.out {
        if a.matches.is_none() {
            s.matches = 1;
        }
        if s.matches != 1 {
            bail!("--out writes one match; got --matches {}", s.matches);
        }
        let field = s.field.clone().with_cycles(s.cycles).with_seed(seed);
        let log = staged(Stage::Simulate, run_match(s.home_policy, s.away_policy, &field).map_err(Into::into))?;
        let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
        log.write_jsonl(BufWriter::new(file))?;
        println!("{} {}-{} {:?}", out.display(), log.score.home, log.score.away, log.outcome);
        return Ok(());
    }
    let dir = ctx.out().join(CORPUS_DIR);
    let paths = staged(Stage::Simulate, simulate_matches(&ctx.config.simulate, seed, &dir))?;
    ctx.wrote(&paths);
    println!("{} match logs in {}", paths.len(), dir.display());
    Ok(())
}

fn encode(ctx: &mut Ctx, a: EncodeArgs) -> Result<()> {
    let window = a.window.unwrap_or(ctx.config.encode.window_cycles);
    let Some(log_path) = a.log else {
        let dir = ctx.out().join(CORPUS_DIR);
        let paths = staged(Stage::Encode, encode_logs(&dir, window))?;
        ctx.wrote(&paths);
        println!("encoded corpus in {}", dir.display());
        return Ok(());
    };
    let file = File::open(&log_path).with_context(|| format!("opening {}", log_path.display()))?;
    let log = MatchLog::read_jsonl(BufReader::new(file))?;
    let (game, players) = encode_match(&log, window)?;
    let game_id = log_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "match".into());
    let mut records = vec![FastaRecord {
        id: SequenceId::Game { game: game_id.clone() },
        letters: game.letters,
    }];
    records.extend(players.into_iter().map(|p| FastaRecord {
        id: SequenceId::Player {
            player: p.player_id,
            game: game_id.clone(),
        },
        letters: p.letters,
    }));
    match a.out {
        Some(out) => {
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_fasta(BufWriter::new(file), &records)?;
            ctx.wrote(&[out]);
        }
        None => write_fasta(std::io::stdout().lock(), &records)?,
    }
    Ok(())
}

fn mine(ctx: &mut Ctx, a: MineArgs) -> Result<()> {
    let m = &mut ctx.config.mine;
    if let Some(v) = a.min {
        m.min_len = v;
    }
    if let Some(v) = a.max {
        m.max_len = v;
    }
    if let Some(v) = a.min_count {
        m.min_count = v;
    }
    let Some(input) = a.input else {
        ctx.ensure_out()?;
        let corpus = ctx.out().join(CORPUS_DIR);
        let paths = staged(Stage::Mine, mine_stage(&corpus, ctx.out(), &ctx.config.mine))?;
        ctx.wrote(&paths);
        return Ok(());
    };
    let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
    let records = read_fasta(BufReader::new(file))?;
    let players: Vec<(String, &str)> = records
        .iter()
        .filter(|r| matches!(r.id, SequenceId::Player { .. }))
        .map(|r| (r.id.to_string(), r.letters.as_str()))
        .collect();
    let query = PatternQuery::new(m.min_len, m.max_len)?;
    let report = PatternReport::build(players.iter().map(|(id, s)| (id.as_str(), *s)), query, m.min_count);
    let out = a.out.unwrap_or_else(|| ctx.out().join(PATTERNS_FILE));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let tandem = out.with_file_name(TANDEM_FILE);
    write_pattern_csv(&out, &report.rows)?;
    write_tandem_csv(&tandem, &report.tandem_runs)?;
    ctx.wrote(&[out.clone(), tandem]);
    for (pattern, count) in report.totals().into_iter().take(10) {
        println!("{pattern}\t{count}");
    }
    Ok(())
}

fn motifs(ctx: &mut Ctx, a: MotifsArgs) -> Result<()> {
    let m = &mut ctx.config.mine;
    if let Some(v) = a.lookback {
        m.lookback = v;
    }
    if let Some(v) = a.len {
        m.motif_len = v;
    }
    m.templates.extend(a.templates);
    m.wildcard_matches_idle |= a.wildcard_matches_idle;
    let corpus_dir = ctx.corpus(a.corpus.as_ref());
    let corpus = staged(Stage::Mine, load_corpus(&corpus_dir))?;
    let out = a.out.unwrap_or_else(|| ctx.out().join(MOTIFS_FILE));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let paths = staged(Stage::Mine, motifs_stage(&corpus, &out, &ctx.config.mine))?;
    ctx.wrote(&paths);
    print!("{}", fs::read_to_string(&out)?);
    Ok(())
}

fn fca_run(a: FcaRunArgs) -> Result<()> {
    let t = evolve(&a.state, &a.rules, a.steps, a.tolerance)?;
    for (i, s) in t.states.iter().enumerate() {
        println!("P({i}) = {s}");
    }
    match t.terminal {
        Terminal::FixedPoint { index } => println!("fixed point at step {index}"),
        Terminal::Cycle { start, period } => println!("cycle of period {period} from step {start}"),
        Terminal::Truncated { max_steps } => println!("no attractor within {max_steps} steps"),
    }
    println!("dependency matrix:");
    for row in dependency_matrix(&a.rules).row_strings() {
        println!("  {row}");
    }
    Ok(())
}

fn train_fmaca(ctx: &mut Ctx, a: TrainFmacaArgs) -> Result<()> {
    let f = &mut ctx.config.fmaca;
    if let Some(k) = a.k {
        f.classes = k;
    }
    if let Some(w) = a.window {
        f.window = w;
    }
    ctx.config.validate()?;
    let corpus = ctx.corpus(a.corpus.as_ref());
    let out = match a.out {
        Some(p) => p,
        None => {
            ctx.ensure_out()?;
            ctx.out().join(TREE_FILE)
        }
    };
    let paths = staged(Stage::TrainFmaca, fmaca_stage(&corpus, &out, &ctx.config.fmaca))?;
    ctx.wrote(&paths);
    let tree = FmacaTree::read_json(BufReader::new(File::open(&out)?))?;
    println!(
        "tree: depth {} with {} leaves over windows of {}",
        tree.root.depth(),
        tree.root.leaf_count(),
        tree.dimension
    );
    Ok(())
}

fn feedback(a: FeedbackArgs) -> Result<()> {
    let file = File::open(&a.tree).with_context(|| format!("opening {}", a.tree.display()))?;
    let tree = FmacaTree::read_json(BufReader::new(file))?;
    let fb = ca_feedback(&tree, &a.window)?;
    let advice = match fb.advice {
        seqsoccer::sim::ShotAdvice::Proceed => "proceed",
        seqsoccer::sim::ShotAdvice::Veto => "veto",
    };
    if fb.flagged {
        println!("{advice} (flagged)");
    } else {
        println!("{advice}");
    }
    Ok(())
}

fn train_lcs(ctx: &mut Ctx, a: TrainLcsArgs) -> Result<()> {
    let l = &mut ctx.config.lcs;
    if let Some(env) = a.env {
        l.env = env;
    }
    if let Some(n) = a.iters {
        l.lcs.max_iterations = n;
    }
    if let Some(p) = a.ga_period {
        l.lcs.ga_period = p;
    }
    ctx.config.validate()?;
    ctx.ensure_out()?;
    let corpus = ctx.corpus(a.corpus.as_ref());
    let paths = staged(Stage::TrainLcs, lcs_stage(&corpus, ctx.out(), &ctx.config.lcs))?;
    ctx.wrote(&paths);
    let curve = seqsoccer::lcs::read_curve_csv(BufReader::new(File::open(ctx.out().join(CURVE_FILE))?))?;
    if let Some(&(it, p)) = curve.samples.last() {
        println!("proportion correct {p:.3} at iteration {it}");
    }
    Ok(())
}

fn diagnose(ctx: &mut Ctx, a: DiagnoseArgs) -> Result<()> {
    let d = &mut ctx.config.diagnose;
    match a.rules.as_deref() {
        None | Some("random") => d.rules_file = None,
        Some(path) => d.rules_file = Some(PathBuf::from(path)),
    }
    if !a.n.is_empty() {
        d.dimensions = a.n;
    }
    let out = match a.out {
        Some(p) => p,
        None => {
            ctx.ensure_out()?;
            ctx.out().join(DIAGNOSTICS_FILE)
        }
    };
    let paths = staged(Stage::Diagnose, diagnose_stage(&out, &ctx.config.diagnose))?;
    ctx.wrote(&paths);
    print!("{}", fs::read_to_string(&out)?);
    Ok(())
}

fn pipeline(ctx: &mut Ctx, a: PipelineArgs) -> Result<()> {
    if !a.stages.is_empty() {
        ctx.config.stages = a.stages;
    }
    let report = pipeline_run(&ctx.config)?;
    ctx.wrote(&report.artifacts);
    println!("{} artifacts in {}", report.artifacts.len(), ctx.out().display());
    Ok(())
}
