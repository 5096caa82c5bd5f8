use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqsoccer"))
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.json")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn pipeline_smoke_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke_config();
    let o = run(
        &["--config", cfg.to_str().unwrap(), "--out-dir", "out", "pipeline"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in [
        "corpus/manifest.json",
        "corpus/match_000.jsonl",
        "corpus/match_000.fasta",
        "corpus/match_000.annotations.json",
        "patterns.csv",
        "tandem_runs.csv",
        "motifs.csv",
        "tree.json",
        "lcs_population.csv",
        "lcs_curve.csv",
        "diagnostics.csv",
        "resolved_config.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn missing_corpus_names_mine_stage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out-dir", "nowhere", "pipeline", "--stages", "mine"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("mine"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema_version":1,"sede":4}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "pipeline"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sede"), "{}", stderr(&o));
}

#[test]
fn config_schema_mismatch_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("old.json");
    std::fs::write(&cfg, r#"{"schema_version":7}"#).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "pipeline"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("schema"), "{}", stderr(&o));
}

#[test]
fn fca_run_prints_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["fca-run", "--rules", "238,254,238,252", "--state", "0.8,0.2,0.2,0.0", "--steps", "10"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("P(1) = (1.00, 1.00, 0.20, 0.20)"), "{text}");
    assert!(text.contains("P(4) = (1.00, 1.00, 1.00, 1.00)"), "{text}");
    assert!(text.contains("fixed point"));
    assert!(text.contains("1110"));
}

#[test]
fn simulate_encode_mine_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(
        &["--seed", "3", "simulate", "--cycles", "300", "--home-policy", "chaser", "--away-policy", "null", "--out", "m.jsonl"],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["encode", "--log", "m.jsonl", "--window", "5", "--out", "m.fasta"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let fasta = std::fs::read_to_string(p.join("m.fasta")).unwrap();
    assert!(fasta.starts_with(";schema_version=1\n>game:m\n"));
    let o = run(&["mine", "--in", "m.fasta", "--min", "2", "--max", "4", "--out", "pat.csv"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(p.join("pat.csv")).unwrap();
    assert!(csv.starts_with("#schema_version,1\npattern,occurrences,sequence_id\n"));
    assert!(p.join("tandem_runs.csv").is_file());
}

#[test]
fn same_seed_same_log() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for name in ["a.jsonl", "b.jsonl"] {
        let o = run(&["--seed", "9", "simulate", "--cycles", "150", "--out", name], p);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(p.join("a.jsonl")).unwrap(), std::fs::read(p.join("b.jsonl")).unwrap());
}

#[test]
fn train_and_query_tree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = smoke_config();
    let cfg = cfg.to_str().unwrap();
    let o = run(&["--config", cfg, "--out-dir", "o", "pipeline", "--stages", "simulate,encode"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(
        &["--config", cfg, "--out-dir", "o", "--seed", "7", "train-fmaca", "--k", "2", "--window", "5", "--out", "tree.json"],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["feedback", "--tree", "tree.json", "--window", "TCCCT"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let verdict = stdout(&o);
    assert!(verdict.starts_with("proceed") || verdict.starts_with("veto"), "{verdict}");
    let o = run(&["feedback", "--tree", "tree.json", "--window", "TC"], p);
    assert_eq!(stdout(&o).trim(), "proceed (flagged)");
}

#[test]
fn train_lcs_oracle_and_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = run(
        &["--out-dir", "o", "--seed", "11", "train-lcs", "--env", "oracle", "--iters", "8000", "--ga-period", "4000"],
        p,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(p.join("o/lcs_curve.csv").is_file());
    assert!(p.join("o/lcs_population.csv").is_file());

    std::fs::write(p.join("rules.txt"), "# worked example\n238,254,238,252\n").unwrap();
    let o = run(&["diagnose", "--rules", "rules.txt", "--out", "d.csv"], p);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(p.join("d.csv")).unwrap();
    assert!(csv.contains("generation,n,mean_entropy,std_entropy,mean_mi"));
    assert!(csv.lines().any(|l| l.starts_with("0,4,")));
}

#[test]
fn bad_subcommand_input_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["fca-run", "--rules", "238,999", "--state", "0.1,0.2"], dir.path());
    assert!(!o.status.success());
    let o = run(&["feedback", "--tree", "absent.json", "--window", "ACGT"], dir.path());
    assert!(!o.status.success());
}
