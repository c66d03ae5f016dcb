//! End-to-end tests of the `fixdesc` binary: exit codes, file formats, and
//! determinism of every subcommand over a small synthetic corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_fixdesc");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("GITHUB_TOKEN")
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

fn code_of(output: &Output) -> i32 {
    output.status.code().expect("process exited")
}

fn assert_ok(output: &Output) {
    assert_eq!(code_of(output), 0, "stderr: {}", stderr_of(output));
}

fn write_lines(path: &Path, lines: &[Value]) {
    let text: String = lines.iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).unwrap();
}

fn read_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

// ---------------------------------------------------------------------------
// Fixture corpus
// ---------------------------------------------------------------------------

fn utterance(t: usize, author: &str, ts: i64, sentences: &[&[&str]]) -> Value {
    let mut tokens: Vec<String> = Vec::new();
    let mut spans: Vec<Value> = Vec::new();
    for sent in sentences {
        let start = tokens.len();
        tokens.extend(sent.iter().map(|w| w.to_string()));
        spans.push(json!([start, tokens.len()]));
    }
    json!({"t": t, "author": author, "ts": ts, "tokens": tokens, "sentences": spans})
}

#[allow(clippy::too_many_arguments)]
fn example(
    project: &str,
    issue: u64,
    title: &[&str],
    utterances: Vec<Value>,
    t_g: usize,
    description: &[&str],
    source: &str,
    resolution_ts: i64,
) -> Value {
    json!({
        "id": format!("{project}#{issue}"),
        "project": project,
        "title_tokens": title,
        "utterances": utterances,
        "t_g": t_g,
        "description_tokens": description,
        "description_source": source,
        "resolution_ts": resolution_ts,
    })
}

/// Ten examples over two projects with strictly increasing resolution times,
/// so an 0.8/0.1/0.1 time split lands exactly on 8/1/1.
fn corpus_lines() -> Vec<Value> {
    let mut lines = Vec::new();
    let specs: [(&str, u64, &[&str], &[&str], usize, &str); 10] = [
        (
            "acme/media",
            3,
            &["player", "crashes", "on", "empty", "playlist"],
            &["fix", "queue", "underflow", "on", "empty", "playlist"],
            2,
            "commit_message",
        ),
        (
            "acme/media",
            5,
            &["seek", "bar", "ignores", "keyboard", "input"],
            &["handle", "arrow", "keys", "in", "the", "seek", "bar"],
            1,
            "pr_title",
        ),
        (
            "acme/media",
            8,
            &["subtitles", "drift", "after", "pause"],
            &["resync", "subtitle", "clock", "after", "pause"],
            2,
            "commit_message",
        ),
        (
            "acme/media",
            13,
            &["volume", "slider", "resets", "between", "tracks"],
            &["persist", "volume", "across", "track", "changes"],
            3,
            "commit_message",
        ),
        (
            "acme/media",
            21,
            &["fullscreen", "leaves", "a", "black", "frame"],
            &["clear", "the", "stale", "frame", "on", "fullscreen", "exit"],
            1,
            "pr_title",
        ),
        (
            "acme/media",
            34,
            &["playlist", "import", "drops", "unicode", "names"],
            &["decode", "playlist", "entries", "as", "utf8"],
            2,
            "commit_message",
        ),
        (
            "orbit/server",
            2,
            &["worker", "leaks", "sockets", "under", "load"],
            &["close", "idle", "sockets", "in", "the", "worker", "pool"],
            2,
            "commit_message",
        ),
        (
            "orbit/server",
            7,
            &["config", "reload", "loses", "route", "table"],
            &["rebuild", "routes", "after", "config", "reload"],
            1,
            "commit_message",
        ),
        (
            "orbit/server",
            11,
            &["metrics", "endpoint", "times", "out"],
            &["cache", "metrics", "snapshots", "per", "scrape"],
            2,
            "pr_title",
        ),
        (
            "orbit/server",
            19,
            &["shutdown", "hangs", "on", "open", "streams"],
            &["abort", "open", "streams", "on", "shutdown"],
            3,
            "commit_message",
        ),
    ];
    for (i, (project, issue, title, description, t_g, source)) in specs.iter().enumerate() {
        let base = 1_000 * (i as i64 + 1);
        let total_steps = (*t_g + 1).min(4);
        let mut utterances = Vec::new();
        for t in 1..=total_steps {
            let author = if t % 2 == 1 { "alice" } else { "bob" };
            // First utterance restates the title; later ones narrow it down
            // toward the words of the eventual description.
            let body: Vec<&str> = if t == 1 {
                let mut v = vec!["the"];
                v.extend(title.iter().copied());
                v.extend(["happens", "every", "time"]);
                v
            } else if t == *t_g {
                let mut v = vec!["i", "traced", "it", "down", "to", "this"];
                v.extend(description.iter().copied());
                v
            } else {
                vec!["same", "behavior", "on", "my", "machine", "after", "updating"]
            };
            let half = body.len() / 2;
            utterances.push(utterance(
                t,
                author,
                base + 10 * t as i64,
                &[&body[..half], &body[half..]],
            ));
        }
        lines.push(example(
            project,
            *issue,
            title,
            utterances,
            *t_g,
            description,
            source,
            base + 500,
        ));
    }
    lines
}

/// Writes the fixture corpus and returns its path.
fn make_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.jsonl");
    write_lines(&path, &corpus_lines());
    path
}

fn make_split(dir: &Path, corpus: &Path) -> PathBuf {
    let split = dir.join("split.json");
    let out = run_in(
        dir,
        &["split", "--corpus", corpus.to_str().unwrap(), "--output", split.to_str().unwrap()],
    );
    assert_ok(&out);
    split
}

fn small_bootstrap_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, "[bootstrap]\nsamples = 200\nsize = 50\n").unwrap();
    path
}

// ---------------------------------------------------------------------------
// Usage and exit codes
// ---------------------------------------------------------------------------

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    let help = run_in(dir.path(), &["--help"]);
    assert_eq!(code_of(&help), 0);
    assert!(stdout_of(&help).contains("ingest"));
    let version = run_in(dir.path(), &["--version"]);
    assert_eq!(code_of(&version), 0);
    let sub_help = run_in(dir.path(), &["eval-gen", "--help"]);
    assert_eq!(code_of(&sub_help), 0);
    assert!(stdout_of(&sub_help).contains("--metrics"));
}

#[test]
fn bad_usage_exits_one() {
    let dir = TempDir::new().unwrap();
    let unknown_sub = run_in(dir.path(), &["frobnicate"]);
    assert_eq!(code_of(&unknown_sub), 1);
    assert!(stderr_of(&unknown_sub).contains("Usage"));

    let unknown_flag = run_in(dir.path(), &["stats", "--corpus", "c.jsonl", "--frobnicate"]);
    assert_eq!(code_of(&unknown_flag), 1);
    assert!(stderr_of(&unknown_flag).contains("Usage"));

    let bare = run_in(dir.path(), &[] as &[&str]);
    assert_eq!(code_of(&bare), 1);

    let both_modes = run_in(
        dir.path(),
        &["eval-when", "--pred", "p", "--gold", "g", "--model", "m", "--test", "t"],
    );
    assert_eq!(code_of(&both_modes), 1);
}

#[test]
fn print_stopwords_lists_the_built_in_list() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), &["--print-stopwords"]);
    assert_ok(&out);
    let listing = stdout_of(&out);
    let words: Vec<&str> = listing.lines().map(str::trim).collect();
    assert_eq!(words.len(), 127);
    assert_eq!(words.first(), Some(&"i"));
    assert_eq!(words.last(), Some(&"now"));
    assert!(words.contains(&"because"));
}

#[test]
fn missing_input_exits_two_and_malformed_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let missing = run_in(dir.path(), &["stats", "--corpus", "nowhere.jsonl"]);
    assert_eq!(code_of(&missing), 2, "stderr: {}", stderr_of(&missing));

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": \"broken\"\n").unwrap();
    let malformed = run_in(dir.path(), &["stats", "--corpus", bad.to_str().unwrap()]);
    assert_eq!(code_of(&malformed), 1);
    assert!(stderr_of(&malformed).contains("line 1"));
}

#[test]
fn bad_config_file_exits_one_with_the_offending_key() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());

    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "nwif_threshold = 0.2\n").unwrap();
    let out = run_in(
        dir.path(),
        &["--config", typo.to_str().unwrap(), "stats", "--corpus", corpus.to_str().unwrap()],
    );
    assert_eq!(code_of(&out), 1);
    assert!(stderr_of(&out).contains("nwif_threshold"));

    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, "lexrank_damping = 1.5\n").unwrap();
    let out = run_in(
        dir.path(),
        &["--config", invalid.to_str().unwrap(), "stats", "--corpus", corpus.to_str().unwrap()],
    );
    assert_eq!(code_of(&out), 1);
    assert!(stderr_of(&out).contains("lexrank_damping"));
}

// ---------------------------------------------------------------------------
// Corpus stages
// ---------------------------------------------------------------------------

#[test]
fn split_then_stats_renders_the_table() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let split = make_split(dir.path(), &corpus);

    let split_value = &read_lines(&split)[0];
    assert_eq!(split_value["train"].as_array().unwrap().len(), 8);
    assert_eq!(split_value["valid"].as_array().unwrap().len(), 1);
    assert_eq!(split_value["test"].as_array().unwrap().len(), 1);

    let json_path = dir.path().join("stats.json");
    let out = run_in(
        dir.path(),
        &[
            "stats",
            "--corpus",
            corpus.to_str().unwrap(),
            "--split",
            split.to_str().unwrap(),
            "--json",
            json_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let table = stdout_of(&out);
    assert!(table.contains("Train"), "table was:\n{table}");
    assert!(table.contains("Projects"));
    assert!(table.contains("# Commit messages"));

    let stats: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(stats["full"]["total"]["n_examples"], json!(10));
    assert_eq!(stats["filtered"], Value::Null);
}

#[test]
fn filter_writes_decisions_and_supports_percentile_thresholds() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let split = make_split(dir.path(), &corpus);
    let kept_path = dir.path().join("kept.jsonl");
    let reports_path = dir.path().join("filter_reports.jsonl");

    let out = run_in(
        dir.path(),
        &[
            "filter",
            "--corpus",
            corpus.to_str().unwrap(),
            "--split",
            split.to_str().unwrap(),
            "--output",
            kept_path.to_str().unwrap(),
            "--reports",
            reports_path.to_str().unwrap(),
            "--niwf-percentile",
            "0.10",
        ],
    );
    assert_ok(&out);
    let summary = stdout_of(&out);
    assert!(summary.contains("niwf threshold"));
    assert!(summary.contains("kept"));

    let reports = read_lines(&reports_path);
    assert_eq!(reports.len(), 10, "one decision per example");
    let kept_in_reports: Vec<&str> = reports
        .iter()
        .filter(|r| r["kept"] == json!(true))
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    let kept_ids: Vec<String> =
        read_lines(&kept_path).iter().map(|e| e["id"].as_str().unwrap().to_string()).collect();
    assert_eq!(kept_in_reports, kept_ids);
}

#[test]
fn copy_title_gen_copies_the_title_tokens() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let out_path = dir.path().join("copy.jsonl");
    let out = run_in(
        dir.path(),
        &[
            "gen",
            "--corpus",
            corpus.to_str().unwrap(),
            "--method",
            "copy-title",
            "--output",
            out_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    assert!(stdout_of(&out).contains("copy-title"));

    let outputs = read_lines(&out_path);
    assert_eq!(outputs.len(), 10);
    let originals = corpus_lines();
    for output in &outputs {
        let original = originals
            .iter()
            .find(|e| e["id"] == output["id"])
            .expect("output ids come from the corpus");
        assert_eq!(output["tokens"], original["title_tokens"]);
        assert_eq!(output["generator"], json!("copy-title"));
        assert_eq!(output["at_step"], original["t_g"]);
    }
}

#[test]
fn gen_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let mut bytes = Vec::new();
    for (name, threads) in [("a.jsonl", "1"), ("b.jsonl", "1"), ("c.jsonl", "4")] {
        let path = dir.path().join(name);
        let out = run_in(
            dir.path(),
            &[
                "--threads",
                threads,
                "gen",
                "--corpus",
                corpus.to_str().unwrap(),
                "--method",
                "lexrank",
                "--k",
                "1",
                "--output",
                path.to_str().unwrap(),
            ],
        );
        assert_ok(&out);
        bytes.push(fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "same-thread reruns differ");
    assert_eq!(bytes[0], bytes[2], "thread count changed the output");
}

// ---------------------------------------------------------------------------
// Timing classifier
// ---------------------------------------------------------------------------

#[test]
fn train_then_eval_when_roundtrips_through_files() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let model = dir.path().join("model.bin");

    let trained = run_in(
        dir.path(),
        &[
            "train-when",
            "--train",
            corpus.to_str().unwrap(),
            "--trees",
            "8",
            "--seed",
            "1",
            "--out",
            model.to_str().unwrap(),
        ],
    );
    assert_ok(&trained);
    assert!(stdout_of(&trained).contains("8 trees"));
    assert!(model.exists());

    let preds = dir.path().join("preds.jsonl");
    let json_path = dir.path().join("when.json");
    let evaluated = run_in(
        dir.path(),
        &[
            "eval-when",
            "--model",
            model.to_str().unwrap(),
            "--test",
            corpus.to_str().unwrap(),
            "--out",
            preds.to_str().unwrap(),
            "--name",
            "all",
            "--json",
            json_path.to_str().unwrap(),
        ],
    );
    assert_ok(&evaluated);
    let table = stdout_of(&evaluated);
    assert!(table.contains("t_p = t_g"), "table was:\n{table}");
    assert!(table.contains("Avg lead"));

    let records = read_lines(&preds);
    assert_eq!(records.len(), 10);
    for record in &records {
        let probs = record["probs"].as_array().unwrap();
        assert!(!probs.is_empty());
    }

    // Scoring the written predictions must reproduce the model-mode table.
    let rescored = run_in(
        dir.path(),
        &[
            "eval-when",
            "--pred",
            preds.to_str().unwrap(),
            "--gold",
            corpus.to_str().unwrap(),
            "--name",
            "all",
        ],
    );
    assert_ok(&rescored);
    assert_eq!(stdout_of(&rescored), table);

    let when: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(when["aggregate"]["n"], json!(10));
    assert!(when["by_tg"].is_object());
    assert_eq!(when["significance"], json!({}));
}

// ---------------------------------------------------------------------------
// Generation evaluation
// ---------------------------------------------------------------------------

#[test]
fn eval_gen_scores_compares_and_reports_significance() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let config = small_bootstrap_config(dir.path());

    let copy_a = dir.path().join("copy_a.jsonl");
    let copy_b = dir.path().join("copy_b.jsonl");
    for path in [&copy_a, &copy_b] {
        let out = run_in(
            dir.path(),
            &[
                "gen",
                "--corpus",
                corpus.to_str().unwrap(),
                "--method",
                "copy-title",
                "--output",
                path.to_str().unwrap(),
            ],
        );
        assert_ok(&out);
    }

    let json_path = dir.path().join("gen.json");
    let out = run_in(
        dir.path(),
        &[
            "--config",
            config.to_str().unwrap(),
            "eval-gen",
            "--hyp",
            copy_a.to_str().unwrap(),
            "--ref",
            corpus.to_str().unwrap(),
            "--metrics",
            "bleu4,rougel",
            "--compare",
            copy_b.to_str().unwrap(),
            "--bootstrap",
            "--json",
            json_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("BLEU-4"));
    assert!(text.contains("ROUGE-L"));
    assert!(!text.contains("METEOR"), "unselected metric leaked into:\n{text}");
    // Identical outputs: every comparison is a wash.
    assert!(text.contains("copy_a"), "labels fall back to file stems:\n{text}");
    assert!(text.contains("1.0000"));

    let value: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(value["aggregate"]["copy_a"]["n"], json!(10));
    assert_eq!(value["significance"]["metrics"]["bleu4"]["significant"], json!(false));
    assert_eq!(value["significance"]["metrics"]["bleu4"]["winner"], Value::Null);
    assert!(value["significance"]["metrics"].get("meteor").is_none());
}

#[test]
fn eval_gen_rejects_unknown_ids_and_mismatched_compare_sets() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());

    let stray = dir.path().join("stray.jsonl");
    write_lines(
        &stray,
        &[json!({"id": "ghost/repo#1", "generator": "copy-title", "tokens": ["x"], "at_step": 1})],
    );
    let out = run_in(
        dir.path(),
        &["eval-gen", "--hyp", stray.to_str().unwrap(), "--ref", corpus.to_str().unwrap()],
    );
    assert_eq!(code_of(&out), 1);
    assert!(stderr_of(&out).contains("ghost/repo#1"));

    // A comparison file covering different ids is rejected up front.
    let full = dir.path().join("full.jsonl");
    let partial = dir.path().join("partial.jsonl");
    let originals = corpus_lines();
    let to_output = |e: &Value| {
        json!({
            "id": e["id"],
            "generator": "copy-title",
            "tokens": e["title_tokens"],
            "at_step": e["t_g"],
        })
    };
    write_lines(&full, &originals.iter().map(to_output).collect::<Vec<_>>());
    write_lines(&partial, &originals[..5].iter().map(to_output).collect::<Vec<_>>());
    let out = run_in(
        dir.path(),
        &[
            "eval-gen",
            "--hyp",
            full.to_str().unwrap(),
            "--ref",
            corpus.to_str().unwrap(),
            "--compare",
            partial.to_str().unwrap(),
        ],
    );
    assert_eq!(code_of(&out), 1);
    assert!(stderr_of(&out).contains("same example ids"));
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[test]
fn gold_oracle_pipeline_matches_the_gold_cut_exactly() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let config = small_bootstrap_config(dir.path());
    let out_path = dir.path().join("pipe.jsonl");
    let json_path = dir.path().join("pipe.json");

    let out = run_in(
        dir.path(),
        &[
            "--config",
            config.to_str().unwrap(),
            "pipeline",
            "--corpus",
            corpus.to_str().unwrap(),
            "--classifier",
            "gold_oracle",
            "--method",
            "copy-title",
            "--out",
            out_path.to_str().unwrap(),
            "--json",
            json_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("@t_p"));
    assert!(text.contains("@t_g"));

    let value: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(value["aggregate"]["@t_p"], value["aggregate"]["@t_g"]);
    assert_eq!(value["significance"]["metrics"]["bleu4"]["significant"], json!(false));

    // The flattened records double as timing predictions: the oracle lands on
    // the gold step for every example.
    let rescored = run_in(
        dir.path(),
        &[
            "eval-when",
            "--pred",
            out_path.to_str().unwrap(),
            "--gold",
            corpus.to_str().unwrap(),
        ],
    );
    assert_ok(&rescored);
    let table = stdout_of(&rescored);
    let eq_line = table.lines().find(|l| l.starts_with("t_p = t_g")).unwrap();
    assert!(eq_line.contains("100.0"), "oracle row was: {eq_line}");
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

fn event(kind: &str, actor: &str, ts: i64, text: &str, links: &[u64]) -> Value {
    json!({"kind": kind, "actor": actor, "ts": ts, "text": text, "linked_issues": links})
}

fn timeline_lines() -> Vec<Value> {
    vec![
        json!({
            "project": "acme/media",
            "issue_number": 21,
            "title": "Player crashes when the playlist is empty",
            "labels": ["bug"],
            "state": "closed",
            "events": [
                event("comment", "alice", 100,
                      "The player crashes right away when I open an empty playlist.", &[]),
                event("comment", "bob", 200,
                      "Reproduced here, the queue index underflows on the first advance.", &[]),
                event("commit", "carol", 300,
                      "Fix queue underflow on empty playlist advance", &[21]),
                event("comment", "alice", 400,
                      "Confirmed fixed in the nightly build, thanks.", &[]),
            ],
        }),
        json!({
            "project": "acme/media",
            "issue_number": 22,
            "title": "How do I configure the cache directory",
            "labels": ["question"],
            "state": "closed",
            "events": [
                event("comment", "dave", 150,
                      "Is there a setting to move the cache somewhere else?", &[]),
                event("comment", "erin", 250,
                      "You can point it anywhere with the cache option in the config file.", &[]),
            ],
        }),
    ]
}

#[test]
fn ingest_accepts_bug_timelines_and_records_rejections() {
    let dir = TempDir::new().unwrap();
    let archive = dir.path().join("timelines.jsonl");
    write_lines(&archive, &timeline_lines());

    let corpus = dir.path().join("ingested.jsonl");
    let rejects = dir.path().join("rejects.jsonl");
    let discussions = dir.path().join("discussions.jsonl");
    let out = run_in(
        dir.path(),
        &[
            "ingest",
            "--input",
            archive.to_str().unwrap(),
            "--output",
            corpus.to_str().unwrap(),
            "--rejects",
            rejects.to_str().unwrap(),
            "--discussions",
            discussions.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    assert!(stdout_of(&out).contains("accepted 1 of 2"));

    let examples = read_lines(&corpus);
    assert_eq!(examples.len(), 1);
    assert_eq!(examples[0]["id"], json!("acme/media#21"));
    assert_eq!(examples[0]["t_g"], json!(2));
    assert_eq!(examples[0]["description_source"], json!("commit_message"));

    let rejected = read_lines(&rejects);
    assert_eq!(rejected.len(), 1);
    assert_eq!(rejected[0]["id"], json!("acme/media#22"));
    assert!(rejected[0]["code"].is_string());
    assert!(rejected[0]["detail"].is_string());

    let augmentation = read_lines(&discussions);
    assert_eq!(augmentation.len(), 1);
    assert_eq!(augmentation[0]["id"], json!("acme/media#22"));

    // The ingested example is a valid corpus for the rest of the toolkit.
    let stats = run_in(dir.path(), &["stats", "--corpus", corpus.to_str().unwrap()]);
    assert_ok(&stats);
}

// ---------------------------------------------------------------------------
// Composite report
// ---------------------------------------------------------------------------

#[test]
fn report_renders_all_requested_sections() {
    let dir = TempDir::new().unwrap();
    let corpus = make_corpus(dir.path());
    let split = make_split(dir.path(), &corpus);

    let copy = dir.path().join("copy.jsonl");
    let gen = run_in(
        dir.path(),
        &[
            "gen",
            "--corpus",
            corpus.to_str().unwrap(),
            "--method",
            "copy-title",
            "--output",
            copy.to_str().unwrap(),
        ],
    );
    assert_ok(&gen);

    let preds = dir.path().join("first.jsonl");
    let pipe = run_in(
        dir.path(),
        &[
            "--config",
            small_bootstrap_config(dir.path()).to_str().unwrap(),
            "pipeline",
            "--corpus",
            corpus.to_str().unwrap(),
            "--classifier",
            "first",
            "--method",
            "copy-title",
            "--out",
            preds.to_str().unwrap(),
        ],
    );
    assert_ok(&pipe);

    let json_path = dir.path().join("report.json");
    let preds_arg = format!("first={}", preds.display());
    let out = run_in(
        dir.path(),
        &[
            "report",
            "--corpus",
            corpus.to_str().unwrap(),
            "--split",
            split.to_str().unwrap(),
            "--outputs",
            copy.to_str().unwrap(),
            "--preds",
            &preds_arg,
            "--json",
            json_path.to_str().unwrap(),
        ],
    );
    assert_ok(&out);
    let text = stdout_of(&out);
    assert!(text.contains("== Corpus =="), "report was:\n{text}");
    assert!(text.contains("== Overlap with the discussion =="));
    assert!(text.contains("== Timing accuracy =="));
    assert!(text.contains("U_1..U_t_g only"));
    assert!(text.contains("Reference"));
    assert!(text.contains("Avg lead"));

    // Copying the title overlaps the title fully and adds nothing
    // utterance-exclusive.
    let copy_line = text.lines().find(|l| l.starts_with("copy-title")).unwrap();
    let cells: Vec<&str> = copy_line.split_whitespace().collect();
    assert_eq!(&cells[1..], &["100.0", "100.0", "0.0", "0.0"]);

    let value: Value = serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(value["stats"]["full"]["total"]["n_examples"], json!(10));
    assert_eq!(value["overlap"].as_array().unwrap().len(), 2);
    assert_eq!(value["when"]["first"]["aggregate"]["n"], json!(10));
}
