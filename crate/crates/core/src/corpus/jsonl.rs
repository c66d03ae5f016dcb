//! Line-delimited JSON persistence for corpus records.
//!
//! One record per line, fixed field names, validated on the way in. Errors
//! carry the file path and (for per-line failures) the 1-based line number,
//! and distinguish malformed JSON from well-formed records that violate a
//! type invariant.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use super::{CorpusSplit, Example, FilterReport, GeneratorOutput, RawTimeline, WhenPrediction};

/// Errors from reading or writing corpus files.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: parse error: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}:{line}: validation error: {invariant}")]
    Validation { path: PathBuf, line: usize, invariant: String },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("record {index} not serializable: {message}")]
    Serialize { index: usize, message: String },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// A record kind that lives in JSONL files. `unique_id` returns the key that
/// must be unique within one file, for kinds that have one.
pub trait JsonlRecord: Serialize + DeserializeOwned {
    fn unique_id(&self) -> Option<&str> {
        None
    }
}

impl JsonlRecord for Example {
    fn unique_id(&self) -> Option<&str> {
        Some(self.id())
    }
}

impl JsonlRecord for FilterReport {
    fn unique_id(&self) -> Option<&str> {
        Some(self.id())
    }
}

impl JsonlRecord for WhenPrediction {
    fn unique_id(&self) -> Option<&str> {
        Some(self.id())
    }
}

impl JsonlRecord for RawTimeline {}
impl JsonlRecord for CorpusSplit {}
impl JsonlRecord for GeneratorOutput {}

/// Writes records one JSON object per line; returns the number written.
pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<usize, CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for (index, record) in records.iter().enumerate() {
        let line = serde_json::to_string(record)
            .map_err(|e| CorpusError::Serialize { index, message: e.to_string() })?;
        out.write_all(line.as_bytes()).map_err(|e| CorpusError::io(path, e))?;
        out.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))?;
    Ok(records.len())
}

/// Reads and validates records. Malformed lines report a parse error; lines
/// that parse but violate a type invariant report the invariant; duplicate
/// ids (for keyed record kinds) are rejected. All errors carry line numbers.
pub fn read_jsonl<T: JsonlRecord>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen_ids: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            return Err(CorpusError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "blank line".into(),
            });
        }
        let record: T = serde_json::from_str(&line).map_err(|e| classify(path, line_no, &e))?;
        if let Some(id) = record.unique_id() {
            if seen_ids.insert(id.to_string(), line_no).is_some() {
                return Err(CorpusError::DuplicateId {
                    path: path.to_path_buf(),
                    line: line_no,
                    id: id.to_string(),
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Splits serde errors into "bad JSON" and "valid JSON, bad value". Invariant
/// failures surface through serde as custom data errors carrying the
/// `ValidationError` display text, which we recognize by its prefix.
fn classify(path: &Path, line: usize, err: &serde_json::Error) -> CorpusError {
    let msg = err.to_string();
    if let Some(rest) = msg.strip_prefix("invariant violated: ") {
        // serde_json appends " at line 1 column N" to custom messages.
        let invariant = match rest.rfind(" at line ") {
            Some(cut) => &rest[..cut],
            None => rest,
        };
        return CorpusError::Validation {
            path: path.to_path_buf(),
            line,
            invariant: invariant.to_string(),
        };
    }
    CorpusError::Parse { path: path.to_path_buf(), line, message: msg }
}

/// Reads a corpus of examples (unique ids enforced by `read_jsonl`).
pub fn read_examples(path: &Path) -> Result<Vec<Example>, CorpusError> {
    read_jsonl(path)
}

/// Reads the single split record a split file is expected to hold.
pub fn read_split(path: &Path) -> Result<CorpusSplit, CorpusError> {
    let mut records: Vec<CorpusSplit> = read_jsonl(path)?;
    match records.len() {
        1 => Ok(records.pop().expect("checked length")),
        n => Err(CorpusError::Parse {
            path: path.to_path_buf(),
            line: n.max(1),
            message: format!("expected exactly one split record, found {n}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DescriptionSource, Event, EventKind, IssueState, Utterance};

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    fn example(id: &str, project: &str) -> Example {
        Example::new(
            id,
            project,
            toks(&["black", "screen"]),
            vec![
                Utterance::new(1, "alice", 10, toks(&["it", "fails", "."]), vec![(0, 3)]).unwrap(),
                Utterance::new(
                    2,
                    "bob",
                    20,
                    toks(&["seek", "error", ".", "fixed", "now", "."]),
                    vec![(0, 3), (3, 6)],
                )
                .unwrap(),
            ],
            2,
            toks(&["fix", "seek"]),
            DescriptionSource::CommitMessage,
            100,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_examples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let records = vec![example("p#1", "p"), example("p#2", "p"), example("q#9", "q")];
        let written = write_jsonl(&records, &path).unwrap();
        assert_eq!(written, 3);
        let back: Vec<Example> = read_jsonl(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn empty_write_yields_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        let written = write_jsonl::<Example>(&[], &path).unwrap();
        assert_eq!(written, 0);
        assert_eq!(std::fs::read(&path).unwrap(), b"");
        let back: Vec<Example> = read_jsonl(&path).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn multiline_event_text_stays_on_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("timelines.jsonl");
        let timeline = RawTimeline::new(
            "acme/player",
            7,
            "Crash on seek",
            vec!["bug".into()],
            IssueState::Closed,
            vec![Event::new(
                EventKind::Comment,
                "alice",
                10,
                "first line\nsecond line",
                vec![],
            )
            .unwrap()],
        )
        .unwrap();
        write_jsonl(&[timeline.clone()], &path).unwrap();

        let contents = std::fs::read_to_string(&path).unwrap();
        assert_eq!(contents.lines().count(), 1, "newline must be escaped inside the record");
        // An independent parse of the line sees the original text.
        let value: serde_json::Value = serde_json::from_str(contents.trim_end()).unwrap();
        assert_eq!(value["events"][0]["text"], "first line\nsecond line");

        let back: Vec<RawTimeline> = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![timeline]);
    }

    #[test]
    fn invariant_violation_reports_line_and_invariant() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = serde_json::to_string(&example("p#1", "p")).unwrap();
        // Hand-built line with t_g = 5 but only 2 utterances: unconstructable
        // through the API, so it must be caught on read.
        let bad = good.replace("\"t_g\":2", "\"t_g\":5");
        std::fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        let err = read_jsonl::<Example>(&path).unwrap_err();
        match err {
            CorpusError::Validation { line, invariant, .. } => {
                assert_eq!(line, 2);
                assert_eq!(invariant, "t_g ≤ T");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_final_line_reports_parse_error_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truncated.jsonl");
        let a = serde_json::to_string(&example("p#1", "p")).unwrap();
        let b = serde_json::to_string(&example("p#2", "p")).unwrap();
        let mut contents = format!("{a}\n{b}");
        contents.truncate(contents.len() - 10);
        std::fs::write(&path, contents).unwrap();
        let err = read_jsonl::<Example>(&path).unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_rejected_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.jsonl");
        write_jsonl(&[example("p#1", "p"), example("p#2", "p"), example("p#1", "p")], &path)
            .unwrap();
        let err = read_jsonl::<Example>(&path).unwrap_err();
        match err {
            CorpusError::DuplicateId { line, id, .. } => {
                assert_eq!(line, 3);
                assert_eq!(id, "p#1");
            }
            other => panic!("expected duplicate id error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error_with_path() {
        let err = read_jsonl::<Example>(Path::new("/nonexistent/nope.jsonl")).unwrap_err();
        match err {
            CorpusError::Io { path, .. } => {
                assert_eq!(path, Path::new("/nonexistent/nope.jsonl"))
            }
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
