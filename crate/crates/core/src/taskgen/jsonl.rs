//! One instance per line:
//! `{"id", "query", "chunks", "support_idx" (1-based), "answer"}`.
//! Unknown fields are kept in `TaskInstance::extra` and written back out.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::TaskInstance;
use crate::error::{Error, Result};
use crate::train::TaskSource;

#[derive(Serialize, Deserialize)]
struct Record {
    id: String,
    query: String,
    chunks: Vec<String>,
    support_idx: Vec<usize>,
    answer: String,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

fn parse_line(text: &str, line: usize) -> Result<TaskInstance> {
    let rec: Record = serde_json::from_str(text).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })?;
    let validation = |msg: String| Error::Validation { line, msg };
    if rec.chunks.is_empty() {
        return Err(validation("record has no chunks".into()));
    }
    let m = rec.chunks.len();
    if let Some(bad) = rec.support_idx.iter().find(|&&i| i == 0 || i > m) {
        return Err(validation(format!("support index {bad} outside 1..={m}")));
    }
    let mut inst = TaskInstance::new(rec.id, rec.query, rec.chunks, rec.support_idx, rec.answer)
        .map_err(|e| validation(e.to_string()))?;
    inst.extra = rec.extra;
    Ok(inst)
}

/// Reads instances from a reader. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<TaskInstance>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_text = line?;
        if line_text.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line_text, i + 1)?);
    }
    Ok(out)
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<TaskInstance>> {
    read_jsonl(BufReader::new(File::open(path)?))
}

/// The canonical single-line encoding of an instance.
pub fn to_json_line(inst: &TaskInstance) -> Result<String> {
    let rec = Record {
        id: inst.id.clone(),
        query: inst.query.clone(),
        chunks: inst.context.iter().map(|c| c.text.clone()).collect(),
        support_idx: inst.support_ids.iter().copied().collect(),
        answer: inst.answer.clone(),
        extra: inst.extra.clone(),
    };
    Ok(serde_json::to_string(&rec)?)
}

pub fn write_jsonl<W: Write>(writer: W, instances: &[TaskInstance]) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for inst in instances {
        writeln!(w, "{}", to_json_line(inst)?)?;
    }
    w.flush()?;
    Ok(())
}

/// Serves a fixed list of instances; seeds pick an instance uniformly.
#[derive(Debug, Clone)]
pub struct JsonlSource {
    pub instances: Vec<TaskInstance>,
}

impl JsonlSource {
    pub fn new(instances: Vec<TaskInstance>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::Config("dataset is empty".into()));
        }
        Ok(Self { instances })
    }
}

impl TaskSource for JsonlSource {
    fn instance(&self, seed: u64) -> Result<TaskInstance> {
        Ok(self.instances[(seed % self.instances.len() as u64) as usize].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO: &str = concat!(
        r#"{"id":"a","query":"q1","chunks":["x","y","z"],"support_idx":[1,3],"answer":"y"}"#,
        "\n",
        r#"{"id":"b","query":"q2","chunks":["p"],"support_idx":[1],"answer":"p","source":"web"}"#,
        "\n"
    );

    #[test]
    fn reads_two_records() {
        let insts = read_jsonl(TWO.as_bytes()).unwrap();
        assert_eq!(insts.len(), 2);
        assert_eq!(insts[0].num_chunks(), 3);
        assert_eq!(insts[0].chunk(3).unwrap().text, "z");
        assert!(insts[0].chunk(1).unwrap().is_support);
        assert_eq!(insts[1].extra["source"], "web");
    }

    #[test]
    fn out_of_range_support_names_the_line() {
        let text = format!(
            "{}\n{}\n",
            r#"{"id":"a","query":"q","chunks":["x"],"support_idx":[1],"answer":""}"#,
            r#"{"id":"b","query":"q","chunks":["x","y","z"],"support_idx":[5],"answer":""}"#
        );
        match read_jsonl(text.as_bytes()) {
            Err(Error::Validation { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains('5'));
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let text = r#"{"id":"a","chunks":["x"],"support_idx":[1],"answer":""}"#;
        match read_jsonl(text.as_bytes()) {
            Err(Error::Parse { line: 1, msg }) => assert!(msg.contains("query")),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn canonical_files_round_trip() {
        let insts = read_jsonl(TWO.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &insts).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), TWO);
    }
}
