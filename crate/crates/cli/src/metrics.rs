//! Per-update metrics, written as CSV and mirrored as JSON lines.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

/// One row per update. Non-finite values are written as empty cells (CSV) or
/// `null` (JSON).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    pub loss: f64,
    pub mean_return: f64,
    pub rollout_recall: f64,
    /// One entry per evaluation length, `None` when no evaluation ran.
    pub eval_f1: Vec<Option<f64>>,
    pub lr: f64,
    pub alpha: f64,
    pub grad_norm: f64,
    pub wallclock: f64,
}

fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => v.to_string(),
        _ => String::new(),
    }
}

fn num(x: Option<f64>) -> Value {
    match x {
        Some(v) if v.is_finite() => json!(v),
        _ => Value::Null,
    }
}

pub fn header(labels: &[String]) -> Vec<String> {
    let mut h: Vec<String> = ["step", "loss", "mean_return", "rollout_recall"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(labels.iter().map(|l| format!("eval_f1_{l}")));
    h.extend(["lr", "alpha", "grad_norm", "wallclock"].iter().map(|s| s.to_string()));
    h
}

impl MetricsRow {
    fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.step.to_string(),
            cell(Some(self.loss)),
            cell(Some(self.mean_return)),
            cell(Some(self.rollout_recall)),
        ];
        r.extend(self.eval_f1.iter().map(|&x| cell(x)));
        r.extend([
            cell(Some(self.lr)),
            cell(Some(self.alpha)),
            cell(Some(self.grad_norm)),
            cell(Some(self.wallclock)),
        ]);
        r
    }

    fn json(&self, labels: &[String]) -> Value {
        let mut m = Map::new();
        m.insert("step".into(), json!(self.step));
        m.insert("loss".into(), num(Some(self.loss)));
        m.insert("mean_return".into(), num(Some(self.mean_return)));
        m.insert("rollout_recall".into(), num(Some(self.rollout_recall)));
        for (l, &x) in labels.iter().zip(&self.eval_f1) {
            m.insert(format!("eval_f1_{l}"), num(x));
        }
        m.insert("lr".into(), num(Some(self.lr)));
        m.insert("alpha".into(), num(Some(self.alpha)));
        m.insert("grad_norm".into(), num(Some(self.grad_norm)));
        m.insert("wallclock".into(), num(Some(self.wallclock)));
        Value::Object(m)
    }
}

pub struct MetricsWriter {
    labels: Vec<String>,
    csv: csv::Writer<File>,
    jsonl: BufWriter<File>,
}

impl MetricsWriter {
    pub fn csv_path(dir: &Path) -> PathBuf {
        dir.join("metrics.csv")
    }

    pub fn jsonl_path(dir: &Path) -> PathBuf {
        dir.join("metrics.jsonl")
    }

    /// Starts fresh files in `dir`.
    pub fn create(dir: &Path, labels: Vec<String>) -> anyhow::Result<Self> {
        let mut csv = csv::Writer::from_writer(File::create(Self::csv_path(dir))?);
        csv.write_record(header(&labels))?;
        csv.flush()?;
        let jsonl = BufWriter::new(File::create(Self::jsonl_path(dir))?);
        Ok(Self { labels, csv, jsonl })
    }

    /// Reopens existing files, dropping rows with `step >= keep_below`.
    /// Returns the writer and the wallclock of the last kept row.
    pub fn resume(dir: &Path, labels: Vec<String>, keep_below: u64) -> anyhow::Result<(Self, f64)> {
        let csv_path = Self::csv_path(dir);
        let mut kept = Vec::new();
        let mut wall = 0.0;
        if csv_path.exists() {
            let mut rdr = csv::Reader::from_path(&csv_path)?;
            let h = rdr.headers()?.clone();
            if h.iter().collect::<Vec<_>>() != header(&labels) {
                anyhow::bail!("{} has different columns than this run", csv_path.display());
            }
            let wall_col = h.len() - 1;
            for rec in rdr.records() {
                let rec = rec?;
                let step: u64 = rec[0].parse()?;
                if step < keep_below {
                    wall = rec[wall_col].parse().unwrap_or(wall);
                    kept.push(rec);
                }
            }
        }
        let mut csv = csv::Writer::from_writer(File::create(&csv_path)?);
        csv.write_record(header(&labels))?;
        for rec in &kept {
            csv.write_record(rec)?;
        }
        csv.flush()?;

        let jsonl_path = Self::jsonl_path(dir);
        let mut lines = Vec::new();
        if jsonl_path.exists() {
            for line in BufReader::new(File::open(&jsonl_path)?).lines() {
                let line = line?;
                let v: Value = serde_json::from_str(&line)?;
                if v["step"].as_u64().is_some_and(|s| s < keep_below) {
                    lines.push(line);
                }
            }
        }
        let mut jsonl = BufWriter::new(
            OpenOptions::new()
                .write(true)
                .create(true)
                .truncate(true)
                .open(&jsonl_path)?,
        );
        for l in lines {
            writeln!(jsonl, "{l}")?;
        }
        Ok((Self { labels, csv, jsonl }, wall))
    }

    pub fn write(&mut self, row: &MetricsRow) -> anyhow::Result<()> {
        debug_assert_eq!(row.eval_f1.len(), self.labels.len());
        self.csv.write_record(row.record())?;
        serde_json::to_writer(&mut self.jsonl, &row.json(&self.labels))?;
        writeln!(self.jsonl)?;
        Ok(())
    }

    pub fn flush(&mut self) -> anyhow::Result<()> {
        self.csv.flush()?;
        self.jsonl.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, f1: Option<f64>) -> MetricsRow {
        MetricsRow {
            step,
            loss: 0.5,
            mean_return: 0.25,
            rollout_recall: 0.5,
            eval_f1: vec![f1],
            lr: 1e-3,
            alpha: f64::NAN,
            grad_norm: 1.0,
            wallclock: step as f64,
        }
    }

    #[test]
    fn nulls_and_column_order() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec!["64".to_string()];
        let mut w = MetricsWriter::create(dir.path(), labels.clone()).unwrap();
        w.write(&row(0, None)).unwrap();
        w.write(&row(1, Some(0.75))).unwrap();
        w.flush().unwrap();
        let text = std::fs::read_to_string(MetricsWriter::csv_path(dir.path())).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "step,loss,mean_return,rollout_recall,eval_f1_64,lr,alpha,grad_norm,wallclock"
        );
        assert_eq!(lines[1], "0,0.5,0.25,0.5,,0.001,,1,0");
        assert_eq!(lines[2], "1,0.5,0.25,0.5,0.75,0.001,,1,1");
        let j = std::fs::read_to_string(MetricsWriter::jsonl_path(dir.path())).unwrap();
        let first: Value = serde_json::from_str(j.lines().next().unwrap()).unwrap();
        assert!(first["eval_f1_64"].is_null());
        assert!(first["alpha"].is_null());
    }

    #[test]
    fn resume_drops_later_rows() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec!["64".to_string()];
        let mut w = MetricsWriter::create(dir.path(), labels.clone()).unwrap();
        for s in 0..5 {
            w.write(&row(s, None)).unwrap();
        }
        w.flush().unwrap();
        drop(w);
        let (mut w, wall) = MetricsWriter::resume(dir.path(), labels, 3).unwrap();
        assert_eq!(wall, 2.0);
        w.write(&row(3, None)).unwrap();
        w.flush().unwrap();
        let text = std::fs::read_to_string(MetricsWriter::csv_path(dir.path())).unwrap();
        assert_eq!(text.lines().count(), 5);
        let j = std::fs::read_to_string(MetricsWriter::jsonl_path(dir.path())).unwrap();
        assert_eq!(j.lines().count(), 4);
    }
}
