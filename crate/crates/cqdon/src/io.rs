//! On-disk artifacts: datasets (CSV plus JSON sidecar), ensemble checkpoints,
//! calibrations, loss traces and metrics tables.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cqdon_core::conformal::Calibration;
use cqdon_core::data::{OperatorDataset, Scenario, Split};
use cqdon_core::datagen::TaskSpec;
use cqdon_core::ensemble::Ensemble;
use cqdon_core::operator::{ModelSpec, TraceRow};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Sidecar metadata of a saved dataset. The numeric payload lives in three CSV
/// files next to it: `<stem>.inputs.csv`, `<stem>.queries.csv`, `<stem>.targets.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format_version: u32,
    pub task: String,
    pub seed: u64,
    /// Generator parameters, absent for datasets built elsewhere.
    pub params: Option<TaskSpec>,
    pub branch_dim: usize,
    pub query_dim: usize,
    pub pool_len: usize,
    pub scenarios: usize,
    pub points: usize,
    pub splits: SplitCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub cal: usize,
    pub test: usize,
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}.csv"))
}

/// Shortest text that parses back to the same `f64`.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| HarnessError::format(path, format!("not a number: `{s}`")))
}

fn parse_usize(path: &Path, s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| HarnessError::format(path, format!("not a non-negative integer: `{s}`")))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new().flexible(false).from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    if !path.exists() {
        return Err(HarnessError::format(path, "file is missing"));
    }
    csv::ReaderBuilder::new().from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::format(path, format!("{other:?}")),
    }
}

pub fn save_dataset(ds: &OperatorDataset, seed: u64, params: Option<&TaskSpec>, path: &Path) -> Result<DatasetMeta> {
    ds.validate()?;
    let meta = DatasetMeta {
        format_version: FORMAT_VERSION,
        task: ds.task.clone(),
        seed,
        params: params.cloned(),
        branch_dim: ds.branch_dim,
        query_dim: ds.query_dim,
        pool_len: ds.pool_len(),
        scenarios: ds.scenarios.len(),
        points: ds.scenarios.iter().map(|s| s.targets.len()).sum(),
        splits: SplitCounts { train: ds.count(Split::Train), cal: ds.count(Split::Cal), test: ds.count(Split::Test) },
    };

    let p = sibling(path, "inputs");
    let mut w = csv_writer(&p)?;
    let mut header = vec!["scenario".to_string(), "split".to_string()];
    header.extend((0..ds.branch_dim).map(|j| format!("u{j}")));
    w.write_record(&header).map_err(|e| csv_err(&p, e))?;
    for (i, s) in ds.scenarios.iter().enumerate() {
        let mut rec = vec![i.to_string(), s.split.name().to_string()];
        rec.extend(s.u.iter().map(|&v| fmt(v)));
        w.write_record(&rec).map_err(|e| csv_err(&p, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&p, e))?;

    let p = sibling(path, "queries");
    let mut w = csv_writer(&p)?;
    let mut header = vec!["query".to_string()];
    header.extend((0..ds.query_dim).map(|j| format!("y{j}")));
    w.write_record(&header).map_err(|e| csv_err(&p, e))?;
    for k in 0..ds.pool_len() {
        let mut rec = vec![k.to_string()];
        rec.extend(ds.query(k).iter().map(|&v| fmt(v)));
        w.write_record(&rec).map_err(|e| csv_err(&p, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(&p, e))?;

    let p = sibling(path, "targets");
    let mut w = csv_writer(&p)?;
    w.write_record(["scenario", "query", "target"]).map_err(|e| csv_err(&p, e))?;
    for (i, s) in ds.scenarios.iter().enumerate() {
        for (&q, &t) in s.queries.iter().zip(&s.targets) {
            w.write_record([i.to_string(), q.to_string(), fmt(t)]).map_err(|e| csv_err(&p, e))?;
        }
    }
    w.flush().map_err(|e| HarnessError::io(&p, e))?;

    save_json(path, &meta)?;
    Ok(meta)
}

pub fn load_dataset(path: &Path) -> Result<(OperatorDataset, DatasetMeta)> {
    let meta: DatasetMeta = load_json(path)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(HarnessError::format(path, format!("format version {} (expected {FORMAT_VERSION})", meta.format_version)));
    }

    let p = sibling(path, "inputs");
    let mut scenarios = Vec::with_capacity(meta.scenarios);
    for (i, rec) in csv_reader(&p)?.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&p, e))?;
        if rec.len() != meta.branch_dim + 2 || parse_usize(&p, &rec[0])? != i {
            return Err(HarnessError::format(&p, format!("malformed row {i}")));
        }
        let split = match &rec[1] {
            "train" => Split::Train,
            "cal" => Split::Cal,
            "test" => Split::Test,
            other => return Err(HarnessError::format(&p, format!("unknown split `{other}` in row {i}"))),
        };
        let u = rec.iter().skip(2).map(|s| parse_f64(&p, s)).collect::<Result<Vec<_>>>()?;
        scenarios.push(Scenario { u, queries: Vec::new(), targets: Vec::new(), split });
    }

    let p = sibling(path, "queries");
    let mut pool = Vec::with_capacity(meta.pool_len * meta.query_dim);
    for (k, rec) in csv_reader(&p)?.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&p, e))?;
        if rec.len() != meta.query_dim + 1 || parse_usize(&p, &rec[0])? != k {
            return Err(HarnessError::format(&p, format!("malformed row {k}")));
        }
        for s in rec.iter().skip(1) {
            pool.push(parse_f64(&p, s)?);
        }
    }

    let p = sibling(path, "targets");
    let mut points = 0;
    for rec in csv_reader(&p)?.records() {
        let rec = rec.map_err(|e| csv_err(&p, e))?;
        if rec.len() != 3 {
            return Err(HarnessError::format(&p, format!("malformed row {points}")));
        }
        let i = parse_usize(&p, &rec[0])?;
        let q = parse_usize(&p, &rec[1])?;
        let s = scenarios.get_mut(i).ok_or_else(|| HarnessError::format(&p, format!("row {points} names unknown scenario {i}")))?;
        s.queries.push(u32::try_from(q).map_err(|_| HarnessError::format(&p, format!("query index {q} too large")))?);
        s.targets.push(parse_f64(&p, &rec[2])?);
        points += 1;
    }

    if scenarios.len() != meta.scenarios || points != meta.points || pool.len() != meta.pool_len * meta.query_dim {
        return Err(HarnessError::format(path, "CSV payload does not match the recorded sizes"));
    }
    let ds = OperatorDataset { task: meta.task.clone(), branch_dim: meta.branch_dim, query_dim: meta.query_dim, query_pool: pool, scenarios };
    ds.validate().map_err(|e| HarnessError::format(path, e.to_string()))?;
    Ok((ds, meta))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| HarnessError::format(path, e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| HarnessError::format(path, e.to_string()))
}

/// A trained ensemble with the resolved model shape it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub experiment: String,
    pub spec: ModelSpec,
    pub ensemble: Ensemble,
}

impl Checkpoint {
    pub fn new(experiment: &str, spec: ModelSpec, ensemble: Ensemble) -> Self {
        Checkpoint { format_version: FORMAT_VERSION, experiment: experiment.to_string(), spec, ensemble }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = load_json(path)?;
        if c.format_version != FORMAT_VERSION {
            return Err(HarnessError::format(path, format!("format version {} (expected {FORMAT_VERSION})", c.format_version)));
        }
        Ensemble::new(c.ensemble.members.clone(), c.ensemble.seeds.clone()).map_err(|e| HarnessError::format(path, e.to_string()))?;
        Ok(c)
    }
}

/// Calibration artifact. JSON has no infinity, so an unbounded threshold
/// (too few calibration points for the requested level) is stored as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub format_version: u32,
    pub experiment: String,
    /// `exact`, or the noisy cell label the scores were computed under.
    pub source: String,
    pub q_hat: Option<f64>,
    pub alpha: f64,
    pub epsilon: f64,
    pub n_cal: usize,
}

impl CalibrationFile {
    pub fn new(experiment: &str, source: &str, c: &Calibration) -> Self {
        CalibrationFile {
            format_version: FORMAT_VERSION,
            experiment: experiment.to_string(),
            source: source.to_string(),
            q_hat: c.q_hat.is_finite().then_some(c.q_hat),
            alpha: c.alpha,
            epsilon: c.epsilon,
            n_cal: c.n_cal,
        }
    }

    pub fn calibration(&self) -> Calibration {
        Calibration { q_hat: self.q_hat.unwrap_or(f64::INFINITY), alpha: self.alpha, epsilon: self.epsilon, n_cal: self.n_cal }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: CalibrationFile = load_json(path)?;
        if c.format_version != FORMAT_VERSION {
            return Err(HarnessError::format(path, format!("format version {} (expected {FORMAT_VERSION})", c.format_version)));
        }
        Ok(c)
    }
}

/// Loss trace as `iter,loss,lr`.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["iter", "loss", "lr"]).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([r.iter.to_string(), fmt(r.loss), fmt(r.lr)]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut out = Vec::new();
    for rec in csv_reader(path)?.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 3 {
            return Err(HarnessError::format(path, "trace rows need iter,loss,lr"));
        }
        out.push(TraceRow { iter: parse_usize(path, &rec[0])?, loss: parse_f64(path, &rec[1])?, lr: parse_f64(path, &rec[2])? });
    }
    Ok(out)
}

/// One evaluated configuration. `wall_time` goes to a separate timings table
/// so the metrics file stays byte-identical across repeated seeded runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment: String,
    /// `exact`, `oracle`, a hybrid name or `spqc`.
    pub mode: String,
    pub lambda: f64,
    /// Empty in the infinite-shot limit.
    pub shots: Option<u64>,
    pub replicate: usize,
    pub rel_l2_percent: f64,
    pub coverage_percent: f64,
    pub avg_width: f64,
    pub peak_uncertainty: f64,
    pub retained_fraction: f64,
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TimingRow<'a> {
    experiment: &'a str,
    mode: &'a str,
    lambda: f64,
    shots: Option<u64>,
    replicate: usize,
    wall_time: f64,
}

fn append<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Appends rows to `metrics.csv` and their wall times to `timings.csv` in `dir`.
pub fn append_metrics(dir: &Path, rows: &[MetricsRow]) -> Result<()> {
    append(&dir.join(METRICS_FILE), rows)?;
    let timings: Vec<TimingRow> = rows
        .iter()
        .map(|r| TimingRow { experiment: &r.experiment, mode: &r.mode, lambda: r.lambda, shots: r.shots, replicate: r.replicate, wall_time: r.wall_time })
        .collect();
    append(&dir.join(TIMINGS_FILE), &timings)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    csv_reader(path)?.deserialize().map(|r| r.map_err(|e| csv_err(path, e))).collect()
}

pub const DATASET_FILE: &str = "dataset.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const RESOURCES_FILE: &str = "resources.json";

pub fn trace_file(member: usize) -> String {
    format!("trace_{member}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_roundtrips() {
        for v in [0.1, -1e-300, 1e300, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, 0.0, -0.0, 123456789.123456789] {
            let back: f64 = fmt(v).parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v}");
        }
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("/a/dataset.json"), "inputs"), PathBuf::from("/a/dataset.inputs.csv"));
    }
}
