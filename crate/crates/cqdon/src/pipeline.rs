//! The experiment steps shared by the CLI and the acceptance suite.

use std::time::Instant;

use cqdon_core::conformal::{metrics, predict_interval, Calibration, IntervalMetrics};
use cqdon_core::data::{Batch, OperatorDataset, Scenario, Split};
use cqdon_core::datagen::build_operator_dataset;
use cqdon_core::ensemble::{resource_report, spqc_circuit, standard_circuit, train_member, Ensemble, EnsemblePrediction, ExecMode, Hybrid, ResourceReport};
use cqdon_core::noise::Execution;
use cqdon_core::operator::{relative_l2, FourierFeatures, ModelSpec, TraceRow};
use cqdon_core::qonn::QOrthoNN;
use cqdon_core::rng::split_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{CalibrationSource, ExperimentConfig};
use crate::error::Result;
use crate::io::{Checkpoint, MetricsRow};
use crate::spectrum::target_frequencies;

const DATA_TAG: u64 = 0xDA7A;
const TRAIN_TAG: u64 = 0x7A1E;
const NOISE_TAG: u64 = 0x0153;

pub fn data_seed(cfg: &ExperimentConfig) -> u64 {
    split_seed(cfg.seed, &[DATA_TAG])
}

pub fn train_seed(cfg: &ExperimentConfig) -> u64 {
    split_seed(cfg.seed, &[TRAIN_TAG])
}

/// Seed of one noisy evaluation; independent of how cells are scheduled.
pub fn noise_seed(cfg: &ExperimentConfig, cell: usize, replicate: usize, stage: u64) -> u64 {
    split_seed(cfg.seed, &[NOISE_TAG, cell as u64, replicate as u64, stage])
}

pub fn generate(cfg: &ExperimentConfig) -> Result<OperatorDataset> {
    Ok(build_operator_dataset(&cfg.task, data_seed(cfg))?)
}

/// The model shape, with Fourier frequencies read off the training targets.
pub fn model_spec(cfg: &ExperimentConfig, ds: &OperatorDataset) -> Result<ModelSpec> {
    let fourier = match cfg.model.fourier_k {
        Some(k) => Some(FourierFeatures { freqs: target_frequencies(ds, k)? }),
        None => None,
    };
    Ok(ModelSpec { layers: cfg.model.layers, width: cfg.model.width, residual: cfg.model.residual, fourier })
}

/// Trains every member on the worker pool. Member `i` depends only on the
/// configuration and `i`, so results do not depend on the thread count.
pub fn train_ensemble(cfg: &ExperimentConfig, ds: &OperatorDataset) -> Result<(Checkpoint, Vec<Vec<TraceRow>>)> {
    let spec = model_spec(cfg, ds)?;
    let base = train_seed(cfg);
    let trained: Vec<_> = (0..cfg.ensemble.members)
        .into_par_iter()
        .map(|i| train_member(ds, &spec, &cfg.training, base, i, cfg.ensemble.attempts))
        .collect::<std::result::Result<_, _>>()?;
    let mut members = Vec::with_capacity(trained.len());
    let mut seeds = Vec::with_capacity(trained.len());
    let mut traces = Vec::with_capacity(trained.len());
    for (m, t, s) in trained {
        members.push(m);
        traces.push(t);
        seeds.push(s);
    }
    let ensemble = Ensemble::new(members, seeds)?;
    Ok((Checkpoint::new(&cfg.name, spec, ensemble), traces))
}

/// How ensemble predictions are produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inference {
    /// Classical-equivalent orthogonal layers.
    Exact,
    /// Full-register simulation of every layer circuit with exact outcome
    /// probabilities; a cross-check of the fast path on small circuits.
    Oracle,
    Noisy { exec: Execution, mode: ExecMode },
}

impl Inference {
    pub fn label(&self) -> &'static str {
        match self {
            Inference::Exact => "exact",
            Inference::Oracle => "oracle",
            Inference::Noisy { mode: ExecMode::Spqc, .. } => "spqc",
            Inference::Noisy { mode: ExecMode::Independent(h), .. } => h.name(),
        }
    }
}

pub fn predict(ens: &Ensemble, batch: &Batch, inference: &Inference, seed: u64) -> Result<(EnsemblePrediction, f64)> {
    match inference {
        Inference::Exact => Ok((ens.predict_exact(batch)?, 1.0)),
        Inference::Oracle => {
            let p = ens.predict_noisy(batch, &Execution::exact(), ExecMode::Independent(Hybrid::FullyQuantum), seed)?;
            Ok((p.prediction, p.min_retained))
        }
        Inference::Noisy { exec, mode } => {
            let p = ens.predict_noisy(batch, exec, *mode, seed)?;
            Ok((p.prediction, p.min_retained))
        }
    }
}

/// The scenarios of one split, optionally only the first `limit`.
pub fn split_batch(ds: &OperatorDataset, split: Split, limit: Option<usize>) -> Batch {
    let picked: Vec<&Scenario> = ds.scenarios.iter().filter(|s| s.split == split).take(limit.unwrap_or(usize::MAX)).collect();
    Batch::gather(ds, &picked)
}

pub fn calibrate(cfg: &ExperimentConfig, cal: &Batch, prediction: &EnsemblePrediction) -> Result<Calibration> {
    let c = &cfg.conformal;
    Ok(Calibration::fit(&cal.targets, &prediction.mu, &prediction.sigma, c.alpha, c.epsilon)?)
}

/// Relative L2 error and interval metrics of a prediction on `test`.
pub fn score(cfg: &ExperimentConfig, test: &Batch, prediction: &EnsemblePrediction, calibration: &Calibration) -> Result<(f64, IntervalMetrics)> {
    let intervals: Vec<_> = prediction.mu.iter().zip(&prediction.sigma).map(|(&m, &s)| predict_interval(m, s, calibration.q_hat)).collect();
    let m = metrics(&test.targets, &intervals, cfg.conformal.peak)?;
    Ok((relative_l2(&prediction.mu, test), m))
}

/// One metrics row: predicts the test split (and the calibration split when
/// calibration is matched) under `inference`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_cell(
    cfg: &ExperimentConfig,
    ens: &Ensemble,
    cal: &Batch,
    test: &Batch,
    inference: &Inference,
    fixed_calibration: Option<&Calibration>,
    cell: usize,
    replicate: usize,
) -> Result<MetricsRow> {
    let start = Instant::now();
    let mut retained: f64 = 1.0;
    let calibration = match fixed_calibration {
        Some(c) => *c,
        None => {
            let (p, r) = predict(ens, cal, inference, noise_seed(cfg, cell, replicate, 0))?;
            retained = retained.min(r);
            calibrate(cfg, cal, &p)?
        }
    };
    let (p, r) = predict(ens, test, inference, noise_seed(cfg, cell, replicate, 1))?;
    retained = retained.min(r);
    let (rel, m) = score(cfg, test, &p, &calibration)?;
    let (lambda, shots) = match inference {
        Inference::Noisy { exec, .. } => (
            exec.noise.lambda_1q,
            match exec.shots {
                cqdon_core::noise::Shots::Exact => None,
                cqdon_core::noise::Shots::Finite(s) => Some(s),
            },
        ),
        _ => (0.0, None),
    };
    Ok(MetricsRow {
        experiment: cfg.name.clone(),
        mode: inference.label().to_string(),
        lambda,
        shots,
        replicate,
        rel_l2_percent: 100.0 * rel,
        coverage_percent: 100.0 * m.coverage,
        avg_width: m.avg_width,
        peak_uncertainty: m.peak_uncertainty,
        retained_fraction: retained,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Noiseless rows: the classical fast path, or the circuit simulator with `oracle`.
pub fn evaluate_exact(cfg: &ExperimentConfig, ens: &Ensemble, ds: &OperatorDataset, calibration: &Calibration, oracle: bool) -> Result<MetricsRow> {
    let cal = split_batch(ds, Split::Cal, None);
    let test = split_batch(ds, Split::Test, None);
    let inference = if oracle { Inference::Oracle } else { Inference::Exact };
    evaluate_cell(cfg, ens, &cal, &test, &inference, Some(calibration), 0, 0)
}

/// Metrics over the configured `lambda x shots` grid and replicates, one row
/// per (cell, replicate) in grid order. Calibration follows `noise.calibration`.
pub fn noise_sweep(cfg: &ExperimentConfig, ens: &Ensemble, ds: &OperatorDataset, mode: ExecMode) -> Result<Vec<MetricsRow>> {
    let limit = cfg.noise.max_scenarios;
    let cal = split_batch(ds, Split::Cal, limit);
    let test = split_batch(ds, Split::Test, limit);
    let exact_cal = match cfg.noise.calibration {
        CalibrationSource::Exact => Some(calibrate(cfg, &cal, &ens.predict_exact(&cal)?)?),
        CalibrationSource::Matched => None,
    };
    let cells = cfg.noise.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.noise.replicates).map(move |r| (c, r))).collect();
    jobs.into_par_iter()
        .map(|(c, r)| {
            let (lambda, shots) = cells[c];
            let inference = Inference::Noisy { exec: cfg.noise.execution(lambda, shots)?, mode };
            evaluate_cell(cfg, ens, &cal, &test, &inference, exact_cal.as_ref(), c, r)
        })
        .collect()
}

/// Side-by-side sweeps of the three hybrid configurations and SPQC.
pub fn compare(cfg: &ExperimentConfig, ens: &Ensemble, ds: &OperatorDataset) -> Result<Vec<MetricsRow>> {
    let mut rows = Vec::new();
    for mode in [ExecMode::Independent(Hybrid::FullyQuantum), ExecMode::Independent(Hybrid::ClassicalBranch), ExecMode::Independent(Hybrid::ClassicalTrunk), ExecMode::Spqc] {
        rows.extend(noise_sweep(cfg, ens, ds, mode)?);
    }
    Ok(rows)
}

/// Per-layer resources of one member circuit against the superposed circuit
/// of the whole ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResources {
    pub network: String,
    pub layer: usize,
    pub standard: ResourceReport,
    pub spqc: ResourceReport,
    /// Depth of running every member's circuit one after another.
    pub sequential_depth: u64,
}

pub fn resources(ens: &Ensemble) -> Result<Vec<LayerResources>> {
    let mut out = Vec::new();
    let nets: [(&str, Vec<&QOrthoNN>); 2] =
        [("branch", ens.members.iter().map(|m| &m.branch).collect()), ("trunk", ens.members.iter().map(|m| &m.trunk).collect())];
    for (name, nets) in nets {
        for (k, layer) in nets[0].layers.iter().enumerate() {
            let n = layer.layout.in_dim();
            // gate counts do not depend on the loaded values
            let x = vec![1.0 / (n as f64).sqrt(); n];
            let standard = resource_report(&standard_circuit(&layer.layout, &layer.angles, &x)?, 1);
            let angles: Vec<Vec<f64>> = nets.iter().map(|net| net.layers[k].angles.clone()).collect();
            let inputs = vec![x.clone(); nets.len()];
            let spqc = resource_report(&spqc_circuit(&layer.layout, &angles, &inputs)?, nets.len());
            out.push(LayerResources {
                network: name.to_string(),
                layer: k,
                sequential_depth: standard.tally.depth * nets.len() as u64,
                standard,
                spqc,
            });
        }
    }
    Ok(out)
}

/// Mean and standard error of a sample.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}
