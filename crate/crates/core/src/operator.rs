//! DeepONet over two orthogonal networks: prediction is the inner product of a
//! branch embedding of the input function and a trunk embedding of the query.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Batch, OperatorDataset, Split};
use crate::linalg::{gemm, MatRef};
use crate::qonn::{Normalization, QOrthoNN, QonnArch};
use crate::rng::{self, Rng as StdRng};
use crate::{Error, Result};

/// Trunk feature map `[t, cos(2 pi f t), sin(2 pi f t), ...]` for scalar queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierFeatures {
    pub freqs: Vec<f64>,
}

impl FourierFeatures {
    pub fn dim(&self) -> usize {
        1 + 2 * self.freqs.len()
    }

    pub fn apply(&self, t: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        out.push(t);
        for f in &self.freqs {
            let (s, c) = libm::sincos(2.0 * core::f64::consts::PI * f * t);
            out.push(c);
            out.push(s);
        }
        out
    }
}

/// Shared shape of both sub-networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: usize,
    pub width: usize,
    pub residual: bool,
    pub fourier: Option<FourierFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepOnet {
    pub branch: QOrthoNN,
    pub trunk: QOrthoNN,
    pub fourier: Option<FourierFeatures>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    RelL2,
}

const REL_EPS: f64 = 1e-12;

impl DeepOnet {
    /// Fits normalizations on the training split and initializes both networks
    /// from independent streams of `seed`.
    pub fn for_dataset(ds: &OperatorDataset, spec: &ModelSpec, seed: u64) -> Result<Self> {
        if let Some(f) = &spec.fourier {
            if ds.query_dim != 1 {
                return Err(Error::InvalidConfig("Fourier trunk features need scalar queries".into()));
            }
            if f.freqs.is_empty() {
                return Err(Error::InvalidConfig("Fourier features need at least one frequency".into()));
            }
        }
        let train = ds.batch(Split::Train);
        if train.scenarios() == 0 {
            return Err(Error::Empty("training split"));
        }
        let branch_norm = Normalization::fit(&train.u, ds.branch_dim)?;
        let feats = features(&spec.fourier, &train.y, ds.query_dim);
        let trunk_dim = spec.fourier.as_ref().map_or(ds.query_dim, FourierFeatures::dim);
        let trunk_norm = Normalization::fit(&feats, trunk_dim)?;
        let arch = |input_dim| QonnArch { input_dim, width: spec.width, layers: spec.layers, latent: spec.width, residual: spec.residual };
        let branch = QOrthoNN::init(arch(ds.branch_dim), branch_norm, &mut rng::stream(seed, &[0xB0]))?;
        let trunk = QOrthoNN::init(arch(trunk_dim), trunk_norm, &mut rng::stream(seed, &[0x70]))?;
        Ok(DeepOnet { branch, trunk, fourier: spec.fourier.clone() })
    }

    pub fn latent(&self) -> usize {
        self.branch.arch.latent
    }

    /// Raw query coordinates mapped to trunk inputs.
    pub fn trunk_features(&self, y: &[f64]) -> Vec<f64> {
        features(&self.fourier, y, self.query_dim())
    }

    pub fn query_dim(&self) -> usize {
        match self.fourier {
            Some(_) => 1,
            None => self.trunk.arch.input_dim,
        }
    }

    pub fn branch_embed(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.branch.forward(u)
    }

    pub fn trunk_embed(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.query_dim() {
            return Err(Error::DimensionMismatch { expected: self.query_dim(), got: y.len() });
        }
        self.trunk.forward(&self.trunk_features(y))
    }

    pub fn predict(&self, u: &[f64], y: &[f64]) -> Result<f64> {
        Ok(dot(&self.branch_embed(u)?, &self.trunk_embed(y)?))
    }

    pub fn param_count(&self) -> usize {
        self.branch.param_count() + self.trunk.param_count()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.branch.params();
        p.extend(self.trunk.params());
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), got: p.len() });
        }
        let (a, b) = p.split_at(self.branch.param_count());
        self.branch.set_params(a)?;
        self.trunk.set_params(b)
    }

    /// Exact predictions for every target of `batch`, in target order. The branch
    /// runs once per scenario and the trunk once per unique query.
    pub fn predict_batch(&self, batch: &Batch) -> Result<Vec<f64>> {
        let (bm, _, _) = self.branch.forward_batch(&batch.u, batch.scenarios())?;
        let feats = self.trunk_features(&batch.y);
        let (tm, _, _) = self.trunk.forward_batch(&feats, batch.queries())?;
        Ok(combine(&bm, &tm, batch, self.latent()))
    }

    /// Loss on `batch` and its gradient in [`params`](Self::params) layout.
    pub fn loss_and_grad(&self, batch: &Batch, kind: LossKind) -> Result<(f64, Vec<f64>)> {
        let (n, nq, p) = (batch.scenarios(), batch.queries(), self.latent());
        let (bm, bcache, _) = self.branch.forward_batch(&batch.u, n)?;
        let feats = self.trunk_features(&batch.y);
        let (tm, tcache, _) = self.trunk.forward_batch(&feats, nq)?;
        let pred = combine(&bm, &tm, batch, p);
        let (value, dpred) = loss_grad(&pred, batch, kind);
        let mut db = vec![0.0; p * n];
        let mut dt = vec![0.0; p * nq];
        if batch.shared_grid {
            // P = B^T T with dP dense n x nq
            gemm(1.0, MatRef::rows(&tm, p, nq), MatRef::rows(&dpred, n, nq).t(), 0.0, &mut db);
            gemm(1.0, MatRef::rows(&bm, p, n), MatRef::rows(&dpred, n, nq), 0.0, &mut dt);
        } else {
            for i in 0..n {
                for e in batch.range(i) {
                    let (c, g) = (batch.cols[e], dpred[e]);
                    for k in 0..p {
                        db[k * n + i] += tm[k * nq + c] * g;
                        dt[k * nq + c] += bm[k * n + i] * g;
                    }
                }
            }
        }
        let mut grad = self.branch.backward_batch(bcache, &db);
        grad.extend(self.trunk.backward_batch(tcache, &dt));
        Ok((value, grad))
    }
}

fn features(fourier: &Option<FourierFeatures>, y: &[f64], query_dim: usize) -> Vec<f64> {
    match fourier {
        None => y.to_vec(),
        Some(f) => {
            debug_assert_eq!(query_dim, 1);
            y.iter().flat_map(|&t| f.apply(t)).collect()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Feature-major embeddings (`p x n` and `p x nq`) to per-target predictions.
pub(crate) fn combine(bm: &[f64], tm: &[f64], batch: &Batch, p: usize) -> Vec<f64> {
    let (n, nq) = (batch.scenarios(), batch.queries());
    if batch.shared_grid {
        let mut out = vec![0.0; n * nq];
        gemm(1.0, MatRef::rows(bm, p, n).t(), MatRef::rows(tm, p, nq), 0.0, &mut out);
        return out;
    }
    let mut out = vec![0.0; batch.points()];
    for i in 0..n {
        for e in batch.range(i) {
            let c = batch.cols[e];
            out[e] = (0..p).map(|k| bm[k * n + i] * tm[k * nq + c]).sum();
        }
    }
    out
}

/// Per-scenario average, then average over scenarios.
pub fn loss(pred: &[f64], batch: &Batch, kind: LossKind) -> f64 {
    loss_grad(pred, batch, kind).0
}

fn loss_grad(pred: &[f64], batch: &Batch, kind: LossKind) -> (f64, Vec<f64>) {
    let n = batch.scenarios();
    let mut grad = vec![0.0; pred.len()];
    let mut total = 0.0;
    let counted = (0..n).filter(|&i| !batch.range(i).is_empty()).count().max(1) as f64;
    for i in 0..n {
        let r = batch.range(i);
        if r.is_empty() {
            continue;
        }
        let m = r.len() as f64;
        match kind {
            LossKind::Mse => {
                for e in r {
                    let d = pred[e] - batch.targets[e];
                    total += d * d / (m * counted);
                    grad[e] = 2.0 * d / (m * counted);
                }
            }
            LossKind::RelL2 => {
                let num = libm::sqrt(r.clone().map(|e| pred[e] - batch.targets[e]).map(|d| d * d).sum::<f64>());
                let den = libm::sqrt(r.clone().map(|e| batch.targets[e] * batch.targets[e]).sum::<f64>()).max(REL_EPS);
                total += num / (den * counted);
                if num > 0.0 {
                    for e in r {
                        grad[e] = (pred[e] - batch.targets[e]) / (num * den * counted);
                    }
                }
            }
        }
    }
    (total, grad)
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / c1) / (libm::sqrt(*v / c2) + self.eps);
        }
    }
}

/// Scenarios and queries drawn per iteration; `None` keeps the whole split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MiniBatch {
    pub scenarios: Option<usize>,
    pub queries: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub lr: f64,
    /// Per-iteration multiplicative decay; `None` keeps the rate constant.
    pub decay: Option<f64>,
    pub min_lr: Option<f64>,
    pub loss: LossKind,
    #[serde(default)]
    pub batch: MiniBatch,
    /// A trace row is kept every `log_every` iterations, plus the last one.
    pub log_every: usize,
}

impl TrainConfig {
    pub fn lr_at(&self, iter: usize) -> f64 {
        match self.decay {
            None => self.lr,
            Some(g) => {
                let lr = self.lr * libm::pow(g, iter as f64);
                lr.max(self.min_lr.unwrap_or(0.0))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if let Some(g) = self.decay {
            if !(g > 0.0 && g <= 1.0) {
                return bad("decay factor must lie in (0, 1]");
            }
        }
        if let Some(m) = self.min_lr {
            if !(m >= 0.0 && m <= self.lr) {
                return bad("min_lr must lie in [0, lr]");
            }
        }
        if self.batch.scenarios == Some(0) || self.batch.queries == Some(0) {
            return bad("mini-batch sizes must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub loss: f64,
    pub lr: f64,
}

/// Adam training on the training split. Deterministic in `(model, data, config,
/// seed)`; `seed` drives mini-batch selection only.
pub fn train(model: &mut DeepOnet, ds: &OperatorDataset, cfg: &TrainConfig, seed: u64) -> Result<Vec<TraceRow>> {
    cfg.validate()?;
    let full = ds.batch(Split::Train);
    if full.points() == 0 {
        return Err(Error::Empty("training split"));
    }
    let mut r = rng::stream(seed, &[0x5A]);
    let mut params = model.params();
    let mut adam = Adam::new(params.len());
    let mut trace = Vec::new();
    let every = cfg.log_every.max(1);
    for it in 0..cfg.iterations {
        let sub;
        let batch = if cfg.batch == MiniBatch::default() {
            &full
        } else {
            sub = draw(&full, cfg.batch, &mut r);
            &sub
        };
        let (value, grad) = model.loss_and_grad(batch, cfg.loss)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { iteration: it });
        }
        let lr = cfg.lr_at(it);
        if it % every == 0 || it + 1 == cfg.iterations {
            trace.push(TraceRow { iter: it, loss: value, lr });
        }
        adam.step(&mut params, &grad, lr);
        model.set_params(&params)?;
    }
    Ok(trace)
}

/// Random scenarios, and on shared grids a random common subset of queries.
fn draw(full: &Batch, spec: MiniBatch, r: &mut StdRng) -> Batch {
    let n = full.scenarios();
    let rows: Vec<usize> = match spec.scenarios {
        Some(k) if k < n => {
            let mut v = sample(r, n, k).into_vec();
            v.sort_unstable();
            v
        }
        _ => (0..n).collect(),
    };
    let nq = full.queries();
    let cols: Option<Vec<usize>> = match spec.queries {
        Some(k) if full.shared_grid && k < nq => {
            let mut v = sample(r, nq, k).into_vec();
            v.sort_unstable();
            Some(v)
        }
        _ => None,
    };
    subset(full, &rows, cols.as_deref())
}

pub(crate) fn subset(full: &Batch, rows: &[usize], cols: Option<&[usize]>) -> Batch {
    let d = full.branch_dim;
    let mut u = Vec::with_capacity(rows.len() * d);
    for &i in rows {
        u.extend_from_slice(&full.u[i * d..(i + 1) * d]);
    }
    let mut offsets = vec![0];
    let (mut c_out, mut t_out) = (Vec::new(), Vec::new());
    let y = match cols {
        Some(cols) => {
            let nq = full.queries();
            for &i in rows {
                for (j, &c) in cols.iter().enumerate() {
                    c_out.push(j);
                    t_out.push(full.targets[i * nq + c]);
                }
                offsets.push(c_out.len());
            }
            let qd = full.query_dim;
            cols.iter().flat_map(|&c| full.y[c * qd..(c + 1) * qd].iter().copied()).collect()
        }
        None => {
            for &i in rows {
                for e in full.range(i) {
                    c_out.push(full.cols[e]);
                    t_out.push(full.targets[e]);
                }
                offsets.push(c_out.len());
            }
            full.y.clone()
        }
    };
    Batch {
        branch_dim: d,
        query_dim: full.query_dim,
        u,
        y,
        offsets,
        cols: c_out,
        targets: t_out,
        shared_grid: full.shared_grid,
    }
}

/// Mean over scenarios of `|pred - target| / |target|` per scenario.
pub fn relative_l2(pred: &[f64], batch: &Batch) -> f64 {
    loss(pred, batch, LossKind::RelL2)
}

/// Initializes and trains one model, returning the model and its loss trace.
pub fn fit<R: Rng + ?Sized>(ds: &OperatorDataset, spec: &ModelSpec, cfg: &TrainConfig, rng: &mut R) -> Result<(DeepOnet, Vec<TraceRow>)> {
    let seed = rng.next_u64();
    let mut model = DeepOnet::for_dataset(ds, spec, seed)?;
    let trace = train(&mut model, ds, cfg, seed)?;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Scenario;
    use alloc::string::ToString;

    /// `s(u, y) = u0 * y + u1` on a shared grid, with one sparse test scenario.
    fn linear_ds(n: usize) -> OperatorDataset {
        let pool: Vec<f64> = (0..8).map(|k| k as f64 / 7.0).collect();
        let mut r = rng::stream(11, &[]);
        let mut scenarios = Vec::new();
        for i in 0..n {
            let u = vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
            let queries: Vec<u32> = (0..8).collect();
            let targets = pool.iter().map(|y| u[0] * y + u[1]).collect();
            scenarios.push(Scenario { u, queries, targets, split: if i < n - 1 { Split::Train } else { Split::Test } });
        }
        let last = scenarios.last_mut().unwrap();
        last.queries = vec![5, 1];
        last.targets = vec![last.u[0] * pool[5] + last.u[1], last.u[0] * pool[1] + last.u[1]];
        OperatorDataset { task: "linear".to_string(), branch_dim: 2, query_dim: 1, query_pool: pool, scenarios }
    }

    fn spec() -> ModelSpec {
        ModelSpec { layers: 2, width: 4, residual: false, fourier: None }
    }

    #[test]
    fn fourier_features_layout() {
        let f = FourierFeatures { freqs: vec![1.0, 2.0, 3.0, 4.0, 5.0] };
        assert_eq!(f.apply(0.0), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let v = f.apply(0.25);
        assert_eq!(v.len(), 11);
        assert!(v[1].abs() < 1e-15 && (v[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn losses_on_simple_cases() {
        let ds = linear_ds(4);
        let b = ds.batch(Split::Train);
        assert_eq!(loss(&b.targets, &b, LossKind::Mse), 0.0);
        let shifted: Vec<f64> = b.targets.iter().map(|t| t + 1.0).collect();
        assert!((loss(&shifted, &b, LossKind::Mse) - 1.0).abs() < 1e-14);
        let doubled: Vec<f64> = b.targets.iter().map(|t| 2.0 * t).collect();
        assert!((loss(&doubled, &b, LossKind::RelL2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cached_branch_matches_pointwise() {
        let ds = linear_ds(5);
        let m = DeepOnet::for_dataset(&ds, &spec(), 3).unwrap();
        for split in [Split::Train, Split::Test] {
            let b = ds.batch(split);
            let pb = m.predict_batch(&b).unwrap();
            for i in 0..b.scenarios() {
                let u = &b.u[i * 2..i * 2 + 2];
                let emb = m.branch_embed(u).unwrap();
                for e in b.range(i) {
                    let y = &b.y[b.cols[e]..b.cols[e] + 1];
                    let direct = m.predict(u, y).unwrap();
                    let cached = dot(&emb, &m.trunk_embed(y).unwrap());
                    assert_eq!(direct, cached);
                    assert!((direct - pb[e]).abs() < 1e-13);
                }
            }
        }
    }

    fn grad_check(b: &Batch, m: &mut DeepOnet, kind: LossKind) {
        let (_, g) = m.loss_and_grad(b, kind).unwrap();
        let p0 = m.params();
        let h = 1e-6;
        for k in (0..p0.len()).step_by(3) {
            let mut at = |d: f64| {
                let mut p = p0.clone();
                p[k] += d;
                m.set_params(&p).unwrap();
                loss(&m.predict_batch(b).unwrap(), b, kind)
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * fd.abs().max(g[k].abs()).max(1e-2), "{kind:?} param {k}: {fd} vs {}", g[k]);
        }
        m.set_params(&p0).unwrap();
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ds = linear_ds(5);
        let mut m = DeepOnet::for_dataset(&ds, &ModelSpec { residual: true, ..spec() }, 4).unwrap();
        for kind in [LossKind::Mse, LossKind::RelL2] {
            grad_check(&ds.batch(Split::Train), &mut m, kind);
            let mut mixed = ds.batch(Split::Test);
            mixed.shared_grid = false;
            grad_check(&mixed, &mut m, kind);
        }
        let f = ModelSpec { fourier: Some(FourierFeatures { freqs: vec![1.0, 2.0] }), ..spec() };
        let mut m = DeepOnet::for_dataset(&ds, &f, 5).unwrap();
        grad_check(&ds.batch(Split::Train), &mut m, LossKind::Mse);
    }

    #[test]
    fn adam_finds_quadratic_minimum() {
        let mut x = [0.0];
        let mut opt = Adam::new(1);
        for t in 0..5000 {
            let g = [2.0 * (x[0] - 3.0)];
            let lr = (0.1 * libm::pow(0.998, t as f64)).max(1e-4);
            opt.step(&mut x, &g, lr);
        }
        assert!((x[0] - 3.0).abs() <= 1e-6, "{}", x[0]);
    }

    #[test]
    fn schedule_floors_at_min_lr() {
        let cfg = TrainConfig { iterations: 0, lr: 1e-3, decay: Some(0.99), min_lr: Some(5e-4), loss: LossKind::Mse, batch: MiniBatch::default(), log_every: 1 };
        assert_eq!(cfg.lr_at(0), 1e-3);
        assert!((cfg.lr_at(10) - 1e-3 * libm::pow(0.99, 10.0)).abs() < 1e-18);
        assert_eq!(cfg.lr_at(1000), 5e-4);
        let constant = TrainConfig { decay: None, min_lr: None, ..cfg };
        assert_eq!(constant.lr_at(1000), 1e-3);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let ds = linear_ds(12);
        let cfg = TrainConfig { iterations: 400, lr: 1e-2, decay: None, min_lr: None, loss: LossKind::Mse, batch: MiniBatch::default(), log_every: 50 };
        let run = |seed| {
            let mut m = DeepOnet::for_dataset(&ds, &spec(), seed).unwrap();
            let trace = train(&mut m, &ds, &cfg, seed).unwrap();
            (m, trace)
        };
        let (a, ta) = run(1);
        let (b, _) = run(1);
        assert_eq!(a.params(), b.params());
        assert!(ta.last().unwrap().loss < 0.2 * ta[0].loss);
        assert_eq!(ta.last().unwrap().iter, 399);
        let mini = TrainConfig { batch: MiniBatch { scenarios: Some(4), queries: Some(3) }, ..cfg.clone() };
        let mut m = DeepOnet::for_dataset(&ds, &spec(), 2).unwrap();
        let before = loss(&m.predict_batch(&ds.batch(Split::Train)).unwrap(), &ds.batch(Split::Train), LossKind::Mse);
        train(&mut m, &ds, &mini, 2).unwrap();
        let after = loss(&m.predict_batch(&ds.batch(Split::Train)).unwrap(), &ds.batch(Split::Train), LossKind::Mse);
        assert!(after < before);
    }

    #[test]
    fn nan_loss_aborts() {
        let mut ds = linear_ds(4);
        let cfg = TrainConfig { iterations: 5, lr: 1e-3, decay: None, min_lr: None, loss: LossKind::Mse, batch: MiniBatch::default(), log_every: 1 };
        let mut m = DeepOnet::for_dataset(&ds, &spec(), 1).unwrap();
        ds.scenarios[0].targets[0] = f64::INFINITY;
        assert!(matches!(train(&mut m, &ds, &cfg, 1), Err(Error::NonFiniteLoss { iteration: 0 })));
    }

    #[test]
    fn subset_keeps_dense_targets_aligned() {
        let ds = linear_ds(6);
        let full = ds.batch(Split::Train);
        let s = subset(&full, &[1, 3], Some(&[0, 6]));
        assert!(s.shared_grid);
        assert_eq!(s.y, vec![0.0, 6.0 / 7.0]);
        assert_eq!(s.targets, vec![full.targets[8], full.targets[14], full.targets[24], full.targets[30]]);
    }
}
