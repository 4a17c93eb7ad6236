//! Ensembles of independently trained DeepONets: training with bounded retries,
//! mean/dispersion aggregation, and exact, hybrid or superposed noisy inference.

mod spqc;

pub use spqc::{
    address_bits, address_prep, prepare_spqc, resource_report, spqc_circuit, spqc_forward, spqc_forward_prepared, spqc_layer_forward,
    standard_circuit, PreparedSpqc, ResourceReport,
};

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Batch, OperatorDataset};
use crate::noise::{Execution, PreparedLayer, Shots};
use crate::operator::{train, DeepOnet, ModelSpec, TraceRow, TrainConfig};
use crate::qonn::QOrthoNN;
use crate::rng::{self, split_seed};
use crate::{Error, Result};

/// Mean and population standard deviation.
pub fn aggregate(outputs: &[f64]) -> (f64, f64) {
    let l = outputs.len() as f64;
    let mu = outputs.iter().sum::<f64>() / l;
    let var = outputs.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / l;
    (mu, libm::sqrt(var))
}

/// Per-target ensemble statistics; `members[m]` holds member `m`'s predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub members: Vec<Vec<f64>>,
}

impl EnsemblePrediction {
    pub fn from_members(members: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Empty("ensemble members"));
        };
        let n = first.len();
        if members.iter().any(|m| m.len() != n) {
            return Err(Error::ShapeMismatch);
        }
        let mut col = vec![0.0; members.len()];
        let (mut mu, mut sigma) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            for (c, m) in col.iter_mut().zip(&members) {
                *c = m[i];
            }
            let (a, b) = aggregate(&col);
            mu.push(a);
            sigma.push(b);
        }
        Ok(EnsemblePrediction { mu, sigma, members })
    }
}

/// Which sub-network, if any, stays classical under noisy execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hybrid {
    #[default]
    FullyQuantum,
    ClassicalBranch,
    ClassicalTrunk,
}

impl Hybrid {
    pub const ALL: [Hybrid; 3] = [Hybrid::FullyQuantum, Hybrid::ClassicalBranch, Hybrid::ClassicalTrunk];

    pub fn name(self) -> &'static str {
        match self {
            Hybrid::FullyQuantum => "fully_quantum",
            Hybrid::ClassicalBranch => "classical_branch",
            Hybrid::ClassicalTrunk => "classical_trunk",
        }
    }
}

/// How member circuits are run under noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "hybrid")]
pub enum ExecMode {
    /// One circuit per member, optionally with a classical sub-network.
    Independent(Hybrid),
    /// All members of a layer in one address-superposed circuit.
    Spqc,
}

impl Default for ExecMode {
    fn default() -> Self {
        ExecMode::Independent(Hybrid::FullyQuantum)
    }
}

/// Cost terms of evaluating `n_scen` scenarios at `m_queries` queries each with
/// width-`n` sub-networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridCost {
    /// Classical branch, once per scenario: `N n^2`.
    pub branch: f64,
    /// Quantum trunk, once per query: `N M n log2 n`.
    pub queries: f64,
    /// Fully classical evaluation: `N M n^2`.
    pub classical_baseline: f64,
}

impl HybridCost {
    pub fn total(&self) -> f64 {
        self.branch + self.queries
    }
}

pub fn hybrid_cost(n_scen: usize, m_queries: usize, n: usize) -> HybridCost {
    let (nn, m, w) = (n_scen as f64, m_queries as f64, n as f64);
    let log = if n > 1 { libm::log2(w) } else { 0.0 };
    HybridCost { branch: nn * w * w, queries: nn * m * w * log, classical_baseline: nn * m * w * w }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub members: Vec<DeepOnet>,
    /// Seed each member was initialized and trained with.
    pub seeds: Vec<u64>,
}

/// Seed of `member` on retry `attempt`.
pub fn member_seed(base_seed: u64, member: usize, attempt: usize) -> u64 {
    split_seed(base_seed, &[member as u64, attempt as u64])
}

/// Trains member `index` on the full training split, re-seeding after a
/// non-finite loss up to `attempts` times.
pub fn train_member(
    ds: &OperatorDataset,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    base_seed: u64,
    index: usize,
    attempts: usize,
) -> Result<(DeepOnet, Vec<TraceRow>, u64)> {
    for attempt in 0..attempts.max(1) {
        let seed = member_seed(base_seed, index, attempt);
        let mut model = DeepOnet::for_dataset(ds, spec, seed)?;
        match train(&mut model, ds, cfg, seed) {
            Ok(trace) => return Ok((model, trace, seed)),
            Err(Error::NonFiniteLoss { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Diverged { member: index, attempts: attempts.max(1) })
}

impl Ensemble {
    pub fn new(members: Vec<DeepOnet>, seeds: Vec<u64>) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::Empty("ensemble members"));
        };
        if seeds.len() != members.len() {
            return Err(Error::ShapeMismatch);
        }
        if members.iter().any(|m| m.branch.arch != first.branch.arch || m.trunk.arch != first.trunk.arch) {
            return Err(Error::InvalidConfig("ensemble members must share one architecture".into()));
        }
        Ok(Ensemble { members, seeds })
    }

    /// Sequential training of `l` members; the CLI runs [`train_member`] in parallel.
    pub fn train(ds: &OperatorDataset, spec: &ModelSpec, cfg: &TrainConfig, l: usize, base_seed: u64, attempts: usize) -> Result<(Self, Vec<Vec<TraceRow>>)> {
        if l == 0 {
            return Err(Error::InvalidConfig("ensemble size must be at least 1".into()));
        }
        let mut members = Vec::with_capacity(l);
        let mut seeds = Vec::with_capacity(l);
        let mut traces = Vec::with_capacity(l);
        for i in 0..l {
            let (m, t, s) = train_member(ds, spec, cfg, base_seed, i, attempts)?;
            members.push(m);
            traces.push(t);
            seeds.push(s);
        }
        Ok((Ensemble::new(members, seeds)?, traces))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn predict_exact(&self, batch: &Batch) -> Result<EnsemblePrediction> {
        let members = self.members.iter().map(|m| m.predict_batch(batch)).collect::<Result<Vec<_>>>()?;
        EnsemblePrediction::from_members(members)
    }

    /// Noisy predictions for every target of `batch`. Each member's branch runs
    /// once per scenario and its trunk once per target (scenario, query) pair, every
    /// sub-network evaluation on its own stream of `seed`. With exact
    /// probabilities a trunk evaluation does not depend on the scenario, so it runs
    /// once per unique query instead.
    pub fn predict_noisy(&self, batch: &Batch, exec: &Execution, mode: ExecMode, seed: u64) -> Result<NoisyPrediction> {
        let n = batch.scenarios();
        let points = batch.points();
        let p = self.members[0].latent();
        let l = self.len();
        let (du, dy) = (batch.branch_dim, batch.query_dim);
        let runs = trunk_runs(batch, exec.shots != Shots::Exact);
        let mut bms = vec![vec![0.0; p * n]; l];
        let mut tms = vec![vec![0.0; p * points]; l];
        let mut retained: f64 = 1.0;
        match mode {
            ExecMode::Independent(hybrid) => {
                for (m, model) in self.members.iter().enumerate() {
                    let branch = Runner::new(&model.branch, hybrid == Hybrid::ClassicalBranch, exec)?;
                    for i in 0..n {
                        let (e, r) = branch.run(&batch.u[i * du..(i + 1) * du], seed, &[m as u64, 0, i as u64])?;
                        retained = retained.min(r);
                        scatter(&mut bms[m], &e, i, n);
                    }
                    let trunk = Runner::new(&model.trunk, hybrid == Hybrid::ClassicalTrunk, exec)?;
                    for run in &runs {
                        let f = model.trunk_features(&batch.y[run.col * dy..(run.col + 1) * dy]);
                        let (e, r) = trunk.run(&f, seed, &run.tags(m as u64))?;
                        retained = retained.min(r);
                        for &t in &run.targets {
                            scatter(&mut tms[m], &e, t, points);
                        }
                    }
                }
            }
            ExecMode::Spqc => {
                let branches: Vec<&QOrthoNN> = self.members.iter().map(|m| &m.branch).collect();
                let trunks: Vec<&QOrthoNN> = self.members.iter().map(|m| &m.trunk).collect();
                let prepared = prepare_spqc(&branches, exec)?;
                for i in 0..n {
                    let raws = vec![&batch.u[i * du..(i + 1) * du]; l];
                    let mut rng = rng::stream(seed, &[u64::MAX, 0, i as u64]);
                    let (es, r) = spqc_forward_prepared(&branches, &prepared, &raws, &mut rng)?;
                    retained = retained.min(r);
                    for (m, e) in es.iter().enumerate() {
                        scatter(&mut bms[m], e, i, n);
                    }
                }
                let prepared = prepare_spqc(&trunks, exec)?;
                for run in &runs {
                    let y = &batch.y[run.col * dy..(run.col + 1) * dy];
                    let feats: Vec<Vec<f64>> = self.members.iter().map(|m| m.trunk_features(y)).collect();
                    let raws: Vec<&[f64]> = feats.iter().map(|f| f.as_slice()).collect();
                    let mut rng = rng::stream(seed, &run.tags(u64::MAX));
                    let (es, r) = spqc_forward_prepared(&trunks, &prepared, &raws, &mut rng)?;
                    retained = retained.min(r);
                    for (m, e) in es.iter().enumerate() {
                        for &t in &run.targets {
                            scatter(&mut tms[m], e, t, points);
                        }
                    }
                }
            }
        }
        let members = bms.iter().zip(&tms).map(|(b, t)| combine_targets(b, t, batch, p)).collect();
        Ok(NoisyPrediction { prediction: EnsemblePrediction::from_members(members)?, min_retained: retained })
    }
}

/// One trunk evaluation: the query column it loads and the targets that use it.
struct TrunkRun {
    scenario: Option<usize>,
    col: usize,
    targets: Vec<usize>,
}

impl TrunkRun {
    fn tags(&self, member: u64) -> Vec<u64> {
        match self.scenario {
            Some(i) => vec![member, 1, i as u64, self.col as u64],
            None => vec![member, 1, self.col as u64],
        }
    }
}

fn trunk_runs(batch: &Batch, per_target: bool) -> Vec<TrunkRun> {
    if per_target {
        return (0..batch.scenarios())
            .flat_map(|i| batch.range(i).map(move |e| (i, e)))
            .map(|(i, e)| TrunkRun { scenario: Some(i), col: batch.cols[e], targets: vec![e] })
            .collect();
    }
    let mut runs: Vec<TrunkRun> = (0..batch.queries()).map(|col| TrunkRun { scenario: None, col, targets: Vec::new() }).collect();
    for (e, &c) in batch.cols.iter().enumerate() {
        runs[c].targets.push(e);
    }
    runs
}

/// A sub-network run exactly, or noisily through layers prepared once.
enum Runner<'a> {
    Classical(&'a QOrthoNN),
    Noisy(&'a QOrthoNN, Vec<PreparedLayer>),
}

impl<'a> Runner<'a> {
    fn new(net: &'a QOrthoNN, classical: bool, exec: &Execution) -> Result<Self> {
        Ok(if classical { Runner::Classical(net) } else { Runner::Noisy(net, net.prepare_noisy(exec)?) })
    }

    fn run(&self, raw: &[f64], seed: u64, tags: &[u64]) -> Result<(Vec<f64>, f64)> {
        match self {
            Runner::Classical(net) => Ok((net.forward(raw)?, 1.0)),
            Runner::Noisy(net, layers) => net.forward_prepared(layers, raw, &mut rng::stream(seed, tags)),
        }
    }
}

/// Per-target predictions from `p x scenarios` branch and `p x targets` trunk
/// embeddings.
fn combine_targets(bm: &[f64], tm: &[f64], batch: &Batch, p: usize) -> Vec<f64> {
    let (n, points) = (batch.scenarios(), batch.points());
    let mut out = vec![0.0; points];
    for i in 0..n {
        for e in batch.range(i) {
            out[e] = (0..p).map(|k| bm[k * n + i] * tm[k * points + e]).sum();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyPrediction {
    pub prediction: EnsemblePrediction,
    /// Smallest post-selection retention over every executed circuit.
    pub min_retained: f64,
}

/// Writes column `col` of a feature-major `len(e) x stride` block.
fn scatter(block: &mut [f64], e: &[f64], col: usize, stride: usize) {
    for (k, &v) in e.iter().enumerate() {
        block[k * stride + col] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Scenario, Split};
    use crate::noise::NoiseProfile;
    use crate::operator::{LossKind, MiniBatch};
    use alloc::string::ToString;
    use proptest::prelude::*;
    use rand::Rng as _;

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[2.5, 2.5, 2.5]), (2.5, 0.0));
        assert_eq!(aggregate(&[0.0, 2.0]), (1.0, 1.0));
        let v = [0.3, -1.2, 4.0, 2.2, 0.9];
        let mean = (0.3 - 1.2 + 4.0 + 2.2 + 0.9) / 5.0;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        let (m, s) = aggregate(&v);
        assert!((m - mean).abs() < 1e-15 && (s - libm::sqrt(var)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn aggregate_is_affine_equivariant(v in proptest::collection::vec(-5.0f64..5.0, 1..12), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let (m, s) = aggregate(&v);
            let w: Vec<f64> = v.iter().map(|x| a * x + b).collect();
            let (m2, s2) = aggregate(&w);
            prop_assert!((m2 - (a * m + b)).abs() <= 1e-12);
            prop_assert!((s2 - a.abs() * s).abs() <= 1e-12);
        }
    }

    #[test]
    fn hybrid_cost_terms() {
        let c = hybrid_cost(1, 2500, 20);
        assert_eq!(c.branch, 400.0);
        assert!((c.queries - 2500.0 * 20.0 * libm::log2(20.0)).abs() < 1e-9);
        assert_eq!(c.classical_baseline, 1_000_000.0);
        assert!(c.total() < c.classical_baseline);
        assert_eq!(hybrid_cost(3, 0, 20).queries, 0.0);
    }

    fn toy() -> OperatorDataset {
        let pool: Vec<f64> = (0..6).map(|k| k as f64 / 5.0).collect();
        let mut r = rng::stream(3, &[]);
        let scenarios = (0..10)
            .map(|i| {
                let u: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
                let targets = pool.iter().map(|y| u[0] * y + u[1] * y * y + u[2]).collect();
                Scenario { u, queries: (0..6).collect(), targets, split: if i < 8 { Split::Train } else { Split::Test } }
            })
            .collect();
        OperatorDataset { task: "toy".to_string(), branch_dim: 3, query_dim: 1, query_pool: pool, scenarios }
    }

    fn cfg() -> TrainConfig {
        TrainConfig { iterations: 30, lr: 1e-2, decay: None, min_lr: None, loss: LossKind::Mse, batch: MiniBatch::default(), log_every: 10 }
    }

    fn spec() -> ModelSpec {
        ModelSpec { layers: 2, width: 3, residual: false, fourier: None }
    }

    #[test]
    fn members_differ_and_training_is_reproducible() {
        let ds = toy();
        let (e, traces) = Ensemble::train(&ds, &spec(), &cfg(), 3, 42, 2).unwrap();
        assert_eq!((e.len(), traces.len()), (3, 3));
        assert!(e.seeds[0] != e.seeds[1] && e.seeds[1] != e.seeds[2]);
        assert_ne!(e.members[0].params(), e.members[1].params());
        let (again, _) = Ensemble::train(&ds, &spec(), &cfg(), 3, 42, 2).unwrap();
        assert_eq!(e, again);
        // forcing one seed makes members identical
        let same = DeepOnet::for_dataset(&ds, &spec(), 7).unwrap();
        let e2 = Ensemble::new(vec![same.clone(), same], vec![7, 7]).unwrap();
        let p = e2.predict_exact(&ds.batch(Split::Test)).unwrap();
        assert!(p.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn divergence_is_reported() {
        let mut ds = toy();
        ds.scenarios[0].targets[0] = f64::NAN;
        assert!(matches!(Ensemble::train(&ds, &spec(), &cfg(), 1, 1, 3), Err(Error::Diverged { member: 0, attempts: 3 })));
    }

    #[test]
    fn noiseless_modes_agree_with_exact() {
        let ds = toy();
        let (e, _) = Ensemble::train(&ds, &spec(), &cfg(), 3, 5, 1).unwrap();
        let b = ds.batch(Split::Test);
        let exact = e.predict_exact(&b).unwrap();
        let modes = [
            ExecMode::Independent(Hybrid::FullyQuantum),
            ExecMode::Independent(Hybrid::ClassicalBranch),
            ExecMode::Independent(Hybrid::ClassicalTrunk),
            ExecMode::Spqc,
        ];
        for mode in modes {
            let np = e.predict_noisy(&b, &Execution::exact(), mode, 1).unwrap();
            for (a, x) in np.prediction.mu.iter().zip(&exact.mu) {
                assert!((a - x).abs() < 1e-9, "{mode:?}");
            }
            for (a, x) in np.prediction.sigma.iter().zip(&exact.sigma) {
                assert!((a - x).abs() < 1e-8, "{mode:?}");
            }
        }
    }

    #[test]
    fn noisy_prediction_is_seeded() {
        let ds = toy();
        let (e, _) = Ensemble::train(&ds, &spec(), &cfg(), 2, 6, 1).unwrap();
        let b = ds.batch(Split::Test);
        let exec = Execution::sampled(NoiseProfile::depolarizing(4e-4, 0.01).unwrap(), 1000);
        for mode in [ExecMode::Independent(Hybrid::ClassicalBranch), ExecMode::Spqc] {
            let a = e.predict_noisy(&b, &exec, mode, 3).unwrap();
            let c = e.predict_noisy(&b, &exec, mode, 3).unwrap();
            assert_eq!(a, c);
            assert!(a.min_retained < 1.0 && a.min_retained > 0.5);
        }
    }

    #[test]
    fn every_target_draws_its_own_trunk_shots() {
        let mut ds = toy();
        let twin = ds.scenarios[8].clone();
        ds.scenarios.push(twin);
        let (e, _) = Ensemble::train(&ds, &spec(), &cfg(), 2, 6, 1).unwrap();
        let b = ds.batch(Split::Test);
        let n = b.scenarios();
        let (first, last) = (b.range(0), b.range(n - 1));
        let noise = NoiseProfile::depolarizing(4e-4, 0.0).unwrap();
        for mode in [ExecMode::Independent(Hybrid::ClassicalBranch), ExecMode::Spqc] {
            // identical inputs, so only shot noise can tell the two scenarios apart
            let sampled = e.predict_noisy(&b, &Execution::sampled(noise, 1000), mode, 3).unwrap().prediction.mu;
            assert!(first.clone().zip(last.clone()).all(|(x, y)| sampled[x] != sampled[y]), "{mode:?}");
            let exact = Execution { shots: Shots::Exact, ..Execution::sampled(noise, 1) };
            let exact = e.predict_noisy(&b, &exact, mode, 3).unwrap().prediction.mu;
            assert!(first.clone().zip(last.clone()).all(|(x, y)| exact[x] == exact[y]), "{mode:?}");
        }
    }
}
