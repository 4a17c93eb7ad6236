//! Synthetic operator-learning benchmarks.

mod grf;
mod signals;
mod solvers;

pub use grf::{grf_draw, grf_factor, grf_sample, Kernel};
pub use signals::{multitone_signal, online_windows, SignalFamily, Window};
pub use solvers::{advection_solve, antiderivative, TrigInterpolant};

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{OperatorDataset, Scenario, Split};
use crate::rng;
use crate::{Error, Result};

/// `n` points spanning `[0, 1]` inclusive.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![0.0],
        _ => (0..n).map(|k| k as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` evenly spaced indices over `0..len`, first and last included.
pub fn sensor_indices(len: usize, n: usize) -> Vec<usize> {
    if n == 1 {
        return alloc::vec![0];
    }
    (0..n).map(|k| libm::round(k as f64 * (len - 1) as f64 / (n - 1) as f64) as usize).collect()
}

/// How scenarios are divided; fractions are rounded down for train and cal, and
/// the test split takes the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SplitSpec {
    Counts { train: usize, cal: usize, test: usize },
    Fractions { train: f64, cal: f64, test: f64 },
}

impl SplitSpec {
    pub fn sizes(&self, total: usize) -> Result<[usize; 3]> {
        match *self {
            SplitSpec::Counts { train, cal, test } => {
                if train + cal + test != total {
                    return Err(Error::InvalidConfig("split counts must sum to the scenario count".into()));
                }
                Ok([train, cal, test])
            }
            SplitSpec::Fractions { train, cal, test } => {
                if [train, cal, test].iter().any(|f| !(*f >= 0.0)) || (train + cal + test - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig("split fractions must be non-negative and sum to 1".into()));
                }
                let a = libm::floor(train * total as f64) as usize;
                let b = libm::floor(cal * total as f64) as usize;
                Ok([a, b, total - a - b])
            }
        }
    }

    pub fn total(&self) -> Option<usize> {
        match *self {
            SplitSpec::Counts { train, cal, test } => Some(train + cal + test),
            SplitSpec::Fractions { .. } => None,
        }
    }
}

/// Tags scenarios with splits after a seeded shuffle.
pub fn assign_splits(scenarios: &mut [Scenario], spec: &SplitSpec, seed: u64) -> Result<()> {
    let sizes = spec.sizes(scenarios.len())?;
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[0x5B]));
    for (rank, &i) in order.iter().enumerate() {
        scenarios[i].split = if rank < sizes[0] {
            Split::Train
        } else if rank < sizes[0] + sizes[1] {
            Split::Cal
        } else {
            Split::Test
        };
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntiderivativeParams {
    pub sensors: usize,
    /// Fine grid on which `v` is drawn, integrated and queried.
    pub resolution: usize,
    pub kernel: Kernel,
    pub splits: SplitSpec,
}

impl Default for AntiderivativeParams {
    fn default() -> Self {
        AntiderivativeParams {
            sensors: 10,
            resolution: 100,
            kernel: Kernel::SquaredExponential { length_scale: 0.2 },
            splits: SplitSpec::Counts { train: 200, cal: 50, test: 50 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvectionParams {
    pub sensors: usize,
    /// Periodic grid `k / resolution` carrying the initial condition.
    pub resolution: usize,
    pub space_points: usize,
    pub time_points: usize,
    pub kernel: Kernel,
    pub splits: SplitSpec,
}

impl Default for AdvectionParams {
    fn default() -> Self {
        AdvectionParams {
            sensors: 20,
            resolution: 100,
            space_points: 50,
            time_points: 50,
            kernel: Kernel::ExpSineSquared { length_scale: 1.0, period: 1.0 },
            splits: SplitSpec::Counts { train: 1000, cal: 200, test: 200 },
        }
    }
}

/// Past window to future trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastParams {
    pub signals: SignalFamily,
    pub count: usize,
    /// Window holds `tau + 1` samples ending at the forecast origin.
    pub tau: usize,
    pub horizon: usize,
    pub splits: SplitSpec,
}

impl Default for ForecastParams {
    fn default() -> Self {
        ForecastParams {
            signals: SignalFamily::default(),
            count: 300,
            tau: 20,
            horizon: 20,
            splits: SplitSpec::Fractions { train: 0.8, cal: 0.1, test: 0.1 },
        }
    }
}

/// Sliding windows to the value `horizon` steps after the window end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineParams {
    pub signals: SignalFamily,
    pub count: usize,
    pub tau: usize,
    pub horizon: usize,
    pub splits: SplitSpec,
}

impl Default for OnlineParams {
    fn default() -> Self {
        OnlineParams { signals: SignalFamily::default(), count: 10, tau: 10, horizon: 1, splits: SplitSpec::Fractions { train: 0.8, cal: 0.1, test: 0.1 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "task")]
pub enum TaskSpec {
    Antiderivative(AntiderivativeParams),
    Advection(AdvectionParams),
    Forecasting(ForecastParams),
    PointwiseOnline(OnlineParams),
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Antiderivative(_) => "antiderivative",
            TaskSpec::Advection(_) => "advection",
            TaskSpec::Forecasting(_) => "forecasting",
            TaskSpec::PointwiseOnline(_) => "pointwise_online",
        }
    }
}

pub fn build_operator_dataset(task: &TaskSpec, seed: u64) -> Result<OperatorDataset> {
    let ds = match task {
        TaskSpec::Antiderivative(p) => antiderivative_dataset(p, seed)?,
        TaskSpec::Advection(p) => advection_dataset(p, seed)?,
        TaskSpec::Forecasting(p) => forecasting_dataset(p, seed)?,
        TaskSpec::PointwiseOnline(p) => online_dataset(p, seed)?,
    };
    ds.validate()?;
    Ok(ds)
}

fn count_of(splits: &SplitSpec, name: &str) -> Result<usize> {
    splits.total().ok_or_else(|| Error::InvalidConfig(alloc::format!("{name} needs absolute split counts")))
}

fn antiderivative_dataset(p: &AntiderivativeParams, seed: u64) -> Result<OperatorDataset> {
    if p.sensors == 0 || p.sensors > p.resolution || p.resolution < 2 {
        return Err(Error::InvalidConfig("antiderivative needs 1 <= sensors <= resolution and resolution >= 2".into()));
    }
    let n = count_of(&p.splits, "antiderivative")?;
    let grid = uniform_grid(p.resolution);
    let h = 1.0 / (p.resolution - 1) as f64;
    let idx = sensor_indices(p.resolution, p.sensors);
    let vs = grf_sample(&p.kernel, &grid, n, seed)?;
    let mut scenarios: Vec<Scenario> = vs
        .iter()
        .map(|v| Scenario {
            u: idx.iter().map(|&k| v[k]).collect(),
            queries: (0..p.resolution as u32).collect(),
            targets: antiderivative(v, h),
            split: Split::Train,
        })
        .collect();
    assign_splits(&mut scenarios, &p.splits, seed)?;
    Ok(OperatorDataset { task: "antiderivative".to_string(), branch_dim: p.sensors, query_dim: 1, query_pool: grid, scenarios })
}

fn advection_dataset(p: &AdvectionParams, seed: u64) -> Result<OperatorDataset> {
    if p.sensors == 0 || p.sensors > p.resolution || p.space_points == 0 || p.time_points == 0 {
        return Err(Error::InvalidConfig("advection needs positive grid sizes and sensors <= resolution".into()));
    }
    let n = count_of(&p.splits, "advection")?;
    let grid: Vec<f64> = (0..p.resolution).map(|k| k as f64 / p.resolution as f64).collect();
    let xs = uniform_grid(p.space_points);
    let ts = uniform_grid(p.time_points);
    let mut pool = Vec::with_capacity(2 * xs.len() * ts.len());
    for &x in &xs {
        for &t in &ts {
            pool.push(x);
            pool.push(t);
        }
    }
    let sensors: Vec<usize> = (0..p.sensors).map(|k| k * p.resolution / p.sensors).collect();
    let u0s = grf_sample(&p.kernel, &grid, n, seed)?;
    let mut scenarios: Vec<Scenario> = u0s
        .iter()
        .map(|u0| {
            let f = TrigInterpolant::new(u0);
            let targets = pool.chunks_exact(2).map(|q| f.eval(q[0] - q[1])).collect();
            Scenario { u: sensors.iter().map(|&k| u0[k]).collect(), queries: (0..(xs.len() * ts.len()) as u32).collect(), targets, split: Split::Train }
        })
        .collect();
    assign_splits(&mut scenarios, &p.splits, seed)?;
    Ok(OperatorDataset { task: "advection".to_string(), branch_dim: p.sensors, query_dim: 2, query_pool: pool, scenarios })
}

fn forecasting_dataset(p: &ForecastParams, seed: u64) -> Result<OperatorDataset> {
    if p.horizon == 0 {
        return Err(Error::InvalidConfig("forecast horizon must be positive".into()));
    }
    let len = p.signals.length;
    if p.tau + p.horizon >= len {
        return Err(Error::WindowTooLong { window: p.tau + 1, horizon: p.horizon, len });
    }
    let pool: Vec<f64> = (1..=p.horizon).map(|h| h as f64 / p.horizon as f64).collect();
    let mut scenarios = Vec::with_capacity(p.count);
    for i in 0..p.count {
        let mut r = rng::stream(seed, &[0xF0, i as u64]);
        let sig = multitone_signal(&p.signals, &mut r);
        // forecast origin drawn uniformly among the admissible positions
        let origin = p.tau + rand::Rng::random_range(&mut r, 0..len - p.tau - p.horizon);
        scenarios.push(Scenario {
            u: sig[origin - p.tau..=origin].to_vec(),
            queries: (0..p.horizon as u32).collect(),
            targets: sig[origin + 1..=origin + p.horizon].to_vec(),
            split: Split::Train,
        });
    }
    assign_splits(&mut scenarios, &p.splits, seed)?;
    Ok(OperatorDataset { task: "forecasting".to_string(), branch_dim: p.tau + 1, query_dim: 1, query_pool: pool, scenarios })
}

fn online_dataset(p: &OnlineParams, seed: u64) -> Result<OperatorDataset> {
    let len = p.signals.length;
    let mut pool = Vec::new();
    let mut scenarios = Vec::new();
    for i in 0..p.count {
        let sig = multitone_signal(&p.signals, &mut rng::stream(seed, &[0x0A, i as u64]));
        for w in online_windows(&sig, p.tau, p.horizon)? {
            pool.push(w.end as f64 / (len - 1) as f64);
            scenarios.push(Scenario { u: w.window, queries: alloc::vec![(pool.len() - 1) as u32], targets: alloc::vec![w.target], split: Split::Train });
        }
    }
    assign_splits(&mut scenarios, &p.splits, seed)?;
    Ok(OperatorDataset { task: "pointwise_online".to_string(), branch_dim: p.tau + 1, query_dim: 1, query_pool: pool, scenarios })
}
