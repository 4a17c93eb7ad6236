//! Operator-learning datasets: scenarios of sensor readings paired with targets
//! at query coordinates drawn from a shared pool.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Cal,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Cal, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Cal => "cal",
            Split::Test => "test",
        }
    }
}

/// One input function with its queried targets. `queries[j]` indexes the
/// dataset's query pool and pairs with `targets[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub u: Vec<f64>,
    pub queries: Vec<u32>,
    pub targets: Vec<f64>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDataset {
    pub task: String,
    pub branch_dim: usize,
    pub query_dim: usize,
    /// Row-major `pool_len x query_dim`.
    pub query_pool: Vec<f64>,
    pub scenarios: Vec<Scenario>,
}

impl OperatorDataset {
    pub fn pool_len(&self) -> usize {
        if self.query_dim == 0 {
            0
        } else {
            self.query_pool.len() / self.query_dim
        }
    }

    pub fn query(&self, k: usize) -> &[f64] {
        &self.query_pool[k * self.query_dim..(k + 1) * self.query_dim]
    }

    pub fn count(&self, split: Split) -> usize {
        self.scenarios.iter().filter(|s| s.split == split).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.query_dim == 0 || self.query_pool.len() % self.query_dim != 0 {
            return Err(Error::InvalidConfig("query pool is not a whole number of points".into()));
        }
        let pool = self.pool_len();
        for s in &self.scenarios {
            if s.u.len() != self.branch_dim {
                return Err(Error::DimensionMismatch { expected: self.branch_dim, got: s.u.len() });
            }
            if s.queries.len() != s.targets.len() {
                return Err(Error::DimensionMismatch { expected: s.queries.len(), got: s.targets.len() });
            }
            if s.queries.iter().any(|&q| q as usize >= pool) {
                return Err(Error::InvalidConfig("query index outside the pool".into()));
            }
            if s.u.iter().chain(&s.targets).any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite value in dataset".into()));
            }
        }
        if self.query_pool.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite query coordinate".into()));
        }
        Ok(())
    }

    /// Gathers one split into a [`Batch`].
    pub fn batch(&self, split: Split) -> Batch {
        let picked: Vec<&Scenario> = self.scenarios.iter().filter(|s| s.split == split).collect();
        Batch::gather(self, &picked)
    }

    /// Row-major branch inputs of a split, for fitting normalizations.
    pub fn branch_inputs(&self, split: Split) -> Vec<f64> {
        self.scenarios.iter().filter(|s| s.split == split).flat_map(|s| s.u.iter().copied()).collect()
    }
}

/// A set of scenarios in compressed-row form over a local pool of unique queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub branch_dim: usize,
    pub query_dim: usize,
    /// Row-major `scenarios x branch_dim`.
    pub u: Vec<f64>,
    /// Row-major `queries x query_dim`, unique points used by this batch.
    pub y: Vec<f64>,
    /// Scenario `i` owns entries `offsets[i]..offsets[i+1]` of `cols`/`targets`.
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub targets: Vec<f64>,
    /// Every scenario queries all local points in order, so targets form a dense
    /// `scenarios x queries` matrix.
    pub shared_grid: bool,
}

impl Batch {
    pub fn gather(ds: &OperatorDataset, scenarios: &[&Scenario]) -> Batch {
        let mut local: BTreeMap<u32, usize> = BTreeMap::new();
        let mut order: Vec<u32> = Vec::new();
        let mut offsets = Vec::with_capacity(scenarios.len() + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut targets = Vec::new();
        let mut u = Vec::with_capacity(scenarios.len() * ds.branch_dim);
        for s in scenarios {
            u.extend_from_slice(&s.u);
            for (&q, &t) in s.queries.iter().zip(&s.targets) {
                let next = order.len();
                let idx = *local.entry(q).or_insert_with(|| {
                    order.push(q);
                    next
                });
                cols.push(idx);
                targets.push(t);
            }
            offsets.push(cols.len());
        }
        let mut y = Vec::with_capacity(order.len() * ds.query_dim);
        for &q in &order {
            y.extend_from_slice(ds.query(q as usize));
        }
        let nq = order.len();
        let shared_grid = offsets.windows(2).all(|w| w[1] - w[0] == nq)
            && cols.chunks(nq.max(1)).all(|c| c.iter().enumerate().all(|(j, &k)| j == k));
        Batch { branch_dim: ds.branch_dim, query_dim: ds.query_dim, u, y, offsets, cols, targets, shared_grid }
    }

    pub fn scenarios(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn queries(&self) -> usize {
        if self.query_dim == 0 {
            0
        } else {
            self.y.len() / self.query_dim
        }
    }

    pub fn points(&self) -> usize {
        self.targets.len()
    }

    pub fn range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }
}
