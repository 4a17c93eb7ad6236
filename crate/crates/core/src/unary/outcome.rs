use alloc::vec;
use alloc::vec::Vec;
use core::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Data-register outcome after measurement: exactly one excited wire, or anything
/// else (ground or Hamming weight >= 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Invalid,
    Unary(usize),
}

pub trait Weight: Copy + Default + AddAssign + PartialEq {
    fn to_f64(self) -> f64;
}

impl Weight for u64 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Weight for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Dense table over `(ancilla bit, outcome)`; index `anc*(q+1) + slot` with slot 0
/// for `Invalid` and `k+1` for `Unary(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTable<T> {
    q: usize,
    values: Vec<T>,
}

pub type ShotCounts = OutcomeTable<u64>;
pub type OutcomeProbs = OutcomeTable<f64>;

impl<T: Weight> OutcomeTable<T> {
    pub fn new(q: usize) -> Self {
        OutcomeTable { q, values: vec![T::default(); 2 * (q + 1)] }
    }

    /// Wraps a flat value vector laid out as described on the type.
    pub fn from_values(q: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != 2 * (q + 1) {
            return Err(Error::DimensionMismatch { expected: 2 * (q + 1), got: values.len() });
        }
        Ok(OutcomeTable { q, values })
    }

    pub fn data_qubits(&self) -> usize {
        self.q
    }

    fn slot(&self, ancilla: usize, outcome: Outcome) -> usize {
        assert!(ancilla < 2, "ancilla bit must be 0 or 1");
        let s = match outcome {
            Outcome::Invalid => 0,
            Outcome::Unary(k) => {
                assert!(k < self.q, "unary index {k} out of range");
                k + 1
            }
        };
        ancilla * (self.q + 1) + s
    }

    pub fn get(&self, ancilla: usize, outcome: Outcome) -> T {
        self.values[self.slot(ancilla, outcome)]
    }

    pub fn add(&mut self, ancilla: usize, outcome: Outcome, v: T) {
        let i = self.slot(ancilla, outcome);
        self.values[i] += v;
    }

    pub fn set(&mut self, ancilla: usize, outcome: Outcome, v: T) {
        let i = self.slot(ancilla, outcome);
        self.values[i] = v;
    }

    pub fn total(&self) -> f64 {
        self.values.iter().map(|v| v.to_f64()).sum()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `(ancilla, outcome, value)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Outcome, T)> + '_ {
        let w = self.q + 1;
        self.values.iter().enumerate().map(move |(i, &v)| {
            let outcome = if i % w == 0 { Outcome::Invalid } else { Outcome::Unary(i % w - 1) };
            (i / w, outcome, v)
        })
    }
}

impl ShotCounts {
    pub fn shots(&self) -> u64 {
        self.values.iter().sum()
    }
}

/// Drops every non-unary outcome; returns the kept table and the retained fraction
/// (0 when the table is empty).
pub fn postselect_unary<T: Weight>(table: &OutcomeTable<T>) -> (OutcomeTable<T>, f64) {
    let total = table.total();
    let mut kept = table.clone();
    for a in 0..2 {
        kept.set(a, Outcome::Invalid, T::default());
    }
    let fraction = if total > 0.0 { kept.total() / total } else { 0.0 };
    (kept, fraction)
}

/// `y_j = sqrt(q) (T[0, e_{q-m+j}] - T[1, e_{q-m+j}]) / total(T)` for `j < m`.
///
/// Works on raw counts and on probabilities alike; post-select first to restrict
/// the normalizer to unary shots.
pub fn estimate_outputs<T: Weight>(table: &OutcomeTable<T>, m: usize) -> Result<Vec<f64>> {
    let q = table.q;
    if m > q {
        return Err(Error::DimensionMismatch { expected: q, got: m });
    }
    let total = table.total();
    if total <= 0.0 {
        return Err(Error::NoRetainedShots);
    }
    let scale = libm::sqrt(q as f64) / total;
    Ok((0..m)
        .map(|j| {
            let e = Outcome::Unary(q - m + j);
            scale * (table.get(0, e).to_f64() - table.get(1, e).to_f64())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_probability_gives_one_half() {
        let mut p = OutcomeProbs::new(4);
        for k in 0..4 {
            p.set(0, Outcome::Unary(k), 0.25);
        }
        assert_eq!(estimate_outputs(&p, 4).unwrap(), vec![0.5; 4]);
    }

    #[test]
    fn identity_of_squares() {
        // sqrt(q)/4 * ((y + 1/sqrt q)^2 - (y - 1/sqrt q)^2) = y
        let q = 6usize;
        let r = 1.0 / libm::sqrt(q as f64);
        for &y in &[-0.9, -0.2, 0.0, 0.37, 0.8] {
            let mut p = OutcomeProbs::new(q);
            p.set(0, Outcome::Unary(q - 1), 0.25 * (y + r) * (y + r));
            p.set(1, Outcome::Unary(q - 1), 0.25 * (y - r) * (y - r));
            let (p, _) = postselect_unary(&p);
            let scale = p.total();
            let est = estimate_outputs(&p, 1).unwrap()[0] * scale;
            assert!((est - y).abs() < 1e-15);
        }
    }

    #[test]
    fn equal_branches_give_zero() {
        let mut c = ShotCounts::new(3);
        c.set(0, Outcome::Unary(1), 40);
        c.set(1, Outcome::Unary(1), 40);
        c.set(0, Outcome::Unary(2), 20);
        assert_eq!(estimate_outputs(&c, 3).unwrap()[1], 0.0);
    }

    #[test]
    fn empty_table_cannot_be_estimated() {
        assert_eq!(estimate_outputs(&ShotCounts::new(3), 2), Err(Error::NoRetainedShots));
    }

    #[test]
    fn postselection_fractions() {
        let mut c = ShotCounts::new(3);
        c.set(0, Outcome::Unary(0), 30);
        c.set(1, Outcome::Unary(2), 50);
        let (kept, f) = postselect_unary(&c);
        assert_eq!((kept.clone(), f), (c.clone(), 1.0));

        c.set(0, Outcome::Invalid, 15);
        c.set(1, Outcome::Invalid, 5);
        let (kept, f) = postselect_unary(&c);
        assert_eq!(f, 0.8);
        assert_eq!(kept.shots(), 80);
        assert_eq!(kept.get(0, Outcome::Invalid), 0);

        let mut bad = ShotCounts::new(2);
        bad.set(0, Outcome::Invalid, 7);
        let (kept, f) = postselect_unary(&bad);
        assert_eq!((kept.shots(), f), (0, 0.0));
    }

    #[test]
    fn iteration_order_matches_layout() {
        let t = ShotCounts::new(2);
        let keys: Vec<(usize, Outcome)> = t.iter().map(|(a, o, _)| (a, o)).collect();
        assert_eq!(
            keys,
            vec![
                (0, Outcome::Invalid),
                (0, Outcome::Unary(0)),
                (0, Outcome::Unary(1)),
                (1, Outcome::Invalid),
                (1, Outcome::Unary(0)),
                (1, Outcome::Unary(1)),
            ]
        );
    }
}
