use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::fullstate::classify;
use crate::unary::{OutcomeProbs, ShotCounts};
use crate::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// Independent symmetric bit flips on every measured wire.
pub fn apply_readout(probs: &mut [f64], qubits: usize, flip: f64) {
    if flip == 0.0 {
        return;
    }
    for w in 0..qubits {
        let m = 1 << w;
        for i in (0..probs.len()).filter(|i| i & m == 0) {
            let (a, b) = (probs[i], probs[i | m]);
            probs[i] = (1.0 - flip) * a + flip * b;
            probs[i | m] = flip * a + (1.0 - flip) * b;
        }
    }
}

/// Seeded multinomial draw by sequential conditional binomials.
pub fn multinomial_sample<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::InvalidProbabilities(format!("entry {p} is negative or NaN")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidProbabilities(format!("sum is {total}")));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() || p >= mass {
            counts[i] = left;
            break;
        }
        let k = if p <= 0.0 { 0 } else { Binomial::new(left, (p / mass).min(1.0)).expect("p in [0,1]").sample(rng) };
        counts[i] = k;
        left -= k;
        mass -= p;
        if mass <= 0.0 {
            // rounding exhausted the mass; the remaining outcomes have zero weight
            counts[i] += left;
            break;
        }
    }
    Ok(counts)
}

/// Groups full-register probabilities into one outcome table per address value,
/// `2^address_bits` tables in all.
pub fn outcome_probs(probs: &[f64], q: usize, address_bits: usize) -> Vec<OutcomeProbs> {
    let mut tables = vec![OutcomeProbs::new(q); 1 << address_bits];
    for (i, &p) in probs.iter().enumerate() {
        let (addr, anc, outcome) = classify(i, q);
        tables[addr].add(anc, outcome, p);
    }
    tables
}

/// One global multinomial draw over all tables jointly.
pub fn sample_outcomes<R: Rng + ?Sized>(tables: &[OutcomeProbs], shots: u64, rng: &mut R) -> Result<Vec<ShotCounts>> {
    let flat: Vec<f64> = tables.iter().flat_map(|t| t.values().iter().copied()).collect();
    let counts = multinomial_sample(&flat, shots, rng)?;
    let width = flat.len() / tables.len().max(1);
    tables
        .iter()
        .zip(counts.chunks(width.max(1)))
        .map(|(t, c)| ShotCounts::from_values(t.data_qubits(), c.to_vec()))
        .collect()
}
