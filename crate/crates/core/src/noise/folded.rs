//! Circuits run many times with only a short input-dependent segment: the fixed
//! head is evolved once, and the fixed tail with its readout is folded into one
//! measurement effect per outcome slot.

use alloc::vec::Vec;

use super::density::{evolve_ops, DensityMatrix};
use super::{apply_readout, NoiseProfile};
use crate::fullstate::{classify, RegisterOp};
use crate::unary::{Outcome, OutcomeProbs};
use crate::Result;

/// `head ; body(input) ; tail` under one noise profile, each gate followed by
/// depolarizing noise on its support as in [`evolve_density`](super::evolve_density).
///
/// Pulling the readout effects back through the noisy tail (the adjoint of each
/// gate, then the depolarizing channel, which is its own adjoint) gives operators
/// `E_t` with `Tr(E_t rho)` equal to the probability that `rho` run through the
/// tail and read out lands in slot `t`.
///
/// The tail must act block-diagonally on the address register (address wires
/// only ever control), which keeps every effect block-diagonal there; only those
/// blocks are stored.
#[derive(Debug, Clone)]
pub struct FoldedCircuit {
    q: usize,
    address_bits: usize,
    noise: NoiseProfile,
    head: DensityMatrix,
    /// Effect `t`, address block `a`, row-major `2^(q+1)` square block.
    effects: Vec<f64>,
}

impl FoldedCircuit {
    /// Register of `qubits` wires laid out as in [`classify`]: `q` data wires, the
    /// ancilla, then `address_bits` address wires.
    pub fn new(qubits: usize, q: usize, address_bits: usize, head: &[RegisterOp], tail: &[RegisterOp], noise: &NoiseProfile) -> Result<Self> {
        noise.validate()?;
        let mut rho = DensityMatrix::ground(qubits)?;
        evolve_ops(&mut rho, head, noise)?;
        let dim = 1usize << qubits;
        let width = 2 * (q + 1);
        let slot_of = |i: usize| {
            let (addr, anc, outcome) = classify(i, q);
            let s = match outcome {
                Outcome::Invalid => 0,
                Outcome::Unary(k) => k + 1,
            };
            addr * width + anc * (q + 1) + s
        };
        let block = 1usize << (q + 1);
        let mut effects = Vec::with_capacity((width << address_bits) * dim * block);
        for t in 0..width << address_bits {
            let mut d: Vec<f64> = (0..dim).map(|i| if slot_of(i) == t { 1.0 } else { 0.0 }).collect();
            // symmetric flips: P(observed in t | true i) is the flipped indicator at i
            apply_readout(&mut d, qubits, noise.readout_flip);
            let mut e = DensityMatrix::from_diagonal(qubits, &d)?;
            for op in tail.iter().rev() {
                let support = op.support();
                e.depolarize(noise.lambda_for(support.len()), &support)?;
                e.apply_transposed(op);
            }
            for a in 0..1usize << address_bits {
                for r in a * block..(a + 1) * block {
                    effects.extend((a * block..(a + 1) * block).map(|c| e.get(r, c)));
                }
            }
            debug_assert!((0..dim).all(|r| (0..dim).all(|c| r / block == c / block || e.get(r, c) == 0.0)), "tail mixes addresses");
        }
        Ok(FoldedCircuit { q, address_bits, noise: *noise, head: rho, effects })
    }

    /// Outcome probabilities after running `body` between the head and the tail,
    /// one table per address value as in [`outcome_probs`](super::outcome_probs).
    pub fn tables(&self, body: &[RegisterOp]) -> Result<Vec<OutcomeProbs>> {
        let mut rho = self.head.clone();
        evolve_ops(&mut rho, body, &self.noise)?;
        let block = 1usize << (self.q + 1);
        let mut diag_blocks = Vec::with_capacity(block * rho.dim());
        for a in 0..1usize << self.address_bits {
            for r in a * block..(a + 1) * block {
                diag_blocks.extend((a * block..(a + 1) * block).map(|c| rho.get(r, c)));
            }
        }
        let values: Vec<f64> = self.effects.chunks_exact(diag_blocks.len()).map(|e| dot(e, &diag_blocks).max(0.0)).collect();
        Ok(values
            .chunks_exact(2 * (self.q + 1))
            .take(1 << self.address_bits)
            .map(|c| OutcomeProbs::from_values(self.q, c.to_vec()).expect("slot layout"))
            .collect())
    }
}

/// Four running sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}
