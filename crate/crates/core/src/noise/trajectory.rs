use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{apply_readout, outcome_probs, NoiseProfile};
use crate::fullstate::{RegisterCircuit, StateVector};
use crate::unary::ShotCounts;
use crate::Result;

/// A realised error: gate index and a Pauli string over the gate support, two bits
/// per wire (1 = X, 2 = Y, 3 = Z), never the identity.
type Fault = (u32, u32);

/// Per-shot Monte-Carlo unravelling of the depolarizing channels.
///
/// Each gate independently suffers, with probability `lambda`, a Pauli drawn
/// uniformly from all `4^k` strings on its support (identity included), which
/// reproduces the local depolarizing channel on average. Error positions are drawn
/// by inverting the cumulative hazard, so a shot costs `O(1 + errors)` draws. Every
/// distinct fault pattern is simulated once from the cached fault-free prefix state;
/// each shot then draws one outcome from its pattern's readout-confused
/// distribution. Returns one table per address value.
pub fn trajectory_sample<R: Rng + ?Sized>(
    circuit: &RegisterCircuit,
    q: usize,
    address_bits: usize,
    noise: &NoiseProfile,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<ShotCounts>> {
    noise.validate()?;
    let n = circuit.qubits;
    let supports: Vec<Vec<usize>> = circuit.ops.iter().map(|op| op.support()).collect();
    let mut hazard = Vec::with_capacity(supports.len() + 1);
    hazard.push(0.0);
    for s in &supports {
        let lam = noise.lambda_for(s.len());
        let h = if lam >= 1.0 { f64::INFINITY } else { -libm::log1p(-lam) };
        hazard.push(hazard.last().copied().unwrap_or(0.0) + h);
    }

    let mut prefix = Vec::with_capacity(circuit.ops.len() + 1);
    let mut v = StateVector::ground(n);
    prefix.push(v.clone());
    for op in &circuit.ops {
        v.apply(op)?;
        prefix.push(v.clone());
    }

    let buckets = 2 * (q + 1) << address_bits;
    let mut cache: BTreeMap<Vec<Fault>, usize> = BTreeMap::new();
    let mut cdfs: Vec<(Vec<f64>, usize)> = Vec::new();
    let mut counts = vec![0u64; buckets];
    let mut pattern: Vec<Fault> = Vec::new();

    for _ in 0..shots {
        pattern.clear();
        let mut g = 0usize;
        loop {
            let e: f64 = Exp1.sample(rng);
            let target = hazard[g] + e;
            // first gate index k >= g with hazard[k + 1] > target
            let k = g + hazard[g + 1..].partition_point(|&h| h <= target);
            if k >= supports.len() {
                break;
            }
            let k_wires = supports[k].len() as u32;
            let p: u32 = rng.random_range(0..1u32 << (2 * k_wires));
            if p != 0 {
                pattern.push((k as u32, p));
            }
            g = k + 1;
        }
        let idx = match cache.get(&pattern) {
            Some(&i) => i,
            None => {
                let probs = fault_probabilities(circuit, &supports, &prefix, &pattern, noise.readout_flip)?;
                let flat: Vec<f64> = outcome_probs(&probs, q, address_bits).iter().flat_map(|t| t.values().to_vec()).collect();
                let mut acc = 0.0;
                let cdf: Vec<f64> = flat
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                let last = flat.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                cdfs.push((cdf, last));
                cache.insert(pattern.clone(), cdfs.len() - 1);
                cdfs.len() - 1
            }
        };
        let (cdf, last) = &cdfs[idx];
        let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
        let b = cdf.partition_point(|&c| c <= u).min(*last);
        counts[b] += 1;
    }

    let width = 2 * (q + 1);
    counts.chunks(width).map(|c| ShotCounts::from_values(q, c.to_vec())).collect()
}

fn fault_probabilities(
    circuit: &RegisterCircuit,
    supports: &[Vec<usize>],
    prefix: &[StateVector],
    pattern: &[Fault],
    flip: f64,
) -> Result<Vec<f64>> {
    let v = match pattern.first() {
        None => prefix[circuit.ops.len()].clone(),
        Some(&(g0, _)) => {
            let mut v = prefix[g0 as usize + 1].clone();
            let mut faults = pattern.iter().peekable();
            for g in g0 as usize..circuit.ops.len() {
                if g > g0 as usize {
                    v.apply(&circuit.ops[g])?;
                }
                while let Some(&&(fg, p)) = faults.peek() {
                    if fg as usize != g {
                        break;
                    }
                    for (slot, &w) in supports[g].iter().enumerate() {
                        v.apply_pauli(w, ((p >> (2 * slot)) & 3) as u8);
                    }
                    faults.next();
                }
            }
            v
        }
    };
    let mut probs = v.probabilities();
    apply_readout(&mut probs, v.qubits(), flip);
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{evolve_density, measure_probs, sample_outcomes};
    use crate::rng;
    use crate::unary::{pyramid_layout, tomography_circuit};

    fn small_circuit() -> RegisterCircuit {
        let layout = pyramid_layout(3, 3);
        let c = tomography_circuit(&layout, &rng::uniform_angles(2, 3), &rng::unit_vector(2, 3)).unwrap();
        RegisterCircuit::from_circuit(&c)
    }

    #[test]
    fn reproducible_per_seed() {
        let c = small_circuit();
        let p = NoiseProfile::depolarizing(0.02, 0.01).unwrap();
        let a = trajectory_sample(&c, 3, 0, &p, 20_000, &mut rng::stream(3, &[])).unwrap();
        let b = trajectory_sample(&c, 3, 0, &p, 20_000, &mut rng::stream(3, &[])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].shots(), 20_000);
    }

    #[test]
    fn noiseless_trajectories_match_noiseless_distribution() {
        let c = small_circuit();
        let p = NoiseProfile::noiseless();
        let n = 200_000u64;
        let t = trajectory_sample(&c, 3, 0, &p, n, &mut rng::stream(5, &[])).unwrap();
        let exact = outcome_probs(&measure_probs(&evolve_density(&c, &p).unwrap(), 0.0), 3, 0);
        for ((_, _, k), (_, _, pk)) in t[0].iter().zip(exact[0].iter()) {
            let sd = libm::sqrt(n as f64 * pk * (1.0 - pk)).max(1.0);
            assert!((k as f64 - n as f64 * pk).abs() <= 4.0 * sd);
        }
    }

    #[test]
    fn converges_to_density_evolution() {
        // Strong noise so that the channel, not sampling, dominates the comparison.
        let c = small_circuit();
        let p = NoiseProfile::depolarizing(0.05, 0.02).unwrap();
        let n = 400_000u64;
        let t = trajectory_sample(&c, 3, 0, &p, n, &mut rng::stream(8, &[])).unwrap();
        let exact = outcome_probs(&measure_probs(&evolve_density(&c, &p).unwrap(), p.readout_flip), 3, 0);
        let m = sample_outcomes(&exact, n, &mut rng::stream(8, &[1])).unwrap();
        for (((_, _, k), (_, _, pk)), (_, _, km)) in t[0].iter().zip(exact[0].iter()).zip(m[0].iter()) {
            let sd = libm::sqrt(n as f64 * pk * (1.0 - pk)).max(1.0);
            assert!((k as f64 - n as f64 * pk).abs() <= 4.5 * sd, "{k} vs {}", n as f64 * pk);
            assert!((km as f64 - n as f64 * pk).abs() <= 4.5 * sd);
        }
    }
}
