use alloc::vec;
use alloc::vec::Vec;

use super::profile::in_range;
use super::{apply_readout, NoiseProfile};
use crate::fullstate::{RegisterCircuit, RegisterOp, StateVector};
use crate::{Error, Result};

/// Largest register evolved as an exact density matrix (`4^12` entries).
pub const DENSITY_QUBIT_CAP: usize = 12;

/// Row-major density matrix. Every gate in the model is real orthogonal and the
/// depolarizing channel is real-linear, so the matrix stays real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    data: Vec<f64>,
}

fn check_cap(qubits: usize) -> Result<()> {
    if qubits > DENSITY_QUBIT_CAP {
        return Err(Error::CapacityExceeded { qubits, cap: DENSITY_QUBIT_CAP });
    }
    Ok(())
}

impl DensityMatrix {
    pub fn from_pure(v: &StateVector) -> Result<Self> {
        check_cap(v.qubits())?;
        let a = v.amplitudes();
        let mut data = vec![0.0; a.len() * a.len()];
        for (r, &x) in a.iter().enumerate() {
            if x != 0.0 {
                for (c, &y) in a.iter().enumerate() {
                    data[r * a.len() + c] = x * y;
                }
            }
        }
        Ok(DensityMatrix { qubits: v.qubits(), data })
    }

    pub fn ground(qubits: usize) -> Result<Self> {
        check_cap(qubits)?;
        let dim = 1 << qubits;
        let mut data = vec![0.0; dim * dim];
        data[0] = 1.0;
        Ok(DensityMatrix { qubits, data })
    }

    pub fn maximally_mixed(qubits: usize) -> Result<Self> {
        check_cap(qubits)?;
        let dim = 1 << qubits;
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0 / dim as f64;
        }
        Ok(DensityMatrix { qubits, data })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim() + c]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for r in 0..d {
            for c in 0..r {
                m = m.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        m
    }

    /// Reduced 2x2 state of one wire.
    pub fn reduced_qubit(&self, wire: usize) -> [[f64; 2]; 2] {
        let mask = 1 << wire;
        let mut out = [[0.0; 2]; 2];
        for r in (0..self.dim()).filter(|r| r & mask == 0) {
            for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                out[a][b] += self.get(r | (a * mask), r | (b * mask));
            }
        }
        out
    }

    /// Diagonal operator; with a probability vector this is a classical mixture.
    pub fn from_diagonal(qubits: usize, diag: &[f64]) -> Result<Self> {
        check_cap(qubits)?;
        let dim = 1 << qubits;
        if diag.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: diag.len() });
        }
        let mut data = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            data[i * dim + i] = d;
        }
        Ok(DensityMatrix { qubits, data })
    }

    /// `rho -> G rho G^T`.
    pub fn apply(&mut self, op: &RegisterOp) {
        self.conjugate(op, false);
    }

    /// `E -> G^T E G`, the adjoint action used to pull effects back through a gate.
    pub fn apply_transposed(&mut self, op: &RegisterOp) {
        self.conjugate(op, true);
    }

    fn conjugate(&mut self, op: &RegisterOp, transpose: bool) {
        let dim = self.dim();
        let mut pairs = Vec::with_capacity(dim / 2);
        op.for_each_pair(self.qubits, |i, j, m| pairs.push((i, j, if transpose { [m[0], m[2], m[1], m[3]] } else { m })));
        let data = &mut self.data;
        for &(i, j, m) in &pairs {
            let (ri, rj) = two_rows(data, dim, i, j);
            for (x, y) in ri.iter_mut().zip(rj.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = m[0] * u + m[1] * v;
                *y = m[2] * u + m[3] * v;
            }
        }
        for row in data.chunks_exact_mut(dim) {
            for &(i, j, m) in &pairs {
                let (u, v) = (row[i], row[j]);
                row[i] = m[0] * u + m[1] * v;
                row[j] = m[2] * u + m[3] * v;
            }
        }
    }

    /// Local depolarizing channel on `support`:
    /// `rho -> (1 - lambda) rho + lambda (I/2^k (x) Tr_support rho)`.
    pub fn depolarize(&mut self, lambda: f64, support: &[usize]) -> Result<()> {
        in_range("lambda", lambda, 0.0, 1.0)?;
        if lambda == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        let mask = support.iter().fold(0usize, |m, &w| m | (1 << w));
        let subsets: Vec<usize> = (0..dim).filter(|s| s & !mask == 0).collect();
        let rest: Vec<usize> = (0..dim).filter(|s| s & mask == 0).collect();
        let keep = 1.0 - lambda;
        let mix = lambda / subsets.len() as f64;
        let data = &mut self.data;
        for &r0 in &rest {
            for &c0 in &rest {
                let t: f64 = subsets.iter().map(|&s| data[(r0 | s) * dim + (c0 | s)]).sum();
                for &s1 in &subsets {
                    let row = (r0 | s1) * dim;
                    for &s2 in &subsets {
                        let e = &mut data[row + (c0 | s2)];
                        *e = keep * *e + if s1 == s2 { mix * t } else { 0.0 };
                    }
                }
            }
        }
        Ok(())
    }
}

fn two_rows(data: &mut [f64], dim: usize, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    if i < j {
        let (lo, hi) = data.split_at_mut(j * dim);
        (&mut lo[i * dim..(i + 1) * dim], &mut hi[..dim])
    } else {
        let (lo, hi) = data.split_at_mut(i * dim);
        let (a, b) = (&mut hi[..dim], &mut lo[j * dim..(j + 1) * dim]);
        (a, b)
    }
}

/// Exact gate-by-gate evolution from `|0...0>`, each gate followed by depolarizing
/// noise on its support.
pub fn evolve_density(circuit: &RegisterCircuit, noise: &NoiseProfile) -> Result<DensityMatrix> {
    noise.validate()?;
    let mut rho = DensityMatrix::ground(circuit.qubits)?;
    evolve_ops(&mut rho, &circuit.ops, noise)?;
    Ok(rho)
}

pub(crate) fn evolve_ops(rho: &mut DensityMatrix, ops: &[RegisterOp], noise: &NoiseProfile) -> Result<()> {
    for op in ops {
        rho.apply(op);
        let support = op.support();
        rho.depolarize(noise.lambda_for(support.len()), &support)?;
    }
    Ok(())
}

/// Diagonal pushed through independent symmetric readout flips.
pub fn measure_probs(rho: &DensityMatrix, readout_flip: f64) -> Vec<f64> {
    let mut p: Vec<f64> = rho.diagonal().into_iter().map(|x| x.max(0.0)).collect();
    apply_readout(&mut p, rho.qubits, readout_flip);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::unary::{pyramid_layout, simulate_unary, tomography_circuit, UnaryState};

    fn layer_circuit(n: usize, seed: u64) -> (crate::unary::Circuit, RegisterCircuit) {
        let layout = pyramid_layout(n, n);
        let c = tomography_circuit(&layout, &rng::uniform_angles(seed, layout.angle_count()), &rng::unit_vector(seed, n))
            .unwrap();
        let r = RegisterCircuit::from_circuit(&c);
        (c, r)
    }

    #[test]
    fn zero_lambda_keeps_state() {
        let mut v = StateVector::ground(3);
        v.apply(&RegisterOp::H(1)).unwrap();
        let mut rho = DensityMatrix::from_pure(&v).unwrap();
        let before = rho.clone();
        rho.depolarize(0.0, &[0, 1]).unwrap();
        assert_eq!(rho, before);
        assert!(rho.depolarize(1.2, &[0]).is_err());
    }

    #[test]
    fn full_strength_mixes_the_qubit() {
        let mut v = StateVector::ground(3);
        v.apply(&RegisterOp::H(1)).unwrap();
        v.apply(&RegisterOp::Cnot { control: 1, target: 2 }).unwrap();
        let mut rho = DensityMatrix::from_pure(&v).unwrap();
        rho.depolarize(1.0, &[1]).unwrap();
        let red = rho.reduced_qubit(1);
        assert!((red[0][0] - 0.5).abs() < 1e-15 && (red[1][1] - 0.5).abs() < 1e-15);
        assert!(red[0][1].abs() < 1e-15);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_qubit_channel_by_hand() {
        // |01> (wire 0 excited), lambda = 0.01 on both wires:
        // diag = 0.99 * e_1 + 0.0025 everywhere.
        let mut v = StateVector::ground(2);
        v.apply(&RegisterOp::X(0)).unwrap();
        let mut rho = DensityMatrix::from_pure(&v).unwrap();
        rho.depolarize(0.01, &[0, 1]).unwrap();
        let d = rho.diagonal();
        let expect = [0.0025, 0.9925, 0.0025, 0.0025];
        for (a, b) in d.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // a single-wire channel on wire 1 only splits wire 1
        let mut rho = DensityMatrix::from_pure(&v).unwrap();
        rho.depolarize(0.01, &[1]).unwrap();
        let d = rho.diagonal();
        assert!((d[1] - 0.995).abs() < 1e-15 && (d[3] - 0.005).abs() < 1e-15);
    }

    #[test]
    fn noiseless_diagonal_matches_unary_simulation() {
        for n in [3, 5] {
            let (c, r) = layer_circuit(n, n as u64);
            let rho = evolve_density(&r, &NoiseProfile::noiseless()).unwrap();
            let s = simulate_unary(&c, &UnaryState::ground(n, true)).unwrap();
            let emb = StateVector::embed(&s).probabilities();
            for (a, b) in rho.diagonal().iter().zip(&emb) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn full_noise_gives_maximally_mixed() {
        let (_, r) = layer_circuit(3, 1);
        let p = NoiseProfile { lambda_1q: 1.0, lambda_2q: 1.0, readout_flip: 0.0 };
        let rho = evolve_density(&r, &p).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        // the last gate on each wire leaves it maximally mixed and uncorrelated
        let err = rho.data.iter().zip(&mixed.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn trace_and_symmetry_are_preserved() {
        let (_, r) = layer_circuit(5, 3);
        let p = NoiseProfile::depolarizing(0.05, 0.0).unwrap();
        let rho = evolve_density(&r, &p).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-12);
        assert!(rho.max_asymmetry() < 1e-14);
        assert!(rho.diagonal().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn readout_on_two_qubit_basis_state() {
        let mut v = StateVector::ground(2);
        let rho = DensityMatrix::from_pure(&v).unwrap();
        let p = measure_probs(&rho, 0.01);
        let expect = [0.9801, 0.0099, 0.0099, 0.0001];
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        v.apply(&RegisterOp::H(0)).unwrap();
        let rho = DensityMatrix::from_pure(&v).unwrap();
        assert_eq!(measure_probs(&rho, 0.0), rho.diagonal());
    }

    #[test]
    fn capacity_is_enforced() {
        assert_eq!(DensityMatrix::ground(13), Err(Error::CapacityExceeded { qubits: 13, cap: 12 }));
    }
}
