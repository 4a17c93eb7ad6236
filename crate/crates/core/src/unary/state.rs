use alloc::vec;
use alloc::vec::Vec;

use super::{Circuit, Gate, Outcome, OutcomeProbs, RbsGate};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Amplitudes on the ground state and the `q` unary states, per ancilla branch.
///
/// Branch `b` occupies `amps[b*(q+1)..(b+1)*(q+1)]`; slot 0 is `|0...0>` and slot
/// `k+1` is the excitation on wire `k`. Without an ancilla only branch 0 exists.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryState {
    q: usize,
    ancilla: bool,
    amps: Vec<f64>,
}

impl UnaryState {
    /// `|0>|0...0>`.
    pub fn ground(q: usize, ancilla: bool) -> Self {
        let mut amps = vec![0.0; (q + 1) * (1 + usize::from(ancilla))];
        amps[0] = 1.0;
        UnaryState { q, ancilla, amps }
    }

    /// Branch 0 set to the unary superposition `sum_k u_k e_k`.
    pub fn from_unary(u: &[f64], ancilla: bool) -> Result<Self> {
        let mut s = UnaryState { q: u.len(), ancilla, amps: vec![0.0; (u.len() + 1) * (1 + usize::from(ancilla))] };
        s.amps[1..=u.len()].copy_from_slice(u);
        s.check_norm()?;
        Ok(s)
    }

    /// Raw constructor; `amps` laid out branch-major as described on the type.
    pub fn from_amplitudes(q: usize, ancilla: bool, amps: Vec<f64>) -> Result<Self> {
        let expected = (q + 1) * (1 + usize::from(ancilla));
        if amps.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: amps.len() });
        }
        let s = UnaryState { q, ancilla, amps };
        s.check_norm()?;
        Ok(s)
    }

    fn check_norm(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(())
    }

    pub fn data_qubits(&self) -> usize {
        self.q
    }

    pub fn has_ancilla(&self) -> bool {
        self.ancilla
    }

    pub fn branches(&self) -> usize {
        1 + usize::from(self.ancilla)
    }

    pub fn ground_amp(&self, branch: usize) -> f64 {
        self.amps[branch * (self.q + 1)]
    }

    pub fn unary(&self, branch: usize) -> &[f64] {
        let base = branch * (self.q + 1);
        &self.amps[base + 1..base + 1 + self.q]
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.amps.iter().map(|a| a * a).sum::<f64>())
    }

    fn branch_mut(&mut self, b: usize) -> &mut [f64] {
        let w = self.q + 1;
        &mut self.amps[b * w..(b + 1) * w]
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        let qubits = self.q + usize::from(self.ancilla);
        if wire >= qubits {
            return Err(Error::WireOutOfRange { wire, qubits });
        }
        Ok(())
    }

    pub fn apply_rbs(&mut self, gate: &RbsGate) -> Result<()> {
        self.apply(&Gate::Rbs(*gate)).map_err(|e| match e {
            Error::LeavesReducedSpace { .. } => unreachable!("RBS preserves Hamming weight"),
            e => e,
        })
    }

    /// Applies one gate. Auxiliary gates are only representable while they keep all
    /// amplitude in the ground/unary sectors; otherwise `LeavesReducedSpace`.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        self.apply_indexed(gate, 0)
    }

    fn apply_indexed(&mut self, gate: &Gate, index: usize) -> Result<()> {
        let (w, k) = gate.wires();
        for &x in &w[..k] {
            self.check_wire(x)?;
        }
        if k == 2 && w[0] == w[1] {
            return Err(Error::InvalidRbsWires { a: w[0], b: w[1] });
        }
        let q = self.q;
        let anc = self.ancilla.then_some(q);
        let leave = Error::LeavesReducedSpace { gate: index };
        match *gate {
            Gate::Rbs(g) => {
                if Some(g.wire_a) == anc || Some(g.wire_b) == anc {
                    return Err(leave);
                }
                let (s, c) = libm::sincos(g.theta);
                for b in 0..self.branches() {
                    let br = self.branch_mut(b);
                    let (u, v) = (br[g.wire_a + 1], br[g.wire_b + 1]);
                    br[g.wire_a + 1] = c * u + s * v;
                    br[g.wire_b + 1] = c * v - s * u;
                }
            }
            Gate::X(x) if Some(x) == anc => {
                let (lo, hi) = self.amps.split_at_mut(q + 1);
                lo.swap_with_slice(hi);
            }
            Gate::X(x) => {
                for b in 0..self.branches() {
                    flip_data_wire(self.branch_mut(b), x).map_err(|_| leave.clone())?;
                }
            }
            Gate::H(x) if Some(x) == anc => {
                let r = core::f64::consts::FRAC_1_SQRT_2;
                let (lo, hi) = self.amps.split_at_mut(q + 1);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = r * (u + v);
                    *b = r * (u - v);
                }
            }
            Gate::H(x) => {
                let r = core::f64::consts::FRAC_1_SQRT_2;
                for b in 0..self.branches() {
                    let br = self.branch_mut(b);
                    if others_nonzero(br, x) {
                        return Err(leave);
                    }
                    let (g, e) = (br[0], br[x + 1]);
                    br[0] = r * (g + e);
                    br[x + 1] = r * (g - e);
                }
            }
            Gate::Cnot { control, target } if Some(control) == anc => {
                flip_data_wire(self.branch_mut(1), target).map_err(|_| leave)?;
            }
            Gate::Cnot { control, target } if Some(target) == anc => {
                let (lo, hi) = self.amps.split_at_mut(q + 1);
                core::mem::swap(&mut lo[control + 1], &mut hi[control + 1]);
            }
            Gate::Cnot { control, .. } => {
                // e_control would gain a second excitation
                if (0..self.branches()).any(|b| self.unary(b)[control] != 0.0) {
                    return Err(leave);
                }
            }
        }
        Ok(())
    }

    /// Exact outcome probabilities; the ground slot counts as a non-unary outcome.
    pub fn probabilities(&self) -> OutcomeProbs {
        let mut p = OutcomeProbs::new(self.q);
        for b in 0..self.branches() {
            p.add(b, Outcome::Invalid, self.ground_amp(b) * self.ground_amp(b));
            for (k, a) in self.unary(b).iter().enumerate() {
                p.add(b, Outcome::Unary(k), a * a);
            }
        }
        p
    }
}

fn others_nonzero(branch: &[f64], wire: usize) -> bool {
    branch[1..].iter().enumerate().any(|(k, &a)| k != wire && a != 0.0)
}

fn flip_data_wire(branch: &mut [f64], wire: usize) -> core::result::Result<(), ()> {
    if others_nonzero(branch, wire) {
        return Err(());
    }
    branch.swap(0, wire + 1);
    Ok(())
}

/// Applies every gate of `circuit` in order to a copy of `input`.
pub fn simulate_unary(circuit: &Circuit, input: &UnaryState) -> Result<UnaryState> {
    if input.q != circuit.data_qubits() {
        return Err(Error::DimensionMismatch { expected: circuit.data_qubits(), got: input.q });
    }
    if input.ancilla != circuit.has_ancilla() {
        return Err(Error::InvalidConfig("ancilla presence differs between circuit and state".into()));
    }
    let mut s = input.clone();
    for (i, g) in circuit.gates().iter().enumerate() {
        s.apply_indexed(g, i)?;
    }
    Ok(s)
}
