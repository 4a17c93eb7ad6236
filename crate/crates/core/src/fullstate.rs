//! Brute-force real statevector over the whole register.
//!
//! Bit `k` of a basis index is wire `k`. Serves as the oracle for the unary fast
//! path and as the substrate of the noise engine, which also needs the
//! address-multiplexed gates used by superposed ensembles.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::unary::{Circuit, Gate, Outcome, UnaryState};
use crate::{Error, Result};

/// A gate on the full register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegisterOp {
    Rbs { a: usize, b: usize, theta: f64 },
    X(usize),
    Cnot { control: usize, target: usize },
    H(usize),
    /// RBS on `(a, b)` whose angle is `thetas[v]` when the address wires (LSB first)
    /// hold `v`; addresses past the end act as identity.
    MuxRbs { a: usize, b: usize, address: Vec<usize>, thetas: Vec<f64> },
    /// `RY(thetas[v])` on `target`, with `v` read from `controls` (LSB first).
    MuxRy { target: usize, controls: Vec<usize>, thetas: Vec<f64> },
}

impl From<Gate> for RegisterOp {
    fn from(g: Gate) -> Self {
        match g {
            Gate::Rbs(r) => RegisterOp::Rbs { a: r.wire_a, b: r.wire_b, theta: r.theta },
            Gate::X(w) => RegisterOp::X(w),
            Gate::Cnot { control, target } => RegisterOp::Cnot { control, target },
            Gate::H(w) => RegisterOp::H(w),
        }
    }
}

fn gather(i: usize, wires: &[usize]) -> usize {
    wires.iter().enumerate().fold(0, |v, (k, &w)| v | (((i >> w) & 1) << k))
}

impl RegisterOp {
    /// Every wire the operation couples, controls included.
    pub fn support(&self) -> Vec<usize> {
        match self {
            RegisterOp::Rbs { a, b, .. } => vec![*a, *b],
            RegisterOp::X(w) | RegisterOp::H(w) => vec![*w],
            RegisterOp::Cnot { control, target } => vec![*control, *target],
            RegisterOp::MuxRbs { a, b, address, .. } => {
                let mut s = vec![*a, *b];
                s.extend_from_slice(address);
                s
            }
            RegisterOp::MuxRy { target, controls, .. } => {
                let mut s = vec![*target];
                s.extend_from_slice(controls);
                s
            }
        }
    }

    fn check(&self, qubits: usize) -> Result<()> {
        let s = self.support();
        for (k, &w) in s.iter().enumerate() {
            if w >= qubits {
                return Err(Error::WireOutOfRange { wire: w, qubits });
            }
            if s[..k].contains(&w) {
                return Err(Error::InvalidRbsWires { a: w, b: w });
            }
        }
        Ok(())
    }

    /// Calls `f(i, j, [m00, m01, m10, m11])` for disjoint index pairs; the operation
    /// maps `(v_i, v_j)` to `(m00 v_i + m01 v_j, m10 v_i + m11 v_j)` and leaves every
    /// unvisited index alone.
    pub fn for_each_pair(&self, qubits: usize, mut f: impl FnMut(usize, usize, [f64; 4])) {
        let dim = 1usize << qubits;
        let swap = [0.0, 1.0, 1.0, 0.0];
        match self {
            RegisterOp::Rbs { a, b, theta } => {
                let (s, c) = libm::sincos(*theta);
                let (ma, mb) = (1 << a, 1 << b);
                for i in (0..dim).filter(|i| i & ma != 0 && i & mb == 0) {
                    f(i, i ^ ma ^ mb, [c, s, -s, c]);
                }
            }
            RegisterOp::X(w) => {
                let m = 1 << w;
                for i in (0..dim).filter(|i| i & m == 0) {
                    f(i, i | m, swap);
                }
            }
            RegisterOp::Cnot { control, target } => {
                let (mc, mt) = (1 << control, 1 << target);
                for i in (0..dim).filter(|i| i & mc != 0 && i & mt == 0) {
                    f(i, i | mt, swap);
                }
            }
            RegisterOp::H(w) => {
                let r = core::f64::consts::FRAC_1_SQRT_2;
                let m = 1 << w;
                for i in (0..dim).filter(|i| i & m == 0) {
                    f(i, i | m, [r, r, r, -r]);
                }
            }
            RegisterOp::MuxRbs { a, b, address, thetas } => {
                let rot: Vec<(f64, f64)> = thetas.iter().map(|&t| libm::sincos(t)).collect();
                let (ma, mb) = (1 << a, 1 << b);
                for i in (0..dim).filter(|i| i & ma != 0 && i & mb == 0) {
                    if let Some(&(s, c)) = rot.get(gather(i, address)) {
                        f(i, i ^ ma ^ mb, [c, s, -s, c]);
                    }
                }
            }
            RegisterOp::MuxRy { target, controls, thetas } => {
                let rot: Vec<(f64, f64)> = thetas.iter().map(|&t| libm::sincos(0.5 * t)).collect();
                let m = 1 << target;
                for i in (0..dim).filter(|i| i & m == 0) {
                    if let Some(&(s, c)) = rot.get(gather(i, controls)) {
                        f(i, i | m, [c, -s, s, c]);
                    }
                }
            }
        }
    }
}

/// Operation list on a fixed-size register.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RegisterCircuit {
    pub qubits: usize,
    pub ops: Vec<RegisterOp>,
}

impl RegisterCircuit {
    pub fn new(qubits: usize) -> Self {
        RegisterCircuit { qubits, ops: Vec::new() }
    }

    pub fn push(&mut self, op: RegisterOp) -> Result<()> {
        op.check(self.qubits)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn from_circuit(c: &Circuit) -> Self {
        RegisterCircuit { qubits: c.total_qubits(), ops: c.gates().iter().map(|&g| g.into()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<f64>,
}

impl StateVector {
    pub fn ground(qubits: usize) -> Self {
        let mut amps = vec![0.0; 1 << qubits];
        amps[0] = 1.0;
        StateVector { qubits, amps }
    }

    /// Places a reduced state into the full register; the ancilla (if any) is bit `q`.
    pub fn embed(s: &UnaryState) -> Self {
        let q = s.data_qubits();
        let mut v = StateVector { qubits: q + usize::from(s.has_ancilla()), amps: vec![0.0; 1 << (q + usize::from(s.has_ancilla()))] };
        for b in 0..s.branches() {
            v.amps[b << q] = s.ground_amp(b);
            for (k, &a) in s.unary(b).iter().enumerate() {
                v.amps[(b << q) | (1 << k)] = a;
            }
        }
        v
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amps
    }

    pub fn apply(&mut self, op: &RegisterOp) -> Result<()> {
        op.check(self.qubits)?;
        let amps = &mut self.amps;
        op.for_each_pair(self.qubits, |i, j, m| {
            let (u, v) = (amps[i], amps[j]);
            amps[i] = m[0] * u + m[1] * v;
            amps[j] = m[2] * u + m[3] * v;
        });
        Ok(())
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        for &g in c.gates() {
            self.apply(&g.into())?;
        }
        Ok(())
    }

    pub fn run(&mut self, c: &RegisterCircuit) -> Result<()> {
        for op in &c.ops {
            self.apply(op)?;
        }
        Ok(())
    }

    /// Pauli on one wire: 1 = X, 2 = Y, 3 = Z. Y is applied as ZX up to a global
    /// phase, which no measurement can see.
    pub fn apply_pauli(&mut self, wire: usize, pauli: u8) {
        let m = 1usize << wire;
        if pauli == 3 || pauli == 2 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                if i & m != 0 {
                    *a = -*a;
                }
            }
        }
        if pauli == 1 || pauli == 2 {
            for i in (0..self.amps.len()).filter(|i| i & m == 0) {
                self.amps.swap(i, i | m);
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a * a).collect()
    }
}

/// Classifies a full-register basis index: `(address, ancilla bit, outcome)` for a
/// layout with `q` data wires, the ancilla on wire `q`, and address wires above.
pub fn classify(index: usize, q: usize) -> (usize, usize, Outcome) {
    let data = index & ((1 << q) - 1);
    let outcome = if data.count_ones() == 1 { Outcome::Unary(data.trailing_zeros() as usize) } else { Outcome::Invalid };
    (index >> (q + 1), (index >> q) & 1, outcome)
}
