//! Circuits of RBS gates restricted to the ground + Hamming-weight-1 sectors.
//!
//! Wire `k` of a `q`-wire data register corresponds to the unary basis state
//! `e_{k+1}`; when an ancilla is present it sits on wire `q`.

mod layout;
mod loader;
mod outcome;
mod state;
mod tomography;

pub use layout::{circuit_to_matrix, pyramid_layout, PyramidLayout};
pub use loader::{loader_angles, loader_gates, uniform_vector};
pub use outcome::{estimate_outputs, postselect_unary, Outcome, OutcomeProbs, OutcomeTable, ShotCounts, Weight};
pub use state::{simulate_unary, UnaryState};
pub use tomography::{prep_gates, readout_gates, tomography_circuit};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::{Error, Result};

/// Planar rotation on the `{|01>, |10>}` block of wires `(wire_a, wire_b)`.
///
/// With `beta` the amplitude of the excitation on `wire_a` and `gamma` on `wire_b`,
/// `(beta, gamma) -> (beta cos + gamma sin, -beta sin + gamma cos)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbsGate {
    pub wire_a: usize,
    pub wire_b: usize,
    pub theta: f64,
}

impl RbsGate {
    /// Nearest-neighbour gate; rejects wires that are equal or not adjacent.
    pub fn new(wire_a: usize, wire_b: usize, theta: f64) -> Result<Self> {
        if wire_a.abs_diff(wire_b) != 1 {
            return Err(Error::InvalidRbsWires { a: wire_a, b: wire_b });
        }
        Ok(RbsGate { wire_a, wire_b, theta })
    }

    /// Full 4x4 matrix on the two-qubit space indexed by `(bit_b << 1) | bit_a`.
    pub fn matrix(&self) -> [[f64; 4]; 4] {
        let (s, c) = libm::sincos(self.theta);
        // index 1 = excitation on a, index 2 = excitation on b
        [[1.0, 0.0, 0.0, 0.0], [0.0, c, s, 0.0], [0.0, -s, c, 0.0], [0.0, 0.0, 0.0, 1.0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rbs(RbsGate),
    X(usize),
    Cnot { control: usize, target: usize },
    H(usize),
}

impl Gate {
    pub fn rbs(wire_a: usize, wire_b: usize, theta: f64) -> Gate {
        Gate::Rbs(RbsGate { wire_a, wire_b, theta })
    }

    /// Wires touched by the gate, at most two.
    pub fn wires(&self) -> ([usize; 2], usize) {
        match *self {
            Gate::Rbs(g) => ([g.wire_a, g.wire_b], 2),
            Gate::Cnot { control, target } => ([control, target], 2),
            Gate::X(w) | Gate::H(w) => ([w, w], 1),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.wires().1 == 2
    }

    fn check(&self, qubits: usize) -> Result<()> {
        let (w, k) = self.wires();
        for &wire in &w[..k] {
            if wire >= qubits {
                return Err(Error::WireOutOfRange { wire, qubits });
            }
        }
        if k == 2 && w[0] == w[1] {
            return Err(Error::InvalidRbsWires { a: w[0], b: w[1] });
        }
        Ok(())
    }
}

/// Ordered gate list over `data_qubits` data wires plus an optional ancilla on wire
/// `data_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    data_qubits: usize,
    ancilla: bool,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(data_qubits: usize, ancilla: bool) -> Self {
        Circuit { data_qubits, ancilla, gates: Vec::new() }
    }

    pub fn data_qubits(&self) -> usize {
        self.data_qubits
    }

    pub fn has_ancilla(&self) -> bool {
        self.ancilla
    }

    pub fn total_qubits(&self) -> usize {
        self.data_qubits + usize::from(self.ancilla)
    }

    pub fn ancilla_wire(&self) -> Option<usize> {
        self.ancilla.then_some(self.data_qubits)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check(self.total_qubits())?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Greedy ASAP schedule: each gate lands in the first slice after the last
    /// slice that used any of its wires. Slices hold gate indices.
    pub fn schedule(&self) -> Vec<Vec<usize>> {
        let mut wire_free = vec![0usize; self.total_qubits()];
        let mut slices: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let (w, k) = g.wires();
            let t = w[..k].iter().map(|&x| wire_free[x]).max().unwrap_or(0);
            if slices.len() <= t {
                slices.resize_with(t + 1, Vec::new);
            }
            slices[t].push(i);
            for &x in &w[..k] {
                wire_free[x] = t + 1;
            }
        }
        slices
    }

    pub fn depth(&self) -> usize {
        self.schedule().len()
    }

    pub fn rbs_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Rbs(_))).count()
    }

    /// Line-oriented text form; angles use the shortest round-tripping decimal.
    pub fn to_text(&self) -> String {
        let mut out = format!("qubits {} ancilla {}\n", self.data_qubits, u8::from(self.ancilla));
        for g in &self.gates {
            let _ = match *g {
                Gate::Rbs(r) => writeln!(out, "RBS {} {} {:?}", r.wire_a, r.wire_b, r.theta),
                Gate::X(w) => writeln!(out, "X {w}"),
                Gate::Cnot { control, target } => writeln!(out, "CNOT {control} {target}"),
                Gate::H(w) => writeln!(out, "H {w}"),
            };
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::InvalidConfig(format!("circuit line {}: {msg}", line + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Empty("circuit text"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        let mut circuit = match h.as_slice() {
            ["qubits", q, "ancilla", a] => {
                let q: usize = q.parse().map_err(|_| bad(hl, "bad qubit count"))?;
                let a = match *a {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad(hl, "ancilla flag must be 0 or 1")),
                };
                Circuit::new(q, a)
            }
            _ => return Err(bad(hl, "expected `qubits <q> ancilla <0|1>`")),
        };
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let wire = |s: &str| s.parse::<usize>().map_err(|_| bad(ln, "bad wire index"));
            let gate = match t.as_slice() {
                ["RBS", a, b, theta] => {
                    let theta: f64 = theta.parse().map_err(|_| bad(ln, "bad angle"))?;
                    Gate::Rbs(RbsGate::new(wire(a)?, wire(b)?, theta)?)
                }
                ["X", a] => Gate::X(wire(a)?),
                ["H", a] => Gate::H(wire(a)?),
                ["CNOT", c, t] => Gate::Cnot { control: wire(c)?, target: wire(t)? },
                _ => return Err(bad(ln, "unknown gate")),
            };
            circuit.push(gate)?;
        }
        Ok(circuit)
    }
}
