use alloc::vec::Vec;

use super::{loader_gates, uniform_vector, Circuit, Gate, PyramidLayout};
use crate::Result;

/// Ancilla superposition and entangling CNOT onto the first active input wire.
pub fn prep_gates(q: usize, n: usize) -> [Gate; 2] {
    [Gate::H(q), Gate::Cnot { control: q, target: q - n }]
}

/// `S^dagger(r)`, ancilla flip, CNOT onto wire 0, `S(r)`, final Hadamard.
pub fn readout_gates(q: usize) -> Vec<Gate> {
    let load_r = loader_gates(&uniform_vector(q), 0).expect("uniform vector is normalized");
    let mut gates: Vec<Gate> = load_r
        .iter()
        .rev()
        .map(|g| match *g {
            Gate::Rbs(r) => Gate::rbs(r.wire_a, r.wire_b, -r.theta),
            other => other,
        })
        .collect();
    gates.push(Gate::X(q));
    gates.push(Gate::Cnot { control: q, target: 0 });
    gates.extend(load_r);
    gates.push(Gate::H(q));
    gates
}

/// Full sign-resolving tomography circuit for one layer applied to the unit vector
/// `x`, on `q = max(m, n)` data wires plus an ancilla on wire `q`.
///
/// Noiselessly the final state is
/// `1/2 |0>(sum_j y_j e_{q-m+j} + r) + 1/2 |1>(sum_j y_j e_{q-m+j} - r)` with
/// `y = W x` and `r` the uniform vector, so `estimate_outputs` recovers `y`.
pub fn tomography_circuit(layout: &PyramidLayout, angles: &[f64], x: &[f64]) -> Result<Circuit> {
    layout.check_angles(angles)?;
    let (q, n) = (layout.qubits(), layout.in_dim());
    if x.len() != n {
        return Err(crate::Error::DimensionMismatch { expected: n, got: x.len() });
    }
    let mut c = Circuit::new(q, true);
    c.extend(prep_gates(q, n))?;
    c.extend(loader_gates(x, q - n)?)?;
    c.extend(layout.gates(angles))?;
    c.extend(readout_gates(q))?;
    Ok(c)
}
