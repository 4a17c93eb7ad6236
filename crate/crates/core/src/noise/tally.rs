use alloc::vec;

use serde::{Deserialize, Serialize};

use crate::fullstate::{RegisterCircuit, RegisterOp};

/// Basis-gate cost of one logical operation under the fixed decomposition below.
///
/// | op                              | two-qubit   | single-qubit | bit-flip | duration      |
/// |---------------------------------|-------------|--------------|----------|---------------|
/// | RBS                             | 2           | 6            |          | 5             |
/// | CNOT                            | 1           | 2            |          | 3             |
/// | H                               | 0           | 3            |          | 3             |
/// | X                               | 0           | 0            | 1        | 1             |
/// | RBS uniformly controlled by `a` | `2^(a+1)`   | `6 * 2^a`    |          | `5 * (1 + a)` |
/// | RY, no controls                 | 0           | 3            |          | 3             |
/// | RY uniformly controlled by `c`  | `2^c`       | `2^c`        |          | `2^(c+1)`     |
///
/// RBS follows the usual two-entangler realisation (an RBS is an XX+YY rotation).
/// Uniformly controlled rotations use the multiplexor construction with one
/// entangler per control pattern. For address-controlled RBS gates the address
/// register is treated as fanned out to the data wires, so those gates are
/// scheduled on their two data wires only and pay a duration overhead linear in
/// the address width; this reproduces the measured depth growth of superposed
/// layers far better than serializing every gate on the shared address wires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateCost {
    pub two_qubit: u64,
    pub single_qubit: u64,
    pub bit_flip: u64,
    pub duration: u64,
}

impl GateCost {
    pub fn of(op: &RegisterOp) -> GateCost {
        let c = |two_qubit, single_qubit, bit_flip, duration| GateCost { two_qubit, single_qubit, bit_flip, duration };
        match op {
            RegisterOp::Rbs { .. } => c(2, 6, 0, 5),
            RegisterOp::Cnot { .. } => c(1, 2, 0, 3),
            RegisterOp::H(_) => c(0, 3, 0, 3),
            RegisterOp::X(_) => c(0, 0, 1, 1),
            RegisterOp::MuxRbs { address, .. } => {
                let k = 1u64 << address.len();
                c(2 * k, 6 * k, 0, 5 * (1 + address.len() as u64))
            }
            RegisterOp::MuxRy { controls, .. } if controls.is_empty() => c(0, 3, 0, 3),
            RegisterOp::MuxRy { controls, .. } => {
                let k = 1u64 << controls.len();
                c(k, k, 0, 2 * k)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BasisGateTally {
    pub two_qubit: u64,
    pub single_qubit: u64,
    pub bit_flip: u64,
    /// ASAP-scheduled depth in basis-gate time steps.
    pub depth: u64,
    pub logical_ops: u64,
}

pub fn basis_gate_tally(circuit: &RegisterCircuit) -> BasisGateTally {
    let mut free = vec![0u64; circuit.qubits];
    let mut t = BasisGateTally::default();
    for op in &circuit.ops {
        let cost = GateCost::of(op);
        t.two_qubit += cost.two_qubit;
        t.single_qubit += cost.single_qubit;
        t.bit_flip += cost.bit_flip;
        t.logical_ops += 1;
        let support = match op {
            RegisterOp::MuxRbs { a, b, .. } => vec![*a, *b],
            _ => op.support(),
        };
        let start = support.iter().map(|&w| free[w]).max().unwrap_or(0);
        for &w in &support {
            free[w] = start + cost.duration;
        }
        t.depth = t.depth.max(start + cost.duration);
    }
    t
}
