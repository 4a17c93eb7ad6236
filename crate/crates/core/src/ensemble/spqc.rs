//! Superposed execution: one circuit carries every member's layer, selected by an
//! address register in uniform superposition.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fullstate::{RegisterCircuit, RegisterOp};
use crate::noise::{basis_gate_tally, execute, folds, sample_tables, BasisGateTally, Execution, FoldedCircuit, LayerEstimate};
use crate::qonn::{forward_lockstep, QOrthoNN};
use crate::unary::{loader_angles, prep_gates, readout_gates, OutcomeProbs, PyramidLayout};
use crate::{Error, Result};

/// `ceil(log2 l)`.
pub fn address_bits(l: usize) -> usize {
    if l <= 1 {
        0
    } else {
        (usize::BITS - (l - 1).leading_zeros()) as usize
    }
}

/// RY cascade preparing `sum_{j<l} |j> / sqrt(l)` on `wires` (LSB first), most
/// significant bit first, each bit controlled by the bits above it.
pub fn address_prep(l: usize, wires: &[usize]) -> Vec<RegisterOp> {
    let a = wires.len();
    let mut ops = Vec::with_capacity(a);
    for k in (0..a).rev() {
        let above = a - 1 - k;
        let thetas: Vec<f64> = (0..1usize << above)
            .map(|h| {
                // addresses whose bits above k equal h
                let base = h << (k + 1);
                let total = l.saturating_sub(base).min(1 << (k + 1));
                let ones = l.saturating_sub(base + (1 << k)).min(1 << k);
                if total == 0 {
                    0.0
                } else {
                    2.0 * libm::asin(libm::sqrt(ones as f64 / total as f64))
                }
            })
            .collect();
        if thetas.iter().all(|&t| t == thetas[0]) {
            ops.push(RegisterOp::MuxRy { target: wires[k], controls: vec![], thetas: vec![thetas[0]] });
        } else {
            ops.push(RegisterOp::MuxRy { target: wires[k], controls: wires[k + 1..].to_vec(), thetas });
        }
    }
    ops
}

/// Superposed tomography circuit for one layer shape executed by `angles.len()`
/// members on their unit inputs. Wires: data `0..q`, ancilla `q`, address
/// `q+1..q+1+a`.
pub fn spqc_circuit(layout: &PyramidLayout, angles: &[Vec<f64>], inputs: &[Vec<f64>]) -> Result<RegisterCircuit> {
    let parts = SpqcParts::new(layout, angles)?;
    let mut c = RegisterCircuit::new(parts.qubits());
    for op in parts.head().into_iter().chain(parts.body(inputs)?).chain(parts.tail(angles)) {
        c.push(op)?;
    }
    Ok(c)
}

/// Address prep and ancilla prep, member loaders, then member pyramids and readout.
struct SpqcParts<'a> {
    layout: &'a PyramidLayout,
    members: usize,
    address: Vec<usize>,
}

impl<'a> SpqcParts<'a> {
    fn new(layout: &'a PyramidLayout, angles: &[Vec<f64>]) -> Result<Self> {
        let l = angles.len();
        if l == 0 {
            return Err(Error::Empty("superposed members"));
        }
        for a in angles {
            layout.check_angles(a)?;
        }
        let q = layout.qubits();
        Ok(SpqcParts { layout, members: l, address: (q + 1..q + 1 + address_bits(l)).collect() })
    }

    fn qubits(&self) -> usize {
        self.layout.qubits() + 1 + self.address.len()
    }

    fn head(&self) -> Vec<RegisterOp> {
        let mut ops = address_prep(self.members, &self.address);
        ops.extend(prep_gates(self.layout.qubits(), self.layout.in_dim()).into_iter().map(RegisterOp::from));
        ops
    }

    fn body(&self, inputs: &[Vec<f64>]) -> Result<Vec<RegisterOp>> {
        if inputs.len() != self.members {
            return Err(Error::ShapeMismatch);
        }
        let (q, n) = (self.layout.qubits(), self.layout.in_dim());
        let mut loaders = Vec::with_capacity(self.members);
        for x in inputs {
            if x.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.len() });
            }
            loaders.push(loader_angles(x)?);
        }
        // loader gate k sits on wires (off + k, off + k + 1)
        let off = q - n;
        Ok((0..n.saturating_sub(1))
            .map(|k| RegisterOp::MuxRbs { a: off + k, b: off + k + 1, address: self.address.clone(), thetas: loaders.iter().map(|t| t[k]).collect() })
            .collect())
    }

    fn tail(&self, angles: &[Vec<f64>]) -> Vec<RegisterOp> {
        let mut ops: Vec<RegisterOp> = self
            .layout
            .gate_wires()
            .iter()
            .enumerate()
            .map(|(k, &w)| RegisterOp::MuxRbs { a: w, b: w + 1, address: self.address.clone(), thetas: angles.iter().map(|t| t[k]).collect() })
            .collect();
        ops.extend(readout_gates(self.layout.qubits()).into_iter().map(RegisterOp::from));
        ops
    }
}

/// Splits inputs into norms and unit vectors; a zero input gets an arbitrary unit
/// vector, and its zero norm zeroes the estimate.
fn unit_inputs(inputs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let norms: Vec<f64> = inputs.iter().map(|x| libm::sqrt(x.iter().map(|v| v * v).sum::<f64>())).collect();
    let units = inputs
        .iter()
        .zip(&norms)
        .map(|(x, &nm)| {
            if nm == 0.0 {
                let mut e = vec![0.0; x.len()];
                e[0] = 1.0;
                e
            } else {
                x.iter().map(|v| v / nm).collect()
            }
        })
        .collect();
    (norms, units)
}

fn decode(layout: &PyramidLayout, tables: &[OutcomeProbs], norms: &[f64], postselect: bool) -> Result<Vec<LayerEstimate>> {
    tables.iter().zip(norms).map(|(t, &nm)| crate::noise::estimate_table(t, layout.out_dim(), nm, postselect)).collect()
}

/// Executes one layer for every member in a single superposed circuit and decodes
/// each address branch separately. Inputs need not be normalized; their norms
/// rescale the estimates as in the standalone path.
pub fn spqc_layer_forward<R: Rng + ?Sized>(
    layout: &PyramidLayout,
    angles: &[Vec<f64>],
    inputs: &[Vec<f64>],
    exec: &Execution,
    rng: &mut R,
) -> Result<Vec<LayerEstimate>> {
    let (norms, units) = unit_inputs(inputs);
    let circuit = spqc_circuit(layout, angles, &units)?;
    let a = address_bits(angles.len());
    let tables = execute(&circuit, layout.qubits(), a, exec, rng)?;
    decode(layout, &tables, &norms, exec.postselect)
}

/// One superposed layer set up for many runs under a fixed execution setting,
/// folding the input-independent parts once as [`PreparedLayer`] does.
#[derive(Debug, Clone)]
pub struct PreparedSpqc {
    layout: PyramidLayout,
    angles: Vec<Vec<f64>>,
    exec: Execution,
    folded: Option<FoldedCircuit>,
}

impl PreparedSpqc {
    pub fn new(layout: &PyramidLayout, angles: &[Vec<f64>], exec: &Execution) -> Result<Self> {
        exec.noise.validate()?;
        let parts = SpqcParts::new(layout, angles)?;
        let folded = if folds(exec, parts.qubits()) {
            let a = parts.address.len();
            Some(FoldedCircuit::new(parts.qubits(), layout.qubits(), a, &parts.head(), &parts.tail(angles), &exec.noise)?)
        } else {
            None
        };
        Ok(PreparedSpqc { layout: layout.clone(), angles: angles.to_vec(), exec: *exec, folded })
    }

    /// Same distribution as [`spqc_layer_forward`] with this layer's setting.
    pub fn forward<R: Rng + ?Sized>(&self, inputs: &[Vec<f64>], rng: &mut R) -> Result<Vec<LayerEstimate>> {
        let Some(folded) = &self.folded else {
            return spqc_layer_forward(&self.layout, &self.angles, inputs, &self.exec, rng);
        };
        let (norms, units) = unit_inputs(inputs);
        let body = SpqcParts::new(&self.layout, &self.angles)?.body(&units)?;
        let tables = sample_tables(folded.tables(&body)?, &self.exec, rng)?;
        decode(&self.layout, &tables, &norms, self.exec.postselect)
    }
}

/// Forward pass of several same-shape networks with each layer executed as one
/// superposed circuit. Returns per-network outputs and the smallest retention.
pub fn spqc_forward<R: Rng + ?Sized>(nets: &[&QOrthoNN], raws: &[&[f64]], exec: &Execution, rng: &mut R) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut retained: f64 = 1.0;
    let out = forward_lockstep(nets, raws, |_, layers, xs| {
        let angles: Vec<Vec<f64>> = layers.iter().map(|l| l.angles.clone()).collect();
        let est = spqc_layer_forward(&layers[0].layout, &angles, xs, exec, rng)?;
        Ok(est
            .into_iter()
            .map(|e| {
                retained = retained.min(e.retained_fraction);
                e.y
            })
            .collect())
    })?;
    Ok((out, retained))
}

/// Layer-by-layer [`PreparedSpqc`] for a set of same-shape networks.
pub fn prepare_spqc(nets: &[&QOrthoNN], exec: &Execution) -> Result<Vec<PreparedSpqc>> {
    let first = nets.first().ok_or(Error::Empty("superposed members"))?;
    (0..first.layers.len())
        .map(|i| {
            let angles: Vec<Vec<f64>> = nets.iter().map(|n| n.layers[i].angles.clone()).collect();
            PreparedSpqc::new(&first.layers[i].layout, &angles, exec)
        })
        .collect()
}

/// [`spqc_forward`] through layers set up by [`prepare_spqc`].
pub fn spqc_forward_prepared<R: Rng + ?Sized>(
    nets: &[&QOrthoNN],
    prepared: &[PreparedSpqc],
    raws: &[&[f64]],
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut retained: f64 = 1.0;
    let out = forward_lockstep(nets, raws, |i, _, xs| {
        Ok(prepared[i]
            .forward(xs, rng)?
            .into_iter()
            .map(|e| {
                retained = retained.min(e.retained_fraction);
                e.y
            })
            .collect())
    })?;
    Ok((out, retained))
}

/// Qubits and basis-gate counts (with depth) of one layer circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub members: usize,
    pub qubits: usize,
    pub tally: BasisGateTally,
}

pub fn resource_report(circuit: &RegisterCircuit, members: usize) -> ResourceReport {
    ResourceReport { members, qubits: circuit.qubits, tally: basis_gate_tally(circuit) }
}

/// Standalone tomography circuit of one member, for side-by-side reports.
pub fn standard_circuit(layout: &PyramidLayout, angles: &[f64], x: &[f64]) -> Result<RegisterCircuit> {
    Ok(RegisterCircuit::from_circuit(&crate::unary::tomography_circuit(layout, angles, x)?))
}
