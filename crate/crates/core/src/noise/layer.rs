use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{
    evolve_density, measure_probs, outcome_probs, sample_outcomes, trajectory_sample, Execution, FoldedCircuit, SamplingMethod, Shots,
    DENSITY_QUBIT_CAP,
};
use crate::fullstate::{RegisterCircuit, RegisterOp, StateVector};
use crate::unary::{
    estimate_outputs, loader_gates, postselect_unary, prep_gates, readout_gates, tomography_circuit, OutcomeProbs, PyramidLayout,
};
use crate::Result;

/// Outcome statistics of a full-register circuit, one table per address value:
/// probabilities for `Shots::Exact`, raw counts otherwise.
pub fn execute<R: Rng + ?Sized>(
    circuit: &RegisterCircuit,
    q: usize,
    address_bits: usize,
    exec: &Execution,
    rng: &mut R,
) -> Result<Vec<OutcomeProbs>> {
    exec.noise.validate()?;
    if let (Shots::Finite(shots), SamplingMethod::Trajectory) = (exec.shots, exec.method) {
        let counts = trajectory_sample(circuit, q, address_bits, &exec.noise, shots, rng)?;
        return Ok(counts.iter().map(to_f64).collect());
    }
    let probs = if exec.noise.has_gate_noise() {
        measure_probs(&evolve_density(circuit, &exec.noise)?, exec.noise.readout_flip)
    } else {
        let mut v = StateVector::ground(circuit.qubits);
        v.run(circuit)?;
        let mut p = v.probabilities();
        super::apply_readout(&mut p, circuit.qubits, exec.noise.readout_flip);
        p
    };
    sample_tables(outcome_probs(&probs, q, address_bits), exec, rng)
}

/// Probabilities as they are for `Shots::Exact`, one joint multinomial draw otherwise.
pub(crate) fn sample_tables<R: Rng + ?Sized>(tables: Vec<OutcomeProbs>, exec: &Execution, rng: &mut R) -> Result<Vec<OutcomeProbs>> {
    match exec.shots {
        Shots::Exact => Ok(tables),
        Shots::Finite(shots) => Ok(sample_outcomes(&tables, shots, rng)?.iter().map(to_f64).collect()),
    }
}

/// Whether `exec` takes the density-matrix path, where repeated runs of one
/// circuit shape can share a [`FoldedCircuit`].
pub(crate) fn folds(exec: &Execution, qubits: usize) -> bool {
    exec.noise.has_gate_noise()
        && qubits <= DENSITY_QUBIT_CAP
        && !matches!((exec.shots, exec.method), (Shots::Finite(_), SamplingMethod::Trajectory))
}

fn to_f64(t: &crate::unary::ShotCounts) -> OutcomeProbs {
    OutcomeProbs::from_values(t.data_qubits(), t.values().iter().map(|&c| c as f64).collect()).expect("same layout")
}

/// Estimated layer output and the share of shots kept by post-selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerEstimate {
    pub y: Vec<f64>,
    pub retained_fraction: f64,
}

/// Reads `W x` off a noisy tomography circuit.
///
/// The circuit loads `x / |x|`; the norm is classical side information and
/// rescales the estimate. A zero input yields a zero output without running.
pub fn noisy_layer_forward<R: Rng + ?Sized>(
    layout: &PyramidLayout,
    angles: &[f64],
    x: &[f64],
    exec: &Execution,
    rng: &mut R,
) -> Result<LayerEstimate> {
    layout.check_angles(angles)?;
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if norm == 0.0 {
        return Ok(LayerEstimate { y: vec![0.0; layout.out_dim()], retained_fraction: 1.0 });
    }
    let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let circuit = RegisterCircuit::from_circuit(&tomography_circuit(layout, angles, &unit)?);
    let table = execute(&circuit, layout.qubits(), 0, exec, rng)?.swap_remove(0);
    estimate_table(&table, layout.out_dim(), norm, exec.postselect)
}

/// One layer set up for many noisy runs under a fixed execution setting. On the
/// density-matrix path the input-independent parts of the tomography circuit are
/// folded once and each input only evolves its loader; other paths build the
/// whole circuit per input.
#[derive(Debug, Clone)]
pub struct PreparedLayer {
    layout: PyramidLayout,
    angles: Vec<f64>,
    exec: Execution,
    folded: Option<FoldedCircuit>,
}

impl PreparedLayer {
    pub fn new(layout: &PyramidLayout, angles: &[f64], exec: &Execution) -> Result<Self> {
        layout.check_angles(angles)?;
        exec.noise.validate()?;
        let (q, n) = (layout.qubits(), layout.in_dim());
        let folded = if folds(exec, q + 1) {
            let head: Vec<RegisterOp> = prep_gates(q, n).into_iter().map(Into::into).collect();
            let tail: Vec<RegisterOp> = layout.gates(angles).chain(readout_gates(q)).map(Into::into).collect();
            Some(FoldedCircuit::new(q + 1, q, 0, &head, &tail, &exec.noise)?)
        } else {
            None
        };
        Ok(PreparedLayer { layout: layout.clone(), angles: angles.to_vec(), exec: *exec, folded })
    }

    /// Same distribution as [`noisy_layer_forward`] with this layer's setting.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<LayerEstimate> {
        let Some(folded) = &self.folded else {
            return noisy_layer_forward(&self.layout, &self.angles, x, &self.exec, rng);
        };
        let (q, n) = (self.layout.qubits(), self.layout.in_dim());
        if x.len() != n {
            return Err(crate::Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            return Ok(LayerEstimate { y: vec![0.0; self.layout.out_dim()], retained_fraction: 1.0 });
        }
        let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let body: Vec<RegisterOp> = loader_gates(&unit, q - n)?.into_iter().map(Into::into).collect();
        let table = sample_tables(folded.tables(&body)?, &self.exec, rng)?.swap_remove(0);
        estimate_table(&table, self.layout.out_dim(), norm, self.exec.postselect)
    }
}

/// Post-selects (optionally) and decodes one outcome table, scaling by `norm`.
pub(crate) fn estimate_table(table: &OutcomeProbs, m: usize, norm: f64, postselect: bool) -> Result<LayerEstimate> {
    let (kept, fraction) = postselect_unary(table);
    let (table, retained_fraction) = if postselect { (&kept, fraction) } else { (table, 1.0) };
    let y = estimate_outputs(table, m)?.into_iter().map(|v| v * norm).collect();
    Ok(LayerEstimate { y, retained_fraction })
}
