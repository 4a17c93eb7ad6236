//! Noisy execution: per-gate depolarizing channels, readout confusion, finite-shot
//! sampling by density matrix + multinomial or by per-shot trajectories, unary
//! post-selection and basis-gate cost accounting.

mod density;
mod folded;
mod layer;
mod profile;
mod sampling;
mod tally;
mod trajectory;

pub use density::{evolve_density, measure_probs, DensityMatrix, DENSITY_QUBIT_CAP};
pub use folded::FoldedCircuit;
pub use layer::{execute, noisy_layer_forward, LayerEstimate, PreparedLayer};
pub(crate) use layer::{estimate_table, folds, sample_tables};
pub use profile::{Execution, NoiseProfile, SamplingMethod, Shots};
pub use sampling::{apply_readout, multinomial_sample, outcome_probs, sample_outcomes};
pub use tally::{basis_gate_tally, BasisGateTally, GateCost};
pub use trajectory::trajectory_sample;
