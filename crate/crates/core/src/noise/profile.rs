use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Per-gate depolarizing strengths and symmetric readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub lambda_1q: f64,
    pub lambda_2q: f64,
    pub readout_flip: f64,
}

impl NoiseProfile {
    pub const TWO_QUBIT_SCALE: f64 = 0.8;

    pub fn noiseless() -> Self {
        NoiseProfile { lambda_1q: 0.0, lambda_2q: 0.0, readout_flip: 0.0 }
    }

    /// `lambda` on single-qubit gates, `0.8 lambda` on multi-qubit gates.
    pub fn depolarizing(lambda: f64, readout_flip: f64) -> Result<Self> {
        Self::scaled(lambda, Self::TWO_QUBIT_SCALE, readout_flip)
    }

    pub fn scaled(lambda: f64, two_qubit_scale: f64, readout_flip: f64) -> Result<Self> {
        let p = NoiseProfile { lambda_1q: lambda, lambda_2q: lambda * two_qubit_scale, readout_flip };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        in_range("lambda_1q", self.lambda_1q, 0.0, 1.0)?;
        in_range("lambda_2q", self.lambda_2q, 0.0, 1.0)?;
        in_range("readout_flip", self.readout_flip, 0.0, 0.5)
    }

    /// Strength attached to a gate whose support has `support` wires.
    pub fn lambda_for(&self, support: usize) -> f64 {
        if support >= 2 {
            self.lambda_2q
        } else {
            self.lambda_1q
        }
    }

    pub fn has_gate_noise(&self) -> bool {
        self.lambda_1q > 0.0 || self.lambda_2q > 0.0
    }
}

pub(crate) fn in_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if !(min..=max).contains(&value) {
        return Err(Error::OutOfRange { name, value, min, max });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shots {
    /// Infinite-shot limit: estimates use the outcome probabilities directly.
    Exact,
    Finite(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// One density-matrix evolution, then multinomial draws.
    #[default]
    Multinomial,
    /// Independent noise unravelling for every shot.
    Trajectory,
}

/// How a circuit is run and read out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub noise: NoiseProfile,
    pub shots: Shots,
    pub method: SamplingMethod,
    pub postselect: bool,
}

impl Execution {
    pub fn exact() -> Self {
        Execution { noise: NoiseProfile::noiseless(), shots: Shots::Exact, method: SamplingMethod::Multinomial, postselect: true }
    }

    pub fn sampled(noise: NoiseProfile, shots: u64) -> Self {
        Execution { noise, shots: Shots::Finite(shots), method: SamplingMethod::Multinomial, postselect: true }
    }

    pub fn with_method(mut self, method: SamplingMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_postselect(mut self, postselect: bool) -> Self {
        self.postselect = postselect;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scale_is_point_eight() {
        let p = NoiseProfile::depolarizing(5e-4, 0.01).unwrap();
        assert_eq!(p.lambda_2q / p.lambda_1q, 0.8);
        assert_eq!(p.lambda_for(1), 5e-4);
        assert_eq!(p.lambda_for(4), p.lambda_2q);
    }

    #[test]
    fn ranges_are_checked() {
        assert!(NoiseProfile::depolarizing(1.5, 0.0).is_err());
        assert!(NoiseProfile::depolarizing(0.1, 0.6).is_err());
        assert!(NoiseProfile::depolarizing(-0.1, 0.0).is_err());
        assert!(NoiseProfile::depolarizing(f64::NAN, 0.0).is_err());
    }
}
