use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stationary covariance kernels with unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Kernel {
    /// `exp(-d^2 / (2 l^2))`
    SquaredExponential { length_scale: f64 },
    /// `exp(-2 sin^2(pi d / p) / l^2)`
    ExpSineSquared { length_scale: f64, period: f64 },
}

impl Kernel {
    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            Kernel::SquaredExponential { length_scale: l } => libm::exp(-d * d / (2.0 * l * l)),
            Kernel::ExpSineSquared { length_scale: l, period: p } => {
                let s = libm::sin(core::f64::consts::PI * d / p);
                libm::exp(-2.0 * s * s / (l * l))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::SquaredExponential { length_scale } => length_scale > 0.0 && length_scale.is_finite(),
            Kernel::ExpSineSquared { length_scale, period } => length_scale > 0.0 && period > 0.0 && length_scale.is_finite() && period.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("kernel length scale and period must be positive".into()))
        }
    }

    pub fn matrix(&self, grid: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(grid.len(), grid.len(), |i, j| self.eval(grid[i] - grid[j]))
    }
}

/// Lower Cholesky factor of the kernel matrix on `grid`.
///
/// Starts at `1e-10` diagonal jitter and grows it by 100x up to `1e-4`; smooth
/// kernels on fine grids are numerically rank-deficient.
pub fn grf_factor(kernel: &Kernel, grid: &[f64]) -> Result<DMatrix<f64>> {
    kernel.validate()?;
    if grid.is_empty() {
        return Err(Error::Empty("GRF grid"));
    }
    let k = kernel.matrix(grid);
    let mut jitter = 1e-10;
    loop {
        let mut m = k.clone();
        for i in 0..grid.len() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok(c.l());
        }
        if jitter >= 1e-4 {
            return Err(Error::CholeskyFailed { jitter });
        }
        jitter *= 100.0;
    }
}

/// One zero-mean draw `L z`.
pub fn grf_draw<R: Rng + ?Sized>(factor: &DMatrix<f64>, rng: &mut R) -> Vec<f64> {
    let n = factor.nrows();
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    (0..n).map(|i| (0..=i).map(|j| factor[(i, j)] * z[j]).sum()).collect()
}

/// `count` draws on `grid`, each from its own stream of `seed`.
pub fn grf_sample(kernel: &Kernel, grid: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let l = grf_factor(kernel, grid)?;
    Ok((0..count).map(|i| grf_draw(&l, &mut crate::rng::stream(seed, &[0x6F, i as u64]))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::uniform_grid;
    use alloc::vec;

    #[test]
    fn kernel_values() {
        let se = Kernel::SquaredExponential { length_scale: 0.2 };
        assert_eq!(se.eval(0.0), 1.0);
        assert!((se.eval(0.2) - libm::exp(-0.5)).abs() < 1e-15);
        let es = Kernel::ExpSineSquared { length_scale: 1.0, period: 1.0 };
        assert_eq!(es.eval(0.0), 1.0);
        assert!((es.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((es.eval(0.5) - libm::exp(-2.0)).abs() < 1e-15);
        assert!(Kernel::SquaredExponential { length_scale: 0.0 }.validate().is_err());
        assert!(se.matrix(&uniform_grid(7)).diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn draws_are_seeded() {
        let k = Kernel::SquaredExponential { length_scale: 0.2 };
        let g = uniform_grid(100);
        let a = grf_sample(&k, &g, 3, 1).unwrap();
        assert_eq!(a, grf_sample(&k, &g, 3, 1).unwrap());
        assert_ne!(a, grf_sample(&k, &g, 3, 2).unwrap());
        let p = Kernel::ExpSineSquared { length_scale: 1.0, period: 1.0 };
        assert_eq!(grf_sample(&p, &g, 2, 1).unwrap()[0].len(), 100);
    }

    /// Monte-Carlo covariance at three points against the kernel matrix.
    fn covariance_check(kernel: Kernel, pts: [f64; 3]) {
        let f = grf_factor(&kernel, &pts).unwrap();
        let mut r = crate::rng::stream(5, &[]);
        let n = 100_000;
        let mut acc = [[0.0; 3]; 3];
        for _ in 0..n {
            let v = grf_draw(&f, &mut r);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += v[i] * v[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let k = kernel.eval(pts[i] - pts[j]);
                let est = acc[i][j] / n as f64;
                // var of x_i x_j is (1 + k^2) for unit-variance Gaussians
                let se = libm::sqrt((1.0 + k * k) / n as f64);
                assert!((est - k).abs() <= 3.0 * se + 1e-9, "{i}{j}: {est} vs {k}");
            }
        }
    }

    #[test]
    fn sample_covariance_matches_kernel() {
        covariance_check(Kernel::SquaredExponential { length_scale: 0.2 }, [0.1, 0.25, 0.7]);
        covariance_check(Kernel::ExpSineSquared { length_scale: 1.0, period: 1.0 }, [0.0, 0.3, 0.9]);
    }

    #[test]
    fn stationarity_depends_on_distance_only() {
        // pairs at equal distance have equal sample covariance up to MC error
        let k = Kernel::SquaredExponential { length_scale: 0.3 };
        let g = vec![0.0, 0.2, 0.5, 0.7];
        let f = grf_factor(&k, &g).unwrap();
        let mut r = crate::rng::stream(8, &[]);
        let n = 50_000;
        let (mut c01, mut c23) = (0.0, 0.0);
        for _ in 0..n {
            let v = grf_draw(&f, &mut r);
            c01 += v[0] * v[1];
            c23 += v[2] * v[3];
        }
        let se = libm::sqrt(2.0 * (1.0 + k.eval(0.2).powi(2)) / n as f64);
        assert!(((c01 - c23) / n as f64).abs() <= 4.0 * se);
    }
}
