//! Quantum orthogonal networks: slack-normalized input, pyramid layers with an
//! analytic reverse sweep, and a final unconstrained dense layer.

mod layer;
mod normalization;

pub use layer::{LayerCache, QuantumLayer};
pub use normalization::Normalization;

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{gemm, MatRef};
use crate::noise::{noisy_layer_forward, Execution, PreparedLayer};
use crate::unary::pyramid_layout;
use crate::{Error, Result};

/// Shape of one network. Quantum layers run on `width + 1` wires (the slack
/// wire included); the dense head maps those to `latent` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QonnArch {
    pub input_dim: usize,
    pub width: usize,
    pub layers: usize,
    pub latent: usize,
    pub residual: bool,
}

impl QonnArch {
    pub fn hidden(&self) -> usize {
        self.width + 1
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.width == 0 || self.layers == 0 || self.latent == 0 {
            return Err(Error::InvalidConfig("network dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QOrthoNN {
    pub arch: QonnArch,
    pub norm: Normalization,
    pub layers: Vec<QuantumLayer>,
    /// `latent x hidden`, row-major.
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
}

/// Activations kept by [`QOrthoNN::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct QonnCache {
    batch: usize,
    layers: Vec<LayerCache>,
    hidden: Vec<f64>,
}

impl QOrthoNN {
    /// Angles uniform in `[-pi/2, pi/2)`, dense weights and bias uniform in
    /// `(-1/sqrt(h), 1/sqrt(h))`.
    pub fn init<R: Rng + ?Sized>(arch: QonnArch, norm: Normalization, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        if norm.dim() != arch.input_dim {
            return Err(Error::DimensionMismatch { expected: arch.input_dim, got: norm.dim() });
        }
        let h = arch.hidden();
        let half = core::f64::consts::FRAC_PI_2;
        let mut layers = Vec::with_capacity(arch.layers);
        for l in 0..arch.layers {
            let n_in = if l == 0 { arch.input_dim + 1 } else { h };
            let layout = pyramid_layout(h, n_in);
            let angles = (0..layout.angle_count()).map(|_| rng.random_range(-half..half)).collect();
            let scale = if l == 0 { 1.0 } else { 1.0 / libm::sqrt(n_in as f64) };
            layers.push(QuantumLayer::new(layout, angles, scale, true, arch.residual && n_in == h)?);
        }
        let bound = 1.0 / libm::sqrt(h as f64);
        let dense_w = (0..arch.latent * h).map(|_| rng.random_range(-bound..bound)).collect();
        let dense_b = (0..arch.latent).map(|_| rng.random_range(-bound..bound)).collect();
        Ok(QOrthoNN { arch, norm, layers, dense_w, dense_b })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.angles.len()).sum::<usize>() + self.dense_w.len() + self.dense_b.len()
    }

    pub fn angle_count(&self) -> usize {
        self.layers.iter().map(|l| l.angles.len()).sum()
    }

    /// Flat parameters: layer angles in order, then dense weights, then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend_from_slice(&l.angles);
        }
        p.extend_from_slice(&self.dense_w);
        p.extend_from_slice(&self.dense_b);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), got: p.len() });
        }
        let mut rest = p;
        for l in &mut self.layers {
            let (head, tail) = rest.split_at(l.angles.len());
            l.angles.copy_from_slice(head);
            rest = tail;
        }
        let (w, b) = rest.split_at(self.dense_w.len());
        self.dense_w.copy_from_slice(w);
        self.dense_b.copy_from_slice(b);
        Ok(())
    }

    /// Normalizes `batch` row-major raw samples into a feature-major block.
    /// Returns the block and the number of clamped features.
    pub fn normalize_batch(&self, raw: &[f64], batch: usize) -> Result<(Vec<f64>, usize)> {
        let d = self.arch.input_dim;
        if raw.len() != d * batch {
            return Err(Error::DimensionMismatch { expected: d * batch, got: raw.len() });
        }
        let mut out = vec![0.0; (d + 1) * batch];
        let mut z = vec![0.0; d + 1];
        let mut clamped = 0;
        for (i, row) in raw.chunks_exact(d).enumerate() {
            clamped += self.norm.apply(row, &mut z);
            for (k, &v) in z.iter().enumerate() {
                out[k * batch + i] = v;
            }
        }
        Ok((out, clamped))
    }

    fn dense(&self, hidden: &[f64], batch: usize) -> Vec<f64> {
        let (p, h) = (self.arch.latent, self.arch.hidden());
        let mut out = vec![0.0; p * batch];
        for (row, &b) in out.chunks_exact_mut(batch).zip(&self.dense_b) {
            row.fill(b);
        }
        gemm(1.0, MatRef::rows(&self.dense_w, p, h), MatRef::rows(hidden, h, batch), 1.0, &mut out);
        out
    }

    /// Exact forward pass on `batch` raw samples (row-major `batch x input_dim`).
    /// Returns the feature-major `latent x batch` output, the backward cache and
    /// the clamp count.
    pub fn forward_batch(&self, raw: &[f64], batch: usize) -> Result<(Vec<f64>, QonnCache, usize)> {
        let (mut x, clamped) = self.normalize_batch(raw, batch)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (y, c) = l.forward_batch(&x, batch)?;
            x = y;
            caches.push(c);
        }
        let out = self.dense(&x, batch);
        Ok((out, QonnCache { batch, layers: caches, hidden: x }, clamped))
    }

    /// Gradient of the parameters (layout of [`params`](Self::params)) given the
    /// upstream gradient on the feature-major output.
    pub fn backward_batch(&self, cache: QonnCache, dout: &[f64]) -> Vec<f64> {
        let (p, h, batch) = (self.arch.latent, self.arch.hidden(), cache.batch);
        debug_assert_eq!(dout.len(), p * batch);
        let mut grad = vec![0.0; self.param_count()];
        let na = self.angle_count();
        let (gangles, gdense) = grad.split_at_mut(na);
        let (gw, gb) = gdense.split_at_mut(p * h);
        gemm(1.0, MatRef::rows(dout, p, batch), MatRef::rows(&cache.hidden, h, batch).t(), 0.0, gw);
        for (g, row) in gb.iter_mut().zip(dout.chunks_exact(batch)) {
            *g = row.iter().sum();
        }
        let mut dx = vec![0.0; h * batch];
        gemm(1.0, MatRef::rows(&self.dense_w, p, h).t(), MatRef::rows(dout, p, batch), 0.0, &mut dx);
        let mut end = na;
        for (l, c) in self.layers.iter().zip(cache.layers).rev() {
            let start = end - l.angles.len();
            dx = l.backward_batch(c, &dx, batch, &mut gangles[start..end]);
            end = start;
        }
        grad
    }

    /// Exact forward pass on a single raw sample.
    pub fn forward(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(raw, 1)?.0)
    }

    /// Forward pass with each layer's linear map supplied by `linear(index,
    /// layer, scaled_input)`; activations, residuals and the dense head stay exact.
    pub fn forward_with<F>(&self, raw: &[f64], mut linear: F) -> Result<Vec<f64>>
    where
        F: FnMut(usize, &QuantumLayer, &[f64]) -> Result<Vec<f64>>,
    {
        let mut out = forward_lockstep(&[self], &[raw], |i, layers, xs| Ok(vec![linear(i, layers[0], &xs[0])?]))?;
        Ok(out.swap_remove(0))
    }

    /// Forward pass with every quantum layer executed as a tomography circuit.
    /// Returns the output and the smallest post-selection retention seen.
    pub fn forward_noisy<R: Rng + ?Sized>(&self, raw: &[f64], exec: &Execution, rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let mut retained: f64 = 1.0;
        let y = self.forward_with(raw, |_, l, x| {
            let est = noisy_layer_forward(&l.layout, &l.angles, x, exec, rng)?;
            retained = retained.min(est.retained_fraction);
            Ok(est.y)
        })?;
        Ok((y, retained))
    }
}

impl QOrthoNN {
    /// Every quantum layer set up once for repeated noisy forward passes.
    pub fn prepare_noisy(&self, exec: &Execution) -> Result<Vec<PreparedLayer>> {
        self.layers.iter().map(|l| PreparedLayer::new(&l.layout, &l.angles, exec)).collect()
    }

    /// [`forward_noisy`](Self::forward_noisy) through layers from [`prepare_noisy`](Self::prepare_noisy).
    pub fn forward_prepared<R: Rng + ?Sized>(&self, prepared: &[PreparedLayer], raw: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let mut retained: f64 = 1.0;
        let y = self.forward_with(raw, |i, _, x| {
            let est = prepared[i].forward(x, rng)?;
            retained = retained.min(est.retained_fraction);
            Ok(est.y)
        })?;
        Ok((y, retained))
    }
}

/// Runs several networks of identical shape layer by layer, handing each
/// layer's scaled inputs for all networks to `linear(index, layers, inputs)` at
/// once. Used to execute one layer of a whole ensemble in a single circuit.
pub fn forward_lockstep<F>(nets: &[&QOrthoNN], raws: &[&[f64]], mut linear: F) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(usize, &[&QuantumLayer], &[Vec<f64>]) -> Result<Vec<Vec<f64>>>,
{
    if nets.len() != raws.len() {
        return Err(Error::ShapeMismatch);
    }
    let Some(first) = nets.first() else {
        return Ok(Vec::new());
    };
    if nets.iter().any(|n| n.arch != first.arch) {
        return Err(Error::ShapeMismatch);
    }
    let mut xs = Vec::with_capacity(nets.len());
    for (n, raw) in nets.iter().zip(raws) {
        if raw.len() != n.arch.input_dim {
            return Err(Error::DimensionMismatch { expected: n.arch.input_dim, got: raw.len() });
        }
        xs.push(n.norm.normalize(raw).0);
    }
    for i in 0..first.layers.len() {
        let layers: Vec<&QuantumLayer> = nets.iter().map(|n| &n.layers[i]).collect();
        let scaled: Vec<Vec<f64>> = xs.iter().zip(&layers).map(|(x, l)| x.iter().map(|v| v * l.input_scale).collect()).collect();
        let pre = linear(i, &layers, &scaled)?;
        if pre.len() != nets.len() {
            return Err(Error::ShapeMismatch);
        }
        for ((x, l), p) in xs.iter_mut().zip(&layers).zip(&pre) {
            if p.len() != l.out_dim() {
                return Err(Error::DimensionMismatch { expected: l.out_dim(), got: p.len() });
            }
            *x = l.finish(p, x);
        }
    }
    Ok(nets.iter().zip(&xs).map(|(n, x)| n.dense(x, 1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseProfile;
    use crate::rng;
    use crate::unary::circuit_to_matrix;

    fn net(d: usize, width: usize, layers: usize, residual: bool, seed: u64) -> QOrthoNN {
        let arch = QonnArch { input_dim: d, width, layers, latent: width, residual };
        let norm = Normalization::from_bounds(vec![-1.0; d], vec![1.0; d]).unwrap();
        QOrthoNN::init(arch, norm, &mut rng::stream(seed, &[1])).unwrap()
    }

    fn sample(d: usize, batch: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, &[2]);
        (0..d * batch).map(|_| r.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn shapes_and_param_layout() {
        let n = net(4, 10, 2, true, 0);
        assert_eq!(n.layers[0].angles.len(), pyramid_layout(11, 5).angle_count());
        assert_eq!(n.layers[1].angles.len(), 55);
        assert!(!n.layers[0].residual && n.layers[1].residual);
        let y = n.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(y.len(), 10);
        let mut m = n.clone();
        m.set_params(&n.params()).unwrap();
        assert_eq!(m, n);
        assert_eq!(n.forward(&[0.1, 0.2, 0.3, 0.4]).unwrap(), y);
    }

    #[test]
    fn batch_matches_single() {
        let n = net(3, 5, 3, true, 1);
        let x = sample(3, 4, 1);
        let (yb, _, _) = n.forward_batch(&x, 4).unwrap();
        for i in 0..4 {
            let y = n.forward(&x[i * 3..i * 3 + 3]).unwrap();
            for k in 0..5 {
                assert!((y[k] - yb[k * 4 + i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn full_gradient_matches_central_differences() {
        let (d, batch) = (3, 5);
        let mut n = net(d, 4, 2, true, 2);
        let x = sample(d, batch, 2);
        let up = sample(4, batch, 3);
        let (_, cache, _) = n.forward_batch(&x, batch).unwrap();
        let g = n.backward_batch(cache, &up);
        let p0 = n.params();
        let h = 1e-5;
        for k in 0..p0.len() {
            let mut f = |delta: f64| {
                let mut p = p0.clone();
                p[k] += delta;
                n.set_params(&p).unwrap();
                n.forward_batch(&x, batch).unwrap().0.iter().zip(&up).map(|(a, b)| a * b).sum::<f64>()
            };
            let fd = (f(h) - f(-h)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-4 * fd.abs().max(g[k].abs()).max(1e-3), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn orthogonality_survives_many_updates() {
        let mut n = net(2, 6, 1, false, 3);
        let x = sample(2, 8, 4);
        let target = sample(6, 8, 5);
        let lr = 0.05;
        for _ in 0..10_000 {
            let (y, cache, _) = n.forward_batch(&x, 8).unwrap();
            let dy: Vec<f64> = y.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            let g = n.backward_batch(cache, &dy);
            let p: Vec<f64> = n.params().iter().zip(&g).map(|(a, b)| a - lr * b).collect();
            n.set_params(&p).unwrap();
        }
        let l = &n.layers[0];
        let w = circuit_to_matrix(&l.layout, &l.angles).unwrap();
        let wtw = w.transpose() * &w;
        let eye = nalgebra::DMatrix::<f64>::identity(wtw.nrows(), wtw.ncols());
        assert!((wtw - eye).amax() <= 1e-8);
    }

    #[test]
    fn noisy_forward_converges_to_exact() {
        let n = net(2, 3, 2, true, 4);
        let x = [0.3, -0.6];
        let exact = n.forward(&x).unwrap();
        let (y, r) = n.forward_noisy(&x, &Execution::exact(), &mut rng::stream(0, &[])).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        for (a, b) in y.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-10);
        }
        let err = |shots: u64| {
            let exec = Execution::sampled(NoiseProfile::noiseless(), shots);
            let mut total = 0.0;
            for s in 0..10u64 {
                let (y, _) = n.forward_noisy(&x, &exec, &mut rng::stream(s, &[9])).unwrap();
                total += y.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            }
            total
        };
        assert!(err(1_000_000) < err(1_000));
    }
}
