use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::unary::{circuit_to_matrix, PyramidLayout};
use crate::{Error, Result};

#[inline]
pub(crate) fn silu(x: f64) -> f64 {
    x / (1.0 + libm::exp(-x))
}

#[inline]
pub(crate) fn silu_grad(x: f64) -> f64 {
    let s = 1.0 / (1.0 + libm::exp(-x));
    s * (1.0 + x * (1.0 - s))
}

/// One orthogonal layer: `y = act(W(angles) (scale x)) + [x if residual]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumLayer {
    pub layout: PyramidLayout,
    pub angles: Vec<f64>,
    /// Applied to the incoming activations before loading; `1/sqrt(n)` between layers.
    pub input_scale: f64,
    pub silu: bool,
    pub residual: bool,
}

/// Forward quantities needed by the reverse sweep, wire-major over the batch.
#[derive(Debug, Clone)]
pub struct LayerCache {
    state: Vec<f64>,
    pre: Vec<f64>,
}

impl LayerCache {
    pub fn pre_activation(&self) -> &[f64] {
        &self.pre
    }
}

impl QuantumLayer {
    pub fn new(layout: PyramidLayout, angles: Vec<f64>, input_scale: f64, silu: bool, residual: bool) -> Result<Self> {
        layout.check_angles(&angles)?;
        if residual && layout.in_dim() != layout.out_dim() {
            return Err(Error::InvalidConfig("residual layers must be square".into()));
        }
        Ok(QuantumLayer { layout, angles, input_scale, silu, residual })
    }

    pub fn in_dim(&self) -> usize {
        self.layout.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layout.out_dim()
    }

    pub fn weight(&self) -> DMatrix<f64> {
        circuit_to_matrix(&self.layout, &self.angles).expect("angles sized by construction")
    }

    /// `W (scale x)` for a feature-major `in_dim x batch` block; returns the full
    /// `q x batch` wire state after the pyramid.
    fn propagate(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let q = self.layout.qubits();
        let off = self.layout.input_offset();
        let mut state = vec![0.0; q * batch];
        for (dst, src) in state[off * batch..(off + self.in_dim()) * batch].iter_mut().zip(x) {
            *dst = self.input_scale * src;
        }
        self.layout.apply_batch(&self.angles, &mut state, batch);
        state
    }

    /// Adds activation and residual to a pre-activation block.
    pub(crate) fn finish(&self, pre: &[f64], x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = if self.silu { pre.iter().map(|&v| silu(v)).collect() } else { pre.to_vec() };
        if self.residual {
            y.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
        y
    }

    pub fn forward_batch(&self, x: &[f64], batch: usize) -> Result<(Vec<f64>, LayerCache)> {
        if x.len() != self.in_dim() * batch {
            return Err(Error::DimensionMismatch { expected: self.in_dim() * batch, got: x.len() });
        }
        let state = self.propagate(x, batch);
        let off = self.layout.output_offset() * batch;
        let pre = state[off..off + self.out_dim() * batch].to_vec();
        let y = self.finish(&pre, x);
        Ok((y, LayerCache { state, pre }))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(x, 1)?.0)
    }

    /// Reverse sweep over the Givens gates. Accumulates angle gradients into
    /// `dangles` and returns the gradient with respect to the layer input.
    pub fn backward_batch(&self, cache: LayerCache, dy: &[f64], batch: usize, dangles: &mut [f64]) -> Vec<f64> {
        debug_assert_eq!(dangles.len(), self.angles.len());
        let q = self.layout.qubits();
        let LayerCache { mut state, pre } = cache;
        let mut grad = vec![0.0; q * batch];
        let off = self.layout.output_offset() * batch;
        for ((g, &d), &p) in grad[off..off + self.out_dim() * batch].iter_mut().zip(dy).zip(&pre) {
            *g = if self.silu { d * silu_grad(p) } else { d };
        }
        let wires = self.layout.gate_wires();
        for k in (0..wires.len()).rev() {
            let w = wires[k];
            let (s, c) = libm::sincos(self.angles[k]);
            let (slo, shi) = state.split_at_mut((w + 1) * batch);
            let (sa, sb) = (&mut slo[w * batch..], &mut shi[..batch]);
            let (glo, ghi) = grad.split_at_mut((w + 1) * batch);
            let (ga, gb) = (&mut glo[w * batch..], &mut ghi[..batch]);
            let mut acc = 0.0;
            for i in 0..batch {
                // d(u_a')/dθ = u_b', d(u_b')/dθ = -u_a'
                acc += ga[i] * sb[i] - gb[i] * sa[i];
                let (u, v) = (sa[i], sb[i]);
                sa[i] = c * u - s * v;
                sb[i] = s * u + c * v;
                let (u, v) = (ga[i], gb[i]);
                ga[i] = c * u - s * v;
                gb[i] = s * u + c * v;
            }
            dangles[k] += acc;
        }
        let inoff = self.layout.input_offset() * batch;
        let mut dx: Vec<f64> = grad[inoff..inoff + self.in_dim() * batch].iter().map(|g| g * self.input_scale).collect();
        if self.residual {
            dx.iter_mut().zip(dy).for_each(|(a, b)| *a += b);
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::unary::{pyramid_layout, simulate_unary, Circuit, UnaryState};
    use proptest::prelude::*;
    use rand::Rng as _;

    fn layer(m: usize, n: usize, seed: u64, silu: bool, residual: bool, scale: f64) -> QuantumLayer {
        let layout = pyramid_layout(m, n);
        let angles = rng::uniform_angles(seed, layout.angle_count());
        QuantumLayer::new(layout, angles, scale, silu, residual).unwrap()
    }

    fn loss(l: &QuantumLayer, x: &[f64], batch: usize, r: &[f64]) -> f64 {
        l.forward_batch(x, batch).unwrap().0.iter().zip(r).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn zero_angles_identity_activation() {
        let l = QuantumLayer::new(pyramid_layout(4, 4), vec![0.0; 6], 0.5, false, false).unwrap();
        assert_eq!(l.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn residual_adds_input() {
        let l = layer(5, 5, 1, true, true, 1.0);
        let x = rng::unit_vector(2, 5);
        let y = l.forward(&x).unwrap();
        let plain = QuantumLayer { residual: false, ..l.clone() }.forward(&x).unwrap();
        for i in 0..5 {
            assert!((y[i] - plain[i] - x[i]).abs() < 1e-15);
        }
        assert!(QuantumLayer::new(pyramid_layout(3, 4), vec![0.0; pyramid_layout(3, 4).angle_count()], 1.0, true, true).is_err());
    }

    #[test]
    fn matches_unary_simulation() {
        let l = layer(6, 6, 3, false, false, 1.0);
        let x = rng::unit_vector(4, 6);
        let mut c = Circuit::new(6, false);
        c.extend(l.layout.gates(&l.angles)).unwrap();
        let s = simulate_unary(&c, &UnaryState::from_unary(&x, false).unwrap()).unwrap();
        let y = l.forward(&x).unwrap();
        for i in 0..6 {
            assert!((s.unary(0)[i] - y[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn single_gate_gradient_closed_form() {
        // y = (c x0 + s x1, -s x0 + c x1); dL/dθ for L = r·y
        let t = 0.4;
        let l = QuantumLayer::new(pyramid_layout(2, 2), vec![t], 1.0, false, false).unwrap();
        let (x, r) = ([0.3, -0.7], [1.5, 0.2]);
        let (_, cache) = l.forward_batch(&x, 1).unwrap();
        let mut g = [0.0];
        let dx = l.backward_batch(cache, &r, 1, &mut g);
        let (s, c) = (libm::sin(t), libm::cos(t));
        let expect = r[0] * (-s * x[0] + c * x[1]) + r[1] * (-c * x[0] - s * x[1]);
        assert!((g[0] - expect).abs() < 1e-15);
        assert!((dx[0] - (c * r[0] - s * r[1])).abs() < 1e-15);
        assert!((dx[1] - (s * r[0] + c * r[1])).abs() < 1e-15);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let l = layer(5, 5, 7, true, false, 1.0);
        let x = rng::unit_vector(1, 5);
        let (_, cache) = l.forward_batch(&x, 1).unwrap();
        let mut g = vec![0.0; l.angles.len()];
        let dx = l.backward_batch(cache, &[0.0; 5], 1, &mut g);
        assert!(g.iter().chain(&dx).all(|&v| v == 0.0));
    }

    fn check_gradients(m: usize, n: usize, seed: u64, silu: bool, residual: bool) -> f64 {
        let batch = 3;
        let scale = 1.0 / libm::sqrt(n as f64);
        let mut l = layer(m, n, seed, silu, residual, scale);
        let mut r = rng::stream(seed, &[7]);
        let x: Vec<f64> = (0..n * batch).map(|_| r.random_range(-1.0..1.0)).collect();
        let up: Vec<f64> = (0..m * batch).map(|_| r.random_range(-1.0..1.0)).collect();
        let (_, cache) = l.forward_batch(&x, batch).unwrap();
        let mut g = vec![0.0; l.angles.len()];
        let dx = l.backward_batch(cache, &up, batch, &mut g);
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-3);
        for k in 0..l.angles.len() {
            let t = l.angles[k];
            l.angles[k] = t + h;
            let p = loss(&l, &x, batch, &up);
            l.angles[k] = t - h;
            let mm = loss(&l, &x, batch, &up);
            l.angles[k] = t;
            worst = worst.max(rel(g[k], (p - mm) / (2.0 * h)));
        }
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&l, &xp, batch, &up) - loss(&l, &xm, batch, &up)) / (2.0 * h);
            worst = worst.max(rel(dx[i], fd));
        }
        worst
    }

    #[test]
    fn gradients_match_central_differences() {
        for n in [3, 5, 8, 11] {
            for seed in 0..3 {
                assert!(check_gradients(n, n, seed, true, false) <= 1e-4);
                assert!(check_gradients(n, n, seed, true, true) <= 1e-4);
            }
        }
        for (m, n) in [(6, 2), (2, 6), (5, 3)] {
            assert!(check_gradients(m, n, 9, true, false) <= 1e-4);
        }
    }

    proptest! {
        #[test]
        fn square_layers_preserve_norm(n in 2usize..16, seed in any::<u64>()) {
            let l = layer(n, n, seed, false, false, 1.0);
            let x: Vec<f64> = rng::unit_vector(seed ^ 1, n).iter().map(|v| 3.0 * v).collect();
            let y = l.forward(&x).unwrap();
            let ny = libm::sqrt(y.iter().map(|v| v * v).sum::<f64>());
            prop_assert!((ny - 3.0).abs() <= 1e-10);
        }
    }
}
