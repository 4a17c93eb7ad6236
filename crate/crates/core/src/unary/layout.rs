use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Circuit, Gate};
use crate::{Error, Result};

/// Nearest-neighbour pyramid over `q = max(m, n)` wires mapping the `n` input wires
/// `q-n..q` onto the `m` output wires `q-m..q`.
///
/// Gates are emitted wave by wave: wave `t` (for `t = 0..=2q-4`) holds gates on
/// wires `(i, i+1)` for `i = t%2, t%2+2, ..., <= min(t, 2q-4-t)`. The full square
/// pyramid has `q(q-1)/2` gates and depth `2q-3`. For `m != n` gates outside the
/// light cone of the active inputs and measured outputs are dropped; they cannot
/// affect the `m x n` block. Angle `k` always drives `gates[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PyramidLayout {
    m: usize,
    n: usize,
    /// Lower wire of each gate; the gate acts on `(w, w+1)`.
    gates: Vec<usize>,
}

pub fn pyramid_layout(m: usize, n: usize) -> PyramidLayout {
    assert!(m >= 1 && n >= 1, "pyramid needs positive dimensions");
    let full = full_wave(m.max(n));
    let keep = light_cone(&full, m, n);
    let gates = full.into_iter().zip(keep).filter_map(|(w, k)| k.then_some(w)).collect();
    PyramidLayout { m, n, gates }
}

fn full_wave(q: usize) -> Vec<usize> {
    let mut full = Vec::new();
    if q >= 2 {
        let last = 2 * q - 4;
        for t in 0..=last {
            let top = t.min(last - t);
            let mut i = t % 2;
            while i <= top {
                full.push(i);
                i += 2;
            }
        }
    }
    full
}

/// Marks gates that touch a wire carrying input amplitude and a wire that still
/// reaches a measured output.
fn light_cone(full: &[usize], m: usize, n: usize) -> Vec<bool> {
    let q = m.max(n);
    let mut forward = vec![false; full.len()];
    let mut reach: Vec<bool> = (0..q).map(|w| w >= q - n).collect();
    for (k, &w) in full.iter().enumerate() {
        if reach[w] || reach[w + 1] {
            forward[k] = true;
            reach[w] = true;
            reach[w + 1] = true;
        }
    }
    let mut observed: Vec<bool> = (0..q).map(|w| w >= q - m).collect();
    let mut keep = vec![false; full.len()];
    for (k, &w) in full.iter().enumerate().rev() {
        if observed[w] || observed[w + 1] {
            observed[w] = true;
            observed[w + 1] = true;
            keep[k] = forward[k];
        }
    }
    keep
}

impl PyramidLayout {
    pub fn in_dim(&self) -> usize {
        self.n
    }

    pub fn out_dim(&self) -> usize {
        self.m
    }

    pub fn qubits(&self) -> usize {
        self.m.max(self.n)
    }

    pub fn angle_count(&self) -> usize {
        self.gates.len()
    }

    /// Lower wire of every gate in application order.
    pub fn gate_wires(&self) -> &[usize] {
        &self.gates
    }

    pub fn input_offset(&self) -> usize {
        self.qubits() - self.n
    }

    pub fn output_offset(&self) -> usize {
        self.qubits() - self.m
    }

    pub fn check_angles(&self, angles: &[f64]) -> Result<()> {
        if angles.len() != self.gates.len() {
            return Err(Error::AngleCountMismatch { expected: self.gates.len(), got: angles.len() });
        }
        Ok(())
    }

    pub fn gates<'a>(&'a self, angles: &'a [f64]) -> impl Iterator<Item = Gate> + 'a {
        self.gates.iter().zip(angles).map(|(&w, &t)| Gate::rbs(w, w + 1, t))
    }

    /// The pyramid as a standalone circuit on `q` data wires.
    pub fn circuit(&self, angles: &[f64]) -> Result<Circuit> {
        self.check_angles(angles)?;
        let mut c = Circuit::new(self.qubits(), false);
        c.extend(self.gates(angles))?;
        Ok(c)
    }

    pub fn depth(&self) -> usize {
        let mut free = vec![0usize; self.qubits()];
        let mut depth = 0;
        for &w in &self.gates {
            let t = free[w].max(free[w + 1]) + 1;
            free[w] = t;
            free[w + 1] = t;
            depth = depth.max(t);
        }
        depth
    }

    /// Applies the gates to a wire-major `q x batch` block in place.
    pub fn apply_batch(&self, angles: &[f64], state: &mut [f64], batch: usize) {
        debug_assert_eq!(state.len(), self.qubits() * batch);
        for (&w, &theta) in self.gates.iter().zip(angles) {
            let (s, c) = libm::sincos(theta);
            let (lo, hi) = state.split_at_mut((w + 1) * batch);
            rotate_rows(&mut lo[w * batch..], &mut hi[..batch], c, s);
        }
    }
}

/// `(a, b) <- (c a + s b, -s a + c b)` elementwise.
#[inline]
pub(crate) fn rotate_rows(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (u, v) = (*x, *y);
        *x = c * u + s * v;
        *y = c * v - s * u;
    }
}

/// The `m x n` block of the unary action: `W[j][i]` is the amplitude on output wire
/// `q-m+j` after feeding `e` on input wire `q-n+i`.
pub fn circuit_to_matrix(layout: &PyramidLayout, angles: &[f64]) -> Result<DMatrix<f64>> {
    layout.check_angles(angles)?;
    let (q, m, n) = (layout.qubits(), layout.m, layout.n);
    let mut block = vec![0.0; q * n];
    for i in 0..n {
        block[(layout.input_offset() + i) * n + i] = 1.0;
    }
    layout.apply_batch(angles, &mut block, n);
    let off = layout.output_offset();
    Ok(DMatrix::from_fn(m, n, |j, i| block[(off + j) * n + i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unary::{simulate_unary, UnaryState};
    use proptest::prelude::*;

    #[test]
    fn square_counts_and_depths() {
        assert_eq!(pyramid_layout(2, 2).angle_count(), 1);
        assert_eq!(pyramid_layout(2, 2).depth(), 1);
        assert_eq!(pyramid_layout(5, 5).angle_count(), 10);
        assert_eq!(pyramid_layout(5, 5).depth(), 7);
        assert_eq!(pyramid_layout(11, 11).angle_count(), 55);
        assert_eq!(pyramid_layout(21, 21).angle_count(), 210);
        assert_eq!(pyramid_layout(6, 6).angle_count(), 15);
        assert_eq!(pyramid_layout(1, 1).angle_count(), 0);
    }

    #[test]
    fn five_wire_wave_by_hand() {
        // waves 0..=6: [0] [1] [0,2] [1,3] [0,2] [1] [0]
        assert_eq!(pyramid_layout(5, 5).gate_wires(), &[0, 1, 0, 2, 1, 3, 0, 2, 1, 0]);
    }

    #[test]
    fn depth_formula_holds_up_to_64() {
        for n in 2..=64 {
            let l = pyramid_layout(n, n);
            assert_eq!(l.depth(), 2 * n - 3, "n = {n}");
            assert_eq!(l.angle_count(), n * (n - 1) / 2);
            assert_eq!(l.circuit(&vec![0.1; l.angle_count()]).unwrap().depth(), 2 * n - 3);
        }
        for m in 1..=12 {
            for n in 1..=12 {
                let l = pyramid_layout(m, n);
                if m.max(n) >= 2 {
                    assert!(l.depth() <= 2 * m.max(n) - 3);
                }
            }
        }
    }

    #[test]
    fn zero_angles_give_identity() {
        let w = circuit_to_matrix(&pyramid_layout(4, 4), &[0.0; 6]).unwrap();
        assert_eq!(w, DMatrix::identity(4, 4));
    }

    #[test]
    fn single_gate_is_rotation_block() {
        let t = 0.7;
        let w = circuit_to_matrix(&pyramid_layout(2, 2), &[t]).unwrap();
        let (s, c) = (libm::sin(t), libm::cos(t));
        let expect = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
        assert!((w - expect).abs().max() < 1e-15);
    }

    #[test]
    fn angle_count_mismatch_is_an_error() {
        assert_eq!(
            circuit_to_matrix(&pyramid_layout(3, 3), &[0.0; 2]),
            Err(Error::AngleCountMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn rectangular_block_matches_full_pyramid() {
        // Pruning must not change the block: compare with the unpruned q-wire pyramid.
        for (m, n) in [(6, 2), (2, 6), (5, 3), (3, 5), (7, 1), (1, 4)] {
            let q = m.max(n);
            let full = pyramid_layout(q, q);
            let angles_full: Vec<f64> = (0..full.angle_count()).map(|i| 0.3 + 0.61 * i as f64).collect();
            let keep = light_cone(full.gate_wires(), m, n);
            let angles: Vec<f64> = angles_full.iter().zip(&keep).filter_map(|(&t, &k)| k.then_some(t)).collect();
            let pruned = pyramid_layout(m, n);
            assert!(pruned.angle_count() < full.angle_count());
            let wp = circuit_to_matrix(&pruned, &angles).unwrap();
            let wf = circuit_to_matrix(&full, &angles_full).unwrap();
            let block = wf.view((q - m, q - n), (m, n)).into_owned();
            assert!((wp - block).abs().max() < 1e-12, "m={m} n={n}");
        }
    }

    #[test]
    fn matrix_matches_column_by_column_simulation() {
        let layout = pyramid_layout(6, 6);
        let angles: Vec<f64> = (0..15).map(|i| libm::sin(1.3 * i as f64 + 0.2) * 3.0).collect();
        let w = circuit_to_matrix(&layout, &angles).unwrap();
        let c = layout.circuit(&angles).unwrap();
        for i in 0..6 {
            let mut u = vec![0.0; 6];
            u[i] = 1.0;
            let out = simulate_unary(&c, &UnaryState::from_unary(&u, false).unwrap()).unwrap();
            for j in 0..6 {
                assert!((out.unary(0)[j] - w[(j, i)]).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn square_blocks_are_orthogonal(n in 2usize..14, seed in any::<u64>()) {
            let layout = pyramid_layout(n, n);
            let angles = crate::rng::uniform_angles(seed, layout.angle_count());
            let w = circuit_to_matrix(&layout, &angles).unwrap();
            let e = (w.transpose() * &w - DMatrix::identity(n, n)).abs().max();
            prop_assert!(e <= 1e-10);
        }

        #[test]
        fn rectangular_blocks_are_isometries(m in 1usize..9, n in 1usize..9, seed in any::<u64>()) {
            let layout = pyramid_layout(m, n);
            let angles = crate::rng::uniform_angles(seed, layout.angle_count());
            let w = circuit_to_matrix(&layout, &angles).unwrap();
            let g = if m >= n { w.transpose() * &w } else { &w * w.transpose() };
            let k = m.min(n);
            prop_assert!((g - DMatrix::identity(k, k)).abs().max() <= 1e-10);
        }
    }
}
