use alloc::vec::Vec;

/// Cumulative trapezoidal integral on a uniform grid with spacing `h`, `u(0) = 0`.
pub fn antiderivative(v: &[f64], h: f64) -> Vec<f64> {
    let mut u = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for (k, &x) in v.iter().enumerate() {
        if k > 0 {
            acc += 0.5 * h * (v[k - 1] + x);
        }
        u.push(acc);
    }
    u
}

/// Real trigonometric interpolant of samples `f(k/n)`, `k < n`, on the unit period.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    n: usize,
    /// `(a_j, b_j)` for `j = 0..=n/2`.
    coef: Vec<(f64, f64)>,
}

impl TrigInterpolant {
    pub fn new(samples: &[f64]) -> Self {
        let n = samples.len();
        let tau = 2.0 * core::f64::consts::PI;
        let coef = (0..=n / 2)
            .map(|j| {
                let (mut a, mut b) = (0.0, 0.0);
                for (k, &f) in samples.iter().enumerate() {
                    // reduce the phase index to keep arguments small
                    let (s, c) = libm::sincos(tau * ((j * k) % n) as f64 / n as f64);
                    a += f * c;
                    b += f * s;
                }
                // Nyquist term of even n carries no sine part and half weight
                let w = if j == 0 || (n % 2 == 0 && j == n / 2) { 1.0 } else { 2.0 };
                (w * a / n as f64, w * b / n as f64)
            })
            .collect();
        TrigInterpolant { n, coef }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let tau = 2.0 * core::f64::consts::PI;
        let x = x - libm::floor(x);
        let mut v = 0.0;
        for (j, &(a, b)) in self.coef.iter().enumerate() {
            let (s, c) = libm::sincos(tau * j as f64 * x);
            v += a * c;
            if !(self.n % 2 == 0 && j == self.n / 2) {
                v += b * s;
            }
        }
        v
    }
}

/// Solution of `u_t + u_x = 0` with periodic boundary: `u0((x - t) mod 1)`, with
/// `u0` given by samples at `k/n`, evaluated back on the same grid.
pub fn advection_solve(u0: &[f64], t: f64) -> Vec<f64> {
    let n = u0.len();
    let f = TrigInterpolant::new(u0);
    (0..n).map(|k| f.eval(k as f64 / n as f64 - t)).collect()
}
