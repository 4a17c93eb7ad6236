//! Dominant frequencies of sampled signals, used to pick trunk Fourier features.

use cqdon_core::data::{OperatorDataset, Split};
use cqdon_core::Error;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{HarnessError, Result};

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()).collect()
}

/// The `k` strongest non-DC spectral peaks of the averaged Hann-windowed
/// magnitude spectrum, strongest first, in cycles per unit of `dt`.
///
/// Each signal is mean-centred before windowing so a constant offset cannot
/// leak into the low bins through the window's own spectrum.
pub fn dominant_frequencies(signals: &[Vec<f64>], dt: f64, k: usize) -> std::result::Result<Vec<f64>, Error> {
    let Some(first) = signals.first() else {
        return Err(Error::Empty("signals"));
    };
    let n = first.len();
    if signals.iter().any(|s| s.len() != n) {
        return Err(Error::ShapeMismatch);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("sample spacing {dt} must be positive")));
    }
    let w = hann(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let half = n / 2;
    let mut mag = vec![0.0; half + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for s in signals {
        let mean = s.iter().sum::<f64>() / n as f64;
        for ((b, &v), &wk) in buf.iter_mut().zip(s).zip(&w) {
            *b = Complex::new((v - mean) * wk, 0.0);
        }
        fft.process(&mut buf);
        for (m, b) in mag.iter_mut().zip(&buf) {
            *m += b.norm() / signals.len() as f64;
        }
    }
    let scale = signals.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())) * n as f64;
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut bins: Vec<usize> = (1..=half).filter(|&b| mag[b] > floor).collect();
    if bins.len() < k {
        return Err(Error::InsufficientSpectrum { available: bins.len(), requested: k });
    }
    // Local maxima rank ahead of the rest: a Hann main lobe puts half the peak
    // height into each neighbouring bin, which would otherwise crowd out a
    // weaker tone. The sort is stable, so exact ties keep the lower bin first.
    let peak = |b: usize| mag[b] >= mag[b - 1] && (b == half || mag[b] >= mag[b + 1]);
    bins.sort_by(|&a, &b| peak(b).cmp(&peak(a)).then(mag[b].total_cmp(&mag[a])));
    Ok(bins[..k].iter().map(|&b| b as f64 / (n as f64 * dt)).collect())
}

/// Dominant frequencies of the training targets, read as signals over the
/// query coordinate. Needs scalar queries on a uniform grid shared by every
/// training scenario.
pub fn target_frequencies(ds: &OperatorDataset, k: usize) -> Result<Vec<f64>> {
    if ds.query_dim != 1 {
        return Err(HarnessError::Config("Fourier features need scalar queries".into()));
    }
    let train: Vec<_> = ds.scenarios.iter().filter(|s| s.split == Split::Train).collect();
    let Some(first) = train.first() else {
        return Err(HarnessError::Numerics(Error::Empty("training scenarios")));
    };
    if train.iter().any(|s| s.queries != first.queries) {
        return Err(HarnessError::Config("Fourier features need the same query grid in every training scenario".into()));
    }
    let ys: Vec<f64> = first.queries.iter().map(|&q| ds.query(q as usize)[0]).collect();
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    if ys.len() < 2 {
        return Err(HarnessError::Config("Fourier features need at least two query points".into()));
    }
    let dt = (ys[order[ys.len() - 1]] - ys[order[0]]) / (ys.len() - 1) as f64;
    let uniform = order.windows(2).all(|p| ((ys[p[1]] - ys[p[0]]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
    if !uniform {
        return Err(HarnessError::Config("Fourier features need a uniform query grid".into()));
    }
    let signals: Vec<Vec<f64>> = train.iter().map(|s| order.iter().map(|&j| s.targets[j]).collect()).collect();
    Ok(dominant_frequencies(&signals, dt, k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, dt: f64, parts: &[(f64, f64)]) -> Vec<f64> {
        (0..n).map(|i| parts.iter().map(|(a, f)| a * (2.0 * PI * f * i as f64 * dt).sin()).sum()).collect()
    }

    #[test]
    fn single_tone_is_found() {
        let s = tone(128, 1.0 / 128.0, &[(1.0, 3.0)]);
        assert_eq!(dominant_frequencies(&[s], 1.0 / 128.0, 1).unwrap(), vec![3.0]);
    }

    #[test]
    fn two_tones_ordered_by_amplitude() {
        let s = tone(256, 1.0 / 256.0, &[(1.0, 5.0), (2.0, 11.0)]);
        assert_eq!(dominant_frequencies(&[s], 1.0 / 256.0, 2).unwrap(), vec![11.0, 5.0]);
    }

    #[test]
    fn peaks_before_leakage_then_remaining_bins() {
        let s = tone(64, 1.0 / 64.0, &[(1.0, 8.0)]);
        // one peak; the next picks are its two leakage neighbours, lower first
        assert_eq!(dominant_frequencies(&[s], 1.0 / 64.0, 3).unwrap(), vec![8.0, 7.0, 9.0]);
    }

    #[test]
    fn constant_signal_has_no_dominant_bin() {
        let err = dominant_frequencies(&[vec![2.5; 64]], 0.1, 1).unwrap_err();
        assert_eq!(err, Error::InsufficientSpectrum { available: 0, requested: 1 });
    }

    #[test]
    fn averaging_over_signals() {
        // the stronger tone on average wins even if absent from one signal
        let a = tone(64, 1.0 / 64.0, &[(1.0, 4.0)]);
        let b = tone(64, 1.0 / 64.0, &[(1.0, 4.0), (0.5, 9.0)]);
        assert_eq!(dominant_frequencies(&[a, b], 1.0 / 64.0, 2).unwrap(), vec![4.0, 9.0]);
    }

    #[test]
    fn hann_window_shape() {
        let w = hann(5);
        assert!((w[0]).abs() < 1e-15 && (w[4]).abs() < 1e-15 && (w[2] - 1.0).abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert_eq!(dominant_frequencies(&[vec![0.0; 4], vec![0.0; 5]], 1.0, 1), Err(Error::ShapeMismatch));
    }
}
