//! Single-sided amplitude spectra of steady-state windows.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Hann-windowed single-sided amplitude spectrum, `(frequency [Hz], amplitude)`
/// for bins `0 ..= N/2`.
///
/// Amplitudes are normalized by the window's coherent gain, so a sinusoid
/// centred on a bin reads its own amplitude.
pub fn magnitude_spectrum(series: &[f64], sample_period: f64) -> Vec<(f64, f64)> {
    let n = series.len();
    if n < 2 {
        return Vec::new();
    }
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let coherent: f64 = window.iter().sum();

    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let df = 1.0 / (n as f64 * sample_period);
    (0..=n / 2)
        .map(|k| {
            let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
            let scale = if edge { 1.0 } else { 2.0 };
            (k as f64 * df, scale * buf[k].norm() / coherent)
        })
        .collect()
}

/// Spectrum of the trailing `span` seconds of a uniformly sampled series.
pub fn trailing_spectrum(series: &[f64], sample_period: f64, span: f64) -> Vec<(f64, f64)> {
    let keep = ((span / sample_period).round() as usize).clamp(2.min(series.len()), series.len());
    magnitude_spectrum(&series[series.len() - keep..], sample_period)
}
