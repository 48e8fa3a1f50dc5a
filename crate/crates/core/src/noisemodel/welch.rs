//! Welch's overlapped-segment PSD estimator with a Hann window.
//!
//! Densities are scaled to the angular-frequency convention
//! `S(ω) = ∫ R(τ) e^{−iωτ} dτ`, reported on the nonnegative grid
//! `ω_k = 2πk / (N dt)`, `k = 0..=N/2`. White noise of variance σ² sampled
//! every `dt` therefore sits flat at σ²·dt.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub segments: usize,
}

pub fn welch_psd(signal: &[f64], dt: f64, segment_len: usize, overlap_frac: f64) -> Result<PsdEstimate> {
    if segment_len < 2 || segment_len > signal.len() {
        return Err(Error::InvalidSegmentation(format!(
            "segment of {segment_len} samples for a signal of {}",
            signal.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::InvalidSegmentation(format!(
            "overlap fraction {overlap_frac} outside [0, 1)"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidSegmentation(format!("sample interval {dt}")));
    }
    let n = segment_len;
    let hop = ((n as f64) * (1.0 - overlap_frac)).round().max(1.0) as usize;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut start = 0;
    while start + n <= signal.len() {
        let seg = &signal[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = dt / (wss * segments as f64);
    let density = acc.into_iter().map(|a| a * scale).collect();
    let omega = (0..bins)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / (n as f64 * dt))
        .collect();
    Ok(PsdEstimate {
        omega,
        density,
        segments,
    })
}
