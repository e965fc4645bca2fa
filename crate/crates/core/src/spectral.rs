//! Dominant-frequency detection.
//!
//! Each line's power spectrum `F_k(i) = |X_k(i)|²` (unnormalised DFT, no
//! window, bins `0..=W/2`) is summed over all lines into the global spectrum
//! `Fg`. A bin is dominant when `Fg(i)` exceeds `k_dom` times the mean of the
//! non-DC bins.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

pub const DEFAULT_DOMINANCE_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominantFrequency {
    pub bin: usize,
    /// Cycles per pixel, i.e. a fraction of the sampling frequency.
    pub freq_fraction: f64,
    pub power_ratio_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Samples per analysed line; bin `i` sits at `i / line_length` of fs.
    pub line_length: usize,
    pub global_power: Vec<f64>,
    pub mean_power: f64,
    pub dominant: Vec<DominantFrequency>,
    pub dominance_factor: f64,
}

impl SpectrumReport {
    /// CSV `bin,freq_fraction,power` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin,freq_fraction,power\n");
        for (bin, power) in self.global_power.iter().enumerate() {
            let frac = bin as f64 / self.line_length as f64;
            out.push_str(&format!("{bin},{frac},{power}\n"));
        }
        out
    }

    pub fn render_dominant(&self) -> String {
        render_dominant(&self.dominant, self.line_length)
    }
}

/// Power spectrum of lines of one fixed length, reusing a single FFT plan.
pub struct LineSpectrum {
    fft: Arc<dyn Fft<f64>>,
    len: usize,
}

impl LineSpectrum {
    pub fn new(len: usize) -> Result<Self> {
        if len < 4 {
            return Err(Error::LineTooShort(len));
        }
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(len),
            len,
        })
    }

    pub fn power<T: Copy + Into<f64>>(&self, line: &[T]) -> Vec<f64> {
        assert_eq!(line.len(), self.len, "line length differs from plan");
        let mut buf: Vec<Complex<f64>> =
            line.iter().map(|&x| Complex::new(x.into(), 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..=self.len / 2].iter().map(Complex::norm_sqr).collect()
    }
}

pub fn line_power_spectrum<T: Copy + Into<f64>>(line: &[T]) -> Result<Vec<f64>> {
    Ok(LineSpectrum::new(line.len())?.power(line))
}

/// `Fg(i)`: per-line power spectra summed in line order.
pub fn global_spectrum(frame: &Frame) -> Result<Vec<f64>> {
    let spectrum = LineSpectrum::new(frame.width())?;
    let mut global = vec![0.0; frame.width() / 2 + 1];
    for line in frame.lines() {
        for (acc, p) in global.iter_mut().zip(spectrum.power(line)) {
            *acc += p;
        }
    }
    Ok(global)
}

/// Mean of `Fg` over bins `1..=W/2`; DC is excluded.
pub fn spectrum_mean(global_power: &[f64]) -> f64 {
    let ac = &global_power[1.min(global_power.len())..];
    if ac.is_empty() {
        return 0.0;
    }
    ac.iter().sum::<f64>() / ac.len() as f64
}

pub fn dominant_frequencies(
    global_power: &[f64],
    line_length: usize,
    k_dom: f64,
) -> Result<Vec<DominantFrequency>> {
    if !(k_dom > 1.0 && k_dom.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dominance factor {k_dom} must exceed 1"
        )));
    }
    let threshold = k_dom * spectrum_mean(global_power);
    let bins: Vec<usize> = (1..global_power.len())
        .filter(|&i| global_power[i] > threshold)
        .collect();
    let strongest = bins.iter().map(|&i| global_power[i]).fold(0.0, f64::max);
    Ok(bins
        .into_iter()
        .map(|bin| DominantFrequency {
            bin,
            freq_fraction: bin as f64 / line_length as f64,
            power_ratio_percent: 100.0 * global_power[bin] / strongest,
        })
        .collect())
}

pub fn spectral_analysis(frame: &Frame, k_dom: f64) -> Result<SpectrumReport> {
    let global_power = global_spectrum(frame)?;
    let dominant = dominant_frequencies(&global_power, frame.width(), k_dom)?;
    Ok(SpectrumReport {
        line_length: frame.width(),
        mean_power: spectrum_mean(&global_power),
        global_power,
        dominant,
        dominance_factor: k_dom,
    })
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `bin / line_length` as a reduced multiple of fs: `fs/8`, `3fs/8`, `fs`.
pub fn format_fraction_of_fs(bin: usize, line_length: usize) -> String {
    let g = gcd(bin, line_length).max(1);
    let (num, den) = (bin / g, line_length / g);
    match (num, den) {
        (0, _) => "0".to_string(),
        (1, 1) => "fs".to_string(),
        (n, 1) => format!("{n}fs"),
        (1, d) => format!("fs/{d}"),
        (n, d) => format!("{n}fs/{d}"),
    }
}

fn format_percent(p: f64) -> String {
    let s = format!("{p:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// Space-separated `fs/8-75.5%` entries, or `-` when nothing is dominant.
pub fn render_dominant(dominant: &[DominantFrequency], line_length: usize) -> String {
    if dominant.is_empty() {
        return "-".to_string();
    }
    dominant
        .iter()
        .map(|d| {
            format!(
                "{}-{}%",
                format_fraction_of_fs(d.bin, line_length),
                format_percent(d.power_ratio_percent)
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}
