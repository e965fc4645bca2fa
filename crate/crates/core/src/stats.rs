//! Internal-noise figures and ADC code analysis.
//!
//! Noise statistics are computed in exact integer arithmetic: with
//! `S = Σe`, `n` pixels and `M = S / n`, every deviation is `(n·e − S) / n`,
//! so the absolute, squared and maximum deviations are accumulated as
//! integers and divided once at the end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// `M`, mean grey level.
    pub mean_level: f64,
    /// `Na`, mean absolute deviation from `M`.
    pub abs_mean_noise: f64,
    /// `Nmax`, largest absolute deviation from `M`.
    pub max_noise: f64,
    /// `Nms`, root of the sample mean-square deviation.
    pub rms_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bit_depth: u8,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn nonzero_codes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// CSV lines `code,count` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("code,count\n");
        for (code, count) in self.counts.iter().enumerate() {
            out.push_str(&format!("{code},{count}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakWidth {
    pub peak_code: u16,
    /// `2w + 1` codes.
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcReport {
    pub missing_codes: Vec<u16>,
    pub effective_resolution_bits: f64,
    pub histogram: Histogram,
}

fn sum_and_square_sum(frame: &Frame) -> (u128, u128) {
    frame.samples().iter().fold((0u128, 0u128), |(s, q), &e| {
        let e = u128::from(e);
        (s + e, q + e * e)
    })
}

pub fn mean_level(frame: &Frame) -> f64 {
    let (sum, _) = sum_and_square_sum(frame);
    sum as f64 / frame.pixel_count() as f64
}

pub fn noise_metrics(frame: &Frame) -> NoiseReport {
    let n = frame.pixel_count() as u128;
    let (sum, square_sum) = sum_and_square_sum(frame);
    let (abs_scaled, max_scaled) = frame.samples().iter().fold((0u128, 0u128), |(a, m), &e| {
        let d = (n * u128::from(e)).abs_diff(sum);
        (a + d, m.max(d))
    });
    let nf = n as f64;
    // Σ(e − M)² = (n·Σe² − S²) / n
    let squared_scaled = n * square_sum - sum * sum;
    NoiseReport {
        mean_level: sum as f64 / nf,
        abs_mean_noise: abs_scaled as f64 / (nf * nf),
        max_noise: max_scaled as f64 / nf,
        rms_noise: (squared_scaled as f64 / (nf * nf)).sqrt(),
    }
}

pub fn build_histogram(frame: &Frame) -> Histogram {
    let mut counts = vec![0u64; usize::from(frame.max_code()) + 1];
    for &s in frame.samples() {
        counts[usize::from(s)] += 1;
    }
    Histogram {
        bit_depth: frame.bit_depth(),
        counts,
    }
}

/// Highest code (lowest on ties) and the narrowest symmetric interval around
/// it holding at least `mass_fraction` of all samples.
pub fn histogram_peak_width(histogram: &Histogram, mass_fraction: f64) -> Result<PeakWidth> {
    if !(mass_fraction > 0.0 && mass_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mass fraction {mass_fraction} outside (0, 1)"
        )));
    }
    let total = histogram.total();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let counts = &histogram.counts;
    let peak = counts
        .iter()
        .enumerate()
        .fold(0, |best, (c, &n)| if n > counts[best] { c } else { best });
    let target = mass_fraction * total as f64;
    let mut mass = counts[peak];
    let mut w = 0;
    while (mass as f64) < target {
        w += 1;
        if let Some(lo) = peak.checked_sub(w) {
            mass += counts[lo];
        }
        if let Some(&hi) = counts.get(peak + w) {
            mass += hi;
        }
    }
    Ok(PeakWidth {
        peak_code: peak as u16,
        width: 2 * w as u32 + 1,
    })
}

fn require_nondegenerate(histogram: &Histogram) -> Result<()> {
    let nonzero = histogram.nonzero_codes();
    if nonzero < 3 {
        return Err(Error::DegenerateHistogram { nonzero });
    }
    Ok(())
}

fn check_rel_threshold(rel_threshold: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rel_threshold) {
        return Err(Error::InvalidParameter(format!(
            "relative threshold {rel_threshold} outside [0, 1)"
        )));
    }
    Ok(())
}

/// Codes whose count is zero or falls below `rel_threshold` times the mean of
/// their neighbours' counts (a single neighbour at either end of the range).
pub fn find_missing_codes(histogram: &Histogram, rel_threshold: f64) -> Result<Vec<u16>> {
    check_rel_threshold(rel_threshold)?;
    require_nondegenerate(histogram)?;
    let counts = &histogram.counts;
    let last = counts.len() - 1;
    let missing = (0..=last)
        .filter(|&c| {
            let count = counts[c] as f64;
            if counts[c] == 0 {
                return true;
            }
            let reference = match c {
                0 => counts[1] as f64,
                c if c == last => counts[last - 1] as f64,
                c => (counts[c - 1] + counts[c + 1]) as f64 / 2.0,
            };
            count < rel_threshold * reference
        })
        .map(|c| c as u16)
        .collect();
    Ok(missing)
}

/// `log2` of the number of codes reaching `rel_threshold` of the count an
/// ideal ramp would give every code.
pub fn effective_resolution(histogram: &Histogram, rel_threshold: f64) -> Result<f64> {
    check_rel_threshold(rel_threshold)?;
    require_nondegenerate(histogram)?;
    let ideal = histogram.total() as f64 / histogram.counts.len() as f64;
    let live = histogram
        .counts
        .iter()
        .filter(|&&c| c as f64 >= rel_threshold * ideal)
        .count();
    Ok((live as f64).log2())
}

pub fn adc_analysis(frame: &Frame, rel_threshold: f64) -> Result<AdcReport> {
    let histogram = build_histogram(frame);
    Ok(AdcReport {
        missing_codes: find_missing_codes(&histogram, rel_threshold)?,
        effective_resolution_bits: effective_resolution(&histogram, rel_threshold)?,
        histogram,
    })
}
