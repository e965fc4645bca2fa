//! Test waveforms and calibrated defect injection.
//!
//! Three waveforms cover every measurement: a uniform grey field (noise,
//! black level, interference), a left-to-right linear ramp touching every
//! code (ADC), and repeating vertical bars (edges and synchronisation).
//!
//! [`apply_defects`] degrades a frame with known, seeded impairments so that
//! each analyzer can be checked against the magnitude that was injected.
//! Stages run in a fixed order: additive noise, line jitter, per-line
//! black-level offset, level decay, interference, quantisation, missing
//! codes. All randomness comes from a ChaCha8 stream seeded with
//! [`DefectModel::seed`].

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::frame::{max_code, Frame, MAX_BIT_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternKind {
    Uniform {
        level: u16,
    },
    Ramp {
        start_level: u16,
        end_level: u16,
    },
    Bars {
        low_level: u16,
        high_level: u16,
        /// Bar period in pixels.
        period: usize,
        /// Fraction of each period held at `high_level`.
        duty: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternSpec {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub kind: PatternKind,
}

impl PatternSpec {
    pub fn uniform(width: usize, height: usize, level: u16) -> Self {
        Self {
            width,
            height,
            bit_depth: 8,
            kind: PatternKind::Uniform { level },
        }
    }

    pub fn ramp(width: usize, height: usize, start_level: u16, end_level: u16) -> Self {
        Self {
            width,
            height,
            bit_depth: 8,
            kind: PatternKind::Ramp {
                start_level,
                end_level,
            },
        }
    }

    pub fn bars(
        width: usize,
        height: usize,
        low_level: u16,
        high_level: u16,
        period: usize,
        duty: f64,
    ) -> Self {
        Self {
            width,
            height,
            bit_depth: 8,
            kind: PatternKind::Bars {
                low_level,
                high_level,
                period,
                duty,
            },
        }
    }

    pub fn with_bit_depth(mut self, bit_depth: u8) -> Self {
        self.bit_depth = bit_depth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_BIT_DEPTH).contains(&self.bit_depth) {
            return Err(Error::InvalidSpec(format!(
                "bit depth {} outside 1..=16",
                self.bit_depth
            )));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::InvalidSpec(format!(
                "size {}x{} below 2x2",
                self.width, self.height
            )));
        }
        let max = max_code(self.bit_depth);
        let check = |name: &str, v: u16| {
            if v > max {
                Err(Error::InvalidSpec(format!("{name} {v} exceeds code {max}")))
            } else {
                Ok(())
            }
        };
        match self.kind {
            PatternKind::Uniform { level } => check("level", level),
            PatternKind::Ramp {
                start_level,
                end_level,
            } => {
                check("start level", start_level)?;
                check("end level", end_level)
            }
            PatternKind::Bars {
                low_level,
                high_level,
                period,
                duty,
            } => {
                check("low level", low_level)?;
                check("high level", high_level)?;
                if period < 2 {
                    return Err(Error::InvalidSpec(format!("period {period} < 2")));
                }
                if !(duty > 0.0 && duty < 1.0) {
                    return Err(Error::InvalidSpec(format!("duty {duty} outside (0, 1)")));
                }
                let high = bar_high_count(period, duty);
                if high == 0 || high == period {
                    return Err(Error::InvalidSpec(format!(
                        "duty {duty} leaves no transition within a period of {period}"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn bar_high_count(period: usize, duty: f64) -> usize {
    (duty * period as f64).round() as usize
}

pub fn generate_pattern(spec: &PatternSpec) -> Result<Frame> {
    spec.validate()?;
    let PatternSpec {
        width,
        height,
        bit_depth,
        kind,
    } = *spec;
    match kind {
        PatternKind::Uniform { level } => Frame::filled(width, height, bit_depth, level),
        PatternKind::Ramp {
            start_level,
            end_level,
        } => {
            let start = f64::from(start_level);
            let span = f64::from(end_level) - start;
            let row: Vec<u16> = (0..width)
                .map(|j| (start + span * j as f64 / (width - 1) as f64).round() as u16)
                .collect();
            Frame::from_fn(width, height, bit_depth, |_, j| row[j])
        }
        PatternKind::Bars {
            low_level,
            high_level,
            period,
            duty,
        } => {
            let high = bar_high_count(period, duty);
            Frame::from_fn(width, height, bit_depth, |_, j| {
                if j % period < high {
                    high_level
                } else {
                    low_level
                }
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDistribution {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditiveNoise {
    pub distribution: NoiseDistribution,
    /// Standard deviation (gaussian) or half-width (uniform), in LSB.
    pub magnitude: f64,
}

/// How the impaired analogue-valued frame is turned back into codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quantizer {
    /// `floor(x + u)` with `u ~ U[0, 1)`: unbiased, so sub-LSB structure
    /// (a 1 LSB decay across a line, say) survives in the averages the way
    /// it does on a real converter with input noise.
    #[default]
    Dithered,
    /// Round half away from zero.
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DefectModel {
    pub additive_noise: Option<AdditiveNoise>,
    /// Maximum whole-pixel horizontal shift `J`; each line moves by a shift
    /// drawn uniformly from `-J..=J`.
    pub line_jitter: Option<usize>,
    /// Standard deviation of a constant offset added to each whole line.
    pub black_level_offset: Option<f64>,
    /// Level change accumulated across one full line, in LSB.
    pub level_decay: Option<f64>,
    pub interference: Option<Interference>,
    pub missing_codes: BTreeSet<u16>,
    pub quantizer: Quantizer,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    /// Cycles per pixel, in `(0, 0.5]`.
    pub bin_fraction: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl DefectModel {
    pub fn is_empty(&self) -> bool {
        self.additive_noise.is_none()
            && self.line_jitter.is_none()
            && self.black_level_offset.is_none()
            && self.level_decay.is_none()
            && self.interference.is_none()
            && self.missing_codes.is_empty()
    }

    fn validate(&self, frame: &Frame) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if let Some(n) = self.additive_noise {
            if !(n.magnitude.is_finite() && n.magnitude >= 0.0) {
                return bad(format!("noise magnitude {}", n.magnitude));
            }
        }
        if let Some(j) = self.line_jitter {
            if j >= frame.width() {
                return bad(format!(
                    "jitter {j} not below frame width {}",
                    frame.width()
                ));
            }
        }
        if let Some(s) = self.black_level_offset {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("per-line offset sigma {s}"));
            }
        }
        if let Some(d) = self.level_decay {
            if !d.is_finite() {
                return bad(format!("decay slope {d}"));
            }
        }
        if let Some(i) = self.interference {
            if !(i.bin_fraction > 0.0 && i.bin_fraction <= 0.5) {
                return bad(format!(
                    "interference frequency {} outside (0, 0.5]",
                    i.bin_fraction
                ));
            }
            if !(i.amplitude.is_finite() && i.phase.is_finite()) {
                return bad("interference amplitude/phase must be finite".into());
            }
        }
        let max = frame.max_code();
        if let Some(&c) = self.missing_codes.iter().find(|&&c| c > max) {
            return bad(format!("missing code {c} exceeds {max}"));
        }
        if self.missing_codes.len() > usize::from(max) {
            return bad("every code cannot be missing".into());
        }
        Ok(())
    }
}

pub fn apply_defects(frame: &Frame, model: &DefectModel) -> Result<Frame> {
    model.validate(frame)?;
    if model.is_empty() {
        return Ok(frame.clone());
    }
    let (width, height) = (frame.width(), frame.height());
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut values: Vec<f64> = frame.samples().iter().map(|&s| f64::from(s)).collect();

    if let Some(noise) = model.additive_noise {
        match noise.distribution {
            NoiseDistribution::Gaussian => {
                let normal = Normal::new(0.0, noise.magnitude)
                    .map_err(|e| Error::InvalidModel(e.to_string()))?;
                values
                    .iter_mut()
                    .for_each(|v| *v += normal.sample(&mut rng));
            }
            NoiseDistribution::Uniform => {
                let h = noise.magnitude;
                values
                    .iter_mut()
                    .for_each(|v| *v += h * (2.0 * rng.random::<f64>() - 1.0));
            }
        }
    }

    if let Some(amplitude) = model.line_jitter {
        let amplitude = amplitude as i64;
        let mut shifted = vec![0.0; width];
        for line in values.chunks_exact_mut(width) {
            let d = rng.random_range(-amplitude..=amplitude);
            shift_line(line, d, &mut shifted);
            line.copy_from_slice(&shifted);
        }
    }

    if let Some(sigma) = model.black_level_offset {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidModel(e.to_string()))?;
        for line in values.chunks_exact_mut(width) {
            let offset = normal.sample(&mut rng);
            line.iter_mut().for_each(|v| *v += offset);
        }
    }

    if let Some(slope) = model.level_decay {
        for line in values.chunks_exact_mut(width) {
            for (j, v) in line.iter_mut().enumerate() {
                *v += slope * j as f64 / (width - 1) as f64;
            }
        }
    }

    if let Some(tone) = model.interference {
        let wave: Vec<f64> = (0..width)
            .map(|j| tone.amplitude * (2.0 * PI * tone.bin_fraction * j as f64 + tone.phase).cos())
            .collect();
        for line in values.chunks_exact_mut(width) {
            line.iter_mut().zip(&wave).for_each(|(v, w)| *v += w);
        }
    }

    let max = f64::from(frame.max_code());
    let mut samples: Vec<u16> = values
        .into_iter()
        .map(|v| {
            let q = match model.quantizer {
                Quantizer::Dithered => (v + rng.random::<f64>()).floor(),
                Quantizer::Nearest => v.round(),
            };
            q.clamp(0.0, max) as u16
        })
        .collect();

    if !model.missing_codes.is_empty() {
        let map = missing_code_map(&model.missing_codes, frame.max_code());
        samples.iter_mut().for_each(|s| *s = map[usize::from(*s)]);
    }

    debug_assert_eq!(samples.len(), width * height);
    Frame::new(width, height, frame.bit_depth(), samples)
}

/// Moves `line` right by `d` pixels into `out`; vacated pixels take the
/// nearest original edge value.
fn shift_line(line: &[f64], d: i64, out: &mut [f64]) {
    let w = line.len() as i64;
    for (j, o) in out.iter_mut().enumerate() {
        let src = (j as i64 - d).clamp(0, w - 1);
        *o = line[src as usize];
    }
}

/// Transfer function sending every listed code to the nearest unlisted code
/// below it (or above, when none exists below).
fn missing_code_map(missing: &BTreeSet<u16>, max: u16) -> Vec<u16> {
    (0..=max)
        .map(|c| {
            if !missing.contains(&c) {
                return c;
            }
            (0..c)
                .rev()
                .find(|x| !missing.contains(x))
                .or_else(|| (c + 1..=max).find(|x| !missing.contains(x)))
                .expect("at least one code survives")
        })
        .collect()
}
