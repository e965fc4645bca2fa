//! Analogue front-end checks: black-level restoration stability, black-level
//! decay along a line, block-mean maps and edge rise/fall times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::stats::{build_histogram, mean_level};

pub const DEFAULT_BLOCK_SIZE: usize = 16;

/// Mean grey level of each `block_size × block_size` tile; trailing partial
/// tiles are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMeanMap {
    pub block_size: usize,
    /// `means[m][n]` for block row `m`, block column `n`.
    pub means: Vec<Vec<f64>>,
}

impl BlockMeanMap {
    /// `|M(0,0) − M(last,last)|`, top-left against bottom-right.
    pub fn corner_delta(&self) -> f64 {
        let first = self.means[0][0];
        let last = *self.means.last().and_then(|r| r.last()).unwrap_or(&first);
        (first - last).abs()
    }

    /// One CSV row per block row, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.means {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStability {
    pub line_means: Vec<f64>,
    /// Largest step between the means of adjacent lines.
    pub line_stability_lsb: f64,
    /// Spread of line means as a percentage of full scale.
    pub variation_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTiming {
    pub rise_times: Vec<usize>,
    pub fall_times: Vec<usize>,
    pub low_plateau: u16,
    pub high_plateau: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogReport {
    pub line_means: Vec<f64>,
    pub line_stability_lsb: f64,
    pub variation_percent: f64,
    pub decay_slope_lsb_per_line: f64,
    pub block_map: BlockMeanMap,
    pub corner_delta_lsb: f64,
    /// Present only when a bar-pattern capture was analysed.
    pub edge_timing: Option<EdgeTiming>,
}

pub fn block_means(frame: &Frame, block_size: usize) -> Result<BlockMeanMap> {
    if block_size == 0 {
        return Err(Error::InvalidParameter("block size 0".into()));
    }
    let (rows, cols) = (frame.height() / block_size, frame.width() / block_size);
    if rows == 0 || cols == 0 {
        return Err(Error::FrameSmallerThanBlock {
            width: frame.width(),
            height: frame.height(),
            block_size,
        });
    }
    let area = (block_size * block_size) as f64;
    let means = (0..rows)
        .map(|m| {
            (0..cols)
                .map(|n| {
                    let sum: u64 = (0..block_size)
                        .flat_map(|i| {
                            let line = frame.line(m * block_size + i);
                            &line[n * block_size..(n + 1) * block_size]
                        })
                        .map(|&s| u64::from(s))
                        .sum();
                    sum as f64 / area
                })
                .collect()
        })
        .collect();
    Ok(BlockMeanMap { block_size, means })
}

fn line_means(frame: &Frame) -> Vec<f64> {
    let w = frame.width() as f64;
    frame
        .lines()
        .map(|l| l.iter().map(|&s| u64::from(s)).sum::<u64>() as f64 / w)
        .collect()
}

pub fn level_stability(frame: &Frame) -> LevelStability {
    let line_means = line_means(frame);
    let line_stability_lsb = line_means
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max);
    let (lo, hi) = line_means
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| {
            (lo.min(m), hi.max(m))
        });
    let variation_percent = (hi - lo) / f64::from(frame.max_code()) * 100.0;
    LevelStability {
        line_means,
        line_stability_lsb,
        variation_percent,
    }
}

/// Least-squares slope of the column means, scaled to the change across one
/// full line (LSB per line).
pub fn level_decay(frame: &Frame) -> f64 {
    let (w, h) = (frame.width(), frame.height());
    let mut column_sums = vec![0u64; w];
    for line in frame.lines() {
        for (acc, &s) in column_sums.iter_mut().zip(line) {
            *acc += u64::from(s);
        }
    }
    let column_means: Vec<f64> = column_sums.iter().map(|&s| s as f64 / h as f64).collect();
    let x_mean = (w - 1) as f64 / 2.0;
    let y_mean = column_means.iter().sum::<f64>() / w as f64;
    let (sxy, sxx) = column_means
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(sxy, sxx), (j, &y)| {
            let dx = j as f64 - x_mean;
            (sxy + dx * (y - y_mean), sxx + dx * dx)
        });
    sxy / sxx * (w - 1) as f64
}

/// Low and high plateau codes of a two-level capture: the most frequent
/// code below the frame mean and the most frequent code above it (lower
/// code on ties).
pub fn plateaus(frame: &Frame) -> Result<(u16, u16)> {
    let mean = mean_level(frame);
    let hist = build_histogram(frame);
    let mode = |range: &mut dyn Iterator<Item = usize>| {
        range
            .filter(|&c| hist.counts[c] > 0)
            .fold(None, |best: Option<usize>, c| match best {
                Some(b) if hist.counts[b] >= hist.counts[c] => Some(b),
                _ => Some(c),
            })
    };
    let below = mode(&mut (0..hist.counts.len()).filter(|&c| (c as f64) < mean));
    let above = mode(&mut (0..hist.counts.len()).filter(|&c| (c as f64) > mean));
    match (below, above) {
        (Some(lo), Some(hi)) => Ok((lo as u16, hi as u16)),
        _ => Err(Error::NotBimodal(format!(
            "no populated codes on both sides of the mean {mean:.3}"
        ))),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Low,
    High,
}

pub fn edge_timing(frame: &Frame, low_frac: f64, high_frac: f64) -> Result<EdgeTiming> {
    if !(0.0 < low_frac && low_frac < high_frac && high_frac < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold fractions {low_frac}/{high_frac} must satisfy 0 < low < high < 1"
        )));
    }
    let (low_plateau, high_plateau) = plateaus(frame)?;
    let amplitude = f64::from(high_plateau - low_plateau);
    let low_thr = f64::from(low_plateau) + low_frac * amplitude;
    let high_thr = f64::from(low_plateau) + high_frac * amplitude;

    let mut rise_times = Vec::new();
    let mut fall_times = Vec::new();
    for line in frame.lines() {
        let mut side = None;
        let mut between = 0;
        for &s in line {
            let v = f64::from(s);
            let now = if v <= low_thr {
                Side::Low
            } else if v >= high_thr {
                Side::High
            } else {
                between += 1;
                continue;
            };
            match (side, now) {
                (Some(Side::Low), Side::High) => rise_times.push(between),
                (Some(Side::High), Side::Low) => fall_times.push(between),
                _ => {}
            }
            side = Some(now);
            between = 0;
        }
    }
    Ok(EdgeTiming {
        rise_times,
        fall_times,
        low_plateau,
        high_plateau,
    })
}

/// Stability, decay and block-map figures for a uniform-grey capture.
pub fn analog_analysis(frame: &Frame, block_size: usize) -> Result<AnalogReport> {
    let block_map = block_means(frame, block_size)?;
    let LevelStability {
        line_means,
        line_stability_lsb,
        variation_percent,
    } = level_stability(frame);
    Ok(AnalogReport {
        line_means,
        line_stability_lsb,
        variation_percent,
        decay_slope_lsb_per_line: level_decay(frame),
        corner_delta_lsb: block_map.corner_delta(),
        block_map,
        edge_timing: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::{
        apply_defects, generate_pattern, AdditiveNoise, DefectModel, NoiseDistribution, PatternSpec,
    };

    #[test]
    fn block_means_examples() {
        let map = block_means(&Frame::filled(32, 32, 8, 90).unwrap(), 16).unwrap();
        assert_eq!(map.means, vec![vec![90.0; 2]; 2]);
        assert_eq!(map.corner_delta(), 0.0);

        let f = Frame::from_fn(32, 32, 8, |_, j| (j / 16) as u16).unwrap();
        assert_eq!(block_means(&f, 16).unwrap().means, vec![vec![0.0, 1.0]; 2]);

        // final row and column would change the map if they were used
        let f = Frame::from_fn(33, 33, 8, |i, j| if i == 32 || j == 32 { 255 } else { 7 }).unwrap();
        assert_eq!(block_means(&f, 16).unwrap().means, vec![vec![7.0; 2]; 2]);

        assert!(matches!(
            block_means(&Frame::filled(15, 40, 8, 0).unwrap(), 16),
            Err(Error::FrameSmallerThanBlock { .. })
        ));
    }

    #[test]
    fn stability_examples() {
        let s = level_stability(&Frame::filled(8, 8, 8, 40).unwrap());
        assert_eq!((s.line_stability_lsb, s.variation_percent), (0.0, 0.0));

        let f = Frame::from_fn(4, 2, 8, |i, _| 10 + i as u16).unwrap();
        let s = level_stability(&f);
        assert_eq!(s.line_means, vec![10.0, 11.0]);
        assert_eq!(s.line_stability_lsb, 1.0);
        assert!((s.variation_percent - 100.0 / 255.0).abs() < 1e-12);
        assert!((s.variation_percent - 0.3922).abs() < 1e-4);
    }

    #[test]
    fn per_line_offsets_match_independent_line_means() {
        let base = generate_pattern(&PatternSpec::uniform(128, 128, 100)).unwrap();
        let model = DefectModel {
            black_level_offset: Some(0.5),
            seed: 3,
            ..Default::default()
        };
        let f = apply_defects(&base, &model).unwrap();
        let s = level_stability(&f);
        for (i, &m) in s.line_means.iter().enumerate() {
            let mut total = 0.0;
            for j in 0..f.width() {
                total += f64::from(f.get(i, j));
            }
            assert!((m - total / f.width() as f64).abs() < 1e-12);
        }
        assert!(s.line_stability_lsb > 0.0 && s.line_stability_lsb <= 3.0);
    }

    #[test]
    fn decay_uniform_is_zero() {
        assert_eq!(level_decay(&Frame::filled(16, 16, 8, 3).unwrap()), 0.0);
    }

    #[test]
    fn decay_on_exact_ramp() {
        // columns fall 2 LSB per column, 8 columns: 14 LSB per line
        let f = Frame::from_fn(8, 4, 8, |_, j| 100 - 2 * j as u16).unwrap();
        assert!((level_decay(&f) + 14.0).abs() < 1e-12);
    }

    #[test]
    fn injected_decay_recovered() {
        let base = generate_pattern(&PatternSpec::uniform(256, 256, 128)).unwrap();
        let model = DefectModel {
            level_decay: Some(-1.0),
            seed: 1,
            ..Default::default()
        };
        let slope = level_decay(&apply_defects(&base, &model).unwrap());
        assert!((slope + 1.0).abs() <= 0.05, "{slope}");

        let model = DefectModel {
            level_decay: Some(-3.0),
            additive_noise: Some(AdditiveNoise {
                distribution: NoiseDistribution::Gaussian,
                magnitude: 1.0,
            }),
            seed: 2,
            ..Default::default()
        };
        let slope = level_decay(&apply_defects(&base, &model).unwrap());
        assert!((slope + 3.0).abs() <= 0.1, "{slope}");
    }

    fn edge_frame(transition: &[u16]) -> Frame {
        let mut line = vec![transition[0]; 10];
        line.extend_from_slice(transition);
        line.extend(std::iter::repeat_n(*transition.last().unwrap(), 10));
        let w = line.len();
        Frame::from_fn(w, 3, 8, |_, j| line[j]).unwrap()
    }

    #[test]
    fn linear_edge_counts_samples_between_thresholds() {
        let t = edge_timing(&edge_frame(&[0, 40, 80, 120, 160, 200]), 0.1, 0.9).unwrap();
        assert_eq!((t.low_plateau, t.high_plateau), (0, 200));
        assert_eq!(t.rise_times, vec![4; 3]);
        assert!(t.fall_times.is_empty());

        let t = edge_timing(&edge_frame(&[200, 160, 120, 80, 40, 0]), 0.1, 0.9).unwrap();
        assert_eq!(t.fall_times, vec![4; 3]);
        assert!(t.rise_times.is_empty());
    }

    #[test]
    fn ideal_step_and_bars_have_zero_times() {
        let t = edge_timing(&edge_frame(&[20, 220]), 0.1, 0.9).unwrap();
        assert_eq!(t.rise_times, vec![0; 3]);

        let bars = generate_pattern(&PatternSpec::bars(128, 8, 20, 220, 32, 0.5)).unwrap();
        let t = edge_timing(&bars, 0.1, 0.9).unwrap();
        assert_eq!(t.rise_times.len(), 8 * 3);
        assert_eq!(t.fall_times.len(), 8 * 4);
        assert!(t.rise_times.iter().chain(&t.fall_times).all(|&x| x == 0));
    }

    #[test]
    fn uniform_frame_is_not_bimodal() {
        assert!(matches!(
            edge_timing(&Frame::filled(8, 8, 8, 5).unwrap(), 0.1, 0.9),
            Err(Error::NotBimodal(_))
        ));
        assert!(edge_timing(&edge_frame(&[0, 200]), 0.9, 0.1).is_err());
    }

    #[test]
    fn noisy_plateau_excursions_are_not_edges() {
        // 100 crosses the 10% threshold but returns low: no transition
        let line = [0u16, 0, 0, 100, 0, 0, 0, 0, 200, 200, 200, 200];
        let f = Frame::from_fn(line.len(), 2, 8, |_, j| line[j]).unwrap();
        let t = edge_timing(&f, 0.1, 0.9).unwrap();
        assert_eq!(t.rise_times, vec![0, 0]);
    }
}
