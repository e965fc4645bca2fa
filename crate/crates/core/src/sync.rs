//! Synchronisation accuracy from the scatter of bar-edge positions.
//!
//! On a bar capture every line should show its edges at the same columns.
//! Genlock/PLL jitter moves whole lines sideways, so the mean absolute
//! deviation of each edge's column from its mean over all lines, averaged
//! over edges, measures the lock accuracy in points per transition.

use serde::{Deserialize, Serialize};

use crate::analog::plateaus;
use crate::error::{Error, Result};
use crate::frame::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Rising,
    Falling,
}

/// Rectangular grid of transition columns `m_q(k)`: `points[k][q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub q_count: usize,
    pub points: Vec<Vec<f64>>,
    pub polarity: Vec<Polarity>,
}

impl TransitionSet {
    pub fn new(points: Vec<Vec<f64>>, polarity: Vec<Polarity>) -> Result<Self> {
        let q_count = polarity.len();
        if q_count == 0 || points.is_empty() {
            return Err(Error::InvalidParameter("empty transition set".into()));
        }
        let bad: Vec<(usize, usize)> = points
            .iter()
            .enumerate()
            .filter(|(_, row)| row.len() != q_count)
            .map(|(k, row)| (k, row.len()))
            .collect();
        if !bad.is_empty() {
            return Err(Error::InconsistentTransitionCount {
                expected: q_count,
                lines: bad,
            });
        }
        if let Some(k) = points.iter().position(|row| {
            row.windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        }) {
            return Err(Error::InvalidParameter(format!(
                "transition points of line {k} are not strictly increasing"
            )));
        }
        Ok(Self {
            q_count,
            points,
            polarity,
        })
    }

    pub fn line_count(&self) -> usize {
        self.points.len()
    }

    /// CSV `line,q,column`, `q` counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("line,q,column\n");
        for (k, row) in self.points.iter().enumerate() {
            for (q, col) in row.iter().enumerate() {
                out.push_str(&format!("{k},{},{col}\n", q + 1));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    /// `M_q`, mean column of each transition.
    pub means: Vec<f64>,
    /// `S_y` in points per transition.
    pub accuracy: f64,
    pub per_transition_deviation: Vec<f64>,
    pub transitions: TransitionSet,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TransitionOptions {
    /// Locate crossings by linear interpolation between the two samples
    /// that straddle the mid level instead of reporting the first column
    /// past it.
    pub subpixel: bool,
}

pub fn detect_transitions(frame: &Frame, options: TransitionOptions) -> Result<TransitionSet> {
    let (low, high) = plateaus(frame)?;
    let mid = (f64::from(low) + f64::from(high)) / 2.0;

    let detect_line = |line: &[u16]| -> Vec<(f64, Polarity)> {
        let mut found = Vec::new();
        for j in 1..line.len() {
            let (prev, cur) = (f64::from(line[j - 1]), f64::from(line[j]));
            let polarity = match (prev >= mid, cur >= mid) {
                (false, true) => Polarity::Rising,
                (true, false) => Polarity::Falling,
                _ => continue,
            };
            let column = if options.subpixel {
                (j - 1) as f64 + (mid - prev) / (cur - prev)
            } else {
                j as f64
            };
            found.push((column, polarity));
        }
        found
    };

    let per_line: Vec<Vec<(f64, Polarity)>> = frame.lines().map(detect_line).collect();
    let expected = per_line[0].len();
    if expected == 0 {
        return Err(Error::NotBimodal(
            "first line has no mid-level crossings".into(),
        ));
    }
    let bad: Vec<(usize, usize)> = per_line
        .iter()
        .enumerate()
        .filter(|(_, l)| l.len() != expected)
        .map(|(k, l)| (k, l.len()))
        .collect();
    if !bad.is_empty() {
        return Err(Error::InconsistentTransitionCount {
            expected,
            lines: bad,
        });
    }
    let polarity = per_line[0].iter().map(|&(_, p)| p).collect();
    let points = per_line
        .into_iter()
        .map(|l| l.into_iter().map(|(c, _)| c).collect())
        .collect();
    TransitionSet::new(points, polarity)
}

pub fn transition_means(set: &TransitionSet) -> Vec<f64> {
    let n = set.line_count() as f64;
    (0..set.q_count)
        .map(|q| set.points.iter().map(|row| row[q]).sum::<f64>() / n)
        .collect()
}

pub fn sync_accuracy(set: &TransitionSet) -> SyncReport {
    let means = transition_means(set);
    let n = set.line_count() as f64;
    let per_transition_deviation: Vec<f64> = means
        .iter()
        .enumerate()
        .map(|(q, &m)| set.points.iter().map(|row| (row[q] - m).abs()).sum::<f64>() / n)
        .collect();
    let accuracy = per_transition_deviation.iter().sum::<f64>() / set.q_count as f64;
    SyncReport {
        means,
        accuracy,
        per_transition_deviation,
        transitions: set.clone(),
    }
}

pub fn sync_analysis(frame: &Frame, options: TransitionOptions) -> Result<SyncReport> {
    Ok(sync_accuracy(&detect_transitions(frame, options)?))
}
