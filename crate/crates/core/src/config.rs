//! Flat `key = value` settings shared by config files and command-line flags.
//!
//! Keys use the flag spelling without the leading dashes (`max-na-lsb`);
//! underscores are accepted and normalised to dashes. Blank lines and lines
//! starting with `#` are ignored. Later values replace earlier ones, which is
//! how flags override a config file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::{FormatSpec, RawLayout};
use crate::pattern::{
    AdditiveNoise, DefectModel, Interference, NoiseDistribution, PatternKind, PatternSpec,
    Quantizer,
};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            if key.trim().is_empty() {
                return Err(Error::Config(format!("line {}: empty key", n + 1)));
            }
            settings.set(key, value.trim());
        }
        Ok(settings)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| match source.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io {
                path: path.to_path_buf(),
                source,
            },
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize_key(key), value.into());
    }

    /// Applies every entry of `other` on top of `self`.
    pub fn merge(&mut self, other: Settings) {
        self.values.extend(other.values);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn parsed<T>(&self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("{key} = {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn parsed_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn required<T>(&self, key: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.parsed(key)?
            .ok_or_else(|| Error::Config(format!("missing required setting {key}")))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on" | "") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(Error::Config(format!("{key} = {v:?}: expected a boolean"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    /// Rejects keys outside `known`; catches typos in config files.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(Error::Config(format!("unknown setting {k}"))),
            None => Ok(()),
        }
    }
}

/// `WIDTHxHEIGHT`.
pub fn parse_size(text: &str) -> Result<(usize, usize)> {
    let bad = || Error::Config(format!("size {text:?}: expected WIDTHxHEIGHT"));
    let (w, h) = text.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?))
}

/// `pgm`, `raw8` or `raw16le`; raw kinds read `raw-size` and `raw-bit-depth`
/// (or fall back to `fallback` when writing a known frame).
pub fn format_from(settings: &Settings, fallback: Option<RawLayout>) -> Result<FormatSpec> {
    let kind = settings.get("format").unwrap_or("pgm");
    let layout = || -> Result<RawLayout> {
        match (settings.get("raw-size"), fallback) {
            (Some(size), _) => {
                let (width, height) = parse_size(size)?;
                let default_depth = if kind == "raw8" { 8 } else { 16 };
                Ok(RawLayout {
                    width,
                    height,
                    bit_depth: settings.parsed_or("raw-bit-depth", default_depth)?,
                })
            }
            (None, Some(layout)) => Ok(layout),
            (None, None) => Err(Error::Config(format!(
                "format {kind} needs raw-size (and optionally raw-bit-depth)"
            ))),
        }
    };
    match kind {
        "pgm" | "pgm_binary" | "pgm-binary" => Ok(FormatSpec::PgmBinary),
        "raw8" => Ok(FormatSpec::Raw8(layout()?)),
        "raw16le" => Ok(FormatSpec::Raw16Le(layout()?)),
        other => Err(Error::Config(format!("unknown format {other:?}"))),
    }
}

/// Everything `generate` needs: what to draw, how to damage it, where to put it.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateJob {
    pub pattern: PatternSpec,
    pub defects: DefectModel,
    pub output: PathBuf,
    pub format: FormatSpec,
}

pub const GENERATE_KEYS: &[&str] = &[
    "config",
    "pattern",
    "size",
    "bit-depth",
    "level",
    "start",
    "end",
    "low",
    "high",
    "period",
    "duty",
    "noise",
    "noise-sigma",
    "jitter",
    "line-offset-sigma",
    "decay",
    "interference-freq",
    "interference-amp",
    "interference-phase",
    "missing-codes",
    "seed",
    "quantizer",
    "out",
    "format",
    "raw-size",
    "raw-bit-depth",
];

impl GenerateJob {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        s.check_known(GENERATE_KEYS)?;
        let (width, height) = parse_size(s.get("size").unwrap_or("256x256"))?;
        let bit_depth: u8 = s.parsed_or("bit-depth", 8)?;
        let full = if (1..=16).contains(&bit_depth) {
            ((1u32 << bit_depth) - 1) as u16
        } else {
            u16::MAX
        };
        let kind = match s.get("pattern").unwrap_or("uniform") {
            "uniform" => PatternKind::Uniform {
                level: s.parsed_or("level", full / 2 + 1)?,
            },
            "ramp" => PatternKind::Ramp {
                start_level: s.parsed_or("start", 0)?,
                end_level: s.parsed_or("end", full)?,
            },
            "bars" => PatternKind::Bars {
                low_level: s.parsed_or("low", full / 10)?,
                high_level: s.parsed_or("high", full - full / 10)?,
                period: s.parsed_or("period", 32)?,
                duty: s.parsed_or("duty", 0.5)?,
            },
            other => return Err(Error::Config(format!("unknown pattern {other:?}"))),
        };
        let pattern = PatternSpec {
            width,
            height,
            bit_depth,
            kind,
        };

        let additive_noise = match s.parsed::<f64>("noise-sigma")? {
            None => None,
            Some(magnitude) => Some(AdditiveNoise {
                distribution: match s.get("noise").unwrap_or("gaussian") {
                    "gaussian" => NoiseDistribution::Gaussian,
                    "uniform" => NoiseDistribution::Uniform,
                    other => return Err(Error::Config(format!("unknown noise {other:?}"))),
                },
                magnitude,
            }),
        };
        let interference = match s.parsed::<f64>("interference-freq")? {
            None => None,
            Some(bin_fraction) => Some(Interference {
                bin_fraction,
                amplitude: s.required("interference-amp")?,
                phase: s.parsed_or("interference-phase", 0.0)?,
            }),
        };
        let missing_codes = match s.get("missing-codes") {
            None | Some("") => Default::default(),
            Some(list) => list
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<u16>()
                        .map_err(|e| Error::Config(format!("missing code {c:?}: {e}")))
                })
                .collect::<Result<_>>()?,
        };
        let quantizer = match s.get("quantizer").unwrap_or("dithered") {
            "dithered" => Quantizer::Dithered,
            "nearest" => Quantizer::Nearest,
            other => return Err(Error::Config(format!("unknown quantizer {other:?}"))),
        };
        let defects = DefectModel {
            additive_noise,
            line_jitter: s.parsed("jitter")?,
            black_level_offset: s.parsed("line-offset-sigma")?,
            level_decay: s.parsed("decay")?,
            interference,
            missing_codes,
            quantizer,
            seed: s.parsed_or("seed", 0)?,
        };
        let format = format_from(
            s,
            Some(RawLayout {
                width,
                height,
                bit_depth,
            }),
        )?;
        Ok(Self {
            pattern,
            defects,
            output: s.required("out")?,
            format,
        })
    }
}
