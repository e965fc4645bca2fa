//! Frame type and capture-file I/O.
//!
//! A [`Frame`] is a row-major grid of grey codes, top line first. One row is
//! one information line of the captured video. Supported containers are
//! binary PGM (`P5`) and headerless raw dumps (8-bit, or 16-bit
//! little-endian).

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MAX_BIT_DEPTH: u8 = 16;

/// Immutable grid of grey codes `e(i, j)`; `i` is the line, `j` the column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    bit_depth: u8,
    samples: Vec<u16>,
}

impl Frame {
    pub fn new(width: usize, height: usize, bit_depth: u8, samples: Vec<u16>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidFrame(format!(
                "dimensions {width}x{height} below the 2x2 minimum"
            )));
        }
        if !(1..=MAX_BIT_DEPTH).contains(&bit_depth) {
            return Err(Error::InvalidFrame(format!(
                "bit depth {bit_depth} outside 1..=16"
            )));
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidFrame("dimensions overflow".into()))?;
        if samples.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} frame",
                samples.len()
            )));
        }
        let max = max_code(bit_depth);
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, &s)| s > max) {
            return Err(Error::SampleOutOfRange {
                index,
                value: value.into(),
                max: max.into(),
            });
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            samples,
        })
    }

    /// Frame with every sample set to `level`.
    pub fn filled(width: usize, height: usize, bit_depth: u8, level: u16) -> Result<Self> {
        Self::new(
            width,
            height,
            bit_depth,
            vec![level; width.saturating_mul(height)],
        )
    }

    /// Builds a frame from a per-pixel function `f(line, column)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        bit_depth: u8,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(width.saturating_mul(height));
        for i in 0..height {
            for j in 0..width {
                samples.push(f(i, j));
            }
        }
        Self::new(width, height, bit_depth, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Largest representable code, `2^bit_depth - 1`.
    pub fn max_code(&self) -> u16 {
        max_code(self.bit_depth)
    }

    pub fn pixel_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u16> {
        self.samples
    }

    pub fn get(&self, line: usize, column: usize) -> u16 {
        self.samples[line * self.width + column]
    }

    pub fn line(&self, line: usize) -> &[u16] {
        let start = line * self.width;
        &self.samples[start..start + self.width]
    }

    pub fn lines(&self) -> impl ExactSizeIterator<Item = &[u16]> + '_ {
        self.samples.chunks_exact(self.width)
    }

    /// Columns become lines; used for column-direction analysis.
    pub fn transpose(&self) -> Frame {
        let mut samples = Vec::with_capacity(self.samples.len());
        for j in 0..self.width {
            for i in 0..self.height {
                samples.push(self.get(i, j));
            }
        }
        Frame {
            width: self.height,
            height: self.width,
            bit_depth: self.bit_depth,
            samples,
        }
    }

    /// SHA-256 over dimensions, depth and little-endian samples, as hex.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.width as u64).to_le_bytes());
        hasher.update((self.height as u64).to_le_bytes());
        hasher.update([self.bit_depth]);
        for s in &self.samples {
            hasher.update(s.to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

pub(crate) fn max_code(bit_depth: u8) -> u16 {
    ((1u32 << bit_depth) - 1) as u16
}

/// Dimensions a headerless raw file must be read with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLayout {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormatSpec {
    PgmBinary,
    Raw8(RawLayout),
    Raw16Le(RawLayout),
}

impl FormatSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FormatSpec::PgmBinary => "pgm_binary",
            FormatSpec::Raw8(_) => "raw8",
            FormatSpec::Raw16Le(_) => "raw16le",
        }
    }

    /// Raw spec matching `frame`'s own layout.
    pub fn raw_for(frame: &Frame) -> FormatSpec {
        let layout = RawLayout {
            width: frame.width(),
            height: frame.height(),
            bit_depth: frame.bit_depth(),
        };
        if frame.bit_depth() <= 8 {
            FormatSpec::Raw8(layout)
        } else {
            FormatSpec::Raw16Le(layout)
        }
    }
}

pub fn load_frame(path: impl AsRef<Path>, spec: &FormatSpec) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| match source.kind() {
        ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io {
            path: path.to_path_buf(),
            source,
        },
    })?;
    match spec {
        FormatSpec::PgmBinary => decode_pgm(&bytes),
        FormatSpec::Raw8(layout) => decode_raw(&bytes, layout, 1),
        FormatSpec::Raw16Le(layout) => decode_raw(&bytes, layout, 2),
    }
}

pub fn save_frame(frame: &Frame, path: impl AsRef<Path>, spec: &FormatSpec) -> Result<()> {
    let bytes = encode(frame, spec)?;
    let path = path.as_ref();
    fs::write(path, bytes).map_err(|source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}

pub fn encode(frame: &Frame, spec: &FormatSpec) -> Result<Vec<u8>> {
    match spec {
        FormatSpec::PgmBinary => Ok(encode_pgm(frame)),
        FormatSpec::Raw8(layout) => {
            check_layout(frame, layout)?;
            if frame.bit_depth() > 8 {
                return Err(Error::DepthIncompatible {
                    bit_depth: frame.bit_depth(),
                    format: "raw8",
                });
            }
            Ok(frame.samples().iter().map(|&s| s as u8).collect())
        }
        FormatSpec::Raw16Le(layout) => {
            check_layout(frame, layout)?;
            Ok(frame
                .samples()
                .iter()
                .flat_map(|s| s.to_le_bytes())
                .collect())
        }
    }
}

fn check_layout(frame: &Frame, layout: &RawLayout) -> Result<()> {
    if layout.width != frame.width() || layout.height != frame.height() {
        return Err(Error::DimensionMismatch {
            frame_width: frame.width(),
            frame_height: frame.height(),
            spec_width: layout.width,
            spec_height: layout.height,
        });
    }
    if layout.bit_depth != frame.bit_depth() {
        return Err(Error::DepthIncompatible {
            bit_depth: frame.bit_depth(),
            format: "raw layout of a different bit depth",
        });
    }
    Ok(())
}

fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let maxval = frame.max_code();
    let mut out = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval).into_bytes();
    if maxval < 256 {
        out.extend(frame.samples().iter().map(|&s| s as u8));
    } else {
        out.extend(frame.samples().iter().flat_map(|s| s.to_be_bytes()));
    }
    out
}

fn decode_raw(bytes: &[u8], layout: &RawLayout, bytes_per_sample: usize) -> Result<Frame> {
    if bytes_per_sample == 1 && layout.bit_depth > 8 {
        return Err(Error::DepthIncompatible {
            bit_depth: layout.bit_depth,
            format: "raw8",
        });
    }
    let expected = layout
        .width
        .saturating_mul(layout.height)
        .saturating_mul(bytes_per_sample);
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let samples = if bytes_per_sample == 1 {
        bytes.iter().map(|&b| u16::from(b)).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    };
    Frame::new(layout.width, layout.height, layout.bit_depth, samples)
}

/// Cursor over the ASCII part of a PNM header.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{what} out of range")))
    }
}

fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::MalformedHeader("magic is not \"P5\"".into()));
    }
    let mut reader = HeaderReader { bytes, pos: 2 };
    let width = reader.number("width")? as usize;
    let height = reader.number("height")? as usize;
    let maxval = reader.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(reader.pos) {
        Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
        _ => return Err(Error::MalformedHeader("no whitespace after maxval".into())),
    }
    let bit_depth = (64 - maxval.leading_zeros()) as u8;
    let bytes_per_sample = if maxval < 256 { 1 } else { 2 };
    let payload = &bytes[reader.pos..];
    let expected = width
        .saturating_mul(height)
        .saturating_mul(bytes_per_sample);
    if payload.len() < expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: payload.len(),
        });
    }
    let payload = &payload[..expected];
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        payload.iter().map(|&b| u16::from(b)).collect()
    } else {
        payload
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    if let Some((index, &value)) = samples
        .iter()
        .enumerate()
        .find(|(_, &s)| u64::from(s) > maxval)
    {
        return Err(Error::SampleOutOfRange {
            index,
            value: value.into(),
            max: maxval as u32,
        });
    }
    Frame::new(width, height, bit_depth, samples)
}
