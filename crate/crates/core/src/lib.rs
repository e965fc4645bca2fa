//! Acquisition-accuracy metrics for monochrome frame grabbers.
//!
//! A frame grabber is evaluated from frames captured while a known test
//! waveform is applied to its input. Five groups of parameters are computed:
//!
//! * internal noise ([`stats::noise_metrics`]) on a uniform grey capture,
//! * ADC quantisation: histogram, missing codes and effective resolution
//!   ([`stats::find_missing_codes`], [`stats::effective_resolution`]) on a ramp,
//! * the analogue section: black-level stability and decay, block means and
//!   edge rise/fall times ([`analog`]),
//! * dominant interference frequencies from aggregated line spectra
//!   ([`spectral`]),
//! * synchronisation accuracy from transition-point jitter ([`sync`]).
//!
//! [`pattern`] synthesises the test waveforms and injects calibrated defects,
//! which is how every analyzer here is verified. [`eval`] ties everything
//! together into a thresholded, reproducible report.

pub mod analog;
pub mod config;
pub mod error;
pub mod eval;
pub mod frame;
pub mod pattern;
pub mod spectral;
pub mod stats;
pub mod sync;

pub use error::{Error, Result};
pub use frame::{load_frame, save_frame, FormatSpec, Frame};
