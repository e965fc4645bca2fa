//! Evaluation runs: load captures, run the requested tests, judge the
//! results against thresholds and render the report.
//!
//! A report is a pure function of the input files and the configuration.
//! It carries no timestamps, and every collection in it has a fixed order,
//! so repeated runs serialise to identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analog::{analog_analysis, edge_timing, AnalogReport, DEFAULT_BLOCK_SIZE};
use crate::config::{format_from, Settings};
use crate::error::{Error, Result};
use crate::frame::{load_frame, FormatSpec, Frame};
use crate::spectral::{spectral_analysis, SpectrumReport, DEFAULT_DOMINANCE_FACTOR};
use crate::stats::{
    adc_analysis, build_histogram, histogram_peak_width, noise_metrics, AdcReport, NoiseReport,
    PeakWidth,
};
use crate::sync::{sync_analysis, SyncReport, TransitionOptions};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "grabcheck";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Noise,
    Adc,
    Analog,
    Spectral,
    Sync,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::Noise,
        TestKind::Adc,
        TestKind::Analog,
        TestKind::Spectral,
        TestKind::Sync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestKind::Noise => "noise",
            TestKind::Adc => "adc",
            TestKind::Analog => "analog",
            TestKind::Spectral => "spectral",
            TestKind::Sync => "sync",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown test {s:?}")))
    }
}

/// Comma-separated test names, or `all`.
pub fn parse_tests(text: &str) -> Result<BTreeSet<TestKind>> {
    let mut tests = BTreeSet::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            tests.extend(TestKind::ALL);
        } else {
            tests.insert(name.parse()?);
        }
    }
    Ok(tests)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[default]
    Rows,
    Columns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Text,
    CsvBundle,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            "csv-bundle" | "csv" => Ok(ReportFormat::CsvBundle),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_na_lsb: f64,
    pub max_nms_lsb: f64,
    pub max_line_stability_lsb: f64,
    pub max_corner_delta_lsb: f64,
    pub max_decay_lsb_per_line: f64,
    pub max_sync_points: f64,
    pub k_dom: f64,
    pub missing_code_rel_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_na_lsb: 1.0,
            max_nms_lsb: 1.0,
            max_line_stability_lsb: 2.0,
            max_corner_delta_lsb: 2.0,
            max_decay_lsb_per_line: 1.0,
            max_sync_points: 1.0,
            k_dom: DEFAULT_DOMINANCE_FACTOR,
            missing_code_rel_threshold: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let limits = [
            ("max-na-lsb", self.max_na_lsb),
            ("max-nms-lsb", self.max_nms_lsb),
            ("max-line-stability-lsb", self.max_line_stability_lsb),
            ("max-corner-delta-lsb", self.max_corner_delta_lsb),
            ("max-decay-lsb-per-line", self.max_decay_lsb_per_line),
            ("max-sync-points", self.max_sync_points),
        ];
        if let Some((name, v)) = limits.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        if !(self.k_dom > 1.0 && self.k_dom.is_finite()) {
            return Err(Error::Config(format!(
                "k-dom must exceed 1, got {}",
                self.k_dom
            )));
        }
        let r = self.missing_code_rel_threshold;
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Config(format!(
                "missing-code-rel-threshold must lie in (0, 1), got {r}"
            )));
        }
        Ok(())
    }
}

/// Knobs of the individual analyzers that are not pass/fail limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub block_size: usize,
    pub peak_mass_fraction: f64,
    pub edge_low_frac: f64,
    pub edge_high_frac: f64,
    pub subpixel: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            peak_mass_fraction: 0.95,
            edge_low_frac: 0.1,
            edge_high_frac: 0.9,
            subpixel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Capture used by every test without its own input.
    pub input: Option<PathBuf>,
    pub test_inputs: BTreeMap<TestKind, PathBuf>,
    /// Bar capture for rise/fall times; defaults to the sync input.
    pub edge_input: Option<PathBuf>,
    pub format: FormatSpec,
    pub tests: BTreeSet<TestKind>,
    pub orientation: Orientation,
    pub thresholds: Thresholds,
    pub options: AnalysisOptions,
    pub output: Option<PathBuf>,
    pub report_format: ReportFormat,
}

pub const ANALYZE_KEYS: &[&str] = &[
    "config",
    "input",
    "noise-input",
    "adc-input",
    "analog-input",
    "spectral-input",
    "sync-input",
    "edge-input",
    "format",
    "raw-size",
    "raw-bit-depth",
    "tests",
    "orientation",
    "max-na-lsb",
    "max-nms-lsb",
    "max-line-stability-lsb",
    "max-corner-delta-lsb",
    "max-decay-lsb-per-line",
    "max-sync-points",
    "k-dom",
    "missing-code-rel-threshold",
    "block-size",
    "peak-mass-fraction",
    "edge-low-frac",
    "edge-high-frac",
    "subpixel",
    "out",
    "report-format",
];

impl EvalConfig {
    pub fn new(input: impl Into<PathBuf>, tests: impl IntoIterator<Item = TestKind>) -> Self {
        Self {
            input: Some(input.into()),
            test_inputs: BTreeMap::new(),
            edge_input: None,
            format: FormatSpec::PgmBinary,
            tests: tests.into_iter().collect(),
            orientation: Orientation::Rows,
            thresholds: Thresholds::default(),
            options: AnalysisOptions::default(),
            output: None,
            report_format: ReportFormat::Json,
        }
    }

    pub fn from_settings(s: &Settings) -> Result<Self> {
        s.check_known(ANALYZE_KEYS)?;
        let d = Thresholds::default();
        let thresholds = Thresholds {
            max_na_lsb: s.parsed_or("max-na-lsb", d.max_na_lsb)?,
            max_nms_lsb: s.parsed_or("max-nms-lsb", d.max_nms_lsb)?,
            max_line_stability_lsb: s
                .parsed_or("max-line-stability-lsb", d.max_line_stability_lsb)?,
            max_corner_delta_lsb: s.parsed_or("max-corner-delta-lsb", d.max_corner_delta_lsb)?,
            max_decay_lsb_per_line: s
                .parsed_or("max-decay-lsb-per-line", d.max_decay_lsb_per_line)?,
            max_sync_points: s.parsed_or("max-sync-points", d.max_sync_points)?,
            k_dom: s.parsed_or("k-dom", d.k_dom)?,
            missing_code_rel_threshold: s
                .parsed_or("missing-code-rel-threshold", d.missing_code_rel_threshold)?,
        };
        let o = AnalysisOptions::default();
        let options = AnalysisOptions {
            block_size: s.parsed_or("block-size", o.block_size)?,
            peak_mass_fraction: s.parsed_or("peak-mass-fraction", o.peak_mass_fraction)?,
            edge_low_frac: s.parsed_or("edge-low-frac", o.edge_low_frac)?,
            edge_high_frac: s.parsed_or("edge-high-frac", o.edge_high_frac)?,
            subpixel: s.flag("subpixel")?,
        };
        let orientation = match s.get("orientation").unwrap_or("rows") {
            "rows" => Orientation::Rows,
            "columns" => Orientation::Columns,
            other => return Err(Error::Config(format!("unknown orientation {other:?}"))),
        };
        let test_inputs = TestKind::ALL
            .into_iter()
            .filter_map(|t| s.path(&format!("{t}-input")).map(|p| (t, p)))
            .collect();
        let config = Self {
            input: s.path("input"),
            test_inputs,
            edge_input: s.path("edge-input"),
            format: format_from(s, None)?,
            tests: parse_tests(s.get("tests").unwrap_or("all"))?,
            orientation,
            thresholds,
            options,
            output: s.path("out"),
            report_format: s.parsed_or("report-format", ReportFormat::Json)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tests.is_empty() {
            return Err(Error::Config("no tests requested".into()));
        }
        self.thresholds.validate()?;
        if let Some(t) = self.tests.iter().find(|t| self.input_for(**t).is_none()) {
            return Err(Error::Config(format!("no input given for test {t}")));
        }
        Ok(())
    }

    pub fn input_for(&self, test: TestKind) -> Option<&Path> {
        self.test_inputs
            .get(&test)
            .or(self.input.as_ref())
            .map(PathBuf::as_path)
    }

    fn edge_input_path(&self) -> Option<&Path> {
        self.edge_input
            .as_deref()
            .or_else(|| self.test_inputs.get(&TestKind::Sync).map(PathBuf::as_path))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub roles: Vec<String>,
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub tests: Vec<TestKind>,
    pub orientation: Orientation,
    pub thresholds: Thresholds,
    pub options: AnalysisOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSection {
    #[serde(flatten)]
    pub metrics: NoiseReport,
    pub histogram_peak: PeakWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSection {
    pub orientation: Orientation,
    #[serde(flatten)]
    pub spectrum: SpectrumReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adc: Option<AdcReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analog: Option<AnalogReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sync: Option<SyncReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotEvaluated,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotEvaluated => "not-evaluated",
        }
    }
}

/// One `value <= threshold` judgement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub test: TestKind,
    pub check: String,
    pub value: Option<f64>,
    pub threshold: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestError {
    pub test: TestKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub inputs: Vec<InputInfo>,
    pub settings: ReportSettings,
    pub sections: Sections,
    pub verdicts: Vec<Verdict>,
    pub errors: Vec<TestError>,
    pub overall: Status,
}

impl EvaluationReport {
    /// 0 all pass, 1 a verdict failed, 2 a test could not be evaluated.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            2
        } else if self.overall == Status::Fail {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn to_text(&self) -> String {
        render_text(self)
    }

    /// `(file name, contents)` for every CSV the report can supply.
    pub fn csv_files(&self) -> Vec<(&'static str, String)> {
        let s = &self.sections;
        let mut files = Vec::new();
        if let Some(adc) = &s.adc {
            files.push(("histogram.csv", adc.histogram.to_csv()));
        }
        if let Some(spec) = &s.spectral {
            files.push(("spectrum.csv", spec.spectrum.to_csv()));
        }
        if let Some(analog) = &s.analog {
            files.push(("blockmeans.csv", analog.block_map.to_csv()));
        }
        if let Some(sync) = &s.sync {
            files.push(("transitions.csv", sync.transitions.to_csv()));
        }
        files
    }
}

fn run_test(test: TestKind, frame: &Frame, config: &EvalConfig) -> Result<TestOutcome> {
    let th = &config.thresholds;
    let opts = &config.options;
    Ok(match test {
        TestKind::Noise => TestOutcome::Noise(NoiseSection {
            metrics: noise_metrics(frame),
            histogram_peak: histogram_peak_width(&build_histogram(frame), opts.peak_mass_fraction)?,
        }),
        TestKind::Adc => TestOutcome::Adc(adc_analysis(frame, th.missing_code_rel_threshold)?),
        TestKind::Analog => TestOutcome::Analog(analog_analysis(frame, opts.block_size)?),
        TestKind::Spectral => {
            let spectrum = match config.orientation {
                Orientation::Rows => spectral_analysis(frame, th.k_dom)?,
                Orientation::Columns => spectral_analysis(&frame.transpose(), th.k_dom)?,
            };
            TestOutcome::Spectral(SpectralSection {
                orientation: config.orientation,
                spectrum,
            })
        }
        TestKind::Sync => TestOutcome::Sync(sync_analysis(
            frame,
            TransitionOptions {
                subpixel: opts.subpixel,
            },
        )?),
    })
}

enum TestOutcome {
    Noise(NoiseSection),
    Adc(AdcReport),
    Analog(AnalogReport),
    Spectral(SpectralSection),
    Sync(SyncReport),
}

fn checks(
    test: TestKind,
    th: &Thresholds,
    sections: &Sections,
) -> Vec<(&'static str, Option<f64>, f64)> {
    match test {
        TestKind::Noise => {
            let n = sections.noise.as_ref().map(|s| s.metrics);
            vec![
                ("abs_mean_noise", n.map(|n| n.abs_mean_noise), th.max_na_lsb),
                ("rms_noise", n.map(|n| n.rms_noise), th.max_nms_lsb),
            ]
        }
        TestKind::Adc => {
            let count = sections.adc.as_ref().map(|a| a.missing_codes.len() as f64);
            vec![("missing_code_count", count, 0.0)]
        }
        TestKind::Analog => {
            let a = sections.analog.as_ref();
            vec![
                (
                    "line_stability_lsb",
                    a.map(|a| a.line_stability_lsb),
                    th.max_line_stability_lsb,
                ),
                (
                    "corner_delta_lsb",
                    a.map(|a| a.corner_delta_lsb),
                    th.max_corner_delta_lsb,
                ),
                (
                    "abs_decay_lsb_per_line",
                    a.map(|a| a.decay_slope_lsb_per_line.abs()),
                    th.max_decay_lsb_per_line,
                ),
            ]
        }
        TestKind::Spectral => {
            let count = sections
                .spectral
                .as_ref()
                .map(|s| s.spectrum.dominant.len() as f64);
            vec![("dominant_frequency_count", count, 0.0)]
        }
        TestKind::Sync => {
            let s = sections.sync.as_ref().map(|s| s.accuracy);
            vec![("sync_points_per_transition", s, th.max_sync_points)]
        }
    }
}

pub fn run_evaluation(config: &EvalConfig) -> Result<EvaluationReport> {
    config.validate()?;

    // load every distinct input once, in test order
    let mut loaded: BTreeMap<PathBuf, std::result::Result<Frame, String>> = BTreeMap::new();
    let mut roles: Vec<(PathBuf, String)> = Vec::new();
    let mut wanted: Vec<(PathBuf, String)> = config
        .tests
        .iter()
        .filter_map(|&t| {
            config
                .input_for(t)
                .map(|p| (p.to_path_buf(), t.name().to_string()))
        })
        .collect();
    let edge_path = if config.tests.contains(&TestKind::Analog) {
        config.edge_input_path().map(Path::to_path_buf)
    } else {
        None
    };
    if let Some(p) = &edge_path {
        wanted.push((p.clone(), "edges".to_string()));
    }
    for (path, role) in wanted {
        loaded
            .entry(path.clone())
            .or_insert_with(|| load_frame(&path, &config.format).map_err(|e| e.to_string()));
        roles.push((path, role));
    }

    // tests share only immutable frames; results are gathered in test order
    let outcomes: Vec<(TestKind, std::result::Result<TestOutcome, String>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = config
                .tests
                .iter()
                .map(|&test| {
                    let frame = &loaded[config.input_for(test).expect("validated")];
                    scope.spawn(move || {
                        let outcome = frame
                            .as_ref()
                            .map_err(Clone::clone)
                            .and_then(|f| run_test(test, f, config).map_err(|e| e.to_string()));
                        (test, outcome)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("analysis thread panicked"))
                .collect()
        });

    let mut sections = Sections::default();
    let mut errors = Vec::new();
    for (test, outcome) in outcomes {
        match outcome {
            Ok(TestOutcome::Noise(s)) => sections.noise = Some(s),
            Ok(TestOutcome::Adc(s)) => sections.adc = Some(s),
            Ok(TestOutcome::Analog(s)) => sections.analog = Some(s),
            Ok(TestOutcome::Spectral(s)) => sections.spectral = Some(s),
            Ok(TestOutcome::Sync(s)) => sections.sync = Some(s),
            Err(message) => errors.push(TestError { test, message }),
        }
    }

    if let (Some(analog), Some(path)) = (sections.analog.as_mut(), &edge_path) {
        let o = &config.options;
        match loaded[path].as_ref().map_err(Clone::clone).and_then(|f| {
            edge_timing(f, o.edge_low_frac, o.edge_high_frac).map_err(|e| e.to_string())
        }) {
            Ok(t) => analog.edge_timing = Some(t),
            Err(e) => errors.push(TestError {
                test: TestKind::Analog,
                message: format!("edge timing: {e}"),
            }),
        }
    }

    let verdicts: Vec<Verdict> = config
        .tests
        .iter()
        .flat_map(|&test| {
            checks(test, &config.thresholds, &sections).into_iter().map(
                move |(check, value, threshold)| Verdict {
                    test,
                    check: check.to_string(),
                    value,
                    threshold,
                    status: match value {
                        None => Status::NotEvaluated,
                        Some(v) if v <= threshold => Status::Pass,
                        Some(_) => Status::Fail,
                    },
                },
            )
        })
        .collect();
    let overall = if verdicts.iter().any(|v| v.status == Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    };

    let mut inputs: Vec<InputInfo> = Vec::new();
    for (path, role) in roles {
        let shown = path.display().to_string();
        if let Some(info) = inputs.iter_mut().find(|i| i.path == shown) {
            info.roles.push(role);
            continue;
        }
        if let Ok(frame) = &loaded[&path] {
            inputs.push(InputInfo {
                path: shown,
                roles: vec![role],
                width: frame.width(),
                height: frame.height(),
                bit_depth: frame.bit_depth(),
                sha256: frame.digest(),
            });
        }
    }

    Ok(EvaluationReport {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo {
            name: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        inputs,
        settings: ReportSettings {
            tests: config.tests.iter().copied().collect(),
            orientation: config.orientation,
            thresholds: config.thresholds,
            options: config.options,
        },
        sections,
        verdicts,
        errors,
        overall,
    })
}

fn render_text(r: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} evaluation report", r.tool.name, r.tool.version);
    for i in &r.inputs {
        let _ = writeln!(
            out,
            "Input [{}]: {} ({}x{}, {}-bit, sha256 {})",
            i.roles.join(","),
            i.path,
            i.width,
            i.height,
            i.bit_depth,
            i.sha256
        );
    }
    let s = &r.sections;
    if let Some(n) = &s.noise {
        let m = &n.metrics;
        let _ = writeln!(
            out,
            "Noise performance: abs. {:.3} LSB, max {:.3} LSB, RMS {:.3} LSB (mean level {:.3}, histogram peak {} width {})",
            m.abs_mean_noise, m.max_noise, m.rms_noise, m.mean_level, n.histogram_peak.peak_code, n.histogram_peak.width
        );
    }
    if let Some(a) = &s.analog {
        let _ = writeln!(
            out,
            "Black level stability: Variation {:.3}% (line step {:.3} LSB, decay {:.3} LSB/line, corner delta {:.3} LSB)",
            a.variation_percent, a.line_stability_lsb, a.decay_slope_lsb_per_line, a.corner_delta_lsb
        );
        if let Some(t) = &a.edge_timing {
            let _ = writeln!(
                out,
                "Rise/fall times: rise {} px, fall {} px ({} rising, {} falling edges)",
                mean_text(&t.rise_times),
                mean_text(&t.fall_times),
                t.rise_times.len(),
                t.fall_times.len()
            );
        }
    }
    if let Some(sp) = &s.spectral {
        let _ = writeln!(out, "Dominant freq.: {}", sp.spectrum.render_dominant());
    }
    if let Some(a) = &s.adc {
        let codes = if a.missing_codes.is_empty() {
            "No missing codes.".to_string()
        } else {
            let list: Vec<String> = a.missing_codes.iter().map(u16::to_string).collect();
            format!("Missing codes: {}.", list.join(", "))
        };
        let _ = writeln!(
            out,
            "ADC parameters: {codes} Effective resolution {:.3} bits",
            a.effective_resolution_bits
        );
    }
    if let Some(sy) = &s.sync {
        let _ = writeln!(
            out,
            "Sync. parameters: {:.2} points/transition",
            sy.accuracy
        );
    }
    for e in &r.errors {
        let _ = writeln!(out, "Error [{}]: {}", e.test, e.message);
    }
    let _ = writeln!(out, "Verdicts:");
    for v in &r.verdicts {
        let value = v
            .value
            .map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
        let _ = writeln!(
            out,
            "  {}.{}: {} <= {} {}",
            v.test,
            v.check,
            value,
            v.threshold,
            v.status.label()
        );
    }
    let _ = writeln!(out, "Overall: {}", r.overall.label().to_uppercase());
    out
}

fn mean_text(times: &[usize]) -> String {
    if times.is_empty() {
        return "-".to_string();
    }
    format!(
        "{:.2}",
        times.iter().sum::<usize>() as f64 / times.len() as f64
    )
}

/// Writes `report` as a JSON or text file, or as a directory of CSVs.
pub fn emit_report(report: &EvaluationReport, format: ReportFormat, path: &Path) -> Result<()> {
    let unwritable = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Unwritable { path: p, source }
    };
    match format {
        ReportFormat::Json => fs::write(path, report.to_json()?).map_err(unwritable(path)),
        ReportFormat::Text => fs::write(path, report.to_text()).map_err(unwritable(path)),
        ReportFormat::CsvBundle => {
            fs::create_dir_all(path).map_err(unwritable(path))?;
            for (name, contents) in report.csv_files() {
                let file = path.join(name);
                fs::write(&file, contents).map_err(unwritable(&file))?;
            }
            Ok(())
        }
    }
}
