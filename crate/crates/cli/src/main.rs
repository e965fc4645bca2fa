//! `grabcheck`: generate test frames, evaluate captures, re-render reports.
//!
//! Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on
//! usage or input errors (including tests that could not be evaluated).

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use grabcheck_core::config::{GenerateJob, Settings, GENERATE_KEYS};
use grabcheck_core::eval::{
    emit_report, run_evaluation, EvalConfig, EvaluationReport, ReportFormat, ANALYZE_KEYS,
};
use grabcheck_core::pattern::{apply_defects, generate_pattern};
use grabcheck_core::{save_frame, Error};

fn help_for(key: &str) -> &'static str {
    match key {
        "config" => "Flat key = value file; flags override its entries",
        "pattern" => "uniform | ramp | bars",
        "size" => "Frame size WIDTHxHEIGHT [default: 256x256]",
        "bit-depth" => "Bits per sample, 1-16 [default: 8]",
        "level" => "Uniform grey level",
        "start" | "end" => "Ramp end points (left, right)",
        "low" | "high" => "Bar plateau levels",
        "period" => "Bar period in pixels [default: 32]",
        "duty" => "Fraction of each period held high [default: 0.5]",
        "noise" => "Additive noise distribution: gaussian | uniform",
        "noise-sigma" => "Noise sigma (gaussian) or half-width (uniform), LSB",
        "jitter" => "Maximum whole-pixel line shift J; shifts drawn from -J..=J",
        "line-offset-sigma" => "Sigma of a per-line black-level offset, LSB",
        "decay" => "Level change across one full line, LSB",
        "interference-freq" => "Interference frequency as a fraction of fs, (0, 0.5]",
        "interference-amp" => "Interference amplitude, LSB",
        "interference-phase" => "Interference phase, radians",
        "missing-codes" => "Comma-separated codes removed after quantisation",
        "seed" => "Seed for every random draw [default: 0]",
        "quantizer" => "dithered | nearest [default: dithered]",
        "out" => "Output path (file, or directory for csv-bundle)",
        "format" => "Frame file format: pgm | raw8 | raw16le [default: pgm]",
        "raw-size" => "Raw frame size WIDTHxHEIGHT",
        "raw-bit-depth" => "Raw frame bit depth",
        "input" => "Capture used by every test without its own input",
        "noise-input" | "adc-input" | "analog-input" | "spectral-input" | "sync-input" => {
            "Capture for this test only"
        }
        "edge-input" => "Bar capture for rise/fall times [default: sync input]",
        "tests" => "Comma list of noise, adc, analog, spectral, sync, or all [default: all]",
        "orientation" => "Spectral analysis direction: rows | columns",
        "block-size" => "Block edge for the block-mean map [default: 16]",
        "peak-mass-fraction" => "Mass fraction for the histogram peak width [default: 0.95]",
        "edge-low-frac" | "edge-high-frac" => "Rise/fall thresholds [default: 0.1 / 0.9]",
        "subpixel" => "Interpolate transition points between samples",
        "report-format" => "json | text | csv-bundle [default: json]",
        "k-dom" => "Dominance factor over the mean spectral power [default: 5]",
        "missing-code-rel-threshold" => "Missing-code count ratio to neighbours [default: 0.1]",
        _ => "Pass/fail limit",
    }
}

fn keyed_args(keys: &[&'static str]) -> Vec<Arg> {
    keys.iter()
        .map(|&key| {
            let arg = Arg::new(key).long(key).help(help_for(key));
            if key == "subpixel" {
                arg.num_args(0..=1).default_missing_value("true")
            } else {
                arg.value_name("VALUE")
            }
        })
        .collect()
}

fn cli() -> Command {
    Command::new("grabcheck")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Frame-grabber acquisition accuracy evaluation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("generate")
                .about("Write a test pattern, optionally with injected defects")
                .args(keyed_args(GENERATE_KEYS)),
        )
        .subcommand(
            Command::new("analyze")
                .about("Evaluate captures and write a report")
                .args(keyed_args(ANALYZE_KEYS)),
        )
        .subcommand(
            Command::new("report")
                .about("Re-render a stored JSON report")
                .arg(
                    Arg::new("input")
                        .long("input")
                        .required(true)
                        .value_name("REPORT.json"),
                )
                .arg(
                    Arg::new("format")
                        .long("format")
                        .value_name("json|text|csv-bundle")
                        .default_value("text"),
                )
                .arg(Arg::new("out").long("out").value_name("PATH"))
                .arg(
                    Arg::new("quiet")
                        .long("quiet")
                        .action(ArgAction::SetTrue)
                        .help("Do not echo text to stdout when --out is given"),
                ),
        )
}

/// Config file entries first, then every flag given on the command line.
fn settings_from(matches: &ArgMatches, keys: &[&str]) -> Result<Settings, Error> {
    let mut settings = match matches.get_one::<String>("config") {
        Some(path) => Settings::from_file(PathBuf::from(path).as_path())?,
        None => Settings::default(),
    };
    let mut flags = Settings::default();
    for &key in keys.iter().filter(|&&k| k != "config") {
        if let Some(v) = matches.get_one::<String>(key) {
            flags.set(key, v.clone());
        }
    }
    settings.merge(flags);
    Ok(settings)
}

fn generate(matches: &ArgMatches) -> Result<i32, Error> {
    let job = GenerateJob::from_settings(&settings_from(matches, GENERATE_KEYS)?)?;
    let frame = apply_defects(&generate_pattern(&job.pattern)?, &job.defects)?;
    save_frame(&frame, &job.output, &job.format)?;
    Ok(0)
}

fn output(
    report: &EvaluationReport,
    format: ReportFormat,
    out: Option<&PathBuf>,
) -> Result<(), Error> {
    match (out, format) {
        (Some(path), _) => emit_report(report, format, path),
        (None, ReportFormat::Json) => print_stdout(&report.to_json()?),
        (None, ReportFormat::Text) => print_stdout(&report.to_text()),
        (None, ReportFormat::CsvBundle) => {
            Err(Error::Config("csv-bundle output needs --out DIR".into()))
        }
    }
}

fn print_stdout(text: &str) -> Result<(), Error> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|source| Error::Unwritable {
            path: PathBuf::from("<stdout>"),
            source,
        })
}

fn analyze(matches: &ArgMatches) -> Result<i32, Error> {
    let config = EvalConfig::from_settings(&settings_from(matches, ANALYZE_KEYS)?)?;
    let report = run_evaluation(&config)?;
    output(&report, config.report_format, config.output.as_ref())?;
    for e in &report.errors {
        eprintln!("grabcheck: {} not evaluated: {}", e.test, e.message);
    }
    Ok(report.exit_code())
}

fn rerender(matches: &ArgMatches) -> Result<i32, Error> {
    let path = PathBuf::from(matches.get_one::<String>("input").expect("required"));
    let text = fs::read_to_string(&path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.clone()),
        _ => Error::Io {
            path: path.clone(),
            source,
        },
    })?;
    let report = EvaluationReport::from_json(&text)?;
    let format: ReportFormat = matches
        .get_one::<String>("format")
        .expect("defaulted")
        .parse()?;
    let out = matches.get_one::<String>("out").map(PathBuf::from);
    output(&report, format, out.as_ref())?;
    if out.is_some() && format == ReportFormat::Text && !matches.get_flag("quiet") {
        print_stdout(&report.to_text())?;
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let result = match matches.subcommand() {
        Some(("generate", m)) => generate(m),
        Some(("analyze", m)) => analyze(m),
        Some(("report", m)) => rerender(m),
        _ => unreachable!("subcommand required"),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("grabcheck: {e}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bench.cfg");
        fs::write(&cfg, "input = a.pgm\nmax-na-lsb = 0.5\n").unwrap();
        let m = cli().get_matches_from([
            "grabcheck",
            "analyze",
            "--config",
            cfg.to_str().unwrap(),
            "--max-na-lsb",
            "0.8",
            "--subpixel",
        ]);
        let (_, sub) = m.subcommand().unwrap();
        let s = settings_from(sub, ANALYZE_KEYS).unwrap();
        assert_eq!(s.get("max-na-lsb"), Some("0.8"));
        assert_eq!(s.get("input"), Some("a.pgm"));
        assert_eq!(s.get("subpixel"), Some("true"));
    }
}
