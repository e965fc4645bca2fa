//! Acceptance criteria: generator-to-analyzer round trips and brute-force
//! oracle equivalence. Each criterion prints one PASS/FAIL line; run with
//! `cargo test -p grabcheck --test acceptance -- --nocapture` to see them.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;

use grabcheck_core::analog::{block_means, edge_timing, level_decay};
use grabcheck_core::frame::Frame;
use grabcheck_core::pattern::{
    apply_defects, generate_pattern, AdditiveNoise, DefectModel, Interference, NoiseDistribution,
    PatternSpec,
};
use grabcheck_core::spectral::{line_power_spectrum, spectral_analysis};
use grabcheck_core::stats::{build_histogram, find_missing_codes, noise_metrics, NoiseReport};
use grabcheck_core::sync::{
    detect_transitions, sync_accuracy, Polarity, TransitionOptions, TransitionSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn close(actual: f64, expected: f64, rel: f64) -> bool {
    actual == expected || (actual - expected).abs() <= rel * actual.abs().max(expected.abs())
}

fn gaussian(sigma: f64, seed: u64) -> DefectModel {
    DefectModel {
        additive_noise: Some(AdditiveNoise {
            distribution: NoiseDistribution::Gaussian,
            magnitude: sigma,
        }),
        seed,
        ..Default::default()
    }
}

fn uniform256() -> Frame {
    generate_pattern(&PatternSpec::uniform(256, 256, 128)).unwrap()
}

fn power_mean_chain_holds(r: &NoiseReport) -> bool {
    let tol = 1e-12 * r.max_noise.max(1.0);
    r.abs_mean_noise <= r.rms_noise + tol && r.rms_noise <= r.max_noise + tol
}

// --- naive direct-summation oracles --------------------------------------

fn naive_noise(f: &Frame) -> (f64, f64, f64, f64) {
    let n = (f.width() * f.height()) as f64;
    let mut sum = 0.0;
    for i in 0..f.height() {
        for j in 0..f.width() {
            sum += f64::from(f.get(i, j));
        }
    }
    let m = sum / n;
    let (mut abs, mut max, mut sq) = (0.0, 0.0f64, 0.0);
    for i in 0..f.height() {
        for j in 0..f.width() {
            let d = f64::from(f.get(i, j)) - m;
            abs += d.abs();
            max = max.max(d.abs());
            sq += d * d;
        }
    }
    (m, abs / n, max, (sq / n).sqrt())
}

fn naive_block_means(f: &Frame, b: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; f.width() / b]; f.height() / b];
    for (m, row) in out.iter_mut().enumerate() {
        for (n, cell) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for i in 0..b {
                for j in 0..b {
                    s += f64::from(f.get(m * b + i, n * b + j));
                }
            }
            *cell = s / (b * b) as f64;
        }
    }
    out
}

fn naive_sync(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = points.len() as f64;
    let q_count = points[0].len();
    let mut means = Vec::new();
    let mut total = 0.0;
    for q in 0..q_count {
        let mut s = 0.0;
        for row in points {
            s += row[q];
        }
        let mq = s / n;
        means.push(mq);
        let mut dev = 0.0;
        for row in points {
            dev += (row[q] - mq).abs();
        }
        total += dev / n;
    }
    (means, total / q_count as f64)
}

fn exact_dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &v) in x.iter().enumerate() {
                let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

// --- criteria -------------------------------------------------------------

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    for trial in 0..200 {
        let samples: Vec<u16> = (0..64).map(|_| rng.random_range(0..=255)).collect();
        let f = Frame::new(8, 8, 8, samples).unwrap();
        let r = noise_metrics(&f);
        let (m, na, nmax, nms) = naive_noise(&f);
        let pairs = [
            ("M", r.mean_level, m),
            ("Na", r.abs_mean_noise, na),
            ("Nmax", r.max_noise, nmax),
            ("Nms", r.rms_noise, nms),
        ];
        for (name, got, want) in pairs {
            if !close(got, want, 1e-9) {
                return Err(format!("frame {trial}: {name} {got} vs oracle {want}"));
            }
        }
        for b in [2, 4, 8] {
            let map = block_means(&f, b).unwrap();
            let oracle = naive_block_means(&f, b);
            for (row, orow) in map.means.iter().zip(&oracle) {
                for (&got, &want) in row.iter().zip(orow) {
                    if !close(got, want, 1e-9) {
                        return Err(format!("frame {trial}: block {b} mean {got} vs {want}"));
                    }
                }
            }
        }
        // transition grid: 8 lines, Q = 3 increasing integer columns each
        let points: Vec<Vec<f64>> = (0..8)
            .map(|_| {
                let a = rng.random_range(0..20);
                let b = a + rng.random_range(1..20);
                let c = b + rng.random_range(1..20);
                vec![a as f64, b as f64, c as f64]
            })
            .collect();
        let set = TransitionSet::new(points.clone(), vec![Polarity::Rising; 3]).unwrap();
        let report = sync_accuracy(&set);
        let (means, sy) = naive_sync(&points);
        if !close(report.accuracy, sy, 1e-9) {
            return Err(format!(
                "set {trial}: S_y {} vs oracle {sy}",
                report.accuracy
            ));
        }
        if report
            .means
            .iter()
            .zip(&means)
            .any(|(&a, &b)| !close(a, b, 1e-9))
        {
            return Err(format!(
                "set {trial}: M_q {:?} vs oracle {means:?}",
                report.means
            ));
        }
    }
    Ok("200 random 8x8 frames and transition sets agree within 1e-9 relative".into())
}

fn c2_noise_recovery() -> Outcome {
    let f = apply_defects(&uniform256(), &gaussian(2.0, 2024)).unwrap();
    let r = noise_metrics(&f);
    if !(1.9..=2.1).contains(&r.rms_noise) {
        return Err(format!("Nms {} outside [1.9, 2.1]", r.rms_noise));
    }
    if !(1.52..=1.68).contains(&r.abs_mean_noise) {
        return Err(format!("Na {} outside [1.52, 1.68]", r.abs_mean_noise));
    }
    // chain on a spread of generated frames
    let mut checked = 0;
    for seed in 0..10 {
        for (spec, sigma) in [
            (PatternSpec::uniform(64, 64, 128), 0.3),
            (PatternSpec::ramp(256, 16, 0, 255), 2.0),
            (PatternSpec::bars(64, 32, 20, 220, 16, 0.5), 8.0),
        ] {
            let g =
                apply_defects(&generate_pattern(&spec).unwrap(), &gaussian(sigma, seed)).unwrap();
            if !power_mean_chain_holds(&noise_metrics(&g)) {
                return Err(format!("power-mean chain broken for {spec:?} seed {seed}"));
            }
            checked += 1;
        }
    }
    if !power_mean_chain_holds(&r) {
        return Err("power-mean chain broken on the sigma=2 frame".into());
    }
    Ok(format!(
        "Nms = {:.4}, Na = {:.4}; Na <= Nms <= Nmax on {} frames",
        r.rms_noise,
        r.abs_mean_noise,
        checked + 1
    ))
}

fn c3_missing_codes() -> Outcome {
    let ramp = generate_pattern(&PatternSpec::ramp(256, 256, 0, 255)).unwrap();
    let model = DefectModel {
        missing_codes: [77].into(),
        ..Default::default()
    };
    let found = find_missing_codes(
        &build_histogram(&apply_defects(&ramp, &model).unwrap()),
        0.1,
    )
    .map_err(|e| e.to_string())?;
    if found != [77] {
        return Err(format!("injected {{77}}, found {found:?}"));
    }
    let clean = find_missing_codes(&build_histogram(&ramp), 0.1).map_err(|e| e.to_string())?;
    if !clean.is_empty() {
        return Err(format!("clean ramp reported {clean:?}"));
    }
    for seed in 0..20 {
        let noisy = apply_defects(&ramp, &gaussian(0.5, seed)).unwrap();
        let fp = find_missing_codes(&build_histogram(&noisy), 0.1).map_err(|e| e.to_string())?;
        if !fp.is_empty() {
            return Err(format!("seed {seed}: false positives {fp:?}"));
        }
    }
    Ok("found exactly [77]; clean ramp and 20 noisy seeds (sigma 0.5) report none".into())
}

fn c4_decay_recovery() -> Outcome {
    let noisy = DefectModel {
        level_decay: Some(-3.0),
        ..gaussian(1.0, 44)
    };
    let slope_noisy = level_decay(&apply_defects(&uniform256(), &noisy).unwrap());
    if (slope_noisy + 3.0).abs() > 0.1 {
        return Err(format!("slope -3 with noise estimated as {slope_noisy}"));
    }
    let clean = DefectModel {
        level_decay: Some(-1.0),
        seed: 45,
        ..Default::default()
    };
    let slope_clean = level_decay(&apply_defects(&uniform256(), &clean).unwrap());
    if (slope_clean + 1.0).abs() > 0.05 {
        return Err(format!("noise-free slope -1 estimated as {slope_clean}"));
    }
    Ok(format!("-3 -> {slope_noisy:.4}, -1 -> {slope_clean:.4}"))
}

fn c5_spectral_detection() -> Outcome {
    let width = 256;
    let target = width / 8;
    let mut hits = 0;
    let mut quiet = 0;
    for seed in 0..20 {
        let tone = DefectModel {
            interference: Some(Interference {
                bin_fraction: target as f64 / width as f64,
                amplitude: 5.0,
                phase: 0.0,
            }),
            ..gaussian(1.0, 1000 + seed)
        };
        let r = spectral_analysis(&apply_defects(&uniform256(), &tone).unwrap(), 5.0).unwrap();
        if r.dominant.iter().map(|d| d.bin).eq([target]) {
            hits += 1;
        }
        let r = spectral_analysis(
            &apply_defects(&uniform256(), &gaussian(1.0, 2000 + seed)).unwrap(),
            5.0,
        )
        .unwrap();
        if r.dominant.is_empty() {
            quiet += 1;
        }
    }
    if hits < 19 {
        return Err(format!("tone detected alone in {hits}/20 seeds"));
    }
    if quiet < 19 {
        return Err(format!("noise-only frames clean in {quiet}/20 seeds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for trial in 0..200 {
        let line: Vec<f64> = (0..16).map(|_| rng.random_range(-500.0..500.0)).collect();
        let fast = line_power_spectrum(&line).unwrap();
        let exact = exact_dft_power(&line);
        if fast
            .iter()
            .zip(&exact)
            .any(|(&a, &b)| (a - b).abs() > 1e-6 * b.abs().max(1.0))
        {
            return Err(format!("line {trial}: spectrum differs from summation DFT"));
        }
        let energy: f64 = line.iter().map(|x| x * x).sum();
        for p in [&fast, &exact] {
            let parseval = (p[0] + 2.0 * p[1..8].iter().sum::<f64>() + p[8]) / 16.0;
            if (parseval - energy).abs() > 1e-6 * energy {
                return Err(format!(
                    "line {trial}: Parseval {parseval} vs energy {energy}"
                ));
            }
        }
    }
    Ok(format!(
        "tone at W/8 alone in {hits}/20, noise-only empty in {quiet}/20, Parseval on 200 lines"
    ))
}

fn c6_sync_accuracy() -> Outcome {
    let bars = generate_pattern(&PatternSpec::bars(256, 512, 20, 220, 32, 0.5)).unwrap();
    let clean = sync_accuracy(
        &detect_transitions(&bars, TransitionOptions::default()).map_err(|e| e.to_string())?,
    );
    if clean.accuracy != 0.0 {
        return Err(format!("zero jitter gave S_y = {}", clean.accuracy));
    }
    let model = DefectModel {
        line_jitter: Some(1),
        seed: 6,
        ..Default::default()
    };
    let jittered = apply_defects(&bars, &model).unwrap();
    let r = sync_accuracy(
        &detect_transitions(&jittered, TransitionOptions::default()).map_err(|e| e.to_string())?,
    );
    if !(0.567..=0.767).contains(&r.accuracy) {
        return Err(format!("S_y = {} outside [0.567, 0.767]", r.accuracy));
    }
    Ok(format!(
        "S_y = {:.4} with jitter {{-1,0,1}}, exactly 0 without",
        r.accuracy
    ))
}

fn c7_edge_timing() -> Outcome {
    let ramp_edge = [0u16, 40, 80, 120, 160, 200];
    let mut line = vec![0u16; 20];
    line.extend_from_slice(&ramp_edge);
    line.extend(std::iter::repeat_n(200, 20));
    let f = Frame::from_fn(line.len(), 4, 8, |_, j| line[j]).unwrap();
    let t = edge_timing(&f, 0.1, 0.9).map_err(|e| e.to_string())?;
    if t.rise_times != [4; 4] {
        return Err(format!("linear edge rise times {:?}", t.rise_times));
    }
    let step = generate_pattern(&PatternSpec::bars(64, 4, 20, 220, 32, 0.5)).unwrap();
    let t = edge_timing(&step, 0.1, 0.9).map_err(|e| e.to_string())?;
    if t.rise_times.iter().chain(&t.fall_times).any(|&x| x != 0) || t.rise_times.is_empty() {
        return Err(format!(
            "ideal step times {:?}/{:?}",
            t.rise_times, t.fall_times
        ));
    }
    Ok("6-sample linear edge -> 4 px, ideal step -> 0 px".into())
}

fn grabcheck(dir: &Path, args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_grabcheck"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    out.status
        .code()
        .ok_or_else(|| "terminated by signal".to_string())
        .inspect(|&c| {
            if c != 0 {
                eprintln!("{}", String::from_utf8_lossy(&out.stderr));
            }
        })
}

fn c8_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    for args in [
        &[
            "generate",
            "--pattern",
            "uniform",
            "--level",
            "128",
            "--size",
            "256x256",
            "--out",
            "u.pgm",
        ][..],
        &[
            "generate",
            "--pattern",
            "ramp",
            "--size",
            "256x256",
            "--out",
            "ramp.pgm",
        ],
        &[
            "generate",
            "--pattern",
            "bars",
            "--size",
            "256x256",
            "--out",
            "bars.pgm",
        ],
    ] {
        if grabcheck(d, args)? != 0 {
            return Err(format!("{args:?} failed"));
        }
    }
    let analyze = |out: &str| {
        grabcheck(
            d,
            &[
                "analyze",
                "--tests",
                "all",
                "--input",
                "u.pgm",
                "--adc-input",
                "ramp.pgm",
                "--sync-input",
                "bars.pgm",
                "--out",
                out,
            ],
        )
    };
    let code = analyze("r1.json")?;
    if code != 0 {
        return Err(format!("analyze exited {code}"));
    }
    analyze("r2.json")?;
    let first = fs::read(d.join("r1.json")).map_err(|e| e.to_string())?;
    if first != fs::read(d.join("r2.json")).map_err(|e| e.to_string())? {
        return Err("reports differ between runs".into());
    }
    let v: serde_json::Value = serde_json::from_slice(&first).map_err(|e| e.to_string())?;
    let s = &v["sections"];
    let checks = [
        (v["overall"] == "pass", "overall pass"),
        (s["noise"]["abs_mean_noise"] == 0.0, "Na = 0"),
        (
            s["adc"]["missing_codes"] == serde_json::json!([]),
            "no missing codes",
        ),
        (s["sync"]["accuracy"] == 0.0, "S_y = 0"),
        (s["analog"]["line_stability_lsb"] == 0.0, "line stability 0"),
        (
            s["spectral"]["dominant"] == serde_json::json!([]),
            "no dominant frequencies",
        ),
    ];
    if let Some((_, what)) = checks.iter().find(|(ok, _)| !ok) {
        return Err(format!("expected {what}"));
    }
    Ok(
        "generate -> analyze --tests all: overall pass, ideal metrics, byte-identical reports"
            .into(),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", c1_oracle_equivalence),
        ("2 noise recovery", c2_noise_recovery),
        ("3 missing-code detection", c3_missing_codes),
        ("4 decay recovery", c4_decay_recovery),
        ("5 spectral detection", c5_spectral_detection),
        ("6 sync accuracy", c6_sync_accuracy),
        ("7 edge timing", c7_edge_timing),
        ("8 end-to-end", c8_end_to_end),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  criterion {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
