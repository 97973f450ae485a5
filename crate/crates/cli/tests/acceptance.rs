//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use scalelaw::*;

const TRUE_ALPHA: f64 = 0.08;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ar32(layers: std::ops::RangeInclusive<u32>) -> Vec<ScaleSpec> {
    aspect_ratio_scales(32, layers).unwrap()
}

fn spec(sigma_pre: f64, sigma_fin: f64, seed: u64) -> SynthSpec {
    SynthSpec::new(TRUE_ALPHA, 20f64.ln(), ar32(1..=8), 5)
        .noise(sigma_pre, sigma_fin)
        .seed(seed)
}

fn cfg(replicates: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        replicates,
        ..BootstrapConfig::with_seed(seed)
    }
}

fn require(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn parameter_arithmetic() -> Check {
    let base = param_count(12, 768).unwrap();
    let small: Vec<ScaleSpec> = ar32(1..=8);
    let total: u64 = small.iter().map(|s| s.params).sum();
    let largest = ScaleSpec::new(8, 256).unwrap().params;
    let ratio = savings_ratio(&small, &ScaleSpec::new(12, 768).unwrap(), &TokenAssumption::EqualTokens).unwrap();
    let params_ratio = base as f64 / largest as f64;
    let detail = format!("N(12,768)={base} sum={total} savings={ratio:.4} params_ratio={params_ratio:.4}");
    require(
        base == 84_934_656
            && total == 15_925_248
            && largest == 6_291_456
            && (ratio - 5.33).abs() <= 0.1
            && (params_ratio - 13.5).abs() <= 0.1,
        detail,
    )
}

fn noiseless_round_trip() -> Check {
    let s = SynthSpec::new(-0.12, 4.5, ar32(1..=8), 5).seed(3);
    let set = generate(&s).unwrap().runset;
    let fit = fit_line(&set.points()).unwrap();
    let holdout = holdout_eval(&set, "1-6".parse().unwrap(), "7-8".parse().unwrap()).unwrap();
    let mre = holdout.mre.unwrap();
    let (da, db) = ((fit.alpha - s.true_alpha).abs(), (fit.beta - s.true_log_c).abs());
    require(
        da <= 1e-9 && db <= 1e-9 && fit.r_squared == 1.0 && mre <= 1e-9,
        format!(
            "|d_alpha|={da:.2e} |d_beta|={db:.2e} R2={} MRE={mre:.2e}",
            fit.r_squared
        ),
    )
}

fn noisy_recovery() -> Check {
    let hits = (0..200)
        .filter(|&t| {
            let set = generate(&spec(0.0, 0.01, t)).unwrap().runset;
            let fit = fit_line(&set.points()).unwrap();
            (fit.alpha - TRUE_ALPHA).abs() <= 0.05 * TRUE_ALPHA && fit.r_squared >= 0.97
        })
        .count();
    require(
        hits >= 190,
        format!("{hits}/200 trials within 5% and R2>=0.97 (need 190)"),
    )
}

fn bootstrap_coverage() -> Check {
    let hits = (0..200)
        .filter(|&t| {
            let set = generate(&spec(0.0, 0.01, 1000 + t)).unwrap().runset;
            bootstrap(&set, &cfg(500, t), &[])
                .unwrap()
                .slope_ci
                .contains(TRUE_ALPHA)
        })
        .count();
    require(
        hits >= 170,
        format!("{hits}/200 slope intervals cover the true slope (need 170)"),
    )
}

fn hierarchical_conservatism() -> Check {
    let (mut h, mut n) = (Vec::new(), Vec::new());
    for t in 0..100 {
        let set = generate(&spec(0.03, 0.01, 6000 + t)).unwrap().runset;
        h.push(
            hierarchical_bootstrap(&set, &cfg(500, t), &[])
                .unwrap()
                .slope_ci
                .width(),
        );
        n.push(naive_bootstrap(&set, &cfg(500, t), &[]).unwrap().slope_ci.width());
    }
    let (mh, mn) = (percentile(&h, 50.0).unwrap(), percentile(&n, 50.0).unwrap());
    require(mh > mn, format!("median width hierarchical={mh:.5} naive={mn:.5}"))
}

fn holdout_error() -> Check {
    let mut worst: f64 = 0.0;
    let hits = (0..100)
        .filter(|&t| {
            let set = generate(&spec(0.0, 0.01, 7000 + t)).unwrap().runset;
            let mre = holdout_eval(&set, "1-6".parse().unwrap(), "7-8".parse().unwrap())
                .unwrap()
                .mre
                .unwrap();
            worst = worst.max(mre);
            mre <= 0.025
        })
        .count();
    require(
        hits >= 90,
        format!("{hits}/100 trials with MRE<=0.025 (need 90), worst {worst:.4}"),
    )
}

fn selection_sign() -> Check {
    let target = ScaleSpec::new(12, 768).unwrap();
    let ln_target = target.x().ln();
    let family = |name: &str, at_target: f64, seed: u64| {
        let s = SynthSpec::new(TRUE_ALPHA, at_target.ln() - TRUE_ALPHA * ln_target, ar32(1..=8), 5)
            .noise(0.0, 0.01)
            .seed(seed)
            .labels("t", name, "acc");
        generate(&s).unwrap().runset
    };
    let (mut agree, mut reliable) = (0, 0);
    for t in 0..100 {
        let a = family("a", 80.0, 9000 + 2 * t);
        let b = family("b", 81.5, 9001 + 2 * t);
        let report = select_model(&a, &b, &target, DEFAULT_R2_THRESHOLD, &cfg(200, t), Some((80.0, 81.5))).unwrap();
        reliable += report.reliable as usize;
        agree += (report.reliable && report.sign_agreement == Some(true)) as usize;
    }
    require(
        agree >= 90,
        format!("{agree}/100 correct gap sign with both fits gated (need 90); {reliable} gated"),
    )
}

fn re_convention() -> Check {
    let r = re(80.0, 82.0).unwrap();
    let under = re(80.0, 78.0).unwrap();
    require(
        r < 0.0 && under > 0.0,
        format!("re(80, 82)={r:.4} re(80, 78)={under:.4}"),
    )
}

fn early_stopping() -> Check {
    let curve = LossCurve::from_losses(&[1.0, 0.8, 0.79, 0.79, 0.79, 0.79]).unwrap();
    let stop = early_stop(&curve, &EarlyStopPolicy::new(3, 0.0).unwrap());
    let mut losses = vec![3.0, 2.5, 2.2];
    losses.extend([2.2; 6]);
    losses.extend([2.0, 1.8, 1.7, 1.7, 1.7]);
    let plateau = LossCurve::from_losses(&losses).unwrap();
    let policies = [
        EarlyStopPolicy::new(3, 0.0).unwrap(),
        EarlyStopPolicy::new(10, 0.0).unwrap(),
    ];
    let rows = compare_policies(&plateau, &policies);
    require(
        stop.stop_index == 5 && stop.best_index == 2 && stop.stopped && rows[1].loss_at_best < rows[0].loss_at_best,
        format!(
            "stop={} best={}; patience 3 -> {}, patience 10 -> {}",
            stop.stop_index, stop.best_index, rows[0].loss_at_best, rows[1].loss_at_best
        ),
    )
}

fn cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_scalelaw"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Runs `args` three times (threads 1, 1, 4) and compares stdout and the
/// optional output file byte for byte.
fn stable(dir: &Path, name: &str, args: &[&str], file_flag: Option<&str>) -> Result<(), String> {
    let mut seen: Option<(Vec<u8>, Vec<u8>)> = None;
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let file = dir.join(format!("{name}-{i}.out"));
        let file_str = file.to_str().unwrap().to_string();
        let mut argv: Vec<&str> = vec!["--threads", threads];
        argv.extend_from_slice(args);
        if let Some(flag) = file_flag {
            argv.extend([flag, &file_str]);
        }
        let mut stdout = cli(&argv)?;
        let written = if file_flag.is_some() {
            std::fs::read(&file).map_err(|e| e.to_string())?
        } else {
            Vec::new()
        };
        // The output path is echoed in the report; normalise it before comparing.
        let text = String::from_utf8(stdout).unwrap().replace(&file_str, "OUT");
        stdout = text
            .replace(&format!("{file_str}.truth.json"), "OUT.truth.json")
            .into_bytes();
        match &seen {
            None => seen = Some((stdout, written)),
            Some((s, w)) if *s == stdout && *w == written => {}
            Some(_) => return Err(format!("{name} differs on run {i} (threads {threads})")),
        }
    }
    Ok(())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records = dir.path().join("runs.jsonl");
    let records_str = records.to_str().unwrap();
    cli(&[
        "synth",
        "--alpha",
        "0.08",
        "--log-c",
        "3",
        "--sigma-pre",
        "0.03",
        "--sigma-fin",
        "0.01",
        "--seed",
        "17",
        "--out",
        records_str,
    ])?;
    let loss = dir.path().join("loss.jsonl");
    let loss_str = loss.to_str().unwrap();
    cli(&[
        "synth",
        "--alpha",
        "-0.07",
        "--log-c",
        "3",
        "--sigma-fin",
        "0.01",
        "--seed",
        "18",
        "--direction",
        "min",
        "--metric",
        "loss",
        "--out",
        loss_str,
    ])?;
    let pair = dir.path().join("pair.jsonl");
    let pair_str = pair.to_str().unwrap();
    let mut text = std::fs::read_to_string(&records).unwrap();
    cli(&[
        "synth",
        "--alpha",
        "0.08",
        "--log-c",
        "3.02",
        "--sigma-fin",
        "0.01",
        "--seed",
        "19",
        "--family",
        "other",
        "--out",
        pair_str,
    ])?;
    text.push_str(&std::fs::read_to_string(&pair).unwrap());
    std::fs::write(&pair, text).unwrap();

    let boot = ["--B", "300", "--seed", "5"];
    let cases: Vec<(&str, Vec<&str>, Option<&str>)> = vec![
        (
            "synth",
            vec![
                "synth",
                "--alpha",
                "0.1",
                "--log-c",
                "2",
                "--sigma-pre",
                "0.02",
                "--sigma-fin",
                "0.01",
                "--seed",
                "4",
            ],
            Some("--out"),
        ),
        (
            "bootstrap",
            [&["bootstrap", "--input", records_str][..], &boot].concat(),
            None,
        ),
        (
            "bootstrap-naive",
            [&["bootstrap", "--input", records_str, "--mode", "naive"][..], &boot].concat(),
            None,
        ),
        (
            "predict",
            [
                &[
                    "predict",
                    "--input",
                    records_str,
                    "--target-layers",
                    "12",
                    "--target-hidden",
                    "768",
                ][..],
                &boot,
            ]
            .concat(),
            None,
        ),
        (
            "select",
            [
                &[
                    "select",
                    "--input",
                    pair_str,
                    "--family-a",
                    "synth",
                    "--family-b",
                    "other",
                    "--target-layers",
                    "12",
                    "--target-hidden",
                    "768",
                ][..],
                &boot,
            ]
            .concat(),
            None,
        ),
        (
            "fit-outlier",
            [
                &[
                    "diagnose",
                    "fit-outlier",
                    "--input",
                    loss_str,
                    "--holdout-layers",
                    "8",
                    "--observed",
                    "25",
                ][..],
                &boot,
            ]
            .concat(),
            None,
        ),
        (
            "plot",
            vec![
                "plot",
                "--input",
                records_str,
                "--seed",
                "6",
                "--B",
                "300",
                "--holdout-layers",
                "8",
            ],
            Some("--out"),
        ),
    ];
    for (name, args, file_flag) in &cases {
        stable(dir.path(), name, args, *file_flag)?;
    }
    Ok(format!(
        "{} randomized commands byte-identical across reruns and 1 vs 4 threads",
        cases.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("parameter arithmetic", parameter_arithmetic),
        ("noiseless round trip", noiseless_round_trip),
        ("noisy recovery", noisy_recovery),
        ("bootstrap coverage", bootstrap_coverage),
        ("hierarchical conservatism", hierarchical_conservatism),
        ("holdout error", holdout_error),
        ("selection sign agreement", selection_sign),
        ("relative error sign", re_convention),
        ("early stopping trace", early_stopping),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
