//! Subcommand bodies. Each one loads its inputs, calls library operations,
//! and packages the results into a [`Report`].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use scalelaw::records::{write_csv, write_jsonl};
use scalelaw::{
    aspect_ratio_scales, bootstrap, compare_policies, extrapolate, fit_filtered, fit_line, flag_undertrained, generate,
    group, holdout_eval, ingest, log_grid, savings_ratio, select_model, BootstrapConfig, ComputeEstimate,
    EarlyStopPolicy, Format, LossCurve, Point, RunSet, ScaleSpec, SynthSpec, TokenAssumption,
};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::plot::{render_plot, PlotPoint, PlotSpec, Series};
use crate::report::Report;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn report(command: &str, inputs: impl Serialize, results: impl Serialize) -> Result<Report> {
    Report::new(command, inputs, results).map_err(|e| CliError::Data(e.to_string()))
}

fn load_records(input: &Path, format: Option<Format>) -> Result<Vec<scalelaw::RunRecord>> {
    let format = format.unwrap_or_else(|| Format::from_path(input));
    ingest(input, format).map_err(|e| CliError::Data(format!("{}: {e}", input.display())))
}

/// Picks the single run set matching the given filters.
fn select_runset(
    records: &[scalelaw::RunRecord],
    task: Option<&str>,
    family: Option<&str>,
    metric: Option<&str>,
) -> Result<RunSet> {
    let groups = group(records)?;
    let mut matching: Vec<RunSet> = groups
        .into_values()
        .filter(|s| {
            task.is_none_or(|t| s.task == t)
                && family.is_none_or(|f| s.family == f)
                && metric.is_none_or(|m| s.metric == m)
        })
        .collect();
    match matching.len() {
        1 => {
            let set = matching.remove(0);
            log::info!(
                "selected {} ({} runs over {} scales)",
                set.key(),
                set.len(),
                set.scales().len()
            );
            Ok(set)
        }
        0 => Err(CliError::Data(format!(
            "no records match task={} family={} metric={}",
            task.unwrap_or("*"),
            family.unwrap_or("*"),
            metric.unwrap_or("*")
        ))),
        _ => Err(CliError::Data(format!(
            "selection is ambiguous; narrow it with --task/--family/--metric (candidates: {})",
            matching
                .iter()
                .map(|s| s.key().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn load_runset(data: &DataArgs) -> Result<RunSet> {
    let records = load_records(&data.input, data.input_format)?;
    select_runset(
        &records,
        data.task.as_deref(),
        data.family.as_deref(),
        data.metric.as_deref(),
    )
}

fn boot_config(b: &BootArgs) -> BootstrapConfig {
    BootstrapConfig {
        replicates: b.replicates,
        lo_pct: b.lo,
        hi_pct: b.hi,
        mode: b.mode.clone(),
        rng_seed: b.seed,
        max_redraws: b.max_redraws,
    }
}

fn target_scale(t: &TargetArgs) -> Result<ScaleSpec> {
    match (t.target_layers, t.target_hidden, t.target_params) {
        (Some(l), Some(h), None) => Ok(ScaleSpec::new(l, h)?),
        (None, None, Some(n)) => Ok(ScaleSpec::from_params(n)?),
        _ => Err(CliError::Usage(
            "a target is required: --target-layers L --target-hidden H, or --target-params N".into(),
        )),
    }
}

pub fn fit(args: &FitArgs) -> Result<Report> {
    let set = load_runset(&args.data)?;
    let fit = fit_filtered(&set, args.min_depth, args.r2_space)?;
    report(
        "fit",
        args,
        json!({
            "group": set.key(),
            "direction": set.direction,
            "scales": set.scales().len(),
            "group_sizes": set.group_sizes(),
            "fit": fit,
        }),
    )
}

pub fn bootstrap_cmd(args: &BootstrapArgs) -> Result<Report> {
    let set = load_runset(&args.data)?;
    let xs: Vec<f64> = set.scales().iter().map(ScaleSpec::x).collect();
    let lo = xs.first().copied().unwrap_or(1.0);
    let hi = xs.last().copied().unwrap_or(1.0).max(args.grid_max.unwrap_or(0.0));
    let grid = log_grid(lo, hi, args.grid_points)?;
    let fit = fit_line(&set.points())?;
    let band = bootstrap(&set, &boot_config(&args.boot), &grid)?;
    report(
        "bootstrap",
        args,
        json!({ "group": set.key(), "fit": fit, "band": band }),
    )
}

pub fn predict(args: &PredictArgs) -> Result<Report> {
    let target = target_scale(&args.target)?;
    let set = load_runset(&args.data)?;
    let prediction = extrapolate(&set, &target, args.actual, &boot_config(&args.boot))?;
    report("predict", args, json!({ "group": set.key(), "prediction": prediction }))
}

pub fn holdout(args: &HoldoutArgs) -> Result<Report> {
    let set = load_runset(&args.data)?;
    let prediction = holdout_eval(&set, args.train_layers, args.test_layers)?;
    report("holdout", args, json!({ "group": set.key(), "prediction": prediction }))
}

pub fn select(args: &SelectArgs) -> Result<Report> {
    let target = target_scale(&args.target)?;
    let records = load_records(&args.input, args.input_format)?;
    let metric_a = args.metric_a.as_deref().or(args.metric.as_deref());
    let metric_b = args.metric_b.as_deref().or(args.metric.as_deref());
    let a = select_runset(&records, args.task.as_deref(), Some(&args.family_a), metric_a)?;
    let b = select_runset(&records, args.task.as_deref(), Some(&args.family_b), metric_b)?;
    let actuals = args.actual_a.zip(args.actual_b);
    let selection = select_model(&a, &b, &target, args.r2_threshold, &boot_config(&args.boot), actuals)?;
    report(
        "select",
        args,
        json!({ "selection": selection, "unreliable": !selection.reliable }),
    )
}

#[derive(Serialize)]
struct ScaleCompute {
    scale: ScaleSpec,
    runs: usize,
    tokens: Option<u64>,
    flops: Option<u128>,
}

pub fn flops_cmd(args: &FlopsArgs) -> Result<Report> {
    if let (Some(n), Some(d)) = (args.params, args.tokens) {
        return report("flops", args, json!({ "estimate": ComputeEstimate::new(n, d) }));
    }
    let Some(input) = &args.input else {
        return Err(CliError::Usage(
            "either --params N --tokens D or --input FILE is required".into(),
        ));
    };
    let records = load_records(input, args.input_format)?;
    // One model per parameter count; its token count is the largest recorded.
    let mut per_scale: BTreeMap<u64, ScaleCompute> = BTreeMap::new();
    for r in &records {
        let entry = per_scale.entry(r.scale.params).or_insert_with(|| ScaleCompute {
            scale: r.scale.clone(),
            runs: 0,
            tokens: None,
            flops: None,
        });
        entry.runs += 1;
        entry.tokens = entry.tokens.max(r.tokens);
    }
    for sc in per_scale.values_mut() {
        sc.flops = sc.tokens.map(|d| ComputeEstimate::new(sc.scale.params, d).flops);
    }
    let scales: Vec<ScaleCompute> = per_scale.into_values().collect();
    let total_params: u128 = scales.iter().map(|s| s.scale.params as u128).sum();
    let total_flops: u128 = scales.iter().filter_map(|s| s.flops).sum();
    let missing_tokens = scales.iter().filter(|s| s.tokens.is_none()).count();

    let large = match (args.vs_layers, args.vs_hidden, args.vs_params) {
        (Some(l), Some(h), None) => Some(ScaleSpec::new(l, h)?),
        (None, None, Some(n)) => Some(ScaleSpec::from_params(n)?),
        (None, None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "use --vs-layers with --vs-hidden, or --vs-params".into(),
            ))
        }
    };
    let savings = match &large {
        Some(large) => {
            let small: Vec<ScaleSpec> = scales.iter().map(|s| s.scale.clone()).collect();
            let assumption = match args.vs_tokens {
                None => TokenAssumption::EqualTokens,
                Some(d) => TokenAssumption::SuppliedTokens {
                    small: scales.iter().map(|s| s.tokens).collect(),
                    large: Some(d),
                },
            };
            let ratio = savings_ratio(&small, large, &assumption)?;
            Some(json!({
                "large": large,
                "assumption": if args.vs_tokens.is_some() { "supplied_tokens" } else { "equal_tokens" },
                "ratio": ratio,
            }))
        }
        None => None,
    };
    report(
        "flops",
        args,
        json!({
            "scales": scales,
            "total_params": total_params,
            "total_flops": total_flops,
            "scales_missing_tokens": missing_tokens,
            "savings": savings,
            "note": "evaluation passes for early stopping are not counted",
        }),
    )
}

pub fn earlystop(args: &EarlyStopArgs) -> Result<Report> {
    let file = File::open(&args.curve).map_err(|e| CliError::Data(format!("{}: {e}", args.curve.display())))?;
    let curve = LossCurve::from_csv(file)?;
    let policies = args
        .patience
        .iter()
        .map(|&p| EarlyStopPolicy::new(p, args.min_decrease))
        .collect::<scalelaw::Result<Vec<_>>>()?;
    let rows = compare_policies(&curve, &policies);
    report(
        "diagnose earlystop",
        args,
        json!({ "curve_points": curve.points().len(), "policies": rows }),
    )
}

pub fn fit_outlier(args: &FitOutlierArgs) -> Result<Report> {
    let set = load_runset(&args.data)?;
    let at_depth = set
        .records()
        .iter()
        .find(|r| r.scale.layers == Some(args.holdout_layers))
        .map(|r| r.scale.clone());
    let held = match (at_depth, args.holdout_hidden) {
        (_, Some(h)) => ScaleSpec::new(args.holdout_layers, h)?,
        (Some(scale), None) => scale,
        (None, None) => {
            return Err(CliError::Data(format!(
                "no record has {} layers; pass --holdout-hidden to define the held-out scale",
                args.holdout_layers
            )))
        }
    };
    let rest = set.filtered(|r| r.scale.params != held.params);
    let verdict = flag_undertrained(&rest, &held, args.observed, &boot_config(&args.boot))?;
    report(
        "diagnose fit-outlier",
        args,
        json!({ "group": set.key(), "verdict": verdict }),
    )
}

fn truth_path(args: &SynthArgs) -> PathBuf {
    args.truth.clone().unwrap_or_else(|| {
        let mut name = args.out.as_os_str().to_owned();
        name.push(".truth.json");
        PathBuf::from(name)
    })
}

pub fn synth(args: &SynthArgs) -> Result<Report> {
    let scales = aspect_ratio_scales(args.aspect_ratio, args.layers.lo..=args.layers.hi)?;
    let spec = SynthSpec {
        true_alpha: args.alpha,
        true_log_c: args.log_c,
        scales,
        seeds_per_scale: args.seeds,
        sigma_pre: args.sigma_pre,
        sigma_fin: args.sigma_fin,
        rng_seed: args.seed,
        direction: args.direction,
        noise: args.noise.clone(),
        task: args.task.clone(),
        family: args.family.clone(),
        metric: args.metric.clone(),
    };
    let synthetic = generate(&spec)?;
    let io_err = |path: &Path, e: &dyn std::fmt::Display| CliError::Data(format!("{}: {e}", path.display()));
    let out = BufWriter::new(File::create(&args.out).map_err(|e| io_err(&args.out, &e))?);
    match Format::from_path(&args.out) {
        Format::Jsonl => write_jsonl(synthetic.runset.records(), out),
        Format::Csv => write_csv(synthetic.runset.records(), out),
    }
    .map_err(|e| io_err(&args.out, &e))?;

    let truth = truth_path(args);
    let sidecar = json!({ "spec": spec, "truth": synthetic.truth });
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(|e| io_err(&truth, &e))?;
    text.push('\n');
    fs::write(&truth, text).map_err(|e| io_err(&truth, &e))?;

    report(
        "synth",
        args,
        json!({
            "records": synthetic.runset.len(),
            "scales": synthetic.runset.scales().len(),
            "out": args.out,
            "truth_file": truth,
            "truth": synthetic.truth,
        }),
    )
}

pub fn plot(args: &PlotArgs) -> Result<Report> {
    let set = load_runset(&args.data)?;
    let held = |r: &scalelaw::RunRecord| {
        args.holdout_layers
            .is_some_and(|range| r.scale.layers.is_some_and(|l| range.contains(l)))
    };
    let fitted = set.filtered(|r| !held(r));
    let held_out: Vec<Point> = set.records().iter().filter(|r| held(r)).map(|r| r.point()).collect();
    let fit = fit_line(&fitted.points())?;

    let band = match args.seed {
        Some(seed) => {
            let xs: Vec<f64> = set.scales().iter().map(ScaleSpec::x).collect();
            let grid = log_grid(xs[0], xs[xs.len() - 1], args.grid_points)?;
            let cfg = BootstrapConfig {
                replicates: args.replicates,
                mode: args.mode.clone(),
                ..BootstrapConfig::with_seed(seed)
            };
            Some(bootstrap(&fitted, &cfg, &grid)?.point_band)
        }
        None => None,
    };
    let spec = PlotSpec {
        title: args.title.clone().unwrap_or_else(|| set.key().to_string()),
        x_label: "parameters (non-embedding)".into(),
        y_label: set.metric.clone(),
        series: vec![Series {
            label: set.family.clone(),
            points: fitted
                .records()
                .iter()
                .map(|r| PlotPoint {
                    x: r.scale.x(),
                    y: r.value,
                    group: r.pretrain_seed,
                })
                .collect(),
        }],
        fit: Some(fit.clone()),
        band,
        held_out,
    };
    let svg = render_plot(&spec).map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(&args.out, &svg).map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    report(
        "plot",
        args,
        json!({
            "out": args.out,
            "points": fitted.len(),
            "held_out": spec.held_out.len(),
            "sleeve": spec.band.is_some(),
            "fit": fit,
        }),
    )
}
