//! Predictive power of fitted laws: relative errors, holdout extrapolation,
//! and comparisons between two method families at a larger target scale.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap, BootstrapConfig, Interval};
use crate::error::{Error, Result};
use crate::powerlaw::{fit_line, FitResult};
use crate::records::{Direction, RunSet, ScaleSpec};

pub const DEFAULT_R2_THRESHOLD: f64 = 0.95;

/// Mean relative error `(1/k)·Σ|y − ŷ|/y`, as a fraction.
pub fn mre(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::invalid(
            "predicted",
            format!("{} actual values but {} predictions", actual.len(), predicted.len()),
        ));
    }
    if actual.is_empty() {
        return Err(Error::invalid("actual", "need at least one value"));
    }
    let mut total = 0.0;
    for (&y, &y_hat) in actual.iter().zip(predicted) {
        total += re(y, y_hat)?.abs();
    }
    Ok(total / actual.len() as f64)
}

/// Signed relative error `(y − ŷ)/y`; negative when the prediction overshoots.
pub fn re(actual: f64, predicted: f64) -> Result<f64> {
    if !(actual > 0.0 && actual.is_finite()) {
        return Err(Error::invalid("actual", format!("must be positive, got {actual}")));
    }
    Ok((actual - predicted) / actual)
}

/// Inclusive range of layer counts, written `A-B` (or just `A`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRange {
    pub lo: u32,
    pub hi: u32,
}

impl LayerRange {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo == 0 || hi < lo {
            return Err(Error::invalid("layers", format!("bad layer range {lo}-{hi}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, layers: u32) -> bool {
        self.lo <= layers && layers <= self.hi
    }

    pub fn overlaps(&self, other: &LayerRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl fmt::Display for LayerRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for LayerRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| format!("bad layer count `{v}` in range `{s}`"))
        };
        let (lo, hi) = match s.split_once('-') {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        LayerRange::new(lo, hi).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPrediction {
    pub scale: ScaleSpec,
    pub actual: Option<f64>,
    pub predicted: f64,
    pub re: Option<f64>,
    pub band: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub fit: FitResult,
    pub k: usize,
    pub targets: Vec<TargetPrediction>,
    /// Mean relative error over targets that have an actual value.
    pub mre: Option<f64>,
}

impl PredictionReport {
    fn new(fit: FitResult, targets: Vec<TargetPrediction>) -> Result<Self> {
        let (actual, predicted): (Vec<f64>, Vec<f64>) = targets
            .iter()
            .filter_map(|t| t.actual.map(|a| (a, t.predicted)))
            .unzip();
        let mre = if actual.is_empty() {
            None
        } else {
            Some(mre(&actual, &predicted)?)
        };
        Ok(Self {
            fit,
            k: targets.len(),
            targets,
            mre,
        })
    }
}

fn target_prediction(
    fit: &FitResult,
    scale: ScaleSpec,
    actual: Option<f64>,
    band: Option<Interval>,
) -> Result<TargetPrediction> {
    let predicted = fit.predict(scale.x());
    let re = actual.map(|a| re(a, predicted)).transpose()?;
    Ok(TargetPrediction {
        scale,
        actual,
        predicted,
        re,
        band,
    })
}

/// Fits on runs whose depth lies in `train` and predicts each scale in
/// `test`. The actual value of a test scale is the mean over its runs.
pub fn holdout_eval(runset: &RunSet, train: LayerRange, test: LayerRange) -> Result<PredictionReport> {
    if train.overlaps(&test) {
        return Err(Error::invalid(
            "layers",
            format!("train range {train} overlaps test range {test}"),
        ));
    }
    if let Some(r) = runset.records().iter().find(|r| r.scale.layers.is_none()) {
        return Err(Error::MissingLayers { params: r.scale.params });
    }
    let in_range =
        |range: LayerRange| move |r: &crate::records::RunRecord| r.scale.layers.is_some_and(|l| range.contains(l));
    let train_set = runset.filtered(in_range(train));
    let test_set = runset.filtered(in_range(test));
    if test_set.is_empty() {
        return Err(Error::invalid("test_layers", format!("no runs with depth in {test}")));
    }
    let fit = fit_line(&train_set.points())?;
    let targets = test_set
        .groups()
        .into_iter()
        .map(|g| {
            let mean = g.records.iter().map(|r| r.value).sum::<f64>() / g.records.len() as f64;
            target_prediction(&fit, g.scale.clone(), Some(mean), None)
        })
        .collect::<Result<_>>()?;
    PredictionReport::new(fit, targets)
}

/// Point prediction and bootstrap band at `target`, fitted on all runs.
pub fn extrapolate(
    runset: &RunSet,
    target: &ScaleSpec,
    actual: Option<f64>,
    cfg: &BootstrapConfig,
) -> Result<PredictionReport> {
    let fit = fit_line(&runset.points())?;
    let band = bootstrap(runset, cfg, &[target.x()])?;
    let at_target = band.point_band[0];
    let tp = target_prediction(
        &fit,
        target.clone(),
        actual,
        Some(Interval {
            lo: at_target.y_lo,
            hi: at_target.y_hi,
        }),
    )?;
    PredictionReport::new(fit, vec![tp])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub family: String,
    pub fit: FitResult,
    pub gate_passed: bool,
    pub predicted: f64,
    pub band: Interval,
    pub actual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub task: String,
    pub metric: String,
    pub direction: Direction,
    pub target: ScaleSpec,
    pub r2_threshold: f64,
    pub a: FamilyOutcome,
    pub b: FamilyOutcome,
    /// Both fits pass the R² gate.
    pub reliable: bool,
    /// Predicted advantage of family b at the target; positive favours b.
    pub predicted_gap: f64,
    pub actual_gap: Option<f64>,
    pub sign_agreement: Option<bool>,
}

/// Gap oriented so that a positive value means `b` is better.
fn oriented_gap(direction: Direction, a: f64, b: f64) -> f64 {
    match direction {
        Direction::Maximize => b - a,
        Direction::Minimize => a - b,
    }
}

/// R² gate for trusting an extrapolated comparison.
pub fn passes_gate(r_squared: f64, threshold: f64) -> bool {
    r_squared >= threshold
}

pub fn same_sign(predicted_gap: f64, actual_gap: f64) -> bool {
    (predicted_gap >= 0.0) == (actual_gap >= 0.0)
}

/// Compares two families by extrapolating both to `target`.
///
/// `actuals`, when present, holds the observed `(a, b)` values at the target.
pub fn select_model(
    runset_a: &RunSet,
    runset_b: &RunSet,
    target: &ScaleSpec,
    r2_threshold: f64,
    cfg: &BootstrapConfig,
    actuals: Option<(f64, f64)>,
) -> Result<SelectionReport> {
    let checks = [
        ("task", &runset_a.task, &runset_b.task),
        ("metric", &runset_a.metric, &runset_b.metric),
    ];
    for (field, left, right) in checks {
        if left != right {
            return Err(Error::Mismatch {
                field,
                left: left.clone(),
                right: right.clone(),
            });
        }
    }
    if runset_a.direction != runset_b.direction {
        return Err(Error::Mismatch {
            field: "direction",
            left: runset_a.direction.to_string(),
            right: runset_b.direction.to_string(),
        });
    }
    if !(r2_threshold > 0.0 && r2_threshold <= 1.0) {
        return Err(Error::invalid(
            "r2_threshold",
            format!("must lie in (0, 1], got {r2_threshold}"),
        ));
    }

    let outcome = |set: &RunSet, actual: Option<f64>| -> Result<FamilyOutcome> {
        let report = extrapolate(set, target, actual, cfg)?;
        let tp = &report.targets[0];
        Ok(FamilyOutcome {
            family: set.family.clone(),
            gate_passed: passes_gate(report.fit.r_squared, r2_threshold),
            predicted: tp.predicted,
            band: tp.band.expect("extrapolate always fills the band"),
            actual,
            fit: report.fit,
        })
    };
    let a = outcome(runset_a, actuals.map(|(a, _)| a))?;
    let b = outcome(runset_b, actuals.map(|(_, b)| b))?;

    let direction = runset_a.direction;
    let predicted_gap = oriented_gap(direction, a.predicted, b.predicted);
    let actual_gap = actuals.map(|(ya, yb)| oriented_gap(direction, ya, yb));
    let reliable = a.gate_passed && b.gate_passed;
    if !reliable {
        log::warn!(
            "comparison of {} vs {} is unreliable: R² gate {} not met",
            a.family,
            b.family,
            r2_threshold
        );
    }
    Ok(SelectionReport {
        task: runset_a.task.clone(),
        metric: runset_a.metric.clone(),
        direction,
        target: target.clone(),
        r2_threshold,
        reliable,
        predicted_gap,
        sign_agreement: actual_gap.map(|g| same_sign(predicted_gap, g)),
        actual_gap,
        a,
        b,
    })
}
