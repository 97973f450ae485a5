//! Convergence diagnostics for logged runs.
//!
//! Early stopping is replayed over an evaluation-loss curve, one curve point
//! per evaluation; `patience` counts evaluations, not optimizer steps. A run
//! is suspected to be under-trained when its final loss sits above the
//! bootstrap band of the law fitted on the other scales.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap, BootstrapConfig, Interval};
use crate::error::{Error, Result};
use crate::powerlaw::fit_line;
use crate::records::{Direction, RunSet, ScaleSpec};

/// Relative slack applied to band edges so that rounding in the replicate
/// fits cannot flag a point lying on the law.
pub const BAND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub eval_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    points: Vec<CurvePoint>,
}

impl LossCurve {
    pub fn new(points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("curve", "needs at least one point"));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.eval_loss > 0.0 && p.eval_loss.is_finite()) {
                return Err(Error::invalid(
                    "eval_loss",
                    format!("point {i}: must be positive, got {}", p.eval_loss),
                ));
            }
        }
        if let Some(w) = points.windows(2).find(|w| w[1].step <= w[0].step) {
            return Err(Error::invalid(
                "step",
                format!("steps must strictly increase ({} then {})", w[0].step, w[1].step),
            ));
        }
        Ok(Self { points })
    }

    /// Curve with steps `0, 1, 2, …`.
    pub fn from_losses(losses: &[f64]) -> Result<Self> {
        Self::new(
            losses
                .iter()
                .enumerate()
                .map(|(i, &eval_loss)| CurvePoint {
                    step: i as u64,
                    eval_loss,
                })
                .collect(),
        )
    }

    /// Reads a two-column `step,eval_loss` CSV with a header row.
    pub fn from_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for (i, row) in rdr.deserialize::<CurvePoint>().enumerate() {
            let point = row.map_err(|e| Error::Parse {
                row: i + 2,
                message: e.to_string(),
            })?;
            points.push(point);
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopPolicy {
    pub patience: usize,
    pub min_decrease: f64,
}

impl EarlyStopPolicy {
    pub fn new(patience: usize, min_decrease: f64) -> Result<Self> {
        if patience == 0 {
            return Err(Error::invalid("patience", "must be at least 1"));
        }
        if !(min_decrease >= 0.0 && min_decrease.is_finite()) {
            return Err(Error::invalid(
                "min_decrease",
                format!("must be nonnegative, got {min_decrease}"),
            ));
        }
        Ok(Self { patience, min_decrease })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub stop_index: usize,
    pub best_index: usize,
    pub stopped: bool,
}

/// Replays early stopping. An evaluation improves only if its loss is
/// strictly below `best − min_decrease`; training stops once `patience`
/// consecutive evaluations fail to improve.
pub fn early_stop(curve: &LossCurve, policy: &EarlyStopPolicy) -> EarlyStop {
    let mut best = f64::INFINITY;
    let mut best_index = 0;
    let mut stale = 0;
    for (i, p) in curve.points.iter().enumerate() {
        if p.eval_loss < best - policy.min_decrease {
            best = p.eval_loss;
            best_index = i;
            stale = 0;
        } else {
            stale += 1;
            if stale >= policy.patience {
                return EarlyStop {
                    stop_index: i,
                    best_index,
                    stopped: true,
                };
            }
        }
    }
    EarlyStop {
        stop_index: curve.points.len() - 1,
        best_index,
        stopped: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub policy: EarlyStopPolicy,
    pub stop_index: usize,
    pub stop_step: u64,
    pub best_index: usize,
    pub stopped: bool,
    pub loss_at_best: f64,
}

/// One early-stopping replay per policy, sorted by patience.
pub fn compare_policies(curve: &LossCurve, policies: &[EarlyStopPolicy]) -> Vec<PolicyOutcome> {
    let mut rows: Vec<PolicyOutcome> = policies
        .iter()
        .map(|policy| {
            let out = early_stop(curve, policy);
            PolicyOutcome {
                policy: *policy,
                stop_index: out.stop_index,
                stop_step: curve.points[out.stop_index].step,
                best_index: out.best_index,
                stopped: out.stopped,
                loss_at_best: curve.points[out.best_index].eval_loss,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.policy
            .patience
            .cmp(&b.policy.patience)
            .then(a.policy.min_decrease.total_cmp(&b.policy.min_decrease))
    });
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceFlag {
    Consistent,
    SuspectUndertrained,
    SuspectOverfitFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub scale: ScaleSpec,
    pub observed: f64,
    pub predicted: f64,
    pub band: Interval,
    pub flag: ConvergenceFlag,
}

/// Places a minimized loss relative to a prediction band.
pub fn classify(observed: f64, band: Interval) -> ConvergenceFlag {
    if observed > band.hi * (1.0 + BAND_TOLERANCE) {
        ConvergenceFlag::SuspectUndertrained
    } else if observed < band.lo * (1.0 - BAND_TOLERANCE) {
        ConvergenceFlag::SuspectOverfitFit
    } else {
        ConvergenceFlag::Consistent
    }
}

/// Checks a held-out scale's observed loss against the law fitted on the
/// remaining scales.
pub fn flag_undertrained(
    runset: &RunSet,
    held_out: &ScaleSpec,
    observed: f64,
    cfg: &BootstrapConfig,
) -> Result<ConvergenceVerdict> {
    if runset.direction == Direction::Maximize {
        return Err(Error::invalid(
            "direction",
            "under-training checks need a minimized metric such as a loss",
        ));
    }
    if !(observed > 0.0 && observed.is_finite()) {
        return Err(Error::invalid("observed", format!("must be positive, got {observed}")));
    }
    if runset.records().iter().any(|r| r.scale.params == held_out.params) {
        return Err(Error::invalid(
            "held_out",
            format!("run set still contains the held-out scale ({} params)", held_out.params),
        ));
    }
    let fit = fit_line(&runset.points())?;
    let band = bootstrap(runset, cfg, &[held_out.x()])?;
    let at = band.point_band[0];
    let band = Interval {
        lo: at.y_lo,
        hi: at.y_hi,
    };
    Ok(ConvergenceVerdict {
        scale: held_out.clone(),
        observed,
        predicted: fit.predict(held_out.x()),
        flag: classify(observed, band),
        band,
    })
}
