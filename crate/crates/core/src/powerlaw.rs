//! Power-law fits `y = exp(β)·x^α`, estimated by ordinary least squares on
//! `(ln x, ln y)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::RunSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Space in which residuals for R² are measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualSpace {
    #[default]
    Log,
    Linear,
}

impl fmt::Display for ResidualSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResidualSpace::Log => "log",
            ResidualSpace::Linear => "linear",
        })
    }
}

impl FromStr for ResidualSpace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "log" => Ok(ResidualSpace::Log),
            "linear" => Ok(ResidualSpace::Linear),
            other => Err(format!("unknown residual space `{other}` (expected log|linear)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub ss_res: f64,
    pub ss_tot: f64,
    pub n_points: usize,
    pub residual_space: ResidualSpace,
    /// Depth filter the fit was restricted to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_layers: Option<u32>,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        predict_at(self.alpha, self.beta, x)
    }

    pub fn predict_log(&self, x: f64) -> f64 {
        self.alpha * x.ln() + self.beta
    }
}

/// `exp(β)·x^α`, evaluated in log space.
pub fn predict_at(alpha: f64, beta: f64, x: f64) -> f64 {
    (alpha * x.ln() + beta).exp()
}

/// Mean computed around the first element; exact for constant input.
fn shifted_mean(values: &[f64]) -> f64 {
    let origin = values[0];
    origin + values.iter().map(|v| v - origin).sum::<f64>() / values.len() as f64
}

fn validate(points: &[Point]) -> Result<()> {
    for p in points {
        if !(p.x > 0.0 && p.x.is_finite()) {
            return Err(Error::invalid(
                "x",
                format!("coordinates must be positive and finite, got {}", p.x),
            ));
        }
        if !(p.y > 0.0 && p.y.is_finite()) {
            return Err(Error::invalid(
                "y",
                format!("coordinates must be positive and finite, got {}", p.y),
            ));
        }
    }
    let distinct = count_distinct_x(points);
    if distinct < 2 {
        return Err(Error::InsufficientScales { found: distinct });
    }
    Ok(())
}

pub(crate) fn count_distinct_x(points: &[Point]) -> usize {
    let mut xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

/// Closed-form OLS slope and intercept of `ln y` on `ln x`.
pub(crate) fn ols_log(points: &[Point]) -> (f64, f64) {
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.y.ln()).collect();
    let mx = shifted_mean(&lx);
    let my = shifted_mean(&ly);
    // Σdx = 0, so centring y on its first value leaves Sxy unchanged and
    // makes constant-y input produce an exact zero slope.
    let (sxx, sxy) = lx.iter().zip(&ly).fold((0.0, 0.0), |(sxx, sxy), (x, y)| {
        let dx = x - mx;
        (sxx + dx * dx, sxy + dx * (y - ly[0]))
    });
    let alpha = sxy / sxx;
    (alpha, my - alpha * mx)
}

/// Residual and total sums of squares of the line `(alpha, beta)` in `space`.
pub fn sums_of_squares(points: &[Point], alpha: f64, beta: f64, space: ResidualSpace) -> (f64, f64) {
    let (observed, fitted): (Vec<f64>, Vec<f64>) = match space {
        ResidualSpace::Log => points.iter().map(|p| (p.y.ln(), alpha * p.x.ln() + beta)).unzip(),
        ResidualSpace::Linear => points.iter().map(|p| (p.y, predict_at(alpha, beta, p.x))).unzip(),
    };
    let mean = shifted_mean(&observed);
    let ss_res = observed.iter().zip(&fitted).map(|(o, f)| (o - f).powi(2)).sum();
    let ss_tot = observed.iter().map(|o| (o - mean).powi(2)).sum();
    (ss_res, ss_tot)
}

fn r_squared_from(points: &[Point], ss_res: f64, ss_tot: f64, space: ResidualSpace) -> Result<f64> {
    if ss_tot > 0.0 {
        return Ok(1.0 - ss_res / ss_tot);
    }
    // Constant observations: a fit that reproduces them up to rounding is
    // perfect; anything else leaves R² undefined.
    let scale = points
        .iter()
        .map(|p| match space {
            ResidualSpace::Log => p.y.ln().abs(),
            ResidualSpace::Linear => p.y,
        })
        .fold(1.0f64, f64::max);
    let tol = points.len() as f64 * (1e-12 * scale).powi(2);
    if ss_res <= tol {
        Ok(1.0)
    } else {
        Err(Error::UndefinedRSquared { ss_res })
    }
}

/// Fits `ln y = α ln x + β` by least squares, with R² in log space.
pub fn fit_line(points: &[Point]) -> Result<FitResult> {
    fit_line_in(points, ResidualSpace::Log)
}

/// Fits in log space and reports R² in `space`.
pub fn fit_line_in(points: &[Point], space: ResidualSpace) -> Result<FitResult> {
    validate(points)?;
    let (alpha, beta) = ols_log(points);
    let (ss_res, ss_tot) = sums_of_squares(points, alpha, beta, space);
    let r_squared = r_squared_from(points, ss_res, ss_tot, space)?;
    Ok(FitResult {
        alpha,
        beta,
        r_squared,
        ss_res,
        ss_tot,
        n_points: points.len(),
        residual_space: space,
        min_layers: None,
    })
}

/// Goodness of fit of `fit` on `points`, measured in `space`.
pub fn r_squared(points: &[Point], fit: &FitResult, space: ResidualSpace) -> Result<f64> {
    validate(points)?;
    let (ss_res, ss_tot) = sums_of_squares(points, fit.alpha, fit.beta, space);
    r_squared_from(points, ss_res, ss_tot, space)
}

/// Fit restricted to runs with at least `min_layers` layers.
///
/// With `min_layers == 1` nothing is filtered and records without layer
/// information are allowed.
pub fn fit_filtered(runset: &RunSet, min_layers: u32, space: ResidualSpace) -> Result<FitResult> {
    if min_layers == 0 {
        return Err(Error::invalid("min_layers", "must be at least 1"));
    }
    if min_layers == 1 {
        let mut fit = fit_line_in(&runset.points(), space)?;
        fit.min_layers = Some(1);
        return Ok(fit);
    }
    if let Some(r) = runset.records().iter().find(|r| r.scale.layers.is_none()) {
        return Err(Error::MissingLayers { params: r.scale.params });
    }
    let kept = runset.filtered(|r| r.scale.layers.is_some_and(|l| l >= min_layers));
    let mut fit = fit_line_in(&kept.points(), space)?;
    fit.min_layers = Some(min_layers);
    Ok(fit)
}
