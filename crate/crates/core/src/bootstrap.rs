//! Bootstrap confidence intervals for power-law fits.
//!
//! Each replicate resamples the run set with a [`Resampler`], refits the
//! line, and records its slope and intercept. Intervals are empirical
//! percentiles of the replicate slopes, intercepts, and predictions along a
//! grid of abscissae.
//!
//! Replicate `i` draws from the random substream `(rng_seed, i)`, so results
//! do not depend on how replicates are scheduled across threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::powerlaw::{count_distinct_x, ols_log, Point};
use crate::records::RunSet;
use crate::registry::Registry;
use crate::rng::{substream, StreamRng};

pub const DEFAULT_REPLICATES: usize = 1000;
pub const DEFAULT_LO_PCT: f64 = 2.5;
pub const DEFAULT_HI_PCT: f64 = 97.5;
pub const DEFAULT_MAX_REDRAWS: usize = 100;

/// Strategy for drawing one bootstrap replicate from scale-grouped points.
pub trait Resampler: Send + Sync {
    fn name(&self) -> &'static str;

    /// Appends one replicate's points to `out`. `groups` holds the points of
    /// each distinct scale.
    fn draw(&self, groups: &[Vec<Point>], rng: &mut StreamRng, out: &mut Vec<Point>);
}

/// Two-level resampling: pick scales with replacement, then runs with
/// replacement within each picked scale. Captures between-scale variance
/// (e.g. from pretraining seeds) that pooled resampling misses.
#[derive(Debug, Default, Clone, Copy)]
pub struct Hierarchical;

impl Resampler for Hierarchical {
    fn name(&self) -> &'static str {
        "hierarchical"
    }

    fn draw(&self, groups: &[Vec<Point>], rng: &mut StreamRng, out: &mut Vec<Point>) {
        let m = groups.len();
        for _ in 0..m {
            let group = &groups[rng.random_range(0..m)];
            for _ in 0..group.len() {
                out.push(group[rng.random_range(0..group.len())]);
            }
        }
    }
}

/// Pooled resampling: draw `b` points with replacement from all `b` points.
#[derive(Debug, Default, Clone, Copy)]
pub struct Naive;

impl Resampler for Naive {
    fn name(&self) -> &'static str {
        "naive"
    }

    fn draw(&self, groups: &[Vec<Point>], rng: &mut StreamRng, out: &mut Vec<Point>) {
        let b: usize = groups.iter().map(Vec::len).sum();
        for _ in 0..b {
            let mut k = rng.random_range(0..b);
            for g in groups {
                if k < g.len() {
                    out.push(g[k]);
                    break;
                }
                k -= g.len();
            }
        }
    }
}

/// Built-in resamplers, keyed by name.
pub fn resamplers() -> Registry<dyn Resampler> {
    let mut reg: Registry<dyn Resampler> = Registry::new("bootstrap mode");
    reg.register("hierarchical", || Box::new(Hierarchical))
        .register("naive", || Box::new(Naive));
    reg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub lo_pct: f64,
    pub hi_pct: f64,
    /// Registered resampler name.
    pub mode: String,
    pub rng_seed: u64,
    /// Attempts allowed per replicate before giving up on degenerate draws.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: DEFAULT_REPLICATES,
            lo_pct: DEFAULT_LO_PCT,
            hi_pct: DEFAULT_HI_PCT,
            mode: "hierarchical".into(),
            rng_seed: 0,
            max_redraws: DEFAULT_MAX_REDRAWS,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be positive"));
        }
        if self.max_redraws == 0 {
            return Err(Error::invalid("max_redraws", "must be positive"));
        }
        let in_range = |p: f64| (0.0..=100.0).contains(&p);
        if !in_range(self.lo_pct) || !in_range(self.hi_pct) || self.lo_pct >= self.hi_pct {
            return Err(Error::invalid(
                "percentiles",
                format!("need 0 <= lo < hi <= 100, got lo={} hi={}", self.lo_pct, self.hi_pct),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPoint {
    pub x: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBand {
    pub mode: String,
    pub lo_pct: f64,
    pub hi_pct: f64,
    pub slope_ci: Interval,
    pub intercept_ci: Interval,
    pub point_band: Vec<BandPoint>,
    pub replicates_used: usize,
    pub replicate_slopes: Vec<f64>,
    pub replicate_intercepts: Vec<f64>,
}

impl BootstrapBand {
    /// Band at `x`, computed from the stored replicates.
    pub fn band_at(&self, x: f64) -> Result<Interval> {
        band_at(
            &self.replicate_slopes,
            &self.replicate_intercepts,
            x,
            self.lo_pct,
            self.hi_pct,
        )
    }
}

/// Percentile `p` (0–100) by linear interpolation between order statistics
/// at zero-based rank `p/100·(n−1)`.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "percentile of an empty sample"));
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::invalid("p", format!("percentile must lie in [0, 100], got {p}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

pub(crate) fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

fn interval(samples: &[f64], lo_pct: f64, hi_pct: f64) -> Interval {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Interval {
        lo: percentile_sorted(&sorted, lo_pct),
        hi: percentile_sorted(&sorted, hi_pct),
    }
}

/// Prediction band at `x` from replicate coefficients. Percentiles are taken
/// over log-space predictions and mapped back with `exp`.
pub fn band_at(slopes: &[f64], intercepts: &[f64], x: f64, lo_pct: f64, hi_pct: f64) -> Result<Interval> {
    if slopes.is_empty() || slopes.len() != intercepts.len() {
        return Err(Error::invalid(
            "replicates",
            "need matching, nonempty slope and intercept lists",
        ));
    }
    if x.is_nan() || x <= 0.0 {
        return Err(Error::invalid("x", format!("must be positive, got {x}")));
    }
    let lx = x.ln();
    let logs: Vec<f64> = slopes.iter().zip(intercepts).map(|(a, b)| a * lx + b).collect();
    let iv = interval(&logs, lo_pct, hi_pct);
    Ok(Interval {
        lo: iv.lo.exp(),
        hi: iv.hi.exp(),
    })
}

/// Geometrically spaced grid of `n` points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::invalid("grid", format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if n == 0 {
        return Err(Error::invalid("grid", "need at least one grid point"));
    }
    if n == 1 || lo == hi {
        return Ok(vec![lo]);
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            i if i == n - 1 => hi,
            i => (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

/// Bootstrap using the resampler registered under `cfg.mode`.
pub fn bootstrap(runset: &RunSet, cfg: &BootstrapConfig, grid: &[f64]) -> Result<BootstrapBand> {
    let resampler = resamplers().create(&cfg.mode)?;
    bootstrap_with(resampler.as_ref(), runset, cfg, grid)
}

/// Hierarchical bootstrap regardless of `cfg.mode`.
pub fn hierarchical_bootstrap(runset: &RunSet, cfg: &BootstrapConfig, grid: &[f64]) -> Result<BootstrapBand> {
    bootstrap_with(&Hierarchical, runset, cfg, grid)
}

/// Naive pooled bootstrap regardless of `cfg.mode`.
pub fn naive_bootstrap(runset: &RunSet, cfg: &BootstrapConfig, grid: &[f64]) -> Result<BootstrapBand> {
    bootstrap_with(&Naive, runset, cfg, grid)
}

pub fn bootstrap_with(
    resampler: &dyn Resampler,
    runset: &RunSet,
    cfg: &BootstrapConfig,
    grid: &[f64],
) -> Result<BootstrapBand> {
    cfg.validate()?;
    if runset.is_empty() {
        return Err(Error::invalid("runset", "cannot bootstrap an empty run set"));
    }
    if let Some(&x) = grid.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("grid", format!("abscissae must be positive, got {x}")));
    }
    let groups: Vec<Vec<Point>> = runset
        .groups()
        .iter()
        .map(|g| g.records.iter().map(|r| r.point()).collect())
        .collect();

    let coefficients: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|i| replicate(resampler, &groups, cfg, i))
        .collect::<Result<_>>()?;
    let (slopes, intercepts): (Vec<f64>, Vec<f64>) = coefficients.into_iter().unzip();

    let point_band = grid
        .iter()
        .map(|&x| {
            band_at(&slopes, &intercepts, x, cfg.lo_pct, cfg.hi_pct).map(|iv| BandPoint {
                x,
                y_lo: iv.lo,
                y_hi: iv.hi,
            })
        })
        .collect::<Result<_>>()?;

    Ok(BootstrapBand {
        mode: resampler.name().to_string(),
        lo_pct: cfg.lo_pct,
        hi_pct: cfg.hi_pct,
        slope_ci: interval(&slopes, cfg.lo_pct, cfg.hi_pct),
        intercept_ci: interval(&intercepts, cfg.lo_pct, cfg.hi_pct),
        point_band,
        replicates_used: slopes.len(),
        replicate_slopes: slopes,
        replicate_intercepts: intercepts,
    })
}

fn replicate(
    resampler: &dyn Resampler,
    groups: &[Vec<Point>],
    cfg: &BootstrapConfig,
    index: usize,
) -> Result<(f64, f64)> {
    let mut rng = substream(cfg.rng_seed, index as u64);
    let mut pool = Vec::with_capacity(groups.iter().map(Vec::len).sum());
    for _ in 0..cfg.max_redraws {
        pool.clear();
        resampler.draw(groups, &mut rng, &mut pool);
        if count_distinct_x(&pool) >= 2 {
            return Ok(ols_log(&pool));
        }
    }
    Err(Error::DegenerateBootstrap {
        replicate: index,
        redraws: cfg.max_redraws,
    })
}
