//! Scaling-law analysis for experiment records.
//!
//! Fit power laws `y = exp(β)·N^α` to metric-versus-parameter-count data,
//! quantify their uncertainty with hierarchical or pooled bootstrap, check
//! how well small-scale fits extrapolate, compare method families at a larger
//! target scale, and diagnose runs that stopped before converging.
//!
//! ```
//! use scalelaw::{fit_line, Point};
//!
//! let fit = fit_line(&[Point::new(1.0, 3.0), Point::new(2.0, 6.0), Point::new(4.0, 12.0)]).unwrap();
//! assert!((fit.alpha - 1.0).abs() < 1e-12);
//! assert!((fit.predict(8.0) - 24.0).abs() < 1e-9);
//! ```

pub mod bootstrap;
pub mod diagnose;
pub mod error;
pub mod powerlaw;
pub mod predict;
pub mod records;
pub mod registry;
pub mod rng;
pub mod scalecalc;
pub mod synth;

pub use bootstrap::{
    bootstrap, hierarchical_bootstrap, log_grid, naive_bootstrap, percentile, resamplers, BandPoint, BootstrapBand,
    BootstrapConfig, Interval, Resampler,
};
pub use diagnose::{
    compare_policies, early_stop, flag_undertrained, ConvergenceFlag, ConvergenceVerdict, EarlyStop, EarlyStopPolicy,
    LossCurve, PolicyOutcome,
};
pub use error::{Error, Result};
pub use powerlaw::{fit_filtered, fit_line, fit_line_in, predict_at, r_squared, FitResult, Point, ResidualSpace};
pub use predict::{
    extrapolate, holdout_eval, mre, re, select_model, LayerRange, PredictionReport, SelectionReport,
    DEFAULT_R2_THRESHOLD,
};
pub use records::{group, ingest, Direction, Format, GroupKey, RunRecord, RunSet, ScaleSpec};
pub use registry::Registry;
pub use scalecalc::{flops, param_count, savings_ratio, ComputeEstimate, TokenAssumption};
pub use synth::{aspect_ratio_scales, generate, noise_models, GroundTruth, NoiseModel, SynthSpec, Synthetic};
