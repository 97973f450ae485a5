//! Parameter counts, training FLOPs and compute-savings arithmetic.
//!
//! Parameter counts exclude word embeddings: `N = 12 · L · H²`. Training
//! compute for forward and backward passes is `C = 6 · N · D` for `D` tokens.
//! Evaluation passes used for early stopping are not counted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::records::ScaleSpec;

/// Non-embedding parameter count of a transformer with `layers` blocks of
/// width `hidden`.
pub fn param_count(layers: u64, hidden: u64) -> Result<u64> {
    if layers == 0 {
        return Err(Error::invalid("layers", "must be at least 1"));
    }
    if hidden == 0 {
        return Err(Error::invalid("hidden", "must be at least 1"));
    }
    12u64
        .checked_mul(layers)
        .and_then(|v| v.checked_mul(hidden))
        .and_then(|v| v.checked_mul(hidden))
        .ok_or(Error::Overflow("param_count"))
}

/// Training FLOPs for `params` parameters over `tokens` tokens.
pub fn flops(params: u64, tokens: u64) -> u128 {
    6 * params as u128 * tokens as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputeEstimate {
    pub params: u64,
    pub tokens: u64,
    pub flops: u128,
}

impl ComputeEstimate {
    pub fn new(params: u64, tokens: u64) -> Self {
        Self {
            params,
            tokens,
            flops: flops(params, tokens),
        }
    }
}

/// How token counts enter a compute comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenAssumption {
    /// Every model sees the same number of tokens, so compute is
    /// proportional to parameter count.
    EqualTokens,
    /// Per-model token counts, one per small scale plus one for the large
    /// model. Any missing count is an error.
    SuppliedTokens {
        small: Vec<Option<u64>>,
        large: Option<u64>,
    },
}

/// Ratio of the large model's cost to the summed cost of all small models.
pub fn savings_ratio(small: &[ScaleSpec], large: &ScaleSpec, assumption: &TokenAssumption) -> Result<f64> {
    if small.is_empty() {
        return Err(Error::invalid("small", "at least one small scale is required"));
    }
    match assumption {
        TokenAssumption::EqualTokens => {
            let total: u128 = small.iter().map(|s| s.params as u128).sum();
            Ok(large.params as f64 / total as f64)
        }
        TokenAssumption::SuppliedTokens {
            small: small_tokens,
            large: large_tokens,
        } => {
            if small_tokens.len() != small.len() {
                return Err(Error::invalid(
                    "tokens",
                    format!(
                        "{} token counts supplied for {} small scales",
                        small_tokens.len(),
                        small.len()
                    ),
                ));
            }
            let large_tokens =
                large_tokens.ok_or_else(|| Error::invalid("tokens", "large model has no token count"))?;
            let mut total = 0u128;
            for (i, (scale, tokens)) in small.iter().zip(small_tokens).enumerate() {
                let tokens =
                    tokens.ok_or_else(|| Error::invalid("tokens", format!("small scale {i} has no token count")))?;
                total += flops(scale.params, tokens);
            }
            if total == 0 {
                return Err(Error::invalid("tokens", "small models observed zero tokens"));
            }
            Ok(flops(large.params, large_tokens) as f64 / total as f64)
        }
    }
}
