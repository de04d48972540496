//! Willingness-to-pay space: spec construction and the price transform.
//!
//! In WTP space the coefficient on a designated price variable is the
//! negative of a log-normal: with price parameter `b`, the price column
//! carries coefficient `-exp(b)`, and every other coefficient measures
//! willingness to pay in price units. The reported transform is the
//! negative exponential of the *average* of `b`, not the average of
//! `-exp(b)`.

use crate::error::{Error, Result};
use crate::sampler::ModelSpec;

/// The displayed price transform of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtpTransform {
    /// Mean of the retained price-parameter draws.
    pub price_param_mean: f64,
    /// `-exp(price_param_mean)`; always strictly negative.
    pub transformed: f64,
}

impl WtpTransform {
    pub fn from_mean(price_param_mean: f64) -> Self {
        Self {
            price_param_mean,
            transformed: transform_price(price_param_mean),
        }
    }
}

/// `-exp(b)`: the realized price coefficient at price parameter `b`.
pub fn transform_price(mean_b: f64) -> f64 {
    -mean_b.exp()
}

/// Turn a preference-space spec into a WTP spec with the given price
/// variable. The price parameter is prepended to the random block, so it
/// appears first in the Random section and first among the draw columns.
pub fn make_wtp_spec(base: &ModelSpec, price_var: &str) -> Result<ModelSpec> {
    if base.price_var.is_some() {
        return Err(Error::InvalidConfig(
            "spec already carries a price variable".into(),
        ));
    }
    if base.rand_vars.iter().any(|v| v == price_var)
        || base.fixed_vars.iter().any(|v| v == price_var)
    {
        return Err(Error::InvalidConfig(format!(
            "price variable `{price_var}` must not appear in rand() or the fixed list"
        )));
    }
    let mut rand_vars = Vec::with_capacity(base.rand_vars.len() + 1);
    rand_vars.push(price_var.to_string());
    rand_vars.extend(base.rand_vars.iter().cloned());
    let spec = ModelSpec {
        rand_vars,
        price_var: Some(price_var.to_string()),
        ..base.clone()
    };
    spec.validate()?;
    Ok(spec)
}
