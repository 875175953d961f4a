//! Pricing rules and their expected performance.
//!
//! With a single distribution the symmetric conventions apply: fixed and mean
//! prices trade when `B >= p > S`, and a sampled price splits ties evenly.
//! With separate seller and buyer distributions every rule trades when
//! `B > p >= S`.

mod asymmetric;
mod hybrid;
mod symmetric;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{Dist, Distribution, DistributionError, SpecError};
use crate::measures::{
    asym_gft, asym_opt_w, expected_gain, gft, opt_gft, opt_w, MeasureError, MeasureReport, Method, TieBreak,
};
use crate::numerics::{NumericsError, QuadratureConfig};

pub use asymmetric::{
    best_fixed_price, gstar_expected_welfare, gstar_lower_bound, gstar_support, quantile_rule_expected_welfare,
};
pub use hybrid::{
    hybrid_asym_price, perturbed_prices, top_quintile_price, HybridBranch, HybridOutcome, PerturbedPrices,
    HYBRID_GUARANTEE, SMALL_SHORTFALL, TOP_QUINTILE_GUARANTEE,
};
pub(crate) use symmetric::mean_threshold;
pub use symmetric::{
    mean_price_welfare, sample_price_expected_gft, sample_price_expected_gft_with, sample_price_expected_welfare,
    sample_price_gft_closed_form, three_quantity_welfare, MeanPriceWelfare,
};

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("the G* support collapses to the single point {point}")]
    DegenerateSupport { point: f64 },
    #[error("quantile levels must lie in [0, 1], got support [{lo}, {hi}]")]
    LevelsOutsideUnit { lo: f64, hi: f64 },
    #[error("price grid of size {size} is smaller than {min}")]
    GridTooSmall { size: usize, min: usize },
}

/// A price rule, as read from JSON such as `{"type":"fixed","p":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Mechanism {
    Fixed {
        p: f64,
    },
    /// Posts the seller's mean.
    Mean,
    /// Posts an independent draw from the seller's distribution.
    Sample,
    Gstar,
    /// Posts the seller's `g`-quantile for `g ~ g`.
    Quantile {
        g: Dist,
    },
    Hybrid,
}

impl Mechanism {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let mech: Mechanism = serde_json::from_str(text).map_err(|e| {
            if e.line() == 0 {
                SpecError::at_end(text, e.to_string())
            } else {
                SpecError::Json(e)
            }
        })?;
        match &mech {
            Mechanism::Fixed { p } if !(p.is_finite() && *p >= 0.0) => Err(SpecError::at_end(
                text,
                format!("price must be finite and nonnegative, got {p}"),
            )),
            Mechanism::Quantile { g } if g.support_lo() < 0.0 || g.support_hi() > 1.0 => Err(SpecError::at_end(
                text,
                format!(
                    "quantile levels must lie in [0, 1], got support [{}, {}]",
                    g.support_lo(),
                    g.support_hi()
                ),
            )),
            _ => Ok(mech),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mechanism serializes")
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Fixed { .. } => "fixed",
            Mechanism::Mean => "mean",
            Mechanism::Sample => "sample",
            Mechanism::Gstar => "gstar",
            Mechanism::Quantile { .. } => "quantile",
            Mechanism::Hybrid => "hybrid",
        }
    }
}

fn method_for(parts: &[&dyn Distribution]) -> Method {
    if parts.iter().all(|d| d.as_discrete().is_some()) {
        Method::ExactDiscrete
    } else {
        Method::Quadrature
    }
}

/// Evaluates `mech` against a common distribution (`buyer = None`) or an
/// independent seller and buyer.
pub fn evaluate(
    mech: &Mechanism,
    seller: &dyn Distribution,
    buyer: Option<&dyn Distribution>,
    cfg: &QuadratureConfig,
) -> Result<MeasureReport, MechanismError> {
    let mean_s = seller.mean();
    let Some(buyer) = buyer else {
        return match mech {
            Mechanism::Fixed { .. } | Mechanism::Mean | Mechanism::Sample => {
                let method = method_for(&[seller]);
                let opt_g = opt_gft(seller, cfg)?;
                let opt = opt_w(seller, cfg)?;
                let (g, tie, price) = match mech {
                    Mechanism::Fixed { p } => (gft(*p, seller)?, TieBreak::BuyerWeak, Some(*p)),
                    Mechanism::Mean => (gft(mean_s, seller)?, TieBreak::BuyerWeak, Some(mean_s)),
                    _ => (sample_price_expected_gft(seller, cfg)?, TieBreak::Fair, None),
                };
                Ok(MeasureReport::new(mean_s, opt_g, opt, g, mean_s + g, method, tie).with_price(price))
            }
            _ => evaluate(mech, seller, Some(seller), cfg),
        };
    };

    let mut method = method_for(&[seller, buyer]);
    let tie = TieBreak::SellerWeak;
    let opt_g = expected_gain(seller, buyer, cfg)?;
    let opt = asym_opt_w(seller, buyer, cfg)?;
    let (w, price) = match mech {
        Mechanism::Fixed { p } => (mean_s + asym_gft(*p, seller, buyer, tie)?, Some(*p)),
        Mechanism::Mean => (mean_s + asym_gft(mean_s, seller, buyer, tie)?, Some(mean_s)),
        Mechanism::Sample => {
            let levels = Dist::uniform(0.0, 1.0)?;
            (quantile_rule_expected_welfare(seller, buyer, &levels, cfg)?, None)
        }
        Mechanism::Gstar => (gstar_expected_welfare(seller, buyer, cfg)?, None),
        Mechanism::Quantile { g } => {
            if g.as_discrete().is_none() {
                method = Method::Quadrature;
            }
            (quantile_rule_expected_welfare(seller, buyer, g, cfg)?, None)
        }
        Mechanism::Hybrid => {
            let out = hybrid_asym_price(seller, buyer, cfg)?;
            (out.welfare, Some(out.price))
        }
    };
    Ok(MeasureReport::new(mean_s, opt_g, opt, w - mean_s, w, method, tie).with_price(price))
}
