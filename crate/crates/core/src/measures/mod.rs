//! Gains from trade and welfare of posted prices.
//!
//! Two tie-break rules appear in the literature. The symmetric closed form
//! trades when `B >= p > S` ([`TieBreak::BuyerWeak`]); the asymmetric
//! analysis trades when `B > p >= S` ([`TieBreak::SellerWeak`]). For
//! continuous laws they coincide; at atoms they do not, so every evaluator
//! states which rule it uses.

mod montecarlo;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DiscreteDistribution, Distribution, PriceState};
use crate::numerics::{integrate, NumericsError, QuadratureConfig};

pub use montecarlo::{mc_oracle, PriceDraw, QuantileDraw, RandomPrice, MIN_MC_SAMPLES};
pub use report::{MeasureReport, Method};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("price must be finite and nonnegative, got {0}")]
    InvalidPrice(f64),
    #[error("Monte Carlo needs at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
}

/// Which side wins a tie with the posted price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Trade iff `B >= p > S`.
    BuyerWeak,
    /// Trade iff `B > p >= S`.
    SellerWeak,
    /// Each of the two rules with probability one half.
    Fair,
}

impl TieBreak {
    /// Probability of trade for realized values.
    pub fn trade_weight(self, seller: f64, buyer: f64, price: f64) -> f64 {
        let buyer_weak = (buyer >= price && price > seller) as u8 as f64;
        let seller_weak = (buyer > price && price >= seller) as u8 as f64;
        match self {
            TieBreak::BuyerWeak => buyer_weak,
            TieBreak::SellerWeak => seller_weak,
            TieBreak::Fair => 0.5 * (buyer_weak + seller_weak),
        }
    }
}

pub(crate) fn check_price(p: f64) -> Result<f64, MeasureError> {
    if p.is_finite() && p >= 0.0 {
        Ok(p)
    } else {
        Err(MeasureError::InvalidPrice(p))
    }
}

/// Expected gains from trade at one price, from the two sides' states at
/// that price.
///
/// Under `B > p >= S` this is `P[S <= p] E[(B-p)+] + P[B > p] E[(p-S)+]`;
/// the other rule swaps the weak and strict probabilities.
pub fn gft_between(seller: &PriceState, buyer: &PriceState, buyer_mean: f64, tie: TieBreak) -> f64 {
    let excess = buyer.excess(buyer_mean);
    let shortfall = seller.shortfall();
    let seller_weak = seller.at_or_below * excess + (1.0 - buyer.at_or_below) * shortfall;
    let buyer_weak = seller.below * excess + (1.0 - buyer.below) * shortfall;
    match tie {
        TieBreak::BuyerWeak => buyer_weak,
        TieBreak::SellerWeak => seller_weak,
        TieBreak::Fair => 0.5 * (buyer_weak + seller_weak),
    }
}

fn upper_limit(dists: &[&dyn Distribution], cfg: &QuadratureConfig) -> f64 {
    dists.iter().map(|d| d.integration_hi(cfg)).fold(0.0, f64::max)
}

fn atom_breaks(dists: &[&dyn Distribution]) -> Vec<f64> {
    dists.iter().flat_map(|d| d.atoms().into_iter().map(|a| a.0)).collect()
}

/// First-best gains from trade `E[(B-S)+]` with `S, B ~ F` i.i.d.:
/// an exact double sum for discrete `F`, quadrature of `F(1-F)` otherwise.
pub fn opt_gft(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
    match dist.as_discrete() {
        Some(d) => Ok(opt_gft_exact(d)),
        None => opt_gft_quadrature(dist, cfg),
    }
}

pub fn opt_gft_exact(d: &DiscreteDistribution) -> f64 {
    expected_gain_exact(d, d)
}

/// `integral of F(x)(1 - F(x)) dx` over the support.
pub fn opt_gft_quadrature(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
    let hi = upper_limit(&[dist], cfg);
    let v = integrate(
        |x| {
            let f = dist.cdf(x);
            f * (1.0 - f)
        },
        0.0,
        hi,
        cfg,
        &atom_breaks(&[dist]),
    )?;
    Ok(v)
}

/// Gains from trade at price `p` in the symmetric model, trading when
/// `B >= p > S`: `F(p-) E[(B-p)+] + (1 - F(p-)) integral_0^p F`.
pub fn gft(p: f64, dist: &dyn Distribution) -> Result<f64, MeasureError> {
    let p = check_price(p)?;
    let s = dist.state_at(p);
    Ok(gft_between(&s, &s, dist.mean(), TieBreak::BuyerWeak))
}

/// [`gft`] with both integrals of the formula evaluated by quadrature.
pub fn gft_quadrature(p: f64, dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
    let p = check_price(p)?;
    let hi = upper_limit(&[dist], cfg).max(p);
    let breaks = atom_breaks(&[dist]);
    let below = integrate(|x| dist.cdf(x), 0.0, p, cfg, &breaks)?;
    let above = integrate(|x| 1.0 - dist.cdf(x), p, hi, cfg, &breaks)?;
    let left = dist.prob_lt(p);
    Ok(left * above + (1.0 - left) * below)
}

/// `E[(B-S) 1{B >= p > S}]` as a double sum over atom pairs.
pub fn gft_exact(p: f64, d: &DiscreteDistribution) -> f64 {
    let mut total = 0.0;
    for (s, ps) in d.iter() {
        for (b, pb) in d.iter() {
            if b >= p && p > s {
                total += ps * pb * (b - s);
            }
        }
    }
    total
}

/// `W(p) = E[S] + GFT(p)` in the symmetric model.
pub fn welfare(p: f64, dist: &dyn Distribution) -> Result<f64, MeasureError> {
    Ok(dist.mean() + gft(p, dist)?)
}

/// `OPT-W = E[S] + OPT-GFT`.
pub fn opt_w(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MeasureError> {
    Ok(dist.mean() + opt_gft(dist, cfg)?)
}

/// Welfare at `p` for independent `S ~ F_S`, `B ~ F_B`, trading when `B > p >= S`.
pub fn asym_welfare(p: f64, seller: &dyn Distribution, buyer: &dyn Distribution) -> Result<f64, MeasureError> {
    let p = check_price(p)?;
    Ok(asym_welfare_at(
        &seller.state_at(p),
        seller.mean(),
        &buyer.state_at(p),
        buyer.mean(),
    ))
}

pub(crate) fn asym_welfare_at(seller: &PriceState, seller_mean: f64, buyer: &PriceState, buyer_mean: f64) -> f64 {
    seller_mean + gft_between(seller, buyer, buyer_mean, TieBreak::SellerWeak)
}

/// Gains from trade at `p` under an explicit tie-break rule.
pub fn asym_gft(
    p: f64,
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    tie: TieBreak,
) -> Result<f64, MeasureError> {
    let p = check_price(p)?;
    Ok(gft_between(&seller.state_at(p), &buyer.state_at(p), buyer.mean(), tie))
}

/// `E[S + (B-S) 1{B > p >= S}]` as a double sum over atom pairs.
pub fn asym_welfare_exact(p: f64, seller: &DiscreteDistribution, buyer: &DiscreteDistribution) -> f64 {
    let mut total = 0.0;
    for (s, ps) in seller.iter() {
        for (b, pb) in buyer.iter() {
            let v = if b > p && p >= s { b } else { s };
            total += ps * pb * v;
        }
    }
    total
}

/// `E[max(S, B)]`, the first-best welfare.
pub fn asym_opt_w(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    if let (Some(s), Some(b)) = (seller.as_discrete(), buyer.as_discrete()) {
        let mut total = 0.0;
        for (x, px) in s.iter() {
            for (y, py) in b.iter() {
                total += px * py * x.max(y);
            }
        }
        return Ok(total);
    }
    asym_opt_w_quadrature(seller, buyer, cfg)
}

/// `integral of (1 - F_S F_B)`.
pub fn asym_opt_w_quadrature(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    let hi = upper_limit(&[seller, buyer], cfg);
    let v = integrate(
        |x| 1.0 - seller.cdf(x) * buyer.cdf(x),
        0.0,
        hi,
        cfg,
        &atom_breaks(&[seller, buyer]),
    )?;
    Ok(v)
}

/// `E[(B-S)+]`, the first-best gains from trade.
pub fn expected_gain(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    if let (Some(s), Some(b)) = (seller.as_discrete(), buyer.as_discrete()) {
        return Ok(expected_gain_exact(s, b));
    }
    expected_gain_quadrature(seller, buyer, cfg)
}

/// `integral of F_S(x)(1 - F_B(x))`, i.e. `integral of P[S <= x < B]`.
pub fn expected_gain_quadrature(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    let hi = upper_limit(&[seller, buyer], cfg);
    let v = integrate(
        |x| seller.cdf(x) * (1.0 - buyer.cdf(x)),
        0.0,
        hi,
        cfg,
        &atom_breaks(&[seller, buyer]),
    )?;
    Ok(v)
}

fn expected_gain_exact(seller: &DiscreteDistribution, buyer: &DiscreteDistribution) -> f64 {
    let mut total = 0.0;
    for (s, ps) in seller.iter() {
        for (b, pb) in buyer.iter() {
            if b > s {
                total += ps * pb * (b - s);
            }
        }
    }
    total
}

/// `E[(S-B)+]`: how much the seller's value exceeds the buyer's on average.
pub fn expected_shortfall(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MeasureError> {
    expected_gain(buyer, seller, cfg)
}
