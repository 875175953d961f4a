use serde::Serialize;

use super::MechanismError;
use crate::distributions::{conditional_mean_below, Distribution};
use crate::measures::{gft_between, opt_gft, welfare, TieBreak};
use crate::numerics::QuadratureConfig;

/// Expected gains from trade when the price is an independent draw from the
/// common distribution, integrating the price over `F` directly.
///
/// Ties between a drawn price and an atom go to a fair coin between the two
/// tie-break rules. Under either deterministic rule the half-of-optimum
/// identity fails for distributions with unequal atoms; see
/// [`sample_price_expected_gft_with`].
pub fn sample_price_expected_gft(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MechanismError> {
    sample_price_expected_gft_with(dist, TieBreak::Fair, cfg)
}

/// [`sample_price_expected_gft`] under an explicit tie-break rule.
pub fn sample_price_expected_gft_with(
    dist: &dyn Distribution,
    tie: TieBreak,
    cfg: &QuadratureConfig,
) -> Result<f64, MechanismError> {
    let mean = dist.mean();
    Ok(dist.expect_state(&|s| gft_between(s, s, mean, tie), cfg)?)
}

/// Closed form of the sample-price gains from trade: half the first best.
pub fn sample_price_gft_closed_form(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MechanismError> {
    Ok(0.5 * opt_gft(dist, cfg)?)
}

pub fn sample_price_expected_welfare(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, MechanismError> {
    Ok(dist.mean() + sample_price_expected_gft(dist, cfg)?)
}

/// Welfare from posting the mean of the common distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanPriceWelfare {
    pub price: f64,
    /// `E[S] + GFT(mean)`.
    pub welfare: f64,
    /// `mu + (mu - mu1) gamma` with `mu1 = E[S | S <= mu]` and `gamma = F(mu)`.
    pub three_quantity: f64,
    pub mu1: f64,
    pub gamma: f64,
}

/// `mu + (mu - mu1) gamma`.
pub fn three_quantity_welfare(mu: f64, mu1: f64, gamma: f64) -> f64 {
    mu + (mu - mu1) * gamma
}

/// The mean as a threshold for `F(mu)` and `E[S | S <= mu]`. A mean that
/// rounds to just below an atom sitting on it is moved onto the atom.
pub(crate) fn mean_threshold(dist: &dyn Distribution, mu: f64) -> f64 {
    let slack = 1e-12 * mu.max(1.0);
    dist.atoms()
        .into_iter()
        .map(|a| a.0)
        .filter(|&x| x > mu && x - mu <= slack)
        .fold(mu, f64::max)
}

pub fn mean_price_welfare(dist: &dyn Distribution) -> Result<MeanPriceWelfare, MechanismError> {
    let mu = dist.mean();
    let at = mean_threshold(dist, mu);
    let gamma = dist.cdf(at);
    let mu1 = conditional_mean_below(dist, at)?;
    Ok(MeanPriceWelfare {
        price: mu,
        welfare: welfare(mu, dist)?,
        three_quantity: three_quantity_welfare(mu, mu1, gamma),
        mu1,
        gamma,
    })
}
