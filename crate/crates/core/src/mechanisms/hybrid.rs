use std::f64::consts::E;

use serde::Serialize;

use super::asymmetric::{argmax_lowest, best_fixed_price, gstar_candidates, welfare_at_seller_state};
use super::MechanismError;
use crate::distributions::Distribution;
use crate::measures::{asym_opt_w, expected_shortfall};
use crate::numerics::QuadratureConfig;

/// Below this shortfall ratio `E[(S-B)+] / OPT-W` the hybrid leaves `G*`.
pub const SMALL_SHORTFALL: f64 = 0.0003;
/// Welfare ratio guaranteed by [`hybrid_asym_price`].
pub const HYBRID_GUARANTEE: f64 = 1.0 - 1.0 / E + 0.0001;
/// Ratio guaranteed at the top-quintile price when the buyer rarely sits below it.
pub const TOP_QUINTILE_GUARANTEE: f64 = 17.0 / 25.0;

const GSTAR_GRID: usize = 1025;
const FALLBACK_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridBranch {
    /// Large shortfall: best price in the support of `G*`.
    GStar,
    /// Small shortfall and `P[B <= p*] <= 1/5`: post `p*`.
    TopQuintile,
    /// Small shortfall otherwise: the better of two prices around `p*`.
    Perturbed,
    /// The perturbation could not be verified; best of all candidates.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HybridOutcome {
    pub price: f64,
    pub welfare: f64,
    pub branch: HybridBranch,
    /// `E[(S-B)+] / OPT-W`.
    pub alpha: f64,
    pub opt_w: f64,
    pub p_star: Option<f64>,
}

impl HybridOutcome {
    pub fn ratio(&self) -> f64 {
        if self.opt_w > 0.0 {
            self.welfare / self.opt_w
        } else {
            1.0
        }
    }
}

/// `p* = inf { p : P[S >= p] <= 1/5 }`, which is the seller's 4/5 quantile.
pub fn top_quintile_price(seller: &dyn Distribution) -> f64 {
    seller.quantile(0.8)
}

/// The two prices `p0 -+ sqrt(10 alpha) OPT-W / 2` around `p0 = p* - eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbedPrices {
    pub p_star: f64,
    pub p0: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub welfare_minus: f64,
    pub welfare_plus: f64,
    /// Whether some `eps` gave `P[S >= p0] > 1/5` and `P[B <= p0] > 1/5`.
    pub verified: bool,
}

impl PerturbedPrices {
    /// Better of the two prices, preferring the lower one on ties.
    pub fn best(&self) -> (f64, f64) {
        if self.welfare_plus > self.welfare_minus {
            (self.p_plus, self.welfare_plus)
        } else {
            (self.p_minus, self.welfare_minus)
        }
    }
}

/// Builds the perturbed price pair for a given shortfall ratio `alpha`.
///
/// `eps` starts at `1e-6 OPT-W` and shrinks tenfold up to twelve times until
/// both probability conditions at `p0` hold.
pub fn perturbed_prices(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    alpha: f64,
    opt_w: f64,
) -> PerturbedPrices {
    let p_star = top_quintile_price(seller);
    let mut eps = 1e-6 * opt_w;
    let mut p0 = p_star - eps;
    let mut verified = false;
    for _ in 0..=12 {
        p0 = p_star - eps;
        if p0 >= 0.0 && p0 < p_star && 1.0 - seller.prob_lt(p0) > 0.2 && buyer.cdf(p0) > 0.2 {
            verified = true;
            break;
        }
        eps /= 10.0;
    }
    let half_width = 0.5 * (10.0 * alpha.max(0.0)).sqrt() * opt_w;
    let p_minus = (p0 - half_width).max(0.0);
    let p_plus = (p0 + half_width).max(0.0);
    let at = |p: f64| welfare_at_seller_state(&seller.state_at(p), seller, buyer);
    PerturbedPrices {
        p_star,
        p0,
        p_minus,
        p_plus,
        welfare_minus: at(p_minus),
        welfare_plus: at(p_plus),
        verified,
    }
}

/// Deterministic price guaranteeing `1 - 1/e + 0.0001` of the first-best
/// welfare, by case analysis on the shortfall ratio
/// `alpha = E[(S-B)+] / OPT-W`.
pub fn hybrid_asym_price(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<HybridOutcome, MechanismError> {
    let opt_w = asym_opt_w(seller, buyer, cfg)?;
    let shortfall = expected_shortfall(seller, buyer, cfg)?;
    let alpha = if opt_w > 0.0 { shortfall / opt_w } else { 0.0 };
    let at = |p: f64| welfare_at_seller_state(&seller.state_at(p), seller, buyer);
    let best_of = |mut prices: Vec<f64>| {
        prices.retain(|p| p.is_finite() && *p >= 0.0);
        prices.sort_by(f64::total_cmp);
        prices.dedup();
        let values: Vec<f64> = prices.iter().map(|&p| at(p)).collect();
        argmax_lowest(&prices, &values)
    };

    if alpha >= SMALL_SHORTFALL {
        let (price, welfare) = best_of(gstar_candidates(seller, buyer, GSTAR_GRID));
        return Ok(HybridOutcome {
            price,
            welfare,
            branch: HybridBranch::GStar,
            alpha,
            opt_w,
            p_star: None,
        });
    }

    let p_star = top_quintile_price(seller);
    if buyer.cdf(p_star) <= 0.2 {
        return Ok(HybridOutcome {
            price: p_star,
            welfare: at(p_star),
            branch: HybridBranch::TopQuintile,
            alpha,
            opt_w,
            p_star: Some(p_star),
        });
    }

    let pair = perturbed_prices(seller, buyer, alpha, opt_w);
    if pair.verified {
        let (price, welfare) = pair.best();
        return Ok(HybridOutcome {
            price,
            welfare,
            branch: HybridBranch::Perturbed,
            alpha,
            opt_w,
            p_star: Some(p_star),
        });
    }

    let (grid_price, _) = best_fixed_price(seller, buyer, FALLBACK_GRID, cfg)?;
    let (price, welfare) = best_of(vec![p_star, pair.p0, pair.p_minus, pair.p_plus, grid_price]);
    Ok(HybridOutcome {
        price,
        welfare,
        branch: HybridBranch::Fallback,
        alpha,
        opt_w,
        p_star: Some(p_star),
    })
}
