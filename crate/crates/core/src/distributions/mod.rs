//! Value distributions on the nonnegative reals.
//!
//! The CDF is the primitive: no density is ever required. Every family
//! exposes both `P[X < t]` and `P[X <= t]` so that tie-break rules at atoms
//! can be evaluated exactly, plus the partial expectation `E[X 1{X <= t}]`
//! from which all fixed-price welfare formulas follow in closed form.

mod compound;
mod continuous;
mod discrete;
mod dist;
mod validate;

use std::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::numerics::{integrate, NumericsError, QuadratureConfig};

pub use compound::{Mixture, Truncation};
pub use continuous::{Exponential, Power, Uniform};
pub use discrete::DiscreteDistribution;
pub use dist::{Dist, DistSpec, MixturePart, RawDist, SpecError};
pub use validate::{check_invariants, Violation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("masses sum to {sum}, expected 1")]
    MassSum { sum: f64 },
    #[error("duplicate atom at {x}")]
    DuplicateAtom { x: f64 },
    #[error("distribution has no atoms")]
    Empty,
    #[error("mixture has no components")]
    EmptyMixture,
    #[error("conditioning event X <= {t} has probability zero")]
    EmptyConditioning { t: f64 },
}

/// What the welfare formulas need to know about one side of the market at
/// a single price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceState {
    pub price: f64,
    /// `P[X < price]`
    pub below: f64,
    /// `P[X <= price]`
    pub at_or_below: f64,
    /// `E[X 1{X <= price}]`
    pub partial: f64,
}

impl PriceState {
    pub fn mass(&self) -> f64 {
        (self.at_or_below - self.below).max(0.0)
    }

    /// `E[(price - X)+]`, which is also the integral of the CDF up to `price`.
    pub fn shortfall(&self) -> f64 {
        (self.price * self.at_or_below - self.partial).max(0.0)
    }

    /// `E[(X - price)+]` given the mean of `X`.
    pub fn excess(&self, mean: f64) -> f64 {
        (mean - self.partial - self.price * (1.0 - self.at_or_below)).max(0.0)
    }
}

/// A probability distribution on `[0, inf)` with finite mean.
///
/// Quantiles use the left-continuous inverse `inf { x : F(x) >= q }`.
pub trait Distribution: fmt::Debug + Send + Sync {
    /// `P[X <= x]`, right-continuous.
    fn cdf(&self, x: f64) -> f64;
    /// `P[X < x]`.
    fn prob_lt(&self, x: f64) -> f64;
    fn quantile(&self, q: f64) -> f64;
    fn mean(&self) -> f64;
    /// `E[X 1{X <= t}]`.
    fn partial_expectation_below(&self, t: f64) -> f64;
    fn support_lo(&self) -> f64;
    /// Upper end of the support; `f64::INFINITY` when unbounded.
    fn support_hi(&self) -> f64;
    /// Point masses as `(location, mass)`, sorted by location.
    fn atoms(&self) -> Vec<(f64, f64)>;

    fn prob_le(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn mass_at(&self, x: f64) -> f64 {
        (self.cdf(x) - self.prob_lt(x)).max(0.0)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(open_unit(rng))
    }

    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        None
    }

    fn state_at(&self, price: f64) -> PriceState {
        PriceState {
            price,
            below: self.prob_lt(price),
            at_or_below: self.cdf(price),
            partial: self.partial_expectation_below(price),
        }
    }

    /// State at the price `quantile(u)`. Families whose quantile loses
    /// precision in floating point override this with exact level-space values.
    fn state_at_level(&self, u: f64) -> PriceState {
        self.state_at(self.quantile(u))
    }

    /// Right end used for integrals in price space.
    fn integration_hi(&self, cfg: &QuadratureConfig) -> f64 {
        let hi = self.support_hi();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(cfg.tail_quantile)
        }
    }

    /// Levels in `(0, 1)` at which the quantile function is flat.
    fn level_breaks(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (x, _) in self.atoms() {
            for level in [self.prob_lt(x), self.cdf(x)] {
                if level > 0.0 && level < 1.0 {
                    out.push(level);
                }
            }
        }
        out
    }

    /// `E[h(state at X)]`: exact sum over atoms for discrete laws,
    /// quadrature over the quantile level otherwise.
    fn expect_state(&self, h: &dyn Fn(&PriceState) -> f64, cfg: &QuadratureConfig) -> Result<f64, NumericsError> {
        if let Some(d) = self.as_discrete() {
            return Ok(d.iter().map(|(x, p)| p * h(&d.state_at(x))).sum());
        }
        integrate(|u| h(&self.state_at_level(u)), 0.0, 1.0, cfg, &self.level_breaks())
    }

    /// `E[h(X)]`.
    fn expect(&self, h: &dyn Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<f64, NumericsError> {
        self.expect_state(&|s| h(s.price), cfg)
    }
}

/// Uniform draw from the open interval `(0, 1)`.
pub(crate) fn open_unit(rng: &mut dyn RngCore) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// `E[X | X <= t]`.
pub fn conditional_mean_below(dist: &dyn Distribution, t: f64) -> Result<f64, DistributionError> {
    let mass = dist.prob_le(t);
    if mass <= 0.0 {
        return Err(DistributionError::EmptyConditioning { t });
    }
    Ok(dist.partial_expectation_below(t) / mass)
}
