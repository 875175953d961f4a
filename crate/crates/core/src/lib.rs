//! Gains-from-trade and welfare evaluation for fixed-price bilateral trade.
//!
//! A seller values an item at `S ~ F_S`, a buyer at `B ~ F_B`, independently.
//! A posted price `p` is chosen from distributional knowledge only, and trade
//! happens when the buyer's value is above the price and the seller's is not.
//! This crate evaluates the resulting welfare and gains from trade exactly
//! (discrete laws), by quadrature (everything else) and by Monte Carlo, and
//! constructs the extremal instances behind the known approximation ratios.

pub mod distributions;
pub mod game;
pub mod measures;
pub mod mechanisms;
pub mod numerics;
pub mod worstcase;

pub use distributions::{
    conditional_mean_below, DiscreteDistribution, Dist, DistSpec, Distribution, DistributionError, Exponential,
    Mixture, Power, PriceState, SpecError, Truncation, Uniform, Violation,
};
pub use game::{GameConfig, GameError, GameOutcome, NatureStrategy};
pub use measures::{MeasureError, MeasureReport, Method, PriceDraw, TieBreak};
pub use mechanisms::{HybridBranch, HybridOutcome, Mechanism, MechanismError};
pub use numerics::{integrate, invert_monotone, NumericsError, QuadratureConfig, Seed};
pub use worstcase::{FourPointSpec, MinimaxScanResult, WorstCaseError};
