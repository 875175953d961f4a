//! The quantile-rule designer against nature.
//!
//! The designer picks a level `x` and posts the seller's `x`-quantile. Nature
//! picks `y` and gives the seller `Uniform(0, eps)` with probability `y` and
//! the value 1 otherwise; the buyer always values the item at 1. Ignoring
//! terms of order `eps` the welfare is `V(x, y) = (1 - y) + x 1{x < y}`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{open_unit, Dist, Distribution, DistributionError};
use crate::measures::{asym_welfare, MeasureError, MIN_MC_SAMPLES};
use crate::numerics::{integrate, NumericsError, QuadratureConfig, Seed};

const INV_E: f64 = 1.0 / E;
/// Value of the game, `1 - 1/e`.
pub const GAME_VALUE: f64 = 1.0 - 1.0 / E;
pub const MAX_EPSILON: f64 = 0.01;
pub const MIN_X_GRID: usize = 100;

#[derive(Debug, Error)]
pub enum GameError {
    #[error("{name} = {value} is outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<(), GameError> {
    if (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(GameError::OutOfRange { name, value, lo, hi })
    }
}

/// Nature's mixed strategy over `y`: an atom of `1/e` at `y = 1` and density
/// `1/(e y^2)` on `[1/e, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NatureStrategy {
    pub atom_prob: f64,
    pub lower: f64,
}

impl Default for NatureStrategy {
    fn default() -> Self {
        Self {
            atom_prob: INV_E,
            lower: INV_E,
        }
    }
}

impl NatureStrategy {
    pub fn density(&self, y: f64) -> f64 {
        if (self.lower..=1.0).contains(&y) {
            1.0 / (E * y * y)
        } else {
            0.0
        }
    }

    /// Atom plus the integral of the density.
    pub fn total_mass(&self, cfg: &QuadratureConfig) -> Result<f64, GameError> {
        Ok(self.atom_prob + integrate(|y| self.density(y), self.lower, 1.0, cfg, &[])?)
    }

    /// `E[h(y)]`, with a breakpoint where `h` jumps.
    pub fn expect(&self, h: impl Fn(f64) -> f64, cfg: &QuadratureConfig, breaks: &[f64]) -> Result<f64, GameError> {
        let smooth = integrate(|y| h(y) * self.density(y), self.lower, 1.0, cfg, breaks)?;
        Ok(smooth + self.atom_prob * h(1.0))
    }

    /// Inverse-CDF draw: the continuous part has CDF `1 - 1/(e y)`.
    pub fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
        let u = open_unit(rng);
        (1.0 / (E * (1.0 - u))).min(1.0)
    }
}

/// `(1 - y) + x 1{x < y}`.
pub fn payoff(x: f64, y: f64) -> Result<f64, GameError> {
    check_range("x", x, 0.0, 1.0)?;
    check_range("y", y, INV_E, 1.0)?;
    Ok((1.0 - y) + if x < y { x } else { 0.0 })
}

/// `E[V(x, y)]` under [`NatureStrategy`]: `1 - 2/e + x` below `1/e`, exactly
/// `1 - 1/e` on `[1/e, 1)`, and `1 - 2/e` at `x = 1`.
pub fn expected_payoff(x: f64) -> Result<f64, GameError> {
    check_range("x", x, 0.0, 1.0)?;
    Ok(if x < INV_E {
        1.0 - 2.0 / E + x
    } else if x < 1.0 {
        GAME_VALUE
    } else {
        1.0 - 2.0 / E
    })
}

/// [`expected_payoff`] by quadrature over nature's strategy.
pub fn expected_payoff_quadrature(x: f64, cfg: &QuadratureConfig) -> Result<f64, GameError> {
    check_range("x", x, 0.0, 1.0)?;
    let v = |y: f64| (1.0 - y) + if x < y { x } else { 0.0 };
    NatureStrategy::default().expect(v, cfg, &[x])
}

/// Seller values: `Uniform(0, eps)` with weight `y`, the value 1 with weight `1 - y`.
pub fn nature_distribution(y: f64, eps: f64) -> Result<Dist, GameError> {
    check_range("y", y, INV_E, 1.0)?;
    if !(eps > 0.0 && eps <= MAX_EPSILON) {
        return Err(GameError::OutOfRange {
            name: "eps",
            value: eps,
            lo: 0.0,
            hi: MAX_EPSILON,
        });
    }
    let low = Dist::uniform(0.0, eps)?;
    if y == 1.0 {
        return Ok(low);
    }
    Ok(Dist::mixture(vec![(y, low), (1.0 - y, Dist::point_mass(1.0)?)])?)
}

/// Welfare when the seller follows [`nature_distribution`], the buyer values
/// the item at 1, and the price is the seller's `x`-quantile.
pub fn concrete_welfare(x: f64, y: f64, eps: f64) -> Result<f64, GameError> {
    check_range("x", x, 0.0, 1.0)?;
    let seller = nature_distribution(y, eps)?;
    let buyer = Dist::point_mass(1.0)?;
    Ok(asym_welfare(seller.quantile(x), &seller, &buyer)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    /// Width of the seller's low-value band.
    pub epsilon: f64,
    /// Number of intervals in the `x` grid on `[0, 1]`.
    pub x_grid: usize,
    /// Monte Carlo draws for the cross-check at the maximizing `x`; 0 skips it.
    pub mc_samples: usize,
    pub seed: Seed,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            x_grid: 1000,
            mc_samples: 100_000,
            seed: Seed(0),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        if !(self.epsilon > 0.0 && self.epsilon <= MAX_EPSILON) {
            return Err(GameError::InvalidConfig(format!(
                "epsilon must lie in (0, {MAX_EPSILON}], got {}",
                self.epsilon
            )));
        }
        if self.x_grid < MIN_X_GRID {
            return Err(GameError::InvalidConfig(format!(
                "x_grid must be at least {MIN_X_GRID}, got {}",
                self.x_grid
            )));
        }
        if self.mc_samples != 0 && self.mc_samples < MIN_MC_SAMPLES {
            return Err(GameError::InvalidConfig(format!(
                "mc_samples must be 0 or at least {MIN_MC_SAMPLES}, got {}",
                self.mc_samples
            )));
        }
        Ok(())
    }
}

/// One designer level: the abstract payoff and the concrete welfare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameRow {
    pub x: f64,
    pub expected_payoff: f64,
    pub simulated: f64,
    /// `simulated - expected_payoff`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub epsilon: f64,
    pub rows: Vec<GameRow>,
    /// Largest simulated value over the grid.
    pub sup_value: f64,
    pub argmax_x: f64,
    /// Spread of the simulated values over `x` in `[1/e, 1)`.
    pub plateau_spread: f64,
    /// Monte Carlo estimate at `argmax_x` with its standard error.
    pub mc_value: Option<f64>,
    pub mc_stderr: Option<f64>,
}

/// Value at level `x` of the concrete game, averaged over nature's strategy.
pub fn simulated_value(x: f64, eps: f64, cfg: &QuadratureConfig) -> Result<f64, GameError> {
    let first_err = std::sync::Mutex::new(None);
    let h = |y: f64| match concrete_welfare(x, y, eps) {
        Ok(w) => w,
        Err(e) => {
            first_err.lock().unwrap().get_or_insert(e);
            f64::NAN
        }
    };
    let v = NatureStrategy::default().expect(h, cfg, &[x]);
    if let Some(e) = first_err.into_inner().unwrap() {
        return Err(e);
    }
    v
}

fn monte_carlo_value(x: f64, eps: f64, n: usize, seed: Seed) -> Result<(f64, f64), GameError> {
    let nature = NatureStrategy::default();
    let mut rng = seed.rng();
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let y = nature.sample(&mut rng);
        let seller = nature_distribution(y, eps)?;
        let price = seller.quantile(x);
        let s = seller.sample(&mut rng);
        let w = if 1.0 > price && price >= s { 1.0 } else { s };
        sum += w;
        sq += w * w;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sq - sum * mean) / (nf - 1.0)).max(0.0);
    Ok((mean, (var / nf).sqrt()))
}

/// Evaluates every level on the grid `k / x_grid` and reports the best one.
pub fn simulate_game(game: &GameConfig, cfg: &QuadratureConfig) -> Result<GameOutcome, GameError> {
    use rayon::prelude::*;

    game.validate()?;
    let n = game.x_grid;
    let rows: Vec<GameRow> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let x = if k == n { 1.0 } else { k as f64 / n as f64 };
            let closed = expected_payoff(x)?;
            let simulated = simulated_value(x, game.epsilon, cfg)?;
            Ok(GameRow {
                x,
                expected_payoff: closed,
                simulated,
                gap: simulated - closed,
            })
        })
        .collect::<Result<_, GameError>>()?;

    let best = rows
        .iter()
        .fold(rows[0], |best, r| if r.simulated > best.simulated { *r } else { best });
    let plateau: Vec<f64> = rows
        .iter()
        .filter(|r| r.x >= INV_E && r.x < 1.0)
        .map(|r| r.simulated)
        .collect();
    let plateau_spread = plateau.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - plateau.iter().copied().fold(f64::INFINITY, f64::min);
    let (mc_value, mc_stderr) = if game.mc_samples > 0 {
        let (v, se) = monte_carlo_value(best.x, game.epsilon, game.mc_samples, game.seed)?;
        (Some(v), Some(se))
    } else {
        (None, None)
    };
    Ok(GameOutcome {
        epsilon: game.epsilon,
        rows,
        sup_value: best.simulated,
        argmax_x: best.x,
        plateau_spread,
        mc_value,
        mc_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::asym_opt_w;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn payoff_examples() {
        assert_eq!(payoff(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(payoff(0.5, 0.5).unwrap(), 0.5);
        assert!((payoff(0.3, 0.8).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(payoff(0.5, 0.2), Err(GameError::OutOfRange { name: "y", .. })));
        assert!(payoff(1.5, 0.5).is_err());
    }

    #[test]
    fn nature_mass_is_one() {
        let n = NatureStrategy::default();
        assert!((n.total_mass(&cfg()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expected_payoff_examples() {
        assert!((expected_payoff(0.0).unwrap() - (1.0 - 2.0 / E)).abs() < 1e-15);
        assert_eq!(expected_payoff(0.5).unwrap(), GAME_VALUE);
        assert!((expected_payoff(INV_E).unwrap() - GAME_VALUE).abs() < 1e-15);
        assert!((expected_payoff(1.0).unwrap() - (1.0 - 2.0 / E)).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_quadrature() {
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let a = expected_payoff(x).unwrap();
            let b = expected_payoff_quadrature(x, &cfg()).unwrap();
            assert!((a - b).abs() < 1e-8, "x = {x}: {a} vs {b}");
        }
    }

    #[test]
    fn nature_distribution_examples() {
        let d = nature_distribution(1.0, 0.01).unwrap();
        assert_eq!(d, Dist::uniform(0.0, 0.01).unwrap());
        let d = nature_distribution(INV_E, 0.01).unwrap();
        assert!((d.mass_at(1.0) - (1.0 - INV_E)).abs() < 1e-15);
        for y in [INV_E, 0.5, 0.9, 1.0] {
            let d = nature_distribution(y, 1e-3).unwrap();
            assert_eq!(d.cdf(1.0), 1.0);
            let opt = asym_opt_w(&d, &Dist::point_mass(1.0).unwrap(), &cfg()).unwrap();
            assert!((opt - 1.0).abs() < 1e-12);
        }
        assert!(nature_distribution(0.5, 0.02).is_err());
    }

    #[test]
    fn concrete_welfare_closed_form() {
        let eps = 1e-3;
        for (x, y) in [(0.2, 0.5), (0.45, 0.9), (0.0, 0.7)] {
            let want = 1.0 - y + x + eps * (y / 2.0 - x * x / (2.0 * y));
            assert!((concrete_welfare(x, y, eps).unwrap() - want).abs() < 1e-12);
        }
        let (x, y) = (0.8, 0.5);
        assert!((concrete_welfare(x, y, eps).unwrap() - (1.0 - y + y * eps / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn per_level_error_is_linear_in_eps() {
        let levels = [0.0, 0.2, INV_E, 0.5, 0.9, 0.999];
        let mut prev: Option<Vec<f64>> = None;
        for eps in [1e-2, 1e-3, 1e-4] {
            let gaps: Vec<f64> = levels
                .iter()
                .map(|&x| simulated_value(x, eps, &cfg()).unwrap() - expected_payoff(x).unwrap())
                .collect();
            for g in &gaps {
                assert!(g.abs() <= 3.0 * eps, "{gaps:?} at {eps}");
            }
            if let Some(p) = prev {
                for (a, b) in p.iter().zip(&gaps) {
                    assert!((a / 10.0 - b).abs() < 1e-8, "{a} -> {b}");
                }
            }
            prev = Some(gaps);
        }
    }

    #[test]
    fn simulation_respects_the_bound() {
        let game = GameConfig {
            epsilon: 1e-4,
            x_grid: 200,
            mc_samples: 20_000,
            seed: Seed(5),
        };
        let out = simulate_game(&game, &cfg()).unwrap();
        assert!(out.sup_value <= GAME_VALUE + 3.0 * game.epsilon);
        assert!(out.sup_value >= GAME_VALUE - 1e-3);
        assert!(out.plateau_spread < 1e-6 + 3.0 * game.epsilon);
        let x0 = out.rows[0];
        assert!((x0.simulated - (1.0 - 2.0 / E)).abs() <= 3.0 * game.epsilon);
        let (mc, se) = (out.mc_value.unwrap(), out.mc_stderr.unwrap());
        assert!(
            (mc - out.sup_value).abs() < 4.0 * se + 1e-9,
            "{mc} vs {} (se {se})",
            out.sup_value
        );
    }

    #[test]
    fn config_validation() {
        let mut g = GameConfig::default();
        g.validate().unwrap();
        g.epsilon = 0.0;
        assert!(g.validate().is_err());
        g = GameConfig {
            x_grid: 10,
            ..GameConfig::default()
        };
        assert!(g.validate().is_err());
        g = GameConfig {
            mc_samples: 10,
            ..GameConfig::default()
        };
        assert!(g.validate().is_err());
    }
}
