use std::f64::consts::E;

use rayon::prelude::*;

use super::MechanismError;
use crate::distributions::{Distribution, PriceState};
use crate::measures::{asym_opt_w, asym_welfare_at, expected_shortfall};
use crate::numerics::{integrate, QuadratureConfig};

/// Welfare at the seller state `s`, trading when `B > p >= S`.
pub(crate) fn welfare_at_seller_state(s: &PriceState, seller: &dyn Distribution, buyer: &dyn Distribution) -> f64 {
    asym_welfare_at(s, seller.mean(), &buyer.state_at(s.price), buyer.mean())
}

/// Support `[Q_S(1/e), sup S]` of the randomized price `G*(x) = 1 + ln F_S(x)`.
///
/// Fails with [`MechanismError::DegenerateSupport`] when the interval is a
/// single point, in which case `G*` is the point mass there.
pub fn gstar_support(seller: &dyn Distribution) -> Result<(f64, f64), MechanismError> {
    let lo = seller.quantile(1.0 / E);
    let hi = seller.support_hi();
    if lo >= hi {
        return Err(MechanismError::DegenerateSupport { point: lo });
    }
    Ok((lo, hi))
}

/// `E[W(p)]` for `p ~ G*`.
///
/// `G*` is the quantile rule posting `Q_S(u)` with `u` of density `1/u` on
/// `[1/e, 1]`; substituting `u = e^(v-1)` makes `v` uniform. Atoms of `F_S`
/// carry `G*` mass equal to the log-increment of their level interval.
pub fn gstar_expected_welfare(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MechanismError> {
    if let Err(MechanismError::DegenerateSupport { point }) = gstar_support(seller) {
        return Ok(welfare_at_seller_state(&seller.state_at(point), seller, buyer));
    }
    let floor = 1.0 / E;
    if let Some(d) = seller.as_discrete() {
        let mut total = 0.0;
        for (x, _) in d.iter() {
            let s = d.state_at(x);
            if s.at_or_below <= floor {
                continue;
            }
            let mass = s.at_or_below.ln() - s.below.max(floor).ln();
            total += mass * welfare_at_seller_state(&s, seller, buyer);
        }
        return Ok(total);
    }
    let mut levels = seller.level_breaks();
    for (b, _) in buyer.atoms() {
        levels.extend([seller.prob_lt(b), seller.cdf(b)]);
    }
    let breaks: Vec<f64> = levels
        .into_iter()
        .filter(|u| *u > floor && *u < 1.0)
        .map(|u| 1.0 + u.ln())
        .collect();
    let v = integrate(
        |v| welfare_at_seller_state(&seller.state_at_level((v - 1.0).exp()), seller, buyer),
        0.0,
        1.0,
        cfg,
        &breaks,
    )?;
    Ok(v)
}

/// `(1 - 1/e) OPT-W + (1/e) E[(S-B)+]`, the guarantee of the `G*` price.
pub fn gstar_lower_bound(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MechanismError> {
    let opt = asym_opt_w(seller, buyer, cfg)?;
    let shortfall = expected_shortfall(seller, buyer, cfg)?;
    Ok((1.0 - 1.0 / E) * opt + shortfall / E)
}

/// Candidate prices in the support of `G*`: a grid of levels plus every
/// atom of either side inside the support, approached from both sides.
pub(crate) fn gstar_candidates(seller: &dyn Distribution, buyer: &dyn Distribution, grid: usize) -> Vec<f64> {
    let (lo, hi) = match gstar_support(seller) {
        Ok(range) => range,
        Err(_) => return vec![seller.quantile(1.0 / E)],
    };
    let mut out: Vec<f64> = (0..grid)
        .map(|k| seller.quantile((k as f64 / (grid - 1) as f64 - 1.0).exp()))
        .filter(|p| p.is_finite())
        .collect();
    for (x, _) in seller.atoms().into_iter().chain(buyer.atoms()) {
        for p in [x, x.next_down()] {
            if p >= lo && p <= hi {
                out.push(p);
            }
        }
    }
    out
}

/// Expected welfare of the quantile rule posting `Q_S(g)` for `g ~ levels`.
pub fn quantile_rule_expected_welfare(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    levels: &dyn Distribution,
    cfg: &QuadratureConfig,
) -> Result<f64, MechanismError> {
    if levels.support_lo() < 0.0 || levels.support_hi() > 1.0 {
        return Err(MechanismError::LevelsOutsideUnit {
            lo: levels.support_lo(),
            hi: levels.support_hi(),
        });
    }
    Ok(levels.expect(
        &|g| welfare_at_seller_state(&seller.state_at_level(g), seller, buyer),
        cfg,
    )?)
}

/// The welfare-maximizing fixed price over a candidate grid: all atoms of
/// both sides and their neighbouring doubles, midpoints between consecutive
/// atoms, `grid_size` equispaced quantiles of each side, and both means.
/// Ties (within `1e-12` relative) go to the lowest price.
pub fn best_fixed_price(
    seller: &dyn Distribution,
    buyer: &dyn Distribution,
    grid_size: usize,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64), MechanismError> {
    if grid_size < 10 {
        return Err(MechanismError::GridTooSmall {
            size: grid_size,
            min: 10,
        });
    }
    let mut atoms: Vec<f64> = seller.atoms().into_iter().chain(buyer.atoms()).map(|a| a.0).collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();

    let mut candidates = vec![0.0, seller.mean(), buyer.mean()];
    for &x in &atoms {
        candidates.extend([x, x.next_down(), x.next_up()]);
    }
    candidates.extend(atoms.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let top = seller.integration_hi(cfg).max(buyer.integration_hi(cfg));
    candidates.push(top.next_up());
    for k in 0..grid_size {
        let q = (k as f64 + 0.5) / grid_size as f64;
        candidates.extend([seller.quantile(q), buyer.quantile(q)]);
    }
    candidates.retain(|p| p.is_finite() && *p >= 0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let values: Vec<f64> = candidates
        .par_iter()
        .map(|&p| welfare_at_seller_state(&seller.state_at(p), seller, buyer))
        .collect();
    Ok(argmax_lowest(&candidates, &values))
}

/// Argmax with ties (within `1e-12` relative) resolved to the earliest entry.
pub(crate) fn argmax_lowest(prices: &[f64], values: &[f64]) -> (f64, f64) {
    let mut best = (prices[0], values[0]);
    for (&p, &w) in prices.iter().zip(values).skip(1) {
        if w > best.1 + 1e-12 * best.1.abs().max(1.0) {
            best = (p, w);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DiscreteDistribution, Dist};
    use crate::measures::{asym_welfare, MeasureReport};
    use crate::measures::{mc_oracle, PriceDraw, TieBreak};
    use crate::numerics::Seed;
    use proptest::prelude::*;
    use rand::RngCore;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn atom(c: f64) -> Dist {
        Dist::point_mass(c).unwrap()
    }

    #[test]
    fn gstar_degenerate_support() {
        let (s, b) = (atom(0.0), atom(1.0));
        assert!(matches!(
            gstar_support(&s),
            Err(MechanismError::DegenerateSupport { .. })
        ));
        assert_eq!(gstar_expected_welfare(&s, &b, &cfg()).unwrap(), 1.0);
        assert!(gstar_lower_bound(&s, &b, &cfg()).unwrap() <= 1.0);
    }

    struct GStarDraw<'a>(&'a Dist);
    impl PriceDraw for GStarDraw<'_> {
        fn draw(&self, rng: &mut dyn RngCore) -> f64 {
            let v = crate::distributions::open_unit(rng);
            self.0.quantile((v - 1.0).exp())
        }
    }

    #[test]
    fn gstar_uniform_pair_matches_monte_carlo_and_bound() {
        let u = Dist::uniform(0.0, 1.0).unwrap();
        let w = gstar_expected_welfare(&u, &u, &cfg()).unwrap();
        let bound = gstar_lower_bound(&u, &u, &cfg()).unwrap();
        assert!(w >= bound - 1e-6);
        assert!((bound - ((1.0 - 1.0 / E) * 2.0 / 3.0 + 1.0 / (6.0 * E))).abs() < 1e-10);
        let r: MeasureReport = mc_oracle(&u, &u, &GStarDraw(&u), TieBreak::SellerWeak, 400_000, Seed(11)).unwrap();
        assert!((r.w_at_p - w).abs() < 4.0 * r.mc_stderr.unwrap());
    }

    #[test]
    fn gstar_with_worthless_buyer_keeps_seller_value() {
        let u = Dist::uniform(0.0, 1.0).unwrap();
        let w = gstar_expected_welfare(&u, &atom(0.0), &cfg()).unwrap();
        assert!((w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gstar_discrete_sum_matches_quadrature_route() {
        // A mixture with a vanishing continuous part forces the quadrature path.
        let d = DiscreteDistribution::new([(0.1, 0.3), (0.4, 0.3), (0.8, 0.4)]).unwrap();
        let b = Dist::discrete([(0.2, 0.5), (0.9, 0.5)]).unwrap();
        let exact = gstar_expected_welfare(&d, &b, &cfg()).unwrap();
        let as_mixture = Dist::mixture(vec![(1.0, Dist::Discrete(d))]).unwrap();
        let quad = gstar_expected_welfare(&as_mixture, &b, &cfg()).unwrap();
        assert!((exact - quad).abs() < 1e-9, "{exact} vs {quad}");
    }

    #[test]
    fn best_fixed_price_examples() {
        let u = Dist::uniform(0.0, 1.0).unwrap();
        let (p, w) = best_fixed_price(&u, &u, 100, &cfg()).unwrap();
        assert!((p - 0.5).abs() < 1e-12 && (w - 0.625).abs() < 1e-12);

        let two = Dist::discrete([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let (p, w) = best_fixed_price(&two, &two, 100, &cfg()).unwrap();
        assert!((w - 0.75).abs() < 1e-15);
        assert!((0.0..1.0).contains(&p));
        assert_eq!(asym_welfare(0.5, &two, &two).unwrap(), w);

        let (p, w) = best_fixed_price(&atom(0.3), &atom(0.7), 100, &cfg()).unwrap();
        assert_eq!((p, w), (0.3, 0.7));
        assert!(best_fixed_price(&u, &u, 5, &cfg()).is_err());
    }

    #[test]
    fn quantile_rule_with_point_level_is_a_fixed_price() {
        let u = Dist::uniform(0.0, 1.0).unwrap();
        let half = atom(0.5);
        let w = quantile_rule_expected_welfare(&u, &u, &half, &cfg()).unwrap();
        assert!((w - 0.625).abs() < 1e-15);
        let bad = Dist::uniform(0.0, 2.0).unwrap();
        assert!(quantile_rule_expected_welfare(&u, &u, &bad, &cfg()).is_err());
    }

    fn random_discrete() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::btree_map(0u32..100, 1u32..50, 1..8).prop_map(|m| {
            let total: u32 = m.values().sum();
            DiscreteDistribution::new(m.iter().map(|(&x, &w)| (x as f64 / 99.0, w as f64 / total as f64))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn gstar_meets_its_bound(s in random_discrete(), b in random_discrete()) {
            let w = gstar_expected_welfare(&s, &b, &cfg()).unwrap();
            let bound = gstar_lower_bound(&s, &b, &cfg()).unwrap();
            prop_assert!(w >= bound - 1e-9, "{w} < {bound}");
        }

        #[test]
        fn best_fixed_price_dominates_every_atom(s in random_discrete(), b in random_discrete()) {
            let (_, w) = best_fixed_price(&s, &b, 50, &cfg()).unwrap();
            for (x, _) in s.atoms().into_iter().chain(b.atoms()) {
                for p in [x, x.next_down().max(0.0)] {
                    prop_assert!(w >= asym_welfare(p, &s, &b).unwrap() - 1e-12);
                }
            }
        }
    }
}
