use std::fmt;

use serde::Serialize;

use super::Distribution;
use crate::numerics::QuadratureConfig;

/// One violated constraint, located by a JSON path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

const GRID: usize = 257;
const TOL: f64 = 1e-9;

/// Checks the distribution contract on a grid plus every atom location:
/// monotone right-continuous CDF vanishing below zero, `P[X<t] <= P[X<=t]`,
/// atom masses summing to at most one, finite mean equal to the total
/// partial expectation, and the quantile/CDF Galois inequalities.
pub fn check_invariants(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |m: String| out.push(Violation::new("$", m));

    let hi = dist.integration_hi(cfg);
    let atoms = dist.atoms();
    let mut points: Vec<f64> = (0..GRID).map(|i| hi * i as f64 / (GRID - 1) as f64).collect();
    for &(x, _) in &atoms {
        points.extend([x, x * (1.0 - 1e-12), x + 1e-12 * x.max(1.0)]);
    }
    points.sort_by(f64::total_cmp);

    if dist.cdf(-1.0) != 0.0 || dist.cdf(-f64::MIN_POSITIVE) != 0.0 {
        bad("cdf must vanish below zero".into());
    }
    let mut prev = 0.0;
    for &x in &points {
        let (lt, le) = (dist.prob_lt(x), dist.cdf(x));
        if !(0.0..=1.0).contains(&le) {
            bad(format!("cdf({x}) = {le} outside [0, 1]"));
        }
        if le + 1e-15 < prev {
            bad(format!("cdf decreases at {x}"));
        }
        if lt > le + 1e-15 {
            bad(format!("P[X < {x}] = {lt} exceeds P[X <= {x}] = {le}"));
        }
        prev = le;
    }
    let top = dist.support_hi();
    if top.is_finite() && (dist.cdf(top) - 1.0).abs() > 1e-12 {
        bad(format!("cdf at the top of the support is {}", dist.cdf(top)));
    }

    let mass: f64 = atoms.iter().map(|a| a.1).sum();
    if mass > 1.0 + 1e-12 {
        bad(format!("atom masses sum to {mass}"));
    }
    for &(x, m) in &atoms {
        if (dist.mass_at(x) - m).abs() > 1e-12 {
            bad(format!(
                "atom at {x} has mass {m} but the cdf jumps by {}",
                dist.mass_at(x)
            ));
        }
    }

    let mean = dist.mean();
    if !mean.is_finite() || mean < 0.0 {
        bad(format!("mean {mean} must be finite and nonnegative"));
    }
    let total = dist.partial_expectation_below(if top.is_finite() { top } else { f64::INFINITY });
    if (total - mean).abs() > TOL * mean.max(1.0) {
        bad(format!(
            "partial expectation at the top {total} differs from the mean {mean}"
        ));
    }

    for i in 1..64 {
        let q = i as f64 / 64.0;
        let x = dist.quantile(q);
        if dist.cdf(x) < q - 1e-12 {
            bad(format!("cdf(quantile({q})) = {} below {q}", dist.cdf(x)));
        }
    }
    for &x in &points {
        let q = dist.cdf(x);
        // Near q = 1 the CDF has no resolution left, so skip the far tail.
        if q > 0.0 && q < 1.0 - 1e-3 && dist.quantile(q) > x + 1e-12 * x.max(1.0) {
            bad(format!("quantile(cdf({x})) = {} exceeds {x}", dist.quantile(q)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Dist;

    #[test]
    fn shipped_families_pass() {
        let cfg = QuadratureConfig::default();
        let families = [
            Dist::uniform(0.0, 1.0).unwrap(),
            Dist::exponential(1.5).unwrap(),
            Dist::power(0.5).unwrap(),
            Dist::power(3.0).unwrap(),
            Dist::discrete([(0.0, 0.2), (0.4, 0.5), (1.0, 0.3)]).unwrap(),
            Dist::mixture(vec![
                (0.5, Dist::uniform(0.0, 1.0).unwrap()),
                (0.5, Dist::point_mass(0.5).unwrap()),
            ])
            .unwrap(),
            Dist::truncate(Dist::exponential(1.0).unwrap(), 2.0).unwrap(),
        ];
        for d in &families {
            let v = check_invariants(d, &cfg);
            assert!(v.is_empty(), "{d:?}: {v:?}");
        }
    }

    #[test]
    fn broken_distribution_is_flagged() {
        #[derive(Debug)]
        struct Broken;
        impl Distribution for Broken {
            fn cdf(&self, x: f64) -> f64 {
                if x < 0.5 {
                    0.6
                } else {
                    0.4
                }
            }
            fn prob_lt(&self, x: f64) -> f64 {
                self.cdf(x)
            }
            fn quantile(&self, _: f64) -> f64 {
                0.0
            }
            fn mean(&self) -> f64 {
                0.5
            }
            fn partial_expectation_below(&self, _: f64) -> f64 {
                0.1
            }
            fn support_lo(&self) -> f64 {
                0.0
            }
            fn support_hi(&self) -> f64 {
                1.0
            }
            fn atoms(&self) -> Vec<(f64, f64)> {
                Vec::new()
            }
        }
        let v = check_invariants(&Broken, &QuadratureConfig::default());
        assert!(v.len() >= 3);
    }
}
