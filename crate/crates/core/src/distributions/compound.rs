use rand::RngCore;

use super::{open_unit, Dist, Distribution, DistributionError, PriceState};
use crate::numerics::invert_monotone;

const WEIGHT_TOL: f64 = 1e-12;

/// Finite mixture `sum_i w_i F_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    parts: Vec<(f64, Dist)>,
}

impl Mixture {
    pub fn new(parts: Vec<(f64, Dist)>) -> Result<Self, DistributionError> {
        if parts.is_empty() {
            return Err(DistributionError::EmptyMixture);
        }
        for (w, _) in &parts {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(DistributionError::InvalidParameter {
                    name: "weight",
                    value: *w,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        let sum: f64 = parts.iter().map(|p| p.0).sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(DistributionError::MassSum { sum });
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[(f64, Dist)] {
        &self.parts
    }

    fn weighted(&self, f: impl Fn(&Dist) -> f64) -> f64 {
        self.parts.iter().map(|(w, d)| w * f(d)).sum()
    }
}

impl Distribution for Mixture {
    fn cdf(&self, x: f64) -> f64 {
        self.weighted(|d| d.cdf(x)).min(1.0)
    }

    fn prob_lt(&self, x: f64) -> f64 {
        self.weighted(|d| d.prob_lt(x)).min(1.0)
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.support_lo();
        }
        if q >= 1.0 {
            return self.support_hi();
        }
        // The mixture quantile lies between the component quantiles.
        let (lo, hi) = self
            .parts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, d)| {
                let x = d.quantile(q);
                (lo.min(x), hi.max(x))
            });
        invert_monotone(|x| self.cdf(x), q, lo, hi).unwrap_or(hi)
    }

    fn mean(&self) -> f64 {
        self.weighted(|d| d.mean())
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        self.weighted(|d| d.partial_expectation_below(t))
    }

    fn support_lo(&self) -> f64 {
        self.parts
            .iter()
            .map(|(_, d)| d.support_lo())
            .fold(f64::INFINITY, f64::min)
    }

    fn support_hi(&self) -> f64 {
        self.parts.iter().map(|(_, d)| d.support_hi()).fold(0.0, f64::max)
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        let mut all: Vec<(f64, f64)> = self
            .parts
            .iter()
            .flat_map(|(w, d)| d.atoms().into_iter().map(move |(x, m)| (x, w * m)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(all.len());
        for (x, m) in all {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }
        merged
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u = open_unit(rng);
        let mut acc = 0.0;
        for (w, d) in &self.parts {
            acc += w;
            if u < acc {
                return d.sample(rng);
            }
        }
        self.parts.last().expect("nonempty").1.sample(rng)
    }
}

/// `min(X, cap)`: all mass above `cap` moves to an atom at `cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    base: Box<Dist>,
    cap: f64,
}

impl Truncation {
    pub fn new(base: Dist, cap: f64) -> Result<Self, DistributionError> {
        if !(cap > 0.0 && cap.is_finite()) {
            return Err(DistributionError::InvalidParameter {
                name: "cap",
                value: cap,
                reason: "must be positive and finite",
            });
        }
        Ok(Self {
            base: Box::new(base),
            cap,
        })
    }

    pub fn base(&self) -> &Dist {
        &self.base
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

impl Distribution for Truncation {
    fn cdf(&self, x: f64) -> f64 {
        if x >= self.cap {
            1.0
        } else {
            self.base.cdf(x)
        }
    }

    fn prob_lt(&self, x: f64) -> f64 {
        if x > self.cap {
            1.0
        } else {
            self.base.prob_lt(x)
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        self.base.quantile(q).min(self.cap)
    }

    fn mean(&self) -> f64 {
        self.partial_expectation_below(self.cap)
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        if t < self.cap {
            self.base.partial_expectation_below(t)
        } else {
            let below = self.base.prob_lt(self.cap);
            let strictly = self.base.partial_expectation_below(self.cap) - self.cap * self.base.mass_at(self.cap);
            strictly + self.cap * (1.0 - below)
        }
    }

    fn support_lo(&self) -> f64 {
        self.base.support_lo().min(self.cap)
    }

    fn support_hi(&self) -> f64 {
        self.base.support_hi().min(self.cap)
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.base.atoms().into_iter().filter(|(x, _)| *x < self.cap).collect();
        let top = 1.0 - self.base.prob_lt(self.cap);
        if top > 0.0 {
            out.push((self.cap, top));
        }
        out
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.base.sample(rng).min(self.cap)
    }

    fn state_at_level(&self, u: f64) -> PriceState {
        let inner = self.base.state_at_level(u);
        if inner.price >= self.cap {
            self.state_at(self.cap)
        } else {
            inner
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DiscreteDistribution, Uniform};

    fn half_uniform_half_atom() -> Mixture {
        Mixture::new(vec![
            (0.5, Dist::Uniform(Uniform::new(0.0, 1.0).unwrap())),
            (0.5, Dist::Discrete(DiscreteDistribution::point_mass(0.5).unwrap())),
        ])
        .unwrap()
    }

    #[test]
    fn mixture_cdf_and_atoms() {
        let m = half_uniform_half_atom();
        assert!((m.cdf(0.5) - 0.75).abs() < 1e-15);
        assert!((m.prob_lt(0.5) - 0.25).abs() < 1e-15);
        assert_eq!(m.atoms(), vec![(0.5, 0.5)]);
        assert!((m.mean() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixture_quantile_finds_atom_exactly() {
        let m = half_uniform_half_atom();
        assert_eq!(m.quantile(0.6), 0.5);
        assert!((m.quantile(0.1) - 0.2).abs() < 1e-15);
        assert!((m.quantile(0.9) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let u = Dist::Uniform(Uniform::new(0.0, 1.0).unwrap());
        assert!(Mixture::new(vec![(0.5, u.clone()), (0.6, u.clone())]).is_err());
        assert!(Mixture::new(vec![(0.0, u.clone()), (1.0, u)]).is_err());
        assert!(matches!(Mixture::new(vec![]), Err(DistributionError::EmptyMixture)));
    }

    #[test]
    fn truncation_moves_tail_to_cap() {
        let t = Truncation::new(Dist::Uniform(Uniform::new(0.0, 1.0).unwrap()), 0.6).unwrap();
        assert!((t.cdf(0.59) - 0.59).abs() < 1e-15);
        assert_eq!(t.cdf(0.6), 1.0);
        assert!((t.prob_lt(0.6) - 0.6).abs() < 1e-15);
        assert_eq!(t.atoms().len(), 1);
        assert!((t.atoms()[0].1 - 0.4).abs() < 1e-15);
        // E[min(U, 0.6)] = 0.18 + 0.24
        assert!((t.mean() - 0.42).abs() < 1e-15);
        assert_eq!(t.quantile(0.9), 0.6);
    }

    #[test]
    fn truncation_of_atom_at_cap() {
        let base = Dist::Discrete(DiscreteDistribution::new([(0.2, 0.5), (0.6, 0.25), (0.9, 0.25)]).unwrap());
        let t = Truncation::new(base, 0.6).unwrap();
        assert_eq!(t.atoms(), vec![(0.2, 0.5), (0.6, 0.5)]);
        assert!((t.mean() - 0.4).abs() < 1e-15);
    }
}
