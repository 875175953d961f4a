use rand::RngCore;

use super::{open_unit, Distribution, DistributionError, PriceState};

/// Finitely many atoms. Every query is an exact finite sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    xs: Vec<f64>,
    /// Masses as given, kept for lossless serialization.
    given: Vec<f64>,
    /// Masses normalized to sum to one.
    ps: Vec<f64>,
    /// `cum[i] = P[X <= xs[i]]`, with the last entry exactly 1.
    cum: Vec<f64>,
    /// `partial[i] = E[X 1{X <= xs[i]}]`.
    partial: Vec<f64>,
    mean: f64,
}

const MASS_TOL: f64 = 1e-12;

impl DiscreteDistribution {
    /// Builds from `(location, mass)` pairs in any order. Locations must be
    /// distinct, finite and nonnegative; masses in `(0, 1]` summing to one.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, DistributionError> {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().collect();
        if atoms.is_empty() {
            return Err(DistributionError::Empty);
        }
        for &(x, p) in &atoms {
            if !x.is_finite() || x < 0.0 {
                return Err(DistributionError::InvalidParameter {
                    name: "location",
                    value: x,
                    reason: "must be finite and nonnegative",
                });
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(DistributionError::InvalidParameter {
                    name: "mass",
                    value: p,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = atoms.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(DistributionError::DuplicateAtom { x: w[0].0 });
        }
        let sum: f64 = atoms.iter().map(|a| a.1).sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(DistributionError::MassSum { sum });
        }

        let xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let given: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let ps: Vec<f64> = given.iter().map(|p| p / sum).collect();
        let mut cum = Vec::with_capacity(xs.len());
        let mut partial = Vec::with_capacity(xs.len());
        let (mut c, mut e) = (0.0, 0.0);
        for (x, p) in xs.iter().zip(&ps) {
            c += p;
            e += x * p;
            cum.push(c.min(1.0));
            partial.push(e);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok(Self {
            mean: e,
            xs,
            given,
            ps,
            cum,
            partial,
        })
    }

    pub fn point_mass(x: f64) -> Result<Self, DistributionError> {
        Self::new([(x, 1.0)])
    }

    pub fn locations(&self) -> &[f64] {
        &self.xs
    }

    /// Normalized masses aligned with [`locations`](Self::locations).
    pub fn masses(&self) -> &[f64] {
        &self.ps
    }

    pub(crate) fn given_masses(&self) -> &[f64] {
        &self.given
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ps.iter().copied())
    }

    /// Number of atoms at or below `x`.
    fn count_le(&self, x: f64) -> usize {
        self.xs.partition_point(|&a| a <= x)
    }

    fn count_lt(&self, x: f64) -> usize {
        self.xs.partition_point(|&a| a < x)
    }
}

impl Distribution for DiscreteDistribution {
    fn cdf(&self, x: f64) -> f64 {
        match self.count_le(x) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    fn prob_lt(&self, x: f64) -> f64 {
        match self.count_lt(x) {
            0 => 0.0,
            k => self.cum[k - 1],
        }
    }

    fn quantile(&self, q: f64) -> f64 {
        let k = self.cum.partition_point(|&c| c < q);
        self.xs[k.min(self.xs.len() - 1)]
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        match self.count_le(t) {
            0 => 0.0,
            k => self.partial[k - 1],
        }
    }

    fn support_lo(&self) -> f64 {
        self.xs[0]
    }

    fn support_hi(&self) -> f64 {
        *self.xs.last().expect("nonempty")
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.iter().collect()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self.quantile(open_unit(rng))
    }

    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        Some(self)
    }

    fn state_at(&self, price: f64) -> PriceState {
        let le = self.count_le(price);
        let lt = if le > 0 && self.xs[le - 1] == price { le - 1 } else { le };
        let at = |k: usize, v: &[f64]| if k == 0 { 0.0 } else { v[k - 1] };
        PriceState {
            price,
            below: at(lt, &self.cum),
            at_or_below: at(le, &self.cum),
            partial: at(le, &self.partial),
        }
    }
}
