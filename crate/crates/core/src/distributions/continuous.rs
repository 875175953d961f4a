use super::{Distribution, DistributionError, PriceState};

/// Uniform on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    a: f64,
    b: f64,
}

impl Uniform {
    pub fn new(a: f64, b: f64) -> Result<Self, DistributionError> {
        if !a.is_finite() || a < 0.0 {
            return Err(DistributionError::InvalidParameter {
                name: "a",
                value: a,
                reason: "must be finite and nonnegative",
            });
        }
        if !b.is_finite() || b <= a {
            return Err(DistributionError::InvalidParameter {
                name: "b",
                value: b,
                reason: "must be finite and greater than a",
            });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

impl Distribution for Uniform {
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    fn prob_lt(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn quantile(&self, q: f64) -> f64 {
        self.a + q.clamp(0.0, 1.0) * (self.b - self.a)
    }

    fn mean(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        let t = t.clamp(self.a, self.b);
        (t - self.a) * (t + self.a) / (2.0 * (self.b - self.a))
    }

    fn support_lo(&self) -> f64 {
        self.a
    }

    fn support_hi(&self) -> f64 {
        self.b
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
}

/// Exponential with the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self, DistributionError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(DistributionError::InvalidParameter {
                name: "rate",
                value: rate,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl Distribution for Exponential {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate * x).exp_m1()
        }
    }

    fn prob_lt(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            0.0
        } else if q >= 1.0 {
            f64::INFINITY
        } else {
            -(-q).ln_1p() / self.rate
        }
    }

    fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t == f64::INFINITY {
            return self.mean();
        }
        let z = self.rate * t;
        // 1 - e^{-z}(1 + z), with a series for small z to avoid cancellation.
        let head = if z < 1e-3 {
            z * z * (0.5 - z / 3.0 + z * z / 8.0)
        } else {
            -(-z).exp_m1() - z * (-z).exp()
        };
        head / self.rate
    }

    fn support_lo(&self) -> f64 {
        0.0
    }

    fn support_hi(&self) -> f64 {
        f64::INFINITY
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        Vec::new()
    }
}

/// `F(x) = min(x^r, 1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    r: f64,
}

impl Power {
    pub fn new(r: f64) -> Result<Self, DistributionError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(DistributionError::InvalidParameter {
                name: "r",
                value: r,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

impl Distribution for Power {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            x.powf(self.r)
        }
    }

    fn prob_lt(&self, x: f64) -> f64 {
        self.cdf(x)
    }

    fn quantile(&self, q: f64) -> f64 {
        q.clamp(0.0, 1.0).powf(1.0 / self.r)
    }

    fn mean(&self) -> f64 {
        self.r / (self.r + 1.0)
    }

    fn partial_expectation_below(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= 1.0 {
            self.mean()
        } else {
            self.mean() * t.powf(self.r + 1.0)
        }
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

    // For small r the quantile u^(1/r) underflows long before the level does,
    // so evaluate the CDF and partial expectation directly in level space.
    fn state_at_level(&self, u: f64) -> PriceState {
        let u = u.clamp(0.0, 1.0);
        let price = self.quantile(u);
        PriceState {
            price,
            below: u,
            at_or_below: u,
            partial: self.mean() * u * price,
        }
    }

    // Prices 2^-k sit at levels 2^(-k r), which crowd against 1 when r is
    // small; without these breaks the quadrature can step over the rise.
    fn level_breaks(&self) -> Vec<f64> {
        (1..=64)
            .map(|k| (-(k as f64) * self.r * std::f64::consts::LN_2).exp())
            .filter(|&u| u > 0.0 && u < 1.0)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_queries() {
        let u = Uniform::new(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.25), 0.25);
        assert_eq!(u.quantile(0.25), 0.25);
        assert_eq!(u.partial_expectation_below(1.0), 0.5);
        assert_eq!(u.partial_expectation_below(0.5), 0.125);
        assert!(Uniform::new(1.0, 1.0).is_err());
        assert!(Uniform::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn exponential_partial_expectation() {
        let e = Exponential::new(2.0).unwrap();
        assert_eq!(e.partial_expectation_below(f64::INFINITY), 0.5);
        assert!((e.partial_expectation_below(50.0) - 0.5).abs() < 1e-15);
        // small-argument series agrees with the direct expression
        let t = 4.0e-4;
        let z: f64 = 2.0 * t;
        let direct = (1.0 - (-z).exp() * (1.0 + z)) / 2.0;
        assert!((e.partial_expectation_below(t) - direct).abs() < 1e-13);
        assert!((e.quantile(e.cdf(1.3)) - 1.3).abs() < 1e-12);
        assert_eq!(e.quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn power_level_state_survives_underflow() {
        let p = Power::new(1e-4).unwrap();
        let s = p.state_at_level(0.5);
        assert_eq!(s.price, 0.0);
        assert_eq!(s.at_or_below, 0.5);
        let direct = p.state_at(0.5f64.powf(1e4));
        assert_eq!(direct.at_or_below, 0.0);
    }

    #[test]
    fn power_one_is_uniform() {
        let p = Power::new(1.0).unwrap();
        let u = Uniform::new(0.0, 1.0).unwrap();
        for x in [0.1, 0.4, 0.8] {
            assert!((p.cdf(x) - u.cdf(x)).abs() < 1e-15);
            assert!((p.partial_expectation_below(x) - u.partial_expectation_below(x)).abs() < 1e-15);
        }
    }
}
