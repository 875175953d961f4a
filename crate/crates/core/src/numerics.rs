//! Shared numerical kernel.
//!
//! Adaptive Gauss-Kronrod (7/15) quadrature with caller-supplied breakpoints,
//! generalized inversion of nondecreasing functions, and seedable splittable
//! random number generation. Every CDF-based integrand in the crate goes
//! through [`integrate`], and every jump of a CDF is passed as a breakpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    NonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("level {q} is not bracketed: F(hi) = {at_hi}")]
    NotBracketed { q: f64, at_hi: f64 },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of interval bisections after the initial split at breakpoints.
    pub max_subdivisions: usize,
    /// Level at which unbounded supports are truncated for integration.
    pub tail_quantile: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 2000,
            tail_quantile: 1.0 - 1e-12,
        }
    }
}

impl QuadratureConfig {
    /// Default limits with both tolerances replaced.
    pub fn with_tolerance(abs_tol: f64, rel_tol: f64) -> Result<Self, NumericsError> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.abs_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("abs_tol must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(NumericsError::InvalidConfig("rel_tol must be positive"));
        }
        if self.max_subdivisions < 16 {
            return Err(NumericsError::InvalidConfig("max_subdivisions must be at least 16"));
        }
        if !(self.tail_quantile > 0.0 && self.tail_quantile < 1.0) {
            return Err(NumericsError::InvalidConfig("tail_quantile must lie in (0, 1)"));
        }
        Ok(())
    }

    fn tolerance(&self, estimate: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * estimate.abs())
    }
}

/// Seed for every stochastic operation. Streams derived with [`Seed::split`]
/// are independent, so parallel workers stay reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for worker or stream `index`.
    pub fn split(self, index: u64) -> Seed {
        Seed(splitmix64(
            self.0 ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        ))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Kronrod abscissae on [-1, 1]; odd indices are the 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint inside
/// the interval and then bisecting the worst segment until the summed error
/// estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig, breakpoints: &[f64]) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| *x > a && *x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::with_capacity(cuts.len() + 2 * cfg.max_subdivisions + 2);
    let mut left = a;
    for right in cuts.into_iter().chain(std::iter::once(b)) {
        heap.push(kronrod15(&f, left, right));
        left = right;
    }

    let mut subdivisions = 0;
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(NumericsError::NonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        if error <= cfg.tolerance(value) {
            return Ok(value);
        }
        let worst = heap.pop().expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if subdivisions >= cfg.max_subdivisions || mid <= worst.a || mid >= worst.b {
            return Err(NumericsError::NonConvergence {
                estimate: value,
                error,
                subdivisions,
            });
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        subdivisions += 1;
    }
}

/// Generalized inverse `inf { x in [lo, hi] : F(x) >= q }` of a
/// nondecreasing `F`, by bisection down to adjacent doubles. Levels at or
/// below `F(lo)` return `lo`; jumps of a step function are located exactly.
pub fn invert_monotone<F>(f: F, q: f64, lo: f64, hi: f64) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    if !(lo <= hi) || lo.is_nan() || hi.is_nan() {
        return Err(NumericsError::InvalidInterval { a: lo, b: hi });
    }
    if f(lo) >= q {
        return Ok(lo);
    }
    let at_hi = f(hi);
    if at_hi < q {
        return Err(NumericsError::NotBracketed { q, at_hi });
    }
    let (mut below, mut above) = (lo, hi);
    for _ in 0..2200 {
        let mid = below + 0.5 * (above - below);
        if mid <= below || mid >= above {
            break;
        }
        if f(mid) >= q {
            above = mid;
        } else {
            below = mid;
        }
    }
    Ok(above)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn integrates_parabola_to_one_sixth() {
        let v = integrate(|x| x * (1.0 - x), 0.0, 1.0, &cfg(), &[]).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_integrand() {
        assert_eq!(integrate(|_| 0.0, 0.0, 5.0, &cfg(), &[]).unwrap(), 0.0);
    }

    #[test]
    fn step_function_with_breakpoint_is_exact() {
        let step = |x: f64| if x >= 0.5 { 1.0 } else { 0.0 };
        let v = integrate(step, 0.0, 1.0, &cfg(), &[0.5]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_function_without_breakpoint_still_converges() {
        let step = |x: f64| if x >= 0.3 { 1.0 } else { 0.0 };
        let v = integrate(step, 0.0, 1.0, &cfg(), &[]).unwrap();
        assert!((v - 0.7).abs() < 1e-9);
    }

    #[test]
    fn sqrt_singularity() {
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, &cfg(), &[]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn log_singularity() {
        let v = integrate(|x: f64| -x.ln(), 0.0, 1.0, &cfg(), &[]).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reversed_interval_is_rejected() {
        assert!(matches!(
            integrate(|x| x, 1.0, 0.0, &cfg(), &[]),
            Err(NumericsError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn starved_budget_reports_non_convergence() {
        let tight = QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-15,
            max_subdivisions: 16,
            ..cfg()
        };
        let r = integrate(|x: f64| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, &tight, &[]);
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        assert!(QuadratureConfig::with_tolerance(0.0, 1e-8).is_err());
        let bad = QuadratureConfig {
            max_subdivisions: 8,
            ..cfg()
        };
        assert!(bad.validate().is_err());
        let bad = QuadratureConfig {
            tail_quantile: 1.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn inverts_identity() {
        let x = invert_monotone(|x| x, 0.25, 0.0, 1.0).unwrap();
        assert!((x - 0.25).abs() < 1e-15);
    }

    #[test]
    fn inverts_single_atom_exactly() {
        let step = |x: f64| if x >= 0.7 { 1.0 } else { 0.0 };
        assert_eq!(invert_monotone(step, 0.5, 0.0, 1.0).unwrap(), 0.7);
    }

    #[test]
    fn inverts_square() {
        let x = invert_monotone(|x: f64| (x * x).min(1.0), 0.25, 0.0, 1.0).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn level_below_range_returns_lo() {
        assert_eq!(invert_monotone(|x| x, -1.0, 0.2, 1.0).unwrap(), 0.2);
    }

    #[test]
    fn unbracketed_level_is_an_error() {
        assert!(matches!(
            invert_monotone(|x| 0.5 * x, 0.9, 0.0, 1.0),
            Err(NumericsError::NotBracketed { .. })
        ));
    }

    #[test]
    fn split_seeds_are_distinct_and_stable() {
        let s = Seed(42);
        assert_eq!(s.split(3), s.split(3));
        assert_ne!(s.split(3), s.split(4));
        assert_ne!(s.split(0), s);
    }

    fn poly(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    proptest! {
        #[test]
        fn integration_is_linear(
            f in prop::collection::vec(-3.0..3.0f64, 1..6),
            g in prop::collection::vec(-3.0..3.0f64, 1..6),
            alpha in -2.0..2.0f64,
            beta in -2.0..2.0f64,
            a in -1.0..0.5f64,
            width in 0.01..2.0f64,
        ) {
            let c = cfg();
            let b = a + width;
            let lhs = integrate(|x| alpha * poly(&f, x) + beta * poly(&g, x), a, b, &c, &[]).unwrap();
            let rf = integrate(|x| poly(&f, x), a, b, &c, &[]).unwrap();
            let rg = integrate(|x| poly(&g, x), a, b, &c, &[]).unwrap();
            prop_assert!((lhs - (alpha * rf + beta * rg)).abs() <= 2.0 * c.abs_tol);
        }

        #[test]
        fn inversion_undoes_strictly_increasing_cdf(q in 0.001..0.999f64, r in 0.2..5.0f64) {
            let cdf = |x: f64| x.powf(r).min(1.0);
            let x = invert_monotone(cdf, q, 0.0, 1.0).unwrap();
            prop_assert!((cdf(x) - q).abs() < 1e-12);
        }
    }
}
