//! Extremal distributions for the mean price and the scans that recover the
//! constant `(2 + sqrt 2) / 4`.

use std::f64::consts::SQRT_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{conditional_mean_below, DiscreteDistribution, Distribution, DistributionError, Power};
use crate::measures::{opt_w, welfare, MeasureError};
use crate::mechanisms::{mean_threshold, sample_price_expected_welfare, MechanismError};
use crate::numerics::QuadratureConfig;

/// `(2 + sqrt 2) / 4`, the mean-price welfare ratio.
pub const MEAN_PRICE_RATIO: f64 = (2.0 + SQRT_2) / 4.0;
/// Minimizer `sqrt 2 - 1` of the one-dimensional objective.
pub const MEAN_PRICE_ARGMIN: f64 = SQRT_2 - 1.0;
pub const MIN_SCAN_RESOLUTION: usize = 100;
/// Scans keep `mu` at most this far below 1.
pub const MU_MARGIN: f64 = 1e-6;

const MASS_SLACK: f64 = 1e-12;
const BOX_AXIS_MAX: usize = 128;

#[derive(Debug, Error)]
pub enum WorstCaseError {
    #[error("mass {mass} = {value} is outside [0, 1]")]
    InfeasibleSpec { mass: &'static str, value: f64 },
    #[error("parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("denominator {value} is not positive")]
    SingularDenominator { value: f64 },
    #[error("resolution {resolution} is below the minimum {min}")]
    ResolutionTooSmall { resolution: usize, min: usize },
    #[error("sequence index {n} must be at least 2")]
    SequenceIndex { n: usize },
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
}

fn invalid(name: &'static str, value: f64, reason: &'static str) -> WorstCaseError {
    WorstCaseError::InvalidParameter { name, value, reason }
}

/// Mean `mu`, conditional mean below the mean `mu1`, quantile of the mean
/// `gamma`, and the gap `delta` between the two middle atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourPointSpec {
    pub mu: f64,
    pub mu1: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl FourPointSpec {
    fn check(&self) -> Result<(), WorstCaseError> {
        let FourPointSpec { mu, mu1, gamma, delta } = *self;
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(invalid("mu", mu, "must lie in (0, 1]"));
        }
        if !(0.0..=mu).contains(&mu1) {
            return Err(invalid("mu1", mu1, "must lie in [0, mu]"));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(invalid("gamma", gamma, "must lie in (0, 1]"));
        }
        if !(delta.is_finite() && delta >= 0.0) || (delta == 0.0 && mu < 1.0) || mu + delta > 1.0 + MASS_SLACK {
            return Err(invalid("delta", delta, "must lie in (0, 1 - mu]"));
        }
        Ok(())
    }

    /// True when `mu + delta` coincides with the top atom at 1.
    pub fn merged(&self) -> bool {
        1.0 - self.mu - self.delta <= MASS_SLACK
    }

    /// Atom locations `[0, mu, mu + delta, 1]`.
    pub fn locations(&self) -> [f64; 4] {
        [0.0, self.mu, self.mu + self.delta, 1.0]
    }

    /// Masses `(q0, q1, q2, q3)` on the four locations.
    ///
    /// When `mu + delta = 1` the two upper atoms merge: `q2 = 0` and `q3 = 1 - gamma`,
    /// which is only consistent if `gamma mu1 + 1 - gamma = mu`.
    pub fn masses(&self) -> Result<[f64; 4], WorstCaseError> {
        self.check()?;
        let FourPointSpec { mu, mu1, gamma, delta } = *self;
        let q0 = gamma * (1.0 - mu1 / mu);
        let q1 = mu1 * gamma / mu;
        let (q2, q3) = if self.merged() {
            let mean = mu1 * gamma + 1.0 - gamma;
            if (mean - mu).abs() > 1e-10 {
                return Err(WorstCaseError::InfeasibleSpec {
                    mass: "q3",
                    value: 1.0 - gamma,
                });
            }
            (0.0, 1.0 - gamma)
        } else {
            let gap = 1.0 - mu - delta;
            (
                (1.0 - gamma - mu + mu1 * gamma) / gap,
                (mu * gamma - mu1 * gamma - delta + delta * gamma) / gap,
            )
        };
        let mut out = [q0, q1, q2, q3];
        for (q, name) in out.iter_mut().zip(["q0", "q1", "q2", "q3"]) {
            if !(-MASS_SLACK..=1.0 + MASS_SLACK).contains(q) {
                return Err(WorstCaseError::InfeasibleSpec { mass: name, value: *q });
            }
            *q = q.clamp(0.0, 1.0);
        }
        Ok(out)
    }
}

/// The distribution on `{0, mu, mu + delta, 1}` with the given three quantities.
pub fn four_point(spec: &FourPointSpec) -> Result<DiscreteDistribution, WorstCaseError> {
    let masses = spec.masses()?;
    let locations = spec.locations();
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(4);
    for (x, q) in locations.into_iter().zip(masses) {
        if q == 0.0 {
            continue;
        }
        // merged upper atoms, or mu itself at 1
        match atoms.iter_mut().find(|a| (a.0 - x).abs() <= MASS_SLACK) {
            Some(a) => a.1 += q,
            None => atoms.push((x, q)),
        }
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    Ok(DiscreteDistribution::new(
        atoms.into_iter().map(|(x, q)| (x, q / total)),
    )?)
}

/// Four-point distribution with the same three quantities as `dist`, taking
/// `delta` as the smallest gap from the mean to an atom above it.
pub fn matched_four_point(
    dist: &DiscreteDistribution,
) -> Result<(FourPointSpec, DiscreteDistribution), WorstCaseError> {
    let (lo, hi) = (dist.support_lo(), dist.support_hi());
    if lo < 0.0 || hi > 1.0 {
        return Err(invalid("support", if lo < 0.0 { lo } else { hi }, "must lie in [0, 1]"));
    }
    let mu = dist.mean();
    let at = mean_threshold(dist, mu);
    let gamma = dist.cdf(at);
    let mu1 = conditional_mean_below(dist, at)?;
    let delta = dist
        .locations()
        .iter()
        .copied()
        .filter(|&x| x > at)
        .map(|x| x - mu)
        .fold(f64::INFINITY, f64::min);
    let delta = if delta.is_finite() { delta } else { 1.0 - mu };
    let spec = FourPointSpec { mu, mu1, gamma, delta };
    let matched = four_point(&spec)?;
    Ok((spec, matched))
}

fn check_sequence_index(n: usize) -> Result<f64, WorstCaseError> {
    if n < 2 {
        return Err(WorstCaseError::SequenceIndex { n });
    }
    Ok(n as f64)
}

/// Three atoms at `{0, 1/n, 1}` whose mean-price ratio tends to `(2 + sqrt 2) / 4`.
pub fn minimizing_sequence(n: usize) -> Result<DiscreteDistribution, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    let s = SQRT_2 - 1.0;
    Ok(DiscreteDistribution::new([
        (0.0, s * (1.0 - 1.0 / nf)),
        (1.0 / nf, 2.0 - SQRT_2),
        (1.0, s / nf),
    ])?)
}

/// Closed-form mean-price welfare of [`minimizing_sequence`]: `sqrt 2 / n - (sqrt 2 - 1) / n^2`.
pub fn sequence_mean_price_welfare(n: usize) -> Result<f64, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    Ok(SQRT_2 / nf - (SQRT_2 - 1.0) / (nf * nf))
}

/// First-best welfare of [`minimizing_sequence`] as commonly printed:
/// `4 (sqrt 2 - 1) / n - (4 sqrt 2 - 1) / n^2`.
///
/// The second coefficient is wrong (the value is negative at `n = 2`); see
/// [`sequence_opt_w`] for the value implied by the atoms.
pub fn sequence_opt_w_printed(n: usize) -> Result<f64, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    Ok(4.0 * (SQRT_2 - 1.0) / nf - (4.0 * SQRT_2 - 1.0) / (nf * nf))
}

/// First-best welfare of [`minimizing_sequence`]: `4 (sqrt 2 - 1) / n + (5 - 4 sqrt 2) / n^2`.
pub fn sequence_opt_w(n: usize) -> Result<f64, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    Ok(4.0 * (SQRT_2 - 1.0) / nf + (5.0 - 4.0 * SQRT_2) / (nf * nf))
}

/// `F(mu)` of [`minimizing_sequence`]: `1 - (sqrt 2 - 1) / n`.
pub fn sequence_gamma(n: usize) -> Result<f64, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    Ok(1.0 - (SQRT_2 - 1.0) / nf)
}

/// `E[S | S <= mu]` of [`minimizing_sequence`]: `(2 - sqrt 2) / (n - (sqrt 2 - 1))`.
pub fn sequence_mu1(n: usize) -> Result<f64, WorstCaseError> {
    let nf = check_sequence_index(n)?;
    Ok((2.0 - SQRT_2) / (nf - (SQRT_2 - 1.0)))
}

fn check_objective_args(mu: f64, mu1: f64, gamma: f64) -> Result<(), WorstCaseError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid("mu", mu, "must lie in (0, 1)"));
    }
    if !(0.0..=mu).contains(&mu1) {
        return Err(invalid("mu1", mu1, "must lie in [0, mu]"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", gamma, "must lie in (0, 1]"));
    }
    Ok(())
}

/// Lower bound on the mean-price ratio over distributions with the given three
/// quantities, evaluated term by term:
///
/// `(mu + (mu - mu1) gamma) / (mu1 gamma^2 (2 - mu1/mu) + 2 gamma (mu - gamma mu1)
///   + (1 - gamma)^2 - (1 - gamma - mu + mu1 gamma)^2 / (1 - mu))`.
pub fn lower_bound_objective(mu: f64, mu1: f64, gamma: f64) -> Result<f64, WorstCaseError> {
    check_objective_args(mu, mu1, gamma)?;
    let top = mu + (mu - mu1) * gamma;
    let upper = 1.0 - gamma - mu + mu1 * gamma;
    let bottom = mu1 * gamma * gamma * (2.0 - mu1 / mu) + 2.0 * gamma * (mu - gamma * mu1) + (1.0 - gamma).powi(2)
        - upper * upper / (1.0 - mu);
    if bottom <= 0.0 {
        return Err(WorstCaseError::SingularDenominator { value: bottom });
    }
    Ok(top / bottom)
}

/// The same bound after dividing through by `mu`, with `x = 1 - mu1 / mu`:
/// `(1 + gamma x) / (1 + 2 gamma x - gamma^2 x^2 / (1 - mu))`.
pub fn reduced_objective(mu: f64, x: f64, gamma: f64) -> Result<f64, WorstCaseError> {
    if !(0.0..1.0).contains(&mu) {
        return Err(invalid("mu", mu, "must lie in [0, 1)"));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid("x", x, "must lie in [0, 1]"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid("gamma", gamma, "must lie in (0, 1]"));
    }
    let y = gamma * x;
    let bottom = 1.0 + 2.0 * y - y * y / (1.0 - mu);
    if bottom <= 0.0 {
        return Err(WorstCaseError::SingularDenominator { value: bottom });
    }
    Ok((1.0 + y) / bottom)
}

/// `(1 + y) / (1 + y (2 - y))`, the `mu -> 0` limit with `y = gamma x`.
pub fn one_dimensional_objective(y: f64) -> f64 {
    (1.0 + y) / (1.0 + y * (2.0 - y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimaxScanResult {
    /// Smaller of the two scans.
    pub best_value: f64,
    pub argmin_mu: f64,
    pub argmin_x: f64,
    pub argmin_gamma: f64,
    /// `gamma x` at the argmin.
    pub argmin_y: f64,
    pub grid_resolution: usize,
    /// Minimum of the one-dimensional objective over `y` in `[0, 1]`.
    pub reduced_value: f64,
    pub reduced_argmin_y: f64,
    /// Minimum of [`lower_bound_objective`] over the feasible grid.
    pub box_value: f64,
    pub box_argmin: [f64; 3],
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..200 {
        if hi - lo <= 1e-15 {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Grid scan of the one-dimensional objective followed by golden-section
/// refinement around the best cell. Returns `(argmin, value)`.
pub fn reduced_scan(resolution: usize) -> Result<(f64, f64), WorstCaseError> {
    if resolution < MIN_SCAN_RESOLUTION {
        return Err(WorstCaseError::ResolutionTooSmall {
            resolution,
            min: MIN_SCAN_RESOLUTION,
        });
    }
    let step = 1.0 / resolution as f64;
    let (k, _) = (0..=resolution)
        .map(|k| (k, one_dimensional_objective(k as f64 * step)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let lo = (k as f64 - 1.0).max(0.0) * step;
    let hi = ((k + 1) as f64 * step).min(1.0);
    Ok(golden_min(one_dimensional_objective, lo, hi))
}

/// Smallest value of [`lower_bound_objective`] on a grid over the box
/// `mu in [MU_MARGIN, 1 - MU_MARGIN]`, `x in [0, 1]`, `gamma in (0, 1]`,
/// restricted to points where the four-point masses are nonnegative as
/// `delta -> 0`. The `mu` axis is log-spaced since the infimum sits at `mu -> 0`.
fn box_scan(axis: usize) -> (f64, [f64; 3]) {
    let mus: Vec<f64> = (0..axis)
        .map(|i| {
            let t = i as f64 / (axis - 1) as f64;
            (MU_MARGIN.ln() + t * ((1.0 - MU_MARGIN).ln() - MU_MARGIN.ln())).exp()
        })
        .collect();
    let rows: Vec<(f64, [f64; 3])> = mus
        .par_iter()
        .map(|&mu| {
            let mut best = (f64::INFINITY, [mu, 0.0, 1.0]);
            for j in 0..axis {
                let x = j as f64 / (axis - 1) as f64;
                for k in 1..=axis {
                    let gamma = k as f64 / axis as f64;
                    // q2 >= 0 in the delta -> 0 limit
                    if (1.0 - mu) * (1.0 - gamma) < mu * gamma * x {
                        continue;
                    }
                    if let Ok(v) = lower_bound_objective(mu, mu * (1.0 - x), gamma) {
                        if v < best.0 {
                            best = (v, [mu, x, gamma]);
                        }
                    }
                }
            }
            best
        })
        .collect();
    rows.into_iter().fold(
        (f64::INFINITY, [0.0; 3]),
        |best, cur| if cur.0 < best.0 { cur } else { best },
    )
}

/// Minimizes the lower-bound objective two ways: over `y` in `[0, 1]` in the
/// reduced form, and over a `(mu, x, gamma)` grid of at most 128 points per axis.
pub fn minimax_scan(resolution: usize) -> Result<MinimaxScanResult, WorstCaseError> {
    let (y, reduced_value) = reduced_scan(resolution)?;
    let (box_value, box_argmin) = box_scan(resolution.min(BOX_AXIS_MAX));
    let mut out = MinimaxScanResult {
        best_value: reduced_value,
        argmin_mu: 0.0,
        argmin_x: y,
        argmin_gamma: 1.0,
        argmin_y: y,
        grid_resolution: resolution,
        reduced_value,
        reduced_argmin_y: y,
        box_value,
        box_argmin,
    };
    if box_value < reduced_value {
        let [mu, x, gamma] = box_argmin;
        out.best_value = box_value;
        out.argmin_mu = mu;
        out.argmin_x = x;
        out.argmin_gamma = gamma;
        out.argmin_y = gamma * x;
    }
    Ok(out)
}

/// Sample-price welfare ratio of `F(x) = x^r` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRatio {
    pub r: f64,
    /// `1 - (1/2) (1/(r+1) - 1/(2r+1)) / (r/(r+1) + 1/(r+1) - 1/(2r+1))`.
    pub closed_form: f64,
    /// Sample-price welfare over first-best welfare, by quadrature.
    pub direct: f64,
}

pub fn power_family_ratio(r: f64, cfg: &QuadratureConfig) -> Result<PowerRatio, WorstCaseError> {
    let dist = Power::new(r)?;
    let gain = 1.0 / (r + 1.0) - 1.0 / (2.0 * r + 1.0);
    let closed_form = 1.0 - 0.5 * gain / (r / (r + 1.0) + 1.0 / (r + 1.0) - 1.0 / (2.0 * r + 1.0));
    // Both welfares scale with the mean, which vanishes as r -> 0.
    let mut scaled = *cfg;
    scaled.abs_tol = cfg.abs_tol * dist.mean().min(1.0);
    let direct = sample_price_expected_welfare(&dist, &scaled)? / opt_w(&dist, &scaled)?;
    Ok(PowerRatio { r, closed_form, direct })
}

/// Mean-price welfare ratio `W(mu) / OPT-W` of a distribution.
pub fn mean_price_ratio(dist: &dyn Distribution, cfg: &QuadratureConfig) -> Result<f64, WorstCaseError> {
    Ok(welfare(dist.mean(), dist)? / opt_w(dist, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::check_invariants;
    use crate::mechanisms::mean_price_welfare;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn spec(mu: f64, mu1: f64, gamma: f64, delta: f64) -> FourPointSpec {
        FourPointSpec { mu, mu1, gamma, delta }
    }

    /// Solves the four moment constraints by Gaussian elimination.
    fn solve_constraints(s: &FourPointSpec) -> [f64; 4] {
        let [_, a, b, c] = s.locations();
        let mut m = [
            [1.0, 1.0, 1.0, 1.0, 1.0],
            [0.0, a, b, c, s.mu],
            [1.0, 1.0, 0.0, 0.0, s.gamma],
            [0.0, a, 0.0, 0.0, s.mu1 * s.gamma],
        ];
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            m.swap(col, pivot);
            for row in 0..4 {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..5 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        std::array::from_fn(|i| m[i][4] / m[i][i])
    }

    #[test]
    fn four_point_examples() {
        let s = spec(0.5, 0.25, 0.5, 0.1);
        let q = s.masses().unwrap();
        for (got, want) in q.iter().zip([0.25, 0.25, 0.3125, 0.1875]) {
            assert!((got - want).abs() < 1e-15);
        }
        let solved = solve_constraints(&s);
        for (got, want) in q.iter().zip(solved) {
            assert!((got - want).abs() < 1e-12, "{q:?} vs {solved:?}");
        }

        let d = four_point(&spec(0.5, 0.5, 1.0, 0.2)).unwrap();
        assert_eq!(d.iter().collect::<Vec<_>>(), vec![(0.5, 1.0)]);

        let d = four_point(&spec(0.5, 0.0, 0.5, 0.25)).unwrap();
        assert_eq!(d.iter().collect::<Vec<_>>(), vec![(0.0, 0.5), (1.0, 0.5)]);
    }

    #[test]
    fn main_text_sign_would_break_the_mean() {
        // With -delta*gamma the masses no longer sum to one.
        let s = spec(0.5, 0.25, 0.5, 0.1);
        let gap = 1.0 - s.mu - s.delta;
        let q3_other = (s.mu * s.gamma - s.mu1 * s.gamma - s.delta - s.delta * s.gamma) / gap;
        let q = s.masses().unwrap();
        assert!((q[0] + q[1] + q[2] + q3_other - 1.0).abs() > 0.1);
    }

    #[test]
    fn infeasible_mass_is_named() {
        // gamma = 1 forces everything to [0, mu], so the mean can't exceed mu1 ... unless mu1 = mu
        match four_point(&spec(0.5, 0.2, 1.0, 0.1)) {
            Err(WorstCaseError::InfeasibleSpec { mass, value }) => {
                assert!(mass == "q2" || mass == "q3", "{mass}");
                assert!(value < 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(four_point(&spec(0.5, 0.6, 0.5, 0.1)).is_err());
        assert!(four_point(&spec(0.5, 0.25, 0.5, 0.6)).is_err());
    }

    #[test]
    fn merged_upper_atoms() {
        let d = DiscreteDistribution::new([(0.0, 0.25), (0.2, 0.25), (1.0, 0.5)]).unwrap();
        let (s, m) = matched_four_point(&d).unwrap();
        assert!(s.merged());
        assert!((m.mean() - d.mean()).abs() < 1e-12);
        let point = DiscreteDistribution::point_mass(1.0).unwrap();
        let (_, m) = matched_four_point(&point).unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(1.0, 1.0)]);
    }

    #[test]
    fn sequence_closed_forms() {
        for n in [2usize, 10, 100, 1000, 10_000] {
            let d = minimizing_sequence(n).unwrap();
            let nf = n as f64;
            assert!((d.mean() - 1.0 / nf).abs() < 1e-12);
            let m = mean_price_welfare(&d).unwrap();
            assert!((m.welfare - sequence_mean_price_welfare(n).unwrap()).abs() < 1e-10);
            assert!((opt_w(&d, &cfg()).unwrap() - sequence_opt_w(n).unwrap()).abs() < 1e-10);
            assert!((m.gamma - sequence_gamma(n).unwrap()).abs() < 1e-12);
            assert!((m.mu1 - sequence_mu1(n).unwrap()).abs() < 1e-12);
        }
        assert!(sequence_opt_w_printed(2).unwrap() < 0.0);
        assert!(minimizing_sequence(1).is_err());
        let ratio = mean_price_ratio(&minimizing_sequence(10_000).unwrap(), &cfg()).unwrap();
        assert!((ratio - MEAN_PRICE_RATIO).abs() < 2e-4);
    }

    #[test]
    fn objective_forms_agree() {
        let v = lower_bound_objective(0.5, 0.25, 0.5).unwrap();
        let r = reduced_objective(0.5, 0.5, 0.5).unwrap();
        assert!((v - r).abs() < 1e-12);
        assert!((lower_bound_objective(0.3, 0.3, 0.7).unwrap() - 1.0).abs() < 1e-12);
        assert!((reduced_objective(1e-12, MEAN_PRICE_ARGMIN, 1.0).unwrap() - MEAN_PRICE_RATIO).abs() < 1e-10);
        assert!((one_dimensional_objective(MEAN_PRICE_ARGMIN) - MEAN_PRICE_RATIO).abs() < 1e-15);
        // gamma = 1 slice as mu -> 0
        for y in [0.0, 0.2, 0.7, 1.0] {
            assert!((reduced_objective(0.0, y, 1.0).unwrap() - one_dimensional_objective(y)).abs() < 1e-15);
        }
    }

    #[test]
    fn scan_examples() {
        let fine = minimax_scan(10_000).unwrap();
        assert!((fine.reduced_value - 0.8535534).abs() < 1e-6);
        assert!((fine.argmin_y - MEAN_PRICE_ARGMIN).abs() < 1e-4);
        let coarse = minimax_scan(100).unwrap();
        assert!((coarse.best_value - MEAN_PRICE_RATIO).abs() < 1e-3);
        assert!(coarse.box_value >= coarse.reduced_value - 1e-12);
        assert!(matches!(
            minimax_scan(99),
            Err(WorstCaseError::ResolutionTooSmall { .. })
        ));
    }

    #[test]
    fn power_family_examples() {
        let one = power_family_ratio(1.0, &cfg()).unwrap();
        assert!((one.closed_form - 7.0 / 8.0).abs() < 1e-15);
        assert!((one.direct - 7.0 / 8.0).abs() < 1e-9);
        let small = power_family_ratio(1e-4, &cfg()).unwrap();
        assert!((small.closed_form - 0.75).abs() < 1e-3);
        assert!((small.direct - small.closed_form).abs() < 1e-6, "{small:?}");
        let big = power_family_ratio(1e3, &cfg()).unwrap();
        assert!(big.closed_form > 0.999);
        assert!((big.direct - big.closed_form).abs() < 1e-6, "{big:?}");
    }

    fn random_discrete() -> impl Strategy<Value = DiscreteDistribution> {
        prop::collection::btree_map(0u32..=1000, 1u32..50, 1..10).prop_map(|m| {
            let total: u32 = m.values().sum();
            DiscreteDistribution::new(m.iter().map(|(&x, &w)| (x as f64 / 1000.0, w as f64 / total as f64))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn matched_four_point_dominates(d in random_discrete()) {
            prop_assume!(d.mean() > 0.0);
            let (s, m) = matched_four_point(&d).unwrap();
            prop_assert!(check_invariants(&m, &cfg()).is_empty());
            let mp = mean_price_welfare(&m).unwrap();
            prop_assert!((m.mean() - s.mu).abs() < 1e-10);
            prop_assert!((mp.mu1 - s.mu1).abs() < 1e-10);
            prop_assert!((mp.gamma - s.gamma).abs() < 1e-10);
            prop_assert!(opt_w(&m, &cfg()).unwrap() >= opt_w(&d, &cfg()).unwrap() - 1e-9);
            prop_assert!((mp.welfare - mean_price_welfare(&d).unwrap().welfare).abs() < 1e-9);
        }

        #[test]
        fn objective_bounds_four_point_ratio(
            mu in 0.01f64..0.99, xf in 0.01f64..1.0, gamma in 0.01f64..0.99, df in 0.01f64..0.99,
        ) {
            // q2 >= 0 needs (1 - mu)(1 - gamma) >= mu gamma x; q3 >= 0 caps delta
            prop_assume!((1.0 - mu) * (1.0 - gamma) >= mu * gamma * xf);
            let mu1 = mu * (1.0 - xf);
            let cap = (1.0 - mu).min(mu * gamma * xf / (1.0 - gamma));
            let s = spec(mu, mu1, gamma, df * cap);
            let d = four_point(&s).unwrap();
            let bound = lower_bound_objective(mu, mu1, gamma).unwrap();
            let reduced = reduced_objective(mu, xf, gamma).unwrap();
            prop_assert!((bound - reduced).abs() < 1e-10);
            prop_assert!(bound <= mean_price_ratio(&d, &cfg()).unwrap() + 1e-6);
        }
    }
}
