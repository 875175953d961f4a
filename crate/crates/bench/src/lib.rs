//! Fixed inputs shared by the benchmarks, so timings are comparable across runs.

use fixprice_core::{DiscreteDistribution, Dist};

/// `k` atoms evenly spaced on `[0, 1]` with uneven, deterministic masses.
pub fn discrete_fixture(k: usize) -> DiscreteDistribution {
    let weights: Vec<f64> = (0..k).map(|i| 1.0 + ((i * 7) % 5) as f64).collect();
    let total: f64 = weights.iter().sum();
    let denom = (k.max(2) - 1) as f64;
    DiscreteDistribution::new(weights.iter().enumerate().map(|(i, w)| (i as f64 / denom, w / total)))
        .expect("fixture atoms are valid")
}

/// The continuous families, labelled for benchmark ids.
pub fn continuous_fixtures() -> Vec<(&'static str, Dist)> {
    vec![
        ("uniform", Dist::uniform(0.0, 1.0).expect("valid")),
        ("exponential", Dist::exponential(1.0).expect("valid")),
        ("power_0.5", Dist::power(0.5).expect("valid")),
        (
            "mixture",
            Dist::mixture(vec![
                (0.5, Dist::uniform(0.0, 1.0).expect("valid")),
                (0.5, Dist::point_mass(0.5).expect("valid")),
            ])
            .expect("valid"),
        ),
    ]
}
