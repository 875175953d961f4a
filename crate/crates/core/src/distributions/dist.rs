use rand::RngCore;
use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use super::validate::{check_invariants, Violation};
use super::{
    DiscreteDistribution, Distribution, DistributionError, Exponential, Mixture, Power, PriceState, Truncation, Uniform,
};
use crate::numerics::QuadratureConfig;

/// JSON shape of a distribution spec, generic over the child node type so the
/// same layout serves validated trees ([`Dist`]) and raw ones ([`DistSpec`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RawDist<C> {
    Discrete { atoms: Vec<(f64, f64)> },
    Uniform { a: f64, b: f64 },
    Exponential { rate: f64 },
    Power { r: f64 },
    Mixture { parts: Vec<MixturePart<C>> },
    Truncate { cap: f64, dist: Box<C> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePart<C> {
    pub weight: f64,
    pub dist: C,
}

const TYPES: &[&str] = &["discrete", "uniform", "exponential", "power", "mixture", "truncate"];
const FIELDS: &[&str] = &["type", "atoms", "a", "b", "rate", "r", "parts", "cap", "dist"];

// Hand-written rather than derived: an internally tagged derive buffers the
// whole object, which discards the line numbers of nested errors.
impl<'de, C: Deserialize<'de>> Deserialize<'de> for RawDist<C> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_map(RawVisitor(PhantomData))
    }
}

struct RawVisitor<C>(PhantomData<C>);

fn put<T, E: de::Error>(slot: &mut Option<T>, value: T, name: &'static str) -> Result<(), E> {
    if slot.is_some() {
        return Err(E::duplicate_field(name));
    }
    *slot = Some(value);
    Ok(())
}

impl<'de, C: Deserialize<'de>> Visitor<'de> for RawVisitor<C> {
    type Value = RawDist<C>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a distribution object with a \"type\" field")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut kind: Option<String> = None;
        let mut atoms = None;
        let (mut a, mut b, mut rate, mut r, mut cap) = (None, None, None, None, None);
        let mut parts: Option<Vec<MixturePart<C>>> = None;
        let mut dist: Option<C> = None;
        let mut seen: Vec<&'static str> = Vec::new();
        while let Some(key) = map.next_key::<String>()? {
            let name = *FIELDS
                .iter()
                .find(|f| **f == key)
                .ok_or_else(|| de::Error::unknown_field(&key, FIELDS))?;
            match name {
                "type" => put(&mut kind, map.next_value()?, name)?,
                "atoms" => put(&mut atoms, map.next_value()?, name)?,
                "a" => put(&mut a, map.next_value()?, name)?,
                "b" => put(&mut b, map.next_value()?, name)?,
                "rate" => put(&mut rate, map.next_value()?, name)?,
                "r" => put(&mut r, map.next_value()?, name)?,
                "parts" => put(&mut parts, map.next_value()?, name)?,
                "cap" => put(&mut cap, map.next_value()?, name)?,
                _ => put(&mut dist, map.next_value()?, name)?,
            }
            seen.push(name);
        }
        let kind = kind.ok_or_else(|| de::Error::missing_field("type"))?;
        let allowed: &'static [&'static str] = match kind.as_str() {
            "discrete" => &["atoms"],
            "uniform" => &["a", "b"],
            "exponential" => &["rate"],
            "power" => &["r"],
            "mixture" => &["parts"],
            "truncate" => &["cap", "dist"],
            other => return Err(de::Error::unknown_variant(other, TYPES)),
        };
        if let Some(extra) = seen.iter().find(|f| **f != "type" && !allowed.contains(f)) {
            return Err(de::Error::unknown_field(extra, allowed));
        }
        fn need<T, E: de::Error>(v: Option<T>, name: &'static str) -> Result<T, E> {
            v.ok_or_else(|| E::missing_field(name))
        }
        Ok(match kind.as_str() {
            "discrete" => RawDist::Discrete {
                atoms: need(atoms, "atoms")?,
            },
            "uniform" => RawDist::Uniform {
                a: need(a, "a")?,
                b: need(b, "b")?,
            },
            "exponential" => RawDist::Exponential {
                rate: need(rate, "rate")?,
            },
            "power" => RawDist::Power { r: need(r, "r")? },
            "mixture" => RawDist::Mixture {
                parts: need(parts, "parts")?,
            },
            _ => RawDist::Truncate {
                cap: need(cap, "cap")?,
                dist: Box::new(need(dist, "dist")?),
            },
        })
    }
}

/// Any shipped distribution. Deserializing validates every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist<Dist>", into = "RawDist<Dist>")]
pub enum Dist {
    Discrete(DiscreteDistribution),
    Uniform(Uniform),
    Exponential(Exponential),
    Power(Power),
    Mixture(Mixture),
    Truncation(Truncation),
}

impl TryFrom<RawDist<Dist>> for Dist {
    type Error = DistributionError;

    fn try_from(raw: RawDist<Dist>) -> Result<Self, Self::Error> {
        Ok(match raw {
            RawDist::Discrete { atoms } => Dist::Discrete(DiscreteDistribution::new(atoms)?),
            RawDist::Uniform { a, b } => Dist::Uniform(Uniform::new(a, b)?),
            RawDist::Exponential { rate } => Dist::Exponential(Exponential::new(rate)?),
            RawDist::Power { r } => Dist::Power(Power::new(r)?),
            RawDist::Mixture { parts } => {
                Dist::Mixture(Mixture::new(parts.into_iter().map(|p| (p.weight, p.dist)).collect())?)
            }
            RawDist::Truncate { cap, dist } => Dist::Truncation(Truncation::new(*dist, cap)?),
        })
    }
}

impl From<Dist> for RawDist<Dist> {
    fn from(dist: Dist) -> Self {
        match dist {
            Dist::Discrete(d) => RawDist::Discrete {
                atoms: d
                    .locations()
                    .iter()
                    .copied()
                    .zip(d.given_masses().iter().copied())
                    .collect(),
            },
            Dist::Uniform(u) => RawDist::Uniform { a: u.a(), b: u.b() },
            Dist::Exponential(e) => RawDist::Exponential { rate: e.rate() },
            Dist::Power(p) => RawDist::Power { r: p.r() },
            Dist::Mixture(m) => RawDist::Mixture {
                parts: m
                    .parts()
                    .iter()
                    .map(|(w, d)| MixturePart {
                        weight: *w,
                        dist: d.clone(),
                    })
                    .collect(),
            },
            Dist::Truncation(t) => RawDist::Truncate {
                cap: t.cap(),
                dist: Box::new(t.base().clone()),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{message} at line {line} column {column}")]
    Invalid {
        message: String,
        line: usize,
        column: usize,
    },
}

impl SpecError {
    pub fn line(&self) -> usize {
        match self {
            SpecError::Json(e) => e.line(),
            SpecError::Invalid { line, .. } => *line,
        }
    }

    pub fn column(&self) -> usize {
        match self {
            SpecError::Json(e) => e.column(),
            SpecError::Invalid { column, .. } => *column,
        }
    }

    /// Error located at the end of `text`, for whole-document checks.
    pub(crate) fn at_end(text: &str, message: String) -> Self {
        let trimmed = text.trim_end();
        let line = trimmed.lines().count().max(1);
        let column = trimmed.lines().last().map_or(0, |l| l.chars().count());
        SpecError::Invalid { message, line, column }
    }
}

impl Dist {
    /// Parses and validates a spec. Values must also have a positive mean.
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let dist: Dist = serde_json::from_str(text).map_err(|e| {
            if e.line() == 0 {
                SpecError::at_end(text, e.to_string())
            } else {
                SpecError::Json(e)
            }
        })?;
        let mean = dist.mean();
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(SpecError::at_end(
                text,
                format!("distribution mean must be positive and finite, got {mean}"),
            ));
        }
        Ok(dist)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self, DistributionError> {
        Uniform::new(a, b).map(Dist::Uniform)
    }

    pub fn exponential(rate: f64) -> Result<Self, DistributionError> {
        Exponential::new(rate).map(Dist::Exponential)
    }

    pub fn power(r: f64) -> Result<Self, DistributionError> {
        Power::new(r).map(Dist::Power)
    }

    pub fn discrete(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self, DistributionError> {
        DiscreteDistribution::new(atoms).map(Dist::Discrete)
    }

    pub fn point_mass(x: f64) -> Result<Self, DistributionError> {
        DiscreteDistribution::point_mass(x).map(Dist::Discrete)
    }

    pub fn mixture(parts: Vec<(f64, Dist)>) -> Result<Self, DistributionError> {
        Mixture::new(parts).map(Dist::Mixture)
    }

    pub fn truncate(base: Dist, cap: f64) -> Result<Self, DistributionError> {
        Truncation::new(base, cap).map(Dist::Truncation)
    }
}

impl From<DiscreteDistribution> for Dist {
    fn from(d: DiscreteDistribution) -> Self {
        Dist::Discrete(d)
    }
}

macro_rules! dispatch {
    ($self:ident, $d:ident => $body:expr) => {
        match $self {
            Dist::Discrete($d) => $body,
            Dist::Uniform($d) => $body,
            Dist::Exponential($d) => $body,
            Dist::Power($d) => $body,
            Dist::Mixture($d) => $body,
            Dist::Truncation($d) => $body,
        }
    };
}

impl Distribution for Dist {
    fn cdf(&self, x: f64) -> f64 {
        dispatch!(self, d => d.cdf(x))
    }
    fn prob_lt(&self, x: f64) -> f64 {
        dispatch!(self, d => d.prob_lt(x))
    }
    fn quantile(&self, q: f64) -> f64 {
        dispatch!(self, d => d.quantile(q))
    }
    fn mean(&self) -> f64 {
        dispatch!(self, d => d.mean())
    }
    fn partial_expectation_below(&self, t: f64) -> f64 {
        dispatch!(self, d => d.partial_expectation_below(t))
    }
    fn support_lo(&self) -> f64 {
        dispatch!(self, d => d.support_lo())
    }
    fn support_hi(&self) -> f64 {
        dispatch!(self, d => d.support_hi())
    }
    fn atoms(&self) -> Vec<(f64, f64)> {
        dispatch!(self, d => d.atoms())
    }
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        dispatch!(self, d => d.sample(rng))
    }
    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        dispatch!(self, d => d.as_discrete())
    }
    fn state_at(&self, price: f64) -> PriceState {
        dispatch!(self, d => d.state_at(price))
    }
    fn state_at_level(&self, u: f64) -> PriceState {
        dispatch!(self, d => d.state_at_level(u))
    }
    fn level_breaks(&self) -> Vec<f64> {
        dispatch!(self, d => d.level_breaks())
    }
}

/// Unvalidated spec tree, used to report every violation at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistSpec(pub RawDist<DistSpec>);

impl DistSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every violated constraint, with JSON paths. Structural problems are
    /// reported first; if there are none the built distribution is also
    /// checked against the runtime invariants.
    pub fn validate(&self, cfg: &QuadratureConfig) -> Vec<Violation> {
        let mut out = Vec::new();
        self.collect("$", &mut out);
        if out.is_empty() {
            match self.build() {
                Ok(dist) => {
                    out.extend(check_invariants(&dist, cfg));
                    let mean = dist.mean();
                    if !(mean > 0.0) {
                        out.push(Violation::new("$", format!("mean must be positive, got {mean}")));
                    }
                }
                Err(e) => out.push(Violation::new("$", e.to_string())),
            }
        }
        out
    }

    pub fn build(&self) -> Result<Dist, DistributionError> {
        Ok(match &self.0 {
            RawDist::Discrete { atoms } => Dist::discrete(atoms.iter().copied())?,
            RawDist::Uniform { a, b } => Dist::uniform(*a, *b)?,
            RawDist::Exponential { rate } => Dist::exponential(*rate)?,
            RawDist::Power { r } => Dist::power(*r)?,
            RawDist::Mixture { parts } => Dist::mixture(
                parts
                    .iter()
                    .map(|p| Ok((p.weight, p.dist.build()?)))
                    .collect::<Result<_, DistributionError>>()?,
            )?,
            RawDist::Truncate { cap, dist } => Dist::truncate(dist.build()?, *cap)?,
        })
    }

    fn collect(&self, path: &str, out: &mut Vec<Violation>) {
        let mut push = |p: String, m: String| out.push(Violation::new(p, m));
        match &self.0 {
            RawDist::Discrete { atoms } => {
                if atoms.is_empty() {
                    push(format!("{path}.atoms"), "must contain at least one atom".into());
                }
                for (i, (x, p)) in atoms.iter().enumerate() {
                    if !x.is_finite() || *x < 0.0 {
                        push(
                            format!("{path}.atoms[{i}][0]"),
                            format!("location {x} must be finite and nonnegative"),
                        );
                    }
                    if !(*p > 0.0 && *p <= 1.0) {
                        push(format!("{path}.atoms[{i}][1]"), format!("mass {p} must lie in (0, 1]"));
                    }
                }
                for (i, w) in atoms.windows(2).enumerate() {
                    if !(w[0].0 < w[1].0) {
                        push(
                            format!("{path}.atoms[{}]", i + 1),
                            "locations must be strictly increasing".into(),
                        );
                    }
                }
                let sum: f64 = atoms.iter().map(|a| a.1).sum();
                if !atoms.is_empty() && (sum - 1.0).abs() > 1e-12 {
                    push(format!("{path}.atoms"), format!("masses sum to {sum}, expected 1"));
                }
            }
            RawDist::Uniform { a, b } => {
                if !a.is_finite() || *a < 0.0 {
                    push(format!("{path}.a"), format!("{a} must be finite and nonnegative"));
                }
                if !b.is_finite() || !(b > a) {
                    push(format!("{path}.b"), format!("{b} must be finite and greater than a"));
                }
            }
            RawDist::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    push(format!("{path}.rate"), format!("{rate} must be positive and finite"));
                }
            }
            RawDist::Power { r } => {
                if !(*r > 0.0 && r.is_finite()) {
                    push(format!("{path}.r"), format!("{r} must be positive and finite"));
                }
            }
            RawDist::Mixture { parts } => {
                if parts.is_empty() {
                    push(format!("{path}.parts"), "must contain at least one part".into());
                }
                for (i, part) in parts.iter().enumerate() {
                    if !(part.weight > 0.0 && part.weight <= 1.0) {
                        push(
                            format!("{path}.parts[{i}].weight"),
                            format!("{} must lie in (0, 1]", part.weight),
                        );
                    }
                }
                let sum: f64 = parts.iter().map(|p| p.weight).sum();
                if !parts.is_empty() && (sum - 1.0).abs() > 1e-12 {
                    push(format!("{path}.parts"), format!("weights sum to {sum}, expected 1"));
                }
                for (i, part) in parts.iter().enumerate() {
                    part.dist.collect(&format!("{path}.parts[{i}].dist"), out);
                }
            }
            RawDist::Truncate { cap, dist } => {
                if !(*cap > 0.0 && cap.is_finite()) {
                    push(format!("{path}.cap"), format!("{cap} must be positive and finite"));
                }
                dist.collect(&format!("{path}.dist"), out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_shape() {
        for text in [
            r#"{"type":"discrete","atoms":[[0,0.5],[1,0.5]]}"#,
            r#"{"type":"uniform","a":0,"b":1}"#,
            r#"{"type":"exponential","rate":2}"#,
            r#"{"type":"power","r":0.5}"#,
            r#"{"type":"mixture","parts":[{"weight":0.5,"dist":{"type":"uniform","a":0,"b":1}},{"weight":0.5,"dist":{"type":"discrete","atoms":[[0.5,1]]}}]}"#,
            r#"{"type":"truncate","cap":2,"dist":{"type":"exponential","rate":1}}"#,
        ] {
            let d = Dist::from_json(text).unwrap();
            let again = Dist::from_json(&d.to_json()).unwrap();
            assert_eq!(d, again);
        }
    }

    #[test]
    fn nested_violation_points_at_its_line() {
        let text = "{\n  \"type\": \"mixture\",\n  \"parts\": [\n    {\"weight\": 1.0, \"dist\": {\"type\": \"uniform\", \"a\": 2, \"b\": 1}}\n  ]\n}";
        let err = Dist::from_json(text).unwrap_err();
        assert_eq!(err.line(), 4);
        assert!(err.to_string().contains("greater than a"));
    }

    #[test]
    fn rejects_unknown_fields_and_types() {
        assert!(Dist::from_json(r#"{"type":"uniform","a":0,"b":1,"c":3}"#).is_err());
        assert!(Dist::from_json(r#"{"type":"gamma","k":1}"#).is_err());
    }

    #[test]
    fn rejects_zero_mean_at_top_level() {
        let err = Dist::from_json("{\"type\":\"discrete\",\n\"atoms\":[[0,1]]}").unwrap_err();
        assert_eq!(err.line(), 2);
        assert!(err.to_string().contains("mean"));
    }

    #[test]
    fn spec_validation_lists_all_violations() {
        let cfg = QuadratureConfig::default();
        let spec = DistSpec::from_json(r#"{"type":"discrete","atoms":[[0,0.6],[1,0.6]]}"#).unwrap();
        let v = spec.validate(&cfg);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("sum"));

        let spec = DistSpec::from_json(
            r#"{"type":"mixture","parts":[{"weight":0.7,"dist":{"type":"power","r":-1}},{"weight":0.7,"dist":{"type":"uniform","a":1,"b":0}}]}"#,
        )
        .unwrap();
        let v = spec.validate(&cfg);
        let paths: Vec<&str> = v.iter().map(|v| v.path.as_str()).collect();
        assert!(paths.contains(&"$.parts"));
        assert!(paths.contains(&"$.parts[0].dist.r"));
        assert!(paths.contains(&"$.parts[1].dist.b"));
    }

    #[test]
    fn valid_specs_have_no_violations() {
        let cfg = QuadratureConfig::default();
        for text in [r#"{"type":"uniform","a":0,"b":1}"#, r#"{"type":"power","r":0.5}"#] {
            assert!(DistSpec::from_json(text).unwrap().validate(&cfg).is_empty());
        }
    }
}
