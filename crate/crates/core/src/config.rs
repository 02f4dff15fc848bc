//! Run configuration: JSON schema, defaults and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact::ContactTriple;
use crate::error::{Error, Result};
use crate::jet::{DEFAULT_ORDER, MAX_ORDER};
use crate::metric::{parse_metric, FinslerMetric};
use crate::point::{check_dimension, BasePoint};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_POINTS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Builtin(String),
    Expression { expression: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TripleSpec {
    /// A built-in name, or `"none"`.
    Builtin(String),
    Components {
        #[serde(default)]
        name: Option<String>,
        phi: Vec<Vec<String>>,
        eta: Vec<String>,
        xi: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_count() -> usize {
    DEFAULT_POINTS
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub level1: Option<f64>,
    pub level2: Option<f64>,
}

/// The file as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub metric: MetricSpec,
    #[serde(default)]
    pub triple: Option<TripleSpec>,
    #[serde(default)]
    pub dimension: Option<usize>,
    #[serde(default)]
    pub points: Option<Vec<BasePoint>>,
    #[serde(default)]
    pub sampler: Option<SamplerSpec>,
    #[serde(default)]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub jet_order: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PointSource {
    Explicit(Vec<BasePoint>),
    Sampler { count: usize },
}

/// Tolerance ladder, loosest last.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub exact: f64,
    pub flat: f64,
    pub euler: f64,
    /// first-derivative identities
    pub level1: f64,
    /// curvature and second-derivative identities
    pub level2: f64,
    /// curvature displays built from several second derivatives
    pub level3: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-12,
            flat: 1e-10,
            euler: 1e-9,
            level1: 1e-6,
            level2: 1e-5,
            level3: 1e-4,
        }
    }
}

impl Tolerances {
    /// Defaults for a metric, with `level1`/`level2` doubled when the metric
    /// is not Riemannian, then user overrides.
    pub fn for_metric(metric: &FinslerMetric, spec: Option<&ToleranceSpec>) -> Tolerances {
        let mut t = Tolerances::default();
        if !metric.is_riemannian() {
            t.level1 *= 2.0;
            t.level2 *= 2.0;
        }
        if let Some(s) = spec {
            if let Some(v) = s.level1 {
                t.level1 = v;
            }
            if let Some(v) = s.level2 {
                t.level2 = v;
            }
        }
        t
    }

    pub fn scaled(self, k: f64) -> Tolerances {
        Tolerances {
            exact: self.exact * k,
            flat: self.flat * k,
            euler: self.euler * k,
            level1: self.level1 * k,
            level2: self.level2 * k,
            level3: self.level3 * k,
        }
    }
}

/// Validated configuration with defaults filled.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub metric: FinslerMetric,
    pub triple: Option<ContactTriple>,
    pub points: PointSource,
    pub seed: u64,
    pub tolerances: Tolerances,
    /// Selected check names or name prefixes; empty selects everything.
    pub checks: Vec<String>,
    pub jet_order: usize,
    pub out: Option<PathBuf>,
    /// The configuration as read, echoed into the report header.
    pub echo: serde_json::Value,
}

/// Top-level check groups accepted in `checks`.
pub const CHECK_GROUPS: &[&str] = &[
    "finsler", "metric", "cartan", "jet", "flat", "ehresmann", "spray", "nonlinear", "chern", "curvature", "contact", "normality",
    "operator", "sasakian", "ricci", "flag",
];

impl RunConfig {
    /// Selection by exact name or by dotted prefix.
    pub fn selects(&self, name: &str) -> bool {
        self.checks.is_empty()
            || self
                .checks
                .iter()
                .any(|c| name == c || (name.starts_with(c.as_str()) && name.as_bytes().get(c.len()) == Some(&b'.')))
    }

    pub fn count(&self) -> usize {
        match &self.points {
            PointSource::Explicit(p) => p.len(),
            PointSource::Sampler { count } => *count,
        }
    }

    pub fn from_raw(raw: RawConfig) -> Result<RunConfig> {
        let echo = serde_json::to_value(&raw)?;
        let field = |f: &str, e: Error| Error::Config(format!("{f}: {e}"));
        if let Some(m) = raw.dimension {
            check_dimension(m).map_err(|e| field("dimension", e))?;
        }
        let metric = match &raw.metric {
            MetricSpec::Builtin(name) => {
                let f = FinslerMetric::builtin(name).map_err(|e| field("metric", e))?;
                if let Some(m) = raw.dimension {
                    if m != f.dim {
                        return Err(field("dimension", Error::DimensionMismatch { expected: f.dim, found: m }));
                    }
                }
                f
            }
            MetricSpec::Expression { expression } => {
                let m = raw
                    .dimension
                    .ok_or_else(|| Error::Config("dimension: required for an expression metric".into()))?;
                parse_metric(expression, m).map_err(|e| field("metric", e))?
            }
        };
        let m = metric.dim;
        let triple = match &raw.triple {
            None => match &raw.metric {
                MetricSpec::Builtin(name) => ContactTriple::builtin(name, m).ok(),
                MetricSpec::Expression { .. } => None,
            },
            Some(TripleSpec::Builtin(s)) if s == "none" => None,
            Some(TripleSpec::Builtin(s)) => Some(ContactTriple::builtin(s, m).map_err(|e| field("triple", e))?),
            Some(TripleSpec::Components { name, phi, eta, xi }) => Some(
                ContactTriple::from_strings(name.as_deref().unwrap_or("custom"), m, phi, eta, xi).map_err(|e| field("triple", e))?,
            ),
        };
        if let Some(t) = &triple {
            if t.m != m {
                return Err(field("triple", Error::DimensionMismatch { expected: m, found: t.m }));
            }
        }
        let (points, seed) = match (&raw.points, &raw.sampler) {
            (Some(_), Some(_)) => return Err(Error::Config("points: give either points or sampler, not both".into())),
            (Some(ps), None) => {
                if ps.is_empty() {
                    return Err(Error::Config("points: empty list".into()));
                }
                for (i, p) in ps.iter().enumerate() {
                    if p.dim() != m || p.y.len() != m {
                        return Err(field(&format!("points[{i}]"), Error::DimensionMismatch { expected: m, found: p.dim() }));
                    }
                    p.check_slit().map_err(|e| field(&format!("points[{i}]"), e))?;
                }
                (PointSource::Explicit(ps.clone()), DEFAULT_SEED)
            }
            (None, Some(s)) => {
                if s.count == 0 {
                    return Err(Error::Config("sampler.count: must be positive".into()));
                }
                (PointSource::Sampler { count: s.count }, s.seed)
            }
            (None, None) => (PointSource::Sampler { count: DEFAULT_POINTS }, DEFAULT_SEED),
        };
        if let Some(t) = &raw.tolerances {
            for (n, v) in [("tolerances.level1", t.level1), ("tolerances.level2", t.level2)] {
                if let Some(v) = v {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(Error::Config(format!("{n}: must be a positive number")));
                    }
                }
            }
        }
        let checks = raw.checks.clone().unwrap_or_default();
        for c in &checks {
            let group = c.split('.').next().unwrap_or("");
            if !CHECK_GROUPS.contains(&group) {
                return Err(Error::Config(format!("checks: unknown check '{c}'")));
            }
        }
        let jet_order = raw.jet_order.unwrap_or(DEFAULT_ORDER);
        if !(4..=MAX_ORDER).contains(&jet_order) {
            return Err(Error::Config(format!("jet_order: must be between 4 and {MAX_ORDER}, got {jet_order}")));
        }
        Ok(RunConfig {
            tolerances: Tolerances::for_metric(&metric, raw.tolerances.as_ref()),
            metric,
            triple,
            points,
            seed,
            checks,
            jet_order,
            out: raw.out.clone(),
            echo,
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text)?;
    RunConfig::from_raw(raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_defaults() {
        let c = parse_config(r#"{"metric": "heisenberg3"}"#).unwrap();
        assert_eq!(c.triple.as_ref().unwrap().name, "heisenberg3");
        assert_eq!(c.count(), 100);
        assert_eq!(c.seed, 42);
        assert!(c.checks.is_empty() && c.selects("ricci.xi"));
        assert_eq!(c.tolerances, Tolerances::default());
    }

    #[test]
    fn randers_has_no_default_triple_and_doubled_tolerances() {
        let c = parse_config(r#"{"metric": "randers3"}"#).unwrap();
        assert!(c.triple.is_none());
        assert_eq!(c.tolerances.level1, 2e-6);
        let c = parse_config(r#"{"metric": "randers3", "triple": "cartan-frame", "tolerances": {"level1": 3e-6}}"#).unwrap();
        assert_eq!(c.triple.unwrap().name, "cartan-frame");
        assert_eq!(c.tolerances.level1, 3e-6);
    }

    #[test]
    fn even_dimension_is_rejected() {
        let e = parse_config(r#"{"metric": {"expression": "sqrt(y1^2+y2^2+y3^2+y4^2)"}, "dimension": 4}"#).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("dimension") && msg.contains("dimension must be odd"), "{msg}");
    }

    #[test]
    fn expression_metric_and_points_round_trip() {
        let text = r#"{"metric": {"expression": "sqrt(y1^2 + y2^2 + y3^2) + 0.1*y1"}, "dimension": 3,
                       "points": [{"x": [0.0, 0.5, 0.0], "y": [1.0, 0.0, 0.5]}], "checks": ["chern"]}"#;
        let c = parse_config(text).unwrap();
        let back: RawConfig = serde_json::from_value(c.echo.clone()).unwrap();
        let orig: RawConfig = serde_json::from_str(text).unwrap();
        assert_eq!(back, orig);
        assert!(c.selects("chern.symmetry") && !c.selects("chernx") && !c.selects("metric.euler"));
    }

    #[test]
    fn errors_name_the_field() {
        for (text, field) in [
            (r#"{"metric": "nope"}"#, "metric"),
            (r#"{"metric": "heisenberg3", "jet_order": 9}"#, "jet_order"),
            (r#"{"metric": "heisenberg3", "checks": ["bogus"]}"#, "checks"),
            (r#"{"metric": "heisenberg3", "sampler": {"count": 0}}"#, "sampler.count"),
            (r#"{"metric": "heisenberg3", "points": [{"x": [0,0,0], "y": [0,0,0]}]}"#, "points[0]"),
            (r#"{"metric": "heisenberg3", "triple": "flat5"}"#, "triple"),
        ] {
            let msg = parse_config(text).unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        }
        // malformed JSON reports a position
        let msg = parse_config("{\n \"metric\": }").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }
}
