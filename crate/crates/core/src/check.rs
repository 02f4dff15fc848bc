use serde::Serialize;

use crate::point::BasePoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    Blocked,
}

/// One residual measured at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    /// Human-readable name of the result under test.
    pub reference: String,
    pub point: Option<BasePoint>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

impl CheckEntry {
    /// Passes iff the residual is finite and at most `tolerance`.
    pub fn measure(name: &str, reference: &str, point: Option<&BasePoint>, residual: f64, tolerance: f64) -> Self {
        let pass = residual.is_finite() && residual <= tolerance;
        CheckEntry {
            name: name.to_string(),
            reference: reference.to_string(),
            point: point.cloned(),
            residual,
            tolerance,
            pass,
            status: if pass { Status::Pass } else { Status::Fail },
            witness: None,
        }
    }

    /// A boolean outcome, residual 0 or 1.
    pub fn flag(name: &str, reference: &str, point: Option<&BasePoint>, ok: bool) -> Self {
        Self::measure(name, reference, point, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    fn skipped(name: &str, reference: &str, point: Option<&BasePoint>, status: Status, why: String) -> Self {
        CheckEntry {
            name: name.to_string(),
            reference: reference.to_string(),
            point: point.cloned(),
            residual: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            status,
            witness: Some(serde_json::json!({ "reason": why })),
        }
    }

    pub fn not_applicable(name: &str, reference: &str, point: Option<&BasePoint>, why: impl Into<String>) -> Self {
        Self::skipped(name, reference, point, Status::NotApplicable, why.into())
    }

    pub fn blocked(name: &str, reference: &str, point: Option<&BasePoint>, why: impl Into<String>) -> Self {
        Self::skipped(name, reference, point, Status::Blocked, why.into())
    }

    /// An evaluation error turned into a failed entry.
    pub fn errored(name: &str, reference: &str, point: Option<&BasePoint>, err: &crate::Error) -> Self {
        let mut e = Self::skipped(name, reference, point, Status::Fail, String::new());
        e.witness = Some(serde_json::json!({ "error": err.to_string() }));
        e
    }

    pub fn with_witness(mut self, witness: serde_json::Value) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Entries in evaluation order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn push(&mut self, e: CheckEntry) {
        self.entries.push(e);
    }

    pub fn extend(&mut self, es: impl IntoIterator<Item = CheckEntry>) {
        self.entries.extend(es);
    }

    pub fn named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a CheckEntry> + 'a {
        self.entries.iter().filter(move |e| e.name == name)
    }

    /// No entry failed or was blocked.
    pub fn all_ok(&self) -> bool {
        self.entries
            .iter()
            .all(|e| !matches!(e.status, Status::Fail | Status::Blocked))
    }

    pub fn count(&self, status: Status) -> usize {
        self.entries.iter().filter(|e| e.status == status).count()
    }
}

/// `max |v_i|` over a slice, 0 for an empty slice.
pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    let mut out: f64 = 0.0;
    for x in v {
        if x.is_nan() {
            return f64::NAN;
        }
        out = out.max(x.abs());
    }
    out
}
