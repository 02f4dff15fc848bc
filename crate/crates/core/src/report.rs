//! JSON report assembly and atomic emission.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::check::{CheckEntry, Status};
use crate::config::RunConfig;
use crate::error::Result;
use crate::suite::{Conventions, StructureFlag, SuiteOutput};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config: Value,
    pub seed: u64,
    pub conventions: Option<Conventions>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub blocked: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub header: Header,
    pub entries: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub classification: Vec<StructureFlag>,
    pub summary: Summary,
}

impl Report {
    pub fn empty(cfg: &RunConfig) -> Report {
        Report {
            header: header(cfg, None),
            entries: Vec::new(),
            classification: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn from_suite(cfg: &RunConfig, out: SuiteOutput) -> Report {
        let summary = summarize(&out.report.entries);
        Report {
            header: header(cfg, Some(out.conventions)),
            entries: out.report.entries,
            classification: out.classification,
            summary,
        }
    }

    /// No failed and no blocked entries.
    pub fn ok(&self) -> bool {
        self.summary.fail == 0 && self.summary.blocked == 0
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn header(cfg: &RunConfig, conventions: Option<Conventions>) -> Header {
    Header {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        config: cfg.echo.clone(),
        seed: cfg.seed,
        conventions,
    }
}

pub fn summarize(entries: &[CheckEntry]) -> Summary {
    let mut s = Summary::default();
    for e in entries {
        match e.status {
            Status::Pass => s.pass += 1,
            Status::Fail => s.fail += 1,
            Status::NotApplicable => s.not_applicable += 1,
            Status::Blocked => s.blocked += 1,
        }
    }
    s
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn emit_report(r: &Report, path: &Path) -> Result<()> {
    let text = r.to_json()?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "report.json".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let res = (|| -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// One line per check name: worst residual and status counts.
pub fn text_summary(r: &Report) -> String {
    let mut names: Vec<&str> = Vec::new();
    for e in &r.entries {
        if !names.contains(&e.name.as_str()) {
            names.push(&e.name);
        }
    }
    let mut out = String::new();
    for n in names {
        let es: Vec<&CheckEntry> = r.entries.iter().filter(|e| e.name == n).collect();
        let s = summarize(&es.iter().map(|e| (*e).clone()).collect::<Vec<_>>());
        let worst = es
            .iter()
            .filter(|e| matches!(e.status, Status::Pass | Status::Fail))
            .map(|e| e.residual)
            .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })));
        let tag = if s.fail > 0 {
            "FAIL"
        } else if s.blocked > 0 {
            "BLOCKED"
        } else if s.pass > 0 {
            "ok"
        } else {
            "n/a"
        };
        let worst = worst.map_or("-".to_string(), |w| format!("{w:.3e}"));
        out.push_str(&format!("{tag:>7}  {n:<34} worst {worst:<10} pass {} fail {} n/a {} blocked {}\n", s.pass, s.fail, s.not_applicable, s.blocked));
    }
    for f in &r.classification {
        let extra = f.blocked_by.map(|b| format!(" (needs {b})")).unwrap_or_default();
        out.push_str(&format!("  {:<20} {:<5} residual {:.3e}{extra}\n", f.name, f.holds, f.residual));
    }
    out.push_str(&format!(
        "summary: pass {} fail {} n/a {} blocked {}\n",
        r.summary.pass, r.summary.fail, r.summary.not_applicable, r.summary.blocked
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::point::BasePoint;
    use crate::suite::run_suite;

    #[test]
    fn empty_report_shape() {
        let cfg = parse_config(r#"{"metric": "heisenberg3"}"#).unwrap();
        let v: Value = serde_json::from_str(&Report::empty(&cfg).to_json().unwrap()).unwrap();
        assert_eq!(v["entries"], Value::Array(vec![]));
        assert_eq!(v["header"]["seed"], 42);
        assert_eq!(v["header"]["tool"], TOOL);
    }

    #[test]
    fn passing_entry_fields() {
        let p = BasePoint::new(vec![0.0; 3], vec![1.0, 0.0, 0.0]).unwrap();
        let v = serde_json::to_value(CheckEntry::measure("x.y", "something", Some(&p), 1e-14, 1e-12)).unwrap();
        for k in ["name", "point", "residual", "tolerance", "pass"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["pass"], true);
        assert_eq!(v["point"]["y"][0], 1.0);
    }

    #[test]
    fn emit_is_deterministic_and_atomic() {
        let cfg = parse_config(r#"{"metric": "heisenberg3", "sampler": {"seed": 9, "count": 2}}"#).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        emit_report(&Report::from_suite(&cfg, run_suite(&cfg)), &a).unwrap();
        emit_report(&Report::from_suite(&cfg, run_suite(&cfg)), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(left.len(), 2);
        let err = emit_report(&Report::empty(&cfg), &dir.path().join("missing/x.json"));
        assert!(err.is_err());
    }
}
