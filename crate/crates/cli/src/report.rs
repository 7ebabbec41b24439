//! Run reports and their text, JSON and CSV renderings.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

/// How `observed` is compared with `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `|observed - target| <= tolerance`
    Eq,
    /// `observed <= target + tolerance`
    Le,
    /// `observed < target`
    Lt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub target: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Verdict {
    pub fn new(
        claim: impl Into<String>,
        relation: Relation,
        target: f64,
        observed: f64,
        tolerance: f64,
    ) -> Self {
        let pass = match relation {
            Relation::Eq => (observed - target).abs() <= tolerance,
            Relation::Le => observed <= target + tolerance,
            Relation::Lt => observed < target,
        };
        Self {
            claim: claim.into(),
            target,
            observed,
            tolerance,
            relation,
            pass,
        }
    }

    /// Boolean check recorded as `1.0 == 1.0`.
    pub fn holds(claim: impl Into<String>, ok: bool) -> Self {
        Self::new(claim, Relation::Eq, 1.0, if ok { 1.0 } else { 0.0 }, 0.0)
    }
}

/// Resolved parameters; only those the command uses are set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perfect_correlations: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub honest: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub params: Params,
    pub results: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub duration_ms: u64,
}

impl RunReport {
    pub fn new(command: impl Into<String>, params: Params) -> Self {
        Self {
            command: command.into(),
            params,
            results: Map::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            duration_ms: 0,
        }
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("result values serialize");
        self.results.insert(key.to_string(), value);
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Report without the wall-clock field, for reproducibility comparisons.
    pub fn payload(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(m) = &mut v {
            m.remove("duration_ms");
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

pub fn render(report: &RunReport, format: Format) -> String {
    match format {
        Format::Text => render_text(report),
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => render_csv(report),
    }
}

fn render_text(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ==", report.command);
    if let Value::Object(params) = serde_json::to_value(&report.params).expect("params serialize") {
        let joined: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "params: {}", joined.join(" "));
    }
    for (key, value) in &report.results {
        match value {
            Value::String(s) if s.contains('\n') => {
                let _ = writeln!(out, "{key}:");
                for line in s.lines() {
                    let _ = writeln!(out, "  {line}");
                }
            }
            Value::String(s) => {
                let _ = writeln!(out, "{key}: {s}");
            }
            Value::Array(items) if items.len() > 16 => {
                let _ = writeln!(out, "{key}: [{} entries]", items.len());
            }
            other => {
                let _ = writeln!(out, "{key}: {other}");
            }
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for v in &report.verdicts {
        let rel = match v.relation {
            Relation::Eq => format!("{} ± {:e}", v.target, v.tolerance),
            Relation::Le => format!("<= {} + {:e}", v.target, v.tolerance),
            Relation::Lt => format!("< {}", v.target),
        };
        let _ = writeln!(
            out,
            "[{}] {}: observed {:.9}, target {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.claim,
            v.observed,
            rel
        );
    }
    let _ = writeln!(out, "duration: {} ms", report.duration_ms);
    out
}

/// One row per scalar: `section,key,value,target,tolerance,relation,pass`.
/// Nested results are flattened to dotted keys.
fn render_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, fields: [&str; 7]| {
        w.write_record(fields).expect("in-memory csv write")
    };
    row(
        &mut w,
        [
            "section",
            "key",
            "value",
            "target",
            "tolerance",
            "relation",
            "pass",
        ],
    );
    row(
        &mut w,
        ["command", "command", &report.command, "", "", "", ""],
    );
    let mut flat = Vec::new();
    flatten(
        "",
        &serde_json::to_value(&report.params).expect("params serialize"),
        &mut flat,
    );
    for (k, v) in &flat {
        row(&mut w, ["params", k, v, "", "", "", ""]);
    }
    flat.clear();
    flatten("", &Value::Object(report.results.clone()), &mut flat);
    for (k, v) in &flat {
        row(&mut w, ["results", k, v, "", "", "", ""]);
    }
    for v in &report.verdicts {
        let relation = serde_json::to_value(v.relation).expect("relation serializes");
        row(
            &mut w,
            [
                "verdicts",
                &v.claim,
                &v.observed.to_string(),
                &v.target.to_string(),
                &v.tolerance.to_string(),
                relation.as_str().unwrap_or_default(),
                &v.pass.to_string(),
            ],
        );
    }
    row(
        &mut w,
        [
            "duration_ms",
            "duration_ms",
            &report.duration_ms.to_string(),
            "",
            "",
            "",
            "",
        ],
    );
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&join(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&join(&i.to_string()), v, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_relations() {
        assert!(Verdict::new("eq", Relation::Eq, 1.0, 1.00005, 1e-4).pass);
        assert!(!Verdict::new("eq", Relation::Eq, 1.0, 1.0002, 1e-4).pass);
        assert!(Verdict::new("le", Relation::Le, 1.0, 1.0000005, 1e-6).pass);
        assert!(!Verdict::new("lt", Relation::Lt, 2.0, 2.0, 0.0).pass);
        assert!(!Verdict::holds("flag", false).pass);
    }

    #[test]
    fn csv_flattens_nested_results() {
        let mut r = RunReport::new(
            "demo",
            Params {
                n: Some(3),
                ..Default::default()
            },
        );
        r.result(
            "certificate",
            serde_json::json!({"verified": true, "gap": 1e-9}),
        );
        r.verdict(Verdict::holds("ok", true));
        let text = render(&r, Format::Csv);
        assert!(text.contains("params,n,3,,,,"));
        assert!(text.contains("results,certificate.verified,true,,,,"));
        assert!(text.contains("verdicts,ok,1,1,0,eq,true"));
    }

    #[test]
    fn payload_drops_duration() {
        let mut r = RunReport::new("demo", Params::default());
        r.duration_ms = 12;
        assert!(r.payload().get("duration_ms").is_none());
        assert!(serde_json::to_value(&r)
            .unwrap()
            .get("duration_ms")
            .is_some());
    }
}
