//! JSON reports.

use crate::config::RunConfig;
use serde::{Serialize, Serializer};
use serde_json::Value;
use std::collections::BTreeMap;

pub const SCHEMA: u32 = 1;

fn finite_or_null<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    let m: BTreeMap<&String, Option<f64>> = map.iter().map(|(k, v)| (k, v.is_finite().then_some(*v))).collect();
    m.serialize(s)
}

/// One checked configuration with its inputs, outputs and residuals.
#[derive(Clone, Debug, Serialize)]
pub struct Case {
    pub name: String,
    pub inputs: Value,
    pub outputs: Value,
    #[serde(serialize_with = "finite_or_null")]
    pub residuals: BTreeMap<String, f64>,
    pub pass: bool,
}

impl Case {
    pub fn new(name: impl Into<String>, inputs: Value) -> Self {
        Case { name: name.into(), inputs, outputs: Value::Null, residuals: BTreeMap::new(), pass: true }
    }

    /// Records `value` under `key` and fails the case unless `value < tol`.
    pub fn residual(mut self, key: &str, value: f64, tol: f64) -> Self {
        self.pass &= value < tol;
        self.residuals.insert(key.to_string(), value);
        self
    }

    pub fn outputs(mut self, outputs: Value) -> Self {
        self.outputs = outputs;
        self
    }

    /// Marks the case failed with the error message as its output.
    pub fn failed(mut self, err: impl std::fmt::Display) -> Self {
        self.outputs = serde_json::json!({ "error": err.to_string() });
        self.pass = false;
        self
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub check: String,
    pub config: RunConfig,
    pub cases: Vec<Case>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Report>,
    pub pass: bool,
    pub timing: Timing,
    /// Grid output of `eval-s2`, written separately.
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Report {
    pub fn new(check: &str, config: &RunConfig, cases: Vec<Case>, children: Vec<Report>, elapsed_ms: f64) -> Self {
        let pass = cases.iter().all(|c| c.pass) && children.iter().all(|r| r.pass);
        Report {
            schema: SCHEMA,
            check: check.to_string(),
            config: config.clone(),
            cases,
            children,
            pass,
            timing: Timing { elapsed_ms },
            csv: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Removes every `timing` field, for comparing runs.
pub fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("timing");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn pass_is_conjunction() {
        let cfg = RunConfig::default();
        let ok = Case::new("a", json!({})).residual("r", 1e-12, 1e-10);
        let bad = Case::new("b", json!({})).residual("r", 1e-3, 1e-10);
        assert!(Report::new("x", &cfg, vec![ok.clone()], vec![], 0.0).pass);
        let child = Report::new("y", &cfg, vec![ok.clone(), bad], vec![], 0.0);
        assert!(!child.pass);
        assert!(!Report::new("x", &cfg, vec![ok], vec![child], 0.0).pass);
    }

    #[test]
    fn residuals_kept_and_timing_stripped() {
        let cfg = RunConfig::default();
        let c = Case::new("a", json!({})).residual("r", f64::NAN, 1.0).residual("s", 0.5, 1.0);
        assert!(!c.pass);
        let mut v: Value = serde_json::from_str(&Report::new("x", &cfg, vec![c], vec![], 3.0).to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["cases"][0]["residuals"]["r"], Value::Null);
        assert_eq!(v["cases"][0]["residuals"]["s"], 0.5);
        assert_eq!(v["config"]["seed"], 7);
        strip_timing(&mut v);
        assert!(v.get("timing").is_none());
    }
}
