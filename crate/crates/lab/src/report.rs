use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "superint-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "==")]
    Equal,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, comparison: Comparison, threshold: f64) -> Self {
        let pass = match comparison {
            Comparison::Below => value < threshold,
            Comparison::Above => value > threshold,
            Comparison::Equal => value == threshold,
            Comparison::AtLeast => value >= threshold,
        };
        Check {
            name: name.into(),
            value,
            comparison,
            threshold,
            pass,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check::new(name, value, Comparison::Below, tolerance)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check::new(name, value, Comparison::Above, threshold)
    }

    pub fn equal(name: impl Into<String>, value: usize, expected: usize) -> Self {
        Check::new(name, value as f64, Comparison::Equal, expected as f64)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check::new(name, if ok { 1.0 } else { 0.0 }, Comparison::Equal, 1.0)
    }
}

/// Experiment outcome. `timings` are wall-clock and excluded from `hash`.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub info: BTreeMap<String, Value>,
    pub artifacts: Vec<String>,
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(experiment: impl Into<String>, config: Value) -> Self {
        Report {
            experiment: experiment.into(),
            config,
            checks: Vec::new(),
            info: BTreeMap::new(),
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn info(&mut self, key: &str, value: Value) {
        self.info.insert(key.to_string(), value);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// The deterministic part of the report.
    fn body(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "experiment": self.experiment,
            "config": self.config,
            "checks": self.checks,
            "info": self.info,
            "artifacts": self.artifacts,
            "pass": self.pass(),
        })
    }

    /// SHA-256 of the compact JSON body, timings excluded.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.body()).expect("report serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.body();
        let obj = v.as_object_mut().expect("report body is an object");
        obj.insert("hash".into(), Value::String(self.hash()));
        obj.insert("timings".into(), json!(self.timings));
        v
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,value,comparison,threshold,pass\n");
        for c in &self.checks {
            let cmp = serde_json::to_value(c.comparison).expect("comparison serializes");
            out.push_str(&format!(
                "{},{:.16e},{},{:.16e},{}\n",
                c.name,
                c.value,
                cmp.as_str().unwrap_or("?"),
                c.threshold,
                c.pass
            ));
        }
        out
    }
}
