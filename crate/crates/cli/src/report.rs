//! Verification reports: one record per check in a fixed order, plus named
//! quantities and rigidity certificates. Text and JSON renderings carry the
//! same numbers (both use the shortest representation that round-trips).

use std::fmt::Write as _;

use qem_core::qe::RigidityReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// What the check was evaluated on, e.g. `row 6 n=3 m=2`.
    pub inputs: String,
    /// `None` when the computed value was not finite (the check then fails).
    pub value: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityRecord {
    pub subject: String,
    pub verdict: String,
    pub einstein: bool,
    pub ric_eigenvalues: Vec<f64>,
    pub p_eigenvalues: Vec<f64>,
    pub off_spectrum: f64,
    pub integrability_defects: Vec<f64>,
}

impl RigidityRecord {
    pub fn new(subject: impl Into<String>, r: &RigidityReport) -> Self {
        Self {
            subject: subject.into(),
            verdict: r.verdict.name().to_string(),
            einstein: r.einstein,
            ric_eigenvalues: r.ric_eigenvalues.eigenvalues.clone(),
            p_eigenvalues: r.p_eigenvalues.eigenvalues.clone(),
            off_spectrum: r.off_spectrum,
            integrability_defects: r.integrability_defects.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<Quantity>,
    pub quantities: Vec<Quantity>,
    pub checks: Vec<CheckRecord>,
    pub rigidity: Vec<RigidityRecord>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            quantities: Vec::new(),
            checks: Vec::new(),
            rigidity: Vec::new(),
            notes: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn input(&mut self, name: &str, value: impl Into<Value>) {
        self.inputs.push(Quantity { name: name.to_string(), value: value.into() });
    }

    pub fn quantity(&mut self, name: &str, value: impl Into<Value>) {
        self.quantities.push(Quantity { name: name.to_string(), value: value.into() });
    }

    /// Passes when `value ≤ tolerance`.
    pub fn check_le(&mut self, name: &str, inputs: &str, value: f64, tolerance: f64) {
        let verdict = if value.is_finite() && value <= tolerance { Verdict::Pass } else { Verdict::Fail };
        self.push(name, inputs, value, tolerance, verdict);
    }

    /// Passes when `value ≥ threshold`.
    pub fn check_ge(&mut self, name: &str, inputs: &str, value: f64, threshold: f64) {
        let verdict = if value.is_finite() && value >= threshold { Verdict::Pass } else { Verdict::Fail };
        self.push(name, inputs, value, threshold, verdict);
    }

    pub fn check_failed(&mut self, name: &str, inputs: &str, note: impl Into<String>) {
        self.push(name, inputs, f64::NAN, 0.0, Verdict::Fail);
        self.notes.push(note.into());
    }

    fn push(&mut self, name: &str, inputs: &str, value: f64, tolerance: f64, verdict: Verdict) {
        match verdict {
            Verdict::Pass => self.summary.passed += 1,
            Verdict::Fail => self.summary.failed += 1,
            Verdict::Inconclusive => self.summary.inconclusive += 1,
        }
        self.checks.push(CheckRecord {
            name: name.to_string(),
            inputs: inputs.to_string(),
            value: value.is_finite().then_some(value),
            tolerance,
            verdict,
        });
    }

    pub fn passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.quantities.iter().find(|q| q.name == name).map(|q| &q.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite numbers")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "qem {}", self.command);
        if !self.inputs.is_empty() {
            let parts: Vec<String> =
                self.inputs.iter().map(|q| format!("{}={}", q.name, fmt_value(&q.value))).collect();
            let _ = writeln!(out, "inputs: {}", parts.join(" "));
        }
        if !self.quantities.is_empty() {
            let _ = writeln!(out, "quantities:");
            let width = self.quantities.iter().map(|q| q.name.len()).max().unwrap_or(0);
            for q in &self.quantities {
                let _ = writeln!(out, "  {:width$} = {}", q.name, fmt_value(&q.value));
            }
        }
        if !self.checks.is_empty() {
            let _ = writeln!(out, "checks:");
            let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &self.checks {
                let value = c.value.map_or_else(|| "non-finite".to_string(), num);
                let _ = writeln!(
                    out,
                    "  [{:<4}] {:width$}  value={}  tol={}  ({})",
                    c.verdict.as_str(),
                    c.name,
                    value,
                    num(c.tolerance),
                    c.inputs
                );
            }
        }
        for r in &self.rigidity {
            let _ = writeln!(out, "rigidity [{}]: {}", r.subject, r.verdict);
            let _ = writeln!(out, "  einstein = {}", r.einstein);
            let _ = writeln!(out, "  ric_eigenvalues = {}", fmt_list(&r.ric_eigenvalues));
            let _ = writeln!(out, "  p_eigenvalues = {}", fmt_list(&r.p_eigenvalues));
            let _ = writeln!(out, "  off_spectrum = {}", num(r.off_spectrum));
            let _ = writeln!(out, "  integrability_defects = {}", fmt_list(&r.integrability_defects));
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        let _ = writeln!(
            out,
            "summary: passed={} failed={} inconclusive={}",
            self.summary.passed, self.summary.failed, self.summary.inconclusive
        );
        out
    }
}

/// Shortest round-trip form, switching to exponent notation outside
/// `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn fmt_list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64")),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(fmt_value).collect();
            format!("[{}]", parts.join(", "))
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `Value` for a row-major matrix.
pub fn matrix_value(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Value {
    Value::Array((0..rows).map(|i| Value::from((0..cols).map(|j| f(i, j)).collect::<Vec<f64>>())).collect())
}
