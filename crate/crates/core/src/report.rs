use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// How a margin is compared against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `value ≥ −tolerance`.
    NonNegative,
    /// `value > tolerance`.
    StrictlyPositive,
    /// `|value| ≤ tolerance`.
    NearZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Margin {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64, rule: Rule) -> Self {
        let pass = match rule {
            Rule::NonNegative => value >= -tolerance,
            Rule::StrictlyPositive => value > tolerance,
            Rule::NearZero => value.abs() <= tolerance,
        };
        Margin {
            name: name.into(),
            value,
            tolerance,
            rule,
            pass,
        }
    }
}

/// Outcome of one numerical verification.
///
/// `pass` is the conjunction of the margin verdicts; a report without
/// margins (exploratory data) always passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub inputs: Value,
    pub quantities: Map<String, Value>,
    pub margins: Vec<Margin>,
    pub tolerances: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl CheckReport {
    pub fn builder(name: impl Into<String>, inputs: Value) -> ReportBuilder {
        ReportBuilder {
            report: CheckReport {
                name: name.into(),
                inputs,
                quantities: Map::new(),
                margins: Vec::new(),
                tolerances: Map::new(),
                table: Vec::new(),
                notes: Vec::new(),
                pass: true,
                wall_time_s: 0.0,
            },
            start: Instant::now(),
        }
    }

    pub fn margin(&self, name: &str) -> Option<&Margin> {
        self.margins.iter().find(|m| m.name == name)
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).and_then(Value::as_f64)
    }
}

pub struct ReportBuilder {
    report: CheckReport,
    start: Instant,
}

impl ReportBuilder {
    pub fn quantity(mut self, name: &str, value: impl Into<Value>) -> Self {
        self.report.quantities.insert(name.into(), value.into());
        self
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.report.tolerances.insert(name.into(), value.into());
        self
    }

    pub fn margin(mut self, name: &str, value: f64, tolerance: f64, rule: Rule) -> Self {
        self.report.margins.push(Margin::new(name, value, tolerance, rule));
        self
    }

    pub fn row(mut self, row: Value) -> Self {
        self.report.table.push(row);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.report.notes.push(note.into());
        self
    }

    pub fn finish(mut self) -> CheckReport {
        self.report.pass = self.report.margins.iter().all(|m| m.pass);
        self.report.wall_time_s = self.start.elapsed().as_secs_f64();
        self.report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn pass_is_the_conjunction_of_margins() {
        let ok = CheckReport::builder("a", json!({}))
            .margin("m", -1e-9, 1e-8, Rule::NonNegative)
            .margin("z", 1e-9, 1e-8, Rule::NearZero)
            .finish();
        assert!(ok.pass);
        let bad = CheckReport::builder("b", json!({}))
            .margin("m", 1e-9, 1e-8, Rule::StrictlyPositive)
            .finish();
        assert!(!bad.pass);
        assert!(CheckReport::builder("c", json!({})).finish().pass);
    }
}
