use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl Verdict {
    pub fn check(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            detail: detail.into(),
            value: None,
            threshold: None,
        }
    }

    pub fn not_applicable(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), status: Status::NotApplicable, detail: detail.into(), value: None, threshold: None }
    }

    /// Passes when `value < threshold`.
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self::compare(name, value, threshold, value < threshold, "<")
    }

    /// Passes when `value > threshold`.
    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self::compare(name, value, threshold, value > threshold, ">")
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self::compare(name, value, threshold, value >= threshold, ">=")
    }

    /// Passes when `value <= threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::compare(name, value, threshold, value <= threshold, "<=")
    }

    fn compare(name: &str, value: f64, threshold: f64, pass: bool, op: &str) -> Self {
        Self {
            name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            detail: format!("{value:.6e} {op} {threshold:.6e}"),
            value: Some(value),
            threshold: Some(threshold),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Conventions every report is stated in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conventions {
    pub vacuum_variance: f64,
    pub quadratures: &'static str,
    pub beamsplitter: &'static str,
    pub two_mode_index: &'static str,
    pub two_mode_squeezed: &'static str,
    pub phase_grid: &'static str,
    pub log_base: u32,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            vacuum_variance: crate::gaussian::VACUUM_VARIANCE,
            quadratures: "x = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2)",
            beamsplitter: "a -> (a + b)/sqrt2, b -> (b - a)/sqrt2",
            two_mode_index: "|n,m> at n*D + m",
            two_mode_squeezed: "sum_n (exp(2i phi) tanh r)^n |n,n> / cosh r",
            phase_grid: "phi_k = 2 pi k / M",
            log_base: 2,
        }
    }
}

/// A CSV artifact attached to a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub name: String,
    pub csv: String,
}

impl Trace {
    pub fn from_rows(name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Self {
        let mut csv = header.join(",");
        csv.push('\n');
        for row in rows {
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        Self { name: name.into(), csv }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub conventions: Conventions,
    pub parameters: BTreeMap<String, Value>,
    pub summary: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub traces: Vec<Trace>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            seed,
            conventions: Conventions::default(),
            parameters: BTreeMap::new(),
            summary: BTreeMap::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            traces: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.into(), to_value(value));
        self
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.summary.insert(key.into(), to_value(value));
        self
    }

    pub fn verdict(&mut self, v: Verdict) -> &mut Self {
        self.verdicts.push(v);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) -> &mut Self {
        self.warnings.push(msg.into());
        self
    }

    pub fn trace(&mut self, t: Trace) -> &mut Self {
        self.traces.push(t);
        self
    }

    /// True when no verdict failed.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(Verdict::passed)
    }

    pub fn find(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_ops() {
        assert!(Verdict::below("x", 1.0, 2.0).passed());
        assert!(!Verdict::below("x", 2.0, 2.0).passed());
        assert!(Verdict::at_least("x", 2.0, 2.0).passed());
        assert!(Verdict::not_applicable("x", "none").passed());
    }

    #[test]
    fn json_has_schema_and_sorted_keys() {
        let mut r = ExperimentReport::new("demo", Some(7));
        r.param("zeta", 1.0).param("alpha", 2.0);
        r.verdict(Verdict::check("ok", true, ""));
        let s = r.to_json();
        assert!(s.contains("\"schema_version\": 1"));
        assert!(s.contains("\"vacuum_variance\": 0.5"));
        assert!(s.find("\"alpha\"").unwrap() < s.find("\"zeta\"").unwrap());
        assert!(r.passed());
        r.verdict(Verdict::check("bad", false, ""));
        assert!(!r.passed());
    }

    #[test]
    fn trace_rows() {
        let t = Trace::from_rows("t", &["a", "b"], vec![vec!["1".into(), "2".into()]]);
        assert_eq!(t.csv, "a,b\n1,2\n");
    }
}
