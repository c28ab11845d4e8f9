//! Check records and run reports.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "degenerate")]
    Degenerate,
    #[serde(rename = "n/a")]
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degenerate => "degenerate",
            Verdict::NotApplicable => "n/a",
        }
    }
}

/// One sample's contribution to a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleValue {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    pub residual: f64,
}

/// A named check with its formula anchor; `samples` align with the run's points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub verdict: Verdict,
    pub residual: f64,
    pub tolerance: f64,
    pub samples: Vec<SampleValue>,
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(
        0.0,
        |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) },
    )
}

impl CheckRecord {
    /// Passes when every per-sample residual is within `tolerance`.
    pub fn from_residuals(name: &str, anchor: &str, residuals: Vec<f64>, tolerance: f64) -> Self {
        let residual = max_of(residuals.iter().copied());
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict: if residual <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            residual,
            tolerance,
            samples: residuals
                .into_iter()
                .map(|r| SampleValue {
                    value: None,
                    expected: None,
                    residual: r,
                })
                .collect(),
        }
    }

    /// Compares computed values with expected closed forms.
    pub fn from_values(name: &str, anchor: &str, values: Vec<f64>, expected: Vec<f64>, tolerance: f64) -> Self {
        let samples: Vec<SampleValue> = values
            .iter()
            .zip(&expected)
            .map(|(&v, &e)| SampleValue {
                value: Some(v),
                expected: Some(e),
                residual: (v - e).abs(),
            })
            .collect();
        let residual = max_of(samples.iter().map(|s| s.residual));
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict: if residual <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            residual,
            tolerance,
            samples,
        }
    }

    /// Reports values with no pass/fail meaning.
    pub fn informational(name: &str, anchor: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            verdict: Verdict::NotApplicable,
            residual: 0.0,
            tolerance: 0.0,
            samples: values
                .into_iter()
                .map(|v| SampleValue {
                    value: Some(v),
                    expected: None,
                    residual: 0.0,
                })
                .collect(),
        }
    }

    /// Attaches per-sample values to a residual record.
    pub fn with_values(mut self, values: Vec<f64>) -> Self {
        for (s, v) in self.samples.iter_mut().zip(values) {
            s.value = Some(v);
        }
        self
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }

    /// Turns a residual check upside down: passes when the residual exceeds
    /// the tolerance somewhere (negative controls).
    pub fn expecting_failure(mut self) -> Self {
        self.verdict = if self.residual > self.tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    pub fn value_at(&self, sample: usize) -> Option<f64> {
        self.samples.get(sample).and_then(|s| s.value)
    }
}

/// Full output of one command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub manifold: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub wall_ms: Option<f64>,
}

impl Report {
    pub fn any_failed(&self) -> bool {
        self.checks.iter().any(CheckRecord::failed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let name_w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "manifold: {}", self.manifold);
        let _ = writeln!(
            out,
            "{:<name_w$}  {:<10}  {:>10}  {:>9}  anchor",
            "check", "verdict", "residual", "tolerance"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<name_w$}  {:<10}  {:>10.3e}  {:>9.1e}  {}",
                c.name,
                c.verdict.as_str(),
                c.residual,
                c.tolerance,
                c.anchor
            );
        }
        let failed = self.checks.iter().filter(|c| c.failed()).count();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        if let Some(ms) = self.wall_ms {
            let _ = writeln!(out, "wall time: {ms:.1} ms");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_follow_tolerance() {
        let r = CheckRecord::from_residuals("a", "x = y", vec![1e-12, 3e-10], 1e-9);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.residual, 3e-10);
        let r = CheckRecord::from_values("b", "x = 1", vec![1.0, 1.1], vec![1.0, 1.0], 1e-9);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.value_at(1), Some(1.1));
        let r = CheckRecord::from_residuals("c", "F != shape", vec![0.3], 1e-9).expecting_failure();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn nan_residual_fails() {
        let r = CheckRecord::from_residuals("a", "", vec![0.0, f64::NAN], 1e-9);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn json_shape() {
        let report = Report {
            manifold: "builtin:x".into(),
            config: serde_json::json!({"seed": 42}),
            checks: vec![CheckRecord::informational("tau", "tau = g^ij rho_ij", vec![-0.5])],
            wall_ms: None,
        };
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(v["checks"][0]["verdict"], "n/a");
        assert_eq!(v["checks"][0]["samples"][0]["value"], -0.5);
        assert!(v["wall_ms"].is_null());
        assert!(report.to_table().contains("tau"));
    }
}
