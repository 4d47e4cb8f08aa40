//! Check results shared by the verification routines and the CLI.

use serde::{Deserialize, Serialize};

use crate::superpoly::{parse, SPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    PaperDiscrepancy,
}

/// One verified identity. A discrepancy keeps both the published expression
/// and the recomputed one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recomputed: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl Check {
    pub fn new(id: impl Into<String>, status: Status) -> Self {
        Check {
            id: id.into(),
            status,
            residual: None,
            printed: None,
            recomputed: None,
            note: None,
            runtime_ms: None,
        }
    }

    /// Pass iff `residual` is the zero polynomial.
    pub fn zero(id: impl Into<String>, residual: &SPoly) -> Self {
        let status = if residual.is_zero() {
            Status::Pass
        } else {
            Status::Fail
        };
        Check::new(id, status).with_residual(residual)
    }

    /// Pass iff every residual vanishes; the residual list is recorded.
    pub fn all_zero<'a>(id: impl Into<String>, residuals: impl IntoIterator<Item = &'a SPoly>) -> Self {
        let rs: Vec<&SPoly> = residuals.into_iter().collect();
        let ok = rs.iter().all(|r| r.is_zero());
        let mut c = Check::new(id, if ok { Status::Pass } else { Status::Fail });
        c.residual = Some(serde_json::Value::Array(
            rs.iter().map(|r| serde_json::Value::String(r.to_string())).collect(),
        ));
        c
    }

    /// Compare a published expression against a recomputed one. A mismatch
    /// is a `PaperDiscrepancy`, not a failure of the computation.
    pub fn against_printed(id: impl Into<String>, printed: &SPoly, computed: &SPoly) -> Self {
        let diff = computed - printed;
        let status = if diff.is_zero() {
            Status::Pass
        } else {
            Status::PaperDiscrepancy
        };
        let mut c = Check::new(id, status).with_residual(&diff);
        if status != Status::Pass {
            c.printed = Some(printed.to_string());
            c.recomputed = Some(computed.to_string());
        }
        c
    }

    /// Same as [`Check::against_printed`] with the published form as text.
    pub fn against_printed_src(id: impl Into<String>, printed: &str, computed: &SPoly) -> Self {
        let p = parse(printed).expect("published expression must parse");
        Check::against_printed(id, &p, computed)
    }

    pub fn with_residual(mut self, r: &SPoly) -> Self {
        self.residual = Some(serde_json::Value::String(r.to_string()));
        self
    }

    pub fn with_number(mut self, x: f64) -> Self {
        self.residual = serde_json::Number::from_f64(x).map(serde_json::Value::Number);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Output of one CLI command: the command line, the resolved
/// configuration, the checks and any computed data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl Report {
    pub fn ok(&self, allow_paper_diff: bool) -> bool {
        all_ok(&self.checks, allow_paper_diff)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::PaperDiscrepancy => "paper-diff",
            };
            out.push_str(&format!("{status:<10} {}", c.id));
            if let Some(serde_json::Value::Number(x)) = &c.residual {
                out.push_str(&format!("  {x}"));
            }
            if let Some(n) = &c.note {
                out.push_str(&format!("  ({n})"));
            }
            out.push('\n');
        }
        let count = |s: Status| self.checks.iter().filter(|c| c.status == s).count();
        out.push_str(&format!(
            "{} checks: {} pass, {} fail, {} paper-diff\n",
            self.checks.len(),
            count(Status::Pass),
            count(Status::Fail),
            count(Status::PaperDiscrepancy)
        ));
        out
    }
}

/// Exit status rule: everything passes, or only allowed discrepancies remain.
pub fn all_ok(checks: &[Check], allow_paper_diff: bool) -> bool {
    checks.iter().all(|c| match c.status {
        Status::Pass => true,
        Status::PaperDiscrepancy => allow_paper_diff,
        Status::Fail => false,
    })
}
