//! Machine-readable verification reports.
//!
//! Each identity check produces one entry; residuals are canonical-form
//! strings. Ordering is deterministic (insertion order, which the
//! verifiers keep fixed).

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub equation_ref: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report { checks: Vec::new() }
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn pass(&mut self, name: &str, eq: &str) {
        self.checks.push(Check {
            name: name.to_string(),
            equation_ref: eq.to_string(),
            status: Status::Pass,
            residual: None,
            point: None,
        });
    }

    pub fn fail(&mut self, name: &str, eq: &str, residual: String) {
        self.checks.push(Check {
            name: name.to_string(),
            equation_ref: eq.to_string(),
            status: Status::Fail,
            residual: Some(residual),
            point: None,
        });
    }

    pub fn skip(&mut self, name: &str, eq: &str) {
        self.checks.push(Check {
            name: name.to_string(),
            equation_ref: eq.to_string(),
            status: Status::Skipped,
            residual: None,
            point: None,
        });
    }

    /// Record a residual check: passes iff the residual is zero.
    pub fn residual(&mut self, name: &str, eq: &str, r: &crate::element::GradedElement) {
        if r.is_zero() {
            self.pass(name, eq);
        } else {
            self.fail(name, eq, r.to_string());
        }
    }

    pub fn at_point(mut self, point: &str) -> Report {
        for c in &mut self.checks {
            c.point = Some(point.to_string());
        }
        self
    }

    pub fn merge(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// First failing check, if any; convenient for error conversion.
    pub fn first_failure(&self) -> Option<&Check> {
        self.failures().next()
    }
}
