//! Check records and their two renderings. A verdict is equality of the
//! canonical strings on both sides and nothing else.

use serde::Serialize;

pub const SCHEMA: &str = "ffrtf-report/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub id: String,
    pub inputs: String,
    pub left: String,
    pub right: String,
    pub pass: bool,
}

impl Check {
    pub fn new(id: impl Into<String>, inputs: impl Into<String>, left: impl ToString, right: impl ToString) -> Check {
        let (left, right) = (left.to_string(), right.to_string());
        Check { id: id.into(), inputs: inputs.into(), pass: left == right, left, right }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    pub fn new(name: &str, checks: Vec<Check>) -> SuiteResult {
        let passed = checks.iter().filter(|c| c.pass).count();
        SuiteResult { name: name.to_string(), passed, failed: checks.len() - passed, checks }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub config: String,
    pub suites: Vec<SuiteResult>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: String, suites: Vec<SuiteResult>) -> Report {
        let passed = suites.iter().map(|s| s.passed).sum();
        let failed = suites.iter().map(|s| s.failed).sum();
        let summary = Summary { checks: passed + failed, passed, failed, pass: failed == 0 };
        Report { schema: SCHEMA, config, suites, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One line per check; failing checks carry both sides.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            out += &format!("== {} ({} passed, {} failed)\n", s.name, s.passed, s.failed);
            for c in &s.checks {
                let tag = if c.pass { "PASS" } else { "FAIL" };
                out += &format!("{tag} {} [{}]\n", c.id, c.inputs);
                if !c.pass {
                    out += &format!("     left:  {}\n     right: {}\n", c.left, c.right);
                }
            }
        }
        let verdict = if self.summary.pass { "PASS" } else { "FAIL" };
        out += &format!(
            "summary: {verdict} ({} checks, {} passed, {} failed)\n",
            self.summary.checks, self.summary.passed, self.summary.failed
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = Report::new(String::new(), Vec::new());
        assert!(r.passed());
        assert!(r.to_json().contains("\"schema\": \"ffrtf-report/1\""));
    }

    #[test]
    fn verdict_is_string_equality() {
        assert!(Check::new("a", "", "1/2", "1/2").pass);
        assert!(!Check::new("a", "", "2/4", "1/2").pass);
    }
}
