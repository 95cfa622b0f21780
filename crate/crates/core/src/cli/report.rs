//! Diagnostics report: metadata, one line per check, and a verdict.

use std::fmt::Write as _;

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Limit {
    /// `value <= bound`
    AtMost(f64),
    /// `value < bound`
    Below(f64),
    /// `value > bound`
    Above(f64),
    /// `value == bound`
    Exactly(f64),
    /// A yes/no property; `value` is 1 or 0.
    Holds,
}

impl Limit {
    fn admits(self, x: f64) -> bool {
        match self {
            Limit::AtMost(b) => x <= b,
            Limit::Below(b) => x < b,
            Limit::Above(b) => x > b,
            Limit::Exactly(b) => x == b,
            Limit::Holds => x == 1.0,
        }
    }

    fn render(self) -> String {
        match self {
            Limit::AtMost(b) => format!("limit<={b:e}"),
            Limit::Below(b) => format!("limit<{b:e}"),
            Limit::Above(b) => format!("limit>{b:e}"),
            Limit::Exactly(b) => format!("limit=={b}"),
            Limit::Holds => "limit=holds".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    Fail,
    /// Not applicable to this run; does not affect the verdict.
    Skip(String),
    /// The check could not be evaluated.
    Error(Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub limit: Limit,
    pub outcome: Outcome,
}

impl Check {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, Outcome::Pass | Outcome::Skip(_))
    }

    fn render(&self) -> String {
        let value = self.value.map_or("-".to_string(), |v| format!("{v:e}"));
        match &self.outcome {
            Outcome::Pass => format!("pass value={value} {}", self.limit.render()),
            Outcome::Fail => format!("FAIL value={value} {}", self.limit.render()),
            Outcome::Skip(why) => format!("skip ({why})"),
            Outcome::Error(e) => format!("FAIL error={} ({e})", e.code()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub meta: Vec<(String, String)>,
    pub checks: Vec<Check>,
    /// A failure that stopped the pipeline.
    pub error: Option<Error>,
}

impl DiagnosticsReport {
    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    fn push(&mut self, name: &str, value: Option<f64>, limit: Limit, outcome: Outcome) {
        debug_assert!(
            self.checks.iter().all(|c| c.name != name),
            "check {name} listed twice"
        );
        self.checks.push(Check {
            name: name.to_string(),
            value,
            limit,
            outcome,
        });
    }

    pub fn value(&mut self, name: &str, value: f64, limit: Limit) {
        let outcome = if limit.admits(value) {
            Outcome::Pass
        } else {
            Outcome::Fail
        };
        self.push(name, Some(value), limit, outcome);
    }

    pub fn holds(&mut self, name: &str, ok: bool) {
        self.value(name, if ok { 1.0 } else { 0.0 }, Limit::Holds);
    }

    /// Records `Ok(value)` against `limit`, or the error as a failure.
    pub fn result(&mut self, name: &str, r: crate::Result<f64>, limit: Limit) {
        match r {
            Ok(v) => self.value(name, v, limit),
            Err(e) => self.push(name, None, limit, Outcome::Error(e)),
        }
    }

    pub fn failed(&mut self, name: &str, e: Error) {
        self.push(name, None, Limit::Holds, Outcome::Error(e));
    }

    pub fn skip(&mut self, name: &str, why: &str) {
        self.push(name, None, Limit::Holds, Outcome::Skip(why.into()));
    }

    pub fn all_passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(Check::passed)
    }

    /// 0 on all-pass, 2 on a failed check, 1 when the pipeline stopped.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.all_passed() {
            0
        } else {
            2
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            writeln!(out, "{k}: {v}").unwrap();
        }
        for c in &self.checks {
            writeln!(out, "check.{}: {}", c.name, c.render()).unwrap();
        }
        if let Some(e) = &self.error {
            writeln!(out, "error.code: {}", e.code()).unwrap();
            writeln!(out, "error.message: {e}").unwrap();
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        writeln!(out, "checks.total: {}", self.checks.len()).unwrap();
        writeln!(out, "checks.failed: {failed}").unwrap();
        let verdict = match self.exit_code() {
            0 => "pass",
            2 => "fail",
            _ => "error",
        };
        writeln!(out, "verdict: {verdict}").unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_the_conjunction() {
        let mut r = DiagnosticsReport::default();
        r.value("a", 1e-9, Limit::AtMost(1e-6));
        r.skip("b", "not applicable");
        assert_eq!(r.exit_code(), 0);
        r.value("c", 0.0, Limit::Above(0.0));
        assert_eq!(r.exit_code(), 2);
        r.error = Some(Error::SolverFailure("x".into()));
        assert_eq!(r.exit_code(), 1);
        let text = r.render();
        assert!(text.contains("check.a: pass value=1e-9 limit<=1e-6"));
        assert!(text.contains("check.c: FAIL"));
        assert!(text.contains("error.code: E_SOLVER"));
        assert!(text.ends_with("verdict: error\n"));
    }

    #[test]
    fn errors_count_as_failures() {
        let mut r = DiagnosticsReport::default();
        r.result(
            "x",
            Err(Error::Reconstruction("overlap".into())),
            Limit::AtMost(1.0),
        );
        assert_eq!(r.exit_code(), 2);
        assert!(r.render().contains("error=E_RECONSTRUCTION"));
    }
}
