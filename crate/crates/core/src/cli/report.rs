use std::fmt::Write as _;

use serde::Serialize;

use crate::sim::metrics::BoundCheck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub bound: f64,
    pub measured: Option<f64>,
    pub status: Status,
    pub note: String,
}

impl From<BoundCheck> for ReportEntry {
    fn from(c: BoundCheck) -> Self {
        Self {
            name: c.name,
            bound: c.bound,
            measured: c.measured.is_finite().then_some(c.measured),
            status: if c.passed { Status::Pass } else { Status::Fail },
            note: c.note,
        }
    }
}

/// Ordered list of checks; passes when no enabled check failed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
}

impl Report {
    /// Adds `check` under `name`, replacing the name the check carried.
    pub fn push(&mut self, name: &str, check: BoundCheck) {
        let mut entry = ReportEntry::from(check);
        entry.name = name.to_string();
        self.entries.push(entry);
    }

    pub fn skip(&mut self, name: &str, bound: f64, note: &str) {
        self.entries.push(ReportEntry {
            name: name.to_string(),
            bound,
            measured: None,
            status: Status::Skipped,
            note: note.to_string(),
        });
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let tag = match e.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skipped => "SKIP",
            };
            let measured = e
                .measured
                .map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
            let _ = writeln!(
                out,
                "{tag} {:<28} measured {measured:<14} bound {:.6e}  {}",
                e.name, e.bound, e.note
            );
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(passed: bool) -> BoundCheck {
        BoundCheck {
            name: "x".into(),
            bound: 1.0,
            measured: if passed { 0.5 } else { 2.0 },
            passed,
            note: String::new(),
        }
    }

    #[test]
    fn skipped_entries_do_not_fail() {
        let mut r = Report::default();
        r.push("a", check(true));
        r.skip("b", 0.5, "not applicable");
        assert!(r.passed());
        assert!(r.to_text().contains("SKIP b"));
        r.push("c", check(false));
        assert!(!r.passed());
        assert!(r.to_text().ends_with("overall: FAIL\n"));
        assert_eq!(r.get("c").unwrap().status, Status::Fail);
    }

    #[test]
    fn non_finite_measurement_is_absent() {
        let mut c = check(false);
        c.measured = f64::NAN;
        let e = ReportEntry::from(c);
        assert_eq!(e.measured, None);
    }
}
