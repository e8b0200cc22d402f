//! The versioned JSON report and its summary table.

use serde::Serialize;

use super::config::RunConfig;
use crate::certificate::{Certificate, Verdict};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub points: usize,
    pub min: f64,
    pub max: f64,
    pub max_error_bar: f64,
    pub non_integer_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub pass: usize,
    pub inconclusive: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub checks: Tally,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

/// Keys serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<Certificate>,
    pub profiles: Vec<ProfileSummary>,
    pub notes: Vec<String>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            schema: SCHEMA,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            checks: Vec::new(),
            profiles: Vec::new(),
            notes: Vec::new(),
            summary: Summary {
                verdict: Verdict::Pass,
                checks: Tally {
                    pass: 0,
                    inconclusive: 0,
                    fail: 0,
                },
            },
            timing: None,
        }
    }

    pub fn push(&mut self, c: Certificate) {
        self.checks.push(c);
        self.refresh();
    }

    fn refresh(&mut self) {
        let mut t = Tally {
            pass: 0,
            inconclusive: 0,
            fail: 0,
        };
        let mut v = Verdict::Pass;
        for c in &self.checks {
            match c.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Inconclusive => t.inconclusive += 1,
                Verdict::Fail => t.fail += 1,
            }
            v = v.and(c.verdict);
        }
        self.summary = Summary { verdict: v, checks: t };
    }

    pub fn verdict(&self) -> Verdict {
        self.summary.verdict
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One CSV row per check.
    pub fn checks_csv(&self) -> String {
        let mut out = String::from("check,verdict,max_residual,max_tail_bound,tol,points\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{:?},{:?},{:?},{}\n",
                c.check,
                c.verdict.as_str(),
                c.max_residual,
                c.max_tail_bound,
                c.tol,
                c.points
            ));
        }
        out
    }

    /// Aligned text table for the terminal.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.check.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<width$}  {:<12}  {:>12}  {:>12}\n", "check", "verdict", "residual", "tail");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {:<12}  {:>12.3e}  {:>12.3e}\n",
                c.check,
                c.verdict.as_str(),
                c.max_residual,
                c.max_tail_bound
            ));
        }
        out
    }
}

/// Process exit code for a verdict.
pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cert(name: &str, v: Verdict) -> Certificate {
        Certificate {
            check: name.into(),
            verdict: v,
            tol: 1e-9,
            max_residual: 0.0,
            max_tail_bound: 0.0,
            points: 1,
            witness: None,
        }
    }

    #[test]
    fn key_order_and_tally() {
        let mut r = Report::new("verify", &RunConfig::default());
        r.push(cert("a", Verdict::Pass));
        r.push(cert("b", Verdict::Inconclusive));
        assert_eq!(r.verdict(), Verdict::Inconclusive);
        assert_eq!(exit_code(r.verdict()), 4);
        r.push(cert("c", Verdict::Fail));
        assert_eq!(exit_code(r.verdict()), 1);
        let json = r.to_json();
        let keys = ["\"schema\"", "\"version\"", "\"command\"", "\"config\"", "\"checks\"", "\"summary\""];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|p| p[0] < p[1]));
        assert!(!json.contains("\"timing\": {"));
        assert!(r.checks_csv().lines().nth(3).unwrap().starts_with("c,FAIL,"));
    }
}
