//! Verdicts and grid certificates.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
    #[serde(rename = "FAIL")]
    Fail,
}

impl Verdict {
    /// PASS within `tol`; INCONCLUSIVE when the excess is covered by the
    /// truncation bound; FAIL otherwise.
    pub fn classify(residual: f64, tol: f64, tail: f64) -> Self {
        if residual <= tol {
            Verdict::Pass
        } else if residual <= tol + tail {
            Verdict::Inconclusive
        } else {
            Verdict::Fail
        }
    }

    /// The worse of two verdicts.
    pub fn and(self, other: Verdict) -> Verdict {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        }
    }
}

/// The outcome at one sample point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub xi: Vec<f64>,
    pub entry: String,
    pub residual: f64,
    pub tail_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub check: String,
    pub verdict: Verdict,
    pub tol: f64,
    pub max_residual: f64,
    pub max_tail_bound: f64,
    pub points: usize,
    pub witness: Option<Witness>,
}

impl Certificate {
    /// Merge per-point outcomes in the given order. The witness is the
    /// largest residual among the points carrying the overall verdict.
    pub fn assemble(check: impl Into<String>, tol: f64, results: Vec<Witness>) -> Self {
        let mut verdict = Verdict::Pass;
        let mut max_residual: f64 = 0.0;
        let mut max_tail: f64 = 0.0;
        for r in &results {
            verdict = verdict.and(Verdict::classify(r.residual, tol, r.tail_bound));
            max_residual = max_residual.max(r.residual);
            max_tail = max_tail.max(r.tail_bound);
        }
        let points = results.len();
        let mut witness: Option<Witness> = None;
        for r in results {
            if Verdict::classify(r.residual, tol, r.tail_bound) != verdict {
                continue;
            }
            if witness.as_ref().is_none_or(|w| r.residual > w.residual) {
                witness = Some(r);
            }
        }
        Self {
            check: check.into(),
            verdict,
            tol,
            max_residual,
            max_tail_bound: max_tail,
            points,
            witness,
        }
    }

    /// Combine certificates of sub-checks under a new name.
    pub fn merge(check: impl Into<String>, parts: &[Certificate]) -> Self {
        let verdict = parts.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict));
        let witness = parts
            .iter()
            .filter(|c| c.verdict == verdict)
            .filter_map(|c| c.witness.clone())
            .fold(None::<Witness>, |best, w| match best {
                Some(b) if b.residual >= w.residual => Some(b),
                _ => Some(w),
            });
        Self {
            check: check.into(),
            verdict,
            tol: parts.iter().map(|c| c.tol).fold(0.0, f64::max),
            max_residual: parts.iter().map(|c| c.max_residual).fold(0.0, f64::max),
            max_tail_bound: parts.iter().map(|c| c.max_tail_bound).fold(0.0, f64::max),
            points: parts.iter().map(|c| c.points).sum(),
            witness,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(res: f64, tail: f64) -> Witness {
        Witness {
            xi: vec![res],
            entry: String::new(),
            residual: res,
            tail_bound: tail,
            value: None,
        }
    }

    #[test]
    fn verdict_order() {
        assert_eq!(Verdict::classify(0.5, 1.0, 0.0), Verdict::Pass);
        assert_eq!(Verdict::classify(1.5, 1.0, 1.0), Verdict::Inconclusive);
        assert_eq!(Verdict::classify(2.5, 1.0, 1.0), Verdict::Fail);
        assert_eq!(Verdict::Pass.and(Verdict::Inconclusive), Verdict::Inconclusive);
        assert_eq!(Verdict::Fail.and(Verdict::Inconclusive), Verdict::Fail);
    }

    #[test]
    fn witness_follows_verdict() {
        let c = Certificate::assemble("t", 1.0, vec![w(0.2, 0.0), w(1.5, 10.0), w(3.0, 0.0), w(2.0, 0.0)]);
        assert_eq!(c.verdict, Verdict::Fail);
        assert_eq!(c.witness.unwrap().residual, 3.0);
        let c = Certificate::assemble("t", 1.0, vec![w(0.2, 0.0), w(5.0, 10.0)]);
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert_eq!(c.max_residual, 5.0);
        let c = Certificate::assemble("t", 1.0, Vec::new());
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(c.witness.is_none());
    }
}
