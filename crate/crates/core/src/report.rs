//! Per-step comparison of observed quantities against bounds.

use serde::{Deserialize, Serialize};

/// Rounding slack forgiven on every check, relative to the bound's scale.
pub const FLOAT_SLACK: f64 = 1e-10;

/// At most this many passing checks are stored; failures are always kept
/// up to the same cap, and counts are always exact.
pub const CHECK_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `observed ≤ bound`.
    Upper,
    /// `observed ≥ bound`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    /// Step, time or radius at which the check was made.
    pub at: f64,
    pub observed: f64,
    pub bound: f64,
    /// Nonnegative when the inequality holds.
    pub margin: f64,
    pub kind: CheckKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<String>,
}

impl Check {
    pub fn failed(&self) -> bool {
        self.margin.is_nan() || self.margin < -FLOAT_SLACK * self.bound.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    EvidenceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub experiment: String,
    pub checks: Vec<Check>,
    pub n_checks: usize,
    pub n_failed: usize,
    pub worst: Option<Check>,
    pub worst_margin: f64,
    pub verdict: Verdict,
    pub evidence_only: bool,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        BoundReport {
            experiment: experiment.into(),
            checks: Vec::new(),
            n_checks: 0,
            n_failed: 0,
            worst: None,
            worst_margin: f64::INFINITY,
            verdict: Verdict::Pass,
            evidence_only: false,
            notes: Vec::new(),
        }
    }

    /// Marks the report as empirical evidence: a passing verdict reads
    /// `EVIDENCE_ONLY`.
    pub fn evidence_only(mut self) -> Self {
        self.evidence_only = true;
        self.refresh_verdict();
        self
    }

    fn refresh_verdict(&mut self) {
        self.verdict = if self.n_failed > 0 {
            Verdict::Fail
        } else if self.evidence_only {
            Verdict::EvidenceOnly
        } else {
            Verdict::Pass
        };
    }

    pub fn push(&mut self, check: Check) {
        self.n_checks += 1;
        let failed = check.failed();
        if failed {
            self.n_failed += 1;
        }
        if self.worst.is_none() || check.margin < self.worst_margin || check.margin.is_nan() {
            self.worst_margin = check.margin;
            self.worst = Some(check.clone());
        }
        if self.checks.len() < CHECK_CAP || (failed && self.n_failed <= CHECK_CAP) {
            self.checks.push(check);
        }
        self.refresh_verdict();
    }

    /// Records `observed ≤ bound`.
    pub fn upper(&mut self, at: f64, observed: f64, bound: f64) {
        self.push(Check { at, observed, bound, margin: bound - observed, kind: CheckKind::Upper, label: None });
    }

    /// Records `observed ≥ bound`.
    pub fn lower(&mut self, at: f64, observed: f64, bound: f64) {
        self.push(Check { at, observed, bound, margin: observed - bound, kind: CheckKind::Lower, label: None });
    }

    pub fn upper_labeled(&mut self, label: &str, at: f64, observed: f64, bound: f64) {
        self.push(Check { at, observed, bound, margin: bound - observed, kind: CheckKind::Upper, label: Some(label.into()) });
    }

    pub fn lower_labeled(&mut self, label: &str, at: f64, observed: f64, bound: f64) {
        self.push(Check { at, observed, bound, margin: observed - bound, kind: CheckKind::Lower, label: Some(label.into()) });
    }

    /// Records a condition without a numeric bound (margin `±1`).
    pub fn require(&mut self, label: &str, at: f64, ok: bool) {
        let margin = if ok { 1.0 } else { -1.0 };
        self.push(Check { at, observed: margin, bound: 0.0, margin, kind: CheckKind::Lower, label: Some(label.into()) });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// Appends every check of `other`, keeping its notes.
    pub fn absorb(&mut self, other: BoundReport) {
        let stored = other.checks.len();
        let missing_total = other.n_checks - stored;
        let missing_failed = other.n_failed - other.checks.iter().filter(|c| c.failed()).count();
        for c in other.checks {
            self.push(c);
        }
        self.n_checks += missing_total;
        self.n_failed += missing_failed;
        if let Some(w) = other.worst {
            if w.margin < self.worst_margin {
                self.worst_margin = w.margin;
                self.worst = Some(w);
            }
        }
        self.notes.extend(other.notes);
        self.evidence_only |= other.evidence_only;
        self.refresh_verdict();
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// First failing stored check.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| c.failed())
    }
}
