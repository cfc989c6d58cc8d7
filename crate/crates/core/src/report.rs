//! Pass/fail bookkeeping shared by every verifier.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Witness lists are truncated to this many entries; the full count is kept
/// separately.
pub const MAX_WITNESSES: usize = 16;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// How many individual cases (pairs, quadruples, segments...) were examined.
    pub examined: u64,
    pub violation_count: u64,
    pub witnesses: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            passed: true,
            ..Default::default()
        }
    }

    pub fn examine(&mut self, n: u64) {
        self.examined += n;
    }

    pub fn fail(&mut self, witness: impl FnOnce() -> String) {
        self.passed = false;
        self.violation_count += 1;
        if self.witnesses.len() < MAX_WITNESSES {
            self.witnesses.push(witness());
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Folds a partial outcome (e.g. from one worker) into this one.
    pub fn absorb(&mut self, other: CheckOutcome) {
        self.passed &= other.passed;
        self.examined += other.examined;
        self.violation_count += other.violation_count;
        let room = MAX_WITNESSES.saturating_sub(self.witnesses.len());
        self.witnesses
            .extend(other.witnesses.into_iter().take(room));
        self.notes.extend(other.notes);
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subject: String,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>) -> Self {
        VerificationReport {
            subject: subject.into(),
            checks: Vec::new(),
        }
    }

    pub fn single(subject: impl Into<String>, check: CheckOutcome) -> Self {
        VerificationReport {
            subject: subject.into(),
            checks: vec![check],
        }
    }

    pub fn push(&mut self, check: CheckOutcome) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn violation_count(&self) -> u64 {
        self.checks.iter().map(|c| c.violation_count).sum()
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.subject)?;
        for c in &self.checks {
            writeln!(
                f,
                "  [{}] {} (examined {}, violations {})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.examined,
                c.violation_count
            )?;
            for w in &c.witnesses {
                writeln!(f, "      witness: {w}")?;
            }
            for n in &c.notes {
                writeln!(f, "      note: {n}")?;
            }
        }
        Ok(())
    }
}
