//! Verdicts and the result document.
//!
//! A p-value is judged against a confidence level `c` with a two-tail rule:
//! levels below 0.5 guard the lower tail (`p < c` fails), levels of 0.5 and
//! above guard the upper tail (`p > c` fails). Running at both 0.05 and 0.95
//! therefore flags results that are too bad as well as too good.

mod html;
mod xml;

pub use html::render_html;
pub use xml::{format_number, parse_xml, write_xml, STYLESHEET_HREF};

use std::fmt;

use thiserror::Error;

use crate::battery::TestOutcome;
use crate::stats::{StatisticKind, StatisticResult, P_EXACT_LE, P_EXACT_LT};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("invalid element <{element}>: {reason}")]
    Schema { element: String, reason: String },
}

impl ReportError {
    pub(crate) fn schema(element: &str, reason: impl Into<String>) -> Self {
        ReportError::Schema { element: element.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("confidence level {0} is not in (0, 1)")]
pub struct InvalidLevel(pub f64);

/// A threshold in the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(level: f64) -> Result<Self, InvalidLevel> {
        if level > 0.0 && level < 1.0 {
            Ok(Self(level))
        } else {
            Err(InvalidLevel(level))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True for levels guarding the lower tail.
    pub fn is_lower(self) -> bool {
        self.0 < 0.5
    }
}

impl fmt::Display for ConfidenceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_number(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Passed,
    Failed,
}

impl Verdict {
    pub fn element_name(self) -> &'static str {
        match self {
            Verdict::Passed => "PASSED",
            Verdict::Failed => "FAILED",
        }
    }
}

/// Judges a single p-value.
pub fn verdict(p: f64, level: ConfidenceLevel) -> Verdict {
    let c = level.value();
    let failed = if c < 0.5 { p < c } else { p > c };
    if failed {
        Verdict::Failed
    } else {
        Verdict::Passed
    }
}

/// Judges a result: it fails if any of its p-values fails.
///
/// Exact discrete results carry `P(X <= x)` and `P(X < x)`; lower-tail levels
/// judge the former and upper-tail levels the latter, so that both tails are
/// tested at their nominal size.
pub fn judge(result: &StatisticResult, level: ConfidenceLevel) -> Verdict {
    let relevant: Vec<f64> = if result.kind() == StatisticKind::Exact {
        let name = if level.is_lower() { P_EXACT_LE } else { P_EXACT_LT };
        result.p_named(name).into_iter().collect()
    } else {
        result.p_values.iter().map(|p| p.value).collect()
    };
    if relevant.iter().any(|&p| verdict(p, level) == Verdict::Failed) {
        Verdict::Failed
    } else {
        Verdict::Passed
    }
}

/// All outcomes for one seed of one generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedReport {
    pub seed: u64,
    pub tests: Vec<TestOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    pub name: String,
    pub warmup: u64,
    pub seeds: Vec<SeedReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    /// ISO `YYYY-MM-DD`.
    pub date: String,
    pub generators: Vec<GeneratorReport>,
}

/// Verdict totals over a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Summary {
    pub tests: usize,
    pub passed: usize,
    pub failed: usize,
    pub aborted: usize,
}

impl ReportDocument {
    pub fn new(date: impl Into<String>) -> Self {
        Self { date: date.into(), generators: Vec::new() }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &TestOutcome> {
        self.generators.iter().flat_map(|g| g.seeds.iter()).flat_map(|s| s.tests.iter())
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for outcome in self.outcomes() {
            s.tests += 1;
            if outcome.is_aborted() {
                s.aborted += 1;
            }
            for (_, v) in outcome.verdicts() {
                match v {
                    Verdict::Passed => s.passed += 1,
                    Verdict::Failed => s.failed += 1,
                }
            }
        }
        s
    }

    pub fn any_failed(&self) -> bool {
        self.outcomes().any(TestOutcome::any_failed)
    }

    /// Checks that every verdict refers to one of `levels`.
    pub fn check_levels(&self, levels: &[ConfidenceLevel]) -> Result<(), InvalidLevel> {
        for (level, _) in self.outcomes().flat_map(TestOutcome::verdicts) {
            if !levels.contains(level) {
                return Err(InvalidLevel(level.value()));
            }
        }
        Ok(())
    }
}
