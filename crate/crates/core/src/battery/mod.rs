//! The statistical test catalog.
//!
//! Every test implements [`TestCase`]: it exposes a stable name and its
//! parameters, consumes a [`RandomStream`] in [`TestCase::run`] and turns the
//! resulting statistics into per-confidence-level verdicts in
//! [`TestCase::analyze`].
//!
//! Chi-square based tests pool sparse cells: consecutive cells are merged
//! until each has an expected count of at least [`MIN_EXPECTED`].

mod catalog;
mod diehard;
mod knuth;
mod other;
mod uniformity;

pub use catalog::{build_test, catalog, default_catalog, CatalogEntry, Params};
pub use diehard::{
    binary_rank_probabilities, craps_throw_probabilities, craps_win_probability, gf2_rank, squeeze_steps, BinaryRank,
    BirthdaySpacings, Craps, MinimumDistance, Monkey20Bit, ParkingLot, Squeeze, SQUEEZE_TABLE,
};
pub use knuth::{
    collision_distribution, coupon_collector_probabilities, gap_probabilities, permutation_rank, poker_probabilities,
    runs_probabilities, Collision, CouponCollector, Gap, MaxOfT, Permutation, Poker, Runs, Serial, SerialCorrelation,
};
pub use other::{
    gcd_probabilities, gcd_with_steps, maurer_expectation, repetition_pmf, Gcd, MaurersUniversal, RandomWalk,
    Repetition,
};
pub use uniformity::{ChisqrUniformity, KsUniformity};

use thiserror::Error;

use crate::genkit::{RandomStream, StreamError};
use crate::report::{judge, ConfidenceLevel, Verdict};
use crate::stats::{chi_square_test, ChiSquareInput, StatisticResult, StatsError};

/// Smallest expected count a chi-square cell may have after pooling.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestError {
    #[error("invalid test configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error("test aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl TestError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        TestError::Config(msg.into())
    }
}

/// A named test parameter as printed in reports.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Parameter {
    pub name: String,
    pub value: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: impl ToString) -> Self {
        Self { name: name.into(), value: value.to_string() }
    }
}

/// Statistics produced by one run, plus informational values without verdicts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    pub results: Vec<StatisticResult>,
    pub diagnostics: Vec<Parameter>,
}

impl RunOutput {
    pub fn single(result: StatisticResult) -> Self {
        Self { results: vec![result], diagnostics: Vec::new() }
    }
}

impl From<Vec<StatisticResult>> for RunOutput {
    fn from(results: Vec<StatisticResult>) -> Self {
        Self { results, diagnostics: Vec::new() }
    }
}

/// One statistic together with its verdict at every confidence level.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgedResult {
    pub result: StatisticResult,
    pub verdicts: Vec<(ConfidenceLevel, Verdict)>,
}

/// Everything reported about one test execution.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub test_name: String,
    pub parameters: Vec<Parameter>,
    pub results: Vec<JudgedResult>,
    pub diagnostics: Vec<Parameter>,
    /// Set when the test could not complete; aborted outcomes carry no verdicts.
    pub aborted: Option<String>,
}

impl TestOutcome {
    pub fn aborted(test_name: String, parameters: Vec<Parameter>, reason: String) -> Self {
        Self { test_name, parameters, results: Vec::new(), diagnostics: Vec::new(), aborted: Some(reason) }
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted.is_some()
    }

    pub fn verdicts(&self) -> impl Iterator<Item = &(ConfidenceLevel, Verdict)> {
        self.results.iter().flat_map(|r| r.verdicts.iter())
    }

    pub fn any_failed(&self) -> bool {
        self.verdicts().any(|(_, v)| *v == Verdict::Failed)
    }

    /// True if any result failed at `level`.
    pub fn failed_at(&self, level: ConfidenceLevel) -> bool {
        self.verdicts().any(|(l, v)| *l == level && *v == Verdict::Failed)
    }
}

/// The interface every test implements.
///
/// `run` must only touch the stream it is given; a `TestCase` value can be
/// shared between threads and run on many streams concurrently.
pub trait TestCase: Send + Sync {
    /// Name written to the report's `TEST` element.
    fn test_name(&self) -> String;

    fn parameters(&self) -> Vec<Parameter>;

    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError>;

    /// Judges a run against confidence levels. Failed runs become aborted outcomes.
    fn analyze(&self, run: Result<RunOutput, TestError>, levels: &[ConfidenceLevel]) -> TestOutcome {
        match run {
            Ok(output) => {
                let results = output
                    .results
                    .into_iter()
                    .map(|result| {
                        let verdicts = levels.iter().map(|&l| (l, judge(&result, l))).collect();
                        JudgedResult { result, verdicts }
                    })
                    .collect();
                TestOutcome {
                    test_name: self.test_name(),
                    parameters: self.parameters(),
                    results,
                    diagnostics: output.diagnostics,
                    aborted: None,
                }
            }
            Err(e) => TestOutcome::aborted(self.test_name(), self.parameters(), e.to_string()),
        }
    }

    fn execute(&self, stream: &mut dyn RandomStream, levels: &[ConfidenceLevel]) -> TestOutcome {
        self.analyze(self.run(stream), levels)
    }

    /// The null cell layout of a chi-square based test.
    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        None
    }
}

impl std::fmt::Debug for dyn TestCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestCase").field("name", &self.test_name()).finish()
    }
}

/// Chi-square of `observed` against `probabilities` after pooling sparse cells.
pub(crate) fn pooled_chi_square(observed: Vec<u64>, probabilities: Vec<f64>) -> Result<StatisticResult, TestError> {
    let input = ChiSquareInput::new(observed, probabilities)?.pooled(MIN_EXPECTED)?;
    Ok(chi_square_test(&input)?)
}

/// Cell probabilities as actually used after pooling, for closure checks.
pub(crate) fn pooled_probabilities(probabilities: &[f64], sample_size: u64) -> Result<Vec<f64>, TestError> {
    // Spread the sample over the cells only to satisfy the input contract;
    // pooling looks at probabilities and the total.
    let mut observed = vec![0u64; probabilities.len()];
    observed[0] = sample_size;
    let input = ChiSquareInput::new(observed, probabilities.to_vec())?.pooled(MIN_EXPECTED)?;
    Ok(input.probabilities().to_vec())
}

/// Implemented by chi-square based tests to expose their null cell layout.
pub trait CellProbabilities {
    /// Cell probabilities before pooling, in cell order.
    fn cell_probabilities(&self) -> Vec<f64>;
    /// Number of observations the chi-square is computed over.
    fn sample_size(&self) -> u64;

    fn pooled_cell_probabilities(&self) -> Result<Vec<f64>, TestError> {
        pooled_probabilities(&self.cell_probabilities(), self.sample_size())
    }
}
