//! Statistical tests for random number generators.
//!
//! Generators are modelled as [`genkit::RandomStream`]s. The [`battery`]
//! holds the statistical tests, [`meta`] repeats them and analyses the
//! p-values, [`report`] renders verdicts as XML and HTML, and [`runner`]
//! executes a generator × seed × test matrix.

pub mod battery;
pub mod genkit;
pub mod meta;
pub mod report;
pub mod runner;
pub mod stats;
