//! Executes a generator × seed × test matrix and assembles the report.
//!
//! Every cell gets a freshly constructed stream, seeded and warmed up before
//! the test sees it, so cells share no state and may run in any order. The
//! document is assembled in matrix order (generators, then seeds, then tests)
//! whatever the number of worker threads.

mod manifest;
mod registry;

pub use manifest::{load_manifest, load_manifest_with, parse_manifest, Manifest};
pub use registry::{GeneratorRegistry, Registries, StreamFactory, TestBuilder, TestRegistry};

use std::collections::HashSet;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::battery::{TestCase, TestOutcome};
use crate::genkit::{GenkitError, SeedableStream};
use crate::report::{ConfidenceLevel, GeneratorReport, ReportDocument, ReportError, SeedReport};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{kind} `{name}` is already registered")]
    Duplicate { kind: &'static str, name: String },
    #[error("cannot parse {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl RunnerError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        RunnerError::Config(msg.into())
    }
}

/// A generator row of the matrix.
#[derive(Clone)]
pub struct GeneratorEntry {
    /// Name written to the report.
    pub name: String,
    pub factory: StreamFactory,
    /// Raw outputs discarded after seeding.
    pub warmup: u64,
}

impl std::fmt::Debug for GeneratorEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratorEntry").field("name", &self.name).field("warmup", &self.warmup).finish()
    }
}

impl GeneratorEntry {
    pub fn new(name: impl Into<String>, factory: StreamFactory, warmup: u64) -> Self {
        Self { name: name.into(), factory, warmup }
    }
}

/// What to run: every generator with every seed against every test.
#[derive(Clone, Default)]
pub struct RunMatrix {
    pub generators: Vec<GeneratorEntry>,
    pub seeds: Vec<u64>,
    pub levels: Vec<ConfidenceLevel>,
    pub tests: Vec<Arc<dyn TestCase>>,
}

impl std::fmt::Debug for RunMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tests: Vec<String> = self.tests.iter().map(|t| t.test_name()).collect();
        f.debug_struct("RunMatrix")
            .field("generators", &self.generators)
            .field("seeds", &self.seeds)
            .field("levels", &self.levels)
            .field("tests", &tests)
            .finish()
    }
}

impl RunMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn generator(mut self, name: impl Into<String>, factory: StreamFactory, warmup: u64) -> Self {
        self.generators.push(GeneratorEntry::new(name, factory, warmup));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seeds.push(seed);
        self
    }

    pub fn level(mut self, level: ConfidenceLevel) -> Self {
        self.levels.push(level);
        self
    }

    pub fn test(mut self, test: impl TestCase + 'static) -> Self {
        self.tests.push(Arc::new(test));
        self
    }

    pub fn boxed_test(mut self, test: Box<dyn TestCase>) -> Self {
        self.tests.push(Arc::from(test));
        self
    }

    /// Checks list contents and that every generator can be constructed.
    pub fn validate(&self) -> Result<(), RunnerError> {
        if self.generators.is_empty() {
            return Err(RunnerError::config("no generators"));
        }
        if self.seeds.is_empty() {
            return Err(RunnerError::config("no seeds"));
        }
        if self.levels.is_empty() {
            return Err(RunnerError::config("no confidence levels"));
        }
        if self.tests.is_empty() {
            return Err(RunnerError::config("no tests"));
        }
        let mut names = HashSet::new();
        for g in &self.generators {
            if !names.insert(g.name.as_str()) {
                return Err(RunnerError::config(format!("generator name `{}` appears twice", g.name)));
            }
        }
        let mut seeds = HashSet::new();
        for s in &self.seeds {
            if !seeds.insert(s) {
                return Err(RunnerError::config(format!("seed {s} appears twice")));
            }
        }
        for (i, l) in self.levels.iter().enumerate() {
            if self.levels[..i].contains(l) {
                return Err(RunnerError::config(format!("confidence level {l} appears twice")));
            }
        }
        let mut tests = HashSet::new();
        for t in &self.tests {
            let key = (t.test_name(), t.parameters());
            if !tests.insert(key) {
                return Err(RunnerError::config(format!(
                    "test `{}` appears twice with the same parameters",
                    t.test_name()
                )));
            }
        }
        for g in &self.generators {
            (g.factory)().map_err(|e| RunnerError::config(format!("generator `{}`: {e}", g.name)))?;
        }
        Ok(())
    }

    /// Number of (generator, seed, test) cells.
    pub fn cells(&self) -> usize {
        self.generators.len() * self.seeds.len() * self.tests.len()
    }

    fn cell(&self, index: usize) -> Cell {
        let per_gen = self.seeds.len() * self.tests.len();
        Cell {
            index,
            generator: index / per_gen,
            seed: (index % per_gen) / self.tests.len(),
            test: index % self.tests.len(),
        }
    }
}

/// Position of one cell in the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    /// Position in execution order.
    pub index: usize,
    pub generator: usize,
    pub seed: usize,
    pub test: usize,
}

/// Receives progress events. Called from worker threads, possibly interleaved.
pub trait Observer: Sync {
    fn cell_started(&self, _matrix: &RunMatrix, _cell: Cell) {}
    fn cell_finished(&self, _matrix: &RunMatrix, _cell: Cell, _outcome: &TestOutcome) {}
}

/// Prints one status line per finished cell.
pub struct PrintStatus<W: Write + Send> {
    out: Mutex<W>,
}

impl<W: Write + Send> PrintStatus<W> {
    pub fn new(out: W) -> Self {
        Self { out: Mutex::new(out) }
    }
}

impl<W: Write + Send> Observer for PrintStatus<W> {
    fn cell_finished(&self, matrix: &RunMatrix, cell: Cell, outcome: &TestOutcome) {
        let status = if let Some(reason) = &outcome.aborted {
            format!("aborted ({reason})")
        } else if outcome.any_failed() {
            "FAILED".to_string()
        } else {
            "passed".to_string()
        };
        let mut out = self.out.lock().unwrap_or_else(|e| e.into_inner());
        // Status output is best effort.
        let _ = writeln!(
            out,
            "[{}/{}] {} seed {} {}: {status}",
            cell.index + 1,
            matrix.cells(),
            matrix.generators[cell.generator].name,
            matrix.seeds[cell.seed],
            outcome.test_name
        );
    }
}

fn run_cell(matrix: &RunMatrix, cell: Cell) -> TestOutcome {
    let gen = &matrix.generators[cell.generator];
    let test = &matrix.tests[cell.test];
    let abort = |reason: String| TestOutcome::aborted(test.test_name(), test.parameters(), reason);
    let mut stream: Box<dyn SeedableStream> = match (gen.factory)() {
        Ok(s) => s,
        Err(e) => return abort(e.to_string()),
    };
    stream.seed(matrix.seeds[cell.seed]);
    if let Err(e) = stream.warmup(gen.warmup) {
        return abort(format!("warmup failed: {e}"));
    }
    test.execute(&mut stream, &matrix.levels)
}

/// Runs every cell on up to `jobs` threads and returns the report.
pub fn run_suite(
    matrix: &RunMatrix,
    jobs: usize,
    observer: Option<&dyn Observer>,
    date: &str,
) -> Result<ReportDocument, RunnerError> {
    matrix.validate()?;
    let total = matrix.cells();
    let slots: Vec<Mutex<Option<TestOutcome>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, total);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= total {
            break;
        }
        let cell = matrix.cell(i);
        if let Some(o) = observer {
            o.cell_started(matrix, cell);
        }
        let outcome = run_cell(matrix, cell);
        if let Some(o) = observer {
            o.cell_finished(matrix, cell, &outcome);
        }
        *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(outcome);
    };
    std::thread::scope(|scope| {
        for _ in 1..workers {
            scope.spawn(work);
        }
        work();
    });

    let mut outcomes = slots.into_iter().map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()));
    let mut doc = ReportDocument::new(date);
    for gen in &matrix.generators {
        let mut seeds = Vec::with_capacity(matrix.seeds.len());
        for &seed in &matrix.seeds {
            let tests = (0..matrix.tests.len()).map(|_| outcomes.next().flatten().expect("every cell ran")).collect();
            seeds.push(SeedReport { seed, tests });
        }
        doc.generators.push(GeneratorReport { name: gen.name.clone(), warmup: gen.warmup, seeds });
    }
    Ok(doc)
}

/// Default worker count: the machine's available parallelism.
pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Wraps a stream constructor as a factory.
pub fn factory<S, F>(make: F) -> StreamFactory
where
    S: SeedableStream + 'static,
    F: Fn() -> Result<S, GenkitError> + Send + Sync + 'static,
{
    Arc::new(move || Ok(Box::new(make()?) as Box<dyn SeedableStream>))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{ChisqrUniformity, Gap, KsUniformity, Parameter, RunOutput, TestError};
    use crate::genkit::{write_words, FileStream, LaggedFibonacci1279, Mt19937, Mt19937Seeding, RandomStream};
    use crate::report::write_xml;
    use crate::stats::StatisticResult;

    fn lvl(c: f64) -> ConfidenceLevel {
        ConfidenceLevel::new(c).unwrap()
    }

    fn reference_matrix() -> RunMatrix {
        RunMatrix::new()
            .generator("mt-19937", factory(|| Ok(Mt19937::with_seeding(0, Mt19937Seeding::Legacy1998))), 0)
            .generator("lagged-fibonacci", factory(|| Ok(LaggedFibonacci1279::new(1))), 0)
            .seed(331)
            .seed(667790)
            .level(lvl(0.05))
            .level(lvl(0.95))
            .test(ChisqrUniformity::new(100_000, 256).unwrap())
    }

    fn xml(doc: &ReportDocument) -> Vec<u8> {
        let mut out = Vec::new();
        write_xml(doc, &mut out, None).unwrap();
        out
    }

    #[test]
    fn reference_configuration_gives_four_tests() {
        let doc = run_suite(&reference_matrix(), 2, None, "2004-04-26").unwrap();
        assert_eq!(doc.outcomes().count(), 4);
        assert_eq!(doc.generators[0].seeds[1].seed, 667790);
        let first = &doc.generators[0].seeds[0].tests[0];
        assert!((first.results[0].result.statistic_value() - 242.33).abs() < 0.01);
    }

    #[test]
    fn validation() {
        let m = reference_matrix();
        let mut empty = m.clone();
        empty.tests.clear();
        assert!(matches!(run_suite(&empty, 1, None, "x"), Err(RunnerError::Config(_))));
        let mut no_seeds = m.clone();
        no_seeds.seeds.clear();
        assert!(no_seeds.validate().is_err());
        let dup = m.clone().generator("mt-19937", factory(|| Ok(Mt19937::new(1))), 0);
        assert!(dup.validate().unwrap_err().to_string().contains("mt-19937"));
        let dup_test = m.clone().test(ChisqrUniformity::new(100_000, 256).unwrap());
        assert!(dup_test.validate().is_err());
        let bad = m.generator("missing", factory(|| FileStream::open("/nonexistent/rng.bin")), 0);
        assert!(bad.validate().unwrap_err().to_string().contains("missing"));
    }

    #[test]
    fn jobs_do_not_change_output() {
        let m = RunMatrix::new()
            .generator("mt19937", factory(|| Ok(Mt19937::new(0))), 3)
            .generator("lf", factory(|| Ok(LaggedFibonacci1279::new(0))), 0)
            .seed(1)
            .seed(2)
            .level(lvl(0.05))
            .test(ChisqrUniformity::new(5000, 16).unwrap())
            .test(KsUniformity::new(500).unwrap())
            .test(Gap::new(0.0, 0.5, 10, 1000).unwrap());
        let a = xml(&run_suite(&m, 1, None, "2020-01-01").unwrap());
        let b = xml(&run_suite(&m, 8, None, "2020-01-01").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn abort_does_not_stop_the_suite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.bin");
        write_words(&path, &[1, 2, 3]).unwrap();
        let p = path.clone();
        let m = RunMatrix::new()
            .generator("file", factory(move || FileStream::open(&p)), 0)
            .generator("mt", factory(|| Ok(Mt19937::new(0))), 0)
            .seed(1)
            .level(lvl(0.05))
            .test(KsUniformity::new(100).unwrap());
        let doc = run_suite(&m, 2, None, "d").unwrap();
        assert!(doc.generators[0].seeds[0].tests[0].is_aborted());
        assert!(!doc.generators[1].seeds[0].tests[0].is_aborted());
    }

    #[test]
    fn warmup_and_seeding_are_applied() {
        struct FirstRaw;
        impl TestCase for FirstRaw {
            fn test_name(&self) -> String {
                "First-Raw".into()
            }
            fn parameters(&self) -> Vec<Parameter> {
                vec![]
            }
            fn run(&self, s: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
                let x = s.next_raw()?;
                Ok(RunOutput::single(StatisticResult::gaussian(x as f64, 0.5)))
            }
        }
        let m = RunMatrix::new()
            .generator("mt", factory(|| Ok(Mt19937::new(0))), 2)
            .seed(42)
            .level(lvl(0.05))
            .test(FirstRaw);
        let doc = run_suite(&m, 1, None, "d").unwrap();
        let mut g = Mt19937::new(42);
        g.next_raw().unwrap();
        g.next_raw().unwrap();
        let expected = g.next_raw().unwrap() as f64;
        assert_eq!(doc.generators[0].seeds[0].tests[0].results[0].result.statistic_value(), expected);
    }

    #[test]
    fn observer_sees_every_cell() {
        let mut buf = Vec::new();
        {
            let obs = PrintStatus::new(&mut buf);
            run_suite(&reference_matrix(), 3, Some(&obs), "d").unwrap();
        }
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("passed") || text.contains("FAILED"));
    }
}
