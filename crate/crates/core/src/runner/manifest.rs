//! JSON run manifests.
//!
//! ```json
//! {
//!   "generators": ["mt19937", {"name": "lf", "kind": "builtin", "engine": "lagged_fibonacci1279", "warmup": 1000}],
//!   "seeds": [331, 667790],
//!   "levels": [0.05, 0.95],
//!   "tests": ["gap", {"name": "chisqr_uniformity", "params": {"n": 100000, "k": 256}}],
//!   "out": "results.xml",
//!   "html": "results.html",
//!   "jobs": 4,
//!   "date": "2004-04-26"
//! }
//! ```
//!
//! Relative paths inside the manifest resolve against its directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{factory, GeneratorEntry, Registries, RunMatrix, RunnerError, StreamFactory};
use crate::battery::{Params, TestCase};
use crate::genkit::{
    BitExtract, BitMaskWindows, ExternalStream, FileStream, GenkitError, ParallelImitator, SeedableStream, Shuffled,
};
use crate::meta::{CountFailsTest, IterateTest, PValueSelector};
use crate::report::ConfidenceLevel;

/// A resolved manifest: the matrix plus output options.
#[derive(Debug)]
pub struct Manifest {
    pub matrix: RunMatrix,
    pub out: Option<PathBuf>,
    pub html: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub date: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    generators: Vec<GeneratorItem>,
    #[serde(default)]
    seeds: Vec<u64>,
    #[serde(default)]
    levels: Vec<f64>,
    #[serde(default)]
    tests: Vec<TestItem>,
    out: Option<PathBuf>,
    html: Option<PathBuf>,
    jobs: Option<usize>,
    date: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeneratorItem {
    Engine(String),
    Entry {
        name: Option<String>,
        #[serde(default)]
        warmup: u64,
        #[serde(flatten)]
        spec: StreamSpec,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NestedSpec {
    Engine(String),
    Spec(StreamSpec),
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StreamSpec {
    Builtin { engine: String },
    File { path: PathBuf },
    External { command: Vec<String> },
    Shuffle { inner: Box<NestedSpec>, table_size: usize },
    BitExtract { inner: Box<NestedSpec>, hi: u32, lo: u32 },
    BitMaskWindows { inner: Box<NestedSpec>, mask: u64, step: u32 },
    Parallel { streams: Vec<NestedSpec> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TestItem {
    Name(String),
    Entry(TestEntry),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TestEntry {
    name: String,
    #[serde(default)]
    params: Map<String, Value>,
    inner: Option<Box<TestItem>>,
    repetitions: Option<u64>,
    p_value: Option<String>,
    levels: Option<Vec<f64>>,
}

const ITERATE: &str = "iterate_test";
const COUNT_FAILS: &str = "count_fails_test";

fn is(name: &str, target: &str) -> bool {
    name == target || target.strip_suffix("_test") == Some(name)
}

struct Resolver<'a> {
    registries: &'a Registries,
    base: &'a Path,
    levels: &'a [ConfidenceLevel],
}

impl Resolver<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_relative() {
            self.base.join(p)
        } else {
            p.to_path_buf()
        }
    }

    fn nested(&self, spec: &NestedSpec) -> Result<(String, StreamFactory), RunnerError> {
        match spec {
            NestedSpec::Engine(name) => Ok((name.clone(), self.registries.generators.get(name)?)),
            NestedSpec::Spec(s) => self.stream(s),
        }
    }

    /// Returns a default display name and the factory.
    fn stream(&self, spec: &StreamSpec) -> Result<(String, StreamFactory), RunnerError> {
        Ok(match spec {
            StreamSpec::Builtin { engine } => (engine.clone(), self.registries.generators.get(engine)?),
            StreamSpec::File { path } => {
                let path = self.path(path);
                let name = format!("file:{}", path.display());
                (name, factory(move || FileStream::open(&path)))
            }
            StreamSpec::External { command } => {
                let mut command = command.clone();
                if let Some(first) = command.first_mut() {
                    if first.contains('/') {
                        *first = self.path(Path::new(first)).display().to_string();
                    }
                }
                let name = format!("external:{}", command.join(" "));
                (name, factory(move || ExternalStream::spawn(command.clone())))
            }
            StreamSpec::Shuffle { inner, table_size } => {
                let (n, f) = self.nested(inner)?;
                let size = *table_size;
                (format!("shuffle({n})"), factory(move || Shuffled::new(f()?, size)))
            }
            StreamSpec::BitExtract { inner, hi, lo } => {
                let (n, f) = self.nested(inner)?;
                let (hi, lo) = (*hi, *lo);
                (format!("bits[{hi}:{lo}]({n})"), factory(move || BitExtract::new(f()?, hi, lo)))
            }
            StreamSpec::BitMaskWindows { inner, mask, step } => {
                let (n, f) = self.nested(inner)?;
                let (mask, step) = (*mask, *step);
                (format!("windows({n})"), factory(move || BitMaskWindows::new(f()?, mask, step)))
            }
            StreamSpec::Parallel { streams } => {
                let parts = streams.iter().map(|s| self.nested(s)).collect::<Result<Vec<_>, _>>()?;
                let names: Vec<&str> = parts.iter().map(|(n, _)| n.as_str()).collect();
                let name = format!("parallel({})", names.join(","));
                let factories: Vec<StreamFactory> = parts.iter().map(|(_, f)| f.clone()).collect();
                let f = factory(move || {
                    let streams =
                        factories.iter().map(|f| f()).collect::<Result<Vec<Box<dyn SeedableStream>>, GenkitError>>()?;
                    ParallelImitator::new(streams)
                });
                (name, f)
            }
        })
    }

    fn generator(&self, item: &GeneratorItem) -> Result<GeneratorEntry, RunnerError> {
        match item {
            GeneratorItem::Engine(name) => Ok(GeneratorEntry::new(name, self.registries.generators.get(name)?, 0)),
            GeneratorItem::Entry { name, warmup, spec } => {
                let (default_name, f) = self.stream(spec)?;
                Ok(GeneratorEntry::new(name.clone().unwrap_or(default_name), f, *warmup))
            }
        }
    }

    fn test(&self, item: &TestItem) -> Result<Box<dyn TestCase>, RunnerError> {
        let entry = match item {
            TestItem::Name(name) => {
                if is(name, ITERATE) || is(name, COUNT_FAILS) {
                    return Err(RunnerError::config(format!("`{name}` needs an `inner` test and `repetitions`")));
                }
                return self.registries.tests.build(name, Params::default());
            }
            TestItem::Entry(e) => e,
        };
        let meta = is(&entry.name, ITERATE) || is(&entry.name, COUNT_FAILS);
        if !meta {
            if entry.inner.is_some() || entry.repetitions.is_some() || entry.p_value.is_some() || entry.levels.is_some()
            {
                return Err(RunnerError::config(format!(
                    "test `{}`: inner, repetitions, p_value and levels apply only to {ITERATE} and {COUNT_FAILS}",
                    entry.name
                )));
            }
            return self.registries.tests.build(&entry.name, Params::new(entry.params.clone()));
        }
        if !entry.params.is_empty() {
            return Err(RunnerError::config(format!("`{}` takes no params; configure the inner test", entry.name)));
        }
        let inner = entry
            .inner
            .as_deref()
            .ok_or_else(|| RunnerError::config(format!("`{}` needs an `inner` test", entry.name)))?;
        let inner = self.test(inner)?;
        let repetitions =
            entry.repetitions.ok_or_else(|| RunnerError::config(format!("`{}` needs `repetitions`", entry.name)))?;
        let built: Box<dyn TestCase> = if is(&entry.name, ITERATE) {
            if entry.levels.is_some() {
                return Err(RunnerError::config(format!("`{ITERATE}` takes no levels")));
            }
            let selector = entry.p_value.clone().map(PValueSelector::Named).unwrap_or_default();
            Box::new(IterateTest::new(inner, repetitions, selector).map_err(|e| RunnerError::config(e.to_string()))?)
        } else {
            if entry.p_value.is_some() {
                return Err(RunnerError::config(format!("`{COUNT_FAILS}` takes no p_value")));
            }
            let levels = match &entry.levels {
                Some(ls) => parse_levels(ls)?,
                None => self.levels.to_vec(),
            };
            Box::new(CountFailsTest::new(inner, repetitions, levels).map_err(|e| RunnerError::config(e.to_string()))?)
        };
        Ok(built)
    }
}

fn parse_levels(levels: &[f64]) -> Result<Vec<ConfidenceLevel>, RunnerError> {
    levels.iter().map(|&l| ConfidenceLevel::new(l).map_err(|e| RunnerError::config(e.to_string()))).collect()
}

/// Parses and resolves manifest text. `base` anchors relative paths.
pub fn parse_manifest(text: &str, base: &Path, registries: &Registries) -> Result<Manifest, RunnerError> {
    let raw: RawManifest = serde_json::from_str(text)
        .map_err(|e| RunnerError::Parse { path: base.display().to_string(), reason: e.to_string() })?;
    let levels = parse_levels(&raw.levels)?;
    let resolver = Resolver { registries, base, levels: &levels };
    let mut matrix = RunMatrix::new();
    for g in &raw.generators {
        matrix.generators.push(resolver.generator(g)?);
    }
    matrix.seeds = raw.seeds;
    for t in &raw.tests {
        matrix.tests.push(Arc::from(resolver.test(t)?));
    }
    matrix.levels = levels.clone();
    matrix.validate()?;
    if raw.jobs == Some(0) {
        return Err(RunnerError::config("jobs must be at least 1"));
    }
    Ok(Manifest {
        matrix,
        out: raw.out.map(|p| resolver.path(&p)),
        html: raw.html.map(|p| resolver.path(&p)),
        jobs: raw.jobs,
        date: raw.date,
    })
}

/// Reads a manifest resolving names against `registries`.
pub fn load_manifest_with(path: impl AsRef<Path>, registries: &Registries) -> Result<Manifest, RunnerError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| RunnerError::Io { path: path.display().to_string(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base, registries).map_err(|e| match e {
        RunnerError::Parse { reason, .. } => RunnerError::Parse { path: path.display().to_string(), reason },
        other => other,
    })
}

/// Reads a manifest against the built-in registries.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, RunnerError> {
    load_manifest_with(path, &Registries::default())
}
