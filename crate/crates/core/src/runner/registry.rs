//! Name-to-constructor maps for generators and tests.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::RunnerError;
use crate::battery::{catalog, Params, TestCase, TestError};
use crate::genkit::{Ecuyer1988, GenkitError, LaggedFibonacci1279, Lcg, Mt19937, Mt19937Seeding, SeedableStream};

/// Builds a fresh, unseeded stream.
pub type StreamFactory = Arc<dyn Fn() -> Result<Box<dyn SeedableStream>, GenkitError> + Send + Sync>;

/// Builds a test from named parameters.
pub type TestBuilder = Arc<dyn Fn(Params) -> Result<Box<dyn TestCase>, TestError> + Send + Sync>;

/// Generator engines addressable by name.
#[derive(Clone, Default)]
pub struct GeneratorRegistry {
    entries: BTreeMap<String, StreamFactory>,
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The built-in engines.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        let builtins: [(&str, StreamFactory); 6] = [
            ("minstd", super::factory(|| Ok(Lcg::minstd(1)))),
            ("randu", super::factory(|| Ok(Lcg::randu(1)))),
            ("ecuyer1988", super::factory(|| Ok(Ecuyer1988::new(1)))),
            ("mt19937", super::factory(|| Ok(Mt19937::new(5489)))),
            ("mt19937-1998", super::factory(|| Ok(Mt19937::with_seeding(4357, Mt19937Seeding::Legacy1998)))),
            ("lagged_fibonacci1279", super::factory(|| Ok(LaggedFibonacci1279::new(1)))),
        ];
        for (name, f) in builtins {
            r.register_builtin(name, f).expect("built-in names are distinct");
        }
        r
    }

    pub fn register_builtin(&mut self, name: &str, factory: StreamFactory) -> Result<(), RunnerError> {
        if self.entries.contains_key(name) {
            return Err(RunnerError::Duplicate { kind: "generator", name: name.to_string() });
        }
        self.entries.insert(name.to_string(), factory);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<StreamFactory, RunnerError> {
        self.entries.get(name).cloned().ok_or_else(|| {
            RunnerError::config(format!("unknown generator `{name}`; available: {}", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

/// Test classes addressable by name. Lookups accept names without `_test`.
#[derive(Clone, Default)]
pub struct TestRegistry {
    entries: Vec<(String, TestBuilder)>,
}

impl TestRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Every class in the battery catalog.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        for entry in catalog() {
            let builder: TestBuilder = Arc::new(move |p| entry.build(p));
            r.register_builtin(entry.name, builder).expect("catalog names are distinct");
        }
        r
    }

    pub fn register_builtin(&mut self, name: &str, builder: TestBuilder) -> Result<(), RunnerError> {
        if self.find(name).is_some() {
            return Err(RunnerError::Duplicate { kind: "test", name: name.to_string() });
        }
        self.entries.push((name.to_string(), builder));
        Ok(())
    }

    fn find(&self, name: &str) -> Option<&TestBuilder> {
        self.entries.iter().find(|(n, _)| n == name || n.strip_suffix("_test") == Some(name)).map(|(_, b)| b)
    }

    pub fn build(&self, name: &str, params: Params) -> Result<Box<dyn TestCase>, RunnerError> {
        let builder = self.find(name).ok_or_else(|| {
            RunnerError::config(format!("unknown test `{name}`; available: {}", self.names().join(", ")))
        })?;
        builder(params).map_err(|e| RunnerError::config(format!("test `{name}`: {e}")))
    }

    /// Names in registration order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }
}

/// Both registries, as used to resolve a manifest.
#[derive(Clone)]
pub struct Registries {
    pub generators: GeneratorRegistry,
    pub tests: TestRegistry,
}

impl Default for Registries {
    fn default() -> Self {
        Self { generators: GeneratorRegistry::with_builtins(), tests: TestRegistry::with_builtins() }
    }
}
