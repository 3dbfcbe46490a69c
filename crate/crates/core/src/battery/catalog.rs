//! Named constructors for every test, with default parameters.

use serde_json::{Map, Value};

use super::*;

/// Test parameters given by name, as read from a manifest.
///
/// Each accessor consumes its key; [`Params::finish`] rejects leftovers so
/// that misspelled parameters are reported instead of silently ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    map: Map<String, Value>,
}

impl Params {
    pub fn new(map: Map<String, Value>) -> Self {
        Self { map }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn insert(&mut self, key: &str, value: impl Into<Value>) {
        self.map.insert(key.to_string(), value.into());
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, TestError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| TestError::config(format!("parameter `{key}` must be a non-negative integer, got {v}"))),
        }
    }

    pub fn u32(&mut self, key: &str, default: u32) -> Result<u32, TestError> {
        let v = self.u64(key, default as u64)?;
        u32::try_from(v).map_err(|_| TestError::config(format!("parameter `{key}` = {v} is too large")))
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, TestError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => {
                v.as_f64().ok_or_else(|| TestError::config(format!("parameter `{key}` must be a number, got {v}")))
            }
        }
    }

    /// Fails if any parameter was not consumed.
    pub fn finish(self) -> Result<(), TestError> {
        if self.map.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
        Err(TestError::config(format!("unknown parameter(s): {}", keys.join(", "))))
    }
}

type Builder = fn(&mut Params) -> Result<Box<dyn TestCase>, TestError>;

/// A test class: its registry name, what it does, and how to build it.
#[derive(Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    build: Builder,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("name", &self.name).finish()
    }
}

impl CatalogEntry {
    /// Builds the test, rejecting unknown parameters.
    pub fn build(&self, mut params: Params) -> Result<Box<dyn TestCase>, TestError> {
        let test = (self.build)(&mut params)?;
        params.finish()?;
        Ok(test)
    }
}

fn boxed<T: TestCase + 'static>(t: Result<T, TestError>) -> Result<Box<dyn TestCase>, TestError> {
    Ok(Box::new(t?))
}

macro_rules! entry {
    ($name:literal, $desc:literal, |$p:ident| $body:expr) => {
        CatalogEntry { name: $name, description: $desc, build: |$p: &mut Params| boxed($body) }
    };
}

/// Every built-in test class with desk-scale defaults.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        entry!("chisqr_uniformity_test", "chi-square equidistribution of uniform01 draws", |p| {
            ChisqrUniformity::new(p.u64("n", 100_000)?, p.u64("k", 256)?)
        }),
        entry!("ks_uniformity_test", "Kolmogorov-Smirnov equidistribution of uniform01 draws", |p| {
            KsUniformity::new(p.u64("n", 10_000)?)
        }),
        entry!("gap_test", "lengths of gaps between hits of an interval", |p| {
            Gap::new(p.f64("alpha", 0.0)?, p.f64("beta", 0.5)?, p.u64("t", 10)?, p.u64("n_gaps", 20_000)?)
        }),
        entry!("serial_test", "non-overlapping digit pairs", |p| {
            Serial::new(p.u64("d", 16)?, p.u64("n_pairs", 100_000)?)
        }),
        entry!("poker_test", "distinct digits in hands of five", |p| {
            Poker::new(p.u64("d", 10)?, p.u64("n_hands", 20_000)?)
        }),
        entry!("coupon_collector_test", "draws needed to collect all digits", |p| {
            CouponCollector::new(p.u64("d", 5)?, p.u64("t", 20)?, p.u64("n_segments", 10_000)?)
        }),
        entry!("permutation_test", "order patterns of consecutive draws", |p| {
            Permutation::new(p.u64("t", 5)?, p.u64("n_groups", 30_000)?)
        }),
        entry!("runs_test", "lengths of ascending runs", |p| Runs::new(p.u64("n_runs", 20_000)?)),
        entry!("max_of_t_test", "maximum of groups of draws", |p| {
            MaxOfT::new(p.u64("t", 5)?, p.u64("n_groups", 10_000)?)
        }),
        entry!("collision_test", "collisions of balls thrown into urns", |p| {
            Collision::new(p.u64("m", 1 << 20)?, p.u64("n", 1 << 14)?)
        }),
        entry!("serial_correlation_test", "lag-1 circular serial correlation", |p| {
            SerialCorrelation::new(p.u64("n", 100_000)?)
        }),
        entry!("birthday_spacing_test", "repeated spacings between sorted birthdays", |p| {
            BirthdaySpacings::new(p.u64("m", 1 << 24)?, p.u64("n", 512)?, p.u64("reps", 1000)?)
        }),
        entry!("bin_rank_chisqr_test", "GF(2) ranks of 32x32 (or 31x31) bit matrices", |p| {
            BinaryRank::new(p.u32("rows", 32)?, p.u32("cols", 32)?, p.u64("n_matrices", 10_000)?)
        }),
        entry!("bin_rank_ks_test", "GF(2) ranks of 6x8 bit matrices", |p| {
            BinaryRank::new(p.u32("rows", 6)?, p.u32("cols", 8)?, p.u64("n_matrices", 100_000)?)
        }),
        entry!("monkey_20bit_test", "missing overlapping 20-bit words", |_p| Ok(Monkey20Bit::new())),
        entry!("parking_lot_test", "cars parked in a square lot", |p| {
            ParkingLot::new(p.u64("attempts", 12_000)?, p.f64("side", 100.0)?)
        }),
        entry!("minimum_distance_test", "minimum distance between random points", |p| {
            MinimumDistance::new(p.u64("points", 8000)?, p.f64("side", 10_000.0)?, p.u64("reps", 100)?)
        }),
        entry!("squeeze_test", "iterations to squeeze 2^31 down to 1", |p| Squeeze::new(p.u64("games", 100_000)?)),
        entry!("craps_test", "wins and throws in games of craps", |p| Craps::new(p.u64("games", 200_000)?)),
        entry!("random_walk_test", "final quadrants of 2-d random walks", |p| {
            RandomWalk::new(p.u64("walkers", 10_000)?, p.u64("steps", 101)?)
        }),
        entry!("repetition_test", "draws until the first repeated value", |p| {
            Repetition::new(p.u32("bits", 20)?, p.u64("reps", 1000)?)
        }),
        entry!("gcd_test", "greatest common divisors of random pairs", |p| Gcd::new(p.u64("pairs", 100_000)?)),
        entry!("maurers_universal_test", "compressibility of the bit stream", |p| {
            MaurersUniversal::new(p.u32("L", 8)?, p.u64("Q", 2560)?, p.u64("K", 256_000)?)
        }),
    ]
}

/// Looks up a class by name; the `_test` suffix may be omitted.
pub fn build_test(name: &str, params: Params) -> Result<Box<dyn TestCase>, TestError> {
    let entries = catalog();
    let found = entries.iter().find(|e| e.name == name || e.name.strip_suffix("_test") == Some(name));
    match found {
        Some(e) => e.build(params),
        None => {
            let names: Vec<&str> = entries.iter().map(|e| e.name).collect();
            Err(TestError::config(format!("unknown test `{name}`; available: {}", names.join(", "))))
        }
    }
}

/// One instance of every class with default parameters, plus the 31x31 rank variant.
pub fn default_catalog() -> Vec<Box<dyn TestCase>> {
    let mut tests: Vec<Box<dyn TestCase>> =
        catalog().iter().map(|e| e.build(Params::default()).expect("defaults are valid")).collect();
    let pos = tests.iter().position(|t| t.test_name() == "Binary-Rank-32x32-Test").expect("rank test present");
    tests.insert(pos + 1, Box::new(BinaryRank::new(31, 31, 10_000).expect("valid")));
    tests
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_entry_builds_with_defaults() {
        let tests = default_catalog();
        assert_eq!(tests.len(), catalog().len() + 1);
        let mut names: Vec<String> = tests.iter().map(|t| t.test_name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), tests.len(), "test names must be unique");
    }

    #[test]
    fn names_with_and_without_suffix() {
        assert!(build_test("chisqr_uniformity_test", Params::default()).is_ok());
        assert!(build_test("chisqr_uniformity", Params::default()).is_ok());
        let err = build_test("foo", Params::default()).unwrap_err().to_string();
        assert!(err.contains("foo") && err.contains("gap_test"));
    }

    #[test]
    fn parameters_are_applied_and_checked() {
        let mut p = Params::default();
        p.insert("n", 1000);
        p.insert("k", 10);
        let t = build_test("chisqr_uniformity", p).unwrap();
        assert_eq!(t.parameters()[0].value, "1000");
        let mut p = Params::default();
        p.insert("kk", 10);
        assert!(build_test("chisqr_uniformity", p).unwrap_err().to_string().contains("kk"));
        let mut p = Params::default();
        p.insert("n", "many");
        assert!(build_test("chisqr_uniformity", p).is_err());
        let mut p = Params::default();
        p.insert("n", 10);
        assert!(matches!(build_test("chisqr_uniformity", p), Err(TestError::Config(_))));
    }

    #[test]
    fn pooled_cells_close_for_all_defaults() {
        let mut checked = 0;
        for t in default_catalog() {
            if let Some(cells) = t.chi_square_cells() {
                let p = cells.pooled_cell_probabilities().unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9, "{}", t.test_name());
                checked += 1;
            }
        }
        assert!(checked >= 14);
    }
}
