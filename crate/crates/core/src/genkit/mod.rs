//! Random number engines, distributions and stream adapters.
//!
//! An engine yields raw unsigned integers in a declared inclusive range
//! `[min_value, max_value]`. Distributions ([`uniform01`], [`UniformInt`])
//! map raw outputs into a target domain, and adapters rearrange or combine
//! raw streams while declaring a range of their own.

mod adapters;
mod distributions;
mod engines;
mod io;

pub use adapters::{BitExtract, BitMaskWindows, BitReader, ParallelImitator, Shuffled};
pub use distributions::{uniform01, UniformInt};
pub use engines::{Ecuyer1988, LaggedFibonacci1279, Lcg, Minstd, Mt19937, Mt19937Seeding, Randu};
pub use io::{write_words, ExternalStream, FileStream, SEED_ENV};

use thiserror::Error;

/// Failure while drawing from a stream.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("random stream exhausted")]
    Exhausted,
    #[error("random stream I/O failure: {0}")]
    Io(String),
}

/// Failure while constructing a stream or adapter.
#[derive(Debug, Error)]
pub enum GenkitError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad random-number file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("cannot start external generator `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A source of raw integer outputs with a declared inclusive range.
pub trait RandomStream: Send {
    fn next_raw(&mut self) -> Result<u64, StreamError>;
    fn min_value(&self) -> u64;
    fn max_value(&self) -> u64;
    fn name(&self) -> &str;

    /// Number of distinct raw values, `max - min + 1` (up to 2^64).
    fn range_len(&self) -> u128 {
        (self.max_value() - self.min_value()) as u128 + 1
    }

    /// Number of bits needed to represent `max_value`.
    fn bit_width(&self) -> u32 {
        64 - self.max_value().leading_zeros()
    }
}

/// A stream whose output sequence is a deterministic function of its seed.
pub trait SeedableStream: RandomStream {
    fn seed(&mut self, seed: u64);

    /// Discards exactly `count` raw outputs.
    fn warmup(&mut self, count: u64) -> Result<(), StreamError> {
        for _ in 0..count {
            self.next_raw()?;
        }
        Ok(())
    }
}

impl<T: RandomStream + ?Sized> RandomStream for &mut T {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        (**self).next_raw()
    }
    fn min_value(&self) -> u64 {
        (**self).min_value()
    }
    fn max_value(&self) -> u64 {
        (**self).max_value()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: RandomStream + ?Sized> RandomStream for Box<T> {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        (**self).next_raw()
    }
    fn min_value(&self) -> u64 {
        (**self).min_value()
    }
    fn max_value(&self) -> u64 {
        (**self).max_value()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: SeedableStream + ?Sized> SeedableStream for Box<T> {
    fn seed(&mut self, seed: u64) {
        (**self).seed(seed)
    }
    fn warmup(&mut self, count: u64) -> Result<(), StreamError> {
        (**self).warmup(count)
    }
}

pub fn make_minstd() -> Minstd {
    Lcg::minstd(1)
}

pub fn make_ecuyer1988() -> Ecuyer1988 {
    Ecuyer1988::new(1)
}

pub fn make_mt19937() -> Mt19937 {
    Mt19937::new(5489)
}

pub fn make_lagged_fibonacci_1279() -> LaggedFibonacci1279 {
    LaggedFibonacci1279::new(1)
}

pub fn make_shuffled<S: SeedableStream>(inner: S, table_size: usize) -> Result<Shuffled<S>, GenkitError> {
    Shuffled::new(inner, table_size)
}

/// A stream replaying a fixed list of raw values, then reporting exhaustion.
///
/// Handy for feeding hand-constructed sequences into tests.
#[derive(Debug, Clone)]
pub struct SequenceStream {
    values: Vec<u64>,
    pos: usize,
    min: u64,
    max: u64,
    cycle: bool,
}

impl SequenceStream {
    pub fn new(values: Vec<u64>, min: u64, max: u64) -> Self {
        debug_assert!(values.iter().all(|v| (min..=max).contains(v)));
        Self { values, pos: 0, min, max, cycle: false }
    }

    /// Repeats the values forever instead of exhausting.
    pub fn cycled(mut self) -> Self {
        self.cycle = true;
        self
    }

    /// Raw values for a stream of range `[0, 2^32 - 1]` that map through
    /// [`uniform01`] to the given reals.
    pub fn from_unit(values: &[f64]) -> Self {
        let raw = values.iter().map(|&u| ((u * 4_294_967_296.0) as u64).min(u32::MAX as u64)).collect();
        Self::new(raw, 0, u32::MAX as u64)
    }
}

impl RandomStream for SequenceStream {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        if self.pos >= self.values.len() {
            if !self.cycle || self.values.is_empty() {
                return Err(StreamError::Exhausted);
            }
            self.pos = 0;
        }
        let v = self.values[self.pos];
        self.pos += 1;
        Ok(v)
    }
    fn min_value(&self) -> u64 {
        self.min
    }
    fn max_value(&self) -> u64 {
        self.max
    }
    fn name(&self) -> &str {
        "sequence"
    }
}

impl SeedableStream for SequenceStream {
    fn seed(&mut self, _seed: u64) {
        self.pos = 0;
    }
}
