use super::{GenkitError, RandomStream, SeedableStream, StreamError};

/// Bays-Durham shuffle: outputs are buffered in a table and emitted in an
/// order chosen by the high bits of the previous output.
///
/// The table is filled lazily on the first draw after construction or
/// seeding. The first slot index comes from the last filled entry, so the
/// first `N` outputs plus the table contents are exactly the inner stream's
/// first `N + table_size` values.
#[derive(Debug, Clone)]
pub struct Shuffled<S> {
    inner: S,
    table: Vec<u64>,
    table_size: usize,
    prev: u64,
    name: String,
}

impl<S: RandomStream> Shuffled<S> {
    pub fn new(inner: S, table_size: usize) -> Result<Self, GenkitError> {
        if table_size < 2 {
            return Err(GenkitError::Config(format!("shuffle table size {table_size} < 2")));
        }
        let name = format!("shuffled({})", inner.name());
        Ok(Self { inner, table: Vec::new(), table_size, prev: 0, name })
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    fn fill(&mut self) -> Result<(), StreamError> {
        let mut table = Vec::with_capacity(self.table_size);
        for _ in 0..self.table_size {
            table.push(self.inner.next_raw()?);
        }
        self.prev = table[self.table_size - 1];
        self.table = table;
        Ok(())
    }
}

impl<S: RandomStream> RandomStream for Shuffled<S> {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        if self.table.is_empty() {
            self.fill()?;
        }
        let offset = (self.prev - self.inner.min_value()) as u128;
        let slot = (offset * self.table_size as u128 / self.inner.range_len()) as usize;
        let out = self.table[slot];
        self.table[slot] = self.inner.next_raw()?;
        self.prev = out;
        Ok(out)
    }
    fn min_value(&self) -> u64 {
        self.inner.min_value()
    }
    fn max_value(&self) -> u64 {
        self.inner.max_value()
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl<S: SeedableStream> SeedableStream for Shuffled<S> {
    fn seed(&mut self, seed: u64) {
        self.inner.seed(seed);
        self.table.clear();
    }
}

/// Emits bits `lo..=hi` of each raw output as a value in `[0, 2^(hi-lo+1) - 1]`.
#[derive(Debug, Clone)]
pub struct BitExtract<S> {
    inner: S,
    hi: u32,
    lo: u32,
    name: String,
}

impl<S: RandomStream> BitExtract<S> {
    pub fn new(inner: S, hi: u32, lo: u32) -> Result<Self, GenkitError> {
        let width = inner.bit_width();
        if lo > hi || hi >= width {
            return Err(GenkitError::Config(format!("bit range {hi}..{lo} outside a {width}-bit source")));
        }
        let name = format!("bits[{hi}:{lo}]({})", inner.name());
        Ok(Self { inner, hi, lo, name })
    }

    /// The highest `bits` bits of the source word.
    pub fn high_bits(inner: S, bits: u32) -> Result<Self, GenkitError> {
        let width = inner.bit_width();
        if bits == 0 || bits > width {
            return Err(GenkitError::Config(format!("cannot take {bits} bits of a {width}-bit source")));
        }
        Self::new(inner, width - 1, width - bits)
    }

    pub fn field_width(&self) -> u32 {
        self.hi - self.lo + 1
    }

    /// Concatenates `count` successive fields, first field most significant.
    pub fn next_concat(&mut self, count: u32) -> Result<u64, StreamError> {
        let w = self.field_width();
        assert!(w * count <= 64, "concatenation wider than 64 bits");
        let mut acc = 0u64;
        for _ in 0..count {
            let field = self.next_raw()?;
            acc = if w == 64 { field } else { (acc << w) | field };
        }
        Ok(acc)
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: RandomStream> RandomStream for BitExtract<S> {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        let v = self.inner.next_raw()?;
        Ok((v >> self.lo) & self.max_value())
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        let w = self.field_width();
        if w == 64 {
            u64::MAX
        } else {
            (1u64 << w) - 1
        }
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl<S: SeedableStream> SeedableStream for BitExtract<S> {
    fn seed(&mut self, seed: u64) {
        self.inner.seed(seed);
    }
}

/// Slides `mask` across each raw word in steps of `step` bits, emitting the
/// masked bits right-aligned at every position the mask fits.
#[derive(Debug, Clone)]
pub struct BitMaskWindows<S> {
    inner: S,
    mask: u64,
    step: u32,
    windows: u32,
    current: u64,
    next_window: u32,
    name: String,
}

impl<S: RandomStream> BitMaskWindows<S> {
    pub fn new(inner: S, mask: u64, step: u32) -> Result<Self, GenkitError> {
        let width = inner.bit_width();
        let mask_len = 64 - mask.leading_zeros();
        if mask == 0 || mask_len > width {
            return Err(GenkitError::Config(format!("mask {mask:#x} empty or wider than the {width}-bit source")));
        }
        if step == 0 || step >= width {
            return Err(GenkitError::Config(format!("mask step {step} not in 1..{width}")));
        }
        let windows = (width - mask_len) / step + 1;
        let name = format!("windows({mask:#x}/{step})({})", inner.name());
        Ok(Self { inner, mask, step, windows, current: 0, next_window: windows, name })
    }

    pub fn windows_per_word(&self) -> u32 {
        self.windows
    }
}

impl<S: RandomStream> RandomStream for BitMaskWindows<S> {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        if self.next_window >= self.windows {
            self.current = self.inner.next_raw()?;
            self.next_window = 0;
        }
        let shift = self.next_window * self.step;
        self.next_window += 1;
        Ok(((self.current >> shift) & self.mask) >> self.mask.trailing_zeros())
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        self.mask >> self.mask.trailing_zeros()
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl<S: SeedableStream> SeedableStream for BitMaskWindows<S> {
    fn seed(&mut self, seed: u64) {
        self.inner.seed(seed);
        self.next_window = self.windows;
    }
}

/// Round-robin interleaving of several streams with identical ranges.
///
/// Seeding with `s` seeds the i-th stream with `s + i`.
#[derive(Debug, Clone)]
pub struct ParallelImitator<S> {
    streams: Vec<S>,
    next: usize,
    name: String,
}

impl<S: RandomStream> ParallelImitator<S> {
    pub fn new(streams: Vec<S>) -> Result<Self, GenkitError> {
        let first =
            streams.first().ok_or_else(|| GenkitError::Config("parallel imitator needs at least one stream".into()))?;
        let (lo, hi) = (first.min_value(), first.max_value());
        if let Some(bad) = streams.iter().find(|s| s.min_value() != lo || s.max_value() != hi) {
            return Err(GenkitError::Config(format!(
                "stream {} has range [{}, {}], expected [{lo}, {hi}]",
                bad.name(),
                bad.min_value(),
                bad.max_value()
            )));
        }
        let names: Vec<&str> = streams.iter().map(|s| s.name()).collect();
        let name = format!("parallel({})", names.join(","));
        Ok(Self { streams, next: 0, name })
    }
}

impl<S: RandomStream> RandomStream for ParallelImitator<S> {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        let v = self.streams[self.next].next_raw()?;
        self.next = (self.next + 1) % self.streams.len();
        Ok(v)
    }
    fn min_value(&self) -> u64 {
        self.streams[0].min_value()
    }
    fn max_value(&self) -> u64 {
        self.streams[0].max_value()
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl<S: SeedableStream> SeedableStream for ParallelImitator<S> {
    fn seed(&mut self, seed: u64) {
        for (i, s) in self.streams.iter_mut().enumerate() {
            s.seed(seed.wrapping_add(i as u64));
        }
        self.next = 0;
    }
}

/// Reads a stream as a bit sequence, most significant bit of each raw word
/// first, using the stream's full bit width per word.
#[derive(Debug)]
pub struct BitReader<S> {
    inner: S,
    width: u32,
    word: u64,
    left: u32,
}

impl<S: RandomStream> BitReader<S> {
    pub fn new(inner: S) -> Self {
        let width = inner.bit_width();
        Self { inner, width, word: 0, left: 0 }
    }

    pub fn next_bit(&mut self) -> Result<u64, StreamError> {
        if self.left == 0 {
            self.word = self.inner.next_raw()?;
            self.left = self.width;
        }
        self.left -= 1;
        Ok((self.word >> self.left) & 1)
    }

    /// Next `count` bits (at most 64), first bit most significant.
    pub fn next_bits(&mut self, count: u32) -> Result<u64, StreamError> {
        assert!(count <= 64);
        let mut acc = 0u64;
        let mut need = count;
        while need > 0 {
            if self.left == 0 {
                self.word = self.inner.next_raw()?;
                self.left = self.width;
            }
            let take = need.min(self.left);
            let shift = self.left - take;
            let chunk = (self.word >> shift) & low_mask(take);
            acc = if take == 64 { chunk } else { (acc << take) | chunk };
            self.left -= take;
            need -= take;
        }
        Ok(acc)
    }
}

fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}
