use super::{RandomStream, SeedableStream, StreamError};

/// Multiplicative linear congruential generator `x ← a·x mod m`.
#[derive(Debug, Clone)]
pub struct Lcg {
    multiplier: u64,
    modulus: u64,
    state: u64,
    odd_state: bool,
    name: &'static str,
}

impl Lcg {
    /// Park-Miller "minimal standard": a = 16807, m = 2^31 - 1. Seed 0 maps to 1.
    pub fn minstd(seed: u64) -> Self {
        let mut g = Self { multiplier: 16807, modulus: 2_147_483_647, state: 1, odd_state: false, name: "minstd" };
        g.seed(seed);
        g
    }

    /// IBM RANDU (a = 65539, m = 2^31), a deliberately poor generator kept
    /// as a known-bad fixture. The state is forced odd.
    pub fn randu(seed: u64) -> Self {
        let mut g = Self { multiplier: 65539, modulus: 1 << 31, state: 1, odd_state: true, name: "randu" };
        g.seed(seed);
        g
    }

    /// A custom multiplicative LCG with modulus below 2^32.
    pub fn with_parameters(multiplier: u64, modulus: u64, seed: u64, name: &'static str) -> Self {
        assert!(modulus > 2 && modulus <= 1 << 32, "modulus out of range");
        let mut g = Self { multiplier, modulus, state: 1, odd_state: false, name };
        g.seed(seed);
        g
    }

    pub(crate) fn step(&mut self) -> u64 {
        self.state = self.state * self.multiplier % self.modulus;
        self.state
    }

    pub fn state(&self) -> u64 {
        self.state
    }
}

impl RandomStream for Lcg {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        Ok(self.step())
    }
    fn min_value(&self) -> u64 {
        1
    }
    fn max_value(&self) -> u64 {
        self.modulus - 1
    }
    fn name(&self) -> &str {
        self.name
    }
}

impl SeedableStream for Lcg {
    fn seed(&mut self, seed: u64) {
        let mut s = seed % self.modulus;
        if self.odd_state {
            s |= 1;
        }
        if s == 0 {
            s = 1;
        }
        self.state = s;
    }
}

pub type Minstd = Lcg;
pub type Randu = Lcg;

const ECUYER_M1: u64 = 2_147_483_563;
const ECUYER_M2: u64 = 2_147_483_399;

/// L'Ecuyer (1988) combination of two multiplicative LCGs.
#[derive(Debug, Clone)]
pub struct Ecuyer1988 {
    first: Lcg,
    second: Lcg,
}

impl Ecuyer1988 {
    pub fn new(seed: u64) -> Self {
        let mut g = Self {
            first: Lcg::with_parameters(40014, ECUYER_M1, 1, "ecuyer1988-a"),
            second: Lcg::with_parameters(40692, ECUYER_M2, 1, "ecuyer1988-b"),
        };
        g.seed(seed);
        g
    }

    pub fn component_states(&self) -> (u64, u64) {
        (self.first.state(), self.second.state())
    }
}

impl RandomStream for Ecuyer1988 {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        let a = self.first.step() as i64;
        let b = self.second.step() as i64;
        let mut z = a - b;
        if z < 1 {
            z += ECUYER_M1 as i64 - 1;
        }
        Ok(z as u64)
    }
    fn min_value(&self) -> u64 {
        1
    }
    fn max_value(&self) -> u64 {
        ECUYER_M1 - 1
    }
    fn name(&self) -> &str {
        "ecuyer1988"
    }
}

impl SeedableStream for Ecuyer1988 {
    fn seed(&mut self, seed: u64) {
        self.first.seed(seed);
        self.second.seed(seed);
    }
}

const MT_N: usize = 624;
const MT_M: usize = 397;

/// How an integer seed initializes the Mersenne Twister state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mt19937Seeding {
    /// `s[i] = 1812433253·(s[i-1] ^ (s[i-1] >> 30)) + i` (reference code since 2002).
    Standard,
    /// `s[i] = 69069·s[i-1]` from the original 1998 reference code, as used
    /// by Boost.Random at the time.
    Legacy1998,
}

/// 32-bit Mersenne Twister MT19937.
#[derive(Clone)]
pub struct Mt19937 {
    state: [u32; MT_N],
    index: usize,
    seeding: Mt19937Seeding,
}

impl std::fmt::Debug for Mt19937 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mt19937").field("index", &self.index).field("seeding", &self.seeding).finish()
    }
}

impl Mt19937 {
    pub fn new(seed: u64) -> Self {
        Self::with_seeding(seed, Mt19937Seeding::Standard)
    }

    pub fn with_seeding(seed: u64, seeding: Mt19937Seeding) -> Self {
        let mut g = Self { state: [0; MT_N], index: MT_N, seeding };
        g.seed(seed);
        g
    }

    fn twist(&mut self) {
        for i in 0..MT_N {
            let y = (self.state[i] & 0x8000_0000) | (self.state[(i + 1) % MT_N] & 0x7fff_ffff);
            let mut next = self.state[(i + MT_M) % MT_N] ^ (y >> 1);
            if y & 1 != 0 {
                next ^= 0x9908_b0df;
            }
            self.state[i] = next;
        }
        self.index = 0;
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.index >= MT_N {
            self.twist();
        }
        let mut y = self.state[self.index];
        self.index += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9d2c_5680;
        y ^= (y << 15) & 0xefc6_0000;
        y ^= y >> 18;
        y
    }
}

impl RandomStream for Mt19937 {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        Ok(self.next_u32() as u64)
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        u32::MAX as u64
    }
    fn name(&self) -> &str {
        match self.seeding {
            Mt19937Seeding::Standard => "mt19937",
            Mt19937Seeding::Legacy1998 => "mt19937-1998",
        }
    }
}

impl SeedableStream for Mt19937 {
    fn seed(&mut self, seed: u64) {
        let s = seed as u32;
        self.state[0] = s;
        for i in 1..MT_N {
            let prev = self.state[i - 1];
            self.state[i] = match self.seeding {
                Mt19937Seeding::Standard => 1_812_433_253u32.wrapping_mul(prev ^ (prev >> 30)).wrapping_add(i as u32),
                Mt19937Seeding::Legacy1998 => 69069u32.wrapping_mul(prev),
            };
        }
        self.index = MT_N;
    }
}

const LF_LONG: usize = 1279;
const LF_SHORT: usize = 418;

/// Additive lagged Fibonacci generator `x_n = x_{n-418} + x_{n-1279} mod 2^32`.
///
/// The 1279-word buffer is filled from [`Lcg::minstd`] seeded with the same
/// seed, each word combining two draws as `(a << 16) ^ b`.
#[derive(Clone)]
pub struct LaggedFibonacci1279 {
    buffer: Vec<u32>,
    /// Position of `x_{n-1279}`, the oldest word.
    pos: usize,
}

impl std::fmt::Debug for LaggedFibonacci1279 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LaggedFibonacci1279").field("pos", &self.pos).finish()
    }
}

impl LaggedFibonacci1279 {
    pub fn new(seed: u64) -> Self {
        let mut g = Self { buffer: vec![0; LF_LONG], pos: 0 };
        g.seed(seed);
        g
    }

    /// The buffer as filled by seeding, `x_1 ..= x_1279`.
    pub fn initial_buffer(seed: u64) -> Vec<u32> {
        let mut fill = Lcg::minstd(seed);
        let mut buf: Vec<u32> = (0..LF_LONG)
            .map(|_| {
                let a = fill.step() as u32;
                let b = fill.step() as u32;
                (a << 16) ^ b
            })
            .collect();
        // An all-even buffer never produces odd outputs.
        if buf.iter().all(|w| w & 1 == 0) {
            buf[0] |= 1;
        }
        buf
    }
}

impl RandomStream for LaggedFibonacci1279 {
    fn next_raw(&mut self) -> Result<u64, StreamError> {
        let short = (self.pos + LF_LONG - LF_SHORT) % LF_LONG;
        let v = self.buffer[self.pos].wrapping_add(self.buffer[short]);
        self.buffer[self.pos] = v;
        self.pos = (self.pos + 1) % LF_LONG;
        Ok(v as u64)
    }
    fn min_value(&self) -> u64 {
        0
    }
    fn max_value(&self) -> u64 {
        u32::MAX as u64
    }
    fn name(&self) -> &str {
        "lagged_fibonacci1279"
    }
}

impl SeedableStream for LaggedFibonacci1279 {
    fn seed(&mut self, seed: u64) {
        self.buffer = Self::initial_buffer(seed);
        self.pos = 0;
    }
}
