//! Random walk, repetition time, GCD and Maurer's universal test.

use super::{pooled_chi_square, CellProbabilities, Parameter, RunOutput, TestCase, TestError};
use crate::genkit::{BitExtract, BitReader, RandomStream, UniformInt};
use crate::report::format_number;
use crate::stats::{gaussian_two_sided, StatisticResult};

/// Two-dimensional random walk with diagonal `(±1, ±1)` steps.
///
/// Each step reads two bits, first the x sign then the y sign; bit 0 moves
/// in the positive direction. With an odd number of steps neither final
/// coordinate can be zero. Draws `2 steps walkers` bits.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalk {
    walkers: u64,
    steps: u64,
}

impl RandomWalk {
    pub fn new(walkers: u64, steps: u64) -> Result<Self, TestError> {
        if steps.is_multiple_of(2) {
            return Err(TestError::config(format!("step count {steps} must be odd")));
        }
        if walkers < 20 {
            return Err(TestError::config("need at least 20 walkers for 4 quadrant cells"));
        }
        Ok(Self { walkers, steps })
    }
}

/// Quadrant counts in the order (+,+), (-,+), (-,-), (+,-).
fn quadrant_counts(stream: &mut dyn RandomStream, walkers: u64, steps: u64) -> Result<Vec<u64>, TestError> {
    let mut reader = BitReader::new(stream);
    let mut counts = vec![0u64; 4];
    for _ in 0..walkers {
        let (mut x, mut y) = (0i64, 0i64);
        for _ in 0..steps {
            x += 1 - 2 * reader.next_bit()? as i64;
            y += 1 - 2 * reader.next_bit()? as i64;
        }
        let q = match (x > 0, y > 0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        counts[q] += 1;
    }
    Ok(counts)
}

impl TestCase for RandomWalk {
    fn test_name(&self) -> String {
        "Random-Walk-2D-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Walkers", self.walkers), Parameter::new("Number of Steps", self.steps)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = quadrant_counts(stream, self.walkers, self.steps)?;
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for RandomWalk {
    fn cell_probabilities(&self) -> Vec<f64> {
        vec![0.25; 4]
    }
    fn sample_size(&self) -> u64 {
        self.walkers
    }
}

/// `P(T = t)` for the first-repeat time `T` among draws from `2^bits` values.
///
/// Index `t`; entries 0 and 1 are zero. The vector stops once the remaining
/// mass is below 1e-16.
pub fn repetition_pmf(bits: u32) -> Vec<f64> {
    let m = (1u64 << bits) as f64;
    let mut pmf = vec![0.0, 0.0];
    // survival = P(first t - 1 draws distinct)
    let mut survival = 1.0;
    let mut t = 2u64;
    while survival > 1e-16 && (t as f64) <= m + 1.0 {
        let p = survival * (t - 1) as f64 / m;
        pmf.push(p);
        survival *= 1.0 - (t - 1) as f64 / m;
        t += 1;
    }
    pmf
}

/// Repetition time test on the high `bits` bits of each raw output.
///
/// Each repetition draws until the first repeated value. Draw counts are
/// binned at quantiles of the exact null distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    bits: u32,
    reps: u64,
}

impl Repetition {
    pub fn new(bits: u32, reps: u64) -> Result<Self, TestError> {
        if bits == 0 || bits > 30 {
            return Err(TestError::config(format!("field width {bits} outside 1..=30")));
        }
        if reps == 0 {
            return Err(TestError::config("need at least one repetition"));
        }
        Ok(Self { bits, reps })
    }

    fn target_cells(&self) -> usize {
        (self.reps as usize / 20).clamp(10, 50)
    }

    /// Inclusive upper bounds of all cells but the last, and cell probabilities.
    fn cells(&self) -> (Vec<u64>, Vec<f64>) {
        let pmf = repetition_pmf(self.bits);
        let k = self.target_cells();
        let mut bounds = Vec::new();
        let mut probs = Vec::new();
        let mut cum = 0.0;
        let mut cell_mass = 0.0;
        for (t, &p) in pmf.iter().enumerate().skip(2) {
            cum += p;
            cell_mass += p;
            if bounds.len() + 1 < k && cum >= (bounds.len() + 1) as f64 / k as f64 && t + 1 < pmf.len() {
                bounds.push(t as u64);
                probs.push(cell_mass);
                cell_mass = 0.0;
            }
        }
        let head: f64 = probs.iter().sum();
        probs.push(1.0 - head);
        (bounds, probs)
    }
}

impl TestCase for Repetition {
    fn test_name(&self) -> String {
        "Repetition-Time-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Bits", self.bits), Parameter::new("Repetitions", self.reps)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut fields = BitExtract::high_bits(stream, self.bits).map_err(|e| TestError::config(e.to_string()))?;
        let (bounds, probs) = self.cells();
        let mut counts = vec![0u64; probs.len()];
        let mut seen = vec![0u64; ((1u64 << self.bits) as usize).div_ceil(64)];
        let mut touched = Vec::new();
        for _ in 0..self.reps {
            let mut t = 0u64;
            loop {
                let v = fields.next_raw()?;
                t += 1;
                let (i, b) = ((v / 64) as usize, v % 64);
                if seen[i] & (1 << b) != 0 {
                    break;
                }
                seen[i] |= 1 << b;
                touched.push(i);
            }
            for &i in &touched {
                seen[i] = 0;
            }
            touched.clear();
            counts[bounds.partition_point(|&ub| ub < t)] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, probs)?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Repetition {
    fn cell_probabilities(&self) -> Vec<f64> {
        self.cells().1
    }
    fn sample_size(&self) -> u64 {
        self.reps
    }
}

/// Euclid's algorithm; returns the gcd and the number of division steps.
pub fn gcd_with_steps(mut u: u64, mut v: u64) -> (u64, u64) {
    let mut steps = 0;
    while v != 0 {
        (u, v) = (v, u % v);
        steps += 1;
    }
    (u, steps)
}

const GCD_CELLS: u64 = 50;

/// `P(gcd = j) = 6/(π² j²)` for `j = 1..=50` and the tail beyond.
pub fn gcd_probabilities() -> Vec<f64> {
    let c = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut probs: Vec<f64> = (1..=GCD_CELLS).map(|j| c / (j * j) as f64).collect();
    let head: f64 = probs.iter().sum();
    probs.push(1.0 - head);
    probs
}

/// GCD test on pairs of integers in `[1, 2³¹ - 1]`.
///
/// The step counts of Euclid's algorithm are reported as diagnostics.
/// Draws `2 pairs` integers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gcd {
    pairs: u64,
}

impl Gcd {
    pub fn new(pairs: u64) -> Result<Self, TestError> {
        if pairs == 0 {
            return Err(TestError::config("need at least one pair"));
        }
        Ok(Self { pairs })
    }
}

impl TestCase for Gcd {
    fn test_name(&self) -> String {
        "GCD-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Pairs", self.pairs)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let dist = UniformInt::new(1, (1 << 31) - 1).expect("valid interval");
        let mut counts = vec![0u64; GCD_CELLS as usize + 1];
        let mut total_steps = 0u64;
        let mut max_steps = 0u64;
        for _ in 0..self.pairs {
            let u = dist.sample(stream)? as u64;
            let v = dist.sample(stream)? as u64;
            let (g, steps) = gcd_with_steps(u, v);
            counts[(g.min(GCD_CELLS + 1) - 1) as usize] += 1;
            total_steps += steps;
            max_steps = max_steps.max(steps);
        }
        let mut out = RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?);
        out.diagnostics.push(Parameter::new("Mean Steps", format_number(total_steps as f64 / self.pairs as f64)));
        out.diagnostics.push(Parameter::new("Maximum Steps", max_steps));
        Ok(out)
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Gcd {
    fn cell_probabilities(&self) -> Vec<f64> {
        gcd_probabilities()
    }
    fn sample_size(&self) -> u64 {
        self.pairs
    }
}

/// Mean and variance of `log₂ A` for the distance `A` between repeats of a
/// uniform `l`-bit block, `P(A = i) = q(1-q)^(i-1)` with `q = 2^-l`.
pub fn maurer_expectation(l: u32) -> (f64, f64) {
    let q = 0.5f64.powi(l as i32);
    let mut first = 0.0;
    let mut second = 0.0;
    let mut weight = q;
    let mut i = 1u64;
    loop {
        let lg = (i as f64).log2();
        first += weight * lg;
        second += weight * lg * lg;
        weight *= 1.0 - q;
        i += 1;
        // remaining mass (1-q)^(i-1) = weight/q, times the largest log terms that matter
        let bound = (i as f64 + 1.0 / q).log2() + 1.0;
        if i > 2 && weight / q * bound * bound < 1e-10 * first {
            break;
        }
    }
    (first, second - first * first)
}

/// Variance correction factor for finite `k`.
fn maurer_correction(l: u32, k: u64) -> f64 {
    let l = l as f64;
    0.7 - 0.8 / l + (4.0 + 32.0 / l) * (k as f64).powf(-3.0 / l) / 15.0
}

/// Maurer's universal statistical test.
///
/// `q` initialization blocks and `k` test blocks of `l` bits each are read
/// from consecutive stream bits. Draws `l (q + k)` bits.
#[derive(Debug, Clone, PartialEq)]
pub struct MaurersUniversal {
    l: u32,
    q: u64,
    k: u64,
}

impl MaurersUniversal {
    pub fn new(l: u32, q: u64, k: u64) -> Result<Self, TestError> {
        if l == 0 || l > 16 {
            return Err(TestError::config(format!("block length {l} outside 1..=16")));
        }
        if q < 10 * (1u64 << l) {
            return Err(TestError::config(format!("{q} initialization blocks are fewer than 10·2^{l}")));
        }
        if k == 0 {
            return Err(TestError::config("need at least one test block"));
        }
        Ok(Self { l, q, k })
    }
}

impl TestCase for MaurersUniversal {
    fn test_name(&self) -> String {
        "Maurers-Universal-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Block Length", self.l),
            Parameter::new("Initialization Blocks", self.q),
            Parameter::new("Test Blocks", self.k),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut reader = BitReader::new(stream);
        let mut last = vec![0u64; 1 << self.l];
        for i in 1..=self.q {
            last[reader.next_bits(self.l)? as usize] = i;
        }
        let mut sum = 0.0;
        for i in self.q + 1..=self.q + self.k {
            let b = reader.next_bits(self.l)? as usize;
            sum += ((i - last[b]) as f64).log2();
            last[b] = i;
        }
        let f = sum / self.k as f64;
        let (mean, variance) = maurer_expectation(self.l);
        let sigma = maurer_correction(self.l, self.k) * (variance / self.k as f64).sqrt();
        let z = (f - mean) / sigma;
        let mut out = RunOutput::single(StatisticResult::gaussian(z, gaussian_two_sided(z)));
        out.diagnostics.push(Parameter::new("Statistic", format_number(f)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::testutil::{constant_unit, zeros};
    use crate::genkit::{Mt19937, SequenceStream};

    #[test]
    fn walk_all_zero_bits() {
        let counts = quadrant_counts(&mut zeros(), 10, 5).unwrap();
        assert_eq!(counts, vec![10, 0, 0, 0]);
        assert!(RandomWalk::new(100, 10).is_err());
    }

    #[test]
    fn walk_single_step_enumeration() {
        let mut s = SequenceStream::new(vec![0, 1, 2, 3], 0, 3);
        assert_eq!(quadrant_counts(&mut s, 4, 1).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn walk_mt19937() {
        let t = RandomWalk::new(10_000, 101).unwrap();
        let p = t.run(&mut Mt19937::new(331)).unwrap().results[0].first_p();
        assert!(p > 0.001 && p < 0.999);
    }

    #[test]
    fn repetition_single_bit_by_enumeration() {
        // all 8 sequences of 3 bits: first repeat at draw 2 or 3
        let mut counts = [0u32; 4];
        for code in 0..8u32 {
            let b = [code & 1, (code >> 1) & 1, (code >> 2) & 1];
            let t = if b[1] == b[0] { 2 } else { 3 };
            counts[t] += 1;
        }
        let pmf = repetition_pmf(1);
        assert_eq!(pmf, vec![0.0, 0.0, counts[2] as f64 / 8.0, counts[3] as f64 / 8.0]);
        assert_eq!(pmf[2], 0.5);
    }

    #[test]
    fn repetition_twenty_bit_shape() {
        let pmf = repetition_pmf(20);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = pmf.iter().enumerate().map(|(t, p)| t as f64 * p).sum();
        let target = (std::f64::consts::PI * (1u64 << 20) as f64 / 2.0).sqrt();
        assert!((mean - target).abs() < 0.05 * target);
        assert!((mean - 1283.0).abs() < 2.0);
        // the mode sits near √M, below the mean
        let mode = pmf.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(mode, 1025);
    }

    #[test]
    fn repetition_cells() {
        let t = Repetition::new(20, 1000).unwrap();
        let (bounds, probs) = t.cells();
        assert_eq!(probs.len(), 50);
        assert_eq!(bounds.len(), 49);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs.iter().all(|&p| (p - 0.02).abs() < 0.005));
        let tiny = Repetition::new(1, 100).unwrap();
        assert_eq!(tiny.cells().1, vec![0.5, 0.5]);
        assert!(Repetition::new(31, 10).is_err());
    }

    #[test]
    fn repetition_constant_stream() {
        let t = Repetition::new(20, 1000).unwrap();
        let r = &t.run(&mut constant_unit(0.3)).unwrap().results[0];
        assert!(r.first_p() < 1e-10);
    }

    #[test]
    fn repetition_mt19937() {
        let t = Repetition::new(20, 1000).unwrap();
        let p = t.run(&mut Mt19937::new(331)).unwrap().results[0].first_p();
        assert!(p > 0.001 && p < 0.999);
    }

    #[test]
    fn gcd_hand_trace_and_table() {
        assert_eq!(gcd_with_steps(48, 36), (12, 2));
        assert_eq!(gcd_with_steps(17, 5), (1, 3));
        let p = gcd_probabilities();
        assert!((p[0] - 0.6079271018540267).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[50] > 0.0);
    }

    #[test]
    fn gcd_reports_steps() {
        let out = Gcd::new(1000).unwrap().run(&mut Mt19937::new(3)).unwrap();
        assert_eq!(out.diagnostics.len(), 2);
        assert_eq!(out.results.len(), 1);
    }

    #[test]
    fn maurer_moments() {
        let (e6, v6) = maurer_expectation(6);
        assert!((e6 - 5.21770524986157).abs() < 1e-8);
        assert!((v6 - 2.95403239938235).abs() < 1e-8);
        let mut prev = 0.0;
        for l in 1..=12 {
            let (e, _) = maurer_expectation(l);
            assert!(e > prev);
            prev = e;
        }
    }

    #[test]
    fn maurer_constant_stream() {
        let t = MaurersUniversal::new(6, 640, 5000).unwrap();
        let r = &t.run(&mut zeros()).unwrap().results[0];
        assert!(r.statistic_value() < -100.0);
        assert!(r.first_p() < 1e-10);
        assert!(MaurersUniversal::new(6, 639, 10).is_err());
    }

    #[test]
    fn maurer_mt19937() {
        let t = MaurersUniversal::new(8, 2560, 256_000).unwrap();
        let p = t.run(&mut Mt19937::new(331)).unwrap().results[0].first_p();
        assert!(p > 0.001 && p < 0.999);
    }
}
