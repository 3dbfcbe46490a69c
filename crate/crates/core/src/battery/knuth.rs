//! Empirical tests in the style of Knuth's catalog.

use super::{pooled_chi_square, CellProbabilities, Parameter, RunOutput, TestCase, TestError};
use crate::genkit::{uniform01, RandomStream, UniformInt};
use crate::stats::{gaussian_two_sided, ks_uniform_test, StatisticResult};

fn digits(d: u64) -> UniformInt {
    UniformInt::new(0, d as i64 - 1).expect("d >= 1")
}

/// Longest gap or coupon segment before a test gives up on the stream.
const MAX_SEGMENT: u64 = 1_000_000;

/// Gap test: lengths of runs of draws outside `[alpha, beta)`.
///
/// Reads draws until `n_gaps` gaps have closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    alpha: f64,
    beta: f64,
    t: u64,
    n_gaps: u64,
}

impl Gap {
    pub fn new(alpha: f64, beta: f64, t: u64, n_gaps: u64) -> Result<Self, TestError> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || beta <= alpha {
            return Err(TestError::config(format!("invalid interval [{alpha}, {beta})")));
        }
        if beta - alpha >= 1.0 {
            return Err(TestError::config("interval covers the whole unit interval"));
        }
        if t == 0 || n_gaps == 0 {
            return Err(TestError::config("gap limit and gap count must be positive"));
        }
        Ok(Self { alpha, beta, t, n_gaps })
    }

    fn counts(&self, stream: &mut dyn RandomStream) -> Result<Vec<u64>, TestError> {
        let mut counts = vec![0u64; self.t as usize + 1];
        let mut closed = 0;
        let mut r = 0u64;
        while closed < self.n_gaps {
            let u = uniform01(stream)?;
            if u >= self.alpha && u < self.beta {
                counts[r.min(self.t) as usize] += 1;
                closed += 1;
                r = 0;
            } else {
                r += 1;
                if r > MAX_SEGMENT {
                    return Err(TestError::Aborted(format!(
                        "no hit in [{}, {}) for {MAX_SEGMENT} draws",
                        self.alpha, self.beta
                    )));
                }
            }
        }
        Ok(counts)
    }
}

/// `P(r) = p(1-p)^r` for `r < t` and `(1-p)^t` for the tail.
pub fn gap_probabilities(p: f64, t: u64) -> Vec<f64> {
    let mut probs: Vec<f64> = (0..t).map(|r| p * (1.0 - p).powi(r as i32)).collect();
    probs.push((1.0 - p).powi(t as i32));
    probs
}

impl TestCase for Gap {
    fn test_name(&self) -> String {
        "Gap-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Lower Bound", self.alpha),
            Parameter::new("Upper Bound", self.beta),
            Parameter::new("Maximum Gap", self.t),
            Parameter::new("Number of Gaps", self.n_gaps),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = self.counts(stream)?;
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Gap {
    fn cell_probabilities(&self) -> Vec<f64> {
        gap_probabilities(self.beta - self.alpha, self.t)
    }
    fn sample_size(&self) -> u64 {
        self.n_gaps
    }
}

/// Serial test on non-overlapping pairs of digits in `0..d`.
///
/// Draws `2 n_pairs` digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Serial {
    d: u64,
    n_pairs: u64,
}

impl Serial {
    pub fn new(d: u64, n_pairs: u64) -> Result<Self, TestError> {
        if d < 2 {
            return Err(TestError::config("alphabet size must be at least 2"));
        }
        if n_pairs < 5 * d * d {
            return Err(TestError::config(format!("{n_pairs} pairs are fewer than 5 per cell for d = {d}")));
        }
        Ok(Self { d, n_pairs })
    }
}

fn pair_counts(stream: &mut dyn RandomStream, d: u64, n_pairs: u64) -> Result<Vec<u64>, TestError> {
    let dist = digits(d);
    let mut counts = vec![0u64; (d * d) as usize];
    for _ in 0..n_pairs {
        let q = dist.sample(stream)? as u64;
        let r = dist.sample(stream)? as u64;
        counts[(q * d + r) as usize] += 1;
    }
    Ok(counts)
}

impl TestCase for Serial {
    fn test_name(&self) -> String {
        "Serial-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Alphabet Size", self.d), Parameter::new("Number of Pairs", self.n_pairs)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = pair_counts(stream, self.d, self.n_pairs)?;
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Serial {
    fn cell_probabilities(&self) -> Vec<f64> {
        let cells = (self.d * self.d) as usize;
        vec![1.0 / cells as f64; cells]
    }
    fn sample_size(&self) -> u64 {
        self.n_pairs
    }
}

const STIRLING_5: [u64; 5] = [1, 15, 25, 10, 1];

/// `P(r distinct digits in a hand of 5)` for `r = 1..=min(5, d)`.
pub fn poker_probabilities(d: u64) -> Vec<f64> {
    let d = d as f64;
    (1..=5usize)
        .take_while(|&r| r as f64 <= d)
        .map(|r| {
            let falling: f64 = (0..r).map(|i| d - i as f64).product();
            STIRLING_5[r - 1] as f64 * falling / d.powi(5)
        })
        .collect()
}

/// Poker test: number of distinct digits among 5 per hand.
///
/// Draws `5 n_hands` digits.
#[derive(Debug, Clone, PartialEq)]
pub struct Poker {
    d: u64,
    n_hands: u64,
}

impl Poker {
    pub fn new(d: u64, n_hands: u64) -> Result<Self, TestError> {
        if d < 2 {
            return Err(TestError::config("alphabet size must be at least 2"));
        }
        if n_hands == 0 {
            return Err(TestError::config("need at least one hand"));
        }
        Ok(Self { d, n_hands })
    }

    fn counts(&self, stream: &mut dyn RandomStream) -> Result<Vec<u64>, TestError> {
        let dist = digits(self.d);
        let mut counts = vec![0u64; self.d.min(5) as usize];
        let mut hand = [0i64; 5];
        for _ in 0..self.n_hands {
            for v in hand.iter_mut() {
                *v = dist.sample(stream)?;
            }
            let distinct = (0..5).filter(|&i| !hand[..i].contains(&hand[i])).count();
            counts[distinct - 1] += 1;
        }
        Ok(counts)
    }
}

impl TestCase for Poker {
    fn test_name(&self) -> String {
        "Poker-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Alphabet Size", self.d), Parameter::new("Number of Hands", self.n_hands)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = self.counts(stream)?;
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Poker {
    fn cell_probabilities(&self) -> Vec<f64> {
        poker_probabilities(self.d)
    }
    fn sample_size(&self) -> u64 {
        self.n_hands
    }
}

/// Segment-length probabilities for `r = d..t-1` followed by the tail `r >= t`.
///
/// Tracks the distribution of the number of distinct digits seen so far;
/// the tail is the mass that has not completed after `t - 1` draws.
pub fn coupon_collector_probabilities(d: u64, t: u64) -> Vec<f64> {
    let d_us = d as usize;
    let df = d as f64;
    let mut seen = vec![0.0f64; d_us + 1];
    seen[0] = 1.0;
    let mut probs = Vec::new();
    for r in 1..t {
        if r >= d {
            // completing on draw r needs d - 1 distinct before it and a new digit
            probs.push(seen[d_us - 1] / df);
        }
        let mut next = vec![0.0f64; d_us + 1];
        for j in 0..d_us {
            next[j] += seen[j] * j as f64 / df;
            next[j + 1] += seen[j] * (df - j as f64) / df;
        }
        seen = next;
        seen[d_us] = 0.0;
    }
    probs.push(seen[..d_us].iter().sum());
    probs
}

/// Coupon collector test: draws needed to see all `d` digits.
///
/// Segment lengths are random; a segment longer than 10⁶ draws aborts.
#[derive(Debug, Clone, PartialEq)]
pub struct CouponCollector {
    d: u64,
    t: u64,
    n_segments: u64,
}

impl CouponCollector {
    pub fn new(d: u64, t: u64, n_segments: u64) -> Result<Self, TestError> {
        if d < 2 {
            return Err(TestError::config("alphabet size must be at least 2"));
        }
        if t <= d {
            return Err(TestError::config(format!("maximum length {t} must exceed alphabet size {d}")));
        }
        if n_segments == 0 {
            return Err(TestError::config("need at least one segment"));
        }
        Ok(Self { d, t, n_segments })
    }

    fn counts(&self, stream: &mut dyn RandomStream) -> Result<Vec<u64>, TestError> {
        let dist = digits(self.d);
        let mut counts = vec![0u64; (self.t - self.d + 1) as usize];
        let mut seen = vec![false; self.d as usize];
        for _ in 0..self.n_segments {
            seen.iter_mut().for_each(|s| *s = false);
            let mut distinct = 0;
            let mut r = 0u64;
            while distinct < self.d {
                let v = dist.sample(stream)? as usize;
                r += 1;
                if !seen[v] {
                    seen[v] = true;
                    distinct += 1;
                }
                if r > MAX_SEGMENT {
                    return Err(TestError::Aborted(format!("segment not complete after {MAX_SEGMENT} draws")));
                }
            }
            counts[(r.min(self.t) - self.d) as usize] += 1;
        }
        Ok(counts)
    }
}

impl TestCase for CouponCollector {
    fn test_name(&self) -> String {
        "Coupon-Collector-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Alphabet Size", self.d),
            Parameter::new("Maximum Length", self.t),
            Parameter::new("Number of Segments", self.n_segments),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = self.counts(stream)?;
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for CouponCollector {
    fn cell_probabilities(&self) -> Vec<f64> {
        coupon_collector_probabilities(self.d, self.t)
    }
    fn sample_size(&self) -> u64 {
        self.n_segments
    }
}

/// Index in `0..t!` of the order pattern of `values` (Knuth's algorithm P).
///
/// Equal values compare by position: the earlier one is the smaller.
pub fn permutation_rank(values: &[f64]) -> usize {
    let mut u: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
    let greater = |a: (f64, usize), b: (f64, usize)| a.0 > b.0 || (a.0 == b.0 && a.1 > b.1);
    let mut f = 0usize;
    let mut r = u.len();
    while r > 1 {
        let mut s = 0;
        for i in 1..r {
            if greater(u[i], u[s]) {
                s = i;
            }
        }
        f = r * f + s;
        u.swap(r - 1, s);
        r -= 1;
    }
    f
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Permutation test: order patterns of `t` consecutive draws.
///
/// Draws `t n_groups` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Permutation {
    t: u64,
    n_groups: u64,
}

impl Permutation {
    pub fn new(t: u64, n_groups: u64) -> Result<Self, TestError> {
        if !(2..=8).contains(&t) {
            return Err(TestError::config(format!("group size {t} outside 2..=8")));
        }
        if n_groups == 0 {
            return Err(TestError::config("need at least one group"));
        }
        Ok(Self { t, n_groups })
    }
}

impl TestCase for Permutation {
    fn test_name(&self) -> String {
        "Permutation-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Group Size", self.t), Parameter::new("Number of Groups", self.n_groups)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut counts = vec![0u64; factorial(self.t) as usize];
        let mut group = vec![0.0; self.t as usize];
        for _ in 0..self.n_groups {
            for v in group.iter_mut() {
                *v = uniform01(stream)?;
            }
            counts[permutation_rank(&group)] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Permutation {
    fn cell_probabilities(&self) -> Vec<f64> {
        let cells = factorial(self.t) as usize;
        vec![1.0 / cells as f64; cells]
    }
    fn sample_size(&self) -> u64 {
        self.n_groups
    }
}

/// Longest run length counted separately; longer runs share the last cell.
const MAX_RUN: usize = 6;

/// `1/r! - 1/(r+1)!` for `r = 1..5`, then `1/6!`.
pub fn runs_probabilities() -> Vec<f64> {
    let inv_fact = |r: u64| 1.0 / factorial(r) as f64;
    let mut probs: Vec<f64> = (1..MAX_RUN as u64).map(|r| inv_fact(r) - inv_fact(r + 1)).collect();
    probs.push(inv_fact(MAX_RUN as u64));
    probs
}

/// Runs-up test.
///
/// A run is a strictly ascending stretch of draws. It ends at the first
/// draw that does not exceed its predecessor, which is discarded, or after
/// six values, when the next draw is discarded. Discarding makes successive
/// runs independent. Runs therefore use disjoint draws: length plus one each.
#[derive(Debug, Clone, PartialEq)]
pub struct Runs {
    n_runs: u64,
}

impl Runs {
    pub fn new(n_runs: u64) -> Result<Self, TestError> {
        if n_runs == 0 {
            return Err(TestError::config("need at least one run"));
        }
        Ok(Self { n_runs })
    }
}

fn next_run_length(stream: &mut dyn RandomStream) -> Result<usize, TestError> {
    let mut prev = uniform01(stream)?;
    let mut len = 1;
    loop {
        let u = uniform01(stream)?;
        if len == MAX_RUN || u <= prev {
            return Ok(len);
        }
        len += 1;
        prev = u;
    }
}

impl TestCase for Runs {
    fn test_name(&self) -> String {
        "Run-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Runs", self.n_runs)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut counts = vec![0u64; MAX_RUN];
        for _ in 0..self.n_runs {
            counts[next_run_length(stream)? - 1] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Runs {
    fn cell_probabilities(&self) -> Vec<f64> {
        runs_probabilities()
    }
    fn sample_size(&self) -> u64 {
        self.n_runs
    }
}

/// Maximum-of-t test: `(max of t draws)^t` is uniform under the null.
///
/// Draws `t n_groups` values.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxOfT {
    t: u64,
    n_groups: u64,
}

impl MaxOfT {
    pub fn new(t: u64, n_groups: u64) -> Result<Self, TestError> {
        if t == 0 || n_groups == 0 {
            return Err(TestError::config("group size and group count must be positive"));
        }
        Ok(Self { t, n_groups })
    }
}

impl TestCase for MaxOfT {
    fn test_name(&self) -> String {
        "Maximum-of-t-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Group Size", self.t), Parameter::new("Number of Groups", self.n_groups)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut v = Vec::with_capacity(self.n_groups as usize);
        for _ in 0..self.n_groups {
            let mut max = 0.0f64;
            for _ in 0..self.t {
                max = max.max(uniform01(stream)?);
            }
            v.push(max.powi(self.t as i32));
        }
        Ok(RunOutput::single(ks_uniform_test(&v)?))
    }
}

/// Exact distribution of the collision count `C` for `n` balls in `m` urns.
///
/// Entry `c` is `P(C = c)`. Entries below 1e-300 at the upper end are dropped;
/// the result always covers the bulk of the distribution.
pub fn collision_distribution(m: u64, n: u64) -> Vec<f64> {
    let mf = m as f64;
    let mut p = vec![1.0f64];
    for j in 0..n {
        // j balls thrown; with c collisions, j - c urns are occupied
        let mut next = vec![0.0f64; p.len() + 1];
        for (c, &pc) in p.iter().enumerate() {
            let occupied = (j - c as u64) as f64;
            next[c] += pc * (1.0 - occupied / mf);
            next[c + 1] += pc * occupied / mf;
        }
        while next.len() > 1 && *next.last().unwrap() < 1e-300 {
            next.pop();
        }
        p = next;
    }
    p
}

/// Collision test: `n` balls thrown into `m` urns via `⌊u·m⌋`.
///
/// Draws exactly `n` values. Reports `P(C <= c)` and `P(C < c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Collision {
    m: u64,
    n: u64,
}

impl Collision {
    pub fn new(m: u64, n: u64) -> Result<Self, TestError> {
        if m < 2 || n == 0 {
            return Err(TestError::config("need at least 2 urns and 1 ball"));
        }
        if n >= m {
            return Err(TestError::config(format!("{n} balls do not fit sparsely into {m} urns")));
        }
        Ok(Self { m, n })
    }
}

impl TestCase for Collision {
    fn test_name(&self) -> String {
        "Collision-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Urns", self.m), Parameter::new("Number of Balls", self.n)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut occupied = vec![0u64; self.m.div_ceil(64) as usize];
        let mut collisions = 0u64;
        for _ in 0..self.n {
            let u = uniform01(stream)?;
            let urn = ((u * self.m as f64) as u64).min(self.m - 1);
            let (word, bit) = ((urn / 64) as usize, urn % 64);
            if occupied[word] & (1 << bit) != 0 {
                collisions += 1;
            } else {
                occupied[word] |= 1 << bit;
            }
        }
        let dist = collision_distribution(self.m, self.n);
        let c = collisions as usize;
        let p_lt: f64 = dist.iter().take(c).sum();
        let p_le = if c < dist.len() { p_lt + dist[c] } else { p_lt };
        Ok(RunOutput::single(StatisticResult::exact(collisions as f64, p_le.min(1.0), p_lt.min(1.0))))
    }
}

/// Mean and standard deviation of the circular serial correlation under the null.
pub fn serial_correlation_moments(n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mu = -1.0 / (nf - 1.0);
    let sigma = (nf * (nf - 3.0) / (nf + 1.0)).sqrt() / (nf - 1.0);
    (mu, sigma)
}

/// Circular lag-1 serial correlation of `n` draws.
///
/// Draws exactly `n` values.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialCorrelation {
    n: u64,
}

impl SerialCorrelation {
    pub fn new(n: u64) -> Result<Self, TestError> {
        if n < 4 {
            return Err(TestError::config("need at least 4 numbers"));
        }
        Ok(Self { n })
    }
}

impl TestCase for SerialCorrelation {
    fn test_name(&self) -> String {
        "Serial-Correlation-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Numbers", self.n)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let u = (0..self.n).map(|_| uniform01(stream)).collect::<Result<Vec<_>, _>>()?;
        let n = self.n as f64;
        let sum: f64 = u.iter().sum();
        let sum_sq: f64 = u.iter().map(|x| x * x).sum();
        let lagged: f64 = u.iter().zip(u.iter().cycle().skip(1)).map(|(a, b)| a * b).sum();
        let denominator = n * sum_sq - sum * sum;
        if denominator <= 1e-12 * n * sum_sq {
            return Err(TestError::Aborted("sample variance is zero".into()));
        }
        let correlation = (n * lagged - sum * sum) / denominator;
        let (mu, sigma) = serial_correlation_moments(self.n);
        let z = (correlation - mu) / sigma;
        let mut out = RunOutput::single(StatisticResult::gaussian(z, gaussian_two_sided(z)));
        out.diagnostics.push(Parameter::new("Correlation", crate::report::format_number(correlation)));
        Ok(out)
    }
}
