//! Tests in the style of Marsaglia's Diehard battery.

use num_rational::Ratio;

use super::{pooled_chi_square, CellProbabilities, Parameter, RunOutput, TestCase, TestError};
use crate::genkit::{uniform01, BitReader, RandomStream, UniformInt};
use crate::report::format_number;
use crate::stats::{gaussian_two_sided, ks_uniform_test, StatisticResult};

/// Poisson cell probabilities for `0..k` plus the tail `>= k`, with `k`
/// far enough out that the tail is negligible but still positive.
fn poisson_cells(lambda: f64) -> Vec<f64> {
    let k = (lambda + 8.0 * lambda.sqrt() + 8.0).ceil() as usize;
    let mut pmf = Vec::with_capacity(k + 200);
    let mut p = (-lambda).exp();
    for y in 0..k + 200 {
        pmf.push(p);
        p *= lambda / (y + 1) as f64;
    }
    let tail: f64 = pmf[k..].iter().sum();
    pmf.truncate(k);
    pmf.push(tail);
    pmf
}

/// Birthday spacings test.
///
/// Each repetition draws `n` birthdays in `0..m`, sorts them and counts the
/// repeated values `Y` among the sorted spacings. `Y` is asymptotically
/// Poisson with mean `n³/(4m)`. Draws `n reps` integers.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthdaySpacings {
    m: u64,
    n: u64,
    reps: u64,
}

impl BirthdaySpacings {
    pub fn new(m: u64, n: u64, reps: u64) -> Result<Self, TestError> {
        if m < 2 || m > i64::MAX as u64 {
            return Err(TestError::config(format!("day count {m} out of range")));
        }
        if n < 3 || reps == 0 {
            return Err(TestError::config("need at least 3 birthdays and 1 repetition"));
        }
        let s = Self { m, n, reps };
        if s.lambda() > 100.0 {
            return Err(TestError::config(format!("mean {} exceeds 100", s.lambda())));
        }
        Ok(s)
    }

    pub fn lambda(&self) -> f64 {
        (self.n as f64).powi(3) / (4.0 * self.m as f64)
    }
}

fn duplicate_spacings(birthdays: &mut [i64]) -> usize {
    birthdays.sort_unstable();
    let mut spacings: Vec<i64> = birthdays.windows(2).map(|w| w[1] - w[0]).collect();
    spacings.sort_unstable();
    spacings.windows(2).filter(|w| w[0] == w[1]).count()
}

impl TestCase for BirthdaySpacings {
    fn test_name(&self) -> String {
        "Birthday-Spacings-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Number of Days", self.m),
            Parameter::new("Number of Birthdays", self.n),
            Parameter::new("Repetitions", self.reps),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let dist = UniformInt::new(0, self.m as i64 - 1).expect("m >= 2");
        let probs = self.cell_probabilities();
        let last = probs.len() - 1;
        let mut counts = vec![0u64; probs.len()];
        let mut birthdays = vec![0i64; self.n as usize];
        for _ in 0..self.reps {
            for b in birthdays.iter_mut() {
                *b = dist.sample(stream)?;
            }
            counts[duplicate_spacings(&mut birthdays).min(last)] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, probs)?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for BirthdaySpacings {
    fn cell_probabilities(&self) -> Vec<f64> {
        poisson_cells(self.lambda())
    }
    fn sample_size(&self) -> u64 {
        self.reps
    }
}

/// Rank over GF(2) of a matrix given as row bit masks of width `cols`.
pub fn gf2_rank(rows: &[u64], cols: u32) -> u32 {
    let mut m = rows.to_vec();
    let mut rank = 0usize;
    for bit in (0..cols).rev() {
        let mask = 1u64 << bit;
        let Some(pivot) = (rank..m.len()).find(|&i| m[i] & mask != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        for i in 0..m.len() {
            if i != rank && m[i] & mask != 0 {
                m[i] ^= m[rank];
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank as u32
}

/// Number of `rows × cols` matrices over GF(2) of each rank, when the
/// total `2^(rows·cols)` fits in 64 bits.
fn binary_rank_counts(rows: u32, cols: u32) -> Option<Vec<i128>> {
    if rows * cols > 64 {
        return None;
    }
    let full = rows.min(cols);
    let pow = |e: u32| 1i128 << e;
    let counts = (0..=full)
        .map(|r| {
            // ∏_{i<r} (2^rows - 2^i)(2^cols - 2^i) / (2^r - 2^i)
            let mut c = Ratio::from_integer(1i128);
            for i in 0..r {
                c *= Ratio::new((pow(rows) - pow(i)) * (pow(cols) - pow(i)), pow(r) - pow(i));
            }
            debug_assert!(c.is_integer());
            c.to_integer()
        })
        .collect();
    Some(counts)
}

/// `P(rank = r)` for `r = 0..=min(rows, cols)` of a uniform random binary matrix.
///
/// Exact (via integer counts) for matrices of at most 64 entries.
pub fn binary_rank_probabilities(rows: u32, cols: u32) -> Vec<f64> {
    if let Some(counts) = binary_rank_counts(rows, cols) {
        let total = 2f64.powi((rows * cols) as i32);
        return counts.iter().map(|&c| c as f64 / total).collect();
    }
    let (m, n) = (rows as i32, cols as i32);
    (0..=rows.min(cols) as i32)
        .map(|r| {
            let mut p = 2f64.powi(r * (m + n - r) - m * n);
            for i in 0..r {
                p *= (1.0 - 2f64.powi(i - m)) * (1.0 - 2f64.powi(i - n)) / (1.0 - 2f64.powi(i - r));
            }
            p
        })
        .collect()
}

/// Binary matrix rank test.
///
/// Matrices are filled row by row from consecutive stream bits (most
/// significant bit of each word first). Draws `rows·cols·n_matrices` bits.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRank {
    rows: u32,
    cols: u32,
    n_matrices: u64,
}

impl BinaryRank {
    pub fn new(rows: u32, cols: u32, n_matrices: u64) -> Result<Self, TestError> {
        if rows == 0 || cols == 0 || rows > 64 || cols > 64 {
            return Err(TestError::config(format!("{rows}x{cols} matrices are not supported (1..=64)")));
        }
        if n_matrices == 0 {
            return Err(TestError::config("need at least one matrix"));
        }
        Ok(Self { rows, cols, n_matrices })
    }

    /// Cell of a rank: full, full-1, full-2, then everything lower.
    fn cell(&self, rank: u32) -> usize {
        let full = self.rows.min(self.cols);
        ((full - rank) as usize).min(self.cells() - 1)
    }

    fn cells(&self) -> usize {
        (self.rows.min(self.cols) as usize + 1).min(4)
    }
}

impl TestCase for BinaryRank {
    fn test_name(&self) -> String {
        format!("Binary-Rank-{}x{}-Test", self.rows, self.cols)
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Rows", self.rows),
            Parameter::new("Columns", self.cols),
            Parameter::new("Number of Matrices", self.n_matrices),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut reader = BitReader::new(stream);
        let mut counts = vec![0u64; self.cells()];
        let mut matrix = vec![0u64; self.rows as usize];
        for _ in 0..self.n_matrices {
            for row in matrix.iter_mut() {
                *row = reader.next_bits(self.cols)?;
            }
            counts[self.cell(gf2_rank(&matrix, self.cols))] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for BinaryRank {
    fn cell_probabilities(&self) -> Vec<f64> {
        let by_rank = binary_rank_probabilities(self.rows, self.cols);
        let mut cells = vec![0.0; self.cells()];
        for (rank, p) in by_rank.iter().enumerate() {
            cells[self.cell(rank as u32)] += p;
        }
        cells
    }
    fn sample_size(&self) -> u64 {
        self.n_matrices
    }
}

const PARKING_MEAN: f64 = 3523.0;
const PARKING_SIGMA: f64 = 21.9;

/// Cars parked when unit squares centred on `points` arrive in order and
/// each one is kept unless it overlaps an earlier kept one.
fn park(points: impl Iterator<Item = (f64, f64)>, side: f64) -> usize {
    let dim = side.ceil() as usize + 1;
    let mut grid: Vec<Vec<(f64, f64)>> = vec![Vec::new(); dim * dim];
    let mut parked = 0;
    for (x, y) in points {
        let (cx, cy) = ((x as usize).min(dim - 1), (y as usize).min(dim - 1));
        let crash = (cx.saturating_sub(1)..=(cx + 1).min(dim - 1)).any(|gx| {
            (cy.saturating_sub(1)..=(cy + 1).min(dim - 1))
                .any(|gy| grid[gx * dim + gy].iter().any(|&(px, py)| (x - px).abs() < 1.0 && (y - py).abs() < 1.0))
        });
        if !crash {
            grid[cx * dim + cy].push((x, y));
            parked += 1;
        }
    }
    parked
}

/// Parking lot test with the Diehard calibration `k ~ N(3523, 21.9²)`.
///
/// The constants are calibrated for 12000 attempts on a 100 × 100 lot.
/// Draws `2 attempts` values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParkingLot {
    attempts: u64,
    side: f64,
}

impl ParkingLot {
    pub fn new(attempts: u64, side: f64) -> Result<Self, TestError> {
        if attempts == 0 || !(side > 0.0 && side.is_finite()) {
            return Err(TestError::config("need positive attempts and side length"));
        }
        Ok(Self { attempts, side })
    }
}

impl TestCase for ParkingLot {
    fn test_name(&self) -> String {
        "Parking-Lot-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Attempts", self.attempts), Parameter::new("Side Length", format_number(self.side))]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut points = Vec::with_capacity(self.attempts as usize);
        for _ in 0..self.attempts {
            let x = self.side * uniform01(stream)?;
            let y = self.side * uniform01(stream)?;
            points.push((x, y));
        }
        let k = park(points.into_iter(), self.side);
        let z = (k as f64 - PARKING_MEAN) / PARKING_SIGMA;
        let mut out = RunOutput::single(StatisticResult::gaussian(z, gaussian_two_sided(z)));
        out.diagnostics.push(Parameter::new("Parked Cars", k));
        Ok(out)
    }
}

const MIN_DISTANCE_MEAN: f64 = 0.995;

/// Smallest squared distance between any two points.
fn min_squared_distance(points: &mut [(f64, f64)]) -> f64 {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let dx = points[j].0 - points[i].0;
            if dx * dx >= best {
                break;
            }
            let dy = points[j].1 - points[i].1;
            best = best.min(dx * dx + dy * dy);
        }
    }
    best
}

/// `1 - exp(-d²/0.995)`, uniform under the null for the default layout.
pub fn minimum_distance_transform(d2: f64) -> f64 {
    1.0 - (-d2 / MIN_DISTANCE_MEAN).exp()
}

/// Minimum distance test; the calibration constant 0.995 is the mean
/// minimum squared distance for 8000 points in a 10000 × 10000 square.
/// Draws `2 points reps` values.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimumDistance {
    points: u64,
    side: f64,
    reps: u64,
}

impl MinimumDistance {
    pub fn new(points: u64, side: f64, reps: u64) -> Result<Self, TestError> {
        if points < 2 {
            return Err(TestError::config("need at least 2 points"));
        }
        if reps == 0 || !(side > 0.0 && side.is_finite()) {
            return Err(TestError::config("need positive repetitions and side length"));
        }
        Ok(Self { points, side, reps })
    }
}

impl TestCase for MinimumDistance {
    fn test_name(&self) -> String {
        "Minimum-Distance-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![
            Parameter::new("Number of Points", self.points),
            Parameter::new("Side Length", format_number(self.side)),
            Parameter::new("Repetitions", self.reps),
        ]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut u = Vec::with_capacity(self.reps as usize);
        let mut points = vec![(0.0, 0.0); self.points as usize];
        for _ in 0..self.reps {
            for p in points.iter_mut() {
                *p = (self.side * uniform01(stream)?, self.side * uniform01(stream)?);
            }
            u.push(minimum_distance_transform(min_squared_distance(&mut points)));
        }
        Ok(RunOutput::single(ks_uniform_test(&u)?))
    }
}

/// Null probabilities of the squeeze iteration count `j`, cells `j <= 6`,
/// `7`, ..., `47`, `j >= 48`.
///
/// Computed exactly from the distribution of the number of steps of
/// `k ← ⌈k·u⌉` from `k = 2³¹` to 1.
#[allow(clippy::excessive_precision)]
pub const SQUEEZE_TABLE: [f64; 43] = [
    2.103251908198968e-5,
    5.779251310152523e-5,
    0.00017553783343018786,
    0.00046732309577712248,
    0.0011078273101791797,
    0.0023678432143498963,
    0.0046094452158144764,
    0.0082411665031564457,
    0.013627817804795745,
    0.020968501478077258,
    0.03017612875402281,
    0.040801978271768919,
    0.052042038682822917,
    0.062838288097294319,
    0.072056379806403875,
    0.078694514983236336,
    0.082067555216496142,
    0.081919347120209214,
    0.078440075202767234,
    0.072194108929333208,
    0.063986784387921246,
    0.05470930137351206,
    0.04519851360991984,
    0.036136598323306746,
    0.02800026874184059,
    0.02105566740254704,
    0.015386517951901306,
    0.010940197997908716,
    0.0075779580345806823,
    0.0051195622643909981,
    0.0033772564763492714,
    0.0021778643261224529,
    0.0013743850514281535,
    0.0008496976044858101,
    0.00051518157594696394,
    0.00030665731855760556,
    0.00017938960630151937,
    0.00010323895447169768,
    5.8511581125242785e-5,
    3.2691865261343778e-5,
    1.8025309189913982e-5,
    9.8177821107931728e-6,
    1.1209908701207225e-5,
];

const SQUEEZE_MAX_STEPS: u64 = 10_000;

/// Steps of `k ← ⌈k·u⌉` from `2³¹` until `k <= 1`.
pub fn squeeze_steps(stream: &mut dyn RandomStream) -> Result<u64, TestError> {
    let mut k: u64 = 1 << 31;
    let mut j = 0;
    while k > 1 {
        k = (k as f64 * uniform01(stream)?).ceil() as u64;
        j += 1;
        if j > SQUEEZE_MAX_STEPS {
            return Err(TestError::Aborted(format!("game exceeded {SQUEEZE_MAX_STEPS} iterations")));
        }
    }
    Ok(j)
}

/// Squeeze test. Draws a random number of values, about 23 per game.
#[derive(Debug, Clone, PartialEq)]
pub struct Squeeze {
    games: u64,
}

impl Squeeze {
    pub fn new(games: u64) -> Result<Self, TestError> {
        if games == 0 {
            return Err(TestError::config("need at least one game"));
        }
        Ok(Self { games })
    }
}

impl TestCase for Squeeze {
    fn test_name(&self) -> String {
        "Squeeze-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Games", self.games)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let mut counts = vec![0u64; SQUEEZE_TABLE.len()];
        for _ in 0..self.games {
            let j = squeeze_steps(stream)?;
            counts[(j.clamp(6, 48) - 6) as usize] += 1;
        }
        Ok(RunOutput::single(pooled_chi_square(counts, self.cell_probabilities())?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Squeeze {
    fn cell_probabilities(&self) -> Vec<f64> {
        SQUEEZE_TABLE.to_vec()
    }
    fn sample_size(&self) -> u64 {
        self.games
    }
}

/// Number of the 36 dice outcomes summing to `s`.
fn dice_ways(s: i64) -> i64 {
    6 - (s - 7).abs()
}

const POINTS: [i64; 6] = [4, 5, 6, 8, 9, 10];

/// Exact probability of winning a game of craps.
pub fn craps_win_probability() -> Ratio<i64> {
    let p = |s: i64| Ratio::new(dice_ways(s), 36);
    let mut win = p(7) + p(11);
    for s in POINTS {
        // make the point before a seven
        win += p(s) * p(s) / (p(s) + p(7));
    }
    win
}

const CRAPS_THROW_CELLS: usize = 21;

/// Probabilities of a game lasting `1, ..., 20` and at least 21 throws.
pub fn craps_throw_probabilities() -> Vec<f64> {
    let p = |s: i64| dice_ways(s) as f64 / 36.0;
    let mut cells = vec![0.0; CRAPS_THROW_CELLS];
    cells[0] = p(2) + p(3) + p(7) + p(11) + p(12);
    for s in POINTS {
        // after the come-out, each throw ends the game with probability q
        let q = p(s) + p(7);
        for (t, cell) in cells.iter_mut().enumerate().take(CRAPS_THROW_CELLS - 1).skip(1) {
            *cell += p(s) * (1.0 - q).powi(t as i32 - 1) * q;
        }
        cells[CRAPS_THROW_CELLS - 1] += p(s) * (1.0 - q).powi(CRAPS_THROW_CELLS as i32 - 2);
    }
    cells
}

const CRAPS_MAX_THROWS: u64 = 1_000_000;

/// Plays one game; returns whether it was won and the number of throws.
fn play_craps(stream: &mut dyn RandomStream, die: &UniformInt) -> Result<(bool, u64), TestError> {
    let mut throw = || -> Result<i64, TestError> { Ok(2 + die.sample(stream)? + die.sample(stream)?) };
    let first = throw()?;
    match first {
        7 | 11 => return Ok((true, 1)),
        2 | 3 | 12 => return Ok((false, 1)),
        _ => {}
    }
    let mut throws = 1;
    loop {
        let s = throw()?;
        throws += 1;
        if s == first {
            return Ok((true, throws));
        }
        if s == 7 {
            return Ok((false, throws));
        }
        if throws > CRAPS_MAX_THROWS {
            return Err(TestError::Aborted(format!("game exceeded {CRAPS_MAX_THROWS} throws")));
        }
    }
}

/// Craps test: a Gaussian test on the number of wins and a chi-square test
/// on the throws per game. Dice are `1 + uniform_int(0, 5)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Craps {
    games: u64,
}

impl Craps {
    pub fn new(games: u64) -> Result<Self, TestError> {
        if games == 0 {
            return Err(TestError::config("need at least one game"));
        }
        Ok(Self { games })
    }
}

impl TestCase for Craps {
    fn test_name(&self) -> String {
        "Craps-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Games", self.games)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let die = UniformInt::new(0, 5).expect("valid interval");
        let mut wins = 0u64;
        let mut throws = vec![0u64; CRAPS_THROW_CELLS];
        for _ in 0..self.games {
            let (won, t) = play_craps(stream, &die)?;
            wins += won as u64;
            throws[(t.min(CRAPS_THROW_CELLS as u64) - 1) as usize] += 1;
        }
        let pw = craps_win_probability();
        let pw = *pw.numer() as f64 / *pw.denom() as f64;
        let n = self.games as f64;
        let z = (wins as f64 - n * pw) / (n * pw * (1.0 - pw)).sqrt();
        let wins_result = StatisticResult::gaussian(z, gaussian_two_sided(z)).with_label("wins");
        let throws_result = pooled_chi_square(throws, self.cell_probabilities())?.with_label("throws");
        let mut out = RunOutput::from(vec![wins_result, throws_result]);
        out.diagnostics.push(Parameter::new("Wins", wins));
        Ok(out)
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for Craps {
    fn cell_probabilities(&self) -> Vec<f64> {
        craps_throw_probabilities()
    }
    fn sample_size(&self) -> u64 {
        self.games
    }
}

const MONKEY_BITS: u32 = 20;
const MONKEY_WORDS: u64 = 1 << 21;
const MONKEY_SIGMA: f64 = 428.0;

/// Expected number of 20-bit words missing from 2²¹ overlapping words.
pub fn monkey_expected_missing() -> f64 {
    (1u64 << MONKEY_BITS) as f64 * (-2.0f64).exp()
}

/// Monkey test on overlapping 20-bit words.
///
/// Draws `20 + 2²¹ - 1` bits and counts the words never seen.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Monkey20Bit;

impl Monkey20Bit {
    pub fn new() -> Self {
        Self
    }

    fn missing(stream: &mut dyn RandomStream) -> Result<u64, TestError> {
        let mut reader = BitReader::new(stream);
        let mask = (1u64 << MONKEY_BITS) - 1;
        let mut seen = vec![0u64; (1usize << MONKEY_BITS) / 64];
        let mut word = reader.next_bits(MONKEY_BITS - 1)?;
        let mut distinct = 0u64;
        for _ in 0..MONKEY_WORDS {
            word = ((word << 1) | reader.next_bit()?) & mask;
            let (i, b) = ((word / 64) as usize, word % 64);
            if seen[i] & (1 << b) == 0 {
                seen[i] |= 1 << b;
                distinct += 1;
            }
        }
        Ok((1u64 << MONKEY_BITS) - distinct)
    }
}

impl TestCase for Monkey20Bit {
    fn test_name(&self) -> String {
        "Monkey-20bit-Test".into()
    }
    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Word Bits", MONKEY_BITS), Parameter::new("Number of Words", MONKEY_WORDS)]
    }
    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let missing = Self::missing(stream)?;
        let z = (missing as f64 - monkey_expected_missing()) / MONKEY_SIGMA;
        let mut out = RunOutput::single(StatisticResult::gaussian(z, gaussian_two_sided(z)));
        out.diagnostics.push(Parameter::new("Missing Words", missing));
        Ok(out)
    }
}
