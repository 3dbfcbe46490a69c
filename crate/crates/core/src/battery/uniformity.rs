//! Equidistribution tests.

use super::{CellProbabilities, Parameter, RunOutput, TestCase, TestError};
use crate::genkit::{uniform01, RandomStream};
use crate::stats::{chi_square_test, ks_uniform_test, ChiSquareInput, StatisticResult};

/// Chi-square frequency test: `n` uniform01 draws binned into `k` equal cells.
///
/// Consumes exactly `n` raw draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ChisqrUniformity {
    n: u64,
    k: u64,
}

impl ChisqrUniformity {
    pub fn new(n: u64, k: u64) -> Result<Self, TestError> {
        if k < 2 {
            return Err(TestError::config(format!("need at least 2 classes, got {k}")));
        }
        if n < 5 * k {
            return Err(TestError::config(format!("{n} numbers are fewer than 5 per class for {k} classes")));
        }
        Ok(Self { n, k })
    }
}

fn bin_counts(stream: &mut dyn RandomStream, n: u64, k: u64) -> Result<Vec<u64>, TestError> {
    let mut counts = vec![0u64; k as usize];
    for _ in 0..n {
        let u = uniform01(stream)?;
        let cell = ((u * k as f64) as u64).min(k - 1);
        counts[cell as usize] += 1;
    }
    Ok(counts)
}

fn equiprobable_chi_square(counts: Vec<u64>) -> Result<StatisticResult, TestError> {
    let k = counts.len();
    let input = ChiSquareInput::new(counts, vec![1.0 / k as f64; k])?;
    Ok(chi_square_test(&input)?)
}

impl TestCase for ChisqrUniformity {
    fn test_name(&self) -> String {
        "Chi-Square-Uniformity-Test".into()
    }

    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Numbers", self.n), Parameter::new("Number of Classes", self.k)]
    }

    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let counts = bin_counts(stream, self.n, self.k)?;
        Ok(RunOutput::single(equiprobable_chi_square(counts)?))
    }

    fn chi_square_cells(&self) -> Option<&dyn CellProbabilities> {
        Some(self)
    }
}

impl CellProbabilities for ChisqrUniformity {
    fn cell_probabilities(&self) -> Vec<f64> {
        vec![1.0 / self.k as f64; self.k as usize]
    }
    fn sample_size(&self) -> u64 {
        self.n
    }
}

/// Kolmogorov-Smirnov test of `n` uniform01 draws against `F(x) = x`.
///
/// Consumes exactly `n` raw draws.
#[derive(Debug, Clone, PartialEq)]
pub struct KsUniformity {
    n: u64,
}

impl KsUniformity {
    pub fn new(n: u64) -> Result<Self, TestError> {
        if n == 0 {
            return Err(TestError::config("need at least one number"));
        }
        Ok(Self { n })
    }
}

impl TestCase for KsUniformity {
    fn test_name(&self) -> String {
        "KS-Uniformity-Test".into()
    }

    fn parameters(&self) -> Vec<Parameter> {
        vec![Parameter::new("Number of Numbers", self.n)]
    }

    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        let samples = (0..self.n).map(|_| uniform01(stream)).collect::<Result<Vec<_>, _>>()?;
        Ok(RunOutput::single(ks_uniform_test(&samples)?))
    }
}
