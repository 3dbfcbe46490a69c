//! Chi-square, Kolmogorov-Smirnov and Gaussian statistics with their p-values.
//!
//! All p-values are upper-tail probabilities in `[0, 1]`: a chi-square value
//! of `x` with `k` degrees of freedom maps to `P(X >= x)`, and a standardized
//! Gaussian deviation `z` maps to `P(Z >= z)`.

mod special;

pub use special::{binomial_pmf, erf, erfc, ln_choose, ln_gamma, regularized_gamma_p, regularized_gamma_q};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid chi-square input: {0}")]
    InvalidChiSquare(String),
    #[error("invalid Kolmogorov-Smirnov input: {0}")]
    InvalidKs(String),
    #[error("incomplete gamma did not converge for a={a}, x={x}")]
    NoConvergence { a: f64, x: f64 },
}

/// Observed cell counts against theoretical cell probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareInput {
    observed: Vec<u64>,
    probabilities: Vec<f64>,
    sample_size: u64,
}

impl ChiSquareInput {
    /// Validates the cell layout. The sample size is the sum of the counts.
    pub fn new(observed: Vec<u64>, probabilities: Vec<f64>) -> Result<Self, StatsError> {
        if observed.len() != probabilities.len() {
            return Err(StatsError::InvalidChiSquare(format!(
                "{} counts but {} probabilities",
                observed.len(),
                probabilities.len()
            )));
        }
        if observed.len() < 2 {
            return Err(StatsError::InvalidChiSquare("need at least two cells".into()));
        }
        if let Some(p) = probabilities.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(StatsError::InvalidChiSquare(format!("cell probability {p} outside (0, 1]")));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(StatsError::InvalidChiSquare(format!("cell probabilities sum to {total}")));
        }
        let sample_size: u64 = observed.iter().sum();
        if sample_size == 0 {
            return Err(StatsError::InvalidChiSquare("empty sample".into()));
        }
        Ok(Self { observed, probabilities, sample_size })
    }

    pub fn observed(&self) -> &[u64] {
        &self.observed
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn cells(&self) -> usize {
        self.observed.len()
    }

    /// Merges consecutive cells until every merged cell has an expected
    /// count of at least `min_expected`.
    ///
    /// Cells are accumulated left to right; a short remainder at the right end
    /// joins the last complete group. Callers order cells so that the sparse
    /// tail sits at the ends.
    pub fn pooled(&self, min_expected: f64) -> Result<Self, StatsError> {
        let n = self.sample_size as f64;
        let mut groups: Vec<(u64, f64)> = Vec::new();
        let mut acc = (0u64, 0.0f64);
        let mut open = false;
        for (&o, &p) in self.observed.iter().zip(&self.probabilities) {
            acc.0 += o;
            acc.1 += p;
            open = true;
            if acc.1 * n >= min_expected {
                groups.push(acc);
                acc = (0, 0.0);
                open = false;
            }
        }
        if open {
            match groups.last_mut() {
                Some(last) => {
                    last.0 += acc.0;
                    last.1 += acc.1;
                }
                None => groups.push(acc),
            }
        }
        if groups.len() < 2 {
            return Err(StatsError::InvalidChiSquare(format!(
                "sample of {} too small to form two cells with expected count >= {min_expected}",
                self.sample_size
            )));
        }
        let (observed, probabilities) = groups.into_iter().unzip();
        Self::new(observed, probabilities)
    }
}

/// Computes the chi-square statistic and its degrees of freedom `k - 1`.
pub fn chi_square_statistic(input: &ChiSquareInput) -> (f64, u64) {
    let n = input.sample_size as f64;
    let chi2 = input
        .observed
        .iter()
        .zip(&input.probabilities)
        .map(|(&o, &p)| {
            let e = n * p;
            let d = o as f64 - e;
            d * d / e
        })
        .sum::<f64>();
    (chi2.max(0.0), input.cells() as u64 - 1)
}

/// Upper-tail chi-square probability `Q(dof/2, chi2/2)`.
pub fn chi_square_pvalue(chi2: f64, dof: u64) -> Result<f64, StatsError> {
    if !chi2.is_finite() {
        return Err(StatsError::NonFinite("chi_square_pvalue"));
    }
    if dof == 0 {
        return Err(StatsError::Domain("chi-square needs at least one degree of freedom".into()));
    }
    if chi2 <= 0.0 {
        return Ok(1.0);
    }
    regularized_gamma_q(dof as f64 / 2.0, chi2 / 2.0)
}

/// Runs the chi-square backend end to end and packages the result.
pub fn chi_square_test(input: &ChiSquareInput) -> Result<StatisticResult, StatsError> {
    let (chi2, dof) = chi_square_statistic(input);
    let p = chi_square_pvalue(chi2, dof)?;
    Ok(StatisticResult::chi_square(chi2, dof, p))
}

/// One-sided KS statistics `K⁺` and `K⁻` for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsStatistic {
    pub k_plus: f64,
    pub k_minus: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsSide {
    Plus,
    Minus,
    TwoSided,
}

/// KS statistics of `samples` against the theoretical CDF `cdf`.
///
/// The sample is sorted internally; `cdf` must be non-decreasing on it.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsStatistic, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::InvalidKs("empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(StatsError::InvalidKs("sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let values: Vec<f64> = sorted.iter().map(|&x| cdf(x)).collect();
    if values.windows(2).any(|w| w[1] < w[0]) {
        return Err(StatsError::InvalidKs("theoretical CDF decreases on the sample".into()));
    }
    Ok(ks_statistic_from_cdf_values(&values))
}

/// KS statistics from already sorted CDF values `F(X_(i))`.
pub fn ks_statistic_from_cdf_values(sorted_cdf: &[f64]) -> KsStatistic {
    let n = sorted_cdf.len();
    let nf = n as f64;
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for (i, &f) in sorted_cdf.iter().enumerate() {
        plus = plus.max((i + 1) as f64 / nf - f);
        minus = minus.max(f - i as f64 / nf);
    }
    let root = nf.sqrt();
    KsStatistic { k_plus: root * plus, k_minus: root * minus, n }
}

/// Tail probability of a KS statistic.
///
/// One-sided tails use `exp(-2t²)·(1 - 2t/(3√n))`, reliable from roughly
/// n ≥ 100. The two-sided tail uses the Kolmogorov series at `max(K⁺, K⁻)`.
pub fn ks_pvalue(stat: &KsStatistic, side: KsSide) -> f64 {
    match side {
        KsSide::Plus => ks_one_sided_tail(stat.k_plus, stat.n),
        KsSide::Minus => ks_one_sided_tail(stat.k_minus, stat.n),
        KsSide::TwoSided => kolmogorov_tail(stat.k_plus.max(stat.k_minus)),
    }
}

fn ks_one_sided_tail(t: f64, n: usize) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let correction = 1.0 - 2.0 * t / (3.0 * (n as f64).sqrt());
    ((-2.0 * t * t).exp() * correction).clamp(0.0, 1.0)
}

/// `2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² t²)`, truncated once terms drop below 1e-12.
pub fn kolmogorov_tail(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    // The alternating series converges too slowly near zero; there the
    // tail is 1 to double precision.
    if t < 0.18 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=1000 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * t * t).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS against the uniform distribution on [0, 1), reporting both one-sided p-values.
pub fn ks_uniform_test(samples: &[f64]) -> Result<StatisticResult, StatsError> {
    let stat = ks_statistic(samples, |x| x.clamp(0.0, 1.0))?;
    Ok(StatisticResult::ks(&stat))
}

/// Upper-tail standard normal probability `1/2 - erf(x/√2)/2`.
///
/// Evaluated through `erfc` so that far-tail values keep relative precision.
pub fn gaussian_pvalue(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    (0.5 * erfc(x / std::f64::consts::SQRT_2)).clamp(0.0, 1.0)
}

/// Two-sided Gaussian p-value `2·p(|z|)`.
pub fn gaussian_two_sided(z: f64) -> f64 {
    (2.0 * gaussian_pvalue(z.abs())).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StatisticKind {
    ChiSquare,
    KolmogorovSmirnov,
    Gaussian,
    /// Exact discrete null distribution; carries `P(X <= x)` and `P(X < x)`.
    Exact,
    Meta,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetaMethod {
    /// KS of repeated p-values against uniform.
    IterateKs,
    /// Binomial test on the number of failures at one confidence level.
    CountFails { level: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statistic {
    ChiSquare { chi2: f64, dof: u64 },
    KolmogorovSmirnov { k_plus: f64, k_minus: f64 },
    Gaussian { value: f64 },
    Exact { value: f64 },
    Meta { method: MetaMethod, value: f64, repetitions: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PValue {
    pub name: String,
    pub value: f64,
}

/// A computed statistic with its named p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticResult {
    pub statistic: Statistic,
    pub p_values: Vec<PValue>,
    /// Distinguishes several results of one test, e.g. "wins" and "throws".
    pub label: Option<String>,
}

pub const P_CHI_SQUARE: &str = "probability";
pub const P_KS_PLUS: &str = "probability_plus";
pub const P_KS_MINUS: &str = "probability_minus";
pub const P_GAUSSIAN: &str = "probability";
pub const P_EXACT_LE: &str = "probability_le";
pub const P_EXACT_LT: &str = "probability_lt";
pub const P_META: &str = "probability";

fn pv(name: &str, value: f64) -> PValue {
    assert!(!value.is_nan(), "NaN p-value for {name}");
    PValue { name: name.to_string(), value: value.clamp(0.0, 1.0) }
}

impl StatisticResult {
    pub fn chi_square(chi2: f64, dof: u64, p: f64) -> Self {
        Self { statistic: Statistic::ChiSquare { chi2, dof }, p_values: vec![pv(P_CHI_SQUARE, p)], label: None }
    }

    pub fn ks(stat: &KsStatistic) -> Self {
        Self {
            statistic: Statistic::KolmogorovSmirnov { k_plus: stat.k_plus, k_minus: stat.k_minus },
            p_values: vec![
                pv(P_KS_PLUS, ks_pvalue(stat, KsSide::Plus)),
                pv(P_KS_MINUS, ks_pvalue(stat, KsSide::Minus)),
            ],
            label: None,
        }
    }

    pub fn gaussian(value: f64, p: f64) -> Self {
        Self { statistic: Statistic::Gaussian { value }, p_values: vec![pv(P_GAUSSIAN, p)], label: None }
    }

    /// `p_le = P(X <= value)`, `p_lt = P(X < value)` under the exact null.
    pub fn exact(value: f64, p_le: f64, p_lt: f64) -> Self {
        Self {
            statistic: Statistic::Exact { value },
            p_values: vec![pv(P_EXACT_LE, p_le), pv(P_EXACT_LT, p_lt)],
            label: None,
        }
    }

    pub fn meta(method: MetaMethod, value: f64, repetitions: u64, p: f64) -> Self {
        Self { statistic: Statistic::Meta { method, value, repetitions }, p_values: vec![pv(P_META, p)], label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn kind(&self) -> StatisticKind {
        match self.statistic {
            Statistic::ChiSquare { .. } => StatisticKind::ChiSquare,
            Statistic::KolmogorovSmirnov { .. } => StatisticKind::KolmogorovSmirnov,
            Statistic::Gaussian { .. } => StatisticKind::Gaussian,
            Statistic::Exact { .. } => StatisticKind::Exact,
            Statistic::Meta { .. } => StatisticKind::Meta,
        }
    }

    /// Headline statistic value (`chi2`, `max(K⁺, K⁻)`, z, ...).
    pub fn statistic_value(&self) -> f64 {
        match &self.statistic {
            Statistic::ChiSquare { chi2, .. } => *chi2,
            Statistic::KolmogorovSmirnov { k_plus, k_minus } => k_plus.max(*k_minus),
            Statistic::Gaussian { value } | Statistic::Exact { value } => *value,
            Statistic::Meta { value, .. } => *value,
        }
    }

    pub fn dof(&self) -> Option<u64> {
        match self.statistic {
            Statistic::ChiSquare { dof, .. } => Some(dof),
            _ => None,
        }
    }

    pub fn first_p(&self) -> f64 {
        self.p_values[0].value
    }

    pub fn p_named(&self, name: &str) -> Option<f64> {
        self.p_values.iter().find(|p| p.name == name).map(|p| p.value)
    }
}
