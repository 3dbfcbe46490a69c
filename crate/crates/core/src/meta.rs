//! Second-level tests: repeat a test and analyse its p-values.
//!
//! Repetitions continue on the stream they are given rather than reseeding,
//! so a meta outcome is reproducible from the stream's seed alone.

use crate::battery::{Parameter, RunOutput, TestCase, TestError};
use crate::genkit::RandomStream;
use crate::report::ConfidenceLevel;
use crate::stats::{binomial_pmf, kolmogorov_tail, ks_statistic, KsStatistic, MetaMethod, StatisticResult};

/// Fewest repetitions a meta test accepts.
pub const MIN_REPETITIONS: u64 = 10;

/// Largest share of inner runs that may abort before the meta test aborts.
pub const MAX_ABORTED_SHARE: f64 = 0.1;

/// Picks which p-value of an inner run is collected.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PValueSelector {
    /// First p-value of the first result.
    #[default]
    First,
    /// First p-value with this name, or the first p-value of the result with
    /// this label.
    Named(String),
}

impl PValueSelector {
    /// Returns the selected p-value and its name.
    pub fn select(&self, output: &RunOutput) -> Option<(String, f64)> {
        match self {
            PValueSelector::First => {
                let p = output.results.first()?.p_values.first()?;
                Some((p.name.clone(), p.value))
            }
            PValueSelector::Named(name) => {
                let by_name = output.results.iter().flat_map(|r| r.p_values.iter()).find(|p| &p.name == name);
                if let Some(p) = by_name {
                    return Some((p.name.clone(), p.value));
                }
                let r = output.results.iter().find(|r| r.label.as_deref() == Some(name.as_str()))?;
                let p = r.p_values.first()?;
                Some((format!("{name}.{}", p.name), p.value))
            }
        }
    }
}

/// What a meta test observed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaOutcome {
    pub inner_test_name: String,
    /// Completed inner runs; equals `per_run_p.len()`.
    pub repetitions: u64,
    pub per_run_p: Vec<f64>,
    /// Name of the collected p-value.
    pub p_value_name: String,
    /// One result for `iterate_test`, one per level for `count_fails_test`.
    pub meta_results: Vec<StatisticResult>,
    /// KS statistic of `per_run_p` (iterate only).
    pub ks: Option<KsStatistic>,
    /// Failed inner runs per level (count-fails only).
    pub fail_counts: Option<Vec<(ConfidenceLevel, u64)>>,
    pub aborted_runs: u64,
}

/// Two-sided KS of p-values against the uniform distribution.
///
/// `value` is `max(K⁺, K⁻)`; the p-value applies the small-sample scaling
/// `(√n + 0.12 + 0.11/√n)·D` to the Kolmogorov series.
pub fn meta_ks(p_values: &[f64]) -> Result<(StatisticResult, KsStatistic), TestError> {
    let stat = ks_statistic(p_values, |x| x.clamp(0.0, 1.0))?;
    let n = stat.n as f64;
    let root = n.sqrt();
    let d = stat.k_plus.max(stat.k_minus) / root;
    let p = kolmogorov_tail((root + 0.12 + 0.11 / root) * d);
    let result = StatisticResult::meta(MetaMethod::IterateKs, stat.k_plus.max(stat.k_minus), stat.n as u64, p);
    Ok((result, stat))
}

/// Two-sided binomial mid-p value for X ~ Bin(n, rate): twice the smaller of
/// `P(X < k) + P(X = k)/2` and `P(X > k) + P(X = k)/2`.
///
/// Splitting the point mass keeps the value close to uniform under the null,
/// so the upper-level verdict does not fire on every modal count.
pub fn binomial_two_sided(k: u64, n: u64, rate: f64) -> f64 {
    let pmf: Vec<f64> = (0..=n).map(|i| binomial_pmf(n, i, rate)).collect();
    let at = pmf[k as usize];
    let lower: f64 = pmf[..k as usize].iter().sum::<f64>() + 0.5 * at;
    let upper: f64 = pmf[k as usize + 1..].iter().sum::<f64>() + 0.5 * at;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Nominal probability that a single p-value fails at `level`.
pub fn nominal_fail_rate(level: ConfidenceLevel) -> f64 {
    if level.is_lower() {
        level.value()
    } else {
        1.0 - level.value()
    }
}

struct Repeated {
    outputs: Vec<RunOutput>,
    aborted: u64,
}

fn repeat(inner: &dyn TestCase, repetitions: u64, stream: &mut dyn RandomStream) -> Result<Repeated, TestError> {
    if repetitions < MIN_REPETITIONS {
        return Err(TestError::config(format!("need at least {MIN_REPETITIONS} repetitions, got {repetitions}")));
    }
    let mut outputs = Vec::with_capacity(repetitions as usize);
    let mut aborted = 0u64;
    let mut last_error = None;
    for _ in 0..repetitions {
        match inner.run(stream) {
            Ok(out) => outputs.push(out),
            Err(e) => {
                aborted += 1;
                last_error = Some(e);
            }
        }
    }
    if aborted as f64 > MAX_ABORTED_SHARE * repetitions as f64 {
        let reason = last_error.map(|e| e.to_string()).unwrap_or_default();
        return Err(TestError::Aborted(format!(
            "{aborted} of {repetitions} runs of {} aborted; last: {reason}",
            inner.test_name()
        )));
    }
    Ok(Repeated { outputs, aborted })
}

fn collect_p(
    inner: &dyn TestCase,
    outputs: &[RunOutput],
    selector: &PValueSelector,
) -> Result<(String, Vec<f64>), TestError> {
    let mut name = None;
    let mut ps = Vec::with_capacity(outputs.len());
    for out in outputs {
        let (n, p) = selector
            .select(out)
            .ok_or_else(|| TestError::config(format!("{} has no p-value matching {selector:?}", inner.test_name())))?;
        name.get_or_insert(n);
        ps.push(p);
    }
    Ok((name.unwrap_or_default(), ps))
}

/// Runs `inner` repeatedly and tests its p-values for uniformity.
pub fn iterate_test(
    inner: &dyn TestCase,
    repetitions: u64,
    selector: &PValueSelector,
    stream: &mut dyn RandomStream,
) -> Result<MetaOutcome, TestError> {
    let rep = repeat(inner, repetitions, stream)?;
    let (p_value_name, per_run_p) = collect_p(inner, &rep.outputs, selector)?;
    let (result, ks) = meta_ks(&per_run_p)?;
    Ok(MetaOutcome {
        inner_test_name: inner.test_name(),
        repetitions: per_run_p.len() as u64,
        per_run_p,
        p_value_name,
        meta_results: vec![result],
        ks: Some(ks),
        fail_counts: None,
        aborted_runs: rep.aborted,
    })
}

/// Runs `inner` repeatedly and counts failed runs per level.
///
/// A run fails at a level when any of its results fails there. The binomial
/// p-value uses the nominal single-p-value rate, so tests reporting several
/// p-values per run are expected to fail somewhat more often.
pub fn count_fails_test(
    inner: &dyn TestCase,
    repetitions: u64,
    levels: &[ConfidenceLevel],
    stream: &mut dyn RandomStream,
) -> Result<MetaOutcome, TestError> {
    if levels.is_empty() {
        return Err(TestError::config("count-fails needs at least one confidence level"));
    }
    let rep = repeat(inner, repetitions, stream)?;
    let (p_value_name, per_run_p) = collect_p(inner, &rep.outputs, &PValueSelector::First)?;
    let completed = rep.outputs.len() as u64;
    let mut counts: Vec<(ConfidenceLevel, u64)> = levels.iter().map(|&l| (l, 0)).collect();
    for out in rep.outputs {
        let judged = inner.analyze(Ok(out), levels);
        for (level, count) in counts.iter_mut() {
            if judged.failed_at(*level) {
                *count += 1;
            }
        }
    }
    let meta_results = counts
        .iter()
        .map(|&(level, k)| {
            let p = binomial_two_sided(k, completed, nominal_fail_rate(level));
            StatisticResult::meta(MetaMethod::CountFails { level: level.value() }, k as f64, completed, p)
        })
        .collect();
    Ok(MetaOutcome {
        inner_test_name: inner.test_name(),
        repetitions: completed,
        per_run_p,
        p_value_name,
        meta_results,
        ks: None,
        fail_counts: Some(counts),
        aborted_runs: rep.aborted,
    })
}

fn meta_output(outcome: MetaOutcome) -> RunOutput {
    let diagnostics = vec![
        Parameter::new("Collected P-Value", &outcome.p_value_name),
        Parameter::new("Aborted Runs", outcome.aborted_runs),
    ];
    RunOutput { results: outcome.meta_results, diagnostics }
}

fn meta_parameters(inner: &dyn TestCase, repetitions: u64) -> Vec<Parameter> {
    let mut params = vec![Parameter::new("Inner Test", inner.test_name()), Parameter::new("Repetitions", repetitions)];
    params.extend(inner.parameters());
    params
}

/// [`iterate_test`] as a test case.
pub struct IterateTest {
    inner: Box<dyn TestCase>,
    repetitions: u64,
    selector: PValueSelector,
}

impl IterateTest {
    pub fn new(inner: Box<dyn TestCase>, repetitions: u64, selector: PValueSelector) -> Result<Self, TestError> {
        if repetitions < MIN_REPETITIONS {
            return Err(TestError::config(format!("need at least {MIN_REPETITIONS} repetitions, got {repetitions}")));
        }
        Ok(Self { inner, repetitions, selector })
    }
}

impl TestCase for IterateTest {
    fn test_name(&self) -> String {
        format!("Iterated-{}", self.inner.test_name())
    }

    fn parameters(&self) -> Vec<Parameter> {
        meta_parameters(self.inner.as_ref(), self.repetitions)
    }

    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        Ok(meta_output(iterate_test(self.inner.as_ref(), self.repetitions, &self.selector, stream)?))
    }
}

/// [`count_fails_test`] as a test case.
pub struct CountFailsTest {
    inner: Box<dyn TestCase>,
    repetitions: u64,
    levels: Vec<ConfidenceLevel>,
}

impl CountFailsTest {
    pub fn new(inner: Box<dyn TestCase>, repetitions: u64, levels: Vec<ConfidenceLevel>) -> Result<Self, TestError> {
        if repetitions < MIN_REPETITIONS {
            return Err(TestError::config(format!("need at least {MIN_REPETITIONS} repetitions, got {repetitions}")));
        }
        if levels.is_empty() {
            return Err(TestError::config("count-fails needs at least one confidence level"));
        }
        Ok(Self { inner, repetitions, levels })
    }
}

impl TestCase for CountFailsTest {
    fn test_name(&self) -> String {
        format!("Fail-Counted-{}", self.inner.test_name())
    }

    fn parameters(&self) -> Vec<Parameter> {
        meta_parameters(self.inner.as_ref(), self.repetitions)
    }

    fn run(&self, stream: &mut dyn RandomStream) -> Result<RunOutput, TestError> {
        Ok(meta_output(count_fails_test(self.inner.as_ref(), self.repetitions, &self.levels, stream)?))
    }
}
