//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`; the process exits non-zero when
//! any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use rngts::battery::{
    binary_rank_probabilities, collision_distribution, craps_win_probability, default_catalog, repetition_pmf,
    squeeze_steps, BirthdaySpacings, ChisqrUniformity, Gap, KsUniformity, Monkey20Bit, ParkingLot, Poker, Serial,
    TestCase, SQUEEZE_TABLE,
};
use rngts::genkit::{LaggedFibonacci1279, Lcg, Mt19937, Mt19937Seeding, SeedableStream};
use rngts::meta::meta_ks;
use rngts::report::{judge, parse_xml, write_xml, ConfidenceLevel, ReportDocument, Verdict, STYLESHEET_HREF};
use rngts::runner::{factory, run_suite, RunMatrix};
use rngts::stats::{
    chi_square_pvalue, erf, gaussian_pvalue, kolmogorov_tail, ks_pvalue, KsSide, KsStatistic, StatisticKind,
    StatisticResult,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lvl(c: f64) -> ConfidenceLevel {
    ConfidenceLevel::new(c).unwrap()
}

fn threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Maps `f` over `items` on all cores, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> = items.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads() {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                *slots[i].lock().unwrap() = Some(f(&items[i]));
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
}

fn c1_reference_value() -> Outcome {
    let t = ChisqrUniformity::new(100_000, 256).unwrap();
    let mut g = Mt19937::with_seeding(331, Mt19937Seeding::Legacy1998);
    g.warmup(0).unwrap();
    let levels = [lvl(0.05), lvl(0.95)];
    let outcome = t.execute(&mut g, &levels);
    let r = &outcome.results[0];
    let (chi2, p, dof) = (r.result.statistic_value(), r.result.first_p(), r.result.dof());
    ensure(dof == Some(255), || format!("dof {dof:?}"))?;
    ensure((chi2 - 242.33).abs() <= 0.01, || format!("chi2 {chi2}"))?;
    ensure((p - 0.706).abs() <= 0.001, || format!("p {p}"))?;
    ensure(r.verdicts.iter().all(|(_, v)| *v == Verdict::Passed), || "not PASSED at both levels".into())?;

    // the current reference seeding does not reproduce the listing; it must stay in band
    let std_out = t.execute(&mut Mt19937::new(331), &levels);
    let s = &std_out.results[0];
    let (sc, sp) = (s.result.statistic_value(), s.result.first_p());
    ensure((190.0..=320.0).contains(&sc) && (0.02..=0.98).contains(&sp), || format!("standard seeding {sc} {sp}"))?;
    ensure(!std_out.any_failed(), || "standard seeding failed a level".into())?;
    Ok(format!("1998 seeding: chi2={chi2:.5} p={p:.6} dof=255 PASSED x2; 2002 seeding: chi2={sc:.5} p={sp:.5}"))
}

/// Taylor series `2/√π Σ (-1)^n z^(2n+1) / (n! (2n+1))`, independent of the library.
fn erf_oracle(z: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = z;
    for n in 0..60 {
        sum += term / (2 * n + 1) as f64;
        term *= -z * z / (n + 1) as f64;
    }
    sum * 2.0 / std::f64::consts::PI.sqrt()
}

fn c2_closed_forms() -> Outcome {
    for x in [0.1, 1.0, 5.0, 20.0] {
        let p = chi_square_pvalue(x, 2).unwrap();
        let want = (-x / 2.0).exp();
        ensure((p - want).abs() <= 1e-10, || format!("chi_square_pvalue({x}, 2) = {p}, want {want}"))?;
    }
    let g = gaussian_pvalue(0.0);
    ensure((g - 0.5).abs() <= 1e-12, || format!("gaussian_pvalue(0) = {g}"))?;
    let e = erf(1.0);
    let oracle = erf_oracle(1.0);
    ensure((e - oracle).abs() <= 1e-8, || format!("erf(1) = {e}, series {oracle}"))?;
    ensure((e - 0.842700793).abs() <= 1e-8, || format!("erf(1) = {e}"))?;
    Ok(format!("erf(1)={e:.12} series={oracle:.12}"))
}

fn rank_by_elimination(mut rows: Vec<u32>, cols: u32) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let bit = 1 << c;
        if let Some(pivot) = (rank..rows.len()).find(|&i| rows[i] & bit != 0) {
            rows.swap(rank, pivot);
            for i in 0..rows.len() {
                if i != rank && rows[i] & bit != 0 {
                    rows[i] ^= rows[rank];
                }
            }
            rank += 1;
        }
    }
    rank
}

fn craps_oracle() -> BigRational {
    let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let ways = |s: i64| 6 - (s - 7).abs();
    let mut p = r(8, 36);
    for point in [4, 5, 6, 8, 9, 10] {
        let w = ways(point);
        // P(point on come-out) · P(point before 7)
        p += r(w, 36) * r(w, w + 6);
    }
    p
}

fn c3_brute_force() -> Outcome {
    // collisions of 3 balls in 4 urns over all 4^3 sequences
    let mut counts = [0u32; 3];
    for s in 0..64u32 {
        let balls = [s % 4, (s / 4) % 4, s / 16];
        let distinct: BTreeSet<u32> = balls.iter().copied().collect();
        counts[3 - distinct.len()] += 1;
    }
    let dist = collision_distribution(4, 3);
    for (c, &n) in counts.iter().enumerate() {
        let got = dist.get(c).copied().unwrap_or(0.0);
        ensure(got == n as f64 / 64.0, || format!("collision P(C={c}) = {got}, census {n}/64"))?;
    }
    ensure(dist.iter().skip(3).all(|&p| p == 0.0), || "collision mass beyond c=2".into())?;

    let mut ranks = [0u32; 4];
    for m in 0..512u32 {
        let rows = vec![m & 7, (m >> 3) & 7, (m >> 6) & 7];
        ranks[rank_by_elimination(rows, 3)] += 1;
    }
    let probs = binary_rank_probabilities(3, 3);
    ensure(probs.len() == 4, || format!("{} rank cells", probs.len()))?;
    for r in 0..4 {
        ensure(probs[r] == ranks[r] as f64 / 512.0, || format!("rank {r}: {} vs {}/512", probs[r], ranks[r]))?;
    }

    // first repeat among bits: enumerate all 3-bit sequences
    let mut first = [0u32; 4];
    for s in 0..8u32 {
        let seq = [s & 1, (s >> 1) & 1, (s >> 2) & 1];
        let t = (1..3).find(|&i| seq[..i].contains(&seq[i])).map(|i| i + 1).unwrap();
        first[t] += 1;
    }
    let pmf = repetition_pmf(1);
    for (t, &n) in first.iter().enumerate() {
        let got = pmf.get(t).copied().unwrap_or(0.0);
        ensure(got == n as f64 / 8.0, || format!("repetition P(T={t}) = {got}, census {n}/8"))?;
    }
    ensure(pmf.iter().skip(4).all(|&p| p == 0.0), || "repetition mass beyond t=3".into())?;

    let pw = craps_win_probability();
    ensure(pw == Ratio::new(244, 495), || format!("craps {pw}"))?;
    let oracle = craps_oracle();
    ensure(oracle == BigRational::new(244.into(), 495.into()), || format!("oracle {oracle}"))?;
    Ok(format!("collision {counts:?}/64, rank {ranks:?}/512, repetition {:?}/8, craps {pw}", &first[2..]))
}

fn c4_null_behavior() -> Outcome {
    let tests: Vec<Box<dyn TestCase>> = default_catalog();
    let seeds: Vec<u64> = (1..=100).collect();
    let cells: Vec<(usize, u64)> = (0..tests.len()).flat_map(|t| seeds.iter().map(move |&s| (t, s))).collect();
    let ps = parallel_map(&cells, |&(t, seed)| {
        let out =
            tests[t].run(&mut Mt19937::new(seed)).map_err(|e| format!("{} seed {seed}: {e}", tests[t].test_name()))?;
        Ok::<f64, String>(out.results[0].first_p())
    });
    let mut lines = Vec::new();
    let mut bad = Vec::new();
    for (t, test) in tests.iter().enumerate() {
        let sample = ps[t * seeds.len()..(t + 1) * seeds.len()].iter().cloned().collect::<Result<Vec<_>, _>>()?;
        let (r, _) = meta_ks(&sample).map_err(|e| e.to_string())?;
        let p = r.first_p();
        lines.push(format!("      {:<34} meta p = {p:.4}", test.test_name()));
        if !(p > 0.001 && p < 0.999) {
            bad.push(format!("{} meta p {p}", test.test_name()));
        }
    }
    println!("{}", lines.join("\n"));
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("{} tests x {} seeds, all meta-KS p in (0.001, 0.999)", tests.len(), seeds.len()))
}

fn c5_known_bad() -> Outcome {
    let birthday = BirthdaySpacings::new(1 << 24, 512, 2000).unwrap();
    let serial = Serial::new(16, 100_000).unwrap();
    let pb = birthday.run(&mut Lcg::randu(1)).map_err(|e| e.to_string())?.results[0].first_p();
    let ps = serial.run(&mut Lcg::randu(1)).map_err(|e| e.to_string())?.results[0].first_p();
    ensure(pb < 1e-6, || format!("RANDU birthday p = {pb}"))?;
    ensure(ps < 1e-6, || format!("RANDU serial p = {ps}"))?;
    let chi = ChisqrUniformity::new(100_000, 256).unwrap();
    let pm = chi.run(&mut Lcg::minstd(1)).map_err(|e| e.to_string())?.results[0].first_p();
    ensure(pm > 0.001 && pm < 0.999, || format!("minstd chisqr p = {pm}"))?;
    Ok(format!("RANDU birthday p={pb:.3e} serial p={ps:.3e}; minstd chisqr p={pm:.4}"))
}

fn c6_calibration() -> Outcome {
    let sum: f64 = SQUEEZE_TABLE.iter().sum();
    ensure((sum - 1.0).abs() <= 1e-6, || format!("squeeze table sums to {sum}"))?;

    let games: u64 = 10_000_000;
    let chunks: Vec<u64> = (1..=16).collect();
    let per = games / chunks.len() as u64;
    let partial = parallel_map(&chunks, |&seed| {
        let mut g = Mt19937::new(1000 + seed);
        let mut counts = vec![0u64; SQUEEZE_TABLE.len()];
        for _ in 0..per {
            let j = squeeze_steps(&mut g).unwrap();
            counts[(j.clamp(6, 48) - 6) as usize] += 1;
        }
        counts
    });
    let mut worst = 0.0f64;
    for (i, &p) in SQUEEZE_TABLE.iter().enumerate() {
        let observed: u64 = partial.iter().map(|c| c[i]).sum();
        let n = games as f64;
        let z = (observed as f64 - n * p) / (n * p * (1.0 - p)).sqrt();
        worst = worst.max(z.abs());
        ensure(z.abs() < 4.0, || format!("squeeze cell {i}: observed {observed}, expected {:.1}, z {z:.2}", n * p))?;
    }

    let seeds: Vec<u64> = (1..=100).collect();
    let parking = ParkingLot::new(12_000, 100.0).unwrap();
    let parked = parallel_map(&seeds, |&s| {
        let out = parking.run(&mut Mt19937::new(s)).unwrap();
        out.diagnostics.iter().find(|d| d.name == "Parked Cars").unwrap().value.parse::<f64>().unwrap()
    });
    let inside = parked.iter().filter(|&&k| (k - 3523.0).abs() <= 4.0 * 21.9).count();
    ensure(inside >= 99, || format!("parking: {inside}/100 runs within 3523 ± 87.6"))?;

    let monkey = Monkey20Bit::new();
    let zs = parallel_map(&seeds[..50], |&s| monkey.run(&mut Mt19937::new(s)).unwrap().results[0].statistic_value());
    let small = zs.iter().filter(|z| z.abs() < 4.0).count();
    ensure(small >= 49, || format!("monkey: {small}/50 runs with |z| < 4"))?;
    Ok(format!(
        "squeeze sum={sum:.9} max |z|={worst:.2} over 10^7 games; parking {inside}/100 in band; monkey {small}/50 |z|<4"
    ))
}

fn c7_verdict() -> Outcome {
    let r = StatisticResult::chi_square(242.33, 255, 0.706);
    for c in [0.05, 0.95] {
        ensure(judge(&r, lvl(c)) == Verdict::Passed, || format!("p=0.706 not passed at {c}"))?;
    }
    let doc = reference_document(1);
    let xml = xml_bytes(&doc);
    let text = String::from_utf8(xml).unwrap();
    let first_test = text.split("</TEST>").next().unwrap();
    let passed = first_test.matches("<PASSED  confidenceLevel=").count();
    ensure(passed == 2 && !first_test.contains("<FAILED"), || format!("{passed} PASSED elements in first test"))?;
    Ok("p=0.706 PASSED at 0.05 and 0.95; first TEST carries two PASSED elements".into())
}

fn reference_matrix() -> RunMatrix {
    RunMatrix::new()
        .generator("mt-19937", factory(|| Ok(Mt19937::with_seeding(0, Mt19937Seeding::Legacy1998))), 0)
        .generator("lf-1279", factory(|| Ok(LaggedFibonacci1279::new(0))), 0)
        .seed(331)
        .seed(667790)
        .level(lvl(0.05))
        .level(lvl(0.95))
        .test(ChisqrUniformity::new(100_000, 256).unwrap())
}

fn reference_document(jobs: usize) -> ReportDocument {
    run_suite(&reference_matrix(), jobs, None, "2004-04-26").unwrap()
}

fn xml_bytes(doc: &ReportDocument) -> Vec<u8> {
    let mut out = Vec::new();
    write_xml(doc, &mut out, Some(STYLESHEET_HREF)).unwrap();
    out
}

fn c8_xml_fidelity() -> Outcome {
    let xml = xml_bytes(&reference_document(2));
    let parsed = parse_xml(&xml[..]).map_err(|e| e.to_string())?;
    let again = xml_bytes(&parsed);
    ensure(again == xml, || "parse/write round trip is not byte-identical".into())?;
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reference_example.golden.xml");
    let golden = std::fs::read(&golden_path).map_err(|e| e.to_string())?;
    ensure(golden == xml, || "output differs from the golden fixture".into())?;

    let allowed_elements: BTreeSet<&str> = [
        "RNG_TEST_SUITE_RESULT",
        "RNG",
        "SEED",
        "TEST",
        "PARAMETERS",
        "PARAMETER",
        "ANALYZE",
        "CHI_SQUARE",
        "PASSED",
        "FAILED",
    ]
    .into();
    let allowed_attrs: BTreeSet<&str> =
        ["date", "name", "warmup", "seed", "value", "chi2", "probability", "dof", "confidenceLevel"].into();
    let text = String::from_utf8(xml).unwrap();
    let tree = roxmltree::Document::parse(&text).map_err(|e| e.to_string())?;
    for node in tree.descendants().filter(|n| n.is_element()) {
        let name = node.tag_name().name();
        ensure(allowed_elements.contains(name), || format!("element {name} not in the listing"))?;
        for a in node.attributes() {
            ensure(allowed_attrs.contains(a.name()), || format!("attribute {name}@{} not in the listing", a.name()))?;
        }
    }
    ensure(
        text.starts_with("<?xml version=\"1.0\" ?><?xml-stylesheet href=\"xml2html.xsl\" type=\"text/xsl\"?>\n"),
        || "header differs from the listing".into(),
    )?;
    Ok(format!("{} bytes, round trip and golden fixture byte-identical", text.len()))
}

fn c9_determinism() -> Outcome {
    let m = RunMatrix::new()
        .generator("mt19937", factory(|| Ok(Mt19937::new(0))), 0)
        .generator("lf-1279", factory(|| Ok(LaggedFibonacci1279::new(0))), 100)
        .seed(331)
        .seed(667790)
        .level(lvl(0.05))
        .level(lvl(0.95))
        .test(ChisqrUniformity::new(100_000, 256).unwrap())
        .test(KsUniformity::new(10_000).unwrap())
        .test(Gap::new(0.0, 0.5, 10, 20_000).unwrap())
        .test(Poker::new(10, 20_000).unwrap())
        .test(BirthdaySpacings::new(1 << 24, 512, 1000).unwrap());
    ensure(m.cells() == 20, || format!("{} cells", m.cells()))?;
    let a = xml_bytes(&run_suite(&m, 1, None, "2004-04-26").map_err(|e| e.to_string())?);
    let b = xml_bytes(&run_suite(&m, 8, None, "2004-04-26").map_err(|e| e.to_string())?);
    ensure(a == b, || "jobs=1 and jobs=8 differ".into())?;
    Ok(format!("20 cells, {} identical bytes", a.len()))
}

fn monotone_probe<S: Strategy>(strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

fn c10_properties() -> Outcome {
    monotone_probe((1u64..400, 0.0f64..2000.0, 0.0f64..50.0), |(dof, x, dx)| {
        let a = chi_square_pvalue(x, dof).unwrap();
        let b = chi_square_pvalue(x + dx, dof).unwrap();
        prop_assert!(b <= a + 1e-12, "chi2 dof {dof}: p({x}) = {a} < p({}) = {b}", x + dx);
        prop_assert!((0.0..=1.0).contains(&a));
        Ok(())
    })?;
    monotone_probe((-40.0f64..40.0, 0.0f64..10.0), |(x, dx)| {
        let a = gaussian_pvalue(x);
        let b = gaussian_pvalue(x + dx);
        prop_assert!(b <= a, "gaussian p({x}) = {a} < p({}) = {b}", x + dx);
        Ok(())
    })?;
    monotone_probe((1usize..100_000, 0.0f64..1.0, 0.0f64..1.0), |(n, f, g)| {
        // t and t' in [0, √n], the attainable range
        let root = (n as f64).sqrt();
        let (lo, hi) = if f <= g { (f * root, g * root) } else { (g * root, f * root) };
        let stat = |t: f64| KsStatistic { k_plus: t, k_minus: t, n };
        for side in [KsSide::Plus, KsSide::Minus, KsSide::TwoSided] {
            let a = ks_pvalue(&stat(lo), side);
            let b = ks_pvalue(&stat(hi), side);
            prop_assert!(b <= a + 1e-12, "ks {side:?} n {n}: p({lo}) = {a} < p({hi}) = {b}");
        }
        prop_assert!(kolmogorov_tail(hi) <= kolmogorov_tail(lo) + 1e-12);
        Ok(())
    })?;

    let mut closed = 0;
    for test in default_catalog() {
        let out = test.run(&mut Mt19937::new(1)).map_err(|e| format!("{}: {e}", test.test_name()))?;
        let uses_chi2 = out.results.iter().any(|r| r.kind() == StatisticKind::ChiSquare);
        match test.chi_square_cells() {
            Some(cells) => {
                let p = cells.pooled_cell_probabilities().map_err(|e| e.to_string())?;
                let s: f64 = p.iter().sum();
                ensure((s - 1.0).abs() <= 1e-9, || format!("{}: pooled sum {s}", test.test_name()))?;
                closed += 1;
            }
            None => ensure(!uses_chi2, || format!("{} reports chi-square but exposes no cells", test.test_name()))?,
        }
    }
    Ok(format!("3 x 1000 monotonicity probes; pooled cells close for {closed} chi-square tests"))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Check, Duration); 10] = [
        (1, "reference-value reproduction", c1_reference_value, Duration::from_secs(1)),
        (2, "closed-form statistics", c2_closed_forms, Duration::from_secs(1)),
        (3, "brute-force oracle equivalence", c3_brute_force, Duration::from_secs(10)),
        (4, "null behaviour on MT19937", c4_null_behavior, Duration::from_secs(300)),
        (5, "known-bad detection", c5_known_bad, Duration::from_secs(60)),
        (6, "calibration constants", c6_calibration, Duration::from_secs(300)),
        (7, "verdict rule", c7_verdict, Duration::from_secs(60)),
        (8, "XML fidelity", c8_xml_fidelity, Duration::from_secs(60)),
        (9, "determinism under concurrency", c9_determinism, Duration::from_secs(120)),
        (10, "property suites", c10_properties, Duration::from_secs(300)),
    ];
    let mut failures = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|msg| {
            if elapsed <= budget {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(msg) => println!("PASS criterion {id:>2} ({name}): {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failures += 1;
                println!("FAIL criterion {id:>2} ({name}): {msg} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
