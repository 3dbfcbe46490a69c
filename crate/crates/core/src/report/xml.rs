//! XML serialization of [`ReportDocument`].
//!
//! Layout: attributes are separated by two spaces and nesting is indented by
//! three spaces. Statistic elements carry their statistic values first and
//! their p-values (attributes named `probability*`) after them.

use std::io::{Read, Write};

use super::{ConfidenceLevel, GeneratorReport, ReportDocument, ReportError, SeedReport, Verdict};
use crate::battery::{JudgedResult, Parameter, TestOutcome};
use crate::stats::{MetaMethod, PValue, Statistic, StatisticResult};

pub const STYLESHEET_HREF: &str = "xml2html.xsl";

const INDENT: &str = "   ";

/// Formats a number with up to six significant digits, `%g` style.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..6).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_fraction(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

struct Writer {
    out: String,
}

impl Writer {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn open(&mut self, depth: usize, name: &str, attrs: &[(String, String)], empty: bool) {
        let mut tag = format!("<{name}");
        for (k, v) in attrs {
            tag.push_str(&format!("  {k}=\"{}\"", escape(v)));
        }
        tag.push_str(if empty { "/>" } else { ">" });
        self.line(depth, &tag);
    }

    fn close(&mut self, depth: usize, name: &str) {
        self.line(depth, &format!("</{name}>"));
    }
}

fn attr(k: &str, v: impl Into<String>) -> (String, String) {
    (k.to_string(), v.into())
}

fn statistic_element(result: &StatisticResult) -> (&'static str, Vec<(String, String)>) {
    let mut attrs = Vec::new();
    if let Some(label) = &result.label {
        attrs.push(attr("name", label.clone()));
    }
    let name = match &result.statistic {
        Statistic::ChiSquare { chi2, .. } => {
            attrs.push(attr("chi2", format_number(*chi2)));
            "CHI_SQUARE"
        }
        Statistic::KolmogorovSmirnov { k_plus, k_minus } => {
            attrs.push(attr("kplus", format_number(*k_plus)));
            attrs.push(attr("kminus", format_number(*k_minus)));
            "KS"
        }
        Statistic::Gaussian { value } => {
            attrs.push(attr("value", format_number(*value)));
            "GAUSSIAN"
        }
        Statistic::Exact { value } => {
            attrs.push(attr("value", format_number(*value)));
            "EXACT"
        }
        Statistic::Meta { method, value, repetitions } => {
            match method {
                MetaMethod::IterateKs => attrs.push(attr("kind", "iterate_ks")),
                MetaMethod::CountFails { level } => {
                    attrs.push(attr("kind", "count_fails"));
                    attrs.push(attr("level", format_number(*level)));
                }
            }
            attrs.push(attr("value", format_number(*value)));
            attrs.push(attr("repetitions", repetitions.to_string()));
            "META"
        }
    };
    for p in &result.p_values {
        attrs.push(attr(&p.name, format_number(p.value)));
    }
    if let Statistic::ChiSquare { dof, .. } = &result.statistic {
        attrs.push(attr("dof", dof.to_string()));
    }
    (name, attrs)
}

fn write_parameters(w: &mut Writer, depth: usize, element: &str, child: &str, params: &[Parameter]) {
    if params.is_empty() {
        w.open(depth, element, &[], true);
        return;
    }
    w.open(depth, element, &[], false);
    for p in params {
        w.open(depth + 1, child, &[attr("name", p.name.clone()), attr("value", p.value.clone())], true);
    }
    w.close(depth, element);
}

fn write_test(w: &mut Writer, depth: usize, t: &TestOutcome) {
    w.open(depth, "TEST", &[attr("name", t.test_name.clone())], false);
    write_parameters(w, depth + 1, "PARAMETERS", "PARAMETER", &t.parameters);
    if let Some(reason) = &t.aborted {
        w.open(depth + 1, "ABORTED", &[attr("reason", reason.clone())], true);
    } else {
        w.open(depth + 1, "ANALYZE", &[], t.results.is_empty());
        if !t.results.is_empty() {
            for r in &t.results {
                let (name, attrs) = statistic_element(&r.result);
                w.open(depth + 2, name, &attrs, r.verdicts.is_empty());
                if !r.verdicts.is_empty() {
                    for (level, v) in &r.verdicts {
                        w.open(depth + 3, v.element_name(), &[attr("confidenceLevel", level.to_string())], true);
                    }
                    w.close(depth + 2, name);
                }
            }
            w.close(depth + 1, "ANALYZE");
        }
        if !t.diagnostics.is_empty() {
            write_parameters(w, depth + 1, "DIAGNOSTICS", "DIAGNOSTIC", &t.diagnostics);
        }
    }
    w.close(depth, "TEST");
}

/// Writes `doc` as XML, optionally preceded by a stylesheet processing instruction.
pub fn write_xml<W: Write>(doc: &ReportDocument, mut sink: W, stylesheet: Option<&str>) -> Result<(), ReportError> {
    let mut w = Writer { out: String::new() };
    w.out.push_str("<?xml version=\"1.0\" ?>");
    if let Some(href) = stylesheet {
        w.out.push_str(&format!("<?xml-stylesheet href=\"{}\" type=\"text/xsl\"?>", escape(href)));
    }
    w.out.push('\n');
    w.open(0, "RNG_TEST_SUITE_RESULT", &[attr("date", doc.date.clone())], false);
    for g in &doc.generators {
        w.open(1, "RNG", &[attr("name", g.name.clone()), attr("warmup", g.warmup.to_string())], false);
        for s in &g.seeds {
            w.open(2, "SEED", &[attr("seed", s.seed.to_string())], false);
            for t in &s.tests {
                write_test(&mut w, 3, t);
            }
            w.close(2, "SEED");
        }
        w.close(1, "RNG");
    }
    w.close(0, "RNG_TEST_SUITE_RESULT");
    sink.write_all(w.out.as_bytes())?;
    sink.flush()?;
    Ok(())
}

type Node<'a, 'i> = roxmltree::Node<'a, 'i>;

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

fn required<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, ReportError> {
    node.attribute(name)
        .ok_or_else(|| ReportError::schema(node.tag_name().name(), format!("missing attribute `{name}`")))
}

fn parse_num<T: std::str::FromStr>(node: Node, name: &str) -> Result<T, ReportError> {
    let raw = required(node, name)?;
    raw.parse().map_err(|_| {
        ReportError::schema(node.tag_name().name(), format!("attribute `{name}` has invalid value {raw:?}"))
    })
}

fn expect_name(node: Node, name: &str) -> Result<(), ReportError> {
    if node.tag_name().name() == name {
        Ok(())
    } else {
        Err(ReportError::schema(node.tag_name().name(), format!("expected <{name}>")))
    }
}

fn parse_parameters(node: Node, child: &str) -> Result<Vec<Parameter>, ReportError> {
    elements(node)
        .map(|p| {
            expect_name(p, child)?;
            Ok(Parameter::new(required(p, "name")?, required(p, "value")?))
        })
        .collect()
}

fn parse_statistic(node: Node) -> Result<JudgedResult, ReportError> {
    let element = node.tag_name().name();
    let statistic = match element {
        "CHI_SQUARE" => Statistic::ChiSquare { chi2: parse_num(node, "chi2")?, dof: parse_num(node, "dof")? },
        "KS" => Statistic::KolmogorovSmirnov { k_plus: parse_num(node, "kplus")?, k_minus: parse_num(node, "kminus")? },
        "GAUSSIAN" => Statistic::Gaussian { value: parse_num(node, "value")? },
        "EXACT" => Statistic::Exact { value: parse_num(node, "value")? },
        "META" => {
            let method = match required(node, "kind")? {
                "iterate_ks" => MetaMethod::IterateKs,
                "count_fails" => MetaMethod::CountFails { level: parse_num(node, "level")? },
                other => return Err(ReportError::schema(element, format!("unknown kind {other:?}"))),
            };
            Statistic::Meta { method, value: parse_num(node, "value")?, repetitions: parse_num(node, "repetitions")? }
        }
        _ => return Err(ReportError::schema(element, "unknown statistic element")),
    };
    let mut p_values = Vec::new();
    for a in node.attributes().filter(|a| a.name().starts_with("probability")) {
        let value = a.value().parse().map_err(|_| {
            ReportError::schema(element, format!("attribute `{}` has invalid value {:?}", a.name(), a.value()))
        })?;
        p_values.push(PValue { name: a.name().to_string(), value });
    }
    if p_values.is_empty() {
        return Err(ReportError::schema(element, "no probability attribute"));
    }
    let mut verdicts = Vec::new();
    for child in elements(node) {
        let v = match child.tag_name().name() {
            "PASSED" => Verdict::Passed,
            "FAILED" => Verdict::Failed,
            other => return Err(ReportError::schema(other, format!("unexpected inside <{element}>"))),
        };
        let raw: f64 = parse_num(child, "confidenceLevel")?;
        let level =
            ConfidenceLevel::new(raw).map_err(|e| ReportError::schema(child.tag_name().name(), e.to_string()))?;
        verdicts.push((level, v));
    }
    let result = StatisticResult { statistic, p_values, label: node.attribute("name").map(str::to_string) };
    Ok(JudgedResult { result, verdicts })
}

fn parse_test(node: Node) -> Result<TestOutcome, ReportError> {
    expect_name(node, "TEST")?;
    let mut outcome = TestOutcome {
        test_name: required(node, "name")?.to_string(),
        parameters: Vec::new(),
        results: Vec::new(),
        diagnostics: Vec::new(),
        aborted: None,
    };
    for child in elements(node) {
        match child.tag_name().name() {
            "PARAMETERS" => outcome.parameters = parse_parameters(child, "PARAMETER")?,
            "DIAGNOSTICS" => outcome.diagnostics = parse_parameters(child, "DIAGNOSTIC")?,
            "ABORTED" => outcome.aborted = Some(required(child, "reason")?.to_string()),
            "ANALYZE" => {
                outcome.results = elements(child).map(parse_statistic).collect::<Result<_, _>>()?;
            }
            other => return Err(ReportError::schema(other, "unexpected inside <TEST>")),
        }
    }
    Ok(outcome)
}

/// Parses a document produced by [`write_xml`].
pub fn parse_xml<R: Read>(mut source: R) -> Result<ReportDocument, ReportError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let xml = roxmltree::Document::parse(&text).map_err(|e| ReportError::Xml(e.to_string()))?;
    let root = xml.root_element();
    expect_name(root, "RNG_TEST_SUITE_RESULT")?;
    let mut doc = ReportDocument::new(required(root, "date")?);
    for rng in elements(root) {
        expect_name(rng, "RNG")?;
        let mut g = GeneratorReport {
            name: required(rng, "name")?.to_string(),
            warmup: parse_num(rng, "warmup")?,
            seeds: Vec::new(),
        };
        for seed in elements(rng) {
            expect_name(seed, "SEED")?;
            let tests = elements(seed).map(parse_test).collect::<Result<_, _>>()?;
            g.seeds.push(SeedReport { seed: parse_num(seed, "seed")?, tests });
        }
        doc.generators.push(g);
    }
    Ok(doc)
}
