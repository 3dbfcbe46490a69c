//! Standalone HTML rendering of a [`ReportDocument`].

use std::io::Write;

use super::{format_number, ReportDocument, ReportError, Verdict};
use crate::battery::{JudgedResult, TestOutcome};
use crate::stats::StatisticResult;

const STYLE: &str = "body{font-family:sans-serif;margin:2em}\
table{border-collapse:collapse;margin-bottom:2em}\
th,td{border:1px solid #999;padding:3px 8px;text-align:left}\
th{background:#eee}\
td.passed{background:#9e9}\
td.failed{background:#e99}\
td.aborted{background:#ddd;font-style:italic}";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn statistic_text(r: &StatisticResult) -> String {
    let mut s = match &r.label {
        Some(label) => format!("{}: ", escape(label)),
        None => String::new(),
    };
    s.push_str(&format!("{:?} = {}", r.kind(), format_number(r.statistic_value())));
    if let Some(dof) = r.dof() {
        s.push_str(&format!(" (dof {dof})"));
    }
    s
}

fn p_text(r: &StatisticResult) -> String {
    r.p_values
        .iter()
        .map(|p| format!("{} = {}", escape(&p.name), format_number(p.value)))
        .collect::<Vec<_>>()
        .join("<br>")
}

fn params_text(t: &TestOutcome) -> String {
    t.parameters.iter().map(|p| format!("{} = {}", escape(&p.name), escape(&p.value))).collect::<Vec<_>>().join("<br>")
}

fn result_row(out: &mut String, t: &TestOutcome, r: &JudgedResult, first: bool, span: usize) {
    out.push_str("<tr>");
    if first {
        out.push_str(&format!(
            "<td rowspan=\"{span}\">{}</td><td rowspan=\"{span}\">{}</td>",
            escape(&t.test_name),
            params_text(t)
        ));
    }
    out.push_str(&format!("<td>{}</td><td>{}</td>", statistic_text(&r.result), p_text(&r.result)));
    for (level, v) in &r.verdicts {
        let (class, word) = match v {
            Verdict::Passed => ("passed", "passed"),
            Verdict::Failed => ("failed", "failed"),
        };
        out.push_str(&format!("<td class=\"{class}\">{word} at {level}</td>"));
    }
    out.push_str("</tr>\n");
}

/// Writes a self-contained page: a summary followed by one table per
/// generator and seed.
pub fn render_html<W: Write>(doc: &ReportDocument, mut sink: W) -> Result<(), ReportError> {
    let summary = doc.summary();
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>RNG test results {}</title>\n", escape(&doc.date)));
    out.push_str(&format!("<style>{STYLE}</style>\n</head>\n<body>\n"));
    out.push_str(&format!("<h1>RNG test results {}</h1>\n", escape(&doc.date)));
    out.push_str(&format!(
        "<p class=\"summary\">tests: <span id=\"tests\">{}</span>, passed: <span id=\"passed\">{}</span>, \
         failed: <span id=\"failed\">{}</span>, aborted: <span id=\"aborted\">{}</span></p>\n",
        summary.tests, summary.passed, summary.failed, summary.aborted
    ));
    for g in &doc.generators {
        for s in &g.seeds {
            out.push_str(&format!("<h2>{} (warmup {}), seed {}</h2>\n<table>\n", escape(&g.name), g.warmup, s.seed));
            out.push_str(
                "<tr><th>test</th><th>parameters</th><th>statistic</th><th>p-value</th><th>verdicts</th></tr>\n",
            );
            for t in &s.tests {
                if let Some(reason) = &t.aborted {
                    out.push_str(&format!(
                        "<tr><td>{}</td><td>{}</td><td class=\"aborted\" colspan=\"3\">aborted: {}</td></tr>\n",
                        escape(&t.test_name),
                        params_text(t),
                        escape(reason)
                    ));
                    continue;
                }
                if t.results.is_empty() {
                    out.push_str(&format!(
                        "<tr><td>{}</td><td>{}</td><td colspan=\"3\">no results</td></tr>\n",
                        escape(&t.test_name),
                        params_text(t)
                    ));
                }
                for (i, r) in t.results.iter().enumerate() {
                    result_row(&mut out, t, r, i == 0, t.results.len());
                }
            }
            out.push_str("</table>\n");
        }
    }
    out.push_str("</body>\n</html>\n");
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(())
}
