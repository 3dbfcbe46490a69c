use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rngts::genkit::write_words;
use rngts::report::{parse_xml, write_xml, STYLESHEET_HREF};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rngts")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn rngts(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env_remove("RNGTS_JOBS").output().expect("binary runs")
}

fn write_manifest(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("manifest.json");
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn reference_example_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.xml");
    let o = rngts(&[
        "run",
        "--config",
        fixture("reference_example.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let got = std::fs::read(&out).unwrap();
    let golden = std::fs::read(fixture("reference_example.golden.xml")).unwrap();
    assert_eq!(String::from_utf8(got).unwrap(), String::from_utf8(golden).unwrap());
}

#[test]
fn golden_round_trips() {
    let golden = std::fs::read(fixture("reference_example.golden.xml")).unwrap();
    let doc = parse_xml(&golden[..]).unwrap();
    assert_eq!(doc.outcomes().count(), 4);
    let mut again = Vec::new();
    write_xml(&doc, &mut again, Some(STYLESHEET_HREF)).unwrap();
    assert_eq!(again, golden);
}

#[test]
fn list_commands() {
    let o = rngts(&["list-tests"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let names: Vec<&str> = text.lines().collect();
    assert_eq!(names.len(), 23);
    for n in ["chisqr_uniformity_test", "birthday_spacing_test", "bin_rank_chisqr_test", "maurers_universal_test"] {
        assert!(names.contains(&n), "{n}");
    }
    let o = rngts(&["list-generators"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "mt19937"));
    assert!(text.lines().any(|l| l == "randu"));
}

#[test]
fn render_golden_to_html() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.html");
    let o = rngts(&[
        "render",
        "--in",
        fixture("reference_example.golden.xml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let html = std::fs::read_to_string(out).unwrap();
    assert!(html.contains("<html"));
    assert!(html.contains("mt-19937"));
    assert_eq!(html.matches("class=\"failed\"").count(), 0);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let m =
        write_manifest(dir.path(), r#"{"generators": ["mt19937"], "seeds": [1], "levels": [0.05], "tests": ["foo"]}"#);
    let o = rngts(&["run", "--config", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("foo") && err.contains("gap_test"), "{err}");

    let m = write_manifest(dir.path(), "{ not json");
    assert_eq!(rngts(&["run", "--config", m.to_str().unwrap()]).status.code(), Some(2));

    let m = write_manifest(dir.path(), r#"{"generators": ["mt19937"], "levels": [0.05], "tests": ["gap"]}"#);
    assert_eq!(rngts(&["run", "--config", m.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(rngts(&["run", "--config", "/nonexistent.json"]).status.code(), Some(2));
    let m =
        write_manifest(dir.path(), r#"{"generators": ["mt19937"], "seeds": [1], "levels": [0.05], "tests": ["gap"]}"#);
    assert_eq!(rngts(&["run", "--config", m.to_str().unwrap(), "--date", "26.04.2004"]).status.code(), Some(2));
}

#[test]
fn failed_verdict_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"generators": ["randu"], "seeds": [1], "levels": [0.05], "tests": ["serial_test"], "date": "2000-01-01"}"#,
    );
    let html = dir.path().join("r.html");
    let o = rngts(&["run", "--config", m.to_str().unwrap(), "--html", html.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let xml = String::from_utf8(o.stdout).unwrap();
    assert!(xml.contains("<FAILED  confidenceLevel=\"0.05\"/>"));
    assert!(std::fs::read_to_string(html).unwrap().contains("class=\"failed\""));
}

#[test]
fn exhausted_file_stream_aborts_but_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    write_words(dir.path().join("short.bin"), &(0..100).map(|i| i * 40_000_000).collect::<Vec<u32>>()).unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"generators": [{"name": "short", "kind": "file", "path": "short.bin"}],
            "seeds": [1], "levels": [0.05, 0.95], "tests": ["ks_uniformity"], "date": "2000-01-01"}"#,
    );
    let o = rngts(&["run", "--config", m.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let xml = String::from_utf8(o.stdout).unwrap();
    assert!(xml.contains("<ABORTED"), "{xml}");
}

#[test]
fn external_stream_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        r#"{{"generators": [
              "mt19937",
              {{"name": "ext", "kind": "external", "command": ["{}", "emit", "--generator", "mt19937"]}}
            ],
            "seeds": [1, 2], "levels": [0.05], "tests": [{{"name": "chisqr_uniformity", "params": {{"n": 10000, "k": 64}}}}],
            "date": "2000-01-01"}}"#,
        bin()
    );
    let m = write_manifest(dir.path(), &body);
    let o = rngts(&["run", "--config", m.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = parse_xml(&o.stdout[..]).unwrap();
    let builtin = &doc.generators[0].seeds;
    let external = &doc.generators[1].seeds;
    for (a, b) in builtin.iter().zip(external) {
        assert_eq!(a.tests[0].results, b.tests[0].results);
    }
    assert_ne!(builtin[0].tests[0].results, builtin[1].tests[0].results);
}

#[test]
fn jobs_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_manifest(
        dir.path(),
        r#"{"generators": ["mt19937", "minstd"], "seeds": [1, 2], "levels": [0.05],
            "tests": ["ks_uniformity", "gap"], "date": "2000-01-01"}"#,
    );
    let a = rngts(&["run", "--config", m.to_str().unwrap(), "--jobs", "1"]);
    let b = Command::new(bin()).args(["run", "--config", m.to_str().unwrap()]).env("RNGTS_JOBS", "8").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let bad =
        Command::new(bin()).args(["run", "--config", m.to_str().unwrap()]).env("RNGTS_JOBS", "x").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
