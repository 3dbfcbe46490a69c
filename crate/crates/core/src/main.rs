use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rngts::genkit::SEED_ENV;
use rngts::report::{parse_xml, render_html, write_xml, STYLESHEET_HREF};
use rngts::runner::{default_jobs, load_manifest, run_suite, PrintStatus, Registries};

/// Statistical test suite for random number generators.
#[derive(Parser)]
#[command(name = "rngts", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the matrix described by a JSON manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// XML report path; standard output when neither this nor the manifest names one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an HTML rendering.
        #[arg(long)]
        html: Option<PathBuf>,
        #[arg(long, env = "RNGTS_JOBS")]
        jobs: Option<usize>,
        /// Report date, YYYY-MM-DD; defaults to today.
        #[arg(long)]
        date: Option<String>,
        /// Print one status line per finished cell to standard error.
        #[arg(long)]
        progress: bool,
    },
    /// List test class names.
    ListTests,
    /// List built-in generator names.
    ListGenerators,
    /// Render an XML report as HTML.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write raw outputs of a built-in generator to standard output as little-endian u32 words.
    Emit {
        #[arg(long)]
        generator: String,
        /// Seed; falls back to the RNGTS_SEED environment variable, then 1.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of words; unbounded when omitted.
        #[arg(long)]
        count: Option<u64>,
    },
}

/// Exit status when any verdict failed.
const EXIT_FAILED: u8 = 1;
/// Exit status for configuration, parse and I/O errors.
const EXIT_ERROR: u8 = 2;

type Failure = Box<dyn std::error::Error>;

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    let f = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn check_date(date: &str) -> Result<(), Failure> {
    chrono::NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| format!("invalid date `{date}`: {e}"))?;
    Ok(())
}

fn run(
    config: &Path,
    out: Option<PathBuf>,
    html: Option<PathBuf>,
    jobs: Option<usize>,
    date: Option<String>,
    progress: bool,
) -> Result<bool, Failure> {
    let manifest = load_manifest(config)?;
    let date = date.or(manifest.date).unwrap_or_else(|| chrono::Local::now().format("%Y-%m-%d").to_string());
    check_date(&date)?;
    let jobs = jobs.or(manifest.jobs).unwrap_or_else(default_jobs);
    if jobs == 0 {
        return Err("jobs must be at least 1".into());
    }
    let status = PrintStatus::new(io::stderr());
    let observer = progress.then_some(&status as &dyn rngts::runner::Observer);
    let doc = run_suite(&manifest.matrix, jobs, observer, &date)?;

    match out.or(manifest.out) {
        Some(path) => {
            let mut w = create(&path)?;
            write_xml(&doc, &mut w, Some(STYLESHEET_HREF))?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            write_xml(&doc, &mut w, Some(STYLESHEET_HREF))?;
            w.flush()?;
        }
    }
    if let Some(path) = html.or(manifest.html) {
        let mut w = create(&path)?;
        render_html(&doc, &mut w)?;
        w.flush()?;
    }
    let s = doc.summary();
    eprintln!("{} tests: {} verdicts passed, {} failed, {} aborted", s.tests, s.passed, s.failed, s.aborted);
    Ok(doc.any_failed())
}

fn render(input: &Path, out: &Path) -> Result<(), Failure> {
    let f = File::open(input).map_err(|e| format!("cannot open {}: {e}", input.display()))?;
    let doc = parse_xml(BufReader::new(f))?;
    let mut w = create(out)?;
    render_html(&doc, &mut w)?;
    w.flush()?;
    Ok(())
}

fn emit(generator: &str, seed: Option<u64>, count: Option<u64>) -> Result<(), Failure> {
    let seed = match seed {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v.parse().map_err(|e| format!("{SEED_ENV}=`{v}`: {e}"))?,
            Err(_) => 1,
        },
    };
    let mut stream = (Registries::default().generators.get(generator)?)()?;
    if stream.max_value() > u32::MAX as u64 {
        return Err(format!("generator `{generator}` exceeds 32 bits").into());
    }
    stream.seed(seed);
    let mut out = BufWriter::new(io::stdout().lock());
    let mut written = 0u64;
    while count.is_none_or(|c| written < c) {
        let word = stream.next_raw()? as u32;
        match out.write_all(&word.to_le_bytes()) {
            Ok(()) => {}
            // the reader went away: normal end for an unbounded stream
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        written += 1;
    }
    match out.flush() {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, html, jobs, date, progress } => {
            run(&config, out, html, jobs, date, progress).map(|failed| if failed { EXIT_FAILED } else { 0 })
        }
        Command::ListTests => {
            for name in Registries::default().tests.names() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::ListGenerators => {
            for name in Registries::default().generators.names() {
                println!("{name}");
            }
            Ok(0)
        }
        Command::Render { input, out } => render(&input, &out).map(|()| 0),
        Command::Emit { generator, seed, count } => emit(&generator, seed, count).map(|()| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
