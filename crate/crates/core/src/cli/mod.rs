//! The `hasm` command line: `check`, `run` and `synthesize`.
//!
//! Exit codes: 0 on success, 1 for a diagnostic about the program or the
//! run, 2 for I/O and usage errors.

pub mod csv;
pub mod initfile;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::characterize::{critical_terms, synthesize};
use crate::engine::{run, EngineConfig, Terminal};
use crate::syntax::{parse, print, Program, Rule};

pub use initfile::{parse_init, parse_samples, InitError};

#[derive(Debug, Parser)]
#[command(
    name = "hasm",
    version,
    about = "Run and analyze hybrid abstract state machine programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check a program; print its vocabulary, critical terms and rules.
    Check { program: PathBuf },
    /// Execute a program and print its trajectory as CSV.
    Run {
        program: PathBuf,
        /// Initial state; every location is at its default when omitted.
        init: Option<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Build the canonical program reproducing the program on sample states.
    Synthesize { program: PathBuf, samples: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Final physical time.
    #[arg(long, default_value_t = 10.0)]
    tmax: f64,
    /// Integration step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// Width of the time bracket around an event.
    #[arg(long, default_value_t = 1e-9)]
    event_tol: f64,
    /// Jumps allowed at one instant before reporting Zeno behavior.
    #[arg(long, default_value_t = 1000)]
    max_jumps_instant: usize,
    /// Record every n-th integration step.
    #[arg(long, default_value_t = 10)]
    stride: usize,
    /// Comma-separated locations to print (default: all nullary reals).
    #[arg(long)]
    observe: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Diagnostic(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Diagnostic(_) => 1,
            CliError::Io { .. } | CliError::Usage(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn diag(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Diagnostic(format!("{}:{e}", path.display()))
}

fn load_program(path: &Path) -> Result<Program, CliError> {
    parse(&read(path)?).map_err(|e| diag(path, e))
}

fn rule_summary(rule: &Rule, path: &str, out: &mut String) {
    use std::fmt::Write as _;
    match rule {
        Rule::Par(us) => {
            let _ = writeln!(out, "  {path}: par ({} updates)", us.len());
        }
        Rule::Flow(ds) => {
            let _ = writeln!(out, "  {path}: flow ({} Dynamic)", ds.len());
        }
        Rule::If {
            then, otherwise, ..
        } => {
            let _ = writeln!(out, "  {path}: if");
            rule_summary(then, &format!("{path}/then"), out);
            rule_summary(otherwise, &format!("{path}/else"), out);
        }
        r => {
            let _ = writeln!(out, "  {path}: {}", r.kind_name());
        }
    }
}

fn check(program: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let p = load_program(program)?;
    let mut text = String::from("vocabulary:\n");
    for s in p.vocabulary.dynamic_symbols() {
        text.push_str(&format!("  dynamic {}/{} : {}\n", s.name, s.arity, s.sort));
    }
    let terms = critical_terms(&p);
    text.push_str(&format!("critical terms ({}):\n", terms.len()));
    for t in &terms {
        text.push_str(&format!("  {t}\n"));
    }
    text.push_str("rules:\n");
    rule_summary(&p.body, "body", &mut text);
    write_out(out, &text)
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })
}

fn run_cmd(
    program: &Path,
    init: Option<&Path>,
    flags: &RunFlags,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let p = load_program(program)?;
    let state = match init {
        Some(path) => parse_init(&read(path)?, &p.vocabulary).map_err(|e| diag(path, e))?,
        None => crate::model::State::new(p.vocabulary.clone()),
    };
    let observe = match &flags.observe {
        Some(spec) => csv::parse_observe(spec, &p.vocabulary)
            .map_err(|e| CliError::Usage(format!("--observe: {e}")))?,
        None => csv::default_observables(&p),
    };
    let Format::Csv = flags.format;
    let config = EngineConfig {
        step_h: flags.step,
        t_max: flags.tmax,
        event_tol: flags.event_tol,
        max_jumps_per_instant: flags.max_jumps_instant,
        sample_stride: flags.stride,
        ..EngineConfig::new(flags.tmax)
    };
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let trajectory = run(&p, &state, &config);
    write_out(out, &csv::write_csv(&trajectory, &observe))?;
    match &trajectory.terminal {
        Terminal::Error(e) => Err(CliError::Diagnostic(e.to_string())),
        t => {
            let _ = writeln!(err, "terminal: {t} at {}", trajectory.end);
            Ok(())
        }
    }
}

fn synthesize_cmd(
    program: &Path,
    samples: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let p = load_program(program)?;
    let states = parse_samples(&read(samples)?, &p.vocabulary).map_err(|e| diag(samples, e))?;
    if states.is_empty() {
        return Err(CliError::Diagnostic(format!(
            "{}: no samples (separate states with `---` lines)",
            samples.display()
        )));
    }
    let result = synthesize(&states, &p).map_err(|e| CliError::Diagnostic(e.to_string()))?;
    for s in &result.skipped {
        let _ = writeln!(err, "warning: sample {} skipped: {}", s.index + 1, s.error);
    }
    write_out(out, &print(&result.program))
}

/// Runs the command line on `args` (including the program name) and returns
/// the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    let result = match &cli.command {
        Command::Check { program } => check(program, out),
        Command::Run {
            program,
            init,
            flags,
        } => run_cmd(program, init.as_deref(), flags, out, err),
        Command::Synthesize { program, samples } => synthesize_cmd(program, samples, out, err),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    main_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
