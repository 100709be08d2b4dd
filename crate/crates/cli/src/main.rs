//! `twist`: batch front end for the twist-core pipelines.

mod commands;
mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use twist_core::io::{self, Command, JobSpec};
use twist_core::Error;

const PASS: u8 = 0;
const CERTIFICATE_FAILURE: u8 = 2;
const SCHEMA_ERROR: u8 = 3;
const INTERNAL_ERROR: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Parser, Debug)]
#[command(name = "twist", version, about = "Drinfel'd twists and deformation formulas via the Fedosov construction")]
struct Cli {
    /// check | cohomology | twist | verify | classify | equivalence | deform |
    /// compare | hermitian | positivity | selftest; overrides the job's
    /// "command".
    command: Option<String>,
    /// Job file (JSON).
    #[arg(long)]
    job: Option<PathBuf>,
    /// Overrides the job's order N.
    #[arg(long)]
    order: Option<usize>,
    /// Directory for the report; defaults to the job's "output", if any.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    error: Value,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse(_) | Error::Schema { .. } => SCHEMA_ERROR,
            Error::Precondition(_) | Error::Certificate(_) | Error::Degenerate { .. } | Error::DegreeOverflow { .. } => {
                CERTIFICATE_FAILURE
            }
            Error::Invariant(_) => INTERNAL_ERROR,
        };
        let error = match &e {
            Error::Schema { pointer, message } => json!({ "kind": "schema", "pointer": pointer, "message": message }),
            other => json!({ "kind": kind(other), "message": other.to_string() }),
        };
        Failure { code, error, message: e.to_string() }
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Parse(_) => "parse",
        Error::Schema { .. } => "schema",
        Error::Precondition(_) => "precondition",
        Error::Degenerate { .. } => "degenerate",
        Error::DegreeOverflow { .. } => "degree_overflow",
        Error::Certificate(_) => "certificate",
        Error::Invariant(_) => "invariant",
    }
}

fn usage(message: String) -> Failure {
    Failure { code: SCHEMA_ERROR, error: json!({ "kind": "usage", "message": message }), message }
}

fn load_job(path: Option<&Path>, order: Option<usize>) -> Result<Option<JobSpec>, Failure> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let job = io::parse_job(&text)?;
    Ok(Some(match order {
        Some(n) => job.with_order(n)?,
        None => job,
    }))
}

fn resolve_command(cli: &Cli, job: Option<&JobSpec>) -> Result<Command, Failure> {
    let from_cli = cli.command.as_deref().map(str::parse::<Command>).transpose()?;
    from_cli.or(job.and_then(|j| j.command)).ok_or_else(|| usage("no command given".into()))
}

fn execute(cli: &Cli) -> Result<(Value, Vec<String>, bool), Failure> {
    let job = load_job(cli.job.as_deref(), cli.order)?;
    let command = resolve_command(cli, job.as_ref())?;
    let outcome = match (&job, command) {
        (_, Command::Selftest) => selftest::run(),
        (Some(job), c) => commands::run(c, job)?,
        (None, c) => return Err(usage(format!("the {c} command needs --job"))),
    };
    let report = json!({
        "command": command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "job_hash": job.as_ref().map(|j| j.hash.clone()),
        "order": job.as_ref().map(|j| j.order),
        "passed": outcome.passed,
        "result": outcome.result,
    });
    let out_dir = cli.out.clone().or_else(|| job.as_ref().and_then(|j| j.output.clone()).map(PathBuf::from));
    if let Some(dir) = out_dir {
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(&dir)?;
            let mut bytes = serde_json::to_vec_pretty(&report).expect("serializable");
            bytes.push(b'\n');
            fs::write(dir.join(format!("{}.json", command.name())), bytes)
        };
        write().map_err(|e| Failure { code: INTERNAL_ERROR, error: json!({ "kind": "io", "message": e.to_string() }), message: format!("cannot write report: {e}") })?;
    }
    let mut summary = vec![format!("{}: {}", command.name(), if outcome.passed { "pass" } else { "FAIL" })];
    summary.extend(outcome.summary);
    Ok((report, summary, outcome.passed))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { SCHEMA_ERROR } else { PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(k) = cli.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("error: cannot use {k} threads");
            return ExitCode::from(SCHEMA_ERROR);
        }
    }
    let outcome = std::panic::catch_unwind(|| execute(&cli));
    match outcome {
        Ok(Ok((report, summary, passed))) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).expect("serializable")),
                Format::Text => summary.iter().for_each(|l| println!("{l}")),
            }
            ExitCode::from(if passed { PASS } else { CERTIFICATE_FAILURE })
        }
        Ok(Err(f)) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&json!({ "error": f.error, "exit_code": f.code })).expect("serializable")),
                Format::Text => eprintln!("error: {}", f.message),
            }
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(INTERNAL_ERROR),
    }
}
