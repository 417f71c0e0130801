//! Batch front end: argument parsing, dispatch and report emission.
//!
//! Every report is a pure function of (subcommand, flags, seed): sweeps are
//! ordered by task index regardless of `--jobs`, and timing goes to stderr.

pub mod battery;
pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;

use clap::Parser;
use serde_json::json;

use commands::{dispatch, Body};
use config::{Cli, RunConfig};
use output::{envelope, manifest, write_csv, Sink};
use prodstate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidSpec(_) | Error::UnsupportedDimension(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = match RunConfig::resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    match execute(&config) {
        Ok(failures) if failures.is_empty() => EXIT_OK,
        Ok(failures) => {
            for f in failures {
                eprintln!("assertion failed: {f}");
            }
            EXIT_FAILED
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(config: &RunConfig) -> prodstate::Result<Vec<String>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| dispatch(config))?;
    let hash = outcome.instance_sha256.as_deref();
    let man = manifest(config, hash);
    let mut sink = Sink::new(config.options.out.clone());
    match &outcome.body {
        Body::Single(report) => sink.line(&envelope(config, hash, report)?),
        Body::Lines(records) => {
            sink.line(&man);
            for r in records {
                sink.line(r);
            }
            sink.line(&json!({ "kind": "failures", "failures": outcome.failures }));
        }
        Body::Raw(text) => sink.raw(text),
    }
    sink.finish(&man)?;
    if let Some(path) = &config.options.csv {
        write_csv(path, &outcome.rows)?;
    }
    Ok(outcome.failures)
}
