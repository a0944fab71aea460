//! Command-line front end for the comparison simulator.
//!
//! Exit status: 0 on success, 1 when an honest run aborts, a `verify` check
//! fails, or the output cannot be written, 2 on usage errors.

pub mod args;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;

use qpc_sim::session::SessionError;
use qpc_sim::{run_session, run_trials};

pub use args::{parse_args, Mode, OutputFormat, RunSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Rendered output and the status the process should exit with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub text: String,
    pub exit_code: i32,
    /// reason for a nonzero status, for stderr
    pub message: Option<String>,
}

pub fn execute(spec: &RunSpec) -> Result<Execution, SessionError> {
    match spec.mode {
        Mode::Verify => {
            let checks = verify::run_checks();
            let text = match spec.format {
                OutputFormat::Json => output::verify_json(&checks),
                OutputFormat::Csv => output::verify_csv(&checks),
                OutputFormat::Table => output::verify_table(&checks),
            };
            let failed = checks.iter().filter(|c| !c.passed).count();
            Ok(Execution {
                text,
                exit_code: if failed == 0 { EXIT_OK } else { EXIT_FAILURE },
                message: (failed > 0).then(|| format!("{failed} check(s) failed")),
            })
        }
        Mode::Run => {
            let config = &spec.points[0];
            let outcome = run_session(config)?;
            let summary = run_trials(config)?;
            let text = match spec.format {
                OutputFormat::Json => {
                    output::run_json(config, &outcome, &summary, spec.dump_transcript)
                }
                OutputFormat::Csv => output::run_csv(&summary),
                OutputFormat::Table => output::run_table(config, &outcome, &summary),
            };
            Ok(honest_abort_status(text, &[(config.clone(), summary)]))
        }
        Mode::Sweep => {
            let points = spec
                .points
                .iter()
                .map(|c| run_trials(c).map(|s| (c.clone(), s)))
                .collect::<Result<Vec<_>, _>>()?;
            let text = match spec.format {
                OutputFormat::Json => output::sweep_json(&points),
                OutputFormat::Csv => output::sweep_csv(&points),
                OutputFormat::Table => output::sweep_table(&points),
            };
            Ok(honest_abort_status(text, &points))
        }
    }
}

fn honest_abort_status(
    text: String,
    points: &[(qpc_sim::SessionConfig, qpc_sim::session::TrialsSummary)],
) -> Execution {
    let honest_aborts: u64 = points
        .iter()
        .filter(|(c, _)| !c.adversary.is_active())
        .map(|(_, s)| s.aborts)
        .sum();
    Execution {
        text,
        exit_code: if honest_aborts == 0 {
            EXIT_OK
        } else {
            EXIT_FAILURE
        },
        message: (honest_aborts > 0).then(|| format!("{honest_aborts} honest trial(s) aborted")),
    }
}

/// Parses `argv`, runs, writes output, and returns the process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let spec = match parse_args(argv) {
        Ok(spec) => spec,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    if spec.points.iter().any(|c| c.decoys == 0) {
        eprintln!("warning: zero decoys per link; eavesdropping cannot be detected");
    }
    let exec = match execute(&spec) {
        Ok(exec) => exec,
        Err(err) => {
            eprintln!("error: {err}");
            return EXIT_FAILURE;
        }
    };
    let written = match &spec.output {
        Some(path) => std::fs::write(path, &exec.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(exec.text.as_bytes())
            .map_err(|e| format!("cannot write to stdout: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return EXIT_FAILURE;
    }
    if let Some(msg) = &exec.message {
        eprintln!("error: {msg}");
    }
    exec.exit_code
}
