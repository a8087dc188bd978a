//! Command-line front end: `weakshift <command> [--config=path] [--key=value ...]`.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_file, Command, RunConfig};
pub use output::{field_csv, format_float};

use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_LIBRARY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Library(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Library(e) if e.is_convergence_failure() => EXIT_CONVERGENCE,
            CliError::Library(_) => EXIT_LIBRARY,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub fn usage() -> String {
    let mut s = String::from(
        "usage: weakshift <command> [--config=path] [--key=value ...]\n\
         \n\
         Flags override config-file entries, which override defaults.\n\
         Relative output paths are resolved against $WEAKSHIFT_OUTPUT_DIR when set.\n\
         \n\
         commands:\n",
    );
    for c in Command::ALL {
        s.push_str(&format!("  {:<13} {}\n", c.name(), c.summary()));
    }
    s.push_str("\nrun `weakshift <command> --help` for its keys and defaults\n");
    s
}

fn command_help(cmd: Command) -> String {
    let mut s = format!("weakshift {cmd}: {}\n\nkeys (default):\n", cmd.summary());
    for (k, v) in cmd.keys() {
        let v = if v.is_empty() { "(unset)" } else { v };
        s.push_str(&format!("  {k:<13} {v}\n"));
    }
    s
}

/// Resolves the destination of a command output. `None` means stdout.
pub(crate) fn resolve_output(cfg: &RunConfig, output_dir: Option<&Path>) -> Option<PathBuf> {
    match (cfg.output(), output_dir) {
        (Some(p), Some(dir)) if p.is_relative() => Some(dir.join(p)),
        (Some(p), _) => Some(p),
        (None, Some(dir)) => Some(dir.join(format!("{}.csv", cfg.command))),
        (None, None) => None,
    }
}

/// Parses `args` (without the program name), runs the command and returns
/// the process exit code. Results go to `stdout` or to files; diagnostics
/// to `stderr`.
pub fn run(args: &[String], output_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match try_run(args, output_dir, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if matches!(e, CliError::Usage(_)) {
                let _ = writeln!(stderr, "run `weakshift help` for usage");
            }
            e.exit_code()
        }
    }
}

fn try_run(args: &[String], output_dir: Option<&Path>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let Some(first) = args.first() else {
        let _ = write!(stderr, "{}", usage());
        return Ok(EXIT_USAGE);
    };
    if matches!(first.as_str(), "help" | "--help" | "-h") {
        write!(stdout, "{}", usage()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        return Ok(EXIT_OK);
    }
    let cmd = Command::parse(first).ok_or_else(|| CliError::Usage(format!("unknown command {first:?}")))?;
    let rest = &args[1..];
    if rest.iter().any(|a| a == "--help" || a == "-h") {
        write!(stdout, "{}", command_help(cmd)).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        return Ok(EXIT_OK);
    }
    let mut file_text = None;
    let mut flags = Vec::new();
    for a in rest {
        if let Some(path) = a.strip_prefix("--config=") {
            let path = Path::new(path);
            file_text = Some(std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?);
        } else {
            flags.push(a.clone());
        }
    }
    let cfg = parse_config(cmd, &flags, file_text.as_deref())?;
    commands::execute(&cfg, output_dir, stdout, stderr)
}
