//! Command-line parsing and session construction.

use std::path::PathBuf;
use std::rc::Rc;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::io::config::parse_script;
use crate::io::{OsBackend, World};
use crate::lang::{compile, CheckedProgram};
use crate::tabling::{Mode, TablingState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Os(PathBuf),
    Script(PathBuf),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("os", dir)) if !dir.is_empty() => Ok(BackendSpec::Os(dir.into())),
            Some(("script", file)) if !file.is_empty() => Ok(BackendSpec::Script(file.into())),
            _ => Err(format!("expected os:<dir> or script:<file>, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServeSpec {
    Stdio,
    Tcp(u16),
}

impl FromStr for ServeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stdio" {
            return Ok(ServeSpec::Stdio);
        }
        match s.strip_prefix("tcp:").map(str::parse::<u16>) {
            Some(Ok(port)) => Ok(ServeSpec::Tcp(port)),
            _ => Err(format!("expected stdio or tcp:<port>, got {s:?}")),
        }
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "off" => Ok(Mode::Off),
        "full" => Ok(Mode::Full),
        "manual" => Ok(Mode::Manual { enabled: false }),
        _ => Err(format!("expected off, full or manual, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "tardi", version, about = "Time-travel debugger with I/O tabling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Debug a program interactively or over the protocol.
    Debug {
        #[command(flatten)]
        launch: LaunchConfig,
        /// Protocol endpoint instead of the REPL.
        #[arg(long, value_name = "stdio|tcp:PORT")]
        serve: Option<ServeSpec>,
        /// Read REPL commands from a file instead of stdin.
        #[arg(long, value_name = "FILE")]
        commands: Option<PathBuf>,
    },
    /// Run a program to completion.
    Run {
        #[command(flatten)]
        launch: LaunchConfig,
    },
    /// Check a program without running it.
    Check {
        program: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LaunchConfig {
    pub program: PathBuf,
    #[arg(long = "table-io", value_name = "off|full|manual", default_value = "full", value_parser = parse_mode)]
    pub mode: Mode,
    #[arg(long, value_name = "os:DIR|script:FILE", default_value = "os:.")]
    pub backend: BackendSpec,
}

/// Parses arguments, including the program name in `argv[0]`.
pub fn parse_cli<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv)
}

pub fn load_program(path: &std::path::Path) -> Result<CheckedProgram, String> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    compile(&source).map_err(|e| e.with_file(&path.display().to_string()).to_string())
}

impl LaunchConfig {
    pub fn world(&self) -> Result<World> {
        Ok(match &self.backend {
            BackendSpec::Os(dir) => World::new(Box::new(
                OsBackend::new(dir).with_context(|| format!("sandbox {}", dir.display()))?,
            )),
            BackendSpec::Script(file) => {
                let text = std::fs::read_to_string(file)
                    .with_context(|| format!("reading {}", file.display()))?;
                let backend = parse_script(&text)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", file.display()))?;
                World::scripted(backend)
            }
        })
    }

    pub fn tabling(&self) -> TablingState {
        TablingState::new(self.mode)
    }

    pub fn program(&self) -> Result<Rc<CheckedProgram>, String> {
        load_program(&self.program).map(Rc::new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn debug_args(argv: &[&str]) -> (LaunchConfig, Option<ServeSpec>) {
        match parse_cli(argv).unwrap().command {
            CliCommand::Debug { launch, serve, .. } => (launch, serve),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn manual_and_scripted() {
        let (launch, serve) = debug_args(&[
            "tardi",
            "debug",
            "p.tardi",
            "--table-io=manual",
            "--backend",
            "script:s.txt",
        ]);
        assert_eq!(launch.mode, Mode::Manual { enabled: false });
        assert_eq!(launch.backend, BackendSpec::Script("s.txt".into()));
        assert_eq!(serve, None);
    }

    #[test]
    fn defaults() {
        let (launch, serve) = debug_args(&["tardi", "debug", "p.tardi"]);
        assert_eq!(launch.mode, Mode::Full);
        assert_eq!(launch.backend, BackendSpec::Os(".".into()));
        assert_eq!(serve, None);
        let (_, serve) = debug_args(&["tardi", "debug", "p.tardi", "--serve", "tcp:4711"]);
        assert_eq!(serve, Some(ServeSpec::Tcp(4711)));
    }

    #[test]
    fn usage_errors() {
        assert!(parse_cli(["tardi", "debug", "p.tardi", "--table-io=banana"]).is_err());
        assert!(parse_cli(["tardi", "debug"]).is_err());
        assert!(parse_cli(["tardi", "debug", "p.tardi", "--backend", "ftp:x"]).is_err());
        assert!(parse_cli(["tardi", "debug", "p.tardi", "--serve", "tcp:http"]).is_err());
    }
}
