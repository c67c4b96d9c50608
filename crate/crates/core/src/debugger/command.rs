//! Commands shared by the REPL and the protocol server.

use std::path::PathBuf;

use serde::Serialize;

use super::{
    Breakpoint, CallIoSummary, CallRecord, DebugError, IoActionView, RetryOutcome,
    RetrySafetyReport, Session, Verdict, PAGE_SIZE,
};
use crate::lang::Span;
use crate::tabling::{ActionNumber, Mode, Region};
use crate::value::Value;
use crate::vm::{FrameSummary, Status};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Break(String),
    Delete(usize),
    Continue,
    Step,
    Next,
    Finish,
    Retry { depth: usize, force: bool },
    Safety { depth: usize },
    Stack,
    Print { name: String, depth: Option<usize> },
    IoActions { depth: usize, page: usize },
    Calls,
    CallIo { call: u64, page: usize },
    IoTable,
    TableStart,
    TableStop,
    TableStatus,
    TraceDump { path: Option<PathBuf> },
    Status,
    Quit,
}

pub const HELP: &str = "\
commands:
  break <proc | line | file:line>   set a breakpoint
  delete <id>                       remove a breakpoint
  continue | c                      run to the next breakpoint or exit
  step | s                          advance one statement, entering calls
  next | n                          advance one statement, stepping over calls
  finish                            run until the current call returns
  retry <depth> [--force]           restart the active call at <depth>
  safety <depth>                    report whether retrying <depth> is safe
  stack | bt                        show active calls with entry counters
  print <var> [depth]               show a variable
  io-actions <depth> [page]         I/O performed by the call at <depth>
  calls                             recently completed calls
  call-io <id> [page]               I/O performed by a recorded call
  io-table                          every recorded I/O action
  table start | stop | status       manual tabling control
  trace-dump [file]                 write or show the effects trace
  status                            show the program status
  quit | q                          leave the debugger";

fn arg<T: std::str::FromStr>(word: Option<&str>, what: &str) -> Result<T, String> {
    let word = word.ok_or_else(|| format!("missing {what}"))?;
    word.parse().map_err(|_| format!("bad {what}: {word}"))
}

fn opt_arg<T: std::str::FromStr>(word: Option<&str>, what: &str) -> Result<Option<T>, String> {
    word.map(|w| arg(Some(w), what)).transpose()
}

impl Command {
    /// Parses one REPL line. `Ok(None)` for a blank line.
    pub fn parse(line: &str) -> Result<Option<Command>, String> {
        let mut words = line.split_whitespace();
        let Some(head) = words.next() else {
            return Ok(None);
        };
        let cmd = match head {
            "break" | "b" => {
                let rest: Vec<&str> = words.by_ref().collect();
                if rest.is_empty() {
                    return Err("missing breakpoint location".into());
                }
                Command::Break(rest.join(" "))
            }
            "delete" => Command::Delete(arg(words.next(), "breakpoint id")?),
            "continue" | "c" => Command::Continue,
            "step" | "s" => Command::Step,
            "next" | "n" => Command::Next,
            "finish" => Command::Finish,
            "retry" => {
                let mut depth = None;
                let mut force = false;
                for w in words.by_ref() {
                    if w == "--force" || w == "-f" {
                        force = true;
                    } else {
                        depth = Some(arg(Some(w), "depth")?);
                    }
                }
                Command::Retry {
                    depth: depth.ok_or("missing depth")?,
                    force,
                }
            }
            "safety" => Command::Safety {
                depth: arg(words.next(), "depth")?,
            },
            "stack" | "bt" => Command::Stack,
            "print" | "p" => Command::Print {
                name: arg(words.next(), "variable")?,
                depth: opt_arg(words.next(), "depth")?,
            },
            "io-actions" => Command::IoActions {
                depth: arg(words.next(), "depth")?,
                page: opt_arg(words.next(), "page")?.unwrap_or(0),
            },
            "calls" => Command::Calls,
            "call-io" => Command::CallIo {
                call: arg(words.next(), "call id")?,
                page: opt_arg(words.next(), "page")?.unwrap_or(0),
            },
            "io-table" => Command::IoTable,
            "table" => match words.next() {
                Some("start") => Command::TableStart,
                Some("stop") => Command::TableStop,
                Some("status") | None => Command::TableStatus,
                Some(other) => return Err(format!("unknown table subcommand {other}")),
            },
            "trace-dump" => Command::TraceDump {
                path: words.next().map(PathBuf::from),
            },
            "status" => Command::Status,
            "quit" | "q" | "exit" => Command::Quit,
            other => return Err(format!("unknown command {other}")),
        };
        if let Some(extra) = words.next() {
            return Err(format!("unexpected argument {extra}"));
        }
        Ok(Some(cmd))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IoPage {
    pub entry_counter: ActionNumber,
    pub exit_counter: ActionNumber,
    pub total: usize,
    pub page: usize,
    pub pages: usize,
    pub page_size: usize,
    pub actions: Vec<IoActionView>,
}

impl IoPage {
    fn new(summary: &CallIoSummary, page: usize) -> IoPage {
        IoPage {
            entry_counter: summary.entry_counter,
            exit_counter: summary.exit_counter,
            total: summary.actions.len(),
            page,
            pages: summary.pages(),
            page_size: PAGE_SIZE,
            actions: summary.page(page).to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Position {
    pub status: Status,
    pub location: Option<Span>,
    pub depth: usize,
    pub counter: ActionNumber,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetryReply {
    pub verdict: Verdict,
    pub n_actions: u64,
    pub needs_confirm: bool,
    pub report: RetrySafetyReport,
    pub counter: ActionNumber,
}

/// Result of a command, serialized as the protocol response body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Reply {
    Breakpoint { breakpoint: Breakpoint },
    Deleted { deleted: usize },
    Position(Position),
    Retry(RetryReply),
    Safety(RetrySafetyReport),
    Stack { frames: Vec<FrameSummary> },
    Value { name: String, value: Value },
    IoActions(IoPage),
    Calls { active: Vec<CallRecord>, completed: Vec<CallRecord> },
    IoTable { actions: Vec<IoActionView> },
    Table { mode: Mode, regions: Vec<Region>, counter: ActionNumber },
    Trace { path: Option<PathBuf>, text: String },
    Quit { exit_code: i32 },
}

impl Session {
    fn position(&self) -> Position {
        Position {
            status: self.status().clone(),
            location: self.machine().location(),
            depth: self.machine().frames().len().saturating_sub(1),
            counter: self.tabling().counter(),
        }
    }

    fn table_reply(&self) -> Reply {
        Reply::Table {
            mode: self.mode(),
            regions: self.regions().to_vec(),
            counter: self.tabling().counter(),
        }
    }

    /// Runs one command. Events it produces are left in the event queue.
    pub fn execute(&mut self, cmd: &Command) -> Result<Reply, DebugError> {
        Ok(match cmd {
            Command::Break(spec) => Reply::Breakpoint {
                breakpoint: self.cmd_break(spec)?.clone(),
            },
            Command::Delete(id) => {
                self.cmd_delete(*id)?;
                Reply::Deleted { deleted: *id }
            }
            Command::Continue => {
                self.cmd_continue()?;
                Reply::Position(self.position())
            }
            Command::Step => {
                self.cmd_step()?;
                Reply::Position(self.position())
            }
            Command::Next => {
                self.cmd_next()?;
                Reply::Position(self.position())
            }
            Command::Finish => {
                self.cmd_finish()?;
                Reply::Position(self.position())
            }
            Command::Retry { depth, force } => {
                let (report, needs_confirm) = match self.cmd_retry(*depth, *force)? {
                    RetryOutcome::Retried(r) => (r, false),
                    RetryOutcome::NeedsConfirmation(r) => (r, true),
                };
                Reply::Retry(RetryReply {
                    verdict: report.verdict,
                    n_actions: report.n_actions_crossed,
                    needs_confirm,
                    counter: self.tabling().counter(),
                    report,
                })
            }
            Command::Safety { depth } => Reply::Safety(self.safety_check(*depth)?),
            Command::Stack => Reply::Stack {
                frames: self.cmd_stack(),
            },
            Command::Print { name, depth } => Reply::Value {
                name: name.clone(),
                value: self.cmd_print(name, *depth)?,
            },
            Command::IoActions { depth, page } => {
                Reply::IoActions(IoPage::new(&self.list_io_actions(*depth)?, *page))
            }
            Command::Calls => Reply::Calls {
                active: self.calls().active().to_vec(),
                completed: self.calls().completed().rev().take(PAGE_SIZE).cloned().collect(),
            },
            Command::CallIo { call, page } => {
                Reply::IoActions(IoPage::new(&self.list_call_io(*call)?, *page))
            }
            Command::IoTable => Reply::IoTable {
                actions: self.cmd_io_table(),
            },
            Command::TableStart => {
                self.cmd_table_start()?;
                self.table_reply()
            }
            Command::TableStop => {
                self.cmd_table_stop()?;
                self.table_reply()
            }
            Command::TableStatus => self.table_reply(),
            Command::TraceDump { path } => Reply::Trace {
                path: path.clone(),
                text: self.cmd_trace_dump(path.as_deref())?,
            },
            Command::Status => Reply::Position(self.position()),
            Command::Quit => Reply::Quit {
                exit_code: self.exit_code(),
            },
        })
    }
}
