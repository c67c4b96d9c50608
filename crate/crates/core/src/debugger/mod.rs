//! Interactive debug sessions.
//!
//! A [`Session`] drives a [`Machine`] with the usual forward commands and
//! adds `retry`, which jumps back to the start of any active call. Before a
//! retry the session works out how many I/O actions it would jump back over
//! and whether all of them were tabled. If some were not, it warns and only
//! proceeds when the user confirms.

pub mod calls;
pub mod command;

use std::path::Path;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::io::World;
use crate::lang::check::{CheckedProgram, Op};
use crate::lang::Span;
use crate::tabling::{
    ActionNumber, Divergence, IoActionRecord, Mode, Region, TablingError, TablingState,
};
use crate::value::Value;
use crate::vm::{init_machine, FrameSummary, Machine, Status, VmError, VmEvent};

pub use calls::{CallLog, CallRecord, CALL_RING_CAPACITY};
pub use command::{Command, Reply};

/// Rows per page in I/O action listings.
pub const PAGE_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Breakpoint,
    StepComplete,
    Entry,
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Safe,
    Unsafe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RetrySafetyReport {
    pub target_depth: usize,
    pub entry_counter: ActionNumber,
    pub current_counter: ActionNumber,
    pub n_actions_crossed: u64,
    /// How many of the crossed actions were not tabled.
    pub n_untabled: u64,
    pub all_tabled: bool,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

impl RetrySafetyReport {
    pub fn is_safe(&self) -> bool {
        self.verdict == Verdict::Safe
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IoActionView {
    pub n: ActionNumber,
    pub name: &'static str,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
    pub replay_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallIoSummary {
    pub entry_counter: ActionNumber,
    pub exit_counter: ActionNumber,
    pub actions: Vec<IoActionView>,
}

impl CallIoSummary {
    pub fn pages(&self) -> usize {
        self.actions.len().div_ceil(PAGE_SIZE).max(1)
    }

    pub fn page(&self, page: usize) -> &[IoActionView] {
        let start = (page * PAGE_SIZE).min(self.actions.len());
        let end = (start + PAGE_SIZE).min(self.actions.len());
        &self.actions[start..end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", content = "payload", rename_all = "snake_case")]
pub enum DebugEvent {
    Stopped {
        reason: StopReason,
        location: Option<Span>,
        depth: usize,
        proc: String,
        message: Option<String>,
    },
    IoAction(IoActionRecord),
    Warning {
        text: String,
        requires_confirmation: bool,
        report: RetrySafetyReport,
    },
    Divergence(Divergence),
    Exited {
        code: i32,
    },
    Retried {
        depth: usize,
        counter: ActionNumber,
        location: Option<Span>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DebugError {
    #[error("no frame at depth {depth} (stack height {height})")]
    BadDepth { depth: usize, height: usize },
    #[error("no such location: {0}")]
    NoSuchLocation(String),
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("actions {entry}..{exit} are not all tabled")]
    NotTabled {
        entry: ActionNumber,
        exit: ActionNumber,
    },
    #[error("no recorded call {0}")]
    UnknownCall(u64),
    #[error("session halted after divergence; only inspection and quit are allowed")]
    Halted,
    #[error("program is not stopped ({0})")]
    NotStopped(Status),
    #[error(transparent)]
    Tabling(#[from] TablingError),
    #[error("{0}")]
    Io(String),
}

impl From<VmError> for DebugError {
    fn from(e: VmError) -> Self {
        match e {
            VmError::BadDepth { depth, height } => DebugError::BadDepth { depth, height },
            VmError::NotLive(status) => DebugError::NotStopped(status),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum BreakSpec {
    Proc(String),
    Line(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Breakpoint {
    pub id: usize,
    pub spec: BreakSpec,
    /// Statement spans that trigger it.
    #[serde(skip)]
    spans: Vec<Span>,
}

/// What a retry did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetryOutcome {
    Retried(RetrySafetyReport),
    /// Unsafe and not confirmed; nothing changed.
    NeedsConfirmation(RetrySafetyReport),
}

#[derive(Debug, Clone, Copy)]
enum Drive {
    Continue,
    Step,
    Next(usize),
    Finish(usize),
}

pub struct Session {
    machine: Machine,
    source_name: String,
    breakpoints: Vec<Breakpoint>,
    next_breakpoint: usize,
    events: Vec<DebugEvent>,
    calls: CallLog,
    divergence: Option<Divergence>,
}

impl Session {
    /// Starts a session stopped at the first statement of `main`.
    pub fn new(
        program: Rc<CheckedProgram>,
        world: World,
        tabling: TablingState,
        source_name: impl Into<String>,
    ) -> Session {
        let machine = init_machine(program, world, tabling);
        Session::with_machine(machine, source_name)
    }

    pub fn with_machine(machine: Machine, source_name: impl Into<String>) -> Session {
        let mut calls = CallLog::default();
        let main = &machine.frames()[0];
        calls.enter(
            machine.program().procs[main.proc].name.clone(),
            0,
            main.io_counter_on_entry,
        );
        let mut session = Session {
            machine,
            source_name: source_name.into(),
            breakpoints: Vec::new(),
            next_breakpoint: 1,
            events: Vec::new(),
            calls,
            divergence: None,
        };
        session.drive(Drive::Step, StopReason::Entry);
        session
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    pub fn machine_mut(&mut self) -> &mut Machine {
        &mut self.machine
    }

    pub fn tabling(&self) -> &TablingState {
        self.machine.tabling()
    }

    pub fn world(&self) -> &World {
        self.machine.world()
    }

    pub fn status(&self) -> &Status {
        self.machine.status()
    }

    pub fn calls(&self) -> &CallLog {
        &self.calls
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn divergence(&self) -> Option<&Divergence> {
        self.divergence.as_ref()
    }

    /// Removes and returns pending events in emission order.
    pub fn take_events(&mut self) -> Vec<DebugEvent> {
        std::mem::take(&mut self.events)
    }

    /// 0 on normal exit or while live, 2 after a fault, 3 after divergence.
    pub fn exit_code(&self) -> i32 {
        match self.machine.status() {
            Status::Exited(code) => *code,
            Status::Error(_) if self.divergence.is_some() => 3,
            Status::Error(_) => 2,
            _ => 0,
        }
    }

    fn ensure_movable(&self) -> Result<(), DebugError> {
        if self.divergence.is_some() {
            return Err(DebugError::Halted);
        }
        if !self.machine.status().is_live() {
            return Err(DebugError::NotStopped(self.machine.status().clone()));
        }
        Ok(())
    }

    pub fn cmd_break(&mut self, spec: &str) -> Result<&Breakpoint, DebugError> {
        let program = Rc::clone(self.machine.program());
        let spec = spec.trim();
        let line = match spec.rsplit_once(':') {
            Some((file, line)) => {
                let same_file = file == self.source_name
                    || Path::new(&self.source_name).file_name() == Path::new(file).file_name();
                if !same_file {
                    return Err(DebugError::NoSuchLocation(spec.into()));
                }
                Some(line.parse::<u32>().map_err(|_| DebugError::NoSuchLocation(spec.into()))?)
            }
            None => spec.parse::<u32>().ok(),
        };
        let (spec, spans) = match line {
            Some(line) => {
                let spans: Vec<Span> = program
                    .statement_spans()
                    .into_iter()
                    .map(|(_, s)| s)
                    .filter(|s| s.line == line)
                    .collect();
                (BreakSpec::Line(line), spans)
            }
            None => {
                let id = program
                    .proc_by_name(spec)
                    .ok_or_else(|| DebugError::NoSuchLocation(spec.into()))?;
                let first = program.blocks[program.procs[id].body].first().map(|s| s.span);
                (BreakSpec::Proc(spec.into()), first.into_iter().collect())
            }
        };
        if spans.is_empty() {
            return Err(DebugError::NoSuchLocation(match spec {
                BreakSpec::Line(l) => format!("line {l}"),
                BreakSpec::Proc(p) => format!("{p} has no statements"),
            }));
        }
        let id = self.next_breakpoint;
        self.next_breakpoint += 1;
        self.breakpoints.push(Breakpoint { id, spec, spans });
        Ok(self.breakpoints.last().unwrap())
    }

    pub fn cmd_delete(&mut self, id: usize) -> Result<(), DebugError> {
        let before = self.breakpoints.len();
        self.breakpoints.retain(|b| b.id != id);
        if self.breakpoints.len() == before {
            return Err(DebugError::NoSuchLocation(format!("breakpoint {id}")));
        }
        Ok(())
    }

    pub fn cmd_continue(&mut self) -> Result<(), DebugError> {
        self.ensure_movable()?;
        self.drive(Drive::Continue, StopReason::Breakpoint);
        Ok(())
    }

    pub fn cmd_step(&mut self) -> Result<(), DebugError> {
        self.ensure_movable()?;
        self.drive(Drive::Step, StopReason::StepComplete);
        Ok(())
    }

    pub fn cmd_next(&mut self) -> Result<(), DebugError> {
        self.ensure_movable()?;
        let depth = self.current_depth();
        self.drive(Drive::Next(depth), StopReason::StepComplete);
        Ok(())
    }

    pub fn cmd_finish(&mut self) -> Result<(), DebugError> {
        self.ensure_movable()?;
        let depth = self.current_depth();
        self.drive(Drive::Finish(depth), StopReason::StepComplete);
        Ok(())
    }

    fn current_depth(&self) -> usize {
        self.machine.frames().len().saturating_sub(1)
    }

    fn at_breakpoint(&self, span: Span) -> bool {
        self.breakpoints.iter().any(|b| b.spans.contains(&span))
    }

    /// Runs the machine until the drive mode says to stop, recording events.
    fn drive(&mut self, drive: Drive, reason: StopReason) {
        loop {
            let Ok(ev) = self.machine.step_event() else {
                return;
            };
            match ev {
                VmEvent::Stmt { span, depth } => {
                    let hit = self.at_breakpoint(span);
                    let done = match drive {
                        Drive::Step => true,
                        Drive::Next(d) => depth <= d,
                        Drive::Finish(d) => depth < d,
                        Drive::Continue => false,
                    };
                    if hit || done {
                        let reason = if hit && !matches!(reason, StopReason::Entry) {
                            StopReason::Breakpoint
                        } else {
                            reason
                        };
                        self.machine.stop();
                        self.events.push(self.stopped(reason, None));
                        return;
                    }
                }
                VmEvent::Call { callee, depth, .. } => {
                    let entry = self.machine.frames()[depth].io_counter_on_entry;
                    self.calls.enter(callee, depth, entry);
                }
                VmEvent::Exit { .. } => {
                    self.calls.exit(self.machine.tabling().counter());
                }
                VmEvent::Io { record, .. } => self.events.push(DebugEvent::IoAction(record)),
                VmEvent::Exited { code } => {
                    self.events.push(DebugEvent::Exited { code });
                    return;
                }
                VmEvent::Fault {
                    description,
                    divergence,
                    ..
                } => {
                    match divergence {
                        Some(d) => {
                            self.events.push(DebugEvent::Divergence((*d).clone()));
                            self.divergence = Some(*d);
                        }
                        None => self.events.push(self.stopped(StopReason::Fault, Some(description))),
                    }
                    return;
                }
            }
        }
    }

    fn stopped(&self, reason: StopReason, message: Option<String>) -> DebugEvent {
        let top = self.machine.top();
        DebugEvent::Stopped {
            reason,
            location: self.machine.location(),
            depth: self.current_depth(),
            proc: top
                .map(|f| self.machine.program().procs[f.proc].name.clone())
                .unwrap_or_default(),
            message,
        }
    }

    fn frame_counter(&self, depth: usize) -> Result<ActionNumber, DebugError> {
        let frames = self.machine.frames();
        frames
            .get(depth)
            .map(|f| f.io_counter_on_entry)
            .ok_or(DebugError::BadDepth {
                depth,
                height: frames.len(),
            })
    }

    /// Whether retrying the frame at `depth` would re-execute untabled I/O.
    /// Changes nothing.
    pub fn safety_check(&self, depth: usize) -> Result<RetrySafetyReport, DebugError> {
        let entry = self.frame_counter(depth)?;
        let tabling = self.machine.tabling();
        let current = tabling.counter();
        let all_tabled = tabling.region_contains(entry, current);
        let n_untabled = tabling.untabled_count(entry, current);
        let reason = (!all_tabled).then(|| {
            format!(
                "{n_untabled} untabled I/O action{} would re-execute",
                if n_untabled == 1 { "" } else { "s" }
            )
        });
        Ok(RetrySafetyReport {
            target_depth: depth,
            entry_counter: entry,
            current_counter: current,
            n_actions_crossed: current - entry,
            n_untabled,
            all_tabled,
            verdict: if all_tabled { Verdict::Safe } else { Verdict::Unsafe },
            reason,
        })
    }

    /// Jumps back to the start of the active call at `depth`.
    ///
    /// An unsafe retry always emits a warning first. Without `confirm_unsafe`
    /// it stops there and leaves the session untouched.
    pub fn cmd_retry(&mut self, depth: usize, confirm_unsafe: bool) -> Result<RetryOutcome, DebugError> {
        self.ensure_movable()?;
        let report = self.safety_check(depth)?;
        if !report.is_safe() {
            self.events.push(DebugEvent::Warning {
                text: format!(
                    "retry of depth {depth} jumps back over {} I/O action(s): {}",
                    report.n_actions_crossed,
                    report.reason.as_deref().unwrap_or_default()
                ),
                requires_confirmation: !confirm_unsafe,
                report: report.clone(),
            });
            if !confirm_unsafe {
                return Ok(RetryOutcome::NeedsConfirmation(report));
            }
        }
        self.machine.tabling_mut().reset_counter(report.entry_counter)?;
        self.machine.pop_to_frame(depth)?;
        self.calls.truncate(depth);
        self.events.push(DebugEvent::Retried {
            depth,
            counter: self.machine.tabling().counter(),
            location: self.machine.location(),
        });
        Ok(RetryOutcome::Retried(report))
    }

    fn summarize(&self, entry: ActionNumber, exit: ActionNumber) -> Result<CallIoSummary, DebugError> {
        let tabling = self.machine.tabling();
        if !tabling.region_contains(entry, exit) {
            return Err(DebugError::NotTabled { entry, exit });
        }
        let actions = tabling
            .table()
            .range(entry, exit)
            .map(|(n, b)| IoActionView {
                n,
                name: b.name(),
                inputs: b.inputs().to_vec(),
                outputs: b.restore_all().unwrap_or_default(),
                replay_count: b.replay_count(),
            })
            .collect();
        Ok(CallIoSummary {
            entry_counter: entry,
            exit_counter: exit,
            actions,
        })
    }

    /// I/O performed so far by the active call at `depth`.
    pub fn list_io_actions(&self, depth: usize) -> Result<CallIoSummary, DebugError> {
        let entry = self.frame_counter(depth)?;
        self.summarize(entry, self.machine.tabling().counter())
    }

    /// I/O performed by a call from the call log, active or completed.
    pub fn list_call_io(&self, call_id: u64) -> Result<CallIoSummary, DebugError> {
        let call = self.calls.find(call_id).ok_or(DebugError::UnknownCall(call_id))?;
        let exit = call.exit_counter.unwrap_or(self.machine.tabling().counter());
        self.summarize(call.entry_counter, exit)
    }

    pub fn cmd_print(&self, name: &str, depth: Option<usize>) -> Result<Value, DebugError> {
        let frames = self.machine.frames();
        let depth = depth.unwrap_or(frames.len().saturating_sub(1));
        let frame = frames.get(depth).ok_or(DebugError::BadDepth {
            depth,
            height: frames.len(),
        })?;
        frame
            .lookup(name)
            .cloned()
            .ok_or_else(|| DebugError::UnboundVariable(name.into()))
    }

    pub fn cmd_stack(&self) -> Vec<FrameSummary> {
        self.machine.current_stack()
    }

    pub fn cmd_io_table(&self) -> Vec<IoActionView> {
        self.machine
            .tabling()
            .table()
            .iter()
            .map(|(n, b)| IoActionView {
                n,
                name: b.name(),
                inputs: b.inputs().to_vec(),
                outputs: b.restore_all().unwrap_or_default(),
                replay_count: b.replay_count(),
            })
            .collect()
    }

    pub fn cmd_table_start(&mut self) -> Result<(), DebugError> {
        if self.divergence.is_some() {
            return Err(DebugError::Halted);
        }
        self.machine.tabling_mut().start_tabling()?;
        Ok(())
    }

    pub fn cmd_table_stop(&mut self) -> Result<(), DebugError> {
        if self.divergence.is_some() {
            return Err(DebugError::Halted);
        }
        self.machine.tabling_mut().stop_tabling()?;
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.machine.tabling().mode()
    }

    pub fn regions(&self) -> &[Region] {
        self.machine.tabling().regions()
    }

    /// Writes the effects trace to `path` and returns its text.
    pub fn cmd_trace_dump(&self, path: Option<&Path>) -> Result<String, DebugError> {
        let text = crate::io::dump_trace(self.machine.world().trace());
        if let Some(path) = path {
            std::fs::write(path, &text).map_err(|e| DebugError::Io(e.to_string()))?;
        }
        Ok(text)
    }

    /// Whether the statement at the current location is a call.
    pub fn at_call(&self) -> bool {
        self.machine
            .top()
            .and_then(|f| f.next_statement(self.machine.program()))
            .is_some_and(|s| matches!(s.op, Op::Call { .. }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::ScriptedBackend;
    use crate::lang::compile;

    fn session(src: &str, stdin: &str, mode: Mode) -> Session {
        Session::new(
            Rc::new(compile(src).unwrap()),
            World::scripted(ScriptedBackend::new(stdin)),
            TablingState::new(mode),
            "t.tardi",
        )
    }

    const THREE_WRITES: &str = r#"
proc three() {
    let _ = write_string(stdout, "a");
    let _ = write_string(stdout, "b");
    let _ = write_string(stdout, "c");
}
proc main() {
    three();
    let _ = write_string(stdout, "!");
}
"#;

    #[test]
    fn starts_stopped_at_entry() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        let evs = s.take_events();
        assert!(matches!(
            evs.as_slice(),
            [DebugEvent::Stopped { reason: StopReason::Entry, depth: 0, .. }]
        ));
    }

    #[test]
    fn next_over_call_counts_three_actions() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        s.take_events();
        s.cmd_next().unwrap();
        assert_eq!(s.tabling().counter(), 3);
        let stops = s
            .take_events()
            .into_iter()
            .filter(|e| matches!(e, DebugEvent::Stopped { .. }))
            .count();
        assert_eq!(stops, 1);
    }

    #[test]
    fn finish_in_main_exits() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        s.cmd_finish().unwrap();
        assert!(matches!(s.take_events().last(), Some(DebugEvent::Exited { code: 0 })));
    }

    #[test]
    fn proc_breakpoint_stops_at_first_statement() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        s.cmd_break("three").unwrap();
        s.cmd_continue().unwrap();
        assert_eq!(s.machine().location(), Some(Span::new(3, 5)));
        assert_eq!(s.machine().frames().len(), 2);
        assert!(matches!(s.cmd_break("nowhere"), Err(DebugError::NoSuchLocation(_))));
        assert!(matches!(s.cmd_break("t.tardi:100"), Err(DebugError::NoSuchLocation(_))));
        assert!(s.cmd_break("t.tardi:4").is_ok());
    }

    #[test]
    fn safe_retry_replays() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        s.cmd_break("t.tardi:5").unwrap();
        s.cmd_continue().unwrap();
        assert_eq!(s.tabling().counter(), 2);
        let summary = s.list_io_actions(1).unwrap();
        assert_eq!(summary.actions.iter().map(|a| a.n).collect::<Vec<_>>(), [0, 1]);
        let out = s.cmd_retry(1, false).unwrap();
        assert!(matches!(out, RetryOutcome::Retried(ref r) if r.n_actions_crossed == 2));
        assert_eq!(s.tabling().counter(), 0);
        s.cmd_continue().unwrap();
        s.cmd_continue().unwrap();
        assert_eq!(s.world().scripted_backend().unwrap().stdout(), "abc!");
        assert_eq!(s.exit_code(), 0);
    }

    #[test]
    fn unsafe_retry_warns_then_waits() {
        let mut s = session(THREE_WRITES, "", Mode::Off);
        s.cmd_next().unwrap();
        s.take_events();
        let report = s.safety_check(0).unwrap();
        assert_eq!(report.reason.as_deref(), Some("3 untabled I/O actions would re-execute"));
        let stack_before = s.cmd_stack();
        let out = s.cmd_retry(0, false).unwrap();
        assert!(matches!(out, RetryOutcome::NeedsConfirmation(_)));
        assert_eq!(s.cmd_stack(), stack_before);
        assert_eq!(s.tabling().counter(), 3);
        let evs = s.take_events();
        assert!(matches!(
            evs.as_slice(),
            [DebugEvent::Warning { requires_confirmation: true, .. }]
        ));
        assert!(matches!(s.cmd_retry(0, true).unwrap(), RetryOutcome::Retried(_)));
        s.cmd_continue().unwrap();
        assert_eq!(s.world().scripted_backend().unwrap().stdout(), "abcabc!");
    }

    #[test]
    fn retry_innermost_before_io_is_safe() {
        let mut s = session(THREE_WRITES, "", Mode::Off);
        s.cmd_step().unwrap();
        assert_eq!(s.machine().frames().len(), 2);
        assert!(s.safety_check(1).unwrap().is_safe());
        assert!(s.safety_check(5).is_err());
    }

    #[test]
    fn print_and_unbound() {
        let src = "proc f(x) { let y = x + 1; return y; } proc main() { let r = f(4); }";
        let mut s = session(src, "", Mode::Full);
        s.cmd_step().unwrap();
        assert_eq!(s.cmd_print("x", None), Ok(Value::Int(4)));
        assert_eq!(
            s.cmd_print("y", None),
            Err(DebugError::UnboundVariable("y".into()))
        );
    }

    #[test]
    fn manual_table_commands() {
        let mut s = session(THREE_WRITES, "", Mode::Full);
        assert!(s.cmd_table_start().is_err());
        let mut m = session(THREE_WRITES, "", Mode::Manual { enabled: false });
        m.cmd_table_start().unwrap();
        assert!(m.cmd_table_start().is_err());
        m.cmd_table_stop().unwrap();
    }
}
