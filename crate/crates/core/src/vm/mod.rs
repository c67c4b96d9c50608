//! Tree-walking interpreter with an explicit call stack.
//!
//! Each frame remembers the I/O action counter as it was when the frame was
//! pushed. Retrying a call means popping back to that frame, restarting it
//! from its first statement with its original arguments, and resetting the
//! counter to the remembered value. The interpreter only does the popping;
//! the debugger coordinates the counter reset.

pub mod eval;

use std::collections::VecDeque;
use std::fmt;
use std::rc::Rc;

use serde::Serialize;
use thiserror::Error;

use crate::io::{registry, validate, PrimitiveFault, World};
use crate::lang::check::{BlockId, Callee, CheckedProgram, CheckedStmt, Ident, Op, ProcId};
use crate::lang::Span;
use crate::tabling::{ActionNumber, Divergence, IoActionRecord, TablingError, TablingState};
use crate::value::Value;

use eval::{bind_all, eval, match_pattern, Env};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VmEvent {
    Call {
        callee: String,
        args: Vec<Value>,
        depth: usize,
        span: Span,
    },
    Exit {
        callee: String,
        outputs: Vec<Value>,
        depth: usize,
    },
    Stmt {
        span: Span,
        depth: usize,
    },
    Io {
        record: IoActionRecord,
        depth: usize,
        span: Span,
    },
    Exited {
        code: i32,
    },
    Fault {
        description: String,
        span: Option<Span>,
        divergence: Option<Box<Divergence>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "state", content = "detail", rename_all = "snake_case")]
pub enum Status {
    Running,
    Stopped,
    Exited(i32),
    Error(String),
}

impl Status {
    pub fn is_live(&self) -> bool {
        matches!(self, Status::Running | Status::Stopped)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Running => f.write_str("running"),
            Status::Stopped => f.write_str("stopped"),
            Status::Exited(code) => write!(f, "exited with code {code}"),
            Status::Error(e) => write!(f, "error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VmError {
    #[error("no frame at depth {depth} (stack height {height})")]
    BadDepth { depth: usize, height: usize },
    #[error("program is not running ({0})")]
    NotLive(Status),
}

/// How effectful primitive calls reach the tabling layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispatchMode {
    /// Every call goes through `idempotent_execute`.
    #[default]
    Layered,
    /// Untabled runs bypass the tabling layer after a single mode test.
    Inline,
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub proc: ProcId,
    pub depth: usize,
    pub call_site: Option<Span>,
    pub io_counter_on_entry: ActionNumber,
    args: Vec<Value>,
    env: Env,
    /// Block and index of the next statement, innermost block last.
    cursor: Vec<(BlockId, usize)>,
    /// The next statement was already reported by a `Stmt` event.
    announced: bool,
    /// Targets to bind when the callee above this frame returns.
    awaiting: Option<Vec<Option<Ident>>>,
}

impl Frame {
    fn new(
        program: &CheckedProgram,
        proc: ProcId,
        args: Vec<Value>,
        depth: usize,
        call_site: Option<Span>,
        counter: ActionNumber,
    ) -> Frame {
        let mut frame = Frame {
            proc,
            depth,
            call_site,
            io_counter_on_entry: counter,
            args,
            env: Env::new(),
            cursor: Vec::new(),
            announced: false,
            awaiting: None,
        };
        frame.restart(program);
        frame
    }

    fn restart(&mut self, program: &CheckedProgram) {
        let p = &program.procs[self.proc];
        self.env = p.params.iter().cloned().zip(self.args.iter().cloned()).collect();
        self.cursor = vec![(p.body, 0)];
        self.announced = false;
        self.awaiting = None;
    }

    pub fn args(&self) -> &[Value] {
        &self.args
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        self.env.get(name)
    }

    /// Bound variables, sorted by name.
    pub fn bindings(&self) -> Vec<(&str, &Value)> {
        let mut out: Vec<_> = self.env.iter().map(|(k, v)| (&**k, v)).collect();
        out.sort_by(|a, b| a.0.cmp(b.0));
        out
    }

    /// The statement the frame will execute next, if any remain.
    pub fn next_statement<'p>(&self, program: &'p CheckedProgram) -> Option<&'p CheckedStmt> {
        self.cursor
            .iter()
            .rev()
            .find_map(|&(b, i)| program.blocks[b].get(i))
    }

    pub fn location(&self, program: &CheckedProgram) -> Option<Span> {
        self.next_statement(program).map(|s| s.span)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameSummary {
    pub depth: usize,
    pub proc: String,
    pub call_site: Option<Span>,
    pub io_counter_on_entry: ActionNumber,
    pub location: Option<Span>,
}

pub struct Machine {
    program: Rc<CheckedProgram>,
    stack: Vec<Frame>,
    status: Status,
    tabling: TablingState,
    world: World,
    dispatch: DispatchMode,
    queued: VecDeque<VmEvent>,
}

/// Builds a machine whose stack holds a single frame for `main`. The frame's
/// counter snapshot is the tabling state's current counter.
pub fn init_machine(program: Rc<CheckedProgram>, world: World, tabling: TablingState) -> Machine {
    let main = Frame::new(&program, program.entry, Vec::new(), 0, None, tabling.counter());
    Machine {
        program,
        stack: vec![main],
        status: Status::Running,
        tabling,
        world,
        dispatch: DispatchMode::Layered,
        queued: VecDeque::new(),
    }
}

enum Flow {
    Continue,
    Emit(VmEvent),
}

/// Anything that stops the program.
enum Fault {
    Runtime(String),
    Tabling(TablingError),
}

impl From<String> for Fault {
    fn from(msg: String) -> Self {
        Fault::Runtime(msg)
    }
}

impl From<TablingError> for Fault {
    fn from(e: TablingError) -> Self {
        Fault::Tabling(e)
    }
}

impl From<PrimitiveFault> for Fault {
    fn from(e: PrimitiveFault) -> Self {
        Fault::Runtime(e.to_string())
    }
}

impl Machine {
    pub fn program(&self) -> &Rc<CheckedProgram> {
        &self.program
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn frames(&self) -> &[Frame] {
        &self.stack
    }

    pub fn top(&self) -> Option<&Frame> {
        self.stack.last()
    }

    pub fn tabling(&self) -> &TablingState {
        &self.tabling
    }

    pub fn tabling_mut(&mut self) -> &mut TablingState {
        &mut self.tabling
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn set_dispatch(&mut self, dispatch: DispatchMode) {
        self.dispatch = dispatch;
    }

    pub fn into_parts(self) -> (World, TablingState) {
        (self.world, self.tabling)
    }

    /// Marks a running machine as stopped. No effect otherwise.
    pub fn stop(&mut self) {
        if self.status == Status::Running {
            self.status = Status::Stopped;
        }
    }

    pub fn location(&self) -> Option<Span> {
        self.top().and_then(|f| f.location(&self.program))
    }

    pub fn current_stack(&self) -> Vec<FrameSummary> {
        self.stack
            .iter()
            .map(|f| FrameSummary {
                depth: f.depth,
                proc: self.program.procs[f.proc].name.clone(),
                call_site: f.call_site,
                io_counter_on_entry: f.io_counter_on_entry,
                location: f.location(&self.program),
            })
            .collect()
    }

    /// Discards every frame above `depth` and restarts the frame at `depth`
    /// with its original arguments. The I/O counter is left alone.
    pub fn pop_to_frame(&mut self, depth: usize) -> Result<(), VmError> {
        if !self.status.is_live() {
            return Err(VmError::NotLive(self.status.clone()));
        }
        if depth >= self.stack.len() {
            return Err(VmError::BadDepth {
                depth,
                height: self.stack.len(),
            });
        }
        self.stack.truncate(depth + 1);
        let program = Rc::clone(&self.program);
        let frame = self.stack.last_mut().expect("depth is in range");
        frame.restart(&program);
        // Stopped at the first statement, which counts as already reported.
        frame.announced = true;
        self.queued.clear();
        self.status = Status::Stopped;
        Ok(())
    }

    /// Runs until the next event.
    pub fn step_event(&mut self) -> Result<VmEvent, VmError> {
        if let Some(ev) = self.queued.pop_front() {
            return Ok(ev);
        }
        if !self.status.is_live() {
            return Err(VmError::NotLive(self.status.clone()));
        }
        self.status = Status::Running;
        loop {
            match self.advance() {
                Ok(Flow::Continue) => continue,
                Ok(Flow::Emit(ev)) => return Ok(ev),
                Err(fault) => {
                    let span = self.location();
                    let (description, divergence) = match fault {
                        Fault::Tabling(TablingError::Divergence(d)) => (d.to_string(), Some(d)),
                        Fault::Tabling(other) => (other.to_string(), None),
                        Fault::Runtime(msg) => (msg, None),
                    };
                    self.status = Status::Error(description.clone());
                    return Ok(VmEvent::Fault {
                        description,
                        span,
                        divergence,
                    });
                }
            }
        }
    }

    /// Steps until the program exits or faults; returns the final status.
    pub fn run_to_end(&mut self) -> &Status {
        while self.step_event().is_ok() {}
        &self.status
    }

    fn advance(&mut self) -> Result<Flow, Fault> {
        let program = Rc::clone(&self.program);
        let frame = self.stack.last_mut().expect("live machine has a frame");
        while let Some(&(b, i)) = frame.cursor.last() {
            if i < program.blocks[b].len() {
                break;
            }
            frame.cursor.pop();
        }
        let Some(&(block, index)) = frame.cursor.last() else {
            return Ok(self.do_return(Vec::new()));
        };
        let stmt = &program.blocks[block][index];
        if !frame.announced {
            frame.announced = true;
            return Ok(Flow::Emit(VmEvent::Stmt {
                span: stmt.span,
                depth: frame.depth,
            }));
        }
        frame.announced = false;
        frame.cursor.last_mut().unwrap().1 += 1;
        match &stmt.op {
            Op::Bind { target, value } => {
                let v = eval(value, &mut frame.env)?;
                if let Some(name) = target {
                    frame.env.insert(name.clone(), v);
                }
                Ok(Flow::Continue)
            }
            Op::If {
                cond,
                then_block,
                else_block,
            } => {
                match eval(cond, &mut frame.env)? {
                    Value::Bool(true) => frame.cursor.push((*then_block, 0)),
                    Value::Bool(false) => frame.cursor.extend(else_block.map(|b| (b, 0))),
                    v => return Err(format!("condition must be a bool, got {v}").into()),
                }
                Ok(Flow::Continue)
            }
            Op::Match { scrutinee, arms } => {
                let v = eval(scrutinee, &mut frame.env)?;
                for (pattern, body) in arms {
                    let mut binds = Vec::new();
                    if match_pattern(pattern, &v, &mut binds) {
                        bind_all(&mut frame.env, binds);
                        frame.cursor.push((*body, 0));
                        return Ok(Flow::Continue);
                    }
                }
                Err(format!("no match arm for {v}").into())
            }
            Op::Return(values) => {
                let mut outputs = Vec::with_capacity(values.len());
                for e in values {
                    outputs.push(eval(e, &mut frame.env)?);
                }
                Ok(self.do_return(outputs))
            }
            Op::Call {
                targets,
                callee,
                args,
            } => {
                let mut values = Vec::with_capacity(args.len());
                for e in args {
                    values.push(eval(e, &mut frame.env)?);
                }
                match *callee {
                    Callee::Proc(id) => {
                        frame.awaiting = Some(targets.clone());
                        let depth = frame.depth + 1;
                        let callee = Frame::new(
                            &program,
                            id,
                            values.clone(),
                            depth,
                            Some(stmt.span),
                            self.tabling.counter(),
                        );
                        self.stack.push(callee);
                        Ok(Flow::Emit(VmEvent::Call {
                            callee: program.procs[id].name.clone(),
                            args: values,
                            depth,
                            span: stmt.span,
                        }))
                    }
                    Callee::Primitive(id) => {
                        let desc = registry::descriptor(id);
                        validate(desc, &values)?;
                        let depth = frame.depth;
                        if !desc.effectful {
                            let outputs = self.world.perform(desc, &values, 0)?;
                            bind_targets(self.stack.last_mut().unwrap(), targets, outputs);
                            return Ok(Flow::Continue);
                        }
                        let record = if self.dispatch == DispatchMode::Inline && !self.tabling.active() {
                            let n = self.tabling.allocate_action_number();
                            let outputs = self.world.perform(desc, &values, n)?;
                            IoActionRecord {
                                number: n,
                                name: desc.name,
                                inputs: values,
                                outputs,
                                replayed: false,
                                tabled: false,
                            }
                        } else {
                            self.tabling.idempotent_execute(&mut self.world, desc, values)?
                        };
                        bind_targets(self.stack.last_mut().unwrap(), targets, record.outputs.clone());
                        Ok(Flow::Emit(VmEvent::Io {
                            record,
                            depth,
                            span: stmt.span,
                        }))
                    }
                }
            }
        }
    }

    fn do_return(&mut self, outputs: Vec<Value>) -> Flow {
        let frame = self.stack.pop().expect("returning frame exists");
        let callee = self.program.procs[frame.proc].name.clone();
        match self.stack.last_mut() {
            Some(caller) => {
                let targets = caller.awaiting.take().unwrap_or_default();
                bind_targets(caller, &targets, outputs.clone());
            }
            None => {
                self.status = Status::Exited(0);
                self.queued.push_back(VmEvent::Exited { code: 0 });
            }
        }
        Flow::Emit(VmEvent::Exit {
            callee,
            outputs,
            depth: frame.depth,
        })
    }
}

fn bind_targets(frame: &mut Frame, targets: &[Option<Ident>], outputs: Vec<Value>) {
    for (target, v) in targets.iter().zip(outputs) {
        if let Some(name) = target {
            frame.env.insert(name.clone(), v);
        }
    }
}
