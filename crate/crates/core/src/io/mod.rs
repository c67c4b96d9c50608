//! The outside world as seen by a Tardi program.
//!
//! Every side effect flows through an [`IoBackend`]. [`World`] pairs a backend
//! with the [`EffectsTrace`], the append-only record of what was actually done
//! to the world. The trace is appended to only when a backend is invoked, so
//! replayed actions never show up in it.

pub mod config;
pub mod os;
pub mod registry;
pub mod scripted;
pub mod trace;

use std::any::Any;

use thiserror::Error;

pub use os::OsBackend;
pub use registry::{registry, PrimId, PrimOp, PrimitiveDescriptor};
pub use scripted::ScriptedBackend;
pub use trace::{dump_trace, EffectsTrace, TraceRecord};

use crate::value::Value;

pub const STDIN: u64 = 0;
pub const STDOUT: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpenMode {
    Read,
    Write,
    Append,
}

impl OpenMode {
    pub fn parse(s: &str) -> Option<OpenMode> {
        match s {
            "read" => Some(OpenMode::Read),
            "write" => Some(OpenMode::Write),
            "append" => Some(OpenMode::Append),
            _ => None,
        }
    }
}

/// Raw effects. Failures are reported as messages, which become
/// `error(msg)` values in the program.
pub trait IoBackend {
    fn open(&mut self, path: &str, mode: OpenMode) -> Result<u64, String>;
    /// Must fail on a handle that is not open, including one already closed.
    fn close(&mut self, handle: u64) -> Result<(), String>;
    fn read_char(&mut self, handle: u64) -> Result<Option<char>, String>;
    fn read_line(&mut self, handle: u64) -> Result<Option<String>, String>;
    fn write_string(&mut self, handle: u64, s: &str) -> Result<(), String>;
    fn as_any(&self) -> &dyn Any;
}

/// A primitive was called with arguments of the wrong kind. This is a program
/// bug, not an I/O failure, so it faults instead of producing `error(_)`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{primitive}: argument {index} must be {expected}, got {got}")]
pub struct PrimitiveFault {
    pub primitive: &'static str,
    pub index: usize,
    pub expected: &'static str,
    pub got: String,
}

fn arg_fault(d: &PrimitiveDescriptor, index: usize, expected: &'static str, got: &Value) -> PrimitiveFault {
    PrimitiveFault {
        primitive: d.name,
        index,
        expected,
        got: got.to_string(),
    }
}

fn handle_arg(d: &PrimitiveDescriptor, inputs: &[Value], i: usize) -> Result<u64, PrimitiveFault> {
    match &inputs[i] {
        Value::Handle(h) => Ok(*h),
        other => Err(arg_fault(d, i, "a handle", other)),
    }
}

fn str_arg<'v>(d: &PrimitiveDescriptor, inputs: &'v [Value], i: usize) -> Result<&'v str, PrimitiveFault> {
    match &inputs[i] {
        Value::Str(s) => Ok(s),
        other => Err(arg_fault(d, i, "a string", other)),
    }
}

/// Checks argument count and kinds without performing anything.
pub fn validate(d: &PrimitiveDescriptor, inputs: &[Value]) -> Result<(), PrimitiveFault> {
    if inputs.len() != d.n_inputs {
        return Err(PrimitiveFault {
            primitive: d.name,
            index: inputs.len(),
            expected: "present",
            got: format!("{} argument(s)", inputs.len()),
        });
    }
    match d.op {
        PrimOp::OpenFile => {
            str_arg(d, inputs, 0)?;
            str_arg(d, inputs, 1)?;
        }
        PrimOp::CloseFile | PrimOp::ReadChar | PrimOp::ReadLine => {
            handle_arg(d, inputs, 0)?;
        }
        PrimOp::WriteString => {
            handle_arg(d, inputs, 0)?;
            str_arg(d, inputs, 1)?;
        }
        PrimOp::StringLength | PrimOp::StringToInt => {
            str_arg(d, inputs, 0)?;
        }
        PrimOp::IntToString => {
            if !matches!(inputs[0], Value::Int(_)) {
                return Err(arg_fault(d, 0, "an int", &inputs[0]));
            }
        }
        PrimOp::CharToString | PrimOp::CharCode => {
            if !matches!(inputs[0], Value::Char(_)) {
                return Err(arg_fault(d, 0, "a char", &inputs[0]));
            }
        }
    }
    Ok(())
}

/// Evaluates a pure helper. Never touches a backend.
pub fn eval_pure(d: &PrimitiveDescriptor, inputs: &[Value]) -> Result<Vec<Value>, PrimitiveFault> {
    validate(d, inputs)?;
    let out = match (d.op, &inputs[0]) {
        (PrimOp::StringLength, Value::Str(s)) => Value::Int(s.chars().count() as i64),
        (PrimOp::IntToString, Value::Int(i)) => Value::Str(i.to_string()),
        (PrimOp::StringToInt, Value::Str(s)) => match s.trim().parse::<i64>() {
            Ok(i) => Value::ok_with(Value::Int(i)),
            Err(_) => Value::error(format!("not an integer: {s}")),
        },
        (PrimOp::CharToString, Value::Char(c)) => Value::Str(c.to_string()),
        (PrimOp::CharCode, Value::Char(c)) => Value::Int(*c as i64),
        _ => unreachable!("{} is not a pure primitive", d.name),
    };
    Ok(vec![out])
}

fn unit_result(r: Result<(), String>) -> Value {
    match r {
        Ok(()) => Value::ok(),
        Err(e) => Value::error(e),
    }
}

/// A backend together with the trace of everything done through it.
pub struct World {
    backend: Box<dyn IoBackend>,
    trace: EffectsTrace,
}

impl World {
    pub fn new(backend: Box<dyn IoBackend>) -> Self {
        World {
            backend,
            trace: EffectsTrace::default(),
        }
    }

    pub fn scripted(backend: ScriptedBackend) -> Self {
        World::new(Box::new(backend))
    }

    pub fn trace(&self) -> &EffectsTrace {
        &self.trace
    }

    pub fn backend(&self) -> &dyn IoBackend {
        self.backend.as_ref()
    }

    /// The backend as a [`ScriptedBackend`], if it is one.
    pub fn scripted_backend(&self) -> Option<&ScriptedBackend> {
        self.backend.as_any().downcast_ref()
    }

    /// Performs a primitive for real. Effectful primitives invoke the backend
    /// and append one trace record tagged with `action_number`; pure ones are
    /// evaluated without either.
    pub fn perform(
        &mut self,
        d: &PrimitiveDescriptor,
        inputs: &[Value],
        action_number: u64,
    ) -> Result<Vec<Value>, PrimitiveFault> {
        if !d.effectful {
            return eval_pure(d, inputs);
        }
        validate(d, inputs)?;
        let outputs = match d.op {
            PrimOp::OpenFile => {
                let path = str_arg(d, inputs, 0)?;
                let mode = str_arg(d, inputs, 1)?;
                match OpenMode::parse(mode) {
                    None => vec![Value::error(format!("bad open mode {mode:?}")), Value::Unit],
                    Some(mode) => match self.backend.open(path, mode) {
                        Ok(h) => vec![Value::ok(), Value::Handle(h)],
                        Err(e) => vec![Value::error(e), Value::Unit],
                    },
                }
            }
            PrimOp::CloseFile => vec![unit_result(self.backend.close(handle_arg(d, inputs, 0)?))],
            PrimOp::ReadChar => vec![match self.backend.read_char(handle_arg(d, inputs, 0)?) {
                Ok(Some(c)) => Value::Char(c),
                Ok(None) => Value::Eof,
                Err(e) => Value::error(e),
            }],
            PrimOp::ReadLine => vec![match self.backend.read_line(handle_arg(d, inputs, 0)?) {
                Ok(Some(s)) => Value::Str(s),
                Ok(None) => Value::Eof,
                Err(e) => Value::error(e),
            }],
            PrimOp::WriteString => {
                let h = handle_arg(d, inputs, 0)?;
                let s = str_arg(d, inputs, 1)?;
                vec![unit_result(self.backend.write_string(h, s))]
            }
            _ => unreachable!("{} is effectful but has no backend operation", d.name),
        };
        self.trace.append(action_number, d.name, inputs.to_vec(), outputs.clone());
        Ok(outputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(name: &str) -> &'static PrimitiveDescriptor {
        registry::lookup(name).unwrap().1
    }

    #[test]
    fn read_char_advances_script() {
        let mut world = World::scripted(ScriptedBackend::new("ab"));
        let out = world.perform(desc("read_char"), &[Value::Handle(STDIN)], 0).unwrap();
        assert_eq!(out, vec![Value::Char('a')]);
        assert_eq!(world.scripted_backend().unwrap().stdin_cursor(), 1);
        assert_eq!(world.trace().len(), 1);
    }

    #[test]
    fn close_unknown_handle_is_an_error_value() {
        let mut world = World::scripted(ScriptedBackend::new(""));
        let out = world.perform(desc("close_file"), &[Value::Handle(5)], 0).unwrap();
        assert_eq!(out, vec![Value::error("close on closed stream")]);
    }

    #[test]
    fn open_registers_handle() {
        let mut world = World::scripted(ScriptedBackend::new("").with_file("in.txt", "x"));
        let out = world
            .perform(desc("open_file"), &[Value::Str("in.txt".into()), Value::Str("read".into())], 0)
            .unwrap();
        assert_eq!(out, vec![Value::ok(), Value::Handle(2)]);
        assert_eq!(world.scripted_backend().unwrap().open_handle_count(), 1);
    }

    #[test]
    fn pure_helpers_do_not_trace_and_are_repeatable() {
        let mut world = World::scripted(ScriptedBackend::new(""));
        let inputs = [Value::Str("héllo".into())];
        let a = world.perform(desc("string_length"), &inputs, 0).unwrap();
        let b = world.perform(desc("string_length"), &inputs, 1).unwrap();
        assert_eq!(a, vec![Value::Int(5)]);
        assert_eq!(a, b);
        assert!(world.trace().is_empty());
    }

    #[test]
    fn wrong_argument_kind_faults_without_tracing() {
        let mut world = World::scripted(ScriptedBackend::new(""));
        let err = world.perform(desc("read_char"), &[Value::Int(0)], 0).unwrap_err();
        assert_eq!(err.primitive, "read_char");
        assert!(world.trace().is_empty());
    }
}
