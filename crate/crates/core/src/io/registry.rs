//! Built-in primitives.
//!
//! Effectful primitives go through the I/O tabling layer. Pure helpers are
//! evaluated inline and never reach a backend or the effects trace.
//! There are deliberately no clock, process or resource-usage primitives:
//! their state cannot be made private to a debugging session.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimitiveDescriptor {
    pub name: &'static str,
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub effectful: bool,
    #[serde(skip)]
    pub op: PrimOp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimOp {
    OpenFile,
    CloseFile,
    ReadChar,
    ReadLine,
    WriteString,
    StringLength,
    IntToString,
    StringToInt,
    CharToString,
    CharCode,
}

/// Index into [`registry`].
pub type PrimId = usize;

const fn prim(
    name: &'static str,
    n_inputs: usize,
    n_outputs: usize,
    effectful: bool,
    op: PrimOp,
) -> PrimitiveDescriptor {
    PrimitiveDescriptor {
        name,
        n_inputs,
        n_outputs,
        effectful,
        op,
    }
}

static REGISTRY: [PrimitiveDescriptor; 10] = [
    prim("open_file", 2, 2, true, PrimOp::OpenFile),
    prim("close_file", 1, 1, true, PrimOp::CloseFile),
    prim("read_char", 1, 1, true, PrimOp::ReadChar),
    prim("read_line", 1, 1, true, PrimOp::ReadLine),
    prim("write_string", 2, 1, true, PrimOp::WriteString),
    prim("string_length", 1, 1, false, PrimOp::StringLength),
    prim("int_to_string", 1, 1, false, PrimOp::IntToString),
    prim("string_to_int", 1, 1, false, PrimOp::StringToInt),
    prim("char_to_string", 1, 1, false, PrimOp::CharToString),
    prim("char_code", 1, 1, false, PrimOp::CharCode),
];

pub fn registry() -> &'static [PrimitiveDescriptor] {
    &REGISTRY
}

pub fn lookup(name: &str) -> Option<(PrimId, &'static PrimitiveDescriptor)> {
    REGISTRY.iter().enumerate().find(|(_, d)| d.name == name)
}

pub fn descriptor(id: PrimId) -> &'static PrimitiveDescriptor {
    &REGISTRY[id]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn read_char_shape() {
        let (_, d) = lookup("read_char").unwrap();
        assert_eq!((d.n_inputs, d.n_outputs, d.effectful), (1, 1, true));
    }

    #[test]
    fn open_file_returns_code_and_handle() {
        let (_, d) = lookup("open_file").unwrap();
        assert_eq!((d.n_inputs, d.n_outputs), (2, 2));
    }

    #[test]
    fn pure_helpers() {
        assert!(!lookup("string_length").unwrap().1.effectful);
        assert!(!lookup("int_to_string").unwrap().1.effectful);
    }

    #[test]
    fn no_irreversible_kernel_state() {
        assert!(lookup("getpid").is_none());
        assert!(lookup("getrusage").is_none());
    }

    #[test]
    fn names_unique() {
        let names: HashSet<_> = registry().iter().map(|d| d.name).collect();
        assert_eq!(names.len(), registry().len());
    }
}
