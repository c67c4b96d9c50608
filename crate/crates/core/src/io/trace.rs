use std::fmt::Write;

use serde::Serialize;

use crate::value::{render_list, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub action_number: u64,
    pub name: &'static str,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
}

/// Append-only log of real backend invocations.
#[derive(Debug, Clone, Default)]
pub struct EffectsTrace {
    records: Vec<TraceRecord>,
}

impl EffectsTrace {
    pub(crate) fn append(
        &mut self,
        action_number: u64,
        name: &'static str,
        inputs: Vec<Value>,
        outputs: Vec<Value>,
    ) {
        let seq = self.records.len() as u64;
        self.records.push(TraceRecord {
            seq,
            action_number,
            name,
            inputs,
            outputs,
        });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One tab-separated line per record: seq, action number, primitive,
/// inputs, outputs. Values use the language's literal syntax.
pub fn dump_trace(trace: &EffectsTrace) -> String {
    let mut out = String::new();
    for r in trace.records() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            r.seq,
            r.action_number,
            r.name,
            render_list(&r.inputs),
            render_list(&r.outputs)
        );
    }
    out
}
