//! I/O tabling: makes every effectful primitive call idempotent.
//!
//! Each call to an effectful primitive is an I/O action and gets the next
//! number from a global counter. The first time a number is executed inside
//! the tabled region, the real effect is performed and its outputs are saved
//! in an answer block at that number. When a retry has reset the counter and
//! the same number comes round again, the saved outputs are returned instead
//! and the world is left alone.
//!
//! The counter advances in every mode, including `Off`, so that a retry can
//! always say exactly how many actions it would jump back over.

mod table;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use table::{AnswerBlock, IoActionTable, INITIAL_CAPACITY};

use crate::io::{PrimitiveDescriptor, PrimitiveFault, World};
use crate::value::{render_list, Value};

pub type ActionNumber = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Off,
    Full,
    Manual { enabled: bool },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Off => f.write_str("off"),
            Mode::Full => f.write_str("full"),
            Mode::Manual { enabled: true } => f.write_str("manual (tabling on)"),
            Mode::Manual { enabled: false } => f.write_str("manual (tabling off)"),
        }
    }
}

/// Half-open interval of action numbers; `end: None` means still open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Region {
    pub start: ActionNumber,
    pub end: Option<ActionNumber>,
}

impl Region {
    fn upper(&self) -> ActionNumber {
        self.end.unwrap_or(ActionNumber::MAX)
    }

    pub fn contains(&self, n: ActionNumber) -> bool {
        self.start <= n && n < self.upper()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.end {
            Some(end) => write!(f, "[{}, {})", self.start, end),
            None => write!(f, "[{}, open)", self.start),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub n: ActionNumber,
    pub recorded_name: &'static str,
    pub recorded_inputs: Vec<Value>,
    pub attempted_name: &'static str,
    pub attempted_inputs: Vec<Value>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "action {} was recorded as {}{} but replay attempted {}{}",
            self.n,
            self.recorded_name,
            render_list(&self.recorded_inputs),
            self.attempted_name,
            render_list(&self.attempted_inputs)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TablingError {
    #[error("answer block index {index} out of range (block has {len} outputs)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("answer {index} was never saved")]
    RestoreUnset { index: usize },
    #[error("action {0} already has an answer block")]
    SlotOccupied(ActionNumber),
    #[error("action {0} does not fit in the I/O action table")]
    TableOverflow(ActionNumber),
    #[error("cannot reset counter to {target}: it is only at {counter}")]
    TargetInFuture {
        target: ActionNumber,
        counter: ActionNumber,
    },
    #[error("{0}")]
    ModeViolation(String),
    #[error("execution diverged: {0}")]
    Divergence(Box<Divergence>),
    #[error(transparent)]
    Primitive(#[from] PrimitiveFault),
}

/// What happened at one I/O action, as reported to the debugger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IoActionRecord {
    #[serde(rename = "n")]
    pub number: ActionNumber,
    pub name: &'static str,
    pub inputs: Vec<Value>,
    pub outputs: Vec<Value>,
    /// Outputs came from the table; the backend was not invoked.
    pub replayed: bool,
    /// The action number lies inside the tabled region.
    pub tabled: bool,
}

#[derive(Debug, Clone)]
pub struct TablingState {
    counter: ActionNumber,
    high_water: ActionNumber,
    mode: Mode,
    regions: Vec<Region>,
    table: IoActionTable,
    started: bool,
}

impl Default for TablingState {
    fn default() -> Self {
        Self::new(Mode::Full)
    }
}

impl TablingState {
    pub fn new(mode: Mode) -> Self {
        let mut state = TablingState {
            counter: 0,
            high_water: 0,
            mode: Mode::Off,
            regions: Vec::new(),
            table: IoActionTable::default(),
            started: false,
        };
        state.apply_mode(mode);
        state
    }

    fn apply_mode(&mut self, mode: Mode) {
        self.mode = match mode {
            Mode::Manual { .. } => Mode::Manual { enabled: false },
            other => other,
        };
        self.regions = match mode {
            Mode::Full => vec![Region {
                start: 0,
                end: None,
            }],
            _ => Vec::new(),
        };
    }

    pub fn counter(&self) -> ActionNumber {
        self.counter
    }

    pub fn high_water(&self) -> ActionNumber {
        self.high_water
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn table(&self) -> &IoActionTable {
        &self.table
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// The most recently opened region, if any.
    pub fn region(&self) -> Option<Region> {
        self.regions.last().copied()
    }

    /// Only allowed before the first action is allocated.
    pub fn set_mode(&mut self, mode: Mode) -> Result<(), TablingError> {
        if self.started {
            return Err(TablingError::ModeViolation(
                "the tabling mode cannot change once execution has started".into(),
            ));
        }
        self.apply_mode(mode);
        Ok(())
    }

    /// Marks execution as started, freezing the mode.
    pub fn mark_started(&mut self) {
        self.started = true;
    }

    pub fn start_tabling(&mut self) -> Result<(), TablingError> {
        match self.mode {
            Mode::Manual { enabled: false } => {
                self.mode = Mode::Manual { enabled: true };
                self.regions.push(Region {
                    start: self.counter,
                    end: None,
                });
                Ok(())
            }
            Mode::Manual { enabled: true } => Err(TablingError::ModeViolation(
                "tabling is already started".into(),
            )),
            _ => Err(TablingError::ModeViolation(
                "tabling can only be started in manual mode".into(),
            )),
        }
    }

    pub fn stop_tabling(&mut self) -> Result<(), TablingError> {
        match self.mode {
            Mode::Manual { enabled: true } => {
                self.mode = Mode::Manual { enabled: false };
                let counter = self.counter;
                let region = self
                    .regions
                    .last_mut()
                    .expect("enabled manual mode always has an open region");
                // A retry may have moved the counter below the region start.
                region.end = Some(counter.max(region.start));
                Ok(())
            }
            Mode::Manual { enabled: false } => Err(TablingError::ModeViolation(
                "tabling is not started".into(),
            )),
            _ => Err(TablingError::ModeViolation(
                "tabling can only be stopped in manual mode".into(),
            )),
        }
    }

    /// Whether tabling can apply to any action at all. This is the single
    /// flag an untabled run tests per action.
    #[inline]
    pub fn active(&self) -> bool {
        self.mode != Mode::Off
    }

    pub fn is_tabled(&self, n: ActionNumber) -> bool {
        self.regions.iter().any(|r| r.contains(n))
    }

    /// Regions as sorted, disjoint half-open intervals.
    fn merged_regions(&self) -> Vec<(ActionNumber, ActionNumber)> {
        let mut spans: Vec<(ActionNumber, ActionNumber)> =
            self.regions.iter().map(|r| (r.start, r.upper())).collect();
        spans.sort_unstable();
        let mut merged: Vec<(ActionNumber, ActionNumber)> = Vec::with_capacity(spans.len());
        for (start, end) in spans {
            match merged.last_mut() {
                Some(last) if start <= last.1 => last.1 = last.1.max(end),
                _ => merged.push((start, end)),
            }
        }
        merged
    }

    /// True iff every number in `[a, b)` lies inside the recorded regions.
    pub fn region_contains(&self, a: ActionNumber, b: ActionNumber) -> bool {
        a >= b
            || self
                .merged_regions()
                .iter()
                .any(|&(start, end)| start <= a && b <= end)
    }

    /// How many numbers in `[a, b)` lie outside every region.
    pub fn untabled_count(&self, a: ActionNumber, b: ActionNumber) -> u64 {
        if a >= b {
            return 0;
        }
        let covered: u64 = self
            .merged_regions()
            .iter()
            .map(|&(start, end)| end.min(b).saturating_sub(start.max(a)))
            .sum();
        (b - a) - covered
    }

    pub fn allocate_action_number(&mut self) -> ActionNumber {
        self.started = true;
        let n = self.counter;
        self.counter += 1;
        self.high_water = self.high_water.max(self.counter);
        n
    }

    pub fn io_has_occurred(&self, n: ActionNumber) -> Option<&AnswerBlock> {
        self.table.get(n)
    }

    pub fn create_answer_block(
        &mut self,
        n: ActionNumber,
        name: &'static str,
        inputs: Vec<Value>,
        n_outputs: usize,
    ) -> Result<&mut AnswerBlock, TablingError> {
        self.table.create(n, name, inputs, n_outputs)
    }

    pub fn reset_counter(&mut self, target: ActionNumber) -> Result<(), TablingError> {
        if target > self.counter {
            return Err(TablingError::TargetInFuture {
                target,
                counter: self.counter,
            });
        }
        self.counter = target;
        Ok(())
    }

    /// Runs one effectful primitive call through the table.
    ///
    /// The first execution of a tabled action number performs the effect and
    /// saves its outputs. A later execution of the same number checks that it
    /// is the same primitive with the same inputs, then returns the saved
    /// outputs without touching the world. A mismatch is a [`Divergence`].
    #[inline]
    pub fn idempotent_execute(
        &mut self,
        world: &mut World,
        desc: &PrimitiveDescriptor,
        inputs: Vec<Value>,
    ) -> Result<IoActionRecord, TablingError> {
        debug_assert!(desc.effectful, "pure primitives bypass tabling");
        let n = self.allocate_action_number();
        let tabled = self.is_tabled(n);
        if tabled {
            if let Some(block) = self.table.get_mut(n) {
                if block.name() != desc.name || block.inputs() != inputs.as_slice() {
                    return Err(TablingError::Divergence(Box::new(Divergence {
                        n,
                        recorded_name: block.name(),
                        recorded_inputs: block.inputs().to_vec(),
                        attempted_name: desc.name,
                        attempted_inputs: inputs,
                    })));
                }
                let outputs = block.restore_all()?;
                block.note_replay();
                return Ok(IoActionRecord {
                    number: n,
                    name: desc.name,
                    inputs,
                    outputs,
                    replayed: true,
                    tabled,
                });
            }
        }
        let outputs = world.perform(desc, &inputs, n)?;
        if tabled {
            let block = self.create_answer_block(n, desc.name, inputs.clone(), desc.n_outputs)?;
            for (i, v) in outputs.iter().enumerate() {
                block.save_answer(i, v.clone())?;
            }
        }
        Ok(IoActionRecord {
            number: n,
            name: desc.name,
            inputs,
            outputs,
            replayed: false,
            tabled,
        })
    }

    /// Listing for the `io-table` command: one line per occupied slot with
    /// number, primitive, inputs, outputs and replay count, tab-separated.
    pub fn dump_table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for (n, block) in self.table.iter() {
            let outputs: Vec<Value> = block.restore_all().unwrap_or_default();
            let _ = writeln!(
                out,
                "{n}\t{}\t{}\t{}\t{}",
                block.name(),
                render_list(block.inputs()),
                render_list(&outputs),
                block.replay_count()
            );
        }
        out
    }
}
