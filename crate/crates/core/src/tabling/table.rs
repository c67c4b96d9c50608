use serde::Serialize;

use super::{ActionNumber, TablingError};
use crate::value::Value;

pub const INITIAL_CAPACITY: usize = 64;

/// Recorded identity, inputs and outputs of one I/O action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnswerBlock {
    name: &'static str,
    inputs: Vec<Value>,
    outputs: Vec<Option<Value>>,
    replay_count: u64,
}

impl AnswerBlock {
    fn new(name: &'static str, inputs: Vec<Value>, n_outputs: usize) -> Self {
        AnswerBlock {
            name,
            inputs,
            outputs: vec![None; n_outputs],
            replay_count: 0,
        }
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn inputs(&self) -> &[Value] {
        &self.inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn replay_count(&self) -> u64 {
        self.replay_count
    }

    pub(crate) fn note_replay(&mut self) {
        self.replay_count += 1;
    }

    pub fn save_answer(&mut self, index: usize, value: Value) -> Result<(), TablingError> {
        let len = self.outputs.len();
        let slot = self
            .outputs
            .get_mut(index)
            .ok_or(TablingError::IndexOutOfRange { index, len })?;
        *slot = Some(value);
        Ok(())
    }

    pub fn restore_answer(&self, index: usize) -> Result<Value, TablingError> {
        match self.outputs.get(index) {
            None => Err(TablingError::IndexOutOfRange {
                index,
                len: self.outputs.len(),
            }),
            Some(None) => Err(TablingError::RestoreUnset { index }),
            Some(Some(v)) => Ok(v.clone()),
        }
    }

    /// All outputs, in order. Fails if any was never saved.
    pub fn restore_all(&self) -> Result<Vec<Value>, TablingError> {
        (0..self.outputs.len()).map(|i| self.restore_answer(i)).collect()
    }

    /// Values held by this block: inputs, saved outputs, and one for the
    /// primitive's identity.
    pub fn stored_values(&self) -> usize {
        self.inputs.len() + self.outputs.iter().filter(|o| o.is_some()).count() + 1
    }
}

/// Array indexed by action number. Empty slots are `None`; the array doubles
/// whenever an action number falls past its end.
#[derive(Debug, Clone)]
pub struct IoActionTable {
    slots: Vec<Option<Box<AnswerBlock>>>,
    occupied: usize,
}

impl Default for IoActionTable {
    fn default() -> Self {
        Self::with_capacity(INITIAL_CAPACITY)
    }
}

impl IoActionTable {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity > 0, "table capacity must be positive");
        IoActionTable {
            slots: vec![None; capacity],
            occupied: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn occupied(&self) -> usize {
        self.occupied
    }

    pub fn get(&self, n: ActionNumber) -> Option<&AnswerBlock> {
        self.slots.get(usize::try_from(n).ok()?)?.as_deref()
    }

    pub(crate) fn get_mut(&mut self, n: ActionNumber) -> Option<&mut AnswerBlock> {
        self.slots.get_mut(usize::try_from(n).ok()?)?.as_deref_mut()
    }

    pub fn create(
        &mut self,
        n: ActionNumber,
        name: &'static str,
        inputs: Vec<Value>,
        n_outputs: usize,
    ) -> Result<&mut AnswerBlock, TablingError> {
        let index = usize::try_from(n).map_err(|_| TablingError::TableOverflow(n))?;
        if index >= self.slots.len() {
            let mut capacity = self.slots.len();
            while index >= capacity {
                capacity = capacity
                    .checked_mul(2)
                    .ok_or(TablingError::TableOverflow(n))?;
            }
            self.slots.resize(capacity, None);
        }
        let slot = &mut self.slots[index];
        if slot.is_some() {
            return Err(TablingError::SlotOccupied(n));
        }
        self.occupied += 1;
        Ok(slot.insert(Box::new(AnswerBlock::new(name, inputs, n_outputs))))
    }

    /// Occupied slots in `[start, end)`, in order.
    pub fn range(
        &self,
        start: ActionNumber,
        end: ActionNumber,
    ) -> impl Iterator<Item = (ActionNumber, &AnswerBlock)> + '_ {
        let lo = usize::try_from(start).unwrap_or(usize::MAX).min(self.slots.len());
        let hi = usize::try_from(end).unwrap_or(usize::MAX).min(self.slots.len()).max(lo);
        self.slots[lo..hi]
            .iter()
            .enumerate()
            .filter_map(move |(i, s)| s.as_deref().map(|b| ((lo + i) as ActionNumber, b)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ActionNumber, &AnswerBlock)> + '_ {
        self.range(0, self.slots.len() as ActionNumber)
    }

    pub fn stored_value_count(&self) -> usize {
        self.iter().map(|(_, b)| b.stored_values()).sum()
    }
}
