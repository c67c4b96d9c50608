use std::collections::VecDeque;

use serde::Serialize;

use crate::tabling::ActionNumber;

/// Completed calls kept for `call-io`; older ones are dropped.
pub const CALL_RING_CAPACITY: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallRecord {
    pub id: u64,
    pub proc: String,
    pub depth: usize,
    pub entry_counter: ActionNumber,
    /// `None` while the call is still active.
    pub exit_counter: Option<ActionNumber>,
}

/// Entry and exit counters of active calls and recently completed ones.
#[derive(Debug, Clone, Default)]
pub struct CallLog {
    next_id: u64,
    active: Vec<CallRecord>,
    completed: VecDeque<CallRecord>,
}

impl CallLog {
    pub fn enter(&mut self, proc: String, depth: usize, entry_counter: ActionNumber) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        debug_assert_eq!(depth, self.active.len());
        self.active.push(CallRecord {
            id,
            proc,
            depth,
            entry_counter,
            exit_counter: None,
        });
        id
    }

    pub fn exit(&mut self, exit_counter: ActionNumber) {
        if let Some(mut call) = self.active.pop() {
            call.exit_counter = Some(exit_counter);
            if self.completed.len() == CALL_RING_CAPACITY {
                self.completed.pop_front();
            }
            self.completed.push_back(call);
        }
    }

    /// Forgets active calls above `depth`, as a retry does.
    pub fn truncate(&mut self, depth: usize) {
        self.active.truncate(depth + 1);
    }

    pub fn active(&self) -> &[CallRecord] {
        &self.active
    }

    pub fn completed(&self) -> impl DoubleEndedIterator<Item = &CallRecord> {
        self.completed.iter()
    }

    pub fn find(&self, id: u64) -> Option<&CallRecord> {
        self.active
            .iter()
            .chain(self.completed.iter())
            .find(|c| c.id == id)
    }
}
