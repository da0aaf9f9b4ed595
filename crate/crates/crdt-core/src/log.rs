use std::collections::BTreeMap;

use crate::id::OperationId;

/// Append-only log. Entries are never mutated or removed; read order is the
/// OperationId total order, identical on every converged replica.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct AppendLogState {
    entries: BTreeMap<OperationId, String>,
}

impl AppendLogState {
    /// Returns the entry's index in read order if newly inserted.
    pub fn apply(&mut self, id: OperationId, payload: String) -> Option<usize> {
        if self.entries.contains_key(&id) {
            return None;
        }
        self.entries.insert(id, payload);
        Some(self.entries.range(..id).count())
    }

    pub fn read(&self) -> Vec<&str> {
        self.entries.values().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}
