use std::collections::BTreeMap;

use crate::id::OperationId;
use crate::value::ScalarValue;

/// One last-writer-wins cell: the value written by the maximal (clock,
/// replica) writer applied so far. Maximal pair wins; at equal clocks the
/// higher replica id wins.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LwwCell {
    pub value: ScalarValue,
    pub writer: OperationId,
}

/// key -> field -> cell. Converged content depends only on the set of applied
/// writes, never on their order.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LwwMapState {
    entries: BTreeMap<String, BTreeMap<String, LwwCell>>,
}

impl LwwMapState {
    pub fn get(&self, key: &str, field: &str) -> Option<&LwwCell> {
        self.entries.get(key)?.get(field)
    }

    /// Applies a write; returns true if the cell changed.
    pub fn apply(&mut self, key: &str, field: &str, value: ScalarValue, writer: OperationId) -> bool {
        let fields = self.entries.entry(key.to_owned()).or_default();
        match fields.get_mut(field) {
            Some(cell) if cell.writer >= writer => false,
            Some(cell) => {
                *cell = LwwCell { value, writer };
                true
            }
            None => {
                fields.insert(field.to_owned(), LwwCell { value, writer });
                true
            }
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn fields(&self, key: &str) -> impl Iterator<Item = (&str, &LwwCell)> {
        self.entries
            .get(key)
            .into_iter()
            .flat_map(|m| m.iter().map(|(f, c)| (f.as_str(), c)))
    }
}
