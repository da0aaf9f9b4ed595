//! Duplicate-declaration scanner: finds identifiers declared more than once
//! at the top level of the generated text. Purely lexical — it flags
//! `function f` twice, not a declaration plus a call.

use std::collections::BTreeMap;

use regex::Regex;
use simnet::VirtualTime;

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ConflictReport {
    /// (identifier, occurrence count), count > 1, sorted by identifier.
    pub duplicates: Vec<(String, usize)>,
    pub scanned_at: VirtualTime,
}

impl ConflictReport {
    pub fn is_clean(&self) -> bool {
        self.duplicates.is_empty()
    }

    /// One-line form for the shared log.
    pub fn summary(&self) -> String {
        if self.duplicates.is_empty() {
            return "conflicts: none".to_owned();
        }
        let items: Vec<String> = self
            .duplicates
            .iter()
            .map(|(name, n)| format!("{name}x{n}"))
            .collect();
        format!("conflicts: {}", items.join(","))
    }
}

fn declaration_pattern() -> Regex {
    Regex::new(
        r"(?m)^\s*(?:export\s+)?(?:async\s+)?(?:function|const|let|var|class|interface|type|enum)\s+([A-Za-z_$][A-Za-z0-9_$]*)",
    )
    .expect("pattern is valid")
}

pub fn conflict_scan(text: &str, scanned_at: VirtualTime) -> ConflictReport {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for cap in declaration_pattern().captures_iter(text) {
        *counts.entry(cap[1].to_owned()).or_insert(0) += 1;
    }
    ConflictReport {
        duplicates: counts.into_iter().filter(|(_, n)| *n > 1).collect(),
        scanned_at,
    }
}
