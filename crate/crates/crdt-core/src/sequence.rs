//! RGA-style text sequence.
//!
//! Items form a tree: each character's parent is its origin (the character it
//! was inserted after), with BEGIN as the root. Siblings under one origin are
//! ordered descending by OperationId, so the document order is a deterministic
//! function of the item set alone. Deleted items become tombstones and are
//! never removed.

use std::collections::HashMap;

use crate::id::{OperationId, Origin};

#[derive(Clone, Debug)]
struct Node {
    id: OperationId,
    ch: char,
    deleted: bool,
    children: Vec<usize>, // descending by id
}

#[derive(Clone, Debug, Default)]
pub struct SequenceState {
    nodes: Vec<Node>,
    by_id: HashMap<OperationId, usize>,
    roots: Vec<usize>, // children of BEGIN, descending by id
    visible: usize,
}

impl SequenceState {
    pub fn new() -> Self {
        SequenceState::default()
    }

    pub fn contains(&self, id: OperationId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn visible_len(&self) -> usize {
        self.visible
    }

    pub fn read(&self) -> String {
        let mut out = String::with_capacity(self.visible);
        self.walk(|node| {
            if !node.deleted {
                out.push(node.ch);
            }
        });
        out
    }

    /// Integrates one character. The origin must already be present. Returns
    /// the character's resulting visible index, or None if nothing changed
    /// (id already present).
    pub fn integrate(&mut self, id: OperationId, origin: Origin, ch: char) -> Option<usize> {
        if self.by_id.contains_key(&id) {
            return None;
        }
        let idx = self.nodes.len();
        self.nodes.push(Node {
            id,
            ch,
            deleted: false,
            children: Vec::new(),
        });
        self.by_id.insert(id, idx);
        let parent = match origin {
            Origin::Begin => None,
            Origin::Id(oid) => {
                Some(*self.by_id.get(&oid).expect("origin must be integrated"))
            }
        };
        let siblings = match parent {
            None => &self.roots,
            Some(p) => &self.nodes[p].children,
        };
        let pos = {
            let nodes = &self.nodes;
            siblings.partition_point(|&c| nodes[c].id > id)
        };
        match parent {
            None => self.roots.insert(pos, idx),
            Some(p) => self.nodes[p].children.insert(pos, idx),
        }
        self.visible += 1;
        Some(self.visible_index_of(idx))
    }

    pub fn has_origin(&self, origin: Origin) -> bool {
        match origin {
            Origin::Begin => true,
            Origin::Id(id) => self.contains(id),
        }
    }

    /// Tombstones the item. Returns its visible index before removal if it was
    /// visible, None if already deleted or absent.
    pub fn tombstone(&mut self, id: OperationId) -> Option<usize> {
        let idx = *self.by_id.get(&id)?;
        if self.nodes[idx].deleted {
            return None;
        }
        let pos = self.visible_index_of(idx);
        self.nodes[idx].deleted = true;
        self.visible -= 1;
        Some(pos)
    }

    /// Origin to use for a local insert at the given visible index: the id of
    /// the (index-1)th visible character, or BEGIN for index 0.
    pub fn origin_for_insert(&self, index: usize) -> Option<Origin> {
        if index == 0 {
            return Some(Origin::Begin);
        }
        self.id_at_visible(index - 1).map(Origin::Id)
    }

    pub fn id_at_visible(&self, index: usize) -> Option<OperationId> {
        let mut seen = 0usize;
        let mut found = None;
        self.walk(|node| {
            if !node.deleted {
                if seen == index && found.is_none() {
                    found = Some(node.id);
                }
                seen += 1;
            }
        });
        found
    }

    /// Ids of the visible characters in [index, index+len).
    pub fn ids_in_visible_range(&self, index: usize, len: usize) -> Vec<OperationId> {
        let mut out = Vec::with_capacity(len);
        let mut seen = 0usize;
        self.walk(|node| {
            if !node.deleted {
                if seen >= index && seen < index + len {
                    out.push(node.id);
                }
                seen += 1;
            }
        });
        out
    }

    fn visible_index_of(&self, target: usize) -> usize {
        let mut seen = 0usize;
        let mut result = 0usize;
        let target_id = self.nodes[target].id;
        let mut hit = false;
        self.walk(|node| {
            if node.id == target_id {
                result = seen;
                hit = true;
            }
            if !node.deleted {
                seen += 1;
            }
        });
        debug_assert!(hit);
        result
    }

    /// Depth-first traversal in document order.
    fn walk(&self, mut f: impl FnMut(&Node)) {
        // stack of (sibling list, next position)
        let mut stack: Vec<(&[usize], usize)> = vec![(&self.roots, 0)];
        while let Some((siblings, pos)) = stack.last_mut() {
            if *pos >= siblings.len() {
                stack.pop();
                continue;
            }
            let idx = siblings[*pos];
            *pos += 1;
            let node = &self.nodes[idx];
            f(node);
            if !node.children.is_empty() {
                stack.push((&node.children, 0));
            }
        }
    }
}
