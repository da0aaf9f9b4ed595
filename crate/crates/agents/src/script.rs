//! Task scripts: a code skeleton with TODO markers plus the scripted body
//! for each marker. Scripts drive deterministic experiment runs; the bodies
//! stand in for generated code.
//!
//! Marker grammar, fixed: a line of the exact form
//! `// TODO(<key>): <description>` (leading whitespace allowed).

use serde::Deserialize;
use thiserror::Error;

#[derive(Clone, Debug, Deserialize)]
pub struct TodoSpec {
    pub key: String,
    pub description: String,
    pub body: String,
    /// Simulated generation time. When absent, a seeded duration with an
    /// 8 s median, scaled by body length, is used.
    #[serde(default)]
    pub duration_ms: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct TaskScript {
    pub name: String,
    /// Declared fraction of tasks whose body touches state introduced by
    /// other tasks (0 = fully independent).
    pub coupling: f64,
    pub skeleton: String,
    pub todos: Vec<TodoSpec>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ScriptError {
    #[error("script parse error: {0}")]
    Parse(String),
    #[error("duplicate task key {0:?}")]
    DuplicateKey(String),
    #[error("skeleton has no marker for key {0:?}")]
    MissingMarker(String),
    #[error("marker for key {0:?} does not match its description")]
    MarkerMismatch(String),
    #[error("skeleton marker {0:?} has no task entry")]
    UnknownMarker(String),
    #[error("coupling {0} outside [0, 1]")]
    BadCoupling(f64),
}

pub fn marker_line(key: &str, description: &str) -> String {
    format!("// TODO({key}): {description}")
}

/// Finds the marker line for `key`, returning the char range of the marker
/// text itself (whitespace and newline excluded).
pub fn find_marker(text: &str, key: &str) -> Option<(usize, usize)> {
    let needle = format!("// TODO({key}):");
    let mut offset = 0;
    for line in text.split('\n') {
        let trimmed = line.trim_start();
        if trimmed.starts_with(&needle) {
            let indent = line.len() - trimmed.len();
            // char-based offsets: the text CRDT addresses characters
            let start = text[..offset].chars().count() + line[..indent].chars().count();
            return Some((start, trimmed.chars().count()));
        }
        offset += line.len() + 1;
    }
    None
}

impl TaskScript {
    pub fn parse(toml_text: &str) -> Result<TaskScript, ScriptError> {
        let script: TaskScript =
            toml::from_str(toml_text).map_err(|e| ScriptError::Parse(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    /// Checks the skeleton and task list agree before anything is written
    /// to a shared document.
    pub fn validate(&self) -> Result<(), ScriptError> {
        if !(0.0..=1.0).contains(&self.coupling) {
            return Err(ScriptError::BadCoupling(self.coupling));
        }
        for (i, todo) in self.todos.iter().enumerate() {
            if self.todos[..i].iter().any(|t| t.key == todo.key) {
                return Err(ScriptError::DuplicateKey(todo.key.clone()));
            }
            match find_marker(&self.skeleton, &todo.key) {
                None => return Err(ScriptError::MissingMarker(todo.key.clone())),
                Some((start, len)) => {
                    let marker: String = self
                        .skeleton
                        .chars()
                        .skip(start)
                        .take(len)
                        .collect();
                    if marker != marker_line(&todo.key, &todo.description) {
                        return Err(ScriptError::MarkerMismatch(todo.key.clone()));
                    }
                }
            }
        }
        for line in self.skeleton.split('\n') {
            let trimmed = line.trim_start();
            if let Some(rest) = trimmed.strip_prefix("// TODO(") {
                if let Some(end) = rest.find("):") {
                    let key = &rest[..end];
                    if !self.todos.iter().any(|t| t.key == key) {
                        return Err(ScriptError::UnknownMarker(key.to_owned()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn todo(&self, key: &str) -> Option<&TodoSpec> {
        self.todos.iter().find(|t| t.key == key)
    }

    /// The text after every marker is replaced by its body — the reference
    /// result any complete run must converge to.
    pub fn reference_text(&self) -> String {
        let mut text = self.skeleton.clone();
        for todo in &self.todos {
            let marker = marker_line(&todo.key, &todo.description);
            text = text.replacen(&marker, todo.body.trim_end(), 1);
        }
        text
    }

    pub fn total_body_chars(&self) -> usize {
        self.todos.iter().map(|t| t.body.chars().count()).sum()
    }
}

/// The bundled task suite, keyed by name.
pub fn bundled_scripts() -> Vec<TaskScript> {
    [
        include_str!("../scripts/tic-tac-toe.toml"),
        include_str!("../scripts/registration.toml"),
        include_str!("../scripts/markdown.toml"),
        include_str!("../scripts/pomodoro.toml"),
        include_str!("../scripts/dashboard.toml"),
        include_str!("../scripts/visualizer.toml"),
    ]
    .iter()
    .map(|text| TaskScript::parse(text).expect("bundled scripts are valid"))
    .collect()
}

pub fn bundled_script(name: &str) -> Option<TaskScript> {
    bundled_scripts().into_iter().find(|s| s.name == name)
}
