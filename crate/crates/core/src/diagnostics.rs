//! Structured warnings collected while loading and assembling data.
//!
//! Warnings never abort processing. Callers decide where to emit them;
//! the command-line tool writes them to stderr as JSON lines.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub file: String,
    /// 1-based line number, or 0 when the warning is not tied to a line.
    pub line: usize,
    pub kind: WarningKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarningKind {
    DuplicateJudgment { topic: String, doc: String },
    DuplicateRunDoc { run: String, topic: String, doc: String },
    MissingTopic { system: String, topic: String },
    DroppedSystem { system: String, reason: String },
    UndefinedCorrelation { measure: String },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.file, self.line)?;
        match &self.kind {
            WarningKind::DuplicateJudgment { topic, doc } => {
                write!(f, "duplicate judgment for ({topic}, {doc}), last one kept")
            }
            WarningKind::DuplicateRunDoc { run, topic, doc } => write!(
                f,
                "run {run} retrieves {doc} twice for topic {topic}, highest score kept"
            ),
            WarningKind::MissingTopic { system, topic } => {
                write!(f, "system {system} has no results for topic {topic}")
            }
            WarningKind::DroppedSystem { system, reason } => {
                write!(f, "system {system} dropped: {reason}")
            }
            WarningKind::UndefinedCorrelation { measure } => {
                write!(f, "column {measure} is constant, correlations undefined")
            }
        }
    }
}

/// A value together with the warnings raised while producing it.
#[derive(Debug, Clone)]
pub struct Diagnosed<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Diagnosed<T> {
    pub fn new(value: T, warnings: Vec<Warning>) -> Self {
        Self { value, warnings }
    }

    pub fn into_parts(self) -> (T, Vec<Warning>) {
        (self.value, self.warnings)
    }
}
