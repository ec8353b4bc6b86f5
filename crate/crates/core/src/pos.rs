use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Location of a syntax node in a source file. Lines and columns are 1-based;
/// `span` counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourcePos {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
    pub span: u32,
}

impl SourcePos {
    pub fn new(file: impl Into<Arc<str>>, line: u32, column: u32, span: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourcePos {
            file: file.into(),
            line,
            column,
            span,
        }
    }

    /// Position used for nodes built programmatically (tests, demo helpers).
    pub fn synthetic() -> Self {
        SourcePos::new("<synthetic>", 1, 1, 0)
    }

    /// Smallest position covering both `self` and `end`, assuming `end` starts
    /// on or after `self` within the same line.
    pub fn to(&self, end: &SourcePos) -> SourcePos {
        if end.line == self.line && end.column >= self.column {
            SourcePos {
                span: end.column + end.span - self.column,
                ..self.clone()
            }
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}
