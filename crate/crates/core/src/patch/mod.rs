//! Patches: ordered lists of AST-level edits applied one after another to the
//! original program.

mod apply;
mod locate;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use apply::{apply, ApplyFailure, ApplyReport, ValidityStage};
pub use locate::{block_len_containing, contains_stmt, find_stmt, stmt_function};
pub use text::PatchParseError;

use crate::minilang::NodeId;

/// File name used when a patch is serialized without a real source path,
/// e.g. as a fitness-cache key.
pub const DEFAULT_FILE: &str = "program.mini";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edit {
    Delete {
        target: NodeId,
    },
    /// Inserts a copy of `source` at `index` of the block that contains the
    /// statement `dest_block`.
    Copy {
        source: NodeId,
        dest_block: NodeId,
        index: usize,
    },
    Replace {
        source: NodeId,
        target: NodeId,
    },
    CacheMethod {
        call: NodeId,
    },
    CacheClass {
        call: NodeId,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Delete,
    Copy,
    Replace,
    CacheMethod,
    CacheClass,
}

impl EditKind {
    pub const ALL: [EditKind; 5] = [
        EditKind::Delete,
        EditKind::Copy,
        EditKind::Replace,
        EditKind::CacheMethod,
        EditKind::CacheClass,
    ];
}

impl Edit {
    pub fn kind(&self) -> EditKind {
        match self {
            Edit::Delete { .. } => EditKind::Delete,
            Edit::Copy { .. } => EditKind::Copy,
            Edit::Replace { .. } => EditKind::Replace,
            Edit::CacheMethod { .. } => EditKind::CacheMethod,
            Edit::CacheClass { .. } => EditKind::CacheClass,
        }
    }
}

/// Serialized (e.g. in run records) as its line-format text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Patch {
    pub edits: Vec<Edit>,
}

impl Patch {
    pub fn new(edits: Vec<Edit>) -> Self {
        Patch { edits }
    }

    pub fn empty() -> Self {
        Patch::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    /// One edit per line, each terminated by a newline.
    pub fn serialize(&self, file: &str) -> String {
        text::serialize(self, file)
    }

    pub fn parse(text: &str) -> Result<Patch, PatchParseError> {
        text::parse(text)
    }

    /// Serialization against [`DEFAULT_FILE`]; identifies a patch uniquely.
    pub fn key(&self) -> String {
        self.serialize(DEFAULT_FILE)
    }
}

impl From<Patch> for String {
    fn from(p: Patch) -> String {
        p.key()
    }
}

impl TryFrom<String> for Patch {
    type Error = PatchParseError;

    fn try_from(s: String) -> Result<Patch, PatchParseError> {
        Patch::parse(&s)
    }
}

impl fmt::Display for Patch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}
