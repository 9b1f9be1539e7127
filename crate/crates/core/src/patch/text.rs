use thiserror::Error;

use super::{Edit, Patch};
use crate::minilang::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("patch line {line}: {message}")]
pub struct PatchParseError {
    pub line: usize,
    pub message: String,
}

pub fn serialize(patch: &Patch, file: &str) -> String {
    let mut out = String::new();
    for edit in &patch.edits {
        let line = match *edit {
            Edit::Delete { target } => format!("DELETE {file}:{target}"),
            Edit::Copy {
                source,
                dest_block,
                index,
            } => {
                format!("COPY {file}:{source} -> {file}:{dest_block}:{index}")
            }
            Edit::Replace { source, target } => {
                format!("REPLACE {file}:{source} -> {file}:{target}")
            }
            Edit::CacheMethod { call } => format!("CACHE_METHOD {file}:{call}"),
            Edit::CacheClass { call } => format!("CACHE_CLASS {file}:{call}"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses the line format. Blank lines are ignored.
pub fn parse(text: &str) -> Result<Patch, PatchParseError> {
    let mut edits = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| PatchParseError {
            line: i + 1,
            message,
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        let edit = match words.as_slice() {
            ["DELETE", loc] => Edit::Delete {
                target: located(loc, 1).map_err(err)?[0],
            },
            ["CACHE_METHOD", loc] => Edit::CacheMethod {
                call: located(loc, 1).map_err(err)?[0],
            },
            ["CACHE_CLASS", loc] => Edit::CacheClass {
                call: located(loc, 1).map_err(err)?[0],
            },
            ["REPLACE", src, "->", dst] => {
                let source = located(src, 1).map_err(err)?[0];
                let target = located(dst, 1).map_err(err)?[0];
                Edit::Replace { source, target }
            }
            ["COPY", src, "->", dst] => {
                let source = located(src, 1).map_err(err)?[0];
                let dest = located(dst, 2).map_err(err)?;
                Edit::Copy {
                    source,
                    dest_block: dest[0],
                    index: dest[1].0 as usize,
                }
            }
            [op, ..]
                if matches!(
                    *op,
                    "DELETE" | "CACHE_METHOD" | "CACHE_CLASS" | "REPLACE" | "COPY"
                ) =>
            {
                return Err(err(format!("malformed {op} edit")));
            }
            [op, ..] => return Err(err(format!("unknown edit `{op}`"))),
            [] => unreachable!("blank lines skipped"),
        };
        edits.push(edit);
    }
    Ok(Patch { edits })
}

/// Parses `<file>:<n1>[:<n2>...]` with exactly `count` numbers.
fn located(token: &str, count: usize) -> Result<Vec<NodeId>, String> {
    let parts: Vec<&str> = token.split(':').collect();
    if parts.len() != count + 1 || parts[0].is_empty() {
        return Err(format!(
            "expected <file>{} in `{token}`",
            ":<n>".repeat(count)
        ));
    }
    parts[1..]
        .iter()
        .map(|p| {
            p.parse::<u32>()
                .map(NodeId)
                .map_err(|_| format!("`{p}` is not a node id"))
        })
        .collect()
}
