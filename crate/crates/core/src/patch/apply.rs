use serde::{Deserialize, Serialize};

use super::locate::{block_at_mut, path_to};
use super::{Edit, Patch};
use crate::minilang::{typecheck, NodeId, Program, TypeError};
use crate::operators::cache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidityStage {
    /// Edits applied structurally; typing not yet checked.
    Parsed,
    Typechecked,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplyFailure {
    /// The patched program that failed to type-check.
    pub program: Program,
    pub error: TypeError,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplyReport {
    pub result: Result<Program, ApplyFailure>,
    /// Indices of edits that had no effect because a referenced node was
    /// absent (or, for cache edits, the transform did not apply).
    pub noop_edits: Vec<usize>,
    pub stage: ValidityStage,
}

impl ApplyReport {
    pub fn program(&self) -> Option<&Program> {
        self.result.as_ref().ok()
    }
}

/// Applies `patch` to a working copy of `program`, edit by edit, then
/// re-type-checks the result.
///
/// Edits never touch test functions: an edit addressing a statement inside a
/// `test_` function is a no-op. Nodes created by an edit carry no id, so
/// later edits can only address nodes of the original program.
pub fn apply(patch: &Patch, program: &Program) -> ApplyReport {
    let mut work = program.clone();
    let mut noop_edits = Vec::new();
    for (i, edit) in patch.edits.iter().enumerate() {
        if !apply_edit(&mut work, edit) {
            noop_edits.push(i);
        }
    }
    work.reindex();
    match typecheck(&work) {
        Ok(()) => ApplyReport {
            result: Ok(work),
            noop_edits,
            stage: ValidityStage::Typechecked,
        },
        Err(error) => ApplyReport {
            result: Err(ApplyFailure {
                program: work,
                error,
            }),
            noop_edits,
            stage: ValidityStage::Failed,
        },
    }
}

fn editable(program: &Program, id: NodeId) -> Option<super::locate::StmtPath> {
    let path = path_to(program, id)?;
    (!program.functions[path.function].is_test()).then_some(path)
}

fn apply_edit(work: &mut Program, edit: &Edit) -> bool {
    match *edit {
        Edit::Delete { target } => {
            let Some(path) = editable(work, target) else {
                return false;
            };
            block_at_mut(work, &path).stmts.remove(path.index);
            true
        }
        Edit::Copy {
            source,
            dest_block,
            index,
        } => {
            let (Some(src), Some(anchor)) = (editable(work, source), editable(work, dest_block))
            else {
                return false;
            };
            let copy = block_at_mut(work, &src).stmts[src.index].fresh_copy();
            let block = block_at_mut(work, &anchor);
            let at = index.min(block.stmts.len());
            block.stmts.insert(at, copy);
            true
        }
        Edit::Replace { source, target } => {
            let (Some(src), Some(dst)) = (editable(work, source), editable(work, target)) else {
                return false;
            };
            let copy = block_at_mut(work, &src).stmts[src.index].fresh_copy();
            block_at_mut(work, &dst).stmts[dst.index] = copy;
            true
        }
        Edit::CacheMethod { call } => cache::method_cache_in_place(work, call).is_ok(),
        Edit::CacheClass { call } => cache::class_cache_in_place(work, call).is_ok(),
    }
}
