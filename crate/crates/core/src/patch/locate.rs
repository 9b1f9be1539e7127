//! Statement lookup by id inside function bodies.

use crate::minilang::{Block, Function, NodeId, Program, Stmt};

/// Route to a statement: function index, then (statement, nested block)
/// pairs down to the containing block, then the statement's index there.
#[derive(Debug, Clone)]
pub(crate) struct StmtPath {
    pub function: usize,
    pub blocks: Vec<(usize, usize)>,
    pub index: usize,
}

pub(crate) fn path_to(program: &Program, id: NodeId) -> Option<StmtPath> {
    fn search(block: &Block, id: NodeId, trail: &mut Vec<(usize, usize)>) -> Option<usize> {
        for (i, stmt) in block.stmts.iter().enumerate() {
            if stmt.id == Some(id) {
                return Some(i);
            }
            for (b, nested) in stmt.blocks().into_iter().enumerate() {
                trail.push((i, b));
                if let Some(found) = search(nested, id, trail) {
                    return Some(found);
                }
                trail.pop();
            }
        }
        None
    }
    program.functions.iter().enumerate().find_map(|(f, func)| {
        let mut trail = Vec::new();
        search(&func.body, id, &mut trail).map(|index| StmtPath {
            function: f,
            blocks: trail,
            index,
        })
    })
}

pub(crate) fn block_at_mut<'p>(program: &'p mut Program, path: &StmtPath) -> &'p mut Block {
    let mut block = &mut program.functions[path.function].body;
    for &(stmt, nested) in &path.blocks {
        block = block.stmts[stmt].blocks_mut().swap_remove(nested);
    }
    block
}

fn block_at<'p>(program: &'p Program, path: &StmtPath) -> &'p Block {
    let mut block = &program.functions[path.function].body;
    for &(stmt, nested) in &path.blocks {
        block = block.stmts[stmt].blocks()[nested];
    }
    block
}

pub fn find_stmt(program: &Program, id: NodeId) -> Option<&Stmt> {
    let path = path_to(program, id)?;
    Some(&block_at(program, &path).stmts[path.index])
}

pub fn contains_stmt(program: &Program, id: NodeId) -> bool {
    path_to(program, id).is_some()
}

/// The function whose body holds statement `id`.
pub fn stmt_function(program: &Program, id: NodeId) -> Option<&Function> {
    path_to(program, id).map(|p| &program.functions[p.function])
}

/// Length of the block that directly contains statement `anchor`.
pub fn block_len_containing(program: &Program, anchor: NodeId) -> Option<usize> {
    let path = path_to(program, anchor)?;
    Some(block_at(program, &path).stmts.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    #[test]
    fn finds_nested_statements() {
        let p =
            parse("fn f() { var a: int = 0; while (a < 3) { if (true) { a = a + 1; } } }").unwrap();
        // 0 var, 1 while, 2 if, 3 assign
        let path = path_to(&p, NodeId(3)).unwrap();
        assert_eq!(path.blocks, vec![(1, 0), (0, 0)]);
        assert_eq!(path.index, 0);
        assert_eq!(block_len_containing(&p, NodeId(3)), Some(1));
        assert_eq!(block_len_containing(&p, NodeId(1)), Some(2));
        assert!(find_stmt(&p, NodeId(4)).is_none());
    }
}
