use std::collections::HashMap;

use super::ast::*;

/// Numbers every statement and call expression densely from 0 in one
/// pre-order pass: field initializers first, then functions in declaration
/// order. Within a statement the statement itself comes first, then the calls
/// in its own expressions, then its nested blocks.
///
/// `spans` maps any ids already present (e.g. provisional parser ids) to
/// source positions; those positions are carried over to the new ids.
pub fn assign_ids(program: &mut Program, spans: &HashMap<NodeId, Span>) {
    let mut next = 0u32;
    let mut new_spans: HashMap<NodeId, Span> = HashMap::new();
    let mut renumber = |slot: &mut Option<NodeId>| {
        let fresh = NodeId(next);
        next += 1;
        if let Some(span) = slot.and_then(|old| spans.get(&old)) {
            new_spans.insert(fresh, *span);
        }
        *slot = Some(fresh);
    };

    for field in &mut program.fields {
        if let Some(init) = &mut field.init {
            init.visit_calls_mut(&mut |c| renumber(&mut c.id));
        }
    }
    for func in &mut program.functions {
        number_block(&mut func.body, &mut renumber);
    }

    program.id_index.clear();
    program.reindex();
    for (id, info) in program.id_index.iter_mut() {
        info.span = new_spans.get(id).copied();
    }
}

fn number_block(block: &mut Block, renumber: &mut dyn FnMut(&mut Option<NodeId>)) {
    for stmt in &mut block.stmts {
        renumber(&mut stmt.id);
        for e in stmt.own_exprs_mut() {
            e.visit_calls_mut(&mut |c| renumber(&mut c.id));
        }
        for b in stmt.blocks_mut() {
            number_block(b, renumber);
        }
    }
}
