//! Caching transforms and their target finders.
//!
//! Two call expressions are interchangeable for caching when they print
//! identically: same callee, argument expressions identical token for token.
//! Test functions are never scanned or rewritten.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{
    callee_return_type, expr_to_string, walk_block, BinOp, Block, Call, Expr, Field, LValue,
    NodeId, Program, Stmt, StmtKind, Type,
};

pub const CACHE_VAR_PREFIX: &str = "cachedVar";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheScope {
    Method,
    Class,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheTarget {
    /// First occurrence; the id a cache edit refers to.
    pub call: NodeId,
    pub enclosing_function: String,
    pub occurrence_ids: Vec<NodeId>,
    pub scope: CacheScope,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CacheRejection {
    #[error("call {0} not found")]
    CallNotFound(NodeId),
    #[error("call {0} is inside a test function")]
    InTestFunction(NodeId),
    #[error("call {0} is inside a field initializer")]
    InFieldInitializer(NodeId),
    #[error("callee `{0}` is unknown")]
    UnknownCallee(String),
    #[error("callee `{0}` returns void")]
    VoidReturn(String),
    #[error("method cache needs at least two occurrences, found {0}")]
    TooFewOccurrences(usize),
    #[error("target scope does not match the transform")]
    WrongScope,
}

pub(crate) fn call_key(call: &Call) -> String {
    let args: Vec<String> = call.args.iter().map(expr_to_string).collect();
    format!("{}({})", call.callee, args.join(", "))
}

/// Calls of one function body in pre-order (statement order, then outer
/// call before the calls in its arguments).
fn calls_in_block(block: &Block) -> Vec<&Call> {
    let mut out = Vec::new();
    walk_block(block, &mut |stmt| {
        for e in stmt.own_exprs() {
            e.visit_calls(&mut |c| out.push(c));
        }
    });
    out
}

/// In-method targets: per function, every call expression that repeats an
/// earlier one. One target per distinct expression, listing all its
/// occurrences (the first included).
pub fn method_cache_targets(program: &Program) -> Vec<CacheTarget> {
    let mut targets = Vec::new();
    for func in program.functions.iter().filter(|f| !f.is_test()) {
        let mut seen: HashMap<String, NodeId> = HashMap::new();
        let mut cachable: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for call in calls_in_block(&func.body) {
            let Some(id) = call.id else { continue };
            let key = call_key(call);
            if let Some(&first) = seen.get(&key) {
                cachable
                    .entry(first)
                    .or_insert_with(|| vec![first])
                    .push(id);
            } else {
                seen.insert(key, id);
            }
        }
        for (first, occurrence_ids) in cachable {
            targets.push(CacheTarget {
                call: first,
                enclosing_function: func.name.clone(),
                occurrence_ids,
                scope: CacheScope::Method,
            });
        }
    }
    targets
}

/// Class-level targets: every call expression in every (non-test) function,
/// grouped program-wide by identical expression. Single occurrences count.
pub fn class_cache_targets(program: &Program) -> Vec<CacheTarget> {
    let mut groups: Vec<(String, CacheTarget)> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    for func in program.functions.iter().filter(|f| !f.is_test()) {
        for call in calls_in_block(&func.body) {
            let Some(id) = call.id else { continue };
            let key = call_key(call);
            match by_key.get(&key) {
                Some(&g) => groups[g].1.occurrence_ids.push(id),
                None => {
                    by_key.insert(key.clone(), groups.len());
                    groups.push((
                        key,
                        CacheTarget {
                            call: id,
                            enclosing_function: func.name.clone(),
                            occurrence_ids: vec![id],
                            scope: CacheScope::Class,
                        },
                    ));
                }
            }
        }
    }
    groups.into_iter().map(|(_, t)| t).collect()
}

/// Applies the in-method cache for `target` to a copy of `program`.
pub fn apply_method_cache(
    program: &Program,
    target: &CacheTarget,
) -> Result<Program, CacheRejection> {
    if target.scope != CacheScope::Method {
        return Err(CacheRejection::WrongScope);
    }
    if target.occurrence_ids.len() < 2 {
        return Err(CacheRejection::TooFewOccurrences(
            target.occurrence_ids.len(),
        ));
    }
    let mut out = program.clone();
    method_cache_in_place(&mut out, target.call)?;
    out.reindex();
    Ok(out)
}

/// Applies the class cache for `target` to a copy of `program`.
pub fn apply_class_cache(
    program: &Program,
    target: &CacheTarget,
) -> Result<Program, CacheRejection> {
    if target.scope != CacheScope::Class {
        return Err(CacheRejection::WrongScope);
    }
    let mut out = program.clone();
    class_cache_in_place(&mut out, target.call)?;
    out.reindex();
    Ok(out)
}

enum CallSite {
    Field,
    Function(usize),
}

fn locate_call(program: &Program, id: NodeId) -> Option<(CallSite, Call)> {
    for field in &program.fields {
        let mut found = None;
        if let Some(init) = &field.init {
            init.visit_calls(&mut |c| {
                if c.id == Some(id) && found.is_none() {
                    found = Some(c.clone());
                }
            });
        }
        if let Some(call) = found {
            return Some((CallSite::Field, call));
        }
    }
    for (f, func) in program.functions.iter().enumerate() {
        if let Some(call) = calls_in_block(&func.body)
            .into_iter()
            .find(|c| c.id == Some(id))
        {
            return Some((CallSite::Function(f), call.clone()));
        }
    }
    None
}

/// The call expression with id `id`, wherever it appears.
pub fn find_call(program: &Program, id: NodeId) -> Option<Call> {
    locate_call(program, id).map(|(_, call)| call)
}

/// Looks up the call and checks everything both transforms require.
fn cache_site(program: &Program, id: NodeId) -> Result<(usize, Call, Type), CacheRejection> {
    let (site, call) = locate_call(program, id).ok_or(CacheRejection::CallNotFound(id))?;
    let f = match site {
        CallSite::Field => return Err(CacheRejection::InFieldInitializer(id)),
        CallSite::Function(f) => f,
    };
    if program.functions[f].is_test() {
        return Err(CacheRejection::InTestFunction(id));
    }
    let ty = callee_return_type(program, &call.callee)
        .ok_or_else(|| CacheRejection::UnknownCallee(call.callee.clone()))?;
    if ty == Type::Void {
        return Err(CacheRejection::VoidReturn(call.callee.clone()));
    }
    Ok((f, call, ty))
}

/// Next unused `cachedVarK` name, K counting from 1.
pub fn fresh_cache_name(program: &Program) -> String {
    let mut max = 0u64;
    let mut note = |name: &str| {
        if let Some(k) = name
            .strip_prefix(CACHE_VAR_PREFIX)
            .and_then(|s| s.parse::<u64>().ok())
        {
            max = max.max(k);
        }
    };
    for field in &program.fields {
        note(&field.name);
    }
    for func in &program.functions {
        for p in &func.params {
            note(&p.name);
        }
        walk_block(&func.body, &mut |stmt| match &stmt.kind {
            StmtKind::VarDecl { name, .. } | StmtKind::For { var: name, .. } => note(name),
            _ => {}
        });
    }
    format!("{CACHE_VAR_PREFIX}{}", max + 1)
}

fn stmt_mentions(stmt: &Stmt, key: &str) -> bool {
    let mut hit = false;
    for e in stmt.own_exprs() {
        e.visit_calls(&mut |c| hit |= call_key(c) == key);
    }
    hit
}

fn rewrite_own(stmt: &mut Stmt, key: &str, replacement: &Expr) {
    for e in stmt.own_exprs_mut() {
        e.rewrite(&mut |x| match x {
            Expr::Call(c) if call_key(c) == key => Some(replacement.clone()),
            _ => None,
        });
    }
}

fn rewrite_block(block: &mut Block, key: &str, replacement: &Expr) {
    for stmt in &mut block.stmts {
        rewrite_own(stmt, key, replacement);
        for nested in stmt.blocks_mut() {
            rewrite_block(nested, key, replacement);
        }
    }
}

/// `var cachedVarK: T = <call>;` before the statement holding the first
/// occurrence; every occurrence in the function becomes `cachedVarK`.
pub(crate) fn method_cache_in_place(
    program: &mut Program,
    id: NodeId,
) -> Result<(), CacheRejection> {
    let (f, call, ty) = cache_site(program, id)?;
    let key = call_key(&call);
    let occurrences = calls_in_block(&program.functions[f].body)
        .iter()
        .filter(|c| call_key(c) == key)
        .count();
    if occurrences < 2 {
        return Err(CacheRejection::TooFewOccurrences(occurrences));
    }
    let name = fresh_cache_name(program);
    let body = &mut program.functions[f].body;
    rewrite_block(body, &key, &Expr::Var(name.clone()));
    let mut fresh_call = call;
    fresh_call.id = None;
    for a in &mut fresh_call.args {
        a.clear_ids();
    }
    let mut decl = Some(Stmt::new(StmtKind::VarDecl {
        name,
        ty,
        init: Expr::Call(fresh_call),
    }));
    // Every occurrence now reads the variable; the first such statement
    // is where the declaration goes.
    insert_before_var_use(body, &mut decl);
    Ok(())
}

fn reads_var(stmt: &Stmt, name: &str) -> bool {
    fn expr_reads(e: &Expr, name: &str) -> bool {
        match e {
            Expr::Var(n) => n == name,
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Null => false,
            Expr::Array(items) => items.iter().any(|x| expr_reads(x, name)),
            Expr::Index(a, b) | Expr::Binary(_, a, b) => expr_reads(a, name) || expr_reads(b, name),
            Expr::Unary(_, a) | Expr::Unwrap(a) => expr_reads(a, name),
            Expr::Call(c) => c.args.iter().any(|x| expr_reads(x, name)),
        }
    }
    stmt.own_exprs().into_iter().any(|e| expr_reads(e, name))
}

fn insert_before_var_use(block: &mut Block, decl: &mut Option<Stmt>) {
    let Some(StmtKind::VarDecl { name, .. }) = decl.as_ref().map(|d| &d.kind) else {
        return;
    };
    let name = name.clone();
    let mut i = 0;
    while i < block.stmts.len() && decl.is_some() {
        if reads_var(&block.stmts[i], &name) {
            block.stmts.insert(i, decl.take().expect("checked is_some"));
            return;
        }
        for nested in block.stmts[i].blocks_mut() {
            insert_before_var_use(nested, decl);
            if decl.is_none() {
                return;
            }
        }
        i += 1;
    }
}

/// Adds field `cachedVarK: optional<T> = null`; each statement holding an
/// occurrence gets `if (cachedVarK == null) { cachedVarK = <call>; }` in
/// front of it, and the occurrence becomes `cachedVarK!`.
pub(crate) fn class_cache_in_place(
    program: &mut Program,
    id: NodeId,
) -> Result<(), CacheRejection> {
    let (_, call, ty) = cache_site(program, id)?;
    let key = call_key(&call);
    let name = fresh_cache_name(program);
    let mut fresh_call = call;
    fresh_call.id = None;
    for a in &mut fresh_call.args {
        a.clear_ids();
    }
    let guard = Stmt::new(StmtKind::If {
        cond: Expr::Binary(
            BinOp::Eq,
            Box::new(Expr::Var(name.clone())),
            Box::new(Expr::Null),
        ),
        then_block: Block {
            stmts: vec![Stmt::new(StmtKind::Assign {
                target: LValue::Var(name.clone()),
                value: Expr::Call(fresh_call),
            })],
        },
        else_block: None,
    });
    let read = Expr::Unwrap(Box::new(Expr::Var(name.clone())));
    for func in program.functions.iter_mut().filter(|f| !f.is_test()) {
        guard_block(&mut func.body, &key, &guard, &read);
    }
    program.fields.push(Field {
        name,
        ty: Type::optional(ty),
        init: Some(Expr::Null),
    });
    Ok(())
}

fn guard_block(block: &mut Block, key: &str, guard: &Stmt, read: &Expr) {
    let old = std::mem::take(&mut block.stmts);
    for mut stmt in old {
        if stmt_mentions(&stmt, key) {
            block.stmts.push(guard.clone());
            rewrite_own(&mut stmt, key, read);
        }
        for nested in stmt.blocks_mut() {
            guard_block(nested, key, guard, read);
        }
        block.stmts.push(stmt);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::{parse, pretty_print, typecheck};

    const REPEATED_CALL: &str = "\
fn foo(a: int, b: int, c: int) -> int {
    return a * b + c;
}

fn compute(a: int, b: int, c: int) -> int {
    var x: int = foo(a, b, c);
    var y: int = foo(a, b, c);
    return x + y;
}
";

    const SINGLE_CALL: &str = "\
fn a() -> int {
    return 7;
}

fn foo() {
    var x: int = a();
}
";

    #[test]
    fn repeated_call_is_one_method_target() {
        let p = parse(REPEATED_CALL).unwrap();
        let t = method_cache_targets(&p);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].occurrence_ids.len(), 2);
        assert_eq!(t[0].enclosing_function, "compute");
        assert_eq!(t[0].call, t[0].occurrence_ids[0]);
    }

    #[test]
    fn different_argument_variables_are_not_cachable() {
        let p = parse("fn foo(v: int) -> int { return v; }\nfn m(a: int, b: int) { var x: int = foo(a); var y: int = foo(b); }")
            .unwrap();
        assert!(method_cache_targets(&p).is_empty());
    }

    #[test]
    fn method_cache_shape() {
        let p = parse(REPEATED_CALL).unwrap();
        let t = &method_cache_targets(&p)[0];
        let out = apply_method_cache(&p, t).unwrap();
        typecheck(&out).unwrap();
        let text = pretty_print(&out);
        assert!(text.contains(
            "    var cachedVar1: int = foo(a, b, c);\n    var x: int = cachedVar1;\n    var y: int = cachedVar1;\n"
        ), "{text}");
    }

    #[test]
    fn method_cache_inside_loop_is_not_hoisted() {
        let src = "\
fn f(v: int) -> int { return v + 1; }
fn g(n: int) -> int {
    var s: int = 0;
    for (i in 0..n) {
        s = s + f(n);
        s = s + f(n);
    }
    return s;
}
";
        let p = parse(src).unwrap();
        let t = &method_cache_targets(&p)[0];
        let out = apply_method_cache(&p, t).unwrap();
        let text = pretty_print(&out);
        assert!(text.contains(
            "    for (i in 0..n) {\n        var cachedVar1: int = f(n);\n        s = s + cachedVar1;\n        s = s + cachedVar1;\n"
        ), "{text}");
    }

    #[test]
    fn single_occurrence_rejected_for_method_scope() {
        let p = parse(SINGLE_CALL).unwrap();
        let t = CacheTarget {
            call: NodeId(2),
            enclosing_function: "foo".into(),
            occurrence_ids: vec![NodeId(2)],
            scope: CacheScope::Method,
        };
        assert_eq!(
            apply_method_cache(&p, &t),
            Err(CacheRejection::TooFewOccurrences(1))
        );
    }

    #[test]
    fn single_call_is_a_class_target() {
        let p = parse(SINGLE_CALL).unwrap();
        let t = class_cache_targets(&p);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].occurrence_ids.len(), 1);
        assert_eq!(t[0].scope, CacheScope::Class);
    }

    #[test]
    fn no_calls_no_targets() {
        let p = parse("fn f() { var x: int = 1; }").unwrap();
        assert!(class_cache_targets(&p).is_empty());
        assert!(method_cache_targets(&p).is_empty());
    }

    #[test]
    fn class_cache_single_call_shape() {
        let p = parse(SINGLE_CALL).unwrap();
        let t = &class_cache_targets(&p)[0];
        let out = apply_class_cache(&p, t).unwrap();
        typecheck(&out).unwrap();
        let golden = "\
var cachedVar1: optional<int> = null;

fn a() -> int {
    return 7;
}

fn foo() {
    if (cachedVar1 == null) {
        cachedVar1 = a();
    }
    var x: int = cachedVar1!;
}
";
        assert_eq!(pretty_print(&out), golden);
    }

    #[test]
    fn class_cache_shares_one_field_across_functions() {
        let src = "\
fn a() -> int { return 7; }
fn f() -> int { return a() + 1; }
fn g() -> int { return a() * 2; }
";
        let p = parse(src).unwrap();
        let t = class_cache_targets(&p)
            .into_iter()
            .find(|t| t.occurrence_ids.len() == 2)
            .unwrap();
        let out = apply_class_cache(&p, &t).unwrap();
        typecheck(&out).unwrap();
        assert_eq!(out.fields.len(), 1);
        let text = pretty_print(&out);
        assert_eq!(text.matches("if (cachedVar1 == null)").count(), 2);
        assert_eq!(text.matches("cachedVar1!").count(), 2);
    }

    #[test]
    fn void_call_rejected() {
        let p = parse("fn v() {}\nfn f() { v(); v(); }").unwrap();
        let class = &class_cache_targets(&p)[0];
        assert_eq!(
            apply_class_cache(&p, class),
            Err(CacheRejection::VoidReturn("v".into()))
        );
        let method = &method_cache_targets(&p)[0];
        assert_eq!(
            apply_method_cache(&p, method),
            Err(CacheRejection::VoidReturn("v".into()))
        );
    }

    #[test]
    fn field_initializer_call_rejected() {
        let p = parse("var x: int = a();\nfn a() -> int { return 1; }").unwrap();
        let mut work = p.clone();
        assert_eq!(
            class_cache_in_place(&mut work, NodeId(0)),
            Err(CacheRejection::InFieldInitializer(NodeId(0)))
        );
    }

    #[test]
    fn fresh_names_do_not_collide() {
        let p = parse("var cachedVar1: int = 0;\nfn f() { var cachedVar4: int = 1; }").unwrap();
        assert_eq!(fresh_cache_name(&p), "cachedVar5");
    }
}
