//! Syntax tree for the mini-language.
//!
//! Statements and call expressions carry an optional [`NodeId`]. Parsed
//! programs have every id filled in by a single pre-order traversal; nodes
//! synthesized by patch application carry `None` until the program is
//! printed and parsed again.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable address of a statement or call expression in the original program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Str,
    Array(Box<Type>),
    Optional(Box<Type>),
    Void,
    /// Type of the `null` literal; never written in source.
    Null,
}

impl Type {
    pub fn array(elem: Type) -> Self {
        Type::Array(Box::new(elem))
    }

    pub fn optional(inner: Type) -> Self {
        Type::Optional(Box::new(inner))
    }

    /// Whether a value of type `self` may be stored where `target` is expected.
    pub fn assignable_to(&self, target: &Type) -> bool {
        if self == target {
            return true;
        }
        match target {
            Type::Optional(inner) => matches!(self, Type::Null) || self == inner.as_ref(),
            _ => false,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("string"),
            Type::Array(elem) => write!(f, "[{elem}]"),
            Type::Optional(inner) => write!(f, "optional<{inner}>"),
            Type::Void => f.write_str("void"),
            Type::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Call {
    pub id: Option<NodeId>,
    pub callee: String,
    pub args: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Null,
    Var(String),
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Postfix `e!`: read the value held by an optional, failing on null.
    Unwrap(Box<Expr>),
    Call(Call),
}

impl Expr {
    pub fn call(callee: impl Into<String>, args: Vec<Expr>) -> Self {
        Expr::Call(Call {
            id: None,
            callee: callee.into(),
            args,
        })
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    /// Visits every call expression in pre-order (outer call before its arguments).
    pub fn visit_calls<'a>(&'a self, f: &mut dyn FnMut(&'a Call)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Null | Expr::Var(_) => {}
            Expr::Array(items) => items.iter().for_each(|e| e.visit_calls(f)),
            Expr::Index(base, index) => {
                base.visit_calls(f);
                index.visit_calls(f);
            }
            Expr::Unary(_, e) | Expr::Unwrap(e) => e.visit_calls(f),
            Expr::Binary(_, l, r) => {
                l.visit_calls(f);
                r.visit_calls(f);
            }
            Expr::Call(call) => {
                f(call);
                call.args.iter().for_each(|e| e.visit_calls(f));
            }
        }
    }

    pub fn visit_calls_mut(&mut self, f: &mut dyn FnMut(&mut Call)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Null | Expr::Var(_) => {}
            Expr::Array(items) => items.iter_mut().for_each(|e| e.visit_calls_mut(f)),
            Expr::Index(base, index) => {
                base.visit_calls_mut(f);
                index.visit_calls_mut(f);
            }
            Expr::Unary(_, e) | Expr::Unwrap(e) => e.visit_calls_mut(f),
            Expr::Binary(_, l, r) => {
                l.visit_calls_mut(f);
                r.visit_calls_mut(f);
            }
            Expr::Call(call) => {
                f(call);
                call.args.iter_mut().for_each(|e| e.visit_calls_mut(f));
            }
        }
    }

    /// Rewrites, outermost first, every sub-expression for which `f` returns
    /// a replacement. Replaced expressions are not descended into.
    pub fn rewrite(&mut self, f: &mut dyn FnMut(&Expr) -> Option<Expr>) {
        if let Some(replacement) = f(self) {
            *self = replacement;
            return;
        }
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Null | Expr::Var(_) => {}
            Expr::Array(items) => items.iter_mut().for_each(|e| e.rewrite(f)),
            Expr::Index(base, index) => {
                base.rewrite(f);
                index.rewrite(f);
            }
            Expr::Unary(_, e) | Expr::Unwrap(e) => e.rewrite(f),
            Expr::Binary(_, l, r) => {
                l.rewrite(f);
                r.rewrite(f);
            }
            Expr::Call(call) => call.args.iter_mut().for_each(|e| e.rewrite(f)),
        }
    }

    /// Drops every call id, as for a freshly synthesized node.
    pub fn clear_ids(&mut self) {
        self.visit_calls_mut(&mut |c| c.id = None);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    pub fn name(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Stmt {
    pub id: Option<NodeId>,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StmtKind {
    VarDecl {
        name: String,
        ty: Type,
        init: Expr,
    },
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    For {
        var: String,
        start: Expr,
        end: Expr,
        body: Block,
    },
    Expr(Expr),
    Return(Option<Expr>),
    Assert(Expr),
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt { id: None, kind }
    }

    /// Expressions owned directly by this statement, in evaluation order.
    /// Nested blocks are not included.
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl { init, .. } => vec![init],
            StmtKind::Assign { target, value } => match target {
                LValue::Var(_) => vec![value],
                LValue::Index(_, index) => vec![index, value],
            },
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { start, end, .. } => vec![start, end],
            StmtKind::Expr(e) | StmtKind::Assert(e) => vec![e],
            StmtKind::Return(e) => e.iter().collect(),
        }
    }

    pub fn own_exprs_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            StmtKind::VarDecl { init, .. } => vec![init],
            StmtKind::Assign { target, value } => match target {
                LValue::Var(_) => vec![value],
                LValue::Index(_, index) => vec![index, value],
            },
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For { start, end, .. } => vec![start, end],
            StmtKind::Expr(e) | StmtKind::Assert(e) => vec![e],
            StmtKind::Return(e) => e.iter_mut().collect(),
        }
    }

    pub fn blocks(&self) -> Vec<&Block> {
        match &self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut out = vec![then_block];
                out.extend(else_block.iter());
                out
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut Block> {
        match &mut self.kind {
            StmtKind::If {
                then_block,
                else_block,
                ..
            } => {
                let mut out = vec![then_block];
                out.extend(else_block.iter_mut());
                out
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    /// Deep copy with every statement and call id removed.
    pub fn fresh_copy(&self) -> Stmt {
        let mut copy = self.clone();
        copy.clear_ids();
        copy
    }

    pub fn clear_ids(&mut self) {
        self.id = None;
        for e in self.own_exprs_mut() {
            e.clear_ids();
        }
        for b in self.blocks_mut() {
            for s in &mut b.stmts {
                s.clear_ids();
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Block,
}

impl Function {
    pub fn is_test(&self) -> bool {
        self.name.starts_with("test_")
    }
}

/// A component-level variable; lives for the whole test.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Field {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Statement,
    CallExpression,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Where an addressable node lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub kind: NodeKind,
    /// Enclosing function; `None` for calls inside field initializers.
    pub function: Option<String>,
    pub span: Option<Span>,
}

/// A whole program: component fields plus functions.
///
/// Equality is structural and includes node ids but ignores the id index,
/// which only caches source positions.
#[derive(Debug, Clone, Default)]
pub struct Program {
    pub fields: Vec<Field>,
    pub functions: Vec<Function>,
    pub id_index: BTreeMap<NodeId, NodeInfo>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields && self.functions == other.functions
    }
}

impl Eq for Program {}

impl Program {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&Field> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn node_kind(&self, id: NodeId) -> NodeKind {
        self.id_index
            .get(&id)
            .map_or(NodeKind::Absent, |info| info.kind)
    }

    /// Rebuilds the id index from the ids currently present in the tree,
    /// keeping known source spans.
    pub fn reindex(&mut self) {
        let old = std::mem::take(&mut self.id_index);
        let mut index = BTreeMap::new();
        let span_of = |id: NodeId| old.get(&id).and_then(|i| i.span);
        for field in &self.fields {
            if let Some(init) = &field.init {
                init.visit_calls(&mut |c| {
                    if let Some(id) = c.id {
                        index.insert(
                            id,
                            NodeInfo {
                                kind: NodeKind::CallExpression,
                                function: None,
                                span: span_of(id),
                            },
                        );
                    }
                });
            }
        }
        for func in &self.functions {
            walk_block(&func.body, &mut |stmt| {
                if let Some(id) = stmt.id {
                    index.insert(
                        id,
                        NodeInfo {
                            kind: NodeKind::Statement,
                            function: Some(func.name.clone()),
                            span: span_of(id),
                        },
                    );
                }
                for e in stmt.own_exprs() {
                    e.visit_calls(&mut |c| {
                        if let Some(id) = c.id {
                            index.insert(
                                id,
                                NodeInfo {
                                    kind: NodeKind::CallExpression,
                                    function: Some(func.name.clone()),
                                    span: span_of(id),
                                },
                            );
                        }
                    });
                }
            });
        }
        self.id_index = index;
    }

    pub fn statement_count(&self) -> usize {
        let mut n = 0;
        for f in &self.functions {
            walk_block(&f.body, &mut |_| n += 1);
        }
        n
    }
}

/// Pre-order walk over every statement in a block, nested blocks included.
pub fn walk_block<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for stmt in &block.stmts {
        f(stmt);
        for b in stmt.blocks() {
            walk_block(b, f);
        }
    }
}

pub fn walk_block_mut(block: &mut Block, f: &mut dyn FnMut(&mut Stmt)) {
    for stmt in &mut block.stmts {
        f(stmt);
        for b in stmt.blocks_mut() {
            walk_block_mut(b, f);
        }
    }
}
