//! Tree-walking evaluator with step, memory and network accounting.
//!
//! Cost model:
//! - every statement execution costs 1 step, and so does every for-loop
//!   iteration;
//! - every expression node costs 1 step, except builtin calls, which cost
//!   their fixture step cost instead;
//! - live bytes are the sizes of all values currently held: bound to fields,
//!   parameters or locals, or in flight as intermediate results. Reading a
//!   variable copies its value, except when the variable is the direct
//!   operand of indexing or `len`.

use std::collections::{BTreeSet, HashMap};

use super::fixtures::Fixtures;
use super::value::Value;
use crate::minilang::{
    BinOp, Block, Call, Expr, Function, LValue, NodeId, Program, Stmt, StmtKind, UnOp,
};

/// Deepest permitted call nesting; deeper recursion is a runtime error.
pub const MAX_CALL_DEPTH: usize = 128;
/// Largest array `alloc` will create.
pub const MAX_ALLOC_LEN: i64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    AssertFailed,
    Runtime(String),
    StepBudgetExceeded,
}

type Exec<T> = Result<T, Fault>;

enum Flow {
    Normal,
    Return(Value),
}

#[derive(Default)]
struct Frame {
    scopes: Vec<Vec<(String, Value)>>,
}

pub struct Machine<'a> {
    functions: HashMap<&'a str, &'a Function>,
    program: &'a Program,
    fixtures: &'a Fixtures,
    budget: u64,
    pub steps: u64,
    pub live: u64,
    pub peak: u64,
    pub net: u64,
    fields: Vec<(String, Value)>,
    frames: Vec<Frame>,
    coverage: Option<&'a mut BTreeSet<NodeId>>,
}

impl<'a> Machine<'a> {
    pub fn new(program: &'a Program, fixtures: &'a Fixtures, budget: u64) -> Self {
        Machine {
            functions: program
                .functions
                .iter()
                .map(|f| (f.name.as_str(), f))
                .collect(),
            program,
            fixtures,
            budget,
            steps: 0,
            live: 0,
            peak: 0,
            net: 0,
            fields: Vec::new(),
            frames: Vec::new(),
            coverage: None,
        }
    }

    pub fn with_coverage(mut self, coverage: &'a mut BTreeSet<NodeId>) -> Self {
        self.coverage = Some(coverage);
        self
    }

    fn tick(&mut self, n: u64) -> Exec<()> {
        self.steps += n;
        if self.steps > self.budget {
            Err(Fault::StepBudgetExceeded)
        } else {
            Ok(())
        }
    }

    fn acquire(&mut self, v: &Value) {
        self.live += v.size();
        self.peak = self.peak.max(self.live);
    }

    fn release(&mut self, v: &Value) {
        self.live -= v.size();
    }

    fn runtime<T>(&self, message: impl Into<String>) -> Exec<T> {
        Err(Fault::Runtime(message.into()))
    }

    /// Initializes component fields in declaration order.
    pub fn init_fields(&mut self) -> Exec<()> {
        self.fields.clear();
        for field in &self.program.fields {
            let value = match &field.init {
                Some(init) => self.eval(init)?,
                None => {
                    let v = Value::default_for(&field.ty);
                    self.acquire(&v);
                    v
                }
            };
            self.fields.push((field.name.clone(), value));
        }
        Ok(())
    }

    /// Invokes a function with no arguments, as the test harness does.
    pub fn call_entry(&mut self, name: &str) -> Exec<()> {
        let Some(func) = self.functions.get(name).copied() else {
            return self.runtime(format!("no function `{name}`"));
        };
        if !func.params.is_empty() {
            return self.runtime(format!("test `{name}` must not take parameters"));
        }
        let v = self.invoke(func, Vec::new())?;
        self.release(&v);
        Ok(())
    }

    fn invoke(&mut self, func: &'a Function, args: Vec<Value>) -> Exec<Value> {
        if self.frames.len() >= MAX_CALL_DEPTH {
            return self.runtime(format!("call depth exceeded {MAX_CALL_DEPTH}"));
        }
        let params = func
            .params
            .iter()
            .map(|p| p.name.clone())
            .zip(args)
            .collect();
        self.frames.push(Frame {
            scopes: vec![params],
        });
        let flow = self.exec_block(&func.body);
        let frame = self.frames.pop().expect("frame pushed above");
        for scope in &frame.scopes {
            for (_, v) in scope {
                self.release(v);
            }
        }
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Normal if func.ret == crate::minilang::Type::Void => Ok(Value::Unit),
            Flow::Normal => {
                self.runtime(format!("`{}` ended without returning a value", func.name))
            }
        }
    }

    fn frame(&mut self) -> &mut Frame {
        self.frames
            .last_mut()
            .expect("statements execute inside a frame")
    }

    fn push_scope(&mut self) {
        self.frame().scopes.push(Vec::new());
    }

    fn pop_scope(&mut self) {
        let scope = self.frame().scopes.pop().unwrap_or_default();
        for (_, v) in &scope {
            self.release(v);
        }
    }

    fn lookup(&self, name: &str) -> Option<&Value> {
        if let Some(frame) = self.frames.last() {
            for scope in frame.scopes.iter().rev() {
                if let Some((_, v)) = scope.iter().rev().find(|(n, _)| n == name) {
                    return Some(v);
                }
            }
        }
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    fn lookup_mut(&mut self, name: &str) -> Option<&mut Value> {
        if let Some(frame) = self.frames.last_mut() {
            for scope in frame.scopes.iter_mut().rev() {
                if let Some((_, v)) = scope.iter_mut().rev().find(|(n, _)| n == name) {
                    return Some(v);
                }
            }
        }
        self.fields
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    fn exec_block(&mut self, block: &'a Block) -> Exec<Flow> {
        self.push_scope();
        for stmt in &block.stmts {
            match self.exec(stmt) {
                Ok(Flow::Normal) => {}
                other => {
                    self.pop_scope();
                    return other;
                }
            }
        }
        self.pop_scope();
        Ok(Flow::Normal)
    }

    fn exec(&mut self, stmt: &'a Stmt) -> Exec<Flow> {
        self.tick(1)?;
        if let (Some(cov), Some(id)) = (self.coverage.as_deref_mut(), stmt.id) {
            cov.insert(id);
        }
        match &stmt.kind {
            StmtKind::VarDecl { name, init, .. } => {
                let v = self.eval(init)?;
                let scope = self.frame().scopes.last_mut().expect("block scope");
                scope.push((name.clone(), v));
            }
            StmtKind::Assign {
                target: LValue::Var(name),
                value,
            } => {
                let v = self.eval(value)?;
                let Some(slot) = self.lookup_mut(name) else {
                    return self.runtime(format!("assignment to unbound `{name}`"));
                };
                let old = std::mem::replace(slot, v);
                self.release(&old);
            }
            StmtKind::Assign {
                target: LValue::Index(name, index),
                value,
            } => {
                let i = self.eval_int(index)?;
                let v = self.eval(value)?;
                let Some(slot) = self.lookup_mut(name) else {
                    return self.runtime(format!("assignment to unbound `{name}`"));
                };
                let Value::Array(items) = slot else {
                    return self.runtime(format!("`{name}` is not an array"));
                };
                let len = items.len();
                let Some(elem) = usize::try_from(i).ok().and_then(|i| items.get_mut(i)) else {
                    return self.runtime(format!("index {i} out of bounds for length {len}"));
                };
                let old = std::mem::replace(elem, v);
                self.release(&old);
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                if self.eval_bool(cond)? {
                    return self.exec_block(then_block);
                } else if let Some(b) = else_block {
                    return self.exec_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval_bool(cond)? {
                    if let Flow::Return(v) = self.exec_block(body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                let lo = self.eval_int(start)?;
                let hi = self.eval_int(end)?;
                for i in lo..hi {
                    self.tick(1)?;
                    let v = Value::Int(i);
                    self.acquire(&v);
                    self.frame().scopes.push(vec![(var.clone(), v)]);
                    let flow = self.exec_block(body);
                    self.pop_scope();
                    if let Flow::Return(v) = flow? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            StmtKind::Expr(e) => {
                let v = self.eval(e)?;
                self.release(&v);
            }
            StmtKind::Return(value) => {
                let v = match value {
                    Some(e) => self.eval(e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Assert(cond) => {
                if !self.eval_bool(cond)? {
                    return Err(Fault::AssertFailed);
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn eval_bool(&mut self, e: &'a Expr) -> Exec<bool> {
        let v = self.eval(e)?;
        self.release(&v);
        match v {
            Value::Bool(b) => Ok(b),
            other => self.runtime(format!("expected bool, found {other}")),
        }
    }

    fn eval_int(&mut self, e: &'a Expr) -> Exec<i64> {
        let v = self.eval(e)?;
        self.release(&v);
        match v {
            Value::Int(i) => Ok(i),
            other => self.runtime(format!("expected int, found {other}")),
        }
    }

    /// Evaluates `e`; the result's bytes are counted as live until the
    /// caller releases or binds it.
    fn eval(&mut self, e: &'a Expr) -> Exec<Value> {
        if let Expr::Call(call) = e {
            return self.call(call);
        }
        self.tick(1)?;
        let v = match e {
            Expr::Int(i) => Value::Int(*i),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Null => Value::Null,
            Expr::Var(name) => match self.lookup(name) {
                Some(v) => v.clone(),
                None => return self.runtime(format!("read of unbound `{name}`")),
            },
            Expr::Array(items) => {
                let mut values = Vec::with_capacity(items.len());
                for item in items {
                    values.push(self.eval(item)?);
                }
                for v in &values {
                    self.release(v);
                }
                Value::Array(values)
            }
            Expr::Index(base, index) => {
                if let Expr::Var(name) = base.as_ref() {
                    self.tick(1)?;
                    let i = self.eval_int(index)?;
                    match self.lookup(name) {
                        Some(Value::Array(items)) => {
                            match usize::try_from(i).ok().and_then(|i| items.get(i)) {
                                Some(v) => v.clone(),
                                None => {
                                    return self.runtime(format!(
                                        "index {i} out of bounds for length {}",
                                        items.len()
                                    ))
                                }
                            }
                        }
                        Some(other) => return self.runtime(format!("cannot index {other}")),
                        None => return self.runtime(format!("read of unbound `{name}`")),
                    }
                } else {
                    let b = self.eval(base)?;
                    let i = self.eval_int(index)?;
                    self.release(&b);
                    match b {
                        Value::Array(items) => {
                            match usize::try_from(i).ok().and_then(|i| items.get(i)) {
                                Some(v) => v.clone(),
                                None => {
                                    return self.runtime(format!(
                                        "index {i} out of bounds for length {}",
                                        items.len()
                                    ))
                                }
                            }
                        }
                        other => return self.runtime(format!("cannot index {other}")),
                    }
                }
            }
            Expr::Unary(op, operand) => {
                let v = self.eval(operand)?;
                self.release(&v);
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Value::Int(i.wrapping_neg()),
                    (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (_, other) => return self.runtime(format!("bad unary operand {other}")),
                }
            }
            Expr::Unwrap(inner) => {
                let v = self.eval(inner)?;
                if v == Value::Null {
                    return self.runtime("unwrap of null");
                }
                // Already counted by the inner evaluation.
                return Ok(v);
            }
            Expr::Binary(op, lhs, rhs) => return self.binary(*op, lhs, rhs),
            Expr::Call(_) => unreachable!("handled above"),
        };
        self.acquire(&v);
        Ok(v)
    }

    fn binary(&mut self, op: BinOp, lhs: &'a Expr, rhs: &'a Expr) -> Exec<Value> {
        if matches!(op, BinOp::And | BinOp::Or) {
            let l = self.eval_bool(lhs)?;
            let result = match (op, l) {
                (BinOp::And, false) => false,
                (BinOp::Or, true) => true,
                _ => self.eval_bool(rhs)?,
            };
            let v = Value::Bool(result);
            self.acquire(&v);
            return Ok(v);
        }
        let l = self.eval(lhs)?;
        let r = self.eval(rhs)?;
        self.release(&l);
        self.release(&r);
        let v = match (op, l, r) {
            (BinOp::Eq, l, r) => Value::Bool(l == r),
            (BinOp::Ne, l, r) => Value::Bool(l != r),
            (BinOp::Add, Value::Str(a), Value::Str(b)) => Value::Str(a + &b),
            (op, Value::Int(a), Value::Int(b)) => match op {
                BinOp::Add => Value::Int(a.wrapping_add(b)),
                BinOp::Sub => Value::Int(a.wrapping_sub(b)),
                BinOp::Mul => Value::Int(a.wrapping_mul(b)),
                BinOp::Div | BinOp::Rem if b == 0 => return self.runtime("division by zero"),
                BinOp::Div => Value::Int(a.wrapping_div(b)),
                BinOp::Rem => Value::Int(a.wrapping_rem(b)),
                BinOp::Lt => Value::Bool(a < b),
                BinOp::Le => Value::Bool(a <= b),
                BinOp::Gt => Value::Bool(a > b),
                BinOp::Ge => Value::Bool(a >= b),
                _ => unreachable!("remaining operators handled above"),
            },
            (op, l, r) => {
                return self.runtime(format!("operator `{}` on {l} and {r}", op.symbol()))
            }
        };
        self.acquire(&v);
        Ok(v)
    }

    fn call(&mut self, call: &'a Call) -> Exec<Value> {
        match call.callee.as_str() {
            "len" => {
                self.tick(self.fixtures.cost("len"))?;
                let n = match &call.args[..] {
                    [Expr::Var(name)] => {
                        self.tick(1)?;
                        match self.lookup(name) {
                            Some(v) => length(v),
                            None => return self.runtime(format!("read of unbound `{name}`")),
                        }
                    }
                    [arg] => {
                        let v = self.eval(arg)?;
                        self.release(&v);
                        length(&v)
                    }
                    _ => None,
                };
                let Some(n) = n else {
                    return self.runtime("`len` takes one string or array");
                };
                let v = Value::Int(n);
                self.acquire(&v);
                Ok(v)
            }
            "fetch" => {
                self.tick(self.fixtures.cost("fetch"))?;
                let url = match self.builtin_arg(call)? {
                    Value::Str(s) => s,
                    other => return self.runtime(format!("`fetch` takes a string, given {other}")),
                };
                let Some(body) = self.fixtures.responses.get(&url) else {
                    return self.runtime(format!("no fixture response for `{url}`"));
                };
                self.net += (url.len() + body.len()) as u64;
                let v = Value::Str(body.clone());
                self.acquire(&v);
                Ok(v)
            }
            "alloc" => {
                self.tick(self.fixtures.cost("alloc"))?;
                let n = match self.builtin_arg(call)? {
                    Value::Int(n) => n,
                    other => return self.runtime(format!("`alloc` takes an int, given {other}")),
                };
                if !(0..=MAX_ALLOC_LEN).contains(&n) {
                    return self.runtime(format!("alloc of {n} elements"));
                }
                let v = Value::Array(vec![Value::Int(0); n as usize]);
                self.acquire(&v);
                Ok(v)
            }
            "str" => {
                self.tick(self.fixtures.cost("str"))?;
                let n = match self.builtin_arg(call)? {
                    Value::Int(n) => n,
                    other => return self.runtime(format!("`str` takes an int, given {other}")),
                };
                let v = Value::Str(n.to_string());
                self.acquire(&v);
                Ok(v)
            }
            name => {
                self.tick(1)?;
                let Some(func) = self.functions.get(name).copied() else {
                    return self.runtime(format!("call to undefined `{name}`"));
                };
                if func.params.len() != call.args.len() {
                    return self.runtime(format!("`{name}` called with wrong arity"));
                }
                let mut args = Vec::with_capacity(call.args.len());
                for a in &call.args {
                    args.push(self.eval(a)?);
                }
                // Arguments move into the callee frame; the returned value
                // stays counted as an in-flight result.
                self.invoke(func, args)
            }
        }
    }

    fn builtin_arg(&mut self, call: &'a Call) -> Exec<Value> {
        let [arg] = &call.args[..] else {
            return self.runtime(format!("`{}` takes one argument", call.callee));
        };
        let v = self.eval(arg)?;
        self.release(&v);
        Ok(v)
    }
}

fn length(v: &Value) -> Option<i64> {
    match v {
        Value::Str(s) => Some(s.len() as i64),
        Value::Array(items) => Some(items.len() as i64),
        _ => None,
    }
}
