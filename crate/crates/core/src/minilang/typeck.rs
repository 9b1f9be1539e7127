use std::collections::HashMap;

use super::ast::*;
use super::TypeError;

/// Names reserved for runtime builtins.
pub const BUILTINS: [&str; 4] = ["fetch", "alloc", "len", "str"];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

/// Return type of a call, without checking its arguments.
pub fn callee_return_type(program: &Program, callee: &str) -> Option<Type> {
    match callee {
        "fetch" | "str" => Some(Type::Str),
        "alloc" => Some(Type::array(Type::Int)),
        "len" => Some(Type::Int),
        _ => program.function(callee).map(|f| f.ret.clone()),
    }
}

/// Checks declarations, scoping, and typing for the whole program.
pub fn check(program: &Program) -> Result<(), TypeError> {
    let mut signatures: HashMap<&str, (&[Param], &Type)> = HashMap::new();
    for func in &program.functions {
        if is_builtin(&func.name) {
            return Err(TypeError::item(
                &func.name,
                format!("`{}` is a builtin and cannot be redefined", func.name),
            ));
        }
        if signatures
            .insert(&func.name, (&func.params, &func.ret))
            .is_some()
        {
            return Err(TypeError::item(
                &func.name,
                format!("function `{}` defined twice", func.name),
            ));
        }
    }

    let mut checker = Checker {
        signatures,
        fields: HashMap::new(),
        scopes: Vec::new(),
        function: None,
        stmt: None,
    };

    for field in &program.fields {
        if checker.fields.contains_key(field.name.as_str()) {
            return Err(TypeError::field(
                &field.name,
                format!("field `{}` declared twice", field.name),
            ));
        }
        if matches!(field.ty, Type::Void | Type::Null) {
            return Err(TypeError::field(
                &field.name,
                format!("field `{}` has no storable type", field.name),
            ));
        }
        if let Some(init) = &field.init {
            let ty = checker.expr(init).map_err(|e| e.in_field(&field.name))?;
            if !ty.assignable_to(&field.ty) {
                return Err(TypeError::field(
                    &field.name,
                    format!(
                        "field `{}` declared {} but initialized with {ty}",
                        field.name, field.ty
                    ),
                ));
            }
        }
        checker.fields.insert(&field.name, field.ty.clone());
    }

    for func in &program.functions {
        checker.function = Some(func);
        checker.scopes.clear();
        let mut params = HashMap::new();
        for p in &func.params {
            if matches!(p.ty, Type::Void | Type::Null) {
                return Err(TypeError::item(
                    &func.name,
                    format!("parameter `{}` has no storable type", p.name),
                ));
            }
            if params.insert(p.name.clone(), p.ty.clone()).is_some() {
                return Err(TypeError::item(
                    &func.name,
                    format!("parameter `{}` declared twice", p.name),
                ));
            }
        }
        checker.scopes.push(params);
        checker.block(&func.body)?;
    }
    Ok(())
}

struct Checker<'p> {
    signatures: HashMap<&'p str, (&'p [Param], &'p Type)>,
    fields: HashMap<&'p str, Type>,
    scopes: Vec<HashMap<String, Type>>,
    function: Option<&'p Function>,
    stmt: Option<NodeId>,
}

impl<'p> Checker<'p> {
    fn err(&self, message: impl Into<String>) -> TypeError {
        TypeError {
            message: message.into(),
            function: self.function.map(|f| f.name.clone()),
            field: None,
            stmt: self.stmt,
            span: None,
        }
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.fields.get(name))
    }

    fn declare(&mut self, name: &str, ty: Type) -> Result<(), TypeError> {
        if matches!(ty, Type::Void | Type::Null) {
            return Err(self.err(format!("variable `{name}` has no storable type")));
        }
        let scope = self
            .scopes
            .last_mut()
            .expect("a scope is always open inside a function");
        if scope.contains_key(name) {
            return Err(self.err(format!("variable `{name}` already declared in this scope")));
        }
        scope.insert(name.to_string(), ty);
        Ok(())
    }

    fn block(&mut self, block: &'p Block) -> Result<(), TypeError> {
        self.scopes.push(HashMap::new());
        for stmt in &block.stmts {
            self.stmt(stmt)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, stmt: &'p Stmt) -> Result<(), TypeError> {
        self.stmt = stmt.id;
        match &stmt.kind {
            StmtKind::VarDecl { name, ty, init } => {
                let init_ty = self.expr(init)?;
                if !init_ty.assignable_to(ty) {
                    return Err(self.err(format!(
                        "`{name}` declared {ty} but initialized with {init_ty}"
                    )));
                }
                self.declare(name, ty.clone())?;
            }
            StmtKind::Assign { target, value } => {
                let value_ty = self.expr(value)?;
                let var_ty = self.lookup(target.name()).cloned().ok_or_else(|| {
                    self.err(format!(
                        "assignment to undeclared variable `{}`",
                        target.name()
                    ))
                })?;
                let slot_ty = match target {
                    LValue::Var(_) => var_ty,
                    LValue::Index(name, index) => {
                        let index_ty = self.expr(index)?;
                        if index_ty != Type::Int {
                            return Err(
                                self.err(format!("array index must be int, found {index_ty}"))
                            );
                        }
                        match var_ty {
                            Type::Array(elem) => *elem,
                            other => {
                                return Err(self.err(format!("`{name}` is {other}, not an array")))
                            }
                        }
                    }
                };
                if !value_ty.assignable_to(&slot_ty) {
                    return Err(self.err(format!(
                        "cannot assign {value_ty} to `{}` of type {slot_ty}",
                        target.name()
                    )));
                }
            }
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                self.expect_bool(cond, "if condition")?;
                self.block(then_block)?;
                if let Some(b) = else_block {
                    self.block(b)?;
                }
            }
            StmtKind::While { cond, body } => {
                self.expect_bool(cond, "while condition")?;
                self.block(body)?;
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                for bound in [start, end] {
                    let ty = self.expr(bound)?;
                    if ty != Type::Int {
                        return Err(self.err(format!("for-loop bound must be int, found {ty}")));
                    }
                }
                self.scopes.push(HashMap::new());
                self.declare(var, Type::Int)?;
                self.block(body)?;
                self.scopes.pop();
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Return(value) => {
                let ret = self
                    .function
                    .map(|f| &f.ret)
                    .expect("return outside a function");
                match value {
                    None if *ret != Type::Void => {
                        return Err(self.err(format!("missing return value of type {ret}")))
                    }
                    None => {}
                    Some(e) => {
                        let ty = self.expr(e)?;
                        if *ret == Type::Void {
                            return Err(self.err("void function returns a value"));
                        }
                        if !ty.assignable_to(ret) {
                            return Err(self.err(format!("returns {ty}, expected {ret}")));
                        }
                    }
                }
            }
            StmtKind::Assert(e) => self.expect_bool(e, "assert")?,
        }
        Ok(())
    }

    fn expect_bool(&mut self, e: &Expr, what: &str) -> Result<(), TypeError> {
        let ty = self.expr(e)?;
        if ty != Type::Bool {
            return Err(self.err(format!("{what} takes bool, found {ty}")));
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<Type, TypeError> {
        Ok(match e {
            Expr::Int(_) => Type::Int,
            Expr::Bool(_) => Type::Bool,
            Expr::Str(_) => Type::Str,
            Expr::Null => Type::Null,
            Expr::Var(name) => self
                .lookup(name)
                .cloned()
                .ok_or_else(|| self.err(format!("use of undeclared variable `{name}`")))?,
            Expr::Array(items) => {
                let Some((first, rest)) = items.split_first() else {
                    return Err(self.err("cannot infer the element type of an empty array literal"));
                };
                let elem = self.expr(first)?;
                if matches!(elem, Type::Void | Type::Null) {
                    return Err(self.err(format!("array elements cannot be {elem}")));
                }
                for item in rest {
                    let ty = self.expr(item)?;
                    if ty != elem {
                        return Err(self.err(format!("array literal mixes {elem} and {ty}")));
                    }
                }
                Type::array(elem)
            }
            Expr::Index(base, index) => {
                let base_ty = self.expr(base)?;
                let index_ty = self.expr(index)?;
                if index_ty != Type::Int {
                    return Err(self.err(format!("array index must be int, found {index_ty}")));
                }
                match base_ty {
                    Type::Array(elem) => *elem,
                    other => return Err(self.err(format!("cannot index into {other}"))),
                }
            }
            Expr::Unary(op, operand) => {
                let ty = self.expr(operand)?;
                let want = match op {
                    UnOp::Neg => Type::Int,
                    UnOp::Not => Type::Bool,
                };
                if ty != want {
                    return Err(self.err(format!("unary operator expects {want}, found {ty}")));
                }
                want
            }
            Expr::Unwrap(base) => match self.expr(base)? {
                Type::Optional(inner) => *inner,
                other => return Err(self.err(format!("`!` applied to non-optional {other}"))),
            },
            Expr::Binary(op, lhs, rhs) => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                self.binary(*op, l, r)?
            }
            Expr::Call(call) => self.call(call)?,
        })
    }

    fn binary(&self, op: BinOp, l: Type, r: Type) -> Result<Type, TypeError> {
        let mismatch = || {
            self.err(format!(
                "operator `{}` cannot combine {l} and {r}",
                op.symbol()
            ))
        };
        match op {
            BinOp::Add if l == Type::Str && r == Type::Str => Ok(Type::Str),
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem => {
                if l == Type::Int && r == Type::Int {
                    Ok(Type::Int)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if l == Type::Int && r == Type::Int {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::Eq | BinOp::Ne => {
                let comparable = l != Type::Void
                    && r != Type::Void
                    && (l.assignable_to(&r) || r.assignable_to(&l));
                if comparable {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
            BinOp::And | BinOp::Or => {
                if l == Type::Bool && r == Type::Bool {
                    Ok(Type::Bool)
                } else {
                    Err(mismatch())
                }
            }
        }
    }

    fn call(&mut self, call: &Call) -> Result<Type, TypeError> {
        let mut arg_types = Vec::with_capacity(call.args.len());
        for a in &call.args {
            arg_types.push(self.expr(a)?);
        }
        let name = call.callee.as_str();
        let arity = |n: usize| -> Result<(), TypeError> {
            if arg_types.len() == n {
                Ok(())
            } else {
                Err(self.err(format!(
                    "`{name}` takes {n} argument(s), given {}",
                    arg_types.len()
                )))
            }
        };
        match name {
            "fetch" => {
                arity(1)?;
                self.expect_arg(name, &arg_types[0], &Type::Str)?;
                Ok(Type::Str)
            }
            "alloc" => {
                arity(1)?;
                self.expect_arg(name, &arg_types[0], &Type::Int)?;
                Ok(Type::array(Type::Int))
            }
            "str" => {
                arity(1)?;
                self.expect_arg(name, &arg_types[0], &Type::Int)?;
                Ok(Type::Str)
            }
            "len" => {
                arity(1)?;
                match &arg_types[0] {
                    Type::Str | Type::Array(_) => Ok(Type::Int),
                    other => Err(self.err(format!("`len` takes a string or array, given {other}"))),
                }
            }
            _ => {
                let (params, ret) = *self
                    .signatures
                    .get(name)
                    .ok_or_else(|| self.err(format!("call to undefined function `{name}`")))?;
                arity(params.len())?;
                for (param, ty) in params.iter().zip(&arg_types) {
                    if !ty.assignable_to(&param.ty) {
                        return Err(self.err(format!(
                            "argument `{}` of `{name}` expects {}, given {ty}",
                            param.name, param.ty
                        )));
                    }
                }
                Ok(ret.clone())
            }
        }
    }

    fn expect_arg(&self, name: &str, given: &Type, want: &Type) -> Result<(), TypeError> {
        if given.assignable_to(want) {
            Ok(())
        } else {
            Err(self.err(format!("`{name}` expects {want}, given {given}")))
        }
    }
}
