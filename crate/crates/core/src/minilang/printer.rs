use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Canonical source text. Comments and original layout are not preserved.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    for field in &program.fields {
        write!(out, "var {}: {}", field.name, field.ty).unwrap();
        if let Some(init) = &field.init {
            write!(out, " = {}", expr_to_string(init)).unwrap();
        }
        out.push_str(";\n");
    }
    for (i, func) in program.functions.iter().enumerate() {
        if i > 0 || !program.fields.is_empty() {
            out.push('\n');
        }
        let params: Vec<String> = func
            .params
            .iter()
            .map(|p| format!("{}: {}", p.name, p.ty))
            .collect();
        write!(out, "fn {}({})", func.name, params.join(", ")).unwrap();
        if func.ret != Type::Void {
            write!(out, " -> {}", func.ret).unwrap();
        }
        out.push(' ');
        print_block(&mut out, &func.body, 0);
        out.push('\n');
    }
    out
}

pub fn stmt_to_string(stmt: &Stmt) -> String {
    let mut out = String::new();
    print_stmt(&mut out, stmt, 0);
    out
}

fn print_block(out: &mut String, block: &Block, depth: usize) {
    out.push_str("{\n");
    for stmt in &block.stmts {
        print_stmt(out, stmt, depth + 1);
    }
    out.push_str(&INDENT.repeat(depth));
    out.push('}');
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    out.push_str(&INDENT.repeat(depth));
    match &stmt.kind {
        StmtKind::VarDecl { name, ty, init } => {
            writeln!(out, "var {name}: {ty} = {};", expr_to_string(init)).unwrap();
        }
        StmtKind::Assign { target, value } => {
            match target {
                LValue::Var(name) => out.push_str(name),
                LValue::Index(name, index) => {
                    write!(out, "{name}[{}]", expr_to_string(index)).unwrap()
                }
            }
            writeln!(out, " = {};", expr_to_string(value)).unwrap();
        }
        StmtKind::If { .. } => {
            print_if(out, stmt, depth);
            out.push('\n');
        }
        StmtKind::While { cond, body } => {
            write!(out, "while ({}) ", expr_to_string(cond)).unwrap();
            print_block(out, body, depth);
            out.push('\n');
        }
        StmtKind::For {
            var,
            start,
            end,
            body,
        } => {
            write!(
                out,
                "for ({var} in {}..{}) ",
                expr_to_string(start),
                expr_to_string(end)
            )
            .unwrap();
            print_block(out, body, depth);
            out.push('\n');
        }
        StmtKind::Expr(e) => writeln!(out, "{};", expr_to_string(e)).unwrap(),
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => writeln!(out, "return {};", expr_to_string(e)).unwrap(),
        StmtKind::Assert(e) => writeln!(out, "assert({});", expr_to_string(e)).unwrap(),
    }
}

/// Prints an if statement without leading indentation or trailing newline.
/// An else block holding exactly one if statement is printed as `else if`.
fn print_if(out: &mut String, stmt: &Stmt, depth: usize) {
    let StmtKind::If {
        cond,
        then_block,
        else_block,
    } = &stmt.kind
    else {
        unreachable!("print_if on a non-if statement");
    };
    write!(out, "if ({}) ", expr_to_string(cond)).unwrap();
    print_block(out, then_block, depth);
    if let Some(else_block) = else_block {
        out.push_str(" else ");
        match else_block.stmts.as_slice() {
            [only] if matches!(only.kind, StmtKind::If { .. }) => print_if(out, only, depth),
            _ => print_block(out, else_block, depth),
        }
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    print_expr(&mut out, e);
    out
}

fn print_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(v) if *v < 0 => write!(out, "({v})").unwrap(),
        Expr::Int(v) => write!(out, "{v}").unwrap(),
        Expr::Bool(b) => write!(out, "{b}").unwrap(),
        Expr::Str(s) => print_string(out, s),
        Expr::Null => out.push_str("null"),
        Expr::Var(name) => out.push_str(name),
        Expr::Array(items) => {
            out.push('[');
            print_list(out, items);
            out.push(']');
        }
        Expr::Index(base, index) => {
            print_postfix_base(out, base);
            out.push('[');
            print_expr(out, index);
            out.push(']');
        }
        Expr::Unwrap(base) => {
            print_postfix_base(out, base);
            out.push('!');
        }
        Expr::Unary(op, operand) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            });
            if matches!(**operand, Expr::Binary(..)) {
                out.push('(');
                print_expr(out, operand);
                out.push(')');
            } else {
                print_expr(out, operand);
            }
        }
        Expr::Binary(op, lhs, rhs) => {
            print_operand(out, lhs, op.precedence(), false);
            write!(out, " {} ", op.symbol()).unwrap();
            print_operand(out, rhs, op.precedence(), true);
        }
        Expr::Call(call) => {
            out.push_str(&call.callee);
            out.push('(');
            print_list(out, &call.args);
            out.push(')');
        }
    }
}

fn print_list(out: &mut String, items: &[Expr]) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_expr(out, item);
    }
}

fn print_postfix_base(out: &mut String, base: &Expr) {
    if matches!(base, Expr::Binary(..) | Expr::Unary(..)) {
        out.push('(');
        print_expr(out, base);
        out.push(')');
    } else {
        print_expr(out, base);
    }
}

fn print_operand(out: &mut String, e: &Expr, parent: u8, right: bool) {
    let needs_parens = match e {
        Expr::Binary(op, ..) => op.precedence() < parent || (right && op.precedence() == parent),
        _ => false,
    };
    if needs_parens {
        out.push('(');
        print_expr(out, e);
        out.push(')');
    } else {
        print_expr(out, e);
    }
}

fn print_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}
