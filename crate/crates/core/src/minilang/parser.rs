//! Recursive-descent parser. The grammar is documented in `docs/grammar.ebnf`.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Tok};
use super::ParseError;

/// Parses source text into a program with ids assigned but not type-checked.
pub fn parse_untyped(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        next_provisional: 0,
        spans: HashMap::new(),
    };
    let mut program = Program::default();
    while parser.peek() != &Tok::Eof {
        match parser.peek() {
            Tok::Var => program.fields.push(parser.field()?),
            Tok::Fn => program.functions.push(parser.function()?),
            other => {
                return Err(parser.error(format!(
                    "expected `fn` or `var` at top level, found {}",
                    other.describe()
                )))
            }
        }
    }
    let spans = parser.spans;
    super::ids::assign_ids(&mut program, &spans);
    Ok(program)
}

struct Parser {
    tokens: Vec<(Tok, Span)>,
    pos: usize,
    next_provisional: u32,
    /// Provisional id (source order) to source position.
    spans: HashMap<NodeId, Span>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].0
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].1
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.span(), message)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => Err(self.error(format!("expected identifier, found {}", other.describe()))),
        }
    }

    fn provisional(&mut self, span: Span) -> NodeId {
        let id = NodeId(self.next_provisional);
        self.next_provisional += 1;
        self.spans.insert(id, span);
        id
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        let simple = match self.peek() {
            Tok::TyInt => Some(Type::Int),
            Tok::TyBool => Some(Type::Bool),
            Tok::TyString => Some(Type::Str),
            _ => None,
        };
        if let Some(ty) = simple {
            self.advance();
            return Ok(ty);
        }
        match self.peek() {
            Tok::LBracket => {
                self.advance();
                let elem = self.ty()?;
                self.expect(Tok::RBracket)?;
                Ok(Type::array(elem))
            }
            Tok::TyOptional => {
                self.advance();
                self.expect(Tok::Lt)?;
                let inner = self.ty()?;
                self.expect(Tok::Gt)?;
                Ok(Type::optional(inner))
            }
            other => Err(self.error(format!("expected a type, found {}", other.describe()))),
        }
    }

    fn field(&mut self) -> Result<Field, ParseError> {
        self.expect(Tok::Var)?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        let init = if self.eat(&Tok::Assign) {
            Some(self.expr()?)
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        Ok(Field { name, ty, init })
    }

    fn function(&mut self) -> Result<Function, ParseError> {
        self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                let pname = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                params.push(Param { name: pname, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let ret = if self.eat(&Tok::Arrow) {
            self.ty()?
        } else {
            Type::Void
        };
        let body = self.block()?;
        Ok(Function {
            name,
            params,
            ret,
            body,
        })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while self.peek() != &Tok::RBrace {
            if self.peek() == &Tok::Eof {
                return Err(self.error("unclosed block: expected `}`"));
            }
            stmts.push(self.stmt()?);
        }
        self.advance();
        Ok(Block { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        // The statement id is taken before any nested call ids so that the
        // provisional order is already pre-order.
        let id = self.provisional(span);
        let kind = match self.peek() {
            Tok::Var => {
                self.advance();
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::Assign)?;
                let init = self.expr()?;
                self.expect(Tok::Semi)?;
                StmtKind::VarDecl { name, ty, init }
            }
            Tok::If => self.if_tail()?,
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::For => {
                self.advance();
                self.expect(Tok::LParen)?;
                let var = self.ident()?;
                self.expect(Tok::In)?;
                let start = self.expr()?;
                self.expect(Tok::DotDot)?;
                let end = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::For {
                    var,
                    start,
                    end,
                    body,
                }
            }
            Tok::Return => {
                self.advance();
                let value = if self.peek() == &Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.expect(Tok::Semi)?;
                StmtKind::Return(value)
            }
            Tok::Assert => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Assert(cond)
            }
            _ => {
                let lhs_span = self.span();
                let lhs = self.expr()?;
                if self.eat(&Tok::Assign) {
                    let target = match lhs {
                        Expr::Var(name) => LValue::Var(name),
                        Expr::Index(base, index) => match *base {
                            Expr::Var(name) => LValue::Index(name, *index),
                            _ => {
                                return Err(ParseError::new(lhs_span, "invalid assignment target"))
                            }
                        },
                        _ => return Err(ParseError::new(lhs_span, "invalid assignment target")),
                    };
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Assign { target, value }
                } else {
                    self.expect(Tok::Semi)?;
                    StmtKind::Expr(lhs)
                }
            }
        };
        Ok(Stmt { id: Some(id), kind })
    }

    /// Parses `if (cond) block [else ...]`, starting at the `if` keyword.
    fn if_tail(&mut self) -> Result<StmtKind, ParseError> {
        self.expect(Tok::If)?;
        self.expect(Tok::LParen)?;
        let cond = self.expr()?;
        self.expect(Tok::RParen)?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                let span = self.span();
                let id = self.provisional(span);
                let kind = self.if_tail()?;
                Some(Block {
                    stmts: vec![Stmt { id: Some(id), kind }],
                })
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(StmtKind::If {
            cond,
            then_block,
            else_block,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.advance();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Bang => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            match self.peek() {
                Tok::LBracket => {
                    self.advance();
                    let index = self.expr()?;
                    self.expect(Tok::RBracket)?;
                    e = Expr::Index(Box::new(e), Box::new(index));
                }
                Tok::Bang => {
                    self.advance();
                    e = Expr::Unwrap(Box::new(e));
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Null => {
                self.advance();
                Ok(Expr::Null)
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                if self.peek() != &Tok::RBracket {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Expr::Array(items))
            }
            Tok::Ident(name) => {
                if self.peek_at(1) == &Tok::LParen {
                    let id = self.provisional(span);
                    self.advance();
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek() != &Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Call(Call {
                        id: Some(id),
                        callee: name,
                        args,
                    }))
                } else {
                    self.advance();
                    Ok(Expr::Var(name))
                }
            }
            other => Err(self.error(format!(
                "expected an expression, found {}",
                other.describe()
            ))),
        }
    }
}
