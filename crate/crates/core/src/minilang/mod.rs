//! The mini-language standing in for application source code: parser, type
//! checker, canonical printer, and node-id assignment.
//!
//! Statements and call expressions are numbered by one pre-order traversal of
//! the whole program, so the ids are dense and stable across a print/parse
//! round trip. Patches address nodes by these ids.

mod ast;
mod ids;
mod lexer;
mod parser;
mod printer;
mod typeck;

use std::fmt;

use thiserror::Error;

pub use ast::*;
pub use ids::assign_ids;
pub use printer::{expr_to_string, pretty_print, stmt_to_string};
pub use typeck::{callee_return_type, check as typecheck, is_builtin, BUILTINS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

/// A semantic error. Located by the enclosing function or field and, where
/// known, the offending statement and its source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct TypeError {
    pub message: String,
    pub function: Option<String>,
    pub field: Option<String>,
    pub stmt: Option<NodeId>,
    pub span: Option<Span>,
}

impl TypeError {
    fn item(function: &str, message: String) -> Self {
        TypeError {
            message,
            function: Some(function.to_string()),
            field: None,
            stmt: None,
            span: None,
        }
    }

    fn field(field: &str, message: String) -> Self {
        TypeError {
            message,
            function: None,
            field: Some(field.to_string()),
            stmt: None,
            span: None,
        }
    }

    fn in_field(mut self, field: &str) -> Self {
        self.function = None;
        self.field = Some(field.to_string());
        self
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("type error")?;
        if let Some(span) = self.span {
            write!(f, " at {span}")?;
        }
        match (&self.function, &self.field) {
            (Some(func), _) => write!(f, " in fn {func}")?,
            (None, Some(field)) => write!(f, " in field {field}")?,
            (None, None) => {}
        }
        if let Some(id) = self.stmt {
            write!(f, " (statement {id})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Parses and type-checks `source`. Ids are assigned on success.
pub fn parse(source: &str) -> Result<Program, LangError> {
    let program = parser::parse_untyped(source)?;
    if let Err(mut err) = typecheck(&program) {
        err.span = err
            .stmt
            .and_then(|id| program.id_index.get(&id))
            .and_then(|info| info.span);
        return Err(err.into());
    }
    Ok(program)
}

/// Parses without type checking.
pub fn parse_untyped(source: &str) -> Result<Program, ParseError> {
    parser::parse_untyped(source)
}

/// Classifies an id of `program`.
pub fn node_kind(program: &Program, id: NodeId) -> NodeKind {
    program.node_kind(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NESTED: &str = r#"
var hits: int = 0;

fn classify(n: int) -> string {
  if (n < 0) { return "neg"; } else if (n == 0) { return "zero"; }
  var i: int = 0;
  while (i < n) { if (i % 2 == 0) { hits = hits + 1; } i = i + 1; }
  return "pos";
}

fn test_classify() {
  assert(classify(0 - 1) == "neg");
  assert(classify(4) == "pos");
}
"#;

    #[test]
    fn empty_source_is_empty_program() {
        let p = parse("").unwrap();
        assert!(p.functions.is_empty());
        assert!(p.fields.is_empty());
        assert_eq!(pretty_print(&p), "");
    }

    #[test]
    fn first_statement_gets_id_zero() {
        let p = parse("fn main() { var x: int = 1; }").unwrap();
        assert_eq!(p.functions.len(), 1);
        let stmt = &p.functions[0].body.stmts[0];
        assert_eq!(stmt.id, Some(NodeId(0)));
        assert!(matches!(stmt.kind, StmtKind::VarDecl { .. }));
        assert_eq!(node_kind(&p, NodeId(0)), NodeKind::Statement);
    }

    #[test]
    fn missing_expression_is_a_located_parse_error() {
        let err = parse("fn main() { var x: int = ; }").unwrap_err();
        match err {
            LangError::Parse(e) => assert_eq!(
                e.span,
                Span {
                    line: 1,
                    column: 26
                }
            ),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn node_kinds() {
        // 0: var a, 1: expr stmt, 2: foo(a), 3: return, 4: foo's... see below
        let src = "fn foo(a: int) -> int { return a; }\nfn main() { var a: int = 2; foo(a); }";
        let p = parse(src).unwrap();
        // foo: return = 0; main: var a = 1, expr stmt = 2, call foo(a) = 3
        assert_eq!(node_kind(&p, NodeId(0)), NodeKind::Statement);
        assert_eq!(node_kind(&p, NodeId(1)), NodeKind::Statement);
        assert_eq!(node_kind(&p, NodeId(2)), NodeKind::Statement);
        assert_eq!(node_kind(&p, NodeId(3)), NodeKind::CallExpression);
        assert_eq!(node_kind(&p, NodeId(4)), NodeKind::Absent);
        assert_eq!(node_kind(&p, NodeId(999)), NodeKind::Absent);
    }

    #[test]
    fn ids_are_dense() {
        let p = parse(NESTED).unwrap();
        let ids: Vec<u32> = p.id_index.keys().map(|id| id.0).collect();
        let expected: Vec<u32> = (0..ids.len() as u32).collect();
        assert_eq!(ids, expected);
    }

    #[test]
    fn field_initializer_calls_are_numbered_first() {
        let p = parse("var a: int = f();\nfn f() -> int { return 1; }").unwrap();
        assert_eq!(node_kind(&p, NodeId(0)), NodeKind::CallExpression);
        assert_eq!(p.id_index[&NodeId(0)].function, None);
        assert_eq!(node_kind(&p, NodeId(1)), NodeKind::Statement);
    }

    #[test]
    fn nested_program_golden_print() {
        let p = parse(NESTED).unwrap();
        let golden = "\
var hits: int = 0;

fn classify(n: int) -> string {
    if (n < 0) {
        return \"neg\";
    } else if (n == 0) {
        return \"zero\";
    }
    var i: int = 0;
    while (i < n) {
        if (i % 2 == 0) {
            hits = hits + 1;
        }
        i = i + 1;
    }
    return \"pos\";
}

fn test_classify() {
    assert(classify(0 - 1) == \"neg\");
    assert(classify(4) == \"pos\");
}
";
        assert_eq!(pretty_print(&p), golden);
    }

    #[test]
    fn round_trip_preserves_structure_and_ids() {
        let p = parse(NESTED).unwrap();
        let q = parse(&pretty_print(&p)).unwrap();
        assert_eq!(p, q);
        assert_eq!(
            p.id_index.keys().collect::<Vec<_>>(),
            q.id_index.keys().collect::<Vec<_>>()
        );
    }

    #[test]
    fn interleaved_items_print_fields_first_with_same_ids() {
        let src = "fn f() -> int { return g(); }\nvar x: int = f();\nfn g() -> int { return 2; }";
        let p = parse(src).unwrap();
        let q = parse(&pretty_print(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn type_errors_carry_location() {
        let err = parse("fn main() {\n  var x: int = 1;\n  y = 2;\n}").unwrap_err();
        let LangError::Type(e) = err else {
            panic!("expected type error")
        };
        assert_eq!(e.span, Some(Span { line: 3, column: 3 }));
        assert_eq!(e.function.as_deref(), Some("main"));
    }

    #[test]
    fn semantic_rules() {
        let bad = [
            "fn main() { x = 1; var x: int = 0; }",
            "fn f(a: int) {}\nfn main() { f(); }",
            "fn f(a: int) {}\nfn main() { f(true); }",
            "fn main() { assert(1); }",
            "fn main() { var x: int = 1; var x: int = 2; }",
            "fn main() -> int { return; }",
            "fn len() {}",
            "var o: optional<int>;\nfn main() { var x: int = o; }",
            "fn main() { var a: [int] = []; }",
        ];
        for src in bad {
            assert!(
                matches!(parse(src), Err(LangError::Type(_))),
                "accepted: {src}"
            );
        }
        let good = [
            "var o: optional<int>;\nfn main() { if (o == null) { o = 3; } var x: int = o!; }",
            "fn main() { var x: int = 1; if (true) { var x: int = 2; } }",
            "fn main() { var s: string = \"a\" + str(1); var n: int = len(s) + len(alloc(3)); }",
            "fn main() { for (i in 0..3) { var a: [int] = [i, 2]; a[0] = a[1]; } }",
        ];
        for src in good {
            parse(src).unwrap_or_else(|e| panic!("rejected {src}: {e}"));
        }
    }

    #[test]
    fn is_test_by_prefix() {
        let p = parse("fn test_a() {}\nfn helper() {}").unwrap();
        assert!(p.functions[0].is_test());
        assert!(!p.functions[1].is_test());
    }
}
