use std::fmt;

use crate::minilang::Type;

/// Runtime value. Optionals carry no wrapper: an `optional<T>` slot holds
/// either a `T` value or `Null`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Str(String),
    Array(Vec<Value>),
    Null,
    /// Result of a void call.
    Unit,
}

pub const INT_BYTES: u64 = 8;
pub const BOOL_BYTES: u64 = 1;
pub const HEADER_BYTES: u64 = 16;
pub const NULL_BYTES: u64 = 8;

impl Value {
    /// Accounted heap size: int 8, bool 1, string 16 + byte length,
    /// array 16 + sum of element sizes, null 8 (a reference), unit 0.
    pub fn size(&self) -> u64 {
        match self {
            Value::Int(_) => INT_BYTES,
            Value::Bool(_) => BOOL_BYTES,
            Value::Str(s) => HEADER_BYTES + s.len() as u64,
            Value::Array(items) => HEADER_BYTES + items.iter().map(Value::size).sum::<u64>(),
            Value::Null => NULL_BYTES,
            Value::Unit => 0,
        }
    }

    pub fn default_for(ty: &Type) -> Value {
        match ty {
            Type::Int => Value::Int(0),
            Type::Bool => Value::Bool(false),
            Type::Str => Value::Str(String::new()),
            Type::Array(_) => Value::Array(Vec::new()),
            Type::Optional(_) | Type::Null => Value::Null,
            Type::Void => Value::Unit,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Array(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            Value::Null => f.write_str("null"),
            Value::Unit => f.write_str("()"),
        }
    }
}
