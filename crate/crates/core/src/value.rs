//! Runtime values and identities shared by every layer of the simulator.

use std::fmt;

/// Identity of a scheduled entity: a function instance, a mechanism, an
/// object, or a method activation. Ordinals are assigned in creation order,
/// are never reused, and totally order the scheduler's choice sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub u64);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Interned symbol token, written `:NAME` in guest source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(name: impl Into<String>) -> Self {
        Symbol(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// A guest value. Values are immutable once constructed; `Ref`s are only
/// produced by instance/object/mechanism creation or by `self`, never by
/// arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Ref(InstanceId),
    Sym(Symbol),
    Pair(Box<Value>, Box<Value>),
    Unit,
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn sym(name: &str) -> Value {
        Value::Sym(Symbol::new(name))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_ref_id(&self) -> Option<InstanceId> {
        match self {
            Value::Ref(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_pair(&self) -> Option<(&Value, &Value)> {
        match self {
            Value::Pair(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn as_sym(&self) -> Option<&Symbol> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Ref(id) => write!(f, "@{id}"),
            Value::Sym(s) => write!(f, ":{s}"),
            Value::Pair(a, b) => write!(f, "({a}, {b})"),
            Value::Unit => write!(f, "()"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(Value::Int(-3).to_string(), "-3");
        assert_eq!(Value::Ref(InstanceId(2)).to_string(), "@2");
        assert_eq!(Value::sym("ACQ").to_string(), ":ACQ");
        assert_eq!(Value::Unit.to_string(), "()");
        assert_eq!(
            Value::pair(Value::sym("WRITE"), Value::pair(Value::Ref(InstanceId(1)), Value::Int(5)))
                .to_string(),
            "(:WRITE, (@1, 5))"
        );
    }

    #[test]
    fn refs_compare_by_ordinal() {
        assert_eq!(Value::Ref(InstanceId(1)), Value::Ref(InstanceId(1)));
        assert_ne!(Value::Ref(InstanceId(1)), Value::Ref(InstanceId(2)));
        assert_ne!(Value::Ref(InstanceId(1)), Value::Int(1));
    }
}
