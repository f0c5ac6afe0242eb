//! Conditions over local variables with three-valued evaluation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ToId;

/// Value of a variable. `Unknown` is what an undeclared or uninitialized
/// variable resolves to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(untagged)]
pub enum VarValue {
    Bool(bool),
    Int(i64),
    #[default]
    Unknown,
}

impl fmt::Display for VarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarValue::Bool(b) => write!(f, "{b}"),
            VarValue::Int(n) => write!(f, "{n}"),
            VarValue::Unknown => f.write_str("unknown"),
        }
    }
}

/// Anything that can resolve a variable name.
pub trait Environment {
    fn lookup(&self, name: &str) -> VarValue;
}

/// A chain of variable scopes: the owner's bindings, then its enclosing objects.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VarEnv {
    pub owner: ToId,
    pub bindings: BTreeMap<String, VarValue>,
    pub parent: Option<Box<VarEnv>>,
}

impl VarEnv {
    pub fn new(owner: impl Into<ToId>) -> Self {
        VarEnv {
            owner: owner.into(),
            bindings: BTreeMap::new(),
            parent: None,
        }
    }

    pub fn with_parent(mut self, parent: VarEnv) -> Self {
        self.parent = Some(Box::new(parent));
        self
    }

    pub fn bind(mut self, name: impl Into<String>, value: VarValue) -> Self {
        self.bindings.insert(name.into(), value);
        self
    }
}

impl Environment for VarEnv {
    fn lookup(&self, name: &str) -> VarValue {
        let mut scope = Some(self);
        while let Some(env) = scope {
            if let Some(v) = env.bindings.get(name) {
                return v.clone();
            }
            scope = env.parent.as_deref();
        }
        VarValue::Unknown
    }
}

/// An environment with no bindings at all.
pub struct EmptyEnv;

impl Environment for EmptyEnv {
    fn lookup(&self, _name: &str) -> VarValue {
        VarValue::Unknown
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Expression tree of a condition. `Condition::Bool(true)` is the constant true.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Condition {
    Bool(bool),
    Int(i64),
    Var(String),
    Cmp(CmpOp, Box<Condition>, Box<Condition>),
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
}

/// Result of evaluating a condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

impl Default for Condition {
    fn default() -> Self {
        Condition::Bool(true)
    }
}

impl Condition {
    pub fn truth() -> Self {
        Condition::Bool(true)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Condition::Var(name.into())
    }

    pub fn cmp(op: CmpOp, lhs: Condition, rhs: Condition) -> Self {
        Condition::Cmp(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Condition, rhs: Condition) -> Self {
        Condition::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Condition, rhs: Condition) -> Self {
        Condition::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn negate(inner: Condition) -> Self {
        Condition::Not(Box::new(inner))
    }

    pub fn is_constant_true(&self) -> bool {
        matches!(self, Condition::Bool(true))
    }

    /// Names of all variables referenced, in first-occurrence order.
    pub fn variables(&self) -> Vec<&str> {
        fn walk<'a>(c: &'a Condition, out: &mut Vec<&'a str>) {
            match c {
                Condition::Bool(_) | Condition::Int(_) => {}
                Condition::Var(v) => {
                    if !out.contains(&v.as_str()) {
                        out.push(v);
                    }
                }
                Condition::Cmp(_, a, b) | Condition::And(a, b) | Condition::Or(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Condition::Not(a) => walk(a, out),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    fn value(&self, env: &dyn Environment) -> VarValue {
        match self {
            Condition::Bool(b) => VarValue::Bool(*b),
            Condition::Int(n) => VarValue::Int(*n),
            Condition::Var(name) => env.lookup(name),
            other => match other.eval(env) {
                Truth::True => VarValue::Bool(true),
                Truth::False => VarValue::Bool(false),
                Truth::Unknown => VarValue::Unknown,
            },
        }
    }

    fn eval(&self, env: &dyn Environment) -> Truth {
        match self {
            Condition::Bool(b) => Truth::from_bool(*b),
            // an integer on its own is not a truth value
            Condition::Int(_) => Truth::Unknown,
            Condition::Var(name) => match env.lookup(name) {
                VarValue::Bool(b) => Truth::from_bool(b),
                _ => Truth::Unknown,
            },
            Condition::Cmp(op, a, b) => compare(*op, &a.value(env), &b.value(env)),
            Condition::And(a, b) => match (a.eval(env), b.eval(env)) {
                (Truth::False, _) | (_, Truth::False) => Truth::False,
                (Truth::True, Truth::True) => Truth::True,
                _ => Truth::Unknown,
            },
            Condition::Or(a, b) => match (a.eval(env), b.eval(env)) {
                (Truth::True, _) | (_, Truth::True) => Truth::True,
                (Truth::False, Truth::False) => Truth::False,
                _ => Truth::Unknown,
            },
            Condition::Not(a) => match a.eval(env) {
                Truth::True => Truth::False,
                Truth::False => Truth::True,
                Truth::Unknown => Truth::Unknown,
            },
        }
    }
}

fn compare(op: CmpOp, a: &VarValue, b: &VarValue) -> Truth {
    use std::cmp::Ordering;
    let ord: Ordering = match (a, b) {
        (VarValue::Int(x), VarValue::Int(y)) => x.cmp(y),
        (VarValue::Bool(x), VarValue::Bool(y)) => match op {
            CmpOp::Eq => return Truth::from_bool(x == y),
            CmpOp::Ne => return Truth::from_bool(x != y),
            _ => return Truth::Unknown,
        },
        _ => return Truth::Unknown,
    };
    Truth::from_bool(match op {
        CmpOp::Eq => ord.is_eq(),
        CmpOp::Ne => ord.is_ne(),
        CmpOp::Lt => ord.is_lt(),
        CmpOp::Le => ord.is_le(),
        CmpOp::Gt => ord.is_gt(),
        CmpOp::Ge => ord.is_ge(),
    })
}

/// Strong Kleene evaluation. Ill-typed sub-expressions are `Unknown`.
pub fn eval_condition(c: &Condition, env: &dyn Environment) -> Truth {
    c.eval(env)
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(c: &Condition, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match c {
                Condition::Cmp(..) | Condition::And(..) | Condition::Or(..) => write!(f, "({c})"),
                _ => write!(f, "{c}"),
            }
        }
        match self {
            Condition::Bool(b) => write!(f, "{b}"),
            Condition::Int(n) => write!(f, "{n}"),
            Condition::Var(v) => f.write_str(v),
            Condition::Cmp(op, a, b) => {
                operand(a, f)?;
                write!(f, " {} ", op.symbol())?;
                operand(b, f)
            }
            Condition::And(a, b) => {
                operand(a, f)?;
                f.write_str(" and ")?;
                operand(b, f)
            }
            Condition::Or(a, b) => {
                operand(a, f)?;
                f.write_str(" or ")?;
                operand(b, f)
            }
            Condition::Not(a) => {
                f.write_str("not ")?;
                match **a {
                    Condition::Bool(_) | Condition::Int(_) | Condition::Var(_) | Condition::Not(_) => {
                        write!(f, "{a}")
                    }
                    _ => write!(f, "({a})"),
                }
            }
        }
    }
}
