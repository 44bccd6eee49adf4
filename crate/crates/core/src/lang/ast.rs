//! Terms, atoms, literals and rules of the rule language.

use std::collections::BTreeSet;
use std::fmt::{self, Display};

use num::{BigInt, BigRational, One, Signed, Zero};
use serde::{Serialize, Serializer};

use super::safety::{check_safety, SafetyError};

/// A relation symbol. Identity is the `(name, arity)` pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

impl Predicate {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Predicate {
            name: name.into(),
            arity,
        }
    }

    /// The reserved nullary predicate `true/0`, which always holds.
    pub fn truth() -> Self {
        Predicate::new("true", 0)
    }

    pub fn is_truth(&self) -> bool {
        self.arity == 0 && self.name == "true"
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

impl Serialize for Predicate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A ground constant. Numbers are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Number(BigRational),
    Symbol(String),
    Str(String),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Number(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn symbol(s: impl Into<String>) -> Self {
        Value::Symbol(s.into())
    }

    pub fn as_number(&self) -> Option<&BigRational> {
        match self {
            Value::Number(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(n) => f.write_str(&format_rational(n)),
            Value::Symbol(s) => f.write_str(s),
            Value::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// Renders a rational as an integer, a terminating decimal, or `n/d`.
pub fn format_rational(n: &BigRational) -> String {
    if n.is_integer() {
        return n.numer().to_string();
    }
    let sign = if n.is_negative() { "-" } else { "" };
    let abs = n.abs();
    let mut denom = abs.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return format!("{sign}{}/{}", abs.numer(), abs.denom());
    }
    let places = twos.max(fives) as usize;
    let scaled =
        (abs * BigRational::from_integer(BigInt::from(10).pow(places as u32))).to_integer();
    let digits = format!("{:0>width$}", scaled.to_string(), width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    format!("{sign}{int_part}.{frac_part}")
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// A variable; `_` is anonymous and never joins with other occurrences.
    Var(String),
    Const(Value),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, Term::Var(v) if v == "_")
    }

    fn named_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) if v != "_" => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => c.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub name: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            name: name.into(),
            args,
        }
    }

    pub fn predicate(&self) -> Predicate {
        Predicate::new(self.name.clone(), self.args.len())
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::named_var)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                a.fmt(f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            ArithOp::Add | ArithOp::Sub => 1,
            ArithOp::Mul | ArithOp::Div => 2,
        }
    }
}

/// Right-hand side of an arithmetic binding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Term(Term),
    Neg(Box<Expr>),
    Binary(ArithOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn binary(op: ArithOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Term(t) => out.extend(t.named_var()),
            Expr::Neg(e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub(crate) fn contains_anonymous(&self) -> bool {
        match self {
            Expr::Term(t) => t.is_anonymous(),
            Expr::Neg(e) => e.contains_anonymous(),
            Expr::Binary(_, l, r) => l.contains_anonymous() || r.contains_anonymous(),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8, right: bool) -> fmt::Result {
        match self {
            Expr::Term(t) => t.fmt(f),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3, false)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                let parens = p < parent || (right && p == parent);
                if parens {
                    f.write_str("(")?;
                }
                l.fmt_prec(f, p, false)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_prec(f, p, true)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0, false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Compare {
        lhs: Term,
        op: CmpOp,
        rhs: Term,
    },
    /// `Var = expr`: binds `Var` when unbound, otherwise tests equality.
    Assign {
        var: String,
        expr: Expr,
    },
}

impl Literal {
    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => a.fmt(f),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Literal::Assign { var, expr } => write!(f, "{var} = {expr}"),
        }
    }
}

/// Stable rule identity within a module's rule universe (`R0`, `R0.1`, `R9_1`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct RuleId(pub String);

impl RuleId {
    pub fn new(id: impl Into<String>) -> Self {
        RuleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RuleId {
    fn from(s: &str) -> Self {
        RuleId(s.to_string())
    }
}

/// A safe rule. Heads are a conjunction of one or more atoms sharing the body.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    id: RuleId,
    head: Vec<Atom>,
    body: Vec<Literal>,
}

impl Rule {
    pub fn new(id: RuleId, head: Vec<Atom>, body: Vec<Literal>) -> Result<Rule, SafetyError> {
        check_safety(&id, &head, &body)?;
        Ok(Rule { id, head, body })
    }

    pub fn id(&self) -> &RuleId {
        &self.id
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    pub fn body(&self) -> &[Literal] {
        &self.body
    }

    /// `B_r`: predicates of positive and negated body atoms.
    pub fn body_predicates(&self) -> BTreeSet<Predicate> {
        self.body
            .iter()
            .filter_map(Literal::atom)
            .map(Atom::predicate)
            .collect()
    }

    /// `H_r`: predicates of the head atoms.
    pub fn head_predicates(&self) -> BTreeSet<Predicate> {
        self.head.iter().map(Atom::predicate).collect()
    }

    pub fn with_id(&self, id: RuleId) -> Rule {
        Rule { id, ..self.clone() }
    }
}

/// `(B_r, H_r)` for a rule.
pub fn rule_predicates(rule: &Rule) -> (BTreeSet<Predicate>, BTreeSet<Predicate>) {
    (rule.body_predicates(), rule.head_predicates())
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.id)?;
        for (i, h) in self.head.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            h.fmt(f)?;
        }
        f.write_str(" :- ")?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            l.fmt(f)?;
        }
        f.write_str(".")
    }
}
