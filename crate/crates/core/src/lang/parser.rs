//! Recursive-descent parser for rules and fact files.
//!
//! ```text
//! rule    := ID ':' atom (',' atom)* ':-' literal (',' literal)* '.'
//! literal := atom | 'not' atom | term CMP term | VAR '=' expr
//! expr    := mul (('+' | '-') mul)*
//! mul     := unary (('*' | '/') unary)*
//! unary   := '-' unary | '(' expr ')' | term
//! ```

use num::BigRational;
use thiserror::Error;

use super::ast::{ArithOp, Atom, CmpOp, Expr, Literal, Predicate, Rule, RuleId, Term, Value};
use super::dataset::{Dataset, Tuple};
use super::lexer::{tokenize, Pos, Tok, Token};
use super::safety::SafetyError;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: {source}")]
    Unsafe {
        pos: Pos,
        #[source]
        source: SafetyError,
    },
}

impl ParseError {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            message: message.into(),
        }
    }

    pub fn position(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Unsafe { pos, .. } => *pos,
        }
    }

    /// The message without the position prefix.
    pub fn message(&self) -> String {
        match self {
            ParseError::Syntax { message, .. } => message.clone(),
            ParseError::Unsafe { source, .. } => source.to_string(),
        }
    }
}

pub(crate) fn is_variable_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

/// A position-tracking view over a token stream.
pub struct Cursor {
    toks: Vec<Token>,
    at: usize,
}

impl Cursor {
    pub fn new(src: &str) -> Result<Cursor, ParseError> {
        Ok(Cursor {
            toks: tokenize(src)?,
            at: 0,
        })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.at + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::syntax(self.pos(), message)
    }

    pub fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!("expected {expected}, found {}", self.peek()))
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<Pos, ParseError> {
        if self.is_punct(p) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        if self.is_keyword(kw) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().pos)),
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_lower_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_variable_name(&s) => Ok((s, self.bump().pos)),
            _ => Err(self.unexpected(what)),
        }
    }

    /// `name/arity`
    pub fn parse_predicate_ref(&mut self) -> Result<(Predicate, Pos), ParseError> {
        let (name, pos) = self.expect_lower_ident("predicate name")?;
        self.expect_punct("/")?;
        let arity = match self.peek().clone() {
            Tok::Number(n) if n.is_integer() && n >= BigRational::from_integer(0.into()) => {
                self.bump();
                n.to_integer()
                    .to_string()
                    .parse::<usize>()
                    .map_err(|_| ParseError::syntax(pos, "arity out of range"))?
            }
            _ => return Err(self.unexpected("arity")),
        };
        Ok((Predicate::new(name, arity), pos))
    }

    pub fn parse_rule(&mut self) -> Result<(Rule, Pos), ParseError> {
        let (id, pos) = self.expect_ident("rule identifier")?;
        self.expect_punct(":")?;
        let mut head = vec![self.parse_atom()?];
        while self.eat_punct(",") {
            head.push(self.parse_atom()?);
        }
        self.expect_punct(":-")?;
        let mut body = vec![self.parse_literal()?];
        while self.eat_punct(",") {
            body.push(self.parse_literal()?);
        }
        self.expect_punct(".")?;
        let rule = Rule::new(RuleId(id), head, body)
            .map_err(|source| ParseError::Unsafe { pos, source })?;
        Ok((rule, pos))
    }

    fn parse_atom(&mut self) -> Result<Atom, ParseError> {
        let (name, _) = self.expect_lower_ident("predicate name")?;
        if name == "not" {
            return Err(self.error("`not` cannot be used as a predicate name"));
        }
        let mut args = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                args.push(self.parse_term()?);
                while self.eat_punct(",") {
                    args.push(self.parse_term()?);
                }
            }
            self.expect_punct(")")?;
        }
        Ok(Atom::new(name, args))
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                if is_variable_name(&s) {
                    Ok(Term::Var(s))
                } else {
                    Ok(Term::Const(Value::Symbol(s)))
                }
            }
            Tok::Number(n) => {
                self.bump();
                Ok(Term::Const(Value::Number(n)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::Const(Value::Str(s)))
            }
            Tok::Punct("-") => match self.peek_at(1).clone() {
                Tok::Number(n) => {
                    self.bump();
                    self.bump();
                    Ok(Term::Const(Value::Number(-n)))
                }
                _ => Err(self.unexpected("term")),
            },
            _ => Err(self.unexpected("term")),
        }
    }

    fn peek_cmp(&self, n: usize) -> Option<CmpOp> {
        match self.peek_at(n) {
            Tok::Punct("<") => Some(CmpOp::Lt),
            Tok::Punct("<=") => Some(CmpOp::Le),
            Tok::Punct("=") => Some(CmpOp::Eq),
            Tok::Punct("!=") => Some(CmpOp::Ne),
            Tok::Punct(">=") => Some(CmpOp::Ge),
            Tok::Punct(">") => Some(CmpOp::Gt),
            _ => None,
        }
    }

    fn parse_literal(&mut self) -> Result<Literal, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if s == "not" && matches!(self.peek_at(1), Tok::Ident(_)) {
                self.bump();
                return Ok(Literal::Neg(self.parse_atom()?));
            }
            if !is_variable_name(s) && self.peek_cmp(1).is_none() {
                return Ok(Literal::Pos(self.parse_atom()?));
            }
            if is_variable_name(s) && self.peek_cmp(1) == Some(CmpOp::Eq) {
                let var = s.clone();
                self.bump();
                self.bump();
                return Ok(Literal::Assign {
                    var,
                    expr: self.parse_expr()?,
                });
            }
        }
        let lhs = self.parse_term()?;
        let op = self
            .peek_cmp(0)
            .ok_or_else(|| self.unexpected("comparison operator"))?;
        self.bump();
        let rhs = self.parse_term()?;
        Ok(Literal::Compare { lhs, op, rhs })
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul()?;
        loop {
            let op = if self.is_punct("+") {
                ArithOp::Add
            } else if self.is_punct("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.parse_mul()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn parse_mul(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = if self.is_punct("*") {
                ArithOp::Mul
            } else if self.is_punct("/") {
                ArithOp::Div
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_punct("-") {
            if let Tok::Number(n) = self.peek_at(1).clone() {
                self.bump();
                self.bump();
                return Ok(Expr::Term(Term::Const(Value::Number(-n))));
            }
            self.bump();
            return Ok(Expr::Neg(Box::new(self.parse_unary()?)));
        }
        if self.eat_punct("(") {
            let e = self.parse_expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        Ok(Expr::Term(self.parse_term()?))
    }

    /// A ground atom terminated by `.`.
    pub fn parse_fact(&mut self) -> Result<(Atom, Pos), ParseError> {
        let pos = self.pos();
        let atom = self.parse_atom()?;
        if atom.args.iter().any(|t| matches!(t, Term::Var(_))) {
            return Err(ParseError::syntax(
                pos,
                "facts must be ground (no variables)",
            ));
        }
        self.expect_punct(".")?;
        Ok((atom, pos))
    }
}

/// Parses exactly one rule statement.
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut c = Cursor::new(text)?;
    let (rule, _) = c.parse_rule()?;
    if !c.at_eof() {
        return Err(c.unexpected("end of input"));
    }
    Ok(rule)
}

/// Parses a sequence of rule statements.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, ParseError> {
    let mut c = Cursor::new(text)?;
    let mut out = Vec::new();
    while !c.at_eof() {
        out.push(c.parse_rule()?.0);
    }
    Ok(out)
}

/// Parses a fact file: `pred(c1, ..., cn).` lines and `schema pred/n.` declarations,
/// the latter adding a (possibly empty) extension to the dataset's schema.
pub fn parse_facts(name: &str, text: &str) -> Result<Dataset, ParseError> {
    let mut c = Cursor::new(text)?;
    let mut ds = Dataset::new(name);
    let mut arities: std::collections::BTreeMap<String, usize> = Default::default();
    let mut check_arity = |p: &Predicate, pos: Pos| match arities.get(&p.name) {
        Some(&a) if a != p.arity => Err(ParseError::syntax(
            pos,
            format!(
                "{} used with arity {} but earlier with arity {a}",
                p.name, p.arity
            ),
        )),
        _ => {
            arities.insert(p.name.clone(), p.arity);
            Ok(())
        }
    };
    while !c.at_eof() {
        if c.is_keyword("schema")
            && matches!(c.peek_at(1), Tok::Ident(_))
            && matches!(c.peek_at(2), Tok::Punct("/"))
        {
            c.bump();
            let (p, pos) = c.parse_predicate_ref()?;
            c.expect_punct(".")?;
            check_arity(&p, pos)?;
            ds.declare(p);
            continue;
        }
        let (atom, pos) = c.parse_fact()?;
        let p = atom.predicate();
        check_arity(&p, pos)?;
        let tuple: Tuple = atom
            .args
            .into_iter()
            .map(|t| match t {
                Term::Const(v) => v,
                Term::Var(_) => unreachable!("checked ground"),
            })
            .collect();
        ds.insert(p, tuple)
            .map_err(|e| ParseError::syntax(pos, e.to_string()))?;
    }
    Ok(ds)
}
