//! The concrete rule language: plain Datalog with stratified negation,
//! comparisons and exact rational arithmetic.

pub mod ast;
pub mod dataset;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod safety;
pub mod stratify;

pub use ast::{
    format_rational, rule_predicates, ArithOp, Atom, CmpOp, Expr, Literal, Predicate, Rule, RuleId,
    Term, Value,
};
pub use dataset::{render_fact, render_facts, ArityMismatch, Dataset, FactMap, Relation, Tuple};
pub use eval::{evaluate, EvalError, EvalOptions, Program, DEFAULT_DERIVATION_CAP};
pub use lexer::Pos;
pub use parser::{parse_facts, parse_rule, parse_rules, ParseError};
pub use safety::SafetyError;
pub use stratify::{stratify, Stratification, StratifyError};
