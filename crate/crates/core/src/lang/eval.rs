//! Stratified semi-naive bottom-up evaluation.
//!
//! Each stratum is saturated before the next one starts. Inside a stratum the
//! first round applies every rule to the full relations; later rounds only
//! re-fire a rule with one recursive body atom restricted to the facts that
//! were new in the previous round.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, Zero};
use thiserror::Error;

use super::ast::{ArithOp, CmpOp, Expr, Literal, Predicate, Rule, Term, Value};
use super::dataset::{Dataset, FactMap, Relation, Tuple};
use super::stratify::{stratify, StratifyError};

pub const DEFAULT_DERIVATION_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Maximum number of derived facts before evaluation aborts.
    pub derivation_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            derivation_cap: DEFAULT_DERIVATION_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Stratify(#[from] StratifyError),
    #[error("derivation cap of {cap} facts exceeded (runaway recursion?)")]
    DerivationCapExceeded { cap: usize },
}

#[derive(Clone, Debug)]
enum Arg {
    Const(Value),
    Var(usize),
    Any,
}

#[derive(Clone, Debug)]
enum CExpr {
    Const(Value),
    Var(usize),
    Neg(Box<CExpr>),
    Binary(ArithOp, Box<CExpr>, Box<CExpr>),
}

#[derive(Clone, Debug)]
enum Step {
    Scan { pred: Predicate, args: Vec<Arg> },
    Absent { pred: Predicate, args: Vec<Arg> },
    Compare { lhs: Arg, op: CmpOp, rhs: Arg },
    Assign { var: usize, expr: CExpr },
}

#[derive(Clone, Debug)]
struct CompiledRule {
    nvars: usize,
    steps: Vec<Step>,
    heads: Vec<(Predicate, Vec<Arg>)>,
}

struct VarTable<'a>(BTreeMap<&'a str, usize>);

impl<'a> VarTable<'a> {
    fn slot(&mut self, name: &'a str) -> usize {
        let next = self.0.len();
        *self.0.entry(name).or_insert(next)
    }

    fn arg(&mut self, t: &'a Term) -> Arg {
        match t {
            Term::Const(v) => Arg::Const(v.clone()),
            Term::Var(v) if v == "_" => Arg::Any,
            Term::Var(v) => Arg::Var(self.slot(v)),
        }
    }

    fn expr(&mut self, e: &'a Expr) -> CExpr {
        match e {
            Expr::Term(t) => match self.arg(t) {
                Arg::Const(v) => CExpr::Const(v),
                Arg::Var(i) => CExpr::Var(i),
                Arg::Any => unreachable!("rejected by safety check"),
            },
            Expr::Neg(e) => CExpr::Neg(Box::new(self.expr(e))),
            Expr::Binary(op, l, r) => {
                CExpr::Binary(*op, Box::new(self.expr(l)), Box::new(self.expr(r)))
            }
        }
    }
}

impl CompiledRule {
    fn compile(rule: &Rule) -> CompiledRule {
        let mut vars = VarTable(BTreeMap::new());
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        let mut pending: Vec<&Literal> = rule
            .body()
            .iter()
            .filter(|l| !matches!(l, Literal::Pos(_)))
            .collect();
        let mut steps = Vec::new();

        fn ready(lit: &Literal, bound: &BTreeSet<&str>) -> bool {
            match lit {
                Literal::Pos(_) => true,
                Literal::Neg(a) => a.variables().all(|v| bound.contains(v)),
                Literal::Compare { lhs, rhs, .. } => [lhs, rhs]
                    .iter()
                    .all(|t| !matches!(t, Term::Var(v) if !bound.contains(v.as_str()))),
                Literal::Assign { expr, .. } => expr.variables().iter().all(|v| bound.contains(v)),
            }
        }

        fn lower<'a>(lit: &'a Literal, vars: &mut VarTable<'a>) -> Step {
            match lit {
                Literal::Pos(a) => Step::Scan {
                    pred: a.predicate(),
                    args: a.args.iter().map(|t| vars.arg(t)).collect(),
                },
                Literal::Neg(a) => Step::Absent {
                    pred: a.predicate(),
                    args: a.args.iter().map(|t| vars.arg(t)).collect(),
                },
                Literal::Compare { lhs, op, rhs } => Step::Compare {
                    lhs: vars.arg(lhs),
                    op: *op,
                    rhs: vars.arg(rhs),
                },
                Literal::Assign { var, expr } => Step::Assign {
                    var: vars.slot(var),
                    expr: vars.expr(expr),
                },
            }
        }

        fn flush<'a>(
            bound: &mut BTreeSet<&'a str>,
            pending: &mut Vec<&'a Literal>,
            steps: &mut Vec<Step>,
            vars: &mut VarTable<'a>,
        ) {
            while let Some(i) = pending.iter().position(|l| ready(l, bound)) {
                let lit = pending.remove(i);
                steps.push(lower(lit, vars));
                if let Literal::Assign { var, .. } = lit {
                    bound.insert(var.as_str());
                }
            }
        }

        flush(&mut bound, &mut pending, &mut steps, &mut vars);
        for lit in rule.body() {
            if let Literal::Pos(a) = lit {
                steps.push(lower(lit, &mut vars));
                bound.extend(a.variables());
                flush(&mut bound, &mut pending, &mut steps, &mut vars);
            }
        }
        debug_assert!(pending.is_empty(), "safe rules leave nothing pending");

        let heads = rule
            .head()
            .iter()
            .map(|a| (a.predicate(), a.args.iter().map(|t| vars.arg(t)).collect()))
            .collect();
        CompiledRule {
            nvars: vars.0.len(),
            steps,
            heads,
        }
    }

    fn scans_of<'p>(&'p self, preds: &'p BTreeSet<Predicate>) -> impl Iterator<Item = usize> + 'p {
        self.steps
            .iter()
            .enumerate()
            .filter_map(move |(i, s)| match s {
                Step::Scan { pred, .. } if preds.contains(pred) => Some(i),
                _ => None,
            })
    }

    fn fire(
        &self,
        total: &FactMap,
        delta: Option<(usize, &Relation)>,
        out: &mut Vec<(Predicate, Tuple)>,
    ) {
        let mut env = vec![None; self.nvars];
        let ctx = FireCtx { total, delta };
        self.step(0, &mut env, &ctx, out);
    }

    fn step(
        &self,
        i: usize,
        env: &mut Vec<Option<Value>>,
        ctx: &FireCtx<'_>,
        out: &mut Vec<(Predicate, Tuple)>,
    ) {
        let Some(step) = self.steps.get(i) else {
            for (pred, args) in &self.heads {
                let tuple = args
                    .iter()
                    .map(|a| resolve(a, env).expect("head variables are bound").clone())
                    .collect();
                out.push((pred.clone(), tuple));
            }
            return;
        };
        match step {
            Step::Scan { pred, args } => {
                let rel = match ctx.delta {
                    Some((di, rel)) if di == i => Some(rel),
                    _ => ctx.total.get(pred),
                };
                let Some(rel) = rel else { return };
                let mut newly = Vec::with_capacity(args.len());
                for tuple in rel {
                    newly.clear();
                    let mut ok = true;
                    for (arg, val) in args.iter().zip(tuple) {
                        match arg {
                            Arg::Any => {}
                            Arg::Const(c) => {
                                if c != val {
                                    ok = false;
                                    break;
                                }
                            }
                            Arg::Var(v) => match &env[*v] {
                                Some(b) => {
                                    if b != val {
                                        ok = false;
                                        break;
                                    }
                                }
                                None => {
                                    env[*v] = Some(val.clone());
                                    newly.push(*v);
                                }
                            },
                        }
                    }
                    if ok {
                        self.step(i + 1, env, ctx, out);
                    }
                    for v in &newly {
                        env[*v] = None;
                    }
                }
            }
            Step::Absent { pred, args } => {
                let tuple: Tuple = args
                    .iter()
                    .map(|a| {
                        resolve(a, env)
                            .expect("negated variables are bound")
                            .clone()
                    })
                    .collect();
                let present = ctx.total.get(pred).is_some_and(|r| r.contains(&tuple));
                if !present {
                    self.step(i + 1, env, ctx, out);
                }
            }
            Step::Compare { lhs, op, rhs } => {
                let l = resolve(lhs, env).expect("comparison operands are bound");
                let r = resolve(rhs, env).expect("comparison operands are bound");
                if compare(l, *op, r) {
                    self.step(i + 1, env, ctx, out);
                }
            }
            Step::Assign { var, expr } => {
                let Some(value) = eval_expr(expr, env) else {
                    return;
                };
                match &env[*var] {
                    Some(existing) => {
                        if *existing == value {
                            self.step(i + 1, env, ctx, out);
                        }
                    }
                    None => {
                        env[*var] = Some(value);
                        self.step(i + 1, env, ctx, out);
                        env[*var] = None;
                    }
                }
            }
        }
    }
}

struct FireCtx<'a> {
    total: &'a FactMap,
    delta: Option<(usize, &'a Relation)>,
}

fn resolve<'a>(arg: &'a Arg, env: &'a [Option<Value>]) -> Option<&'a Value> {
    match arg {
        Arg::Const(c) => Some(c),
        Arg::Var(v) => env[*v].as_ref(),
        Arg::Any => None,
    }
}

/// Built-in comparison. Ordering comparisons between values of different
/// kinds (number, symbol, string) are false; `=` and `!=` are structural.
pub fn compare(l: &Value, op: CmpOp, r: &Value) -> bool {
    let ord = match (l, r) {
        (Value::Number(a), Value::Number(b)) => Some(a.cmp(b)),
        (Value::Symbol(a), Value::Symbol(b)) | (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        _ => None,
    };
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => ord == Some(Ordering::Less),
        CmpOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
        CmpOp::Gt => ord == Some(Ordering::Greater),
        CmpOp::Ge => matches!(ord, Some(Ordering::Greater | Ordering::Equal)),
    }
}

/// Arithmetic over exact rationals; `None` for non-numeric operands or division by zero.
fn eval_expr(e: &CExpr, env: &[Option<Value>]) -> Option<Value> {
    let num = |e: &CExpr| -> Option<BigRational> {
        match eval_expr(e, env)? {
            Value::Number(n) => Some(n),
            _ => None,
        }
    };
    match e {
        CExpr::Const(v) => Some(v.clone()),
        CExpr::Var(i) => env[*i].clone(),
        CExpr::Neg(inner) => Some(Value::Number(-num(inner)?)),
        CExpr::Binary(op, l, r) => {
            let (a, b) = (num(l)?, num(r)?);
            let n = match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div => {
                    if b.is_zero() {
                        return None;
                    }
                    a / b
                }
            };
            Some(Value::Number(n))
        }
    }
}

struct StratumPlan {
    preds: BTreeSet<Predicate>,
    rules: Vec<usize>,
}

/// A stratified, compiled rule set ready to run against datasets.
pub struct Program {
    rules: Vec<CompiledRule>,
    strata: Vec<StratumPlan>,
    heads: BTreeSet<Predicate>,
}

impl Program {
    pub fn new<'a>(rules: impl IntoIterator<Item = &'a Rule>) -> Result<Program, StratifyError> {
        let rules: Vec<&Rule> = rules.into_iter().collect();
        let strat = stratify(rules.iter().copied())?;
        let mut strata: Vec<StratumPlan> = strat
            .strata()
            .iter()
            .map(|preds| StratumPlan {
                preds: preds.clone(),
                rules: Vec::new(),
            })
            .collect();
        let mut heads = BTreeSet::new();
        let mut compiled = Vec::with_capacity(rules.len());
        for (i, rule) in rules.iter().enumerate() {
            let first_head = rule.head()[0].predicate();
            let s = strat
                .stratum_of(&first_head)
                .expect("head predicates are stratified");
            strata[s].rules.push(i);
            heads.extend(rule.head_predicates());
            compiled.push(CompiledRule::compile(rule));
        }
        Ok(Program {
            rules: compiled,
            strata,
            heads,
        })
    }

    /// Derived predicates (rule heads).
    pub fn head_predicates(&self) -> &BTreeSet<Predicate> {
        &self.heads
    }

    /// Computes the stratified least model and returns the extensions of every
    /// head predicate that is not part of the input schema.
    pub fn evaluate(&self, input: &Dataset, options: &EvalOptions) -> Result<FactMap, EvalError> {
        let mut total: FactMap = input.extensions().clone();
        total.insert(Predicate::truth(), BTreeSet::from([Vec::new()]));
        let mut derived = 0usize;
        let mut out = Vec::new();

        for stratum in &self.strata {
            if stratum.rules.is_empty() {
                continue;
            }
            out.clear();
            for &ri in &stratum.rules {
                self.rules[ri].fire(&total, None, &mut out);
            }
            let mut delta = absorb(&mut total, &mut out, &mut derived, options)?;

            while !delta.is_empty() {
                for &ri in &stratum.rules {
                    let rule = &self.rules[ri];
                    for si in rule.scans_of(&stratum.preds) {
                        let Step::Scan { pred, .. } = &rule.steps[si] else {
                            unreachable!()
                        };
                        if let Some(rel) = delta.get(pred) {
                            rule.fire(&total, Some((si, rel)), &mut out);
                        }
                    }
                }
                delta = absorb(&mut total, &mut out, &mut derived, options)?;
            }
        }

        let inputs = input.schema();
        Ok(self
            .heads
            .iter()
            .filter(|p| !inputs.contains(*p))
            .map(|p| (p.clone(), total.remove(p).unwrap_or_default()))
            .collect())
    }
}

/// Moves fresh facts from `out` into `total`, returning them as the next delta.
fn absorb(
    total: &mut FactMap,
    out: &mut Vec<(Predicate, Tuple)>,
    derived: &mut usize,
    options: &EvalOptions,
) -> Result<FactMap, EvalError> {
    let mut delta = FactMap::new();
    for (p, t) in out.drain(..) {
        let rel = total.entry(p.clone()).or_default();
        if !rel.contains(&t) {
            rel.insert(t.clone());
            delta.entry(p).or_default().insert(t);
            *derived += 1;
            if *derived > options.derivation_cap {
                return Err(EvalError::DerivationCapExceeded {
                    cap: options.derivation_cap,
                });
            }
        }
    }
    Ok(delta)
}

/// Stratifies, compiles and evaluates `rules` over `input`.
pub fn evaluate<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
    input: &Dataset,
    options: &EvalOptions,
) -> Result<FactMap, EvalError> {
    Program::new(rules)?.evaluate(input, options)
}
