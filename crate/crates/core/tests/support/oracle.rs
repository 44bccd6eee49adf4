//! Naive reference evaluator. Shares only the AST with the library: levels,
//! matching, comparison and arithmetic are reimplemented from scratch and kept
//! deliberately simple.

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, Zero};
use rmod::lang::{ArithOp, CmpOp, Expr, FactMap, Literal, Predicate, Rule, Term, Value};

type Env = BTreeMap<String, Value>;

/// Stratum levels, or `None` when negation is recursive.
pub fn levels(rules: &[Rule]) -> Option<BTreeMap<Predicate, usize>> {
    let mut level: BTreeMap<Predicate, usize> = BTreeMap::new();
    for r in rules {
        for a in r.head() {
            level.entry(a.predicate()).or_insert(0);
        }
        for l in r.body() {
            if let Some(a) = l.atom() {
                level.entry(a.predicate()).or_insert(0);
            }
        }
    }
    let bound = level.len() + 1;
    loop {
        let mut changed = false;
        for r in rules {
            let mut need = 0;
            for l in r.body() {
                match l {
                    Literal::Pos(a) => need = need.max(level[&a.predicate()]),
                    Literal::Neg(a) => need = need.max(level[&a.predicate()] + 1),
                    _ => {}
                }
            }
            for a in r.head() {
                need = need.max(level[&a.predicate()]);
            }
            for a in r.head() {
                let l = level.get_mut(&a.predicate()).unwrap();
                if *l < need {
                    *l = need;
                    changed = true;
                }
            }
        }
        if level.values().any(|&l| l > bound) {
            return None;
        }
        if !changed {
            return Some(level);
        }
    }
}

fn cmp_values(l: &Value, op: CmpOp, r: &Value) -> bool {
    use std::cmp::Ordering::*;
    let ord = match (l, r) {
        (Value::Number(a), Value::Number(b)) => Some(a.cmp(b)),
        (Value::Symbol(a), Value::Symbol(b)) => Some(a.cmp(b)),
        (Value::Str(a), Value::Str(b)) => Some(a.cmp(b)),
        _ => None,
    };
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => ord == Some(Less),
        CmpOp::Le => ord == Some(Less) || ord == Some(Equal),
        CmpOp::Gt => ord == Some(Greater),
        CmpOp::Ge => ord == Some(Greater) || ord == Some(Equal),
    }
}

fn term_value(t: &Term, env: &Env) -> Option<Value> {
    match t {
        Term::Const(v) => Some(v.clone()),
        Term::Var(v) => env.get(v).cloned(),
    }
}

fn arith(e: &Expr, env: &Env) -> Option<BigRational> {
    match e {
        Expr::Term(t) => match term_value(t, env)? {
            Value::Number(n) => Some(n),
            _ => None,
        },
        Expr::Neg(x) => Some(-arith(x, env)?),
        Expr::Binary(op, a, b) => {
            let (a, b) = (arith(a, env)?, arith(b, env)?);
            match op {
                ArithOp::Add => Some(a + b),
                ArithOp::Sub => Some(a - b),
                ArithOp::Mul => Some(a * b),
                ArithOp::Div if b.is_zero() => None,
                ArithOp::Div => Some(a / b),
            }
        }
    }
}

fn expr_value(e: &Expr, env: &Env) -> Option<Value> {
    match e {
        Expr::Term(t) => term_value(t, env),
        _ => arith(e, env).map(Value::Number),
    }
}

fn expr_ready(e: &Expr, env: &Env) -> bool {
    e.variables().iter().all(|v| env.contains_key(*v))
}

fn term_ready(t: &Term, env: &Env) -> bool {
    match t {
        Term::Var(v) => v == "_" || env.contains_key(v),
        Term::Const(_) => true,
    }
}

/// Extends `env` by matching `args` against `tuple`.
fn unify(args: &[Term], tuple: &[Value], env: &Env) -> Option<Env> {
    let mut env = env.clone();
    for (t, v) in args.iter().zip(tuple) {
        match t {
            Term::Const(c) => {
                if c != v {
                    return None;
                }
            }
            Term::Var(x) if x == "_" => {}
            Term::Var(x) => match env.get(x) {
                Some(bound) if bound != v => return None,
                Some(_) => {}
                None => {
                    env.insert(x.clone(), v.clone());
                }
            },
        }
    }
    Some(env)
}

fn ground(args: &[Term], env: &Env) -> Vec<Value> {
    args.iter()
        .map(|t| term_value(t, env).expect("bound"))
        .collect()
}

/// All environments satisfying the body: positive atoms joined left to right,
/// then the remaining literals applied as soon as their variables are bound.
fn bindings(rule: &Rule, db: &FactMap) -> Vec<Env> {
    let empty = BTreeSet::new();
    let mut envs = vec![Env::new()];
    for l in rule.body() {
        if let Literal::Pos(a) = l {
            let rel = db.get(&a.predicate()).unwrap_or(&empty);
            envs = envs
                .iter()
                .flat_map(|e| {
                    rel.iter()
                        .filter_map(|t| unify(&a.args, t, e))
                        .collect::<Vec<_>>()
                })
                .collect();
        }
    }
    let rest: Vec<&Literal> = rule
        .body()
        .iter()
        .filter(|l| !matches!(l, Literal::Pos(_)))
        .collect();
    envs.into_iter()
        .filter_map(|mut env| {
            let mut pending = rest.clone();
            while !pending.is_empty() {
                let idx = pending.iter().position(|l| match l {
                    Literal::Neg(a) => a.args.iter().all(|t| term_ready(t, &env)),
                    Literal::Compare { lhs, rhs, .. } => {
                        term_ready(lhs, &env) && term_ready(rhs, &env)
                    }
                    Literal::Assign { expr, .. } => expr_ready(expr, &env),
                    Literal::Pos(_) => unreachable!(),
                })?;
                let l = pending.remove(idx);
                let ok = match l {
                    Literal::Neg(a) => !db
                        .get(&a.predicate())
                        .unwrap_or(&empty)
                        .iter()
                        .any(|t| unify(&a.args, t, &env).is_some()),
                    Literal::Compare { lhs, op, rhs } => {
                        cmp_values(&term_value(lhs, &env)?, *op, &term_value(rhs, &env)?)
                    }
                    Literal::Assign { var, expr } => {
                        let v = expr_value(expr, &env)?;
                        match env.get(var) {
                            Some(b) => *b == v,
                            None => {
                                env.insert(var.clone(), v);
                                true
                            }
                        }
                    }
                    Literal::Pos(_) => unreachable!(),
                };
                if !ok {
                    return None;
                }
            }
            Some(env)
        })
        .collect()
}

/// Naive stratified fixpoint. Returns every relation, inputs included, or
/// `None` when the rules are not stratifiable.
pub fn evaluate(rules: &[Rule], input: &FactMap) -> Option<FactMap> {
    let level = levels(rules)?;
    let mut db = input.clone();
    db.insert(Predicate::truth(), BTreeSet::from([vec![]]));
    let top = level.values().copied().max().unwrap_or(0);
    for s in 0..=top {
        let stratum: Vec<&Rule> = rules
            .iter()
            .filter(|r| level[&r.head()[0].predicate()] == s)
            .collect();
        loop {
            let mut new = Vec::new();
            for r in &stratum {
                for env in bindings(r, &db) {
                    for a in r.head() {
                        let fact = ground(&a.args, &env);
                        if !db
                            .get(&a.predicate())
                            .is_some_and(|rel| rel.contains(&fact))
                        {
                            new.push((a.predicate(), fact));
                        }
                    }
                }
            }
            if new.is_empty() {
                break;
            }
            for (p, t) in new {
                db.entry(p).or_default().insert(t);
            }
        }
    }
    Some(db)
}

/// Abstract predicates as a least fixpoint: seeded with predicates that are not
/// inputs, not `true/0` and have no defining rule, then spread to every
/// predicate that depends on an abstract one.
pub fn abstract_predicates(
    rules: &[Rule],
    inputs: &BTreeSet<Predicate>,
    outputs: &BTreeSet<Predicate>,
) -> BTreeSet<Predicate> {
    let mut all: BTreeSet<Predicate> = inputs.union(outputs).cloned().collect();
    let mut deps: BTreeMap<Predicate, BTreeSet<Predicate>> = BTreeMap::new();
    for r in rules {
        let body: BTreeSet<Predicate> = r
            .body()
            .iter()
            .filter_map(|l| l.atom().map(|a| a.predicate()))
            .collect();
        for a in r.head() {
            all.insert(a.predicate());
            let d = deps.entry(a.predicate()).or_default();
            d.extend(body.iter().cloned());
            if body.is_empty() {
                d.insert(Predicate::truth());
            }
        }
        all.extend(body);
    }
    let mut abs: BTreeSet<Predicate> = all
        .iter()
        .filter(|p| !p.is_truth() && !inputs.contains(*p) && !deps.contains_key(*p))
        .cloned()
        .collect();
    loop {
        let more: Vec<Predicate> = all
            .iter()
            .filter(|p| !abs.contains(*p) && !inputs.contains(*p) && !p.is_truth())
            .filter(|p| {
                deps.get(*p)
                    .is_some_and(|d| d.iter().any(|q| abs.contains(q)))
            })
            .cloned()
            .collect();
        if more.is_empty() {
            return abs;
        }
        abs.extend(more);
    }
}
