use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::{Atom, Literal, RuleId, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SafetyError {
    #[error("rule {rule}: variable {variable} in {context} is not bound by a positive body atom")]
    UnboundVariable {
        rule: RuleId,
        variable: String,
        context: &'static str,
    },
    #[error("rule {rule}: anonymous variable `_` is only allowed in positive body atoms")]
    AnonymousOutsidePositiveAtom { rule: RuleId },
    #[error("rule {rule}: reserved predicate true/0 cannot appear in a head")]
    ReservedHead { rule: RuleId },
    #[error("rule {rule}: a rule needs at least one head atom")]
    EmptyHead { rule: RuleId },
}

/// Variables bound by positive atoms and by arithmetic bindings whose inputs are bound.
pub(crate) fn bound_variables(body: &[Literal]) -> BTreeSet<&str> {
    let mut bound: BTreeSet<&str> = body
        .iter()
        .filter_map(|l| match l {
            Literal::Pos(a) => Some(a.variables()),
            _ => None,
        })
        .flatten()
        .collect();
    loop {
        let mut changed = false;
        for lit in body {
            if let Literal::Assign { var, expr } = lit {
                if !bound.contains(var.as_str())
                    && expr.variables().iter().all(|v| bound.contains(v))
                {
                    bound.insert(var.as_str());
                    changed = true;
                }
            }
        }
        if !changed {
            return bound;
        }
    }
}

pub(crate) fn check_safety(
    id: &RuleId,
    head: &[Atom],
    body: &[Literal],
) -> Result<(), SafetyError> {
    if head.is_empty() {
        return Err(SafetyError::EmptyHead { rule: id.clone() });
    }
    if head.iter().any(|a| a.predicate().is_truth()) {
        return Err(SafetyError::ReservedHead { rule: id.clone() });
    }
    let anonymous = |t: &Term| t.is_anonymous();
    let misplaced_anonymous = head.iter().any(|a| a.args.iter().any(anonymous))
        || body.iter().any(|l| match l {
            Literal::Pos(_) => false,
            Literal::Neg(a) => a.args.iter().any(anonymous),
            Literal::Compare { lhs, rhs, .. } => anonymous(lhs) || anonymous(rhs),
            Literal::Assign { var, expr } => var == "_" || expr.contains_anonymous(),
        });
    if misplaced_anonymous {
        return Err(SafetyError::AnonymousOutsidePositiveAtom { rule: id.clone() });
    }

    let bound = bound_variables(body);
    let unbound = |variable: &str, context: &'static str| SafetyError::UnboundVariable {
        rule: id.clone(),
        variable: variable.to_string(),
        context,
    };
    for atom in head {
        if let Some(v) = atom.variables().find(|v| !bound.contains(v)) {
            return Err(unbound(v, "the head"));
        }
    }
    for lit in body {
        match lit {
            Literal::Pos(_) => {}
            Literal::Neg(a) => {
                if let Some(v) = a.variables().find(|v| !bound.contains(v)) {
                    return Err(unbound(v, "a negated atom"));
                }
            }
            Literal::Compare { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::Var(v) = t {
                        if !bound.contains(v.as_str()) {
                            return Err(unbound(v, "a comparison"));
                        }
                    }
                }
            }
            Literal::Assign { expr, .. } => {
                if let Some(v) = expr.variables().into_iter().find(|v| !bound.contains(v)) {
                    return Err(unbound(v, "an arithmetic binding"));
                }
            }
        }
    }
    Ok(())
}
