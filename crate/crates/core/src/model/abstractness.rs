//! Concreteness: a predicate is concrete when it is an input, the premise
//! `true/0`, or every predicate it depends on is concrete and it depends on at
//! least one. Computed as a greatest fixpoint so recursion through concrete
//! predicates stays concrete.

use std::collections::{BTreeMap, BTreeSet};

use super::resolve::ResolvedModule;
use crate::lang::Predicate;

/// Dependency edges `(head, body)` over all rules. A rule whose body has no
/// atoms depends on `true/0`.
pub fn dependency_graph(rm: &ResolvedModule) -> BTreeSet<(Predicate, Predicate)> {
    let mut edges = BTreeSet::new();
    for rule in rm.rules.values() {
        let mut body = rule.body_predicates();
        if body.is_empty() {
            body.insert(Predicate::truth());
        }
        for h in rule.head_predicates() {
            for b in &body {
                edges.insert((h.clone(), b.clone()));
            }
        }
    }
    edges
}

pub fn concrete_predicates(rm: &ResolvedModule) -> BTreeSet<Predicate> {
    let mut deps: BTreeMap<Predicate, BTreeSet<Predicate>> = BTreeMap::new();
    for (h, b) in dependency_graph(rm) {
        deps.entry(h).or_default().insert(b);
    }
    let grounded = |p: &Predicate| p.is_truth() || rm.inputs.contains(p);

    let mut concrete: BTreeSet<Predicate> = rm.predicates.clone();
    concrete.insert(Predicate::truth());
    loop {
        let next: BTreeSet<Predicate> = concrete
            .iter()
            .filter(|p| {
                grounded(p)
                    || deps
                        .get(*p)
                        .is_some_and(|d| d.iter().all(|q| concrete.contains(q)))
            })
            .cloned()
            .collect();
        if next.len() == concrete.len() {
            break;
        }
        concrete = next;
    }
    concrete.retain(|p| rm.predicates.contains(p));
    concrete
}
