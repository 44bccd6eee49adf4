//! Inheritance by incremental modification: each module's rule set and
//! interfaces are `(parent ∪ added) \ removed`, applied from the root down.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::abstractness::concrete_predicates;
use super::hierarchy::{Hierarchy, HierarchyError};
use super::module::{ModuleId, RuleModule, Side};
use crate::lang::{stratify, Predicate, Rule, RuleId, StratifyError};
use crate::restrictions::Restriction;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("module {module} removes rule {rule}, which its parent does not have")]
    RemovedRuleNotInherited { module: ModuleId, rule: RuleId },
    #[error("module {module} removes {side} {predicate}, which its parent does not declare")]
    RemovedInterfaceNotInherited {
        module: ModuleId,
        side: Side,
        predicate: Predicate,
    },
    #[error("module {module} adds rule {rule}, but a rule with that id is already inherited")]
    DuplicateRuleId { module: ModuleId, rule: RuleId },
    #[error("module {module} has {predicate} as both input and output")]
    InterfaceOverlap {
        module: ModuleId,
        predicate: Predicate,
    },
    #[error("module {module}: {source}")]
    NotStratifiable {
        module: ModuleId,
        #[source]
        source: StratifyError,
    },
}

impl ResolveError {
    /// The module the error is attributed to, when there is one.
    pub fn module(&self) -> Option<&ModuleId> {
        match self {
            ResolveError::Hierarchy(HierarchyError::UnknownParent { module, .. }) => Some(module),
            ResolveError::Hierarchy(_) => None,
            ResolveError::RemovedRuleNotInherited { module, .. }
            | ResolveError::RemovedInterfaceNotInherited { module, .. }
            | ResolveError::DuplicateRuleId { module, .. }
            | ResolveError::InterfaceOverlap { module, .. }
            | ResolveError::NotStratifiable { module, .. } => Some(module),
        }
    }
}

/// A module with all inheritance expanded along its ancestor chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedModule {
    pub id: ModuleId,
    pub parent: Option<ModuleId>,
    pub rules: BTreeMap<RuleId, Rule>,
    pub inputs: BTreeSet<Predicate>,
    pub outputs: BTreeSet<Predicate>,
    pub restrictions: BTreeSet<Restriction>,
    /// `P_m`: inputs, outputs and every body and head predicate.
    pub predicates: BTreeSet<Predicate>,
    pub abstract_predicates: BTreeSet<Predicate>,
}

impl ResolvedModule {
    pub fn is_abstract(&self) -> bool {
        !self.abstract_predicates.is_empty()
    }

    pub fn is_concrete_predicate(&self, p: &Predicate) -> bool {
        self.predicates.contains(p) && !self.abstract_predicates.contains(p)
    }

    pub fn interface(&self, side: Side) -> &BTreeSet<Predicate> {
        match side {
            Side::Input => &self.inputs,
            Side::Output => &self.outputs,
        }
    }
}

#[derive(Default)]
struct Accumulated {
    rules: BTreeMap<RuleId, Rule>,
    inputs: BTreeSet<Predicate>,
    outputs: BTreeSet<Predicate>,
    restrictions: BTreeSet<Restriction>,
}

fn apply_delta(acc: &mut Accumulated, m: &RuleModule) -> Result<(), ResolveError> {
    for r in &m.rules_removed {
        if acc.rules.remove(r).is_none() {
            return Err(ResolveError::RemovedRuleNotInherited {
                module: m.id.clone(),
                rule: r.clone(),
            });
        }
    }
    for (id, rule) in &m.rules_added {
        if acc.rules.insert(id.clone(), rule.clone()).is_some() {
            return Err(ResolveError::DuplicateRuleId {
                module: m.id.clone(),
                rule: id.clone(),
            });
        }
    }
    for side in [Side::Input, Side::Output] {
        let set = match side {
            Side::Input => &mut acc.inputs,
            Side::Output => &mut acc.outputs,
        };
        for p in m.removed(side) {
            if !set.remove(p) {
                return Err(ResolveError::RemovedInterfaceNotInherited {
                    module: m.id.clone(),
                    side,
                    predicate: p.clone(),
                });
            }
        }
        set.extend(m.added(side).iter().cloned());
    }
    if let Some(p) = acc.inputs.intersection(&acc.outputs).next() {
        return Err(ResolveError::InterfaceOverlap {
            module: m.id.clone(),
            predicate: p.clone(),
        });
    }
    acc.restrictions
        .extend(m.restrictions_added.iter().cloned());
    Ok(())
}

/// Resolves module `id`: rules, interfaces and restrictions inherited down the
/// parent chain, then the predicate universe and abstract predicates.
pub fn resolve(h: &Hierarchy, id: &ModuleId) -> Result<ResolvedModule, ResolveError> {
    let chain = h.chain(id)?;
    let mut acc = Accumulated::default();
    for m in &chain {
        apply_delta(&mut acc, m)?;
    }
    let module = chain.last().expect("chain includes the module itself");

    stratify(acc.rules.values()).map_err(|source| ResolveError::NotStratifiable {
        module: module.id.clone(),
        source,
    })?;

    let mut predicates: BTreeSet<Predicate> = acc.inputs.union(&acc.outputs).cloned().collect();
    for r in acc.rules.values() {
        predicates.extend(r.body_predicates());
        predicates.extend(r.head_predicates());
    }
    let mut resolved = ResolvedModule {
        id: module.id.clone(),
        parent: module.parent.clone(),
        rules: acc.rules,
        inputs: acc.inputs,
        outputs: acc.outputs,
        restrictions: acc.restrictions,
        predicates,
        abstract_predicates: BTreeSet::new(),
    };
    let concrete = concrete_predicates(&resolved);
    resolved.abstract_predicates = resolved.predicates.difference(&concrete).cloned().collect();
    Ok(resolved)
}
