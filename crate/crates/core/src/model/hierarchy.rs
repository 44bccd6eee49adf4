use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::module::{ModuleId, RuleModule, Side};
use crate::lang::{Predicate, RuleId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Error)]
pub enum HierarchyError {
    #[error("module {0} is declared more than once")]
    DuplicateModule(ModuleId),
    #[error("unknown module {0}")]
    UnknownModule(ModuleId),
    #[error("module {module} extends unknown module {parent}")]
    UnknownParent { module: ModuleId, parent: ModuleId },
    #[error("inheritance cycle: {}", render_path(.path))]
    CycleDetected { path: Vec<ModuleId> },
    #[error("module {module} both adds and removes rule {rule}")]
    AddRemoveConflict { module: ModuleId, rule: RuleId },
    #[error("module {module} both adds and removes {side} {predicate}")]
    InterfaceAddRemoveConflict {
        module: ModuleId,
        side: Side,
        predicate: Predicate,
    },
    #[error("root module {module} cannot remove inherited rules or interface predicates")]
    RemovalInRoot { module: ModuleId },
}

fn render_path(path: &[ModuleId]) -> String {
    path.iter()
        .map(ModuleId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Modules linked by parent pointers; valid hierarchies form a forest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Hierarchy {
    modules: BTreeMap<ModuleId, RuleModule>,
}

impl Hierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, module: RuleModule) -> Result<(), HierarchyError> {
        if self.modules.contains_key(&module.id) {
            return Err(HierarchyError::DuplicateModule(module.id));
        }
        self.modules.insert(module.id.clone(), module);
        Ok(())
    }

    /// Inserts or replaces a module.
    pub fn upsert(&mut self, module: RuleModule) {
        self.modules.insert(module.id.clone(), module);
    }

    pub fn get(&self, id: &ModuleId) -> Option<&RuleModule> {
        self.modules.get(id)
    }

    pub fn get_mut(&mut self, id: &ModuleId) -> Option<&mut RuleModule> {
        self.modules.get_mut(id)
    }

    pub fn modules(&self) -> impl Iterator<Item = &RuleModule> {
        self.modules.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ModuleId> {
        self.modules.keys()
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn parent_of(&self, id: &ModuleId) -> Option<&ModuleId> {
        self.modules.get(id).and_then(|m| m.parent.as_ref())
    }

    pub fn children_of<'a>(&'a self, id: &'a ModuleId) -> impl Iterator<Item = &'a ModuleId> + 'a {
        self.modules
            .values()
            .filter(move |m| m.parent.as_ref() == Some(id))
            .map(|m| &m.id)
    }

    /// All transitive children of `id`, in breadth-first order.
    pub fn descendants(&self, id: &ModuleId) -> Vec<ModuleId> {
        let mut out = Vec::new();
        let mut frontier = vec![id.clone()];
        let mut seen = BTreeSet::from([id.clone()]);
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for m in &frontier {
                for c in self.children_of(m) {
                    if seen.insert(c.clone()) {
                        out.push(c.clone());
                        next.push(c.clone());
                    }
                }
            }
            frontier = next;
        }
        out
    }

    /// `(child, parent)` pairs for every inheritance edge.
    pub fn edges(&self) -> Vec<(ModuleId, ModuleId)> {
        self.modules
            .values()
            .filter_map(|m| m.parent.clone().map(|p| (m.id.clone(), p)))
            .collect()
    }

    pub fn is_leaf(&self, id: &ModuleId) -> bool {
        self.children_of(id).next().is_none()
    }

    /// The modules from the root down to `id`, inclusive.
    pub fn chain(&self, id: &ModuleId) -> Result<Vec<&RuleModule>, HierarchyError> {
        let mut chain = Vec::new();
        let mut seen: Vec<ModuleId> = Vec::new();
        let mut cur = self
            .modules
            .get(id)
            .ok_or_else(|| HierarchyError::UnknownModule(id.clone()))?;
        loop {
            if let Some(at) = seen.iter().position(|s| *s == cur.id) {
                let mut path: Vec<ModuleId> = seen[at..].to_vec();
                path.push(cur.id.clone());
                return Err(HierarchyError::CycleDetected { path });
            }
            seen.push(cur.id.clone());
            chain.push(cur);
            match &cur.parent {
                None => break,
                Some(p) => {
                    cur = self
                        .modules
                        .get(p)
                        .ok_or_else(|| HierarchyError::UnknownParent {
                            module: cur.id.clone(),
                            parent: p.clone(),
                        })?;
                }
            }
        }
        chain.reverse();
        Ok(chain)
    }

    /// Checks the forest property, parent links and per-module delta invariants.
    /// Every problem is reported; nothing fails fast.
    pub fn validate(&self) -> Result<(), Vec<HierarchyError>> {
        let mut errors = BTreeSet::new();
        for m in self.modules.values() {
            if let Some(p) = &m.parent {
                if !self.modules.contains_key(p) {
                    errors.insert(HierarchyError::UnknownParent {
                        module: m.id.clone(),
                        parent: p.clone(),
                    });
                }
            } else if !m.rules_removed.is_empty()
                || !m.inputs_removed.is_empty()
                || !m.outputs_removed.is_empty()
            {
                errors.insert(HierarchyError::RemovalInRoot {
                    module: m.id.clone(),
                });
            }
            for rule in m
                .rules_added
                .keys()
                .filter(|r| m.rules_removed.contains(*r))
            {
                errors.insert(HierarchyError::AddRemoveConflict {
                    module: m.id.clone(),
                    rule: rule.clone(),
                });
            }
            for side in [Side::Input, Side::Output] {
                for p in m.added(side).intersection(m.removed(side)) {
                    errors.insert(HierarchyError::InterfaceAddRemoveConflict {
                        module: m.id.clone(),
                        side,
                        predicate: p.clone(),
                    });
                }
            }
            if let Err(HierarchyError::CycleDetected { path }) = self.chain(&m.id) {
                errors.insert(HierarchyError::CycleDetected {
                    path: canonical_cycle(path),
                });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors.into_iter().collect())
        }
    }
}

/// Rotates a closed cycle path so it starts at its smallest id.
fn canonical_cycle(mut path: Vec<ModuleId>) -> Vec<ModuleId> {
    path.pop();
    let start = path
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .map_or(0, |(i, _)| i);
    path.rotate_left(start);
    let first = path[0].clone();
    path.push(first);
    path
}
