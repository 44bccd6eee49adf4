use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::behavior::ChangeClass;
use crate::lang::{Predicate, Rule, RuleId};
use crate::restrictions::Restriction;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct ModuleId(pub String);

impl ModuleId {
    pub fn new(id: impl Into<String>) -> Self {
        ModuleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ModuleId {
    fn from(s: &str) -> Self {
        ModuleId(s.to_string())
    }
}

/// Which interface of a module a predicate belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Input => "input",
            Side::Output => "output",
        })
    }
}

/// A module as declared: its parent link plus the deltas it applies to the
/// parent's resolved rules, interfaces and restrictions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleModule {
    pub id: ModuleId,
    pub parent: Option<ModuleId>,
    pub rules_added: BTreeMap<RuleId, Rule>,
    pub rules_removed: BTreeSet<RuleId>,
    pub inputs_added: BTreeSet<Predicate>,
    pub inputs_removed: BTreeSet<Predicate>,
    pub outputs_added: BTreeSet<Predicate>,
    pub outputs_removed: BTreeSet<Predicate>,
    pub restrictions_added: BTreeSet<Restriction>,
    /// Behavioral modifications the author declares as intended. Recorded and
    /// reported, not enforced.
    pub declared_changes: BTreeMap<Predicate, ChangeClass>,
}

impl RuleModule {
    pub fn new(id: impl Into<String>, parent: Option<&str>) -> Self {
        RuleModule {
            id: ModuleId::new(id),
            parent: parent.map(ModuleId::from),
            ..Default::default()
        }
    }

    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }

    /// Adds a rule, returning `false` if one with the same id was already added.
    pub fn add_rule(&mut self, rule: Rule) -> bool {
        match self.rules_added.entry(rule.id().clone()) {
            std::collections::btree_map::Entry::Occupied(_) => false,
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(rule);
                true
            }
        }
    }

    pub fn added(&self, side: Side) -> &BTreeSet<Predicate> {
        match side {
            Side::Input => &self.inputs_added,
            Side::Output => &self.outputs_added,
        }
    }

    pub fn removed(&self, side: Side) -> &BTreeSet<Predicate> {
        match side {
            Side::Input => &self.inputs_removed,
            Side::Output => &self.outputs_removed,
        }
    }

    pub fn added_mut(&mut self, side: Side) -> &mut BTreeSet<Predicate> {
        match side {
            Side::Input => &mut self.inputs_added,
            Side::Output => &mut self.outputs_added,
        }
    }

    pub fn removed_mut(&mut self, side: Side) -> &mut BTreeSet<Predicate> {
        match side {
            Side::Input => &mut self.inputs_removed,
            Side::Output => &mut self.outputs_removed,
        }
    }
}
