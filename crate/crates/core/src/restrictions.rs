//! Modification restrictions a module places on its descendants, and the
//! structural half of the conformance check.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::lang::Predicate;
use crate::model::{resolve, Hierarchy, ModuleId, ResolveError, ResolvedModule, Side};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Restriction {
    NoAdditionalInput,
    NoAdditionalOutput,
    NonOmitableInput(Predicate),
    NonOmitableOutput(Predicate),
    NonGrowable(Predicate),
    NonShrinkable(Predicate),
}

/// Whether a restriction is checked on interfaces or on computed behavior.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictionKind {
    Structural,
    Behavioral,
}

impl Restriction {
    pub const KEYWORDS: [&'static str; 6] = [
        "no_additional_input",
        "no_additional_output",
        "non_omitable_input",
        "non_omitable_output",
        "non_growable",
        "non_shrinkable",
    ];

    /// Builds a restriction from its keyword and optional target.
    pub fn from_parts(keyword: &str, target: Option<Predicate>) -> Option<Restriction> {
        Some(match (keyword, target) {
            ("no_additional_input", None) => Restriction::NoAdditionalInput,
            ("no_additional_output", None) => Restriction::NoAdditionalOutput,
            ("non_omitable_input", Some(p)) => Restriction::NonOmitableInput(p),
            ("non_omitable_output", Some(p)) => Restriction::NonOmitableOutput(p),
            ("non_growable", Some(p)) => Restriction::NonGrowable(p),
            ("non_shrinkable", Some(p)) => Restriction::NonShrinkable(p),
            _ => return None,
        })
    }

    pub fn takes_target(keyword: &str) -> bool {
        keyword.starts_with("non_")
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Restriction::NoAdditionalInput => "no_additional_input",
            Restriction::NoAdditionalOutput => "no_additional_output",
            Restriction::NonOmitableInput(_) => "non_omitable_input",
            Restriction::NonOmitableOutput(_) => "non_omitable_output",
            Restriction::NonGrowable(_) => "non_growable",
            Restriction::NonShrinkable(_) => "non_shrinkable",
        }
    }

    pub fn kind(&self) -> RestrictionKind {
        match self {
            Restriction::NonGrowable(_) | Restriction::NonShrinkable(_) => {
                RestrictionKind::Behavioral
            }
            _ => RestrictionKind::Structural,
        }
    }

    pub fn predicate(&self) -> Option<&Predicate> {
        match self {
            Restriction::NoAdditionalInput | Restriction::NoAdditionalOutput => None,
            Restriction::NonOmitableInput(p)
            | Restriction::NonOmitableOutput(p)
            | Restriction::NonGrowable(p)
            | Restriction::NonShrinkable(p) => Some(p),
        }
    }

    /// The interface the target must belong to.
    pub fn target_side(&self) -> Option<Side> {
        match self {
            Restriction::NoAdditionalInput | Restriction::NoAdditionalOutput => None,
            Restriction::NonOmitableInput(_) => Some(Side::Input),
            _ => Some(Side::Output),
        }
    }
}

impl fmt::Display for Restriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.predicate() {
            Some(p) => write!(f, "{}({p})", self.keyword()),
            None => f.write_str(self.keyword()),
        }
    }
}

impl Serialize for Restriction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Error)]
#[error("module {module}: restriction {restriction} targets {predicate}, which is not one of its {side}s")]
pub struct RestrictionTargetMissing {
    pub module: ModuleId,
    pub restriction: Restriction,
    pub predicate: Predicate,
    pub side: Side,
}

/// Checks that every restriction a module declares itself targets a predicate
/// of the right interface in the module's resolved form.
pub fn validate_restrictions(h: &Hierarchy, rm: &ResolvedModule) -> Vec<RestrictionTargetMissing> {
    let Some(declared) = h.get(&rm.id) else {
        return Vec::new();
    };
    declared
        .restrictions_added
        .iter()
        .filter_map(|r| {
            let side = r.target_side()?;
            let p = r.predicate()?;
            (!rm.interface(side).contains(p)).then(|| RestrictionTargetMissing {
                module: rm.id.clone(),
                restriction: r.clone(),
                predicate: p.clone(),
                side,
            })
        })
        .collect()
}

/// Restrictions in force on `id`: its own plus every ancestor's.
pub fn resolve_restrictions(
    h: &Hierarchy,
    id: &ModuleId,
) -> Result<BTreeSet<Restriction>, ResolveError> {
    Ok(h.chain(id)?
        .into_iter()
        .flat_map(|m| m.restrictions_added.iter().cloned())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct StructuralViolation {
    pub child: ModuleId,
    pub parent: ModuleId,
    pub restriction: Restriction,
    /// Predicates added or omitted in breach of the restriction.
    pub evidence: Vec<Predicate>,
}

impl fmt::Display for StructuralViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let evidence: Vec<String> = self.evidence.iter().map(ToString::to_string).collect();
        write!(
            f,
            "{} violates {} of {}: {}",
            self.child,
            self.restriction,
            self.parent,
            evidence.join(", ")
        )
    }
}

/// Structural check of the edge from `child` to its parent, using the
/// restrictions in force on the parent.
pub fn check_structural_resolved(
    parent: &ResolvedModule,
    child: &ResolvedModule,
) -> Vec<StructuralViolation> {
    let mut out = Vec::new();
    for r in &parent.restrictions {
        let evidence: Vec<Predicate> = match r {
            Restriction::NoAdditionalInput => {
                child.inputs.difference(&parent.inputs).cloned().collect()
            }
            Restriction::NoAdditionalOutput => {
                child.outputs.difference(&parent.outputs).cloned().collect()
            }
            Restriction::NonOmitableInput(p) => {
                if child.inputs.contains(p) {
                    vec![]
                } else {
                    vec![p.clone()]
                }
            }
            Restriction::NonOmitableOutput(p) => {
                if child.outputs.contains(p) {
                    vec![]
                } else {
                    vec![p.clone()]
                }
            }
            Restriction::NonGrowable(_) | Restriction::NonShrinkable(_) => continue,
        };
        if !evidence.is_empty() {
            out.push(StructuralViolation {
                child: child.id.clone(),
                parent: parent.id.clone(),
                restriction: r.clone(),
                evidence,
            });
        }
    }
    out
}

/// Resolves `child` and its parent, then checks the edge between them.
/// Roots have no edge and yield no violations.
pub fn check_structural(
    h: &Hierarchy,
    child: &ModuleId,
) -> Result<Vec<StructuralViolation>, ResolveError> {
    let Some(parent) = h.parent_of(child) else {
        return Ok(Vec::new());
    };
    let p = resolve(h, parent)?;
    let c = resolve(h, child)?;
    Ok(check_structural_resolved(&p, &c))
}
