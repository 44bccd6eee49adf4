//! Running modules on datasets and comparing parent and child behavior.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{
    render_fact, Dataset, EvalError, EvalOptions, FactMap, Predicate, Program, Relation,
};
use crate::model::{resolve, Hierarchy, ModuleId, ResolveError, ResolvedModule};
use crate::restrictions::Restriction;

/// How an output extension changed from parent to child, joined over datasets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeClass {
    #[default]
    Unchanged,
    Grown,
    Shrunk,
    GrownAndShrunk,
}

impl ChangeClass {
    pub fn from_flags(grown: bool, shrunk: bool) -> Self {
        match (grown, shrunk) {
            (false, false) => ChangeClass::Unchanged,
            (true, false) => ChangeClass::Grown,
            (false, true) => ChangeClass::Shrunk,
            (true, true) => ChangeClass::GrownAndShrunk,
        }
    }

    pub fn grown(self) -> bool {
        matches!(self, ChangeClass::Grown | ChangeClass::GrownAndShrunk)
    }

    pub fn shrunk(self) -> bool {
        matches!(self, ChangeClass::Shrunk | ChangeClass::GrownAndShrunk)
    }

    pub fn join(self, other: ChangeClass) -> ChangeClass {
        ChangeClass::from_flags(
            self.grown() || other.grown(),
            self.shrunk() || other.shrunk(),
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChangeClass::Unchanged => "unchanged",
            ChangeClass::Grown => "grown",
            ChangeClass::Shrunk => "shrunk",
            ChangeClass::GrownAndShrunk => "grown_and_shrunk",
        }
    }
}

impl fmt::Display for ChangeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ChangeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            ChangeClass::Unchanged,
            ChangeClass::Grown,
            ChangeClass::Shrunk,
            ChangeClass::GrownAndShrunk,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| format!("unknown change class `{s}`"))
    }
}

/// Grown when the child has tuples the parent lacks, shrunk for the converse.
pub fn classify_change(parent: &Relation, child: &Relation) -> ChangeClass {
    ChangeClass::from_flags(!child.is_subset(parent), !parent.is_subset(child))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("dataset {dataset} is not applicable to {module}: missing inputs {}", list(.missing))]
    NotApplicable {
        module: ModuleId,
        dataset: String,
        missing: Vec<Predicate>,
    },
    #[error("module {module} is abstract (undefined: {}); pass --allow-abstract to run it anyway", list(.abstract_predicates))]
    AbstractModuleExecution {
        module: ModuleId,
        abstract_predicates: Vec<Predicate>,
    },
    #[error("running {module} on {dataset}: {source}")]
    Eval {
        module: ModuleId,
        dataset: String,
        #[source]
        source: EvalError,
    },
}

fn list(ps: &[Predicate]) -> String {
    ps.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExecOptions {
    pub allow_abstract: bool,
    pub eval: EvalOptions,
}

/// Output extensions of one module on one dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionResult {
    pub module: ModuleId,
    pub dataset: String,
    pub outputs: FactMap,
}

pub fn missing_inputs(rm: &ResolvedModule, ds: &Dataset) -> BTreeSet<Predicate> {
    let schema = ds.schema();
    rm.inputs.difference(&schema).cloned().collect()
}

/// A dataset applies when its schema covers every input of the module.
pub fn is_applicable(rm: &ResolvedModule, ds: &Dataset) -> bool {
    missing_inputs(rm, ds).is_empty()
}

/// Evaluates `rm` over the inputs of `ds`. Facts for non-input predicates in
/// the dataset are ignored; outputs the rules never derive come back empty.
pub fn execute(
    rm: &ResolvedModule,
    ds: &Dataset,
    opts: &ExecOptions,
) -> Result<ExecutionResult, ExecError> {
    let missing = missing_inputs(rm, ds);
    if !missing.is_empty() {
        return Err(ExecError::NotApplicable {
            module: rm.id.clone(),
            dataset: ds.name.clone(),
            missing: missing.into_iter().collect(),
        });
    }
    if rm.is_abstract() && !opts.allow_abstract {
        return Err(ExecError::AbstractModuleExecution {
            module: rm.id.clone(),
            abstract_predicates: rm.abstract_predicates.iter().cloned().collect(),
        });
    }
    let eval_err = |source: EvalError| ExecError::Eval {
        module: rm.id.clone(),
        dataset: ds.name.clone(),
        source,
    };
    let program = Program::new(rm.rules.values()).map_err(|e| eval_err(e.into()))?;
    let mut derived = program
        .evaluate(&ds.restrict_to(&rm.inputs), &opts.eval)
        .map_err(eval_err)?;
    let outputs = rm
        .outputs
        .iter()
        .map(|p| (p.clone(), derived.remove(p).unwrap_or_default()))
        .collect();
    Ok(ExecutionResult {
        module: rm.id.clone(),
        dataset: ds.name.clone(),
        outputs,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("no datasets to compare {parent} and {child} on")]
    NoApplicableDatasets { parent: ModuleId, child: ModuleId },
    #[error("module {0} has no parent")]
    NoParent(ModuleId),
}

/// Tuples one dataset adds to or drops from a predicate, parent to child.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetDiff {
    pub dataset: String,
    pub extra: Relation,
    pub missing: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateChange {
    pub predicate: Predicate,
    pub class: ChangeClass,
    /// Only datasets where the extensions differ.
    pub diffs: Vec<DatasetDiff>,
}

/// Behavioral comparison of two modules over a list of datasets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BehavioralReport {
    pub parent: ModuleId,
    pub child: ModuleId,
    pub datasets: Vec<String>,
    /// Shared outputs that are concrete in both modules.
    pub changes: BTreeMap<Predicate, PredicateChange>,
    /// Shared outputs that are abstract in at least one module.
    pub not_comparable: BTreeSet<Predicate>,
    /// Parent outputs the child no longer declares.
    pub removed: BTreeSet<Predicate>,
}

impl BehavioralReport {
    pub fn class_of(&self, p: &Predicate) -> Option<ChangeClass> {
        self.changes.get(p).map(|c| c.class)
    }
}

/// Runs both modules on every dataset and classifies each comparable output.
/// Every dataset must apply to both modules.
pub fn detect_behavioral_modifications(
    parent: &ResolvedModule,
    child: &ResolvedModule,
    datasets: &[Dataset],
) -> Result<BehavioralReport, BehaviorError> {
    if datasets.is_empty() {
        return Err(BehaviorError::NoApplicableDatasets {
            parent: parent.id.clone(),
            child: child.id.clone(),
        });
    }
    let shared: BTreeSet<Predicate> = parent
        .outputs
        .intersection(&child.outputs)
        .cloned()
        .collect();
    let (compared, not_comparable): (BTreeSet<Predicate>, BTreeSet<Predicate>) = shared
        .into_iter()
        .partition(|p| parent.is_concrete_predicate(p) && child.is_concrete_predicate(p));
    let removed = parent.outputs.difference(&child.outputs).cloned().collect();

    let opts = ExecOptions {
        allow_abstract: true,
        eval: EvalOptions {
            derivation_cap: crate::derivation_cap(),
        },
    };
    let mut changes: BTreeMap<Predicate, PredicateChange> = compared
        .iter()
        .map(|p| {
            let change = PredicateChange {
                predicate: p.clone(),
                class: ChangeClass::Unchanged,
                diffs: Vec::new(),
            };
            (p.clone(), change)
        })
        .collect();
    for ds in datasets {
        let before = execute(parent, ds, &opts)?;
        let after = execute(child, ds, &opts)?;
        for (p, change) in changes.iter_mut() {
            let old = &before.outputs[p];
            let new = &after.outputs[p];
            let class = classify_change(old, new);
            if class != ChangeClass::Unchanged {
                change.class = change.class.join(class);
                change.diffs.push(DatasetDiff {
                    dataset: ds.name.clone(),
                    extra: new.difference(old).cloned().collect(),
                    missing: old.difference(new).cloned().collect(),
                });
            }
        }
    }
    Ok(BehavioralReport {
        parent: parent.id.clone(),
        child: child.id.clone(),
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        changes,
        not_comparable,
        removed,
    })
}

/// Maximum number of witness tuples kept per violation.
pub const WITNESS_LIMIT: usize = 5;

/// A dataset and tuples that demonstrate a violation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub dataset: String,
    pub tuples: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BehavioralViolation {
    pub child: ModuleId,
    pub parent: ModuleId,
    pub restriction: Restriction,
    pub predicate: Predicate,
    pub observed: ChangeClass,
    pub witness: Witness,
}

impl fmt::Display for BehavioralViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violates {} of {}: {} on {} ({})",
            self.child,
            self.restriction,
            self.parent,
            self.observed,
            self.witness.dataset,
            self.witness.tuples.join(", ")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BehavioralCheck {
    pub report: BehavioralReport,
    pub violations: Vec<BehavioralViolation>,
}

/// Checks a comparison against the growth restrictions in force on the parent.
pub fn violations_for(
    parent: &ResolvedModule,
    report: &BehavioralReport,
) -> Vec<BehavioralViolation> {
    let mut out = Vec::new();
    for r in &parent.restrictions {
        let (p, grown) = match r {
            Restriction::NonGrowable(p) => (p, true),
            Restriction::NonShrinkable(p) => (p, false),
            _ => continue,
        };
        let Some(change) = report.changes.get(p) else {
            continue;
        };
        let hit = if grown {
            change.class.grown()
        } else {
            change.class.shrunk()
        };
        if !hit {
            continue;
        }
        let diff = change
            .diffs
            .iter()
            .find(|d| !(if grown { &d.extra } else { &d.missing }).is_empty())
            .expect("a grown or shrunk class has a witnessing dataset");
        let tuples = if grown { &diff.extra } else { &diff.missing };
        out.push(BehavioralViolation {
            child: report.child.clone(),
            parent: report.parent.clone(),
            restriction: r.clone(),
            predicate: p.clone(),
            observed: change.class,
            witness: Witness {
                dataset: diff.dataset.clone(),
                tuples: tuples
                    .iter()
                    .take(WITNESS_LIMIT)
                    .map(|t| render_fact(p, t))
                    .collect(),
            },
        });
    }
    out
}

/// Behavioral check of the edge from `child` to its parent.
pub fn check_behavioral(
    h: &Hierarchy,
    child: &ModuleId,
    datasets: &[Dataset],
) -> Result<BehavioralCheck, BehaviorError> {
    let parent_id = h
        .parent_of(child)
        .ok_or_else(|| BehaviorError::NoParent(child.clone()))?;
    let parent = resolve(h, parent_id)?;
    let c = resolve(h, child)?;
    let report = detect_behavioral_modifications(&parent, &c, datasets)?;
    let violations = violations_for(&parent, &report);
    Ok(BehavioralCheck { report, violations })
}
