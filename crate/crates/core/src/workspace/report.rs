use std::fmt::Write;

use serde::Serialize;

use super::load::{Diagnostic, Workspace};
use crate::behavior::{
    detect_behavioral_modifications, violations_for, BehavioralViolation, ChangeClass,
};
use crate::lang::{render_fact, Dataset, Predicate, Relation};
use crate::model::ModuleId;
use crate::restrictions::{check_structural_resolved, StructuralViolation};

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Check only this module's edge and those of its descendants.
    pub module: Option<ModuleId>,
    pub structural: bool,
    pub behavioral: bool,
    pub datasets: Vec<Dataset>,
}

/// An observed modification of a shared, comparable output.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ObservedChange {
    pub child: ModuleId,
    pub parent: ModuleId,
    pub predicate: Predicate,
    pub class: ChangeClass,
    /// What the child module declares it intends, if anything.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub declared: Option<ChangeClass>,
    pub diffs: Vec<DiffEntry>,
}

/// Facts a dataset adds to (`extra`) or drops from (`missing`) a predicate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DiffEntry {
    pub dataset: String,
    pub extra: Vec<String>,
    pub missing: Vec<String>,
}

fn render_all(p: &Predicate, rel: &Relation) -> Vec<String> {
    rel.iter().map(|t| render_fact(p, t)).collect()
}

/// A predicate noted on one parent/child edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EdgePredicate {
    pub child: ModuleId,
    pub parent: ModuleId,
    pub predicate: Predicate,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub structural_edges: usize,
    pub behavioral_edges: usize,
    pub datasets: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConformanceReport {
    pub checked_modules: Vec<ModuleId>,
    pub structural_violations: Vec<StructuralViolation>,
    pub behavioral_violations: Vec<BehavioralViolation>,
    pub behavioral_changes: Vec<ObservedChange>,
    pub not_comparable: Vec<EdgePredicate>,
    /// Parent outputs the child dropped; skipped by behavioral checks.
    pub removed_outputs: Vec<EdgePredicate>,
    pub warnings: Vec<Diagnostic>,
    pub errors: Vec<Diagnostic>,
    pub coverage: Coverage,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl ConformanceReport {
    pub fn has_violations(&self) -> bool {
        !self.structural_violations.is_empty() || !self.behavioral_violations.is_empty()
    }

    /// 2 when anything failed to load or run, 1 on violations, else 0.
    pub fn exit_code(&self) -> i32 {
        if !self.errors.is_empty() {
            2
        } else if self.has_violations() {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ids: Vec<&str> = self.checked_modules.iter().map(ModuleId::as_str).collect();
        let _ = writeln!(
            out,
            "checked modules: {}",
            if ids.is_empty() {
                "none".into()
            } else {
                ids.join(", ")
            }
        );
        let _ = writeln!(
            out,
            "structural violations: {}",
            self.structural_violations.len()
        );
        for v in &self.structural_violations {
            let _ = writeln!(out, "  {v}");
        }
        let _ = writeln!(
            out,
            "behavioral violations: {}",
            self.behavioral_violations.len()
        );
        for v in &self.behavioral_violations {
            let _ = writeln!(out, "  {v}");
        }
        if !self.behavioral_changes.is_empty() {
            out.push_str("behavioral changes:\n");
            for c in &self.behavioral_changes {
                let _ = write!(
                    out,
                    "  {} vs {}: {} {}",
                    c.child, c.parent, c.predicate, c.class
                );
                if let Some(d) = c.declared {
                    let _ = write!(out, " (declared {d})");
                }
                out.push('\n');
            }
        }
        if !self.not_comparable.is_empty() {
            out.push_str("not comparable (abstract):\n");
            for n in &self.not_comparable {
                let _ = writeln!(out, "  {} vs {}: {}", n.child, n.parent, n.predicate);
            }
        }
        if !self.removed_outputs.is_empty() {
            out.push_str("removed outputs (not checked):\n");
            for n in &self.removed_outputs {
                let _ = writeln!(out, "  {} vs {}: {}", n.child, n.parent, n.predicate);
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for e in &self.errors {
            let _ = writeln!(out, "error: {e}");
        }
        let _ = writeln!(
            out,
            "coverage: {} structural edges, {} behavioral edges, {} datasets",
            self.coverage.structural_edges,
            self.coverage.behavioral_edges,
            self.coverage.datasets.len()
        );
        if let Some(t) = &self.timing {
            let _ = writeln!(out, "time: {:.3} ms", t.total_ms);
        }
        out
    }
}

/// Checks every inheritance edge in scope and collects the results together
/// with the workspace's own diagnostics.
pub fn check_workspace(ws: &Workspace, opts: &CheckOptions) -> ConformanceReport {
    let mut report = ConformanceReport {
        warnings: ws.warnings.clone(),
        errors: ws.errors.clone(),
        ..Default::default()
    };
    let scope: Vec<ModuleId> = match &opts.module {
        Some(id) if ws.hierarchy.get(id).is_none() => {
            report
                .errors
                .push(Diagnostic::new(format!("unknown module {id}")));
            Vec::new()
        }
        Some(id) => {
            let mut s = vec![id.clone()];
            s.extend(ws.hierarchy.descendants(id));
            s.sort();
            s
        }
        None => ws.hierarchy.ids().cloned().collect(),
    };
    if opts.behavioral {
        report.coverage.datasets = opts.datasets.iter().map(|d| d.name.clone()).collect();
    }

    for id in scope {
        let Some(parent_id) = ws.hierarchy.parent_of(&id) else {
            continue;
        };
        let (Some(child), Some(parent)) = (ws.resolved.get(&id), ws.resolved.get(parent_id)) else {
            continue;
        };
        report.checked_modules.push(id.clone());
        if opts.structural {
            report.coverage.structural_edges += 1;
            report
                .structural_violations
                .extend(check_structural_resolved(parent, child));
        }
        if !opts.behavioral {
            continue;
        }
        match detect_behavioral_modifications(parent, child, &opts.datasets) {
            Ok(cmp) => {
                report.coverage.behavioral_edges += 1;
                report
                    .behavioral_violations
                    .extend(violations_for(parent, &cmp));
                let declared = ws.hierarchy.get(&id).map(|m| &m.declared_changes);
                for (p, change) in &cmp.changes {
                    let declared = declared.and_then(|d| d.get(p)).copied();
                    if change.class != ChangeClass::Unchanged || declared.is_some() {
                        report.behavioral_changes.push(ObservedChange {
                            child: id.clone(),
                            parent: parent_id.clone(),
                            predicate: p.clone(),
                            class: change.class,
                            declared,
                            diffs: change
                                .diffs
                                .iter()
                                .map(|d| DiffEntry {
                                    dataset: d.dataset.clone(),
                                    extra: render_all(p, &d.extra),
                                    missing: render_all(p, &d.missing),
                                })
                                .collect(),
                        });
                    }
                }
                let note = |p: &Predicate| EdgePredicate {
                    child: id.clone(),
                    parent: parent_id.clone(),
                    predicate: p.clone(),
                };
                report
                    .not_comparable
                    .extend(cmp.not_comparable.iter().map(note));
                report.removed_outputs.extend(cmp.removed.iter().map(note));
            }
            Err(e) => {
                report.errors.push(ws.at_declaration(&id, e.to_string()));
            }
        }
    }
    report.structural_violations.sort();
    report.behavioral_violations.sort();
    report.behavioral_changes.sort();
    report.not_comparable.sort();
    report.removed_outputs.sort();
    report.errors.sort();
    report
}
