use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::syntax::{parse_module_file, ModuleSpans};
use crate::lang::{parse_facts, Dataset, Pos};
use crate::model::{
    resolve, Hierarchy, HierarchyError, ModuleId, ResolveError, ResolvedModule, Side,
};
use crate::restrictions::validate_restrictions;

pub const MODULE_EXT: &str = "rmod";
pub const FACTS_EXT: &str = "facts";

/// A message tied to a file, and to a position in it when one is known.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<u32>,
    pub message: String,
}

impl Diagnostic {
    pub fn new(message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn in_file(file: &str, pos: Option<Pos>, message: impl Into<String>) -> Self {
        Diagnostic {
            file: Some(file.to_string()),
            line: pos.map(|p| p.line),
            column: pos.map(|p| p.column),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
            if let (Some(l), Some(c)) = (self.line, self.column) {
                write!(f, "{l}:{c}:")?;
            }
            f.write_str(" ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleSource {
    /// Path relative to the workspace root, `/`-separated.
    pub file: String,
    pub spans: ModuleSpans,
}

/// Every module and dataset found under a directory, with resolution results
/// and the diagnostics collected along the way.
#[derive(Debug, Default)]
pub struct Workspace {
    pub root: PathBuf,
    pub hierarchy: Hierarchy,
    pub sources: BTreeMap<ModuleId, ModuleSource>,
    pub datasets: BTreeMap<String, Dataset>,
    pub dataset_files: BTreeMap<String, String>,
    pub resolved: BTreeMap<ModuleId, ResolvedModule>,
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl Workspace {
    pub fn file_of(&self, id: &ModuleId) -> Option<&str> {
        self.sources.get(id).map(|s| s.file.as_str())
    }

    /// A diagnostic positioned at the declaration of module `id`.
    pub fn at_declaration(&self, id: &ModuleId, message: String) -> Diagnostic {
        self.at_module(id, None, message)
    }

    fn at_module(&self, id: &ModuleId, pos: Option<Pos>, message: String) -> Diagnostic {
        match self.sources.get(id) {
            Some(src) => Diagnostic::in_file(&src.file, pos.or(Some(src.spans.module)), message),
            None => Diagnostic::new(message),
        }
    }

    fn spans(&self, id: &ModuleId) -> Option<&ModuleSpans> {
        self.sources.get(id).map(|s| &s.spans)
    }

    fn hierarchy_diagnostic(&self, e: &HierarchyError) -> Diagnostic {
        let (id, pos) = match e {
            HierarchyError::DuplicateModule(id) | HierarchyError::UnknownModule(id) => (id, None),
            HierarchyError::UnknownParent { module, .. }
            | HierarchyError::RemovalInRoot { module } => (module, None),
            HierarchyError::CycleDetected { path } => (&path[0], None),
            HierarchyError::AddRemoveConflict { module, rule } => (
                module,
                self.spans(module).and_then(|s| s.rules.get(rule).copied()),
            ),
            HierarchyError::InterfaceAddRemoveConflict {
                module,
                side,
                predicate,
            } => (
                module,
                self.spans(module)
                    .and_then(|s| s.interface.get(&(*side, predicate.clone())).copied()),
            ),
        };
        self.at_module(id, pos, e.to_string())
    }

    fn resolve_diagnostic(&self, id: &ModuleId, e: &ResolveError) -> Diagnostic {
        let spans = self.spans(id);
        let pos = match e {
            ResolveError::RemovedRuleNotInherited { rule, .. } => {
                spans.and_then(|s| s.removed_rules.get(rule))
            }
            ResolveError::DuplicateRuleId { rule, .. } => spans.and_then(|s| s.rules.get(rule)),
            ResolveError::RemovedInterfaceNotInherited {
                side, predicate, ..
            } => spans.and_then(|s| s.interface.get(&(*side, predicate.clone()))),
            ResolveError::InterfaceOverlap { predicate, .. } => spans.and_then(|s| {
                s.interface
                    .get(&(Side::Input, predicate.clone()))
                    .or_else(|| s.interface.get(&(Side::Output, predicate.clone())))
            }),
            _ => None,
        };
        self.at_module(id, pos.copied(), e.to_string())
    }
}

/// Files with extension `ext` under `dir`, in sorted order. Hidden entries and
/// `target` directories are skipped.
fn discover(dir: &Path, ext: &str, out: &mut Vec<PathBuf>) -> Result<(), WorkspaceError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err(dir))?;
    entries.sort();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with('.') {
            continue;
        }
        if path.is_dir() {
            if name != "target" {
                discover(&path, ext, out)?;
            }
        } else if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            out.push(path);
        }
    }
    Ok(())
}

fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// Datasets by name, the file each came from, and per-file parse errors.
pub type LoadedDatasets = (
    BTreeMap<String, Dataset>,
    BTreeMap<String, String>,
    Vec<Diagnostic>,
);

/// Loads all `.facts` files under `dir`. Each dataset is named after its file stem.
pub fn load_datasets(dir: &Path) -> Result<LoadedDatasets, WorkspaceError> {
    if !dir.is_dir() {
        return Err(WorkspaceError::NotADirectory(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    discover(dir, FACTS_EXT, &mut files)?;
    let mut datasets = BTreeMap::new();
    let mut origin: BTreeMap<String, String> = BTreeMap::new();
    let mut errors = Vec::new();
    for path in files {
        let rel = relative(dir, &path);
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        match parse_facts(&name, &text) {
            Ok(ds) => {
                if let Some(first) = origin.get(&name) {
                    errors.push(Diagnostic::in_file(
                        &rel,
                        Some(Pos { line: 1, column: 1 }),
                        format!("dataset {name} is already defined in {first}"),
                    ));
                    continue;
                }
                origin.insert(name.clone(), rel);
                datasets.insert(name, ds);
            }
            Err(e) => errors.push(Diagnostic::in_file(&rel, Some(e.position()), e.message())),
        }
    }
    Ok((datasets, origin, errors))
}

/// Loads a dataset from a single fact file, named after its stem.
pub fn load_dataset_file(path: &Path) -> Result<Result<Dataset, Diagnostic>, WorkspaceError> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_facts(name, &text).map_err(|e| {
        Diagnostic::in_file(&path.display().to_string(), Some(e.position()), e.message())
    }))
}

/// Discovers, parses and resolves every module under `root`, and loads every
/// dataset there. Problems in individual files become diagnostics.
pub fn load_workspace(root: &Path) -> Result<Workspace, WorkspaceError> {
    if !root.is_dir() {
        return Err(WorkspaceError::NotADirectory(root.to_path_buf()));
    }
    let mut ws = Workspace {
        root: root.to_path_buf(),
        ..Default::default()
    };

    let mut files = Vec::new();
    discover(root, MODULE_EXT, &mut files)?;
    for path in &files {
        let rel = relative(root, path);
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let parsed = match parse_module_file(&text) {
            Ok(p) => p,
            Err(e) => {
                ws.errors
                    .push(Diagnostic::in_file(&rel, Some(e.position()), e.message()));
                continue;
            }
        };
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        if let Some(extra) = parsed.get(1) {
            let msg = format!(
                "{rel} declares more than one module; put {} in its own file",
                extra.module.id
            );
            ws.errors
                .push(Diagnostic::in_file(&rel, Some(extra.spans.module), msg));
            continue;
        }
        for pm in parsed {
            let id = pm.module.id.clone();
            if id.as_str() != stem {
                let msg = format!("module {id} must be declared in a file named {id}.{MODULE_EXT}");
                ws.errors
                    .push(Diagnostic::in_file(&rel, Some(pm.spans.module), msg));
                continue;
            }
            if let Some(first) = ws.sources.get(&id) {
                let msg = format!("module {id} is already declared in {}", first.file);
                ws.errors
                    .push(Diagnostic::in_file(&rel, Some(pm.spans.module), msg));
                continue;
            }
            ws.sources.insert(
                id,
                ModuleSource {
                    file: rel.clone(),
                    spans: pm.spans,
                },
            );
            ws.hierarchy.upsert(pm.module);
        }
    }

    let (datasets, dataset_files, errors) = load_datasets(root)?;
    ws.datasets = datasets;
    ws.dataset_files = dataset_files;
    ws.errors.extend(errors);

    if let Err(errs) = ws.hierarchy.validate() {
        let diags: Vec<Diagnostic> = errs.iter().map(|e| ws.hierarchy_diagnostic(e)).collect();
        ws.errors.extend(diags);
    }
    let ids: Vec<ModuleId> = ws.hierarchy.ids().cloned().collect();
    for id in &ids {
        match resolve(&ws.hierarchy, id) {
            Ok(rm) => {
                for e in validate_restrictions(&ws.hierarchy, &rm) {
                    let pos = ws
                        .spans(id)
                        .and_then(|s| s.restrictions.get(&e.restriction))
                        .copied();
                    let d = ws.at_module(id, pos, e.to_string());
                    ws.errors.push(d);
                }
                ws.resolved.insert(id.clone(), rm);
            }
            // Hierarchy problems are reported once by `validate`, and failures
            // inherited from an ancestor are reported at the ancestor.
            Err(ResolveError::Hierarchy(_)) => {}
            Err(e) if e.module() != Some(id) => {}
            Err(e) => {
                let d = ws.resolve_diagnostic(id, &e);
                ws.errors.push(d);
            }
        }
    }
    for (id, rm) in &ws.resolved {
        if rm.is_abstract() && ws.hierarchy.is_leaf(id) {
            let names: Vec<String> = rm
                .abstract_predicates
                .iter()
                .map(ToString::to_string)
                .collect();
            let msg = format!(
                "leaf module {id} is abstract (undefined: {}); it cannot be run",
                names.join(", ")
            );
            ws.warnings.push(ws.at_module(id, None, msg));
        }
    }
    ws.errors.sort();
    ws.errors.dedup();
    ws.warnings.sort();
    Ok(ws)
}
