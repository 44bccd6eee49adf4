//! Workspaces on disk: module files, fact files and conformance reports.

mod load;
mod report;
mod syntax;

pub use load::{
    load_dataset_file, load_datasets, load_workspace, Diagnostic, ModuleSource, Workspace,
    WorkspaceError, FACTS_EXT, MODULE_EXT,
};
pub use report::{
    check_workspace, CheckOptions, ConformanceReport, Coverage, DiffEntry, EdgePredicate,
    ObservedChange, Timing,
};
pub use syntax::{
    parse_module, parse_module_file, render_module, render_resolved, ModuleSpans, ParsedModule,
};
