//! The `rmod` command line. Exit codes: 0 clean, 1 violations, 2 errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::behavior::{detect_behavioral_modifications, execute, violations_for, ExecOptions};
use crate::lang::{render_fact, Dataset, EvalOptions};
use crate::model::ModuleId;
use crate::restrictions::check_structural_resolved;
use crate::workspace::{
    check_workspace, load_dataset_file, load_datasets, load_workspace, render_resolved,
    CheckOptions, Timing, Workspace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rmod",
    version,
    about = "Rule modules with inheritance and modification restrictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a module with all inherited rules, interfaces and restrictions expanded.
    Resolve {
        workspace: PathBuf,
        #[arg(long)]
        module: String,
    },
    /// Summarize a module: parent, interfaces, rules, restrictions and abstractness.
    Info {
        workspace: PathBuf,
        #[arg(long)]
        module: String,
    },
    /// Evaluate a module on a dataset and print its outputs.
    Run {
        workspace: PathBuf,
        #[arg(long)]
        module: String,
        /// Dataset name from the workspace, or a path to a fact file.
        #[arg(long)]
        data: String,
        /// Also check the module against its parent on this dataset.
        #[arg(long)]
        conform: bool,
        /// Run even if some predicates are undefined.
        #[arg(long)]
        allow_abstract: bool,
        #[arg(long, value_enum, default_value_t = RunFormat::Facts)]
        format: RunFormat,
    },
    /// Check inheritance edges against the parents' restrictions.
    Check {
        workspace: PathBuf,
        /// Limit the check to this module's edge and its descendants' edges.
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        structural: bool,
        #[arg(long)]
        behavioral: bool,
        /// Directory of fact files for behavioral checks.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        /// Include wall-clock timing in JSON output.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RunFormat {
    Facts,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, msg: impl Display) -> i32 {
        let _ = writeln!(self.err, "error: {msg}");
        EXIT_ERROR
    }
}

/// Parses `args` and runs the command, writing to the given streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    match cli.command {
        Command::Resolve { workspace, module } => cmd_resolve(&mut io, &workspace, &module),
        Command::Info { workspace, module } => cmd_info(&mut io, &workspace, &module),
        Command::Run {
            workspace,
            module,
            data,
            conform,
            allow_abstract,
            format,
        } => cmd_run(
            &mut io,
            &workspace,
            &module,
            &data,
            conform,
            allow_abstract,
            format,
        ),
        Command::Check {
            workspace,
            module,
            structural,
            behavioral,
            data,
            format,
            timing,
        } => cmd_check(
            &mut io, &workspace, module, structural, behavioral, data, format, timing,
        ),
    }
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn open(io: &mut Io, path: &Path) -> Option<Workspace> {
    match load_workspace(path) {
        Ok(ws) => {
            for w in &ws.warnings {
                let _ = writeln!(io.err, "warning: {w}");
            }
            Some(ws)
        }
        Err(e) => {
            io.fail(e);
            None
        }
    }
}

/// Reports workspace errors and returns `false` if the module did not resolve.
fn require_module(io: &mut Io, ws: &Workspace, id: &ModuleId) -> bool {
    for e in &ws.errors {
        let _ = writeln!(io.err, "error: {e}");
    }
    if ws.hierarchy.get(id).is_none() {
        io.fail(format!("unknown module {id}"));
        return false;
    }
    if !ws.resolved.contains_key(id) {
        io.fail(format!("module {id} could not be resolved"));
        return false;
    }
    true
}

fn cmd_resolve(io: &mut Io, path: &Path, module: &str) -> i32 {
    let Some(ws) = open(io, path) else {
        return EXIT_ERROR;
    };
    let id = ModuleId::from(module);
    if !require_module(io, &ws, &id) {
        return EXIT_ERROR;
    }
    let _ = io
        .out
        .write_all(render_resolved(&ws.resolved[&id]).as_bytes());
    EXIT_OK
}

fn list<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|t| t.to_string()).collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(", ")
    }
}

fn cmd_info(io: &mut Io, path: &Path, module: &str) -> i32 {
    let Some(ws) = open(io, path) else {
        return EXIT_ERROR;
    };
    let id = ModuleId::from(module);
    if !require_module(io, &ws, &id) {
        return EXIT_ERROR;
    }
    let rm = &ws.resolved[&id];
    let declared = ws.hierarchy.get(&id).expect("module exists");
    let children: BTreeSet<&ModuleId> = ws.hierarchy.children_of(&id).collect();
    let lines = [
        ("module", rm.id.to_string()),
        ("file", ws.file_of(&id).unwrap_or("-").to_string()),
        (
            "extends",
            rm.parent.as_ref().map_or("-".into(), ToString::to_string),
        ),
        ("children", list(children)),
        ("rules", list(rm.rules.keys())),
        ("inputs", list(&rm.inputs)),
        ("outputs", list(&rm.outputs)),
        ("restrictions", list(&rm.restrictions)),
        (
            "abstract",
            if rm.is_abstract() { "yes" } else { "no" }.into(),
        ),
        ("abstract predicates", list(&rm.abstract_predicates)),
        (
            "declared changes",
            list(
                declared
                    .declared_changes
                    .iter()
                    .map(|(p, c)| format!("{c}({p})")),
            ),
        ),
    ];
    for (k, v) in lines {
        let _ = writeln!(io.out, "{k}: {v}");
    }
    EXIT_OK
}

fn find_dataset(io: &mut Io, ws: &Workspace, data: &str) -> Option<Dataset> {
    if let Some(ds) = ws.datasets.get(data) {
        return Some(ds.clone());
    }
    let path = Path::new(data);
    if path.is_file() {
        return match load_dataset_file(path) {
            Ok(Ok(ds)) => Some(ds),
            Ok(Err(d)) => {
                io.fail(d);
                None
            }
            Err(e) => {
                io.fail(e);
                None
            }
        };
    }
    let known: Vec<&str> = ws.datasets.keys().map(String::as_str).collect();
    io.fail(format!("unknown dataset {data} (known: {})", list(known)));
    None
}

fn cmd_run(
    io: &mut Io,
    path: &Path,
    module: &str,
    data: &str,
    conform: bool,
    allow_abstract: bool,
    format: RunFormat,
) -> i32 {
    let Some(ws) = open(io, path) else {
        return EXIT_ERROR;
    };
    let id = ModuleId::from(module);
    if !require_module(io, &ws, &id) {
        return EXIT_ERROR;
    }
    let Some(ds) = find_dataset(io, &ws, data) else {
        return EXIT_ERROR;
    };
    let rm = &ws.resolved[&id];
    let opts = ExecOptions {
        allow_abstract,
        eval: EvalOptions {
            derivation_cap: crate::derivation_cap(),
        },
    };
    let result = match execute(rm, &ds, &opts) {
        Ok(r) => r,
        Err(e) => return io.fail(e),
    };
    match format {
        RunFormat::Facts => {
            for (p, rel) in &result.outputs {
                if rel.is_empty() {
                    let _ = writeln!(io.out, "% {p}: no facts");
                }
                for t in rel {
                    let _ = writeln!(io.out, "{}.", render_fact(p, t));
                }
            }
        }
        RunFormat::Json => {
            let outputs: serde_json::Map<String, serde_json::Value> = result
                .outputs
                .iter()
                .map(|(p, rel)| {
                    let facts: Vec<String> = rel.iter().map(|t| render_fact(p, t)).collect();
                    (p.to_string(), json!(facts))
                })
                .collect();
            let doc =
                json!({ "module": result.module, "dataset": result.dataset, "outputs": outputs });
            let _ = writeln!(
                io.out,
                "{}",
                serde_json::to_string_pretty(&doc).expect("json")
            );
        }
    }

    if !conform {
        return EXIT_OK;
    }
    let Some(parent_id) = rm.parent.as_ref() else {
        let _ = writeln!(
            io.err,
            "conformance: {id} is a root module; nothing to check"
        );
        return EXIT_OK;
    };
    let Some(parent) = ws.resolved.get(parent_id) else {
        return io.fail(format!("parent {parent_id} could not be resolved"));
    };
    let structural = check_structural_resolved(parent, rm);
    let behavioral = match detect_behavioral_modifications(parent, rm, std::slice::from_ref(&ds)) {
        Ok(report) => violations_for(parent, &report),
        Err(e) => return io.fail(e),
    };
    for v in &structural {
        let _ = writeln!(io.err, "violation: {v}");
    }
    for v in &behavioral {
        let _ = writeln!(io.err, "violation: {v}");
    }
    if structural.is_empty() && behavioral.is_empty() {
        let _ = writeln!(
            io.err,
            "conformance: {id} conforms to {parent_id} on {}",
            ds.name
        );
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    io: &mut Io,
    path: &Path,
    module: Option<String>,
    structural: bool,
    behavioral: bool,
    data: Option<PathBuf>,
    format: ReportFormat,
    timing: bool,
) -> i32 {
    let started = Instant::now();
    if behavioral && data.is_none() {
        return io.fail("--behavioral needs --data DIR");
    }
    let (structural, behavioral) = if structural || behavioral {
        (structural, behavioral)
    } else {
        (true, data.is_some())
    };
    let ws = match load_workspace(path) {
        Ok(ws) => ws,
        Err(e) => return io.fail(e),
    };
    let mut opts = CheckOptions {
        module: module.map(|m| ModuleId::from(m.as_str())),
        structural,
        behavioral,
        datasets: Vec::new(),
    };
    let mut data_errors = Vec::new();
    if behavioral {
        let dir = data.expect("checked above");
        match load_datasets(&dir) {
            Ok((datasets, _, errors)) => {
                opts.datasets = datasets.into_values().collect();
                data_errors = errors;
            }
            Err(e) => return io.fail(e),
        }
    }
    let mut report = check_workspace(&ws, &opts);
    if !data_errors.is_empty() {
        report.errors.extend(data_errors);
        report.errors.sort();
    }
    let elapsed = started.elapsed().as_secs_f64() * 1000.0;
    match format {
        ReportFormat::Json => {
            if timing {
                report.timing = Some(Timing { total_ms: elapsed });
            }
            let _ = io.out.write_all(report.to_json().as_bytes());
        }
        ReportFormat::Text => {
            report.timing = Some(Timing { total_ms: elapsed });
            let _ = io.out.write_all(report.to_text().as_bytes());
        }
    }
    report.exit_code()
}
