//! Modules, hierarchies, resolution of inherited rules and abstractness.

mod abstractness;
mod hierarchy;
mod module;
mod resolve;

pub use abstractness::{concrete_predicates, dependency_graph};
pub use hierarchy::{Hierarchy, HierarchyError};
pub use module::{ModuleId, RuleModule, Side};
pub use resolve::{resolve, ResolveError, ResolvedModule};
