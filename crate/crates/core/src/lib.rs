//! Rule modules: Datalog rule sets with input and output interfaces, arranged
//! in single-inheritance hierarchies and guarded by modification restrictions.

pub mod behavior;
pub mod cli;
pub mod lang;
pub mod model;
pub mod restrictions;
pub mod workspace;

/// Derivation cap for evaluation, overridable through `RMOD_DERIVATION_CAP`.
pub fn derivation_cap() -> usize {
    std::env::var("RMOD_DERIVATION_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(lang::DEFAULT_DERIVATION_CAP)
}
