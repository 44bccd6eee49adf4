use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::ast::{Predicate, Value};

pub type Tuple = Vec<Value>;
pub type Relation = BTreeSet<Tuple>;
/// Extensions keyed by predicate.
pub type FactMap = BTreeMap<Predicate, Relation>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("tuple of length {found} does not match {predicate}")]
pub struct ArityMismatch {
    pub predicate: Predicate,
    pub found: usize,
}

/// Named fact extensions. The schema is exactly the key set of `extensions`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    extensions: FactMap,
}

impl Dataset {
    pub fn new(name: impl Into<String>) -> Self {
        Dataset {
            name: name.into(),
            extensions: FactMap::new(),
        }
    }

    /// Adds `p` to the schema with an empty extension if absent.
    pub fn declare(&mut self, p: Predicate) {
        self.extensions.entry(p).or_default();
    }

    pub fn insert(&mut self, p: Predicate, tuple: Tuple) -> Result<bool, ArityMismatch> {
        if tuple.len() != p.arity {
            return Err(ArityMismatch {
                predicate: p,
                found: tuple.len(),
            });
        }
        Ok(self.extensions.entry(p).or_default().insert(tuple))
    }

    pub fn schema(&self) -> BTreeSet<Predicate> {
        self.extensions.keys().cloned().collect()
    }

    pub fn extension(&self, p: &Predicate) -> Option<&Relation> {
        self.extensions.get(p)
    }

    pub fn extensions(&self) -> &FactMap {
        &self.extensions
    }

    pub fn fact_count(&self) -> usize {
        self.extensions.values().map(BTreeSet::len).sum()
    }

    /// A copy holding only the extensions of `keep`.
    pub fn restrict_to(&self, keep: &BTreeSet<Predicate>) -> Dataset {
        Dataset {
            name: self.name.clone(),
            extensions: self
                .extensions
                .iter()
                .filter(|(p, _)| keep.contains(*p))
                .map(|(p, r)| (p.clone(), r.clone()))
                .collect(),
        }
    }
}

/// Renders one fact as `pred(c1, ..., cn)` without the terminating dot.
pub fn render_fact(p: &Predicate, tuple: &[Value]) -> String {
    FactDisplay(p, tuple).to_string()
}

struct FactDisplay<'a>(&'a Predicate, &'a [Value]);

impl fmt::Display for FactDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.name)?;
        if !self.1.is_empty() {
            f.write_str("(")?;
            for (i, v) in self.1.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                v.fmt(f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Renders a dataset as a fact file; empty extensions become `schema` lines.
pub fn render_facts(ds: &Dataset) -> String {
    let mut out = String::new();
    for (p, rel) in &ds.extensions {
        if rel.is_empty() {
            out.push_str(&format!("schema {p}.\n"));
        }
        for t in rel {
            out.push_str(&render_fact(p, t));
            out.push_str(".\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_facts;

    #[test]
    fn insert_checks_arity() {
        let mut ds = Dataset::new("d");
        let err = ds
            .insert(
                Predicate::new("loan", 1),
                vec![Value::symbol("a"), Value::int(1)],
            )
            .unwrap_err();
        assert_eq!(err.found, 2);
        assert!(ds.schema().is_empty());
    }

    #[test]
    fn render_then_parse_is_identity() {
        let text =
            "loan(l1).\nlValue(l1, 9000.5).\nnote(l1, \"a \\\"q\\\"\").\nschema hasPart/2.\n";
        let ds = parse_facts("d", text).unwrap();
        assert_eq!(parse_facts("d", &render_facts(&ds)).unwrap(), ds);
    }
}
