use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use super::ast::{Literal, Predicate, Rule};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum StratifyError {
    #[error("rules are not stratifiable: negative cycle {}", render_cycle(.cycle))]
    NotStratifiable { cycle: Vec<Predicate> },
}

fn render_cycle(cycle: &[Predicate]) -> String {
    cycle
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Predicates layered so negation only reaches strictly lower strata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    strata: Vec<BTreeSet<Predicate>>,
    index: BTreeMap<Predicate, usize>,
}

impl Stratification {
    pub fn strata(&self) -> &[BTreeSet<Predicate>] {
        &self.strata
    }

    pub fn stratum_of(&self, p: &Predicate) -> Option<usize> {
        self.index.get(p).copied()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Positive,
    Negative,
}

/// Assigns every predicate mentioned by `rules` to a stratum.
///
/// Heads of one multi-atom rule are tied into the same stratum.
pub fn stratify<'a>(
    rules: impl IntoIterator<Item = &'a Rule>,
) -> Result<Stratification, StratifyError> {
    let mut graph: DiGraph<Predicate, Polarity> = DiGraph::new();
    let mut nodes: BTreeMap<Predicate, NodeIndex> = BTreeMap::new();
    let mut node = |g: &mut DiGraph<Predicate, Polarity>, p: Predicate| {
        *nodes.entry(p.clone()).or_insert_with(|| g.add_node(p))
    };

    for rule in rules {
        let heads: Vec<NodeIndex> = rule
            .head()
            .iter()
            .map(|a| node(&mut graph, a.predicate()))
            .collect();
        for pair in heads.windows(2) {
            graph.update_edge(pair[0], pair[1], Polarity::Positive);
            graph.update_edge(pair[1], pair[0], Polarity::Positive);
        }
        for lit in rule.body() {
            let (atom, pol) = match lit {
                Literal::Pos(a) => (a, Polarity::Positive),
                Literal::Neg(a) => (a, Polarity::Negative),
                _ => continue,
            };
            let target = node(&mut graph, atom.predicate());
            for &h in &heads {
                // a negative edge dominates a positive one between the same pair
                match graph.find_edge(h, target) {
                    Some(e) if pol == Polarity::Negative => graph[e] = Polarity::Negative,
                    Some(_) => {}
                    None => {
                        graph.add_edge(h, target, pol);
                    }
                }
            }
        }
    }

    // tarjan_scc yields components dependencies-first for head -> body edges
    let sccs = tarjan_scc(&graph);
    let mut comp_of = vec![0usize; graph.node_count()];
    for (ci, comp) in sccs.iter().enumerate() {
        for &n in comp {
            comp_of[n.index()] = ci;
        }
    }
    let mut level = vec![0usize; sccs.len()];
    for (ci, comp) in sccs.iter().enumerate() {
        let mut lvl = 0;
        for &n in comp {
            for e in graph.edges(n) {
                use petgraph::visit::EdgeRef;
                let t = e.target();
                let tc = comp_of[t.index()];
                let neg = *e.weight() == Polarity::Negative;
                if tc == ci {
                    if neg {
                        return Err(StratifyError::NotStratifiable {
                            cycle: negative_cycle(&graph, n, t, &comp_of, ci),
                        });
                    }
                    continue;
                }
                lvl = lvl.max(level[tc] + usize::from(neg));
            }
        }
        level[ci] = lvl;
    }

    let depth = level.iter().copied().max().map_or(0, |m| m + 1);
    let mut strata = vec![BTreeSet::new(); depth];
    let mut index = BTreeMap::new();
    for (ci, comp) in sccs.iter().enumerate() {
        for &n in comp {
            strata[level[ci]].insert(graph[n].clone());
            index.insert(graph[n].clone(), level[ci]);
        }
    }
    Ok(Stratification { strata, index })
}

/// Cycle `from -> to -> ... -> from` staying inside one component.
fn negative_cycle(
    g: &DiGraph<Predicate, Polarity>,
    from: NodeIndex,
    to: NodeIndex,
    comp_of: &[usize],
    comp: usize,
) -> Vec<Predicate> {
    let mut prev: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = BTreeSet::from([to]);
    while let Some(n) = queue.pop_front() {
        if n == from {
            break;
        }
        for m in g.neighbors(n) {
            if comp_of[m.index()] == comp && seen.insert(m) {
                prev.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    std::iter::once(from)
        .chain(path)
        .map(|n| g[n].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse_rules;

    fn p(name: &str, arity: usize) -> Predicate {
        Predicate::new(name, arity)
    }

    #[test]
    fn negation_orders_strata() {
        let rules = parse_rules(
            "R1: cwGood(X) :- loan(X), score(X, S), S > 5.
             R2: cwBad(X) :- loan(X), not cwGood(X).",
        )
        .unwrap();
        let s = stratify(&rules).unwrap();
        assert!(s.stratum_of(&p("cwGood", 1)).unwrap() < s.stratum_of(&p("cwBad", 1)).unwrap());
    }

    #[test]
    fn positive_programs_need_one_stratum() {
        let rules =
            parse_rules("T1: t(X, Y) :- e(X, Y). T2: t(X, Z) :- t(X, Y), e(Y, Z).").unwrap();
        let s = stratify(&rules).unwrap();
        assert_eq!(s.strata().len(), 1);
        assert_eq!(s.strata()[0].len(), 2);
    }

    #[test]
    fn negative_cycle_is_rejected() {
        let rules = parse_rules("A: p :- not q. B: q :- not p.").unwrap();
        let StratifyError::NotStratifiable { cycle } = stratify(&rules).unwrap_err();
        assert_eq!(cycle.first(), cycle.last());
        assert!(cycle.contains(&p("p", 0)) && cycle.contains(&p("q", 0)));
    }

    #[test]
    fn every_predicate_gets_exactly_one_stratum() {
        let rules =
            parse_rules("A: a(X) :- b(X), not c(X). B: c(X) :- d(X). C: e(X) :- a(X), not c(X).")
                .unwrap();
        let s = stratify(&rules).unwrap();
        let total: usize = s.strata().iter().map(BTreeSet::len).sum();
        assert_eq!(total, 5);
        for r in &rules {
            for h in r.head_predicates() {
                let hs = s.stratum_of(&h).unwrap();
                for lit in r.body() {
                    match lit {
                        Literal::Pos(a) => assert!(s.stratum_of(&a.predicate()).unwrap() <= hs),
                        Literal::Neg(a) => assert!(s.stratum_of(&a.predicate()).unwrap() < hs),
                        _ => {}
                    }
                }
            }
        }
    }
}
