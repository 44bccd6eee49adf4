//! Seeded generators for random stratified programs and module hierarchies.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmod::lang::{parse_facts, parse_rule, Dataset, Predicate, Rule};

pub struct RandomProgram {
    pub rules: Vec<Rule>,
    pub edb: Vec<Predicate>,
    pub data: Dataset,
    pub text: String,
}

#[derive(Clone)]
struct Pred {
    name: String,
    arity: usize,
    level: usize,
    edb: bool,
}

const VARS: [&str; 3] = ["X", "Y", "Z"];

fn constant(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..5) {
        0 => "a".into(),
        1 => "b".into(),
        n => (n - 2).to_string(),
    }
}

fn atom(rng: &mut ChaCha8Rng, p: &Pred, pool: &[String], const_ratio: f64) -> String {
    let args: Vec<String> = (0..p.arity)
        .map(|_| {
            if pool.is_empty() || rng.gen_bool(const_ratio) {
                constant(rng)
            } else {
                pool.choose(rng).unwrap().clone()
            }
        })
        .collect();
    if args.is_empty() {
        p.name.clone()
    } else {
        format!("{}({})", p.name, args.join(", "))
    }
}

/// A program with at most 6 predicates, 10 rules and 20 facts. Predicates get
/// levels; positive body atoms come from the same or lower levels and negated
/// ones from strictly lower levels, so every program is stratifiable.
pub fn random_program(seed: u64) -> RandomProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_preds = rng.gen_range(3..=6);
    let n_edb = rng.gen_range(1..=2);
    let preds: Vec<Pred> = (0..n_preds)
        .map(|i| {
            let edb = i < n_edb;
            Pred {
                name: format!("p{i}"),
                arity: rng.gen_range(if edb { 1..=2 } else { 0..=2 }),
                level: if edb { 0 } else { rng.gen_range(0..=2) },
                edb,
            }
        })
        .collect();
    let idb: Vec<&Pred> = preds.iter().filter(|p| !p.edb).collect();

    let mut rules_text = Vec::new();
    let n_rules = rng.gen_range(1..=10);
    for i in 0..n_rules {
        let head = *idb.choose(&mut rng).unwrap();
        let same_or_lower: Vec<&Pred> = preds.iter().filter(|p| p.level <= head.level).collect();
        let strictly_lower: Vec<&Pred> = preds.iter().filter(|p| p.level < head.level).collect();
        let recursive_ok = rng.gen_bool(0.7);
        let pos_pool: Vec<&Pred> = if recursive_ok {
            same_or_lower.clone()
        } else {
            preds
                .iter()
                .filter(|p| p.edb || p.level < head.level)
                .collect()
        };
        let mut body = Vec::new();
        let mut bound: BTreeSet<String> = BTreeSet::new();
        let vars: Vec<String> = VARS.iter().map(|v| v.to_string()).collect();
        for _ in 0..rng.gen_range(1..=3) {
            let p = *pos_pool.choose(&mut rng).unwrap();
            let text = atom(&mut rng, p, &vars, 0.2);
            for v in &vars {
                if text.contains(v.as_str()) {
                    bound.insert(v.clone());
                }
            }
            body.push(text);
        }
        let bound_vec: Vec<String> = bound.iter().cloned().collect();
        if !strictly_lower.is_empty() && rng.gen_bool(0.4) {
            let p = *strictly_lower.choose(&mut rng).unwrap();
            body.push(format!("not {}", atom(&mut rng, p, &bound_vec, 0.3)));
        }
        if !bound_vec.is_empty() && rng.gen_bool(0.3) {
            let op = ["<", "<=", ">", ">=", "=", "!="].choose(&mut rng).unwrap();
            let l = bound_vec.choose(&mut rng).unwrap().clone();
            let r = if rng.gen_bool(0.5) {
                bound_vec.choose(&mut rng).unwrap().clone()
            } else {
                constant(&mut rng)
            };
            body.push(format!("{l} {op} {r}"));
        }
        // arithmetic only where it cannot feed back into its own stratum
        let mut head_pool = bound_vec.clone();
        if !recursive_ok && !bound_vec.is_empty() && rng.gen_bool(0.3) {
            let l = bound_vec.choose(&mut rng).unwrap();
            let op = ["+", "-", "*"].choose(&mut rng).unwrap();
            body.push(format!("W = {l} {op} {}", rng.gen_range(1..3)));
            head_pool.push("W".into());
        }
        let h = atom(&mut rng, head, &head_pool, 0.1);
        rules_text.push(format!("r{i}: {h} :- {}.", body.join(", ")));
    }

    let edb: Vec<Predicate> = preds
        .iter()
        .filter(|p| p.edb)
        .map(|p| Predicate::new(p.name.clone(), p.arity))
        .collect();
    let mut facts = String::new();
    for p in preds.iter().filter(|p| p.edb) {
        facts.push_str(&format!("schema {}/{}.\n", p.name, p.arity));
    }
    let edb_preds: Vec<&Pred> = preds.iter().filter(|p| p.edb).collect();
    for _ in 0..rng.gen_range(0..=20) {
        let p = *edb_preds.choose(&mut rng).unwrap();
        facts.push_str(&format!("{}.\n", atom(&mut rng, p, &[], 1.0)));
    }
    let rules: Vec<Rule> = rules_text
        .iter()
        .map(|t| parse_rule(t).unwrap_or_else(|e| panic!("generated rule `{t}` failed: {e}")))
        .collect();
    let data = parse_facts("random", &facts).expect("generated facts parse");
    RandomProgram {
        rules,
        edb,
        data,
        text: format!("{}\n% facts\n{facts}", rules_text.join("\n")),
    }
}

use rmod::lang::Value;
use rmod::model::{resolve, Hierarchy, ModuleId, ResolvedModule, RuleModule};
use rmod::restrictions::Restriction;

pub struct RandomHierarchy {
    pub hierarchy: Hierarchy,
    /// Module ids in creation order; parents precede children.
    pub order: Vec<ModuleId>,
}

fn rule(text: &str) -> Rule {
    parse_rule(text).unwrap_or_else(|e| panic!("`{text}`: {e}"))
}

fn p1(name: &str) -> Predicate {
    Predicate::new(name, 1)
}

/// Restrictions that could be declared on a module with this interface.
fn candidates(rm: &ResolvedModule) -> Vec<Restriction> {
    let mut out = vec![
        Restriction::NoAdditionalInput,
        Restriction::NoAdditionalOutput,
    ];
    out.extend(rm.inputs.iter().cloned().map(Restriction::NonOmitableInput));
    for p in &rm.outputs {
        out.push(Restriction::NonOmitableOutput(p.clone()));
        out.push(Restriction::NonGrowable(p.clone()));
        out.push(Restriction::NonShrinkable(p.clone()));
    }
    out
}

/// A single tree of depth at most 5 and fanout at most 3. Every delta
/// respects the restrictions in force, so every edge is consistent.
pub fn random_hierarchy(seed: u64) -> RandomHierarchy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = Hierarchy::new();
    let mut root = RuleModule::new("M0", None);
    for k in 0..3 {
        root.inputs_added.insert(p1(&format!("i{k}")));
        root.outputs_added.insert(p1(&format!("o{k}")));
        root.add_rule(rule(&format!("Ro{k}: o{k}(X) :- i{k}(X).")));
    }
    h.insert(root).unwrap();
    add_restrictions(&mut rng, &mut h, &"M0".into());

    let mut order = vec![ModuleId::from("M0")];
    let mut frontier = vec![(ModuleId::from("M0"), 1usize)];
    while let Some((parent, depth)) = frontier.pop() {
        if depth >= 5 {
            continue;
        }
        for _ in 0..rng.gen_range(0..=3) {
            if order.len() >= 40 {
                break;
            }
            let id = format!("M{}", order.len());
            let prm = resolve(&h, &parent).unwrap();
            let mut m = RuleModule::new(id.clone(), Some(parent.as_str()));
            let r = &prm.restrictions;
            if !r.contains(&Restriction::NoAdditionalInput) && rng.gen_bool(0.4) {
                let input = p1(&format!("{}_in", id.to_lowercase()));
                m.inputs_added.insert(input);
                if !r.contains(&Restriction::NoAdditionalOutput) {
                    let out = format!("{}_out", id.to_lowercase());
                    m.outputs_added.insert(p1(&out));
                    m.add_rule(rule(&format!(
                        "R{id}: {out}(X) :- {}_in(X).",
                        id.to_lowercase()
                    )));
                }
            }
            if rng.gen_bool(0.3) {
                let removable: Vec<&Predicate> = prm
                    .outputs
                    .iter()
                    .filter(|p| r.iter().all(|x| x.predicate() != Some(*p)))
                    .collect();
                if let Some(p) = removable.choose(&mut rng) {
                    m.outputs_removed.insert((*p).clone());
                }
            }
            h.insert(m).unwrap();
            let mid = ModuleId::from(id.as_str());
            add_restrictions(&mut rng, &mut h, &mid);
            order.push(mid.clone());
            frontier.push((mid, depth + 1));
        }
    }
    RandomHierarchy {
        hierarchy: h,
        order,
    }
}

fn add_restrictions(rng: &mut ChaCha8Rng, h: &mut Hierarchy, id: &ModuleId) {
    let rm = resolve(h, id).unwrap();
    let cands = candidates(&rm);
    let n = rng.gen_range(0..=3);
    let picked: Vec<Restriction> = cands.choose_multiple(rng, n).cloned().collect();
    h.get_mut(id).unwrap().restrictions_added.extend(picked);
}

/// A child of `at` whose delta breaks `r`, which must be in force on `at`.
pub fn violating_child(h: &Hierarchy, at: &ModuleId, r: &Restriction) -> RuleModule {
    let rm = resolve(h, at).unwrap();
    let mut m = RuleModule::new(format!("{at}_bad"), Some(at.as_str()));
    match r {
        Restriction::NoAdditionalInput => {
            m.inputs_added.insert(p1("zz_in"));
        }
        Restriction::NoAdditionalOutput => {
            m.outputs_added.insert(p1("zz_out"));
            m.add_rule(rule("RZ: zz_out(X) :- i0(X)."));
        }
        Restriction::NonOmitableInput(p) => {
            m.inputs_removed.insert(p.clone());
        }
        Restriction::NonOmitableOutput(p) => {
            m.outputs_removed.insert(p.clone());
        }
        Restriction::NonGrowable(p) => {
            m.add_rule(rule(&format!("RZ: {}(zz) :- true.", p.name)));
        }
        Restriction::NonShrinkable(p) => {
            for (id, r) in &rm.rules {
                if r.head_predicates().contains(p) {
                    m.rules_removed.insert(id.clone());
                }
            }
            m.add_rule(rule(&format!("RZ: {}(X) :- i0(X), X != X.", p.name)));
        }
    }
    m
}

/// One dataset giving every input two facts.
pub fn full_dataset(inputs: &BTreeSet<Predicate>) -> Dataset {
    let mut ds = Dataset::new("full");
    for p in inputs {
        for v in ["a", "b"] {
            ds.insert(p.clone(), vec![Value::symbol(v)]).unwrap();
        }
    }
    ds
}
