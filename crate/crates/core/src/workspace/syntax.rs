//! Module files.
//!
//! ```text
//! file     := module*
//! module   := 'module' ID ('extends' ID)? '{' section* '}'
//! section  := ('input' | 'output') '{' (('add' | 'remove') pred (',' pred)* ';')* '}'
//!           | 'restrict' '{' (restriction ';')* '}'
//!           | 'rules' '{' ('add'? rule ';'? | 'remove' 'rule'? ID (',' ID)* ';')* '}'
//!           | 'intent' '{' (class '(' pred ')' ';')* '}'
//! pred     := name '/' arity
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::behavior::ChangeClass;
use crate::lang::lexer::Tok;
use crate::lang::parser::Cursor;
use crate::lang::{ParseError, Pos, Predicate, RuleId};
use crate::model::{ModuleId, ResolvedModule, RuleModule, Side};
use crate::restrictions::Restriction;

/// Source positions of the items in one module declaration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ModuleSpans {
    pub module: Pos,
    pub rules: BTreeMap<RuleId, Pos>,
    pub removed_rules: BTreeMap<RuleId, Pos>,
    pub interface: BTreeMap<(Side, Predicate), Pos>,
    pub restrictions: BTreeMap<Restriction, Pos>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedModule {
    pub module: RuleModule,
    pub spans: ModuleSpans,
}

fn module_decl(c: &mut Cursor) -> Result<ParsedModule, ParseError> {
    let start = c.expect_keyword("module")?;
    let (id, _) = c.expect_ident("module name")?;
    let parent = if c.eat_keyword("extends") {
        Some(c.expect_ident("parent module name")?.0)
    } else {
        None
    };
    let mut m = RuleModule::new(id, parent.as_deref());
    let mut spans = ModuleSpans {
        module: start,
        ..Default::default()
    };
    c.expect_punct("{")?;
    while !c.eat_punct("}") {
        let (section, pos) =
            c.expect_ident("section (`input`, `output`, `restrict`, `rules` or `intent`)")?;
        c.expect_punct("{")?;
        match section.as_str() {
            "input" => parse_interface(c, &mut m, &mut spans, Side::Input)?,
            "output" => parse_interface(c, &mut m, &mut spans, Side::Output)?,
            "restrict" => parse_restrictions(c, &mut m, &mut spans)?,
            "rules" => parse_rule_section(c, &mut m, &mut spans)?,
            "intent" => parse_intent(c, &mut m)?,
            other => {
                return Err(ParseError::syntax(
                    pos,
                    format!("unknown section `{other}`"),
                ))
            }
        }
    }
    Ok(ParsedModule { module: m, spans })
}

fn parse_interface(
    c: &mut Cursor,
    m: &mut RuleModule,
    spans: &mut ModuleSpans,
    side: Side,
) -> Result<(), ParseError> {
    while !c.eat_punct("}") {
        let adding = if c.eat_keyword("add") {
            true
        } else if c.eat_keyword("remove") {
            false
        } else {
            return Err(c.unexpected("`add`, `remove` or `}`"));
        };
        loop {
            let (p, pos) = c.parse_predicate_ref()?;
            let set = if adding {
                m.added_mut(side)
            } else {
                m.removed_mut(side)
            };
            if !set.insert(p.clone()) {
                return Err(ParseError::syntax(pos, format!("{side} {p} listed twice")));
            }
            spans.interface.entry((side, p)).or_insert(pos);
            if !c.eat_punct(",") {
                break;
            }
        }
        c.expect_punct(";")?;
    }
    Ok(())
}

fn parse_restrictions(
    c: &mut Cursor,
    m: &mut RuleModule,
    spans: &mut ModuleSpans,
) -> Result<(), ParseError> {
    while !c.eat_punct("}") {
        let (kw, pos) = c.expect_ident("restriction")?;
        if !Restriction::KEYWORDS.contains(&kw.as_str()) {
            return Err(ParseError::syntax(
                pos,
                format!(
                    "unknown restriction `{kw}` (expected one of {})",
                    Restriction::KEYWORDS.join(", ")
                ),
            ));
        }
        let target = if Restriction::takes_target(&kw) {
            c.expect_punct("(")?;
            let (p, _) = c.parse_predicate_ref()?;
            c.expect_punct(")")?;
            Some(p)
        } else {
            None
        };
        let r = Restriction::from_parts(&kw, target).expect("keyword and target checked");
        spans.restrictions.entry(r.clone()).or_insert(pos);
        m.restrictions_added.insert(r);
        c.expect_punct(";")?;
    }
    Ok(())
}

fn parse_rule_section(
    c: &mut Cursor,
    m: &mut RuleModule,
    spans: &mut ModuleSpans,
) -> Result<(), ParseError> {
    while !c.eat_punct("}") {
        if c.is_keyword("remove") && !matches!(c.peek_at(1), Tok::Punct(":")) {
            c.bump();
            if c.is_keyword("rule") && matches!(c.peek_at(1), Tok::Ident(_)) {
                c.bump();
            }
            loop {
                let (id, pos) = c.expect_ident("rule identifier")?;
                let id = RuleId(id);
                if !m.rules_removed.insert(id.clone()) {
                    return Err(ParseError::syntax(pos, format!("rule {id} removed twice")));
                }
                spans.removed_rules.insert(id, pos);
                if !c.eat_punct(",") {
                    break;
                }
            }
            c.expect_punct(";")?;
            continue;
        }
        if c.is_keyword("add") && !matches!(c.peek_at(1), Tok::Punct(":")) {
            c.bump();
        }
        let (rule, pos) = c.parse_rule()?;
        let id = rule.id().clone();
        if !m.add_rule(rule) {
            return Err(ParseError::syntax(
                pos,
                format!("rule {id} added twice in module {}", m.id),
            ));
        }
        spans.rules.insert(id, pos);
        c.eat_punct(";");
    }
    Ok(())
}

fn parse_intent(c: &mut Cursor, m: &mut RuleModule) -> Result<(), ParseError> {
    while !c.eat_punct("}") {
        let (kw, pos) = c.expect_ident("change class")?;
        let class: ChangeClass = kw.parse().map_err(|e: String| ParseError::syntax(pos, e))?;
        c.expect_punct("(")?;
        let (p, _) = c.parse_predicate_ref()?;
        c.expect_punct(")")?;
        c.expect_punct(";")?;
        m.declared_changes.insert(p, class);
    }
    Ok(())
}

/// Parses every module declared in a module file.
pub fn parse_module_file(text: &str) -> Result<Vec<ParsedModule>, ParseError> {
    let mut c = Cursor::new(text)?;
    let mut out = Vec::new();
    while !c.at_eof() {
        out.push(module_decl(&mut c)?);
    }
    Ok(out)
}

/// Parses a file that must hold exactly one module.
pub fn parse_module(text: &str) -> Result<RuleModule, ParseError> {
    let mut c = Cursor::new(text)?;
    let m = module_decl(&mut c)?;
    if !c.at_eof() {
        return Err(c.unexpected("end of input"));
    }
    Ok(m.module)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_interface(out: &mut String, side: Side, added: &[&Predicate], removed: &[&Predicate]) {
    if added.is_empty() && removed.is_empty() {
        return;
    }
    let _ = writeln!(out, "  {side} {{");
    if !added.is_empty() {
        let _ = writeln!(out, "    add {};", join(added));
    }
    if !removed.is_empty() {
        let _ = writeln!(out, "    remove {};", join(removed));
    }
    out.push_str("  }\n");
}

fn header(id: &ModuleId, parent: Option<&ModuleId>) -> String {
    match parent {
        Some(p) => format!("module {id} extends {p} {{\n"),
        None => format!("module {id} {{\n"),
    }
}

fn render_restrictions<'a>(out: &mut String, rs: impl IntoIterator<Item = &'a Restriction>) {
    let rs: Vec<_> = rs.into_iter().collect();
    if rs.is_empty() {
        return;
    }
    out.push_str("  restrict {\n");
    for r in rs {
        let _ = writeln!(out, "    {r};");
    }
    out.push_str("  }\n");
}

/// Renders a module in delta form; parsing the result yields the same module.
pub fn render_module(m: &RuleModule) -> String {
    let mut out = header(&m.id, m.parent.as_ref());
    for side in [Side::Input, Side::Output] {
        let added: Vec<_> = m.added(side).iter().collect();
        let removed: Vec<_> = m.removed(side).iter().collect();
        render_interface(&mut out, side, &added, &removed);
    }
    render_restrictions(&mut out, &m.restrictions_added);
    if !m.rules_added.is_empty() || !m.rules_removed.is_empty() {
        out.push_str("  rules {\n");
        if !m.rules_removed.is_empty() {
            let _ = writeln!(out, "    remove {};", join(&m.rules_removed));
        }
        for r in m.rules_added.values() {
            let _ = writeln!(out, "    add {r}");
        }
        out.push_str("  }\n");
    }
    if !m.declared_changes.is_empty() {
        out.push_str("  intent {\n");
        for (p, class) in &m.declared_changes {
            let _ = writeln!(out, "    {class}({p});");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

/// Renders the flattened form of a resolved module as a standalone root module,
/// preceded by comments naming its parent and abstract predicates.
pub fn render_resolved(rm: &ResolvedModule) -> String {
    let mut out = String::new();
    if let Some(p) = &rm.parent {
        let _ = writeln!(out, "% resolved from {} extends {p}", rm.id);
    }
    if rm.is_abstract() {
        let _ = writeln!(out, "% abstract: {}", join(&rm.abstract_predicates));
    }
    out.push_str(&header(&rm.id, None));
    for side in [Side::Input, Side::Output] {
        let added: Vec<_> = rm.interface(side).iter().collect();
        render_interface(&mut out, side, &added, &[]);
    }
    render_restrictions(&mut out, &rm.restrictions);
    if !rm.rules.is_empty() {
        out.push_str("  rules {\n");
        for r in rm.rules.values() {
            let _ = writeln!(out, "    {r}");
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}
