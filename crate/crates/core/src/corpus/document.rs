//! The `.claw` document: a `[system]` section followed by repeated
//! `[symmetry]`, `[multiplier]`, `[current]` and `[expect]` blocks of
//! `key = value` lines. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::calculus::Context;
use crate::conslaw::Scaling;
use crate::error::{Error, Result};
use crate::kernel::{Expr, JetVar, ParamSpec, RatFunc, Q};
use crate::system::{Current, PdeSystem, Ranking};

use super::expr_parser::{parse_expr_at, Scope};

/// Parameter values under which an item or expectation applies.
pub type When = BTreeMap<String, RatFunc>;

#[derive(Clone, Debug, PartialEq)]
pub struct EquationDecl {
    pub name: String,
    pub expr: Expr,
    pub lead: JetVar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemDecl {
    pub name: String,
    pub ctx: Context,
    pub eqs: Vec<EquationDecl>,
    /// Explicit ranking as independent-variable indices, most significant first.
    pub ranking: Option<Vec<usize>>,
    pub scaling: Option<Scaling>,
}

/// A named symmetry characteristic or multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub name: String,
    pub comps: Vec<Expr>,
    pub when: When,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentItem {
    pub name: String,
    pub multiplier: Option<String>,
    pub current: Current,
    pub when: When,
}

/// An expectation: the check to run and its raw keys, kept in order.
/// Equality ignores the source line.
#[derive(Clone, Debug)]
pub struct Expect {
    pub line: usize,
    pub fields: Vec<(String, String)>,
}

impl PartialEq for Expect {
    fn eq(&self, other: &Self) -> bool {
        self.fields == other.fields
    }
}

impl Expect {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn check(&self) -> &str {
        self.get("check").unwrap_or("")
    }

    pub fn prefixed(&self, prefix: &str) -> Vec<(&str, &str)> {
        self.fields
            .iter()
            .filter_map(|(k, v)| k.strip_prefix(prefix).map(|rest| (rest, v.as_str())))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub system: SystemDecl,
    pub symmetries: Vec<Item>,
    pub multipliers: Vec<Item>,
    pub currents: Vec<CurrentItem>,
    pub expects: Vec<Expect>,
}

impl SystemDecl {
    pub fn build(&self) -> Result<PdeSystem> {
        let eqs = self.eqs.iter().map(|e| (e.name.clone(), e.expr.clone(), e.lead.clone())).collect();
        let ranking = self.ranking.clone().map(|priority| Ranking { priority });
        PdeSystem::new(&self.name, self.ctx.clone(), eqs, ranking)
    }
}

impl Document {
    pub fn symmetry(&self, name: &str) -> Result<&Item> {
        self.symmetries.iter().find(|i| i.name == name).ok_or_else(|| Error::UnknownSymbol(format!("symmetry {name}")))
    }

    pub fn multiplier(&self, name: &str) -> Result<&Item> {
        self.multipliers.iter().find(|i| i.name == name).ok_or_else(|| Error::UnknownSymbol(format!("multiplier {name}")))
    }

    pub fn current(&self, name: &str) -> Result<&CurrentItem> {
        self.currents.iter().find(|i| i.name == name).ok_or_else(|| Error::UnknownSymbol(format!("current {name}")))
    }
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    value: &'a str,
    col: usize,
}

fn perr<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::ParseError { line, col, msg: msg.into() })
}

fn unquote(v: &str) -> (&str, usize) {
    let t = v.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        (&t[1..t.len() - 1], 1)
    } else {
        (t, 0)
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_param(l: &Line) -> Result<ParamSpec> {
    let mut words = l.value.split_whitespace();
    let Some(name) = words.next() else { return perr(l.no, l.col, "missing parameter name") };
    let mut spec = ParamSpec { name: name.to_string(), nonzero: false, excluded: Vec::new() };
    let rest: Vec<&str> = words.collect();
    let mut i = 0;
    while i < rest.len() {
        match rest[i] {
            "nonzero" => spec.nonzero = true,
            "exclude" => {
                let list = rest[i + 1..].join(" ");
                for item in split_list(&list) {
                    let c = super::parse_constant(&item).map_err(|_| Error::ParseError {
                        line: l.no,
                        col: l.col,
                        msg: format!("bad excluded value {item:?}"),
                    })?;
                    spec.excluded.push(c.as_const().cloned().unwrap_or_default());
                }
                break;
            }
            w => return perr(l.no, l.col, format!("unknown parameter attribute {w:?}")),
        }
        i += 1;
    }
    Ok(spec)
}

fn parse_when(l: &Line, ctx: &Context) -> Result<When> {
    let mut out = When::new();
    for (name, v) in super::parse_assignments(l.value).map_err(|e| Error::ParseError { line: l.no, col: l.col, msg: e.to_string() })? {
        if ctx.param(&name).is_none() {
            return Err(Error::UnknownSymbol(name));
        }
        out.insert(name, v);
    }
    Ok(out)
}

fn expr(l: &Line, ctx: &Context) -> Result<Expr> {
    parse_expr_at(l.value, Scope::new(ctx), l.no, l.col)
}

fn parse_system(lines: &[Line]) -> Result<SystemDecl> {
    let mut name = None;
    let mut indeps: Vec<String> = Vec::new();
    let mut deps: Vec<String> = Vec::new();
    let mut params = Vec::new();
    let mut eq_src: Vec<(String, &Line)> = Vec::new();
    let mut lead_src: BTreeMap<String, &Line> = BTreeMap::new();
    let mut ranking_src = None;
    let mut scaling_src = None;
    for l in lines {
        match l.key {
            "name" => name = Some(l.value.to_string()),
            "indep" => indeps = split_list(l.value),
            "dep" => deps = split_list(l.value),
            "param" => params.push(parse_param(l)?),
            "ranking" => ranking_src = Some(l),
            "scaling" => scaling_src = Some(l),
            k => {
                if let Some(id) = k.strip_prefix("eq.") {
                    if eq_src.iter().any(|(n, _)| n == id) {
                        return perr(l.no, 1, format!("duplicate equation {id}"));
                    }
                    eq_src.push((id.to_string(), l));
                } else if let Some(id) = k.strip_prefix("lead.") {
                    lead_src.insert(id.to_string(), l);
                } else {
                    return perr(l.no, 1, format!("unknown system key {k:?}"));
                }
            }
        }
    }
    let Some(name) = name else { return perr(1, 1, "system has no name") };
    if indeps.is_empty() || deps.is_empty() {
        return perr(1, 1, "system needs indep and dep declarations");
    }
    let ir: Vec<&str> = indeps.iter().map(String::as_str).collect();
    let dr: Vec<&str> = deps.iter().map(String::as_str).collect();
    let mut ctx = Context::new(&ir, &dr);
    ctx.params = params;
    let mut eqs = Vec::new();
    for (id, l) in &eq_src {
        let e = expr(l, &ctx)?;
        let Some(ll) = lead_src.remove(id) else { return perr(l.no, 1, format!("equation {id} has no lead")) };
        let lead = match expr(ll, &ctx)?.terms() {
            [t] if t.coeff.is_one() => match t.mono.factors() {
                [(crate::kernel::Atom::Jet(j), e)] if e.is_one() => j.clone(),
                _ => return perr(ll.no, ll.col, "lead must be a jet variable"),
            },
            _ => return perr(ll.no, ll.col, "lead must be a jet variable"),
        };
        eqs.push(EquationDecl { name: id.clone(), expr: e, lead });
    }
    if let Some((id, l)) = lead_src.into_iter().next() {
        return perr(l.no, 1, format!("lead for unknown equation {id}"));
    }
    let ranking = match ranking_src {
        None => None,
        Some(l) => {
            let mut pr = Vec::new();
            for n in split_list(l.value) {
                match ctx.indep_index(&n) {
                    Some(i) if !pr.contains(&i) => pr.push(i),
                    _ => return perr(l.no, l.col, format!("bad ranking variable {n:?}")),
                }
            }
            if pr.len() != ctx.n_indep() {
                return perr(l.no, l.col, "ranking must list every independent variable");
            }
            Some(pr)
        }
    };
    let scaling = match scaling_src {
        None => None,
        Some(l) => Some(parse_scaling(l, &ctx)?),
    };
    Ok(SystemDecl { name, ctx, eqs, ranking, scaling })
}

fn parse_scaling(l: &Line, ctx: &Context) -> Result<Scaling> {
    let mut indep = vec![None; ctx.n_indep()];
    let mut dep = vec![None; ctx.n_dep()];
    for part in split_list(l.value) {
        let Some((n, w)) = part.split_once(':') else { return perr(l.no, l.col, format!("expected var:weight, got {part:?}")) };
        let w = parse_expr_at(w.trim(), Scope::new(ctx), l.no, l.col)?
            .as_constant()
            .ok_or_else(|| Error::ParseError { line: l.no, col: l.col, msg: "scaling weight must be constant".into() })?;
        let n = n.trim();
        if let Some(i) = ctx.indep_index(n) {
            indep[i] = Some(w);
        } else if let Some(a) = ctx.dep_index(n) {
            dep[a] = Some(w);
        } else {
            return Err(Error::UnknownSymbol(n.to_string()));
        }
    }
    let indep: Option<Vec<RatFunc>> = indep.into_iter().collect();
    let dep: Option<Vec<RatFunc>> = dep.into_iter().collect();
    match (indep, dep) {
        (Some(mut i), Some(d)) => {
            let time = i.remove(0);
            Ok(Scaling { time, space: i, dep: d })
        }
        _ => perr(l.no, l.col, "scaling must give a weight for every variable"),
    }
}

fn parse_item(lines: &[Line], decl: &SystemDecl, multiplier: bool, header: usize) -> Result<Item> {
    let ctx = &decl.ctx;
    let (prefix, slots): (&str, Vec<String>) = if multiplier {
        ("Q.", decl.eqs.iter().map(|e| e.name.clone()).collect())
    } else {
        ("P.", ctx.deps.clone())
    };
    let mut name = None;
    let mut when = When::new();
    let mut comps = vec![Expr::zero(); slots.len()];
    for l in lines {
        if l.key == "name" {
            name = Some(l.value.to_string());
        } else if l.key == "when" {
            when = parse_when(l, ctx)?;
        } else if let Some(slot) = l.key.strip_prefix(prefix) {
            let Some(i) = slots.iter().position(|s| s == slot) else {
                return perr(l.no, 1, format!("unknown component {slot:?}"));
            };
            comps[i] = expr(l, ctx)?;
        } else {
            return perr(l.no, 1, format!("unknown key {:?}", l.key));
        }
    }
    let Some(name) = name else { return perr(header, 1, "block has no name") };
    Ok(Item { name, comps, when })
}

fn parse_current(lines: &[Line], decl: &SystemDecl, header: usize) -> Result<CurrentItem> {
    let ctx = &decl.ctx;
    let mut name = None;
    let mut multiplier = None;
    let mut when = When::new();
    let mut cur = Current::zero(ctx.n_spatial());
    for l in lines {
        match l.key {
            "name" => name = Some(l.value.to_string()),
            "multiplier" => multiplier = Some(l.value.to_string()),
            "when" => when = parse_when(l, ctx)?,
            "T" => cur.density = expr(l, ctx)?,
            k => {
                let Some(v) = k.strip_prefix("X.").and_then(|v| ctx.indep_index(v)).filter(|&i| i > 0) else {
                    return perr(l.no, 1, format!("unknown key {k:?}"));
                };
                cur.flux[v - 1] = expr(l, ctx)?;
            }
        }
    }
    let Some(name) = name else { return perr(header, 1, "block has no name") };
    Ok(CurrentItem { name, multiplier, current: cur, when })
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut sections: Vec<(String, usize, Vec<Line>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(h) = trimmed.strip_prefix('[') {
            let Some(h) = h.strip_suffix(']') else { return perr(no, 1, "unterminated section header") };
            sections.push((h.trim().to_string(), no, Vec::new()));
            continue;
        }
        let Some(eqpos) = content.find('=') else { return perr(no, 1, "expected key = value") };
        let key = content[..eqpos].trim();
        let after = &content[eqpos + 1..];
        let lead_ws = after.len() - after.trim_start().len();
        let (value, q) = unquote(after);
        let col = eqpos + 2 + lead_ws + q;
        let Some(sec) = sections.last_mut() else { return perr(no, 1, "key outside a section") };
        sec.2.push(Line { no, key, value, col });
    }
    let mut it = sections.iter();
    let Some((first, _, sys_lines)) = it.next() else { return perr(1, 1, "empty document") };
    if first != "system" {
        return perr(1, 1, "document must start with [system]");
    }
    let system = parse_system(sys_lines)?;
    system.build()?;
    let mut doc = Document { system, symmetries: Vec::new(), multipliers: Vec::new(), currents: Vec::new(), expects: Vec::new() };
    for (kind, no, lines) in it {
        match kind.as_str() {
            "symmetry" => {
                let item = parse_item(lines, &doc.system, false, *no)?;
                if doc.symmetries.iter().any(|s| s.name == item.name) {
                    return perr(*no, 1, format!("duplicate symmetry {}", item.name));
                }
                doc.symmetries.push(item);
            }
            "multiplier" => {
                let item = parse_item(lines, &doc.system, true, *no)?;
                if doc.multipliers.iter().any(|s| s.name == item.name) {
                    return perr(*no, 1, format!("duplicate multiplier {}", item.name));
                }
                doc.multipliers.push(item);
            }
            "current" => {
                let item = parse_current(lines, &doc.system, *no)?;
                if doc.currents.iter().any(|s| s.name == item.name) {
                    return perr(*no, 1, format!("duplicate current {}", item.name));
                }
                doc.currents.push(item);
            }
            "expect" => {
                let fields: Vec<(String, String)> = lines.iter().map(|l| (l.key.to_string(), l.value.to_string())).collect();
                let e = Expect { line: *no, fields };
                if e.get("check").is_none() {
                    return perr(*no, 1, "expectation has no check");
                }
                doc.expects.push(e);
            }
            other => return perr(*no, 1, format!("unknown section [{other}]")),
        }
    }
    for c in &doc.currents {
        if let Some(m) = &c.multiplier {
            doc.multiplier(m)?;
        }
    }
    Ok(doc)
}

fn fmt_q(c: &Q) -> String {
    RatFunc::constant(c.clone()).to_string()
}

fn fmt_when(w: &When) -> String {
    w.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// Canonical text of a document; parsing it gives the same document.
pub fn print_document(doc: &Document) -> String {
    let s = &doc.system;
    let ctx = &s.ctx;
    let mut out = String::new();
    let _ = writeln!(out, "[system]");
    let _ = writeln!(out, "name = {}", s.name);
    let _ = writeln!(out, "indep = {}", ctx.indeps.join(", "));
    let _ = writeln!(out, "dep = {}", ctx.deps.join(", "));
    for p in &ctx.params {
        let mut line = format!("param = {}", p.name);
        if p.nonzero {
            line.push_str(" nonzero");
        }
        if !p.excluded.is_empty() {
            let ex: Vec<String> = p.excluded.iter().map(fmt_q).collect();
            let _ = write!(line, " exclude {}", ex.join(", "));
        }
        let _ = writeln!(out, "{line}");
    }
    for e in &s.eqs {
        let _ = writeln!(out, "eq.{} = {}", e.name, e.expr.display(ctx));
        let _ = writeln!(out, "lead.{} = {}", e.name, Expr::jet(e.lead.clone()).display(ctx));
    }
    if let Some(r) = &s.ranking {
        let names: Vec<&str> = r.iter().map(|&i| ctx.indeps[i].as_str()).collect();
        let _ = writeln!(out, "ranking = {}", names.join(", "));
    }
    if let Some(sc) = &s.scaling {
        let mut parts = vec![format!("{}:{}", ctx.indeps[0], sc.time)];
        for (i, w) in sc.space.iter().enumerate() {
            parts.push(format!("{}:{}", ctx.indeps[i + 1], w));
        }
        for (a, w) in sc.dep.iter().enumerate() {
            parts.push(format!("{}:{}", ctx.deps[a], w));
        }
        let _ = writeln!(out, "scaling = {}", parts.join(", "));
    }
    let item = |out: &mut String, header: &str, prefix: &str, slots: &[String], it: &Item| {
        let _ = writeln!(out, "\n[{header}]");
        let _ = writeln!(out, "name = {}", it.name);
        if !it.when.is_empty() {
            let _ = writeln!(out, "when = {}", fmt_when(&it.when));
        }
        for (slot, c) in slots.iter().zip(&it.comps) {
            if !c.is_zero() {
                let _ = writeln!(out, "{prefix}{slot} = {}", c.display(ctx));
            }
        }
    };
    let eq_names: Vec<String> = s.eqs.iter().map(|e| e.name.clone()).collect();
    for it in &doc.symmetries {
        item(&mut out, "symmetry", "P.", &ctx.deps, it);
    }
    for it in &doc.multipliers {
        item(&mut out, "multiplier", "Q.", &eq_names, it);
    }
    for c in &doc.currents {
        let _ = writeln!(out, "\n[current]");
        let _ = writeln!(out, "name = {}", c.name);
        if let Some(m) = &c.multiplier {
            let _ = writeln!(out, "multiplier = {m}");
        }
        if !c.when.is_empty() {
            let _ = writeln!(out, "when = {}", fmt_when(&c.when));
        }
        let _ = writeln!(out, "T = {}", c.current.density.display(ctx));
        for (i, x) in c.current.flux.iter().enumerate() {
            let _ = writeln!(out, "X.{} = {}", ctx.indeps[i + 1], x.display(ctx));
        }
    }
    for e in &doc.expects {
        let _ = writeln!(out, "\n[expect]");
        for (k, v) in &e.fields {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    out
}
