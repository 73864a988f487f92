//! Evaluation of documents: named-item lookups under parameter values, the
//! computations behind each CLI command, and the `[expect]` checks.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::conslaw::{
    check_adjoint_symmetry, check_helmholtz, check_multiplier, current_scale, currents_equivalent, extract_multiplier, is_trivial,
    multiplier_operator, multiplier_scale, scaling_reconstruct, symmetry_operator, verify_current, Reconstruction, Scaling,
};
use crate::error::{Error, Result};
use crate::kernel::{Expr, RatFunc, Verdict, ZeroTest, ZeroVerdict};
use crate::symaction::{
    action_matrix, bilinear_system, check_symmetry, invariance_check, solve_linear_ansatz, ActionMatrix, AnsatzKind, BilinearSystem,
    Invariance, LAMBDA,
};
use crate::system::{Current, GOperator, PdeSystem};

use super::document::{Document, Expect, When};
use super::expr_parser::{parse_expr_at, parse_operator, Scope};

/// One line of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub name: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
}

impl Outcome {
    pub fn new(name: impl Into<String>, verdict: Verdict) -> Self {
        Outcome { name: name.into(), verdict: verdict.to_string(), lambda: None, details: None }
    }

    pub fn with_lambda(mut self, l: impl Into<String>) -> Self {
        self.lambda = Some(l.into());
        self
    }

    pub fn with_details(mut self, d: impl Into<String>) -> Self {
        self.details = Some(d.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass.to_string()
    }
}

/// Which determining equation a named item is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    Symmetry,
    Multiplier,
    Adjoint,
    Helmholtz,
    Current,
}

impl CheckKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "symmetry" => CheckKind::Symmetry,
            "multiplier" => CheckKind::Multiplier,
            "adjoint" => CheckKind::Adjoint,
            "helmholtz" => CheckKind::Helmholtz,
            "current" => CheckKind::Current,
            _ => return None,
        })
    }
}

pub fn format_when(w: &When) -> String {
    w.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", ")
}

/// A document specialized to parameter values.
pub struct Session<'d> {
    pub doc: &'d Document,
    pub vals: When,
    pub sys: PdeSystem,
}

impl<'d> Session<'d> {
    pub fn new(doc: &'d Document, vals: &When, zt: &ZeroTest) -> Result<Self> {
        let sys = doc.system.build()?.with_zero_test(zt.clone());
        let map: HashMap<String, RatFunc> = vals.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let sys = sys.specialize(&map)?;
        Ok(Session { doc, vals: vals.clone(), sys })
    }

    fn map(&self) -> HashMap<String, RatFunc> {
        self.vals.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    fn applies(&self, when: &When) -> bool {
        when.iter().all(|(k, v)| self.vals.get(k) == Some(v))
    }

    fn require(&self, kind: &str, name: &str, when: &When) -> Result<()> {
        if self.applies(when) {
            Ok(())
        } else {
            Err(Error::InconsistentAssumptions(format!("{kind} {name} requires {}", format_when(when))))
        }
    }

    pub fn subst(&self, e: &Expr) -> Result<Expr> {
        e.try_subst_params(&self.map())
    }

    pub fn subst_rf(&self, r: &RatFunc) -> Result<RatFunc> {
        r.try_subst(&|s| self.vals.get(s).cloned())
            .ok_or_else(|| Error::DomainError(format!("pole at {}", format_when(&self.vals))))
    }

    pub fn symmetry(&self, name: &str) -> Result<Vec<Expr>> {
        let it = self.doc.symmetry(name)?;
        self.require("symmetry", name, &it.when)?;
        it.comps.iter().map(|e| self.subst(e)).collect()
    }

    pub fn multiplier(&self, name: &str) -> Result<Vec<Expr>> {
        let it = self.doc.multiplier(name)?;
        self.require("multiplier", name, &it.when)?;
        it.comps.iter().map(|e| self.subst(e)).collect()
    }

    pub fn current(&self, name: &str) -> Result<Current> {
        let it = self.doc.current(name)?;
        self.require("current", name, &it.when)?;
        let comps: Vec<Expr> = it.current.components().iter().map(|e| self.subst(e)).collect::<Result<_>>()?;
        Ok(Current::from_components(comps))
    }

    /// Named symmetries, or every symmetry valid under the session values.
    pub fn symmetries(&self, names: Option<&[String]>) -> Result<Vec<(String, Vec<Expr>)>> {
        match names {
            Some(ns) => ns.iter().map(|n| Ok((n.clone(), self.symmetry(n)?))).collect(),
            None => Ok(self.doc.symmetries.iter().filter(|i| self.applies(&i.when)).filter_map(|i| self.symmetry(&i.name).ok().map(|c| (i.name.clone(), c))).collect()),
        }
    }

    pub fn multipliers(&self, names: Option<&[String]>) -> Result<Vec<(String, Vec<Expr>)>> {
        match names {
            Some(ns) => ns.iter().map(|n| Ok((n.clone(), self.multiplier(n)?))).collect(),
            None => Ok(self.doc.multipliers.iter().filter(|i| self.applies(&i.when)).filter_map(|i| self.multiplier(&i.name).ok().map(|c| (i.name.clone(), c))).collect()),
        }
    }

    /// Names of the items of one section usable under the session values.
    pub fn applicable(&self, kind: CheckKind) -> Vec<String> {
        let names: Vec<(&str, &When)> = match kind {
            CheckKind::Current => self.doc.currents.iter().map(|i| (i.name.as_str(), &i.when)).collect(),
            CheckKind::Symmetry => self.doc.symmetries.iter().map(|i| (i.name.as_str(), &i.when)).collect(),
            _ => self.doc.multipliers.iter().map(|i| (i.name.as_str(), &i.when)).collect(),
        };
        names
            .into_iter()
            .filter(|(n, w)| {
                self.applies(w)
                    && match kind {
                        CheckKind::Current => self.current(n).is_ok(),
                        CheckKind::Symmetry => self.symmetry(n).is_ok(),
                        _ => self.multiplier(n).is_ok(),
                    }
            })
            .map(|(n, _)| n.to_string())
            .collect()
    }

    pub fn scaling(&self) -> Result<Scaling> {
        let s = self.doc.system.scaling.as_ref().ok_or_else(|| Error::Usage(format!("system {} declares no scaling", self.doc.system.name)))?;
        Ok(Scaling {
            time: self.subst_rf(&s.time)?,
            space: s.space.iter().map(|w| self.subst_rf(w)).collect::<Result<_>>()?,
            dep: s.dep.iter().map(|w| self.subst_rf(w)).collect::<Result<_>>()?,
        })
    }

    /// Parse a jet expression written against the document's declarations.
    pub fn parse(&self, src: &str, line: usize) -> Result<Expr> {
        self.subst(&parse_expr_at(src, Scope::new(&self.doc.system.ctx), line, 1)?)
    }

    /// Parse a parameter-field expression that may use the extra symbols.
    pub fn parse_form(&self, src: &str, extra: &[String], line: usize) -> Result<RatFunc> {
        let scope = Scope { ctx: &self.doc.system.ctx, extra, op_column: None };
        let e = parse_expr_at(src, scope, line, 1)?;
        let c = e.as_constant().ok_or_else(|| Error::ParseError { line, col: 1, msg: format!("{src:?} is not free of jet variables") })?;
        self.subst_rf(&c)
    }

    pub fn check(&self, kind: CheckKind, name: &str) -> Result<Verdict> {
        match kind {
            CheckKind::Symmetry => check_symmetry(&self.sys, &self.symmetry(name)?),
            CheckKind::Multiplier => check_multiplier(&self.sys, &self.multiplier(name)?),
            CheckKind::Adjoint => check_adjoint_symmetry(&self.sys, &self.multiplier(name)?),
            CheckKind::Helmholtz => check_helmholtz(&self.sys, &self.multiplier(name)?),
            CheckKind::Current => Ok(self.check_current(name)?.0),
        }
    }

    /// Like [`Session::check`] for a multiplier given explicitly.
    pub fn check_inline(&self, kind: CheckKind, q: &[Expr]) -> Result<Verdict> {
        match kind {
            CheckKind::Multiplier => check_multiplier(&self.sys, q),
            CheckKind::Adjoint => check_adjoint_symmetry(&self.sys, q),
            CheckKind::Helmholtz => check_helmholtz(&self.sys, q),
            CheckKind::Symmetry => check_symmetry(&self.sys, q),
            CheckKind::Current => Err(Error::Usage("currents are checked by name".into())),
        }
    }

    /// Conservation of a named current after gauge correction, and the
    /// scale relating its extracted multiplier to the one it names.
    pub fn check_current(&self, name: &str) -> Result<(Verdict, Option<RatFunc>)> {
        let phi = self.current(name)?;
        let ex = extract_multiplier(&self.sys, &phi)?;
        let v = verify_current(&self.sys, &ex.current, Some(&ex.multiplier))?;
        let scale = match &self.doc.current(name)?.multiplier {
            Some(m) => {
                let q = self.multiplier(m)?;
                let s = multiplier_scale(&self.sys, &ex.multiplier, &q)?;
                if s.is_none() {
                    return Ok((Verdict::Fail, None));
                }
                s
            }
            None => None,
        };
        Ok((v, scale))
    }

    /// `R_P` (rows per equation) or `R_Q` (rows per dependent variable) with
    /// their row labels.
    pub fn rop(&self, symmetry: bool, name: &str) -> Result<(Vec<String>, Vec<GOperator>)> {
        if symmetry {
            let rows = symmetry_operator(&self.sys, &self.symmetry(name)?)?;
            Ok((self.sys.eqs.iter().map(|e| e.name.clone()).collect(), rows))
        } else {
            let rows = multiplier_operator(&self.sys, &self.multiplier(name)?)?;
            Ok((self.sys.ctx.deps.clone(), rows))
        }
    }

    pub fn format_rop(&self, labels: &[String], rows: &[GOperator]) -> Vec<String> {
        let mut out = Vec::new();
        for (label, row) in labels.iter().zip(rows) {
            for (c, eq) in self.sys.eqs.iter().enumerate() {
                out.push(format!("R[{label},{}] = {}", eq.name, row.display_column(c, &self.sys.ctx)));
            }
        }
        out
    }

    pub fn invariance(&self, sym: &str, mult: &str) -> Result<Invariance> {
        invariance_check(&self.sys, &self.symmetry(sym)?, &self.multiplier(mult)?)
    }

    pub fn bilinear(&self, syms: Option<&[String]>, mults: Option<&[String]>) -> Result<BilinearSystem> {
        bilinear_system(&self.sys, &self.symmetries(syms)?, &self.multipliers(mults)?)
    }

    pub fn action_matrix(&self, sym: &str, mults: Option<&[String]>) -> Result<ActionMatrix> {
        let qs: Vec<Vec<Expr>> = self.multipliers(mults)?.into_iter().map(|(_, q)| q).collect();
        action_matrix(&self.sys, &self.symmetry(sym)?, &qs)
    }

    pub fn reconstruct(&self, mult: &str) -> Result<Reconstruction> {
        scaling_reconstruct(&self.sys, &self.multiplier(mult)?, &self.scaling()?)
    }

    /// Basis elements separated by `;`, components of one element by `,`.
    pub fn parse_basis(&self, src: &str, width: usize, line: usize) -> Result<Vec<Vec<Expr>>> {
        src.split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|el| {
                let comps: Vec<Expr> = el.split(',').map(|c| self.parse(c.trim(), line)).collect::<Result<_>>()?;
                if comps.len() != width {
                    return Err(Error::ParseError { line, col: 1, msg: format!("basis element {el:?} needs {width} components") });
                }
                Ok(comps)
            })
            .collect()
    }

    pub fn ansatz(&self, kind: AnsatzKind, basis: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>> {
        solve_linear_ansatz(&self.sys, basis, kind)
    }

    pub fn display(&self, e: &Expr) -> String {
        e.display(&self.sys.ctx).to_string()
    }

    pub fn display_vec(&self, v: &[Expr]) -> String {
        if v.len() == 1 {
            self.display(&v[0])
        } else {
            format!("({})", v.iter().map(|e| self.display(e)).collect::<Vec<_>>().join(", "))
        }
    }
}

pub fn split_names(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn want_verdict(e: &Expect) -> Result<Verdict> {
    match e.get("verdict").unwrap_or("pass").to_ascii_lowercase().as_str() {
        "pass" => Ok(Verdict::Pass),
        "fail" => Ok(Verdict::Fail),
        "inconclusive" => Ok(Verdict::Inconclusive),
        v => Err(Error::Usage(format!("unknown verdict {v:?}"))),
    }
}

fn required<'a>(e: &'a Expect, key: &str) -> Result<&'a str> {
    e.get(key).ok_or_else(|| Error::ParseError { line: e.line, col: 1, msg: format!("expectation needs `{key}`") })
}

/// Result of a computed verdict against the expected one.
fn compare(got: Verdict, want: Verdict) -> Verdict {
    if got == want {
        Verdict::Pass
    } else if got == Verdict::Inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::Fail
    }
}

fn zero_on_solutions(sys: &PdeSystem, e: &Expr) -> Result<ZeroVerdict> {
    sys.zt.is_zero(&sys.reduce_on_solutions(e)?)
}

/// Compare every entry of an operator matrix with the expected entries.
fn compare_rop(s: &Session, e: &Expect, labels: &[String], rows: &[GOperator]) -> Result<Verdict> {
    let ctx = &s.doc.system.ctx;
    let eqs = &s.doc.system.eqs;
    let mut expected: BTreeMap<(usize, usize), GOperator> = BTreeMap::new();
    for (key, src) in e.prefixed("R") {
        if key.is_empty() && src.trim() == "0" {
            continue;
        }
        let (r, c) = if key.is_empty() {
            if labels.len() != 1 || eqs.len() != 1 {
                return Err(Error::Usage("`R` without indices needs a scalar operator".into()));
            }
            (0, 0)
        } else {
            let rest = key.strip_prefix('.').unwrap_or(key);
            let (rl, cl) = rest.split_once('.').ok_or_else(|| Error::Usage(format!("expected R.<row>.<column>, got R{key}")))?;
            let r = labels.iter().position(|l| l == rl).ok_or_else(|| Error::UnknownSymbol(rl.to_string()))?;
            let c = eqs.iter().position(|q| q.name == cl).ok_or_else(|| Error::UnknownSymbol(cl.to_string()))?;
            (r, c)
        };
        let mut op = parse_operator(src, ctx, c, &[], e.line, 1)?;
        for v in op.coeffs.values_mut() {
            *v = s.subst(v)?;
        }
        expected.insert((r, c), op);
    }
    let mut vs = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for c in 0..eqs.len() {
            let want = expected.remove(&(r, c)).unwrap_or_default();
            let diff = row.column(c).add(&want.scale(&Expr::int(-1)));
            for coef in diff.coeffs.values() {
                vs.push(zero_on_solutions(&s.sys, coef)?);
            }
        }
    }
    Ok(Verdict::all_zero(vs))
}

/// A multiplier written inline as `Q.<equation> = ...` keys.
fn inline_multiplier(s: &Session, e: &Expect) -> Result<Vec<Expr>> {
    let eqs = &s.doc.system.eqs;
    let mut q = vec![Expr::zero(); eqs.len()];
    let fields = e.prefixed("Q.");
    if fields.is_empty() {
        return Err(Error::ParseError { line: e.line, col: 1, msg: "expectation needs `name` or `Q.<equation>` keys".into() });
    }
    for (eq, src) in fields {
        let a = eqs.iter().position(|d| d.name == eq).ok_or_else(|| Error::UnknownSymbol(eq.to_string()))?;
        q[a] = s.parse(src, e.line)?;
    }
    Ok(q)
}

/// A characteristic written inline as `P.<dep> = ...` keys.
fn inline_characteristic(s: &Session, e: &Expect) -> Result<Vec<Expr>> {
    let deps = &s.doc.system.ctx.deps;
    let mut p = vec![Expr::zero(); deps.len()];
    let fields = e.prefixed("P.");
    if fields.is_empty() {
        return Err(Error::ParseError { line: e.line, col: 1, msg: "expectation needs `symmetry` or `P.<dep>` keys".into() });
    }
    for (dep, src) in fields {
        let a = deps.iter().position(|d| d == dep).ok_or_else(|| Error::UnknownSymbol(dep.to_string()))?;
        p[a] = s.parse(src, e.line)?;
    }
    Ok(p)
}

fn forms(s: &Session, src: &str, extra: &[String], line: usize) -> Result<Vec<RatFunc>> {
    src.split(';').map(str::trim).filter(|x| !x.is_empty()).map(|f| s.parse_form(f, extra, line)).collect()
}

fn span_symbols(bs: &BilinearSystem) -> Vec<String> {
    let mut v = bs.a_syms.clone();
    v.extend(bs.c_syms.iter().cloned());
    v.push(LAMBDA.to_string());
    v
}

fn list(e: &Expect, key: &str) -> Option<Vec<String>> {
    e.get(key).map(split_names)
}

/// Evaluate one expectation: `verdict` is `Pass` when the document's claim
/// holds.
fn evaluate(s: &Session, e: &Expect) -> Result<Outcome> {
    let name = String::new();
    let check = e.check();
    let out = match check {
        "symmetry" | "multiplier" | "adjoint" | "helmholtz" => {
            let kind = CheckKind::parse(check).unwrap();
            let got = match e.get("name") {
                Some(n) => s.check(kind, n)?,
                None => s.check_inline(kind, &inline_multiplier(s, e)?)?,
            };
            Outcome::new(name, compare(got, want_verdict(e)?)).with_details(format!("computed {got}"))
        }
        "current" => {
            let (got, scale) = s.check_current(required(e, "name")?)?;
            let mut v = compare(got, want_verdict(e)?);
            if let Some(w) = e.get("scale") {
                let w = s.parse_form(w, &[], e.line)?;
                if scale.as_ref() != Some(&w) {
                    v = Verdict::Fail;
                }
            }
            let shown = scale.map_or("none".to_string(), |x| x.to_string());
            Outcome::new(name, v).with_details(format!("computed {got}, multiplier scale {shown}"))
        }
        "trivial" => {
            let got = is_trivial(&s.sys, &s.current(required(e, "name")?)?)?;
            Outcome::new(name, compare(got, want_verdict(e)?))
        }
        "equivalent" => {
            let names = split_names(required(e, "currents")?);
            let [a, b] = names.as_slice() else { return Err(Error::Usage("`currents` needs two names".into())) };
            let (ca, cb) = (s.current(a)?, s.current(b)?);
            match e.get("scale") {
                Some(w) => {
                    let w = s.parse_form(w, &[], e.line)?;
                    let got = current_scale(&s.sys, &ca, &cb)?;
                    let v = if got.as_ref() == Some(&w) { Verdict::Pass } else { Verdict::Fail };
                    Outcome::new(name, v).with_details(format!("scale {}", got.map_or("none".to_string(), |x| x.to_string())))
                }
                None => Outcome::new(name, compare(currents_equivalent(&s.sys, &ca, &cb)?, want_verdict(e)?)),
            }
        }
        "rop" => {
            let of = e.get("of").unwrap_or("multiplier");
            let (labels, rows) = s.rop(of == "symmetry", required(e, "name")?)?;
            let v = compare_rop(s, e, &labels, &rows)?;
            Outcome::new(name, v).with_details(s.format_rop(&labels, &rows).join("; "))
        }
        "invariance" => {
            let q = s.multiplier(required(e, "multiplier")?)?;
            let p = match e.get("symmetry") {
                Some(n) => s.symmetry(n)?,
                None => inline_characteristic(s, e)?,
            };
            let got = invariance_check(&s.sys, &p, &q)?;
            let mut ok = match e.get("result").unwrap_or("homogeneous") {
                "invariant" => got == Invariance::Invariant,
                "homogeneous" => matches!(got, Invariance::Homogeneous(_)),
                "neither" => matches!(got, Invariance::Neither(_)),
                r => return Err(Error::Usage(format!("unknown invariance result {r:?}"))),
            };
            if let Some(l) = e.get("lambda") {
                let want = s.parse_form(l, &[], e.line)?;
                ok &= match &got {
                    Invariance::Homogeneous(x) => *x == want,
                    Invariance::Invariant => want.is_zero(),
                    Invariance::Neither(_) => false,
                };
            }
            let mut o = Outcome::new(name, if ok { Verdict::Pass } else { Verdict::Fail }).with_details(got.to_string());
            if let Invariance::Homogeneous(l) = &got {
                o = o.with_lambda(l.to_string());
            }
            o
        }
        "bilinear" => {
            let bs = s.bilinear(list(e, "symmetries").as_deref(), list(e, "multipliers").as_deref())?;
            let want = forms(s, required(e, "equations")?, &span_symbols(&bs), e.line)?;
            let v = if bs.matches(&want) { Verdict::Pass } else { Verdict::Fail };
            Outcome::new(name, v).with_details(bs.equations.iter().map(|q| q.to_string()).collect::<Vec<_>>().join("; "))
        }
        "homog" => {
            let bs = s.bilinear(list(e, "symmetries").as_deref(), list(e, "multipliers").as_deref())?;
            let extra = span_symbols(&bs);
            let a: Vec<RatFunc> = required(e, "a")?.split(',').map(|x| s.parse_form(x.trim(), &[], e.line)).collect::<Result<_>>()?;
            let sol = bs.solve_fixed_a(&a)?;
            let mut ok = true;
            if let Some(l) = e.get("lambda") {
                ok &= sol.lambda_is(&s.parse_form(l, &extra, e.line)?);
            }
            if let Some(cs) = e.get("constraints") {
                ok &= forms(s, cs, &extra, e.line)?.iter().all(|f| sol.satisfies(f));
            }
            if let Some(d) = e.get("dim") {
                ok &= d.trim().parse::<usize>().map_err(|_| Error::Usage(format!("bad dim {d:?}")))? == sol.dim();
            }
            let mut o = Outcome::new(name, if ok { Verdict::Pass } else { Verdict::Fail }).with_details(format!(
                "dim {}; constraints: {}",
                sol.dim(),
                sol.constraints.iter().map(|c| format!("{c} = 0")).collect::<Vec<_>>().join(", ")
            ));
            if let Some(l) = &sol.lambda {
                o = o.with_lambda(l.to_string());
            }
            o
        }
        "eigen" => {
            let am = s.action_matrix(required(e, "symmetry")?, list(e, "multipliers").as_deref())?;
            let mut want: Vec<(RatFunc, u32)> = Vec::new();
            for part in split_names(required(e, "eigenvalues")?) {
                let (v, m) = part.rsplit_once(':').unwrap_or((part.as_str(), "1"));
                let m: u32 = m.trim().parse().map_err(|_| Error::Usage(format!("bad multiplicity in {part:?}")))?;
                want.push((s.parse_form(v.trim(), &[], e.line)?, m));
            }
            let got = &am.spectrum.eigenvalues;
            let ok = am.spectrum.unresolved_degree == 0 && got.len() == want.len() && want.iter().all(|w| got.contains(w));
            let shown: Vec<String> = got.iter().map(|(l, m)| format!("{l}:{m}")).collect();
            Outcome::new(name, if ok { Verdict::Pass } else { Verdict::Fail }).with_details(format!("eigenvalues {}", shown.join(", ")))
        }
        "reconstruct" => {
            let rec = s.reconstruct(required(e, "multiplier")?)?;
            let mut v = Verdict::Pass;
            if let Some(w) = e.get("weight") {
                if s.parse_form(w, &[], e.line)? != rec.weight {
                    v = Verdict::Fail;
                }
            }
            if let Some(c) = e.get("current") {
                let scale = e.get("scale").map(|x| s.parse_form(x, &[], e.line)).transpose()?.unwrap_or_else(RatFunc::one);
                let target = s.current(c)?.scale(&scale);
                v = v.and(currents_equivalent(&s.sys, &rec.current, &target)?);
            }
            Outcome::new(name, v).with_details(format!("weight {}", rec.weight))
        }
        "ansatz" => {
            let kind = match e.get("kind").unwrap_or("multiplier") {
                "multiplier" => AnsatzKind::Multiplier,
                "symmetry" => AnsatzKind::Symmetry,
                k => return Err(Error::Usage(format!("unknown ansatz kind {k:?}"))),
            };
            let width = match kind {
                AnsatzKind::Multiplier => s.sys.n_eq(),
                AnsatzKind::Symmetry => s.sys.ctx.n_dep(),
            };
            let basis = s.parse_basis(required(e, "basis")?, width, e.line)?;
            let sols = s.ansatz(kind, &basis)?;
            let d: usize = required(e, "dim")?.trim().parse().map_err(|_| Error::Usage("bad dim".into()))?;
            let shown: Vec<String> = sols.iter().map(|v| s.display_vec(v)).collect();
            Outcome::new(name, if sols.len() == d { Verdict::Pass } else { Verdict::Fail }).with_details(shown.join("; "))
        }
        other => return Err(Error::Usage(format!("unknown check {other:?}"))),
    };
    Ok(out)
}

fn label(e: &Expect, when: &When) -> String {
    if let Some(id) = e.get("id") {
        return id.to_string();
    }
    let mut parts = vec![e.check().to_string()];
    for key in ["of", "name", "symmetry", "multiplier", "currents", "a"] {
        if let Some(v) = e.get(key) {
            parts.push(if key == "a" { format!("a=({v})") } else { v.to_string() });
        }
    }
    let mut s = parts.join(" ");
    if !when.is_empty() {
        s.push_str(&format!(" [{}]", format_when(when)));
    }
    s
}

/// Parameter values under which an expectation runs, or `None` when it
/// conflicts with the values fixed on the command line.
pub fn expectation_values(e: &Expect, base: &When, doc: &Document) -> Result<Option<When>> {
    let mut vals = base.clone();
    if let Some(w) = e.get("when") {
        for (k, v) in super::parse_assignments(w)? {
            if doc.system.ctx.param(&k).is_none() {
                return Err(Error::UnknownSymbol(k));
            }
            match vals.get(&k) {
                Some(old) if *old != v => return Ok(None),
                _ => {
                    vals.insert(k, v);
                }
            }
        }
    }
    Ok(Some(vals))
}

/// Run one expectation; an `error = Kind` key expects that error instead of
/// a result.
pub fn run_expect(doc: &Document, e: &Expect, base: &When, zt: &ZeroTest) -> Result<Option<Outcome>> {
    let Some(vals) = expectation_values(e, base, doc)? else { return Ok(None) };
    let name = label(e, &vals);
    let result = Session::new(doc, &vals, zt).and_then(|s| evaluate(&s, e));
    let out = match (e.get("error"), result) {
        (None, Ok(o)) => Outcome { name, ..o },
        (None, Err(err)) => Outcome::new(name, Verdict::Fail).with_details(err.to_string()),
        (Some(kind), Ok(_)) => Outcome::new(name, Verdict::Fail).with_details(format!("expected {kind}, got a result")),
        (Some(kind), Err(err)) if err.kind() == kind => Outcome::new(name, Verdict::Pass).with_details(err.to_string()),
        (Some(kind), Err(err)) => Outcome::new(name, Verdict::Fail).with_details(format!("expected {kind}, got {err}")),
    };
    Ok(Some(out))
}

pub fn regress(doc: &Document, base: &When, zt: &ZeroTest) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for e in &doc.expects {
        if let Some(o) = run_expect(doc, e, base, zt)? {
            out.push(o);
        }
    }
    Ok(out)
}
