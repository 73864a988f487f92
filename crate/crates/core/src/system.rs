//! Normal PDE systems: solved forms, reduction on the solution space and
//! extraction of the linear operators that express a vanishing-on-solutions
//! expression in terms of the equations and their derivatives.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use crate::calculus::{self, total_derivative, total_derivative_index, Context, Tower};
use crate::error::{Error, Result};
use crate::kernel::{Atom, Builder, Expr, JetVar, MultiIndex, Names, RatFunc, ZeroTest, ZeroVerdict};

/// Per dependent variable component of a symmetry in characteristic form.
pub type Characteristic = Vec<Expr>;

/// Per equation component of a multiplier.
pub type Multiplier = Vec<Expr>;

/// Conserved current: density plus one flux component per spatial variable.
#[derive(Clone, Debug, PartialEq)]
pub struct Current {
    pub density: Expr,
    pub flux: Vec<Expr>,
}

impl Current {
    pub fn zero(n_spatial: usize) -> Self {
        Current { density: Expr::zero(), flux: vec![Expr::zero(); n_spatial] }
    }

    /// From components indexed by independent variable, time first.
    pub fn from_components(mut comps: Vec<Expr>) -> Self {
        let density = comps.remove(0);
        Current { density, flux: comps }
    }

    pub fn components(&self) -> Vec<Expr> {
        let mut v = vec![self.density.clone()];
        v.extend(self.flux.iter().cloned());
        v
    }

    pub fn divergence(&self) -> Expr {
        calculus::divergence(&self.components())
    }

    pub fn scale(&self, c: &RatFunc) -> Current {
        Current { density: self.density.scale(c), flux: self.flux.iter().map(|x| x.scale(c)).collect() }
    }

    pub fn add(&self, other: &Current) -> Current {
        Current {
            density: &self.density + &other.density,
            flux: self.flux.iter().zip(&other.flux).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Current) -> Current {
        self.add(&other.scale(&RatFunc::from(-1)))
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Current {
        Current { density: f(&self.density), flux: self.flux.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.density.is_zero() && self.flux.iter().all(Expr::is_zero)
    }
}

/// Derivative ranking: jets compare by their derivative counts taken in
/// `priority` order (most significant first), then by dependent variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    pub priority: Vec<usize>,
}

impl Ranking {
    /// Spatial variables in declaration order, then time.
    pub fn default_for(n_indep: usize) -> Self {
        let mut priority: Vec<usize> = (1..n_indep).collect();
        priority.push(0);
        Ranking { priority }
    }

    pub fn cmp(&self, a: &JetVar, b: &JetVar) -> Ordering {
        for &v in &self.priority {
            match a.idx.get(v).cmp(&b.idx.get(v)) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.dep.cmp(&b.dep)
    }

    pub fn less(&self, a: &JetVar, b: &JetVar) -> bool {
        self.cmp(a, b) == Ordering::Less
    }
}

/// One equation `G = 0`, linear in its leading jet, with the solved form
/// `lead = rhs` where `G = coef * (lead - rhs)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub name: String,
    pub expr: Expr,
    pub lead: JetVar,
    pub coef: Expr,
    pub rhs: Expr,
}

/// Finite linear differential operator acting on the equations,
/// `Σ coeffs[(a, J)] D_J G^a`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GOperator {
    pub coeffs: BTreeMap<(usize, MultiIndex), Expr>,
}

impl GOperator {
    pub fn new() -> Self {
        GOperator::default()
    }

    pub fn identity(eq: usize, n_indep: usize) -> Self {
        let mut op = GOperator::new();
        op.coeffs.insert((eq, MultiIndex::zero(n_indep)), Expr::one());
        op
    }

    pub fn get(&self, eq: usize, idx: &MultiIndex) -> Expr {
        self.coeffs.get(&(eq, idx.clone())).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn add_term(&mut self, eq: usize, idx: MultiIndex, c: &Expr) {
        let key = (eq, idx);
        let v = match self.coeffs.get(&key) {
            Some(prev) => prev + c,
            None => c.clone(),
        };
        if v.is_zero() {
            self.coeffs.remove(&key);
        } else {
            self.coeffs.insert(key, v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> GOperator {
        let mut out = GOperator::new();
        for ((a, j), c) in &self.coeffs {
            out.add_term(*a, j.clone(), &f(c));
        }
        out
    }

    pub fn scale(&self, c: &Expr) -> GOperator {
        self.map(|x| x * c)
    }

    pub fn add(&self, other: &GOperator) -> GOperator {
        let mut out = self.clone();
        for ((a, j), c) in &other.coeffs {
            out.add_term(*a, j.clone(), c);
        }
        out
    }

    /// The part acting on one equation.
    pub fn column(&self, eq: usize) -> GOperator {
        GOperator { coeffs: self.coeffs.iter().filter(|((a, _), _)| *a == eq).map(|(k, v)| (k.clone(), v.clone())).collect() }
    }

    /// Operator text for one column, e.g. `-t*D_x + 2`.
    pub fn display_column(&self, eq: usize, ctx: &Context) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut entries: Vec<(&MultiIndex, &Expr)> =
            self.coeffs.iter().filter(|((a, _), _)| *a == eq).map(|((_, j), c)| (j, c)).collect();
        entries.sort_by(|x, y| y.0.order().cmp(&x.0.order()).then_with(|| x.0.cmp(y.0)));
        for (j, c) in entries {
            let cs = c.display(ctx).to_string();
            if j.order() == 0 {
                parts.push(cs);
                continue;
            }
            let d = format!("D_{}", ctx.letters(j));
            let text = if cs == "1" {
                d
            } else if cs == "-1" {
                format!("-{d}")
            } else if c.len() == 1 {
                format!("{cs}*{d}")
            } else {
                format!("({cs})*{d}")
            };
            parts.push(text);
        }
        if parts.is_empty() {
            return "0".into();
        }
        let mut s = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => {
                    s.push_str(" - ");
                    s.push_str(rest);
                }
                None => {
                    s.push_str(" + ");
                    s.push_str(p);
                }
            }
        }
        s
    }
}

/// A normal PDE system with memoized reductions.
#[derive(Debug)]
pub struct PdeSystem {
    pub name: String,
    pub ctx: Context,
    pub eqs: Vec<Equation>,
    pub ranking: Ranking,
    pub zt: ZeroTest,
    reduce_memo: Mutex<HashMap<JetVar, Expr>>,
    slack_memo: Mutex<HashMap<JetVar, Expr>>,
    eq_derivs: Mutex<HashMap<(usize, MultiIndex), Expr>>,
}

impl Clone for PdeSystem {
    fn clone(&self) -> Self {
        PdeSystem {
            name: self.name.clone(),
            ctx: self.ctx.clone(),
            eqs: self.eqs.clone(),
            ranking: self.ranking.clone(),
            zt: self.zt.clone(),
            reduce_memo: Mutex::new(self.reduce_memo.lock().unwrap().clone()),
            slack_memo: Mutex::new(self.slack_memo.lock().unwrap().clone()),
            eq_derivs: Mutex::new(self.eq_derivs.lock().unwrap().clone()),
        }
    }
}

impl PdeSystem {
    /// Validate and build a system from `(name, G, lead)` triples.
    pub fn new(name: &str, ctx: Context, eqs: Vec<(String, Expr, JetVar)>, ranking: Option<Ranking>) -> Result<Self> {
        let ranking = ranking.unwrap_or_else(|| Ranking::default_for(ctx.n_indep()));
        let zt = ZeroTest { params: ctx.params.clone(), ..ZeroTest::default() };
        let mut out = Vec::with_capacity(eqs.len());
        for (ename, g, lead) in eqs {
            if g.has_slack() {
                return Err(Error::InvalidSystem(format!("equation {ename} contains slack placeholders")));
            }
            let coef = calculus::jet_partial(&g, &lead);
            let rest = &g - &(&coef * &Expr::jet(lead.clone()));
            if coef.is_zero() || coef.jet_vars().contains(&lead) || rest.jet_vars().contains(&lead) {
                return Err(Error::InvalidSystem(format!(
                    "equation {ename} is not linear in its leading derivative {}",
                    Expr::jet(lead.clone()).display(&ctx)
                )));
            }
            if zt.canonical(&coef) == ZeroVerdict::Zero {
                return Err(Error::InvalidSystem(format!("equation {ename} has a vanishing leading coefficient")));
            }
            let rhs = -(&rest * &coef.recip());
            out.push(Equation { name: ename, expr: g, lead, coef, rhs });
        }
        for (i, a) in out.iter().enumerate() {
            for (k, b) in out.iter().enumerate() {
                if i != k && a.lead.dep == b.lead.dep && a.lead.idx.contains(&b.lead.idx) {
                    return Err(Error::InvalidSystem(format!(
                        "leading derivative of {} is a derivative of the leading derivative of {}",
                        a.name, b.name
                    )));
                }
            }
        }
        for e in &out {
            for j in e.rhs.jet_vars() {
                if !ranking.less(&j, &e.lead) {
                    return Err(Error::RankingViolation(format!(
                        "{} in the solved form of {} is not below {}",
                        Expr::jet(j.clone()).display(&ctx),
                        e.name,
                        Expr::jet(e.lead.clone()).display(&ctx)
                    )));
                }
            }
        }
        Ok(PdeSystem {
            name: name.to_string(),
            ctx,
            eqs: out,
            ranking,
            zt,
            reduce_memo: Mutex::new(HashMap::new()),
            slack_memo: Mutex::new(HashMap::new()),
            eq_derivs: Mutex::new(HashMap::new()),
        })
    }

    pub fn n_eq(&self) -> usize {
        self.eqs.len()
    }

    pub fn eq_index(&self, name: &str) -> Option<usize> {
        self.eqs.iter().position(|e| e.name == name)
    }

    pub fn with_zero_test(mut self, zt: ZeroTest) -> Self {
        self.zt = ZeroTest { params: self.ctx.params.clone(), ..zt };
        self
    }

    pub fn names(&self) -> SystemNames<'_> {
        SystemNames(self)
    }

    /// Equation whose leading jet `w` is a derivative of, with the
    /// remaining derivative index.
    fn lead_of(&self, w: &JetVar) -> Option<(usize, MultiIndex)> {
        self.eqs
            .iter()
            .enumerate()
            .find(|(_, e)| e.lead.dep == w.dep && w.idx.contains(&e.lead.idx))
            .map(|(i, e)| (i, w.idx.minus(&e.lead.idx).unwrap()))
    }

    pub fn is_lead_derivative(&self, w: &JetVar) -> bool {
        self.lead_of(w).is_some()
    }

    /// `D_J G^a`, memoized.
    pub fn eq_derivative(&self, eq: usize, idx: &MultiIndex) -> Expr {
        if idx.order() == 0 {
            return self.eqs[eq].expr.clone();
        }
        let key = (eq, idx.clone());
        if let Some(e) = self.eq_derivs.lock().unwrap().get(&key) {
            return e.clone();
        }
        let v = idx.counts().iter().position(|&c| c > 0).unwrap();
        let parent = idx.minus(&MultiIndex::unit(idx.len(), v)).unwrap();
        let d = total_derivative(&self.eq_derivative(eq, &parent), v);
        self.eq_derivs.lock().unwrap().insert(key, d.clone());
        d
    }

    fn check_below(&self, e: &Expr, w: &JetVar) -> Result<()> {
        for j in e.jet_vars() {
            if self.is_lead_derivative(&j) && !self.ranking.less(&j, w) {
                return Err(Error::NonTerminatingReduction(format!(
                    "replacing {} introduces {}",
                    Expr::jet(w.clone()).display(&self.ctx),
                    Expr::jet(j).display(&self.ctx)
                )));
            }
        }
        Ok(())
    }

    /// Fully reduced replacement of a leading derivative.
    fn reduced_jet(&self, w: &JetVar) -> Result<Expr> {
        if let Some(e) = self.reduce_memo.lock().unwrap().get(w) {
            return Ok(e.clone());
        }
        let (eq, rest) = self.lead_of(w).expect("not a leading derivative");
        let raw = if rest.order() == 0 {
            self.eqs[eq].rhs.clone()
        } else {
            let v = rest.counts().iter().position(|&c| c > 0).unwrap();
            let parent = JetVar::new(w.dep, w.idx.minus(&MultiIndex::unit(w.idx.len(), v)).unwrap());
            total_derivative(&self.reduced_jet(&parent)?, v)
        };
        self.check_below(&raw, w)?;
        let out = self.substitute_leads(&raw, &mut |s, j| s.reduced_jet(j))?;
        self.reduce_memo.lock().unwrap().insert(w.clone(), out.clone());
        Ok(out)
    }

    fn substitute_leads(
        &self,
        e: &Expr,
        repl: &mut dyn FnMut(&Self, &JetVar) -> Result<Expr>,
    ) -> Result<Expr> {
        let mut map = HashMap::new();
        for j in e.jet_vars() {
            if self.is_lead_derivative(&j) {
                map.insert(j.clone(), repl(self, &j)?);
            }
        }
        Ok(e.subst_jets(&map))
    }

    /// Evaluate on the solution space: every leading derivative and its
    /// derivatives are replaced through the solved forms until none remain.
    pub fn reduce_on_solutions(&self, e: &Expr) -> Result<Expr> {
        self.substitute_leads(e, &mut |s, j| s.reduced_jet(j))
    }

    /// Replacement of a leading derivative off the solution space, linear in
    /// slack placeholders: `lead = rhs + coef^{-1} [G]` and its derivatives.
    fn slack_jet(&self, w: &JetVar) -> Result<Expr> {
        if let Some(e) = self.slack_memo.lock().unwrap().get(w) {
            return Ok(e.clone());
        }
        let (eq, rest) = self.lead_of(w).expect("not a leading derivative");
        let raw = if rest.order() == 0 {
            let e = &self.eqs[eq];
            &e.rhs + &(&e.coef.recip() * &Expr::slack(eq, MultiIndex::zero(w.idx.len())))
        } else {
            let v = rest.counts().iter().position(|&c| c > 0).unwrap();
            let parent = JetVar::new(w.dep, w.idx.minus(&MultiIndex::unit(w.idx.len(), v)).unwrap());
            total_derivative(&self.slack_jet(&parent)?, v)
        };
        self.check_below(&raw, w)?;
        let out = self.substitute_leads(&raw, &mut |s, j| s.slack_jet(j))?;
        self.slack_memo.lock().unwrap().insert(w.clone(), out.clone());
        Ok(out)
    }

    /// Split `e` as `residual + Σ op[a,J] D_J G^a` with a slack-free
    /// residual equal to the reduction of `e` on the solution space.
    ///
    /// Terms of higher slack degree are assigned to their largest slack
    /// factor; the other factors are written back as the concrete `D_J G^a`,
    /// so those coefficients vanish on solutions.
    pub fn slack_expand(&self, e: &Expr) -> Result<(Expr, GOperator)> {
        if e.has_slack() {
            return Err(Error::InvalidSystem("input already contains slack placeholders".into()));
        }
        let x = self.substitute_leads(e, &mut |s, j| s.slack_jet(j))?;
        let mut residual = Vec::new();
        let mut op = GOperator::new();
        let mut groups: BTreeMap<(usize, MultiIndex), (Builder, Builder)> = BTreeMap::new();
        for t in x.terms() {
            let mut slots: Vec<(usize, MultiIndex)> = Vec::new();
            let mut degree = 0;
            for (a, ex) in t.mono.factors() {
                match a {
                    Atom::Slack(eq, idx) => {
                        let n = ex.as_integer().filter(|n| *n > 0).ok_or_else(|| {
                            Error::NonlinearInSlack("slack placeholder raised to a non-integer power".into())
                        })?;
                        slots.push((*eq, idx.clone()));
                        degree += n;
                    }
                    Atom::Exp(y) | Atom::Ln(y) | Atom::Pow(y) if y.has_slack() => {
                        return Err(Error::NonlinearInSlack("slack placeholder inside a transcendental atom".into()));
                    }
                    _ => {}
                }
            }
            let Some((eq, idx)) = slots.into_iter().max() else {
                residual.push(t.clone());
                continue;
            };
            let slot = Atom::Slack(eq, idx.clone());
            let mono = t.mono.lowered_by(&slot).expect("slot is a factor");
            let (linear, higher) = groups.entry((eq, idx)).or_default();
            let b = if degree == 1 { linear } else { higher };
            b.add_term(mono, t.coeff.clone());
        }
        for ((eq, idx), (linear, higher)) in groups {
            // remaining slack factors are written back as D_J G^a
            let coeff = &linear.build() + &self.unslack(&higher.build());
            op.add_term(eq, idx, &coeff);
        }
        let mut b = Builder::new();
        for t in residual {
            b.add_term(t.mono, t.coeff);
        }
        Ok((b.build(), op))
    }

    fn unslack(&self, e: &Expr) -> Expr {
        e.rebuild(
            &mut |a| match a {
                Atom::Slack(eq, j) => Some(self.eq_derivative(*eq, j)),
                _ => None,
            },
            None,
        )
    }

    /// Operator extracted from an expression that vanishes on solutions.
    pub fn extract_r(&self, e: &Expr) -> Result<GOperator> {
        let (residual, op) = self.slack_expand(e)?;
        match self.zt.is_zero(&residual)? {
            ZeroVerdict::Zero => Ok(op),
            v => Err(Error::NotVanishingOnSolutions(format!(
                "residual {} ({v:?})",
                residual.display(&self.ctx)
            ))),
        }
    }

    /// `Σ op[a,J] D_J G^a` as a concrete expression.
    pub fn apply_g(&self, op: &GOperator) -> Expr {
        let mut out = Expr::zero();
        for ((a, j), c) in &op.coeffs {
            out = &out + &(c * &self.eq_derivative(*a, j));
        }
        out
    }

    /// Formal adjoint of an operator matrix applied to `w`, one component per
    /// equation: `Σ_r Σ_J (-D)_J (rows[r][a,J] w_r)`.
    pub fn adjoint_apply(&self, rows: &[GOperator], w: &[Expr]) -> Vec<Expr> {
        let mut out = vec![Expr::zero(); self.n_eq()];
        for (r, row) in rows.iter().enumerate() {
            if w[r].is_zero() {
                continue;
            }
            for ((a, j), c) in &row.coeffs {
                let inner = c * &w[r];
                let d = total_derivative_index(&inner, j);
                let d = if j.order() % 2 == 1 { -d } else { d };
                out[*a] = &out[*a] + &d;
            }
        }
        out
    }

    /// `δ_P G^b` for every equation.
    pub fn frechet_all(&self, p: &[Expr]) -> Vec<Expr> {
        self.eqs.iter().map(|e| calculus::frechet(&e.expr, p)).collect()
    }

    /// `(δ*_Q G)_α` for every dependent variable.
    pub fn adjoint_all(&self, q: &[Expr]) -> Vec<Expr> {
        (0..self.ctx.n_dep())
            .map(|alpha| {
                self.eqs
                    .iter()
                    .zip(q)
                    .map(|(e, qa)| if qa.is_zero() { Expr::zero() } else { calculus::frechet_adjoint(&e.expr, qa, alpha) })
                    .sum()
            })
            .collect()
    }

    /// `Σ_a Q_a G^a`.
    pub fn pair_with_equations(&self, q: &[Expr]) -> Expr {
        self.eqs.iter().zip(q).map(|(e, qa)| qa * &e.expr).sum()
    }

    /// The system with some parameters replaced by values.
    pub fn specialize(&self, vals: &HashMap<String, RatFunc>) -> Result<PdeSystem> {
        if vals.is_empty() {
            return Ok(self.clone());
        }
        for (name, v) in vals {
            let Some(spec) = self.ctx.param(name) else {
                return Err(Error::UnknownSymbol(name.clone()));
            };
            if let Some(c) = v.as_const() {
                if spec.excluded.contains(c) || (spec.nonzero && c == &crate::kernel::q(0)) {
                    return Err(Error::InconsistentAssumptions(format!("{name} = {c} is excluded")));
                }
            }
        }
        let mut ctx = self.ctx.clone();
        ctx.params.retain(|p| !vals.contains_key(&p.name));
        let eqs = self
            .eqs
            .iter()
            .map(|e| Ok((e.name.clone(), e.expr.try_subst_params(vals)?, e.lead.clone())))
            .collect::<Result<_>>()?;
        let sys = PdeSystem::new(&self.name, ctx, eqs, Some(self.ranking.clone()))?;
        Ok(sys.with_zero_test(self.zt.clone()))
    }
}

/// Display names for a system's variables and equations.
pub struct SystemNames<'a>(&'a PdeSystem);

impl Names for SystemNames<'_> {
    fn indep_name(&self, i: usize) -> String {
        self.0.ctx.indeps[i].clone()
    }

    fn dep_name(&self, a: usize) -> String {
        self.0.ctx.deps[a].clone()
    }

    fn eq_name(&self, a: usize) -> String {
        self.0.eqs[a].name.clone()
    }
}

/// Memoized derivatives of a characteristic, one tower per component.
pub fn towers(p: &[Expr]) -> Vec<Tower> {
    p.iter().cloned().map(Tower::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_expr, parse_operator};
    use crate::kernel::{normal_form, ParamSpec};

    fn ctx(indeps: &[&str], deps: &[&str], params: &[&str]) -> Context {
        let mut c = Context::new(indeps, deps);
        for p in params {
            c.params.push(ParamSpec { name: p.to_string(), nonzero: true, excluded: vec![] });
        }
        c
    }

    fn single(c: Context, g: &str, lead: &str, ranking: Option<Ranking>) -> Result<PdeSystem> {
        let ge = parse_expr(g, &c).unwrap();
        let lead = JetVar::new(0, c.index_of(lead).unwrap());
        PdeSystem::new("test", c, vec![("G".into(), ge, lead)], ranking)
    }

    fn gmt() -> PdeSystem {
        single(ctx(&["t", "x"], &["u"], &["p", "k"]), "u_tx + u_x + k*u^p", "tx", None).unwrap()
    }

    fn gkdv() -> PdeSystem {
        let r = Ranking { priority: vec![0, 1] };
        single(ctx(&["t", "x"], &["u"], &["p", "k"]), "u_t + u_xxx + k*u^p*u_x", "t", Some(r)).unwrap()
    }

    fn bfam() -> PdeSystem {
        let g = "u_t - u_txx + (b+1)*u*u_x - b*u_x*u_xx - u*u_xxx";
        single(ctx(&["t", "x"], &["u"], &["b"]), g, "xxx", None).unwrap()
    }

    fn op(sys: &PdeSystem, s: &str) -> GOperator {
        parse_operator(s, &sys.ctx, 0, &[], 1, 1).unwrap()
    }

    fn same_on_solutions(sys: &PdeSystem, a: &GOperator, b: &GOperator) -> bool {
        let keys: std::collections::BTreeSet<_> = a.coeffs.keys().chain(b.coeffs.keys()).cloned().collect();
        keys.into_iter().all(|(e, j)| {
            let d = &a.get(e, &j) - &b.get(e, &j);
            normal_form(&sys.reduce_on_solutions(&d).unwrap()).is_zero()
        })
    }

    #[test]
    fn default_ranking_rejects_time_evolution_form() {
        let c = ctx(&["t", "x"], &["u"], &["p", "k"]);
        let err = single(c, "u_t + u_xxx + k*u^p*u_x", "t", None).unwrap_err();
        assert!(matches!(err, Error::RankingViolation(_)));
    }

    #[test]
    fn nonlinear_lead_is_rejected() {
        let c = ctx(&["t", "x"], &["u"], &[]);
        assert!(matches!(single(c, "u_t^2 + u_x", "t", None), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn equations_vanish_on_solutions() {
        for sys in [gmt(), gkdv(), bfam()] {
            assert!(sys.reduce_on_solutions(&sys.eqs[0].expr).unwrap().is_zero());
            let d = sys.eq_derivative(0, &sys.ctx.index_of("tx").unwrap());
            assert!(normal_form(&sys.reduce_on_solutions(&d).unwrap()).is_zero());
        }
    }

    #[test]
    fn bfam_solved_form() {
        let sys = bfam();
        let got = sys.reduce_on_solutions(&sys.ctx.jet(0, "xxx")).unwrap();
        let expect = parse_expr("u_x + (b*u_x*(u - u_xx) + u_t - u_txx)/u", &sys.ctx).unwrap();
        assert!(normal_form(&(&got - &expect)).is_zero());
    }

    #[test]
    fn gkdv_reduction_eliminates_time_derivatives() {
        let sys = gkdv();
        let r = sys.reduce_on_solutions(&sys.ctx.jet(0, "tx")).unwrap();
        assert!(r.jet_vars().iter().all(|j| j.idx.get(0) == 0));
        assert_eq!(r.max_order(), 4);
    }

    #[test]
    fn gmt_symmetry_operators() {
        let sys = gmt();
        let p1 = parse_expr("-u_t", &sys.ctx).unwrap();
        let r1 = sys.extract_r(&sys.frechet_all(&[p1])[0]).unwrap();
        assert!(same_on_solutions(&sys, &r1, &op(&sys, "-D_t")));
        let p3 = parse_expr("exp((p-1)*t)*(u_t + u)", &sys.ctx).unwrap();
        let r3 = sys.extract_r(&sys.frechet_all(&[p3])[0]).unwrap();
        assert!(same_on_solutions(&sys, &r3, &op(&sys, "exp((p-1)*t)*(D_t + p)")));
        let q1 = parse_expr("-exp(2*t)*(u_t + (p-1)*x*u_x + u)", &sys.ctx).unwrap();
        let rq = sys.extract_r(&sys.adjoint_all(&[q1])[0]).unwrap();
        assert!(same_on_solutions(&sys, &rq, &op(&sys, "-exp(2*t)*((p-1)*x*D_x + D_t + p)")));
    }

    #[test]
    fn gkdv_multiplier_operators() {
        let sys = gkdv();
        let q2 = parse_expr("-u", &sys.ctx).unwrap();
        let rq = sys.extract_r(&sys.adjoint_all(&[q2])[0]).unwrap();
        assert!(same_on_solutions(&sys, &rq, &op(&sys, "1")));
        let q1 = parse_expr("u_xx + k/(p+1)*u^(p+1)", &sys.ctx).unwrap();
        let rq = sys.extract_r(&sys.adjoint_all(&[q1])[0]).unwrap();
        assert!(same_on_solutions(&sys, &rq, &op(&sys, "-D_x^2 - k*u^p")));
    }

    #[test]
    fn non_symmetry_does_not_vanish() {
        let sys = gkdv();
        let p = parse_expr("u", &sys.ctx).unwrap();
        let e = &sys.frechet_all(&[p])[0];
        assert!(matches!(sys.extract_r(e), Err(Error::NotVanishingOnSolutions(_))));
    }

    #[test]
    fn slack_expansion_round_trip() {
        for sys in [gmt(), gkdv(), bfam()] {
            let e = parse_expr("u_xxxx*u_tx + exp(x)*u_ttx + u_xxx^2", &sys.ctx).unwrap();
            let (res, op) = sys.slack_expand(&e).unwrap();
            assert!(!res.has_slack());
            assert!(op.coeffs.values().all(|c| !c.has_slack()));
            assert!(normal_form(&(&(&res + &sys.apply_g(&op)) - &e)).is_zero());
            assert!(normal_form(&(&res - &sys.reduce_on_solutions(&e).unwrap())).is_zero());
        }
    }

    #[test]
    fn specialize_respects_exclusions() {
        let mut c = ctx(&["t", "x"], &["u"], &["b"]);
        c.params[0] = ParamSpec { name: "b".into(), nonzero: false, excluded: vec![crate::kernel::q(-1)] };
        let sys = single(c, "u_t - u_txx + (b+1)*u*u_x - b*u_x*u_xx - u*u_xxx", "xxx", None).unwrap();
        let bad = HashMap::from([("b".to_string(), RatFunc::from(-1))]);
        assert!(matches!(sys.specialize(&bad), Err(Error::InconsistentAssumptions(_))));
        let ok = sys.specialize(&HashMap::from([("b".to_string(), RatFunc::from(2))])).unwrap();
        assert!(ok.eqs[0].expr.params().is_empty());
    }
}
