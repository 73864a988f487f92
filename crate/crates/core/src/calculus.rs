//! Jet-space differential operators.
//!
//! Independent variables are indexed with time at slot 0 and the spatial
//! variables after it; dependent variables are indexed in declaration order.

use std::collections::HashMap;

use crate::error::Result;
use crate::kernel::{Atom, Expr, JetVar, MultiIndex, Names, ParamSpec, RatFunc, Verdict, ZeroTest};

/// Variables and parameters shared by every expression of a system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Context {
    pub indeps: Vec<String>,
    pub deps: Vec<String>,
    pub params: Vec<ParamSpec>,
}

impl Context {
    pub fn new(indeps: &[&str], deps: &[&str]) -> Self {
        Context {
            indeps: indeps.iter().map(|s| s.to_string()).collect(),
            deps: deps.iter().map(|s| s.to_string()).collect(),
            params: Vec::new(),
        }
    }

    pub fn n_indep(&self) -> usize {
        self.indeps.len()
    }

    pub fn n_dep(&self) -> usize {
        self.deps.len()
    }

    pub fn n_spatial(&self) -> usize {
        self.indeps.len().saturating_sub(1)
    }

    pub fn indep_index(&self, name: &str) -> Option<usize> {
        self.indeps.iter().position(|s| s == name)
    }

    pub fn dep_index(&self, name: &str) -> Option<usize> {
        self.deps.iter().position(|s| s == name)
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Multi-index from a string of independent-variable names, e.g. `"txx"`.
    /// Names are matched greedily, longest first.
    pub fn index_of(&self, letters: &str) -> Option<MultiIndex> {
        let mut counts = vec![0u32; self.n_indep()];
        let mut rest = letters;
        let mut order: Vec<usize> = (0..self.n_indep()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.indeps[i].len()));
        while !rest.is_empty() {
            let i = order.iter().copied().find(|&i| rest.starts_with(self.indeps[i].as_str()))?;
            counts[i] += 1;
            rest = &rest[self.indeps[i].len()..];
        }
        Some(MultiIndex::from_counts(counts))
    }

    pub fn jet(&self, dep: usize, letters: &str) -> Expr {
        let idx = self.index_of(letters).unwrap_or_else(|| panic!("unknown derivative letters {letters:?}"));
        Expr::jet(JetVar::new(dep, idx))
    }

    pub fn base_jet(&self, dep: usize) -> JetVar {
        JetVar::base(dep, self.n_indep())
    }

    pub fn zero_index(&self) -> MultiIndex {
        MultiIndex::zero(self.n_indep())
    }

    /// Spelling of a multi-index as a string of variable names.
    pub fn letters(&self, idx: &MultiIndex) -> String {
        let mut s = String::new();
        for (v, &c) in idx.counts().iter().enumerate() {
            for _ in 0..c {
                s.push_str(&self.indeps[v]);
            }
        }
        s
    }
}

impl Names for Context {
    fn indep_name(&self, i: usize) -> String {
        self.indeps[i].clone()
    }

    fn dep_name(&self, a: usize) -> String {
        self.deps[a].clone()
    }
}

fn differentiate_leaf(a: &Atom, v: usize) -> Expr {
    match a {
        Atom::Jet(j) => Expr::jet(j.derivative(v)),
        Atom::Indep(i) if *i == v => Expr::one(),
        Atom::Indep(_) => Expr::zero(),
        Atom::Slack(eq, idx) => Expr::slack(*eq, idx.with_added(v)),
        Atom::Sym(_) => panic!("normal-form symbols have no total derivative"),
        _ => unreachable!("composite atoms are handled by the chain rule"),
    }
}

/// Total derivative `D_v e`. Slack placeholders differentiate formally,
/// `D_v [G^a]_J = [G^a]_{J+v}`.
pub fn total_derivative(e: &Expr, v: usize) -> Expr {
    e.differentiate(&mut |a| differentiate_leaf(a, v))
}

/// `D_J e`, applied one variable at a time.
pub fn total_derivative_index(e: &Expr, idx: &MultiIndex) -> Expr {
    let mut cur = e.clone();
    for v in idx.to_sequence() {
        if cur.is_zero() {
            break;
        }
        cur = total_derivative(&cur, v);
    }
    cur
}

/// Partial derivative with respect to one jet coordinate.
pub fn jet_partial(e: &Expr, w: &JetVar) -> Expr {
    e.differentiate(&mut |a| match a {
        Atom::Jet(j) if j == w => Expr::one(),
        _ => Expr::zero(),
    })
}

/// Explicit partial derivative in an independent variable, jets held fixed.
pub fn indep_partial(e: &Expr, v: usize) -> Expr {
    e.differentiate(&mut |a| match a {
        Atom::Indep(i) if *i == v => Expr::one(),
        _ => Expr::zero(),
    })
}

/// Memoized total derivatives `D_J e` of one expression.
pub struct Tower {
    base: Expr,
    memo: HashMap<MultiIndex, Expr>,
}

impl Tower {
    pub fn new(base: Expr) -> Self {
        Tower { base, memo: HashMap::new() }
    }

    pub fn get(&mut self, idx: &MultiIndex) -> Expr {
        if idx.order() == 0 {
            return self.base.clone();
        }
        if let Some(e) = self.memo.get(idx) {
            return e.clone();
        }
        let v = idx.counts().iter().position(|&c| c > 0).unwrap();
        let parent = idx.minus(&MultiIndex::unit(idx.len(), v)).unwrap();
        let p = self.get(&parent);
        let d = if p.is_zero() { p } else { total_derivative(&p, v) };
        self.memo.insert(idx.clone(), d.clone());
        d
    }
}

fn sign(idx: &MultiIndex) -> RatFunc {
    RatFunc::from(if idx.order().is_multiple_of(2) { 1 } else { -1 })
}

/// Fréchet derivative of `f` in the direction `g` (one component per
/// dependent variable).
pub fn frechet(f: &Expr, g: &[Expr]) -> Expr {
    let mut towers: Vec<Tower> = g.iter().cloned().map(Tower::new).collect();
    let mut out = Expr::zero();
    for w in f.jet_vars() {
        let dg = towers[w.dep].get(&w.idx);
        if dg.is_zero() {
            continue;
        }
        out = &out + &(&jet_partial(f, &w) * &dg);
    }
    out
}

/// Component `alpha` of the adjoint Fréchet derivative of `f` applied to `h`.
pub fn frechet_adjoint(f: &Expr, h: &Expr, alpha: usize) -> Expr {
    let mut out = Expr::zero();
    for w in f.jet_vars() {
        if w.dep != alpha {
            continue;
        }
        let inner = &jet_partial(f, &w) * h;
        out = &out + &total_derivative_index(&inner, &w.idx).scale(&sign(&w.idx));
    }
    out
}

/// Euler–Lagrange operator with respect to dependent variable `alpha`.
pub fn euler(f: &Expr, alpha: usize) -> Expr {
    frechet_adjoint(f, &Expr::one(), alpha)
}

/// Higher Euler operator `E^J`: the sum over `K ⊇ J` of
/// `C(K, J) (-D)_{K-J} ∂f/∂u_K`, with `C(K, J) = prod_i C(k_i, j_i)`.
pub fn higher_euler(f: &Expr, alpha: usize, idx: &MultiIndex) -> Expr {
    let mut out = Expr::zero();
    for w in f.jet_vars() {
        if w.dep != alpha || !w.idx.contains(idx) {
            continue;
        }
        let rest = w.idx.minus(idx).unwrap();
        let c = RatFunc::from(w.idx.binomial(idx) as i64).mul(&sign(&rest));
        out = &out + &total_derivative_index(&jet_partial(f, &w), &rest).scale(&c);
    }
    out
}

/// Whether `f` is a total space-time divergence, decided by the Euler
/// operator in every dependent variable.
pub fn is_total_divergence(f: &Expr, n_dep: usize, zt: &ZeroTest) -> Result<Verdict> {
    let mut vs = Vec::with_capacity(n_dep);
    for a in 0..n_dep {
        vs.push(zt.is_zero(&euler(f, a))?);
    }
    Ok(Verdict::all_zero(vs))
}

fn distinct_permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    let mut seen = Vec::new();
    for i in k..items.len() {
        if seen.contains(&items[i]) {
            continue;
        }
        seen.push(items[i]);
        items.swap(k, i);
        distinct_permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

/// Flux `Φ` (one component per independent variable) with
/// `A·D_J g - g·(-D)_J A = Σ_v D_v Φ^v` exactly.
///
/// The derivatives of `J` are peeled off with the spatial letters first and
/// the time letters last; the result is averaged over the distinct orderings
/// of the spatial letters so that no spatial direction is preferred.
pub fn ibp_flux(a: &Expr, g: &Expr, idx: &MultiIndex) -> Vec<Expr> {
    let n = idx.len();
    let mut flux = vec![Expr::zero(); n];
    if idx.order() == 0 || a.is_zero() || g.is_zero() {
        return flux;
    }
    let mut spatial: Vec<usize> = idx.to_sequence().into_iter().filter(|&v| v != 0).collect();
    let mut orderings = Vec::new();
    distinct_permutations(&mut spatial, 0, &mut orderings);
    let mut ta = Tower::new(a.clone());
    let mut tg = Tower::new(g.clone());
    let weight = RatFunc::from(orderings.len() as i64).inv();
    for ord in &orderings {
        let mut seq = ord.clone();
        seq.extend(std::iter::repeat_n(0, idx.get(0) as usize));
        let mut prefix = MultiIndex::zero(n);
        for (l, &v) in seq.iter().enumerate() {
            let suffix = seq[l + 1..].iter().fold(MultiIndex::zero(n), |m, &w| m.with_added(w));
            let s = if l % 2 == 0 { weight.clone() } else { weight.neg() };
            let da = ta.get(&prefix);
            let dg = tg.get(&suffix);
            flux[v] = &flux[v] + &(&da * &dg).scale(&s);
            prefix = prefix.with_added(v);
        }
    }
    flux
}

/// The bilinear flux of the Fréchet identity
/// `h·δ_g f - Σ_α g^α (δ*_h f)_α = Σ_v D_v Ψ^v`, one component per
/// independent variable with time first.
pub fn psi_pair(f: &Expr, g: &[Expr], h: &Expr) -> Vec<Expr> {
    let n = f
        .jet_vars()
        .iter()
        .next()
        .map(|w| w.idx.len())
        .unwrap_or(0);
    let mut flux = vec![Expr::zero(); n];
    for w in f.jet_vars() {
        if w.idx.order() == 0 {
            continue;
        }
        let a = &jet_partial(f, &w) * h;
        for (v, c) in ibp_flux(&a, &g[w.dep], &w.idx).into_iter().enumerate() {
            flux[v] = &flux[v] + &c;
        }
    }
    flux
}

/// Total divergence `Σ_v D_v comps[v]`.
pub fn divergence(comps: &[Expr]) -> Expr {
    comps.iter().enumerate().map(|(v, c)| total_derivative(c, v)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ZeroMode;

    fn ctx() -> Context {
        Context::new(&["t", "x"], &["u"])
    }

    fn u(s: &str) -> Expr {
        ctx().jet(0, s)
    }

    fn p() -> RatFunc {
        RatFunc::var("p")
    }

    #[test]
    fn leibniz_and_chain_rule() {
        assert_eq!(total_derivative(&(&u("") * &u("x")), 1), &(&u("x") * &u("x")) + &(&u("") * &u("xx")));
        let e2t = Expr::exp(&Expr::indep(0).scale(&RatFunc::from(2)));
        let lhs = total_derivative(&(&e2t * &u("x")), 0);
        let rhs = &(&e2t * &u("x")).scale(&RatFunc::from(2)) + &(&e2t * &u("tx"));
        assert_eq!(lhs, rhs);
        let up = u("").pow(&p());
        let expect = &u("").pow(&p().sub(&RatFunc::one())).scale(&p()) * &u("x");
        assert_eq!(total_derivative(&up, 1), expect);
    }

    #[test]
    fn jet_partials() {
        let w = JetVar::new(0, ctx().index_of("x").unwrap());
        assert_eq!(jet_partial(&(&u("") * &u("x")), &w), u(""));
        let b = ctx().base_jet(0);
        assert_eq!(jet_partial(&u("").pow(&p()), &b), u("").pow(&p().sub(&RatFunc::one())).scale(&p()));
        let half = RatFunc::constant(crate::kernel::qf(1, 2));
        assert!(jet_partial(&(&u("x") * &u("x")).scale(&half), &b).is_zero());
    }

    #[test]
    fn frechet_examples() {
        let c = Context::new(&["t", "x"], &["u", "h"]);
        let f = &c.jet(0, "") * &c.jet(0, "x");
        let h = c.jet(1, "");
        let got = frechet(&f, &[h.clone(), Expr::zero()]);
        assert_eq!(got, &(&h * &c.jet(0, "x")) + &(&c.jet(0, "") * &c.jet(1, "x")));
        assert_eq!(frechet(&c.jet(0, ""), &[h.clone(), Expr::zero()]), h);

        let k = Expr::param("k");
        let g = &(&u("tx") + &u("x")) + &(&k * &u("").pow(&p()));
        let got = frechet(&g, &[-u("t")]);
        let kp = RatFunc::var("k").mul(&p());
        let expect = -(&(&u("ttx") + &u("tx")) + &(&u("").pow(&p().sub(&RatFunc::one())) * &u("t")).scale(&kp));
        assert_eq!(got, expect);
    }

    #[test]
    fn adjoint_and_euler_examples() {
        let c = Context::new(&["t", "x"], &["u", "g"]);
        let g = c.jet(1, "");
        let f = &c.jet(0, "") * &c.jet(0, "x");
        assert_eq!(frechet_adjoint(&f, &g, 0), -(&c.jet(0, "") * &c.jet(1, "x")));
        assert_eq!(frechet_adjoint(&c.jet(0, "xx"), &g, 0), c.jet(1, "xx"));

        let half = RatFunc::constant(crate::kernel::qf(1, 2));
        let ux2 = (&u("x") * &u("x")).scale(&half);
        assert_eq!(euler(&ux2, 0), -u("xx"));
        assert!(euler(&total_derivative(&(&u("") * &u("")), 1), 0).is_zero());
        assert_eq!(euler(&(&u("") * &u("xx")), 0), u("xx").scale(&RatFunc::from(2)));
    }

    #[test]
    fn gkdv_adjoint_symmetry_operator() {
        let c = Context::new(&["t", "x"], &["u", "Q"]);
        let k = Expr::param("k");
        let up = c.jet(0, "").pow(&p());
        let g = &(&c.jet(0, "t") + &c.jet(0, "xxx")) + &(&(&k * &up) * &c.jet(0, "x"));
        let qv = c.jet(1, "");
        let got = frechet_adjoint(&g, &qv, 0);
        let expect = -(&(&c.jet(1, "t") + &c.jet(1, "xxx")) + &(&(&k * &up) * &c.jet(1, "x")));
        assert_eq!(got, expect);
    }

    #[test]
    fn higher_euler_examples() {
        let half = RatFunc::constant(crate::kernel::qf(1, 2));
        let x = ctx().index_of("x").unwrap();
        let xx = ctx().index_of("xx").unwrap();
        assert_eq!(higher_euler(&(&u("x") * &u("x")).scale(&half), 0, &x), u("x"));
        assert_eq!(higher_euler(&(&u("") * &u("xx")), 0, &xx), u(""));
        let f = &(&u("xx") * &u("t")) + &u("").pow(&p());
        assert_eq!(higher_euler(&f, 0, &ctx().zero_index()), euler(&f, 0));
    }

    #[test]
    fn divergence_test() {
        let zt = ZeroTest::default();
        let f = &(&u("t") * &u("x")) + &(&u("") * &u("tx"));
        assert_eq!(is_total_divergence(&f, 1, &zt).unwrap(), Verdict::Pass);
        assert_eq!(is_total_divergence(&(&u("x") * &u("x")), 1, &zt).unwrap(), Verdict::Fail);
        let both = ZeroTest::default().with_mode(ZeroMode::Both);
        assert_eq!(is_total_divergence(&f, 1, &both).unwrap(), Verdict::Pass);
    }

    #[test]
    fn psi_pair_for_first_order_time_equation() {
        let c = Context::new(&["t", "x"], &["u", "g", "q"]);
        let f = c.jet(0, "t");
        let flux = psi_pair(&f, &[c.jet(1, ""), Expr::zero(), Expr::zero()], &c.jet(2, ""));
        assert_eq!(flux[0], &c.jet(1, "") * &c.jet(2, ""));
        assert!(flux[1].is_zero());
    }

    #[test]
    fn psi_pair_mixed_derivative_convention() {
        // f = u_tx + u_x: Ψ^t = -g·D_x h, Ψ^x = h·D_t g + h·g
        let c = Context::new(&["t", "x"], &["u", "g", "h"]);
        let f = &c.jet(0, "tx") + &c.jet(0, "x");
        let (g, h) = (c.jet(1, ""), c.jet(2, ""));
        let flux = psi_pair(&f, &[g.clone(), Expr::zero(), Expr::zero()], &h);
        assert_eq!(flux[0], -(&g * &c.jet(2, "x")));
        assert_eq!(flux[1], &(&h * &c.jet(1, "t")) + &(&h * &g));
    }

    #[test]
    fn frechet_identity_is_exact() {
        let c = Context::new(&["t", "x", "y"], &["u", "g", "h"]);
        let f = &(&c.jet(0, "txy") * &c.jet(0, "")) + &(&c.jet(0, "xxy") * &c.jet(0, "t"));
        let (g, h) = (c.jet(1, ""), c.jet(2, ""));
        let gs = [g.clone(), Expr::zero(), Expr::zero()];
        let lhs = &(&h * &frechet(&f, &gs)) - &(&g * &frechet_adjoint(&f, &h, 0));
        let flux = psi_pair(&f, &gs, &h);
        assert!((&lhs - &divergence(&flux)).is_zero());
    }
}
