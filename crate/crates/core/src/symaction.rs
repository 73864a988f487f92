//! Symmetries acting on multipliers and currents, and the classification of
//! symmetry-invariant and symmetry-homogeneous conservation laws.

use std::collections::BTreeMap;
use std::fmt;

use crate::calculus::euler;
use crate::conslaw::{multiplier_operator, psi_current, ratio, symmetry_operator};
use crate::error::{Error, Result};
use crate::kernel::{Expr, Mono, Normalizer, ParamSpec, PMono, Poly, RatFunc, Verdict};
use crate::linalg::{nullspace, solve_columns, spectrum, Row, Spectrum};
use crate::system::{Current, GOperator, PdeSystem};

pub fn check_symmetry(sys: &PdeSystem, p: &[Expr]) -> Result<Verdict> {
    let mut vs = Vec::new();
    for e in sys.frechet_all(p) {
        vs.push(sys.zt.is_zero(&sys.reduce_on_solutions(&e)?)?);
    }
    Ok(Verdict::all_zero(vs))
}

fn action_with(sys: &PdeSystem, p: &[Expr], rp: &[GOperator], q: &[Expr], rq: &[GOperator]) -> Vec<Expr> {
    let a = sys.adjoint_apply(rp, q);
    let b = sys.adjoint_apply(rq, p);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

/// `Q^X_a = R_P*(Q)_a - R_Q*(P)_a`.
pub fn action_on_multiplier(sys: &PdeSystem, p: &[Expr], q: &[Expr]) -> Result<Vec<Expr>> {
    if p.iter().all(Expr::is_zero) || q.iter().all(Expr::is_zero) {
        return Ok(vec![Expr::zero(); sys.n_eq()]);
    }
    let rp = symmetry_operator(sys, p)?;
    let rq = multiplier_operator(sys, q)?;
    Ok(action_with(sys, p, &rp, q, &rq))
}

pub fn action_on_current(sys: &PdeSystem, p: &[Expr], q: &[Expr]) -> Current {
    psi_current(sys, p, q)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Invariance {
    Invariant,
    Homogeneous(RatFunc),
    Neither(String),
}

impl fmt::Display for Invariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Invariance::Invariant => f.write_str("Invariant"),
            Invariance::Homogeneous(l) => write!(f, "Homogeneous λ = {l}"),
            Invariance::Neither(why) => write!(f, "Neither ({why})"),
        }
    }
}

fn reduced(sys: &PdeSystem, v: &[Expr]) -> Result<Vec<Expr>> {
    v.iter().map(|e| sys.reduce_on_solutions(e)).collect()
}

fn classify(action: &[Expr], q: &[Expr]) -> Invariance {
    if action.iter().all(|e| crate::kernel::normal_form(e).is_zero()) {
        return Invariance::Invariant;
    }
    match ratio(action, q) {
        Some(l) if l.is_zero() => Invariance::Invariant,
        Some(l) => Invariance::Homogeneous(l),
        None => Invariance::Neither("action is not a constant multiple of the multiplier".into()),
    }
}

pub fn invariance_check(sys: &PdeSystem, p: &[Expr], q: &[Expr]) -> Result<Invariance> {
    let a = reduced(sys, &action_on_multiplier(sys, p, q)?)?;
    let q = reduced(sys, q)?;
    Ok(classify(&a, &q))
}

/// Polynomial equations in the span coefficients `a_i`, `c_j` and `λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearSystem {
    pub a_syms: Vec<String>,
    pub c_syms: Vec<String>,
    pub lambda_sym: String,
    pub equations: Vec<RatFunc>,
    pub params: Vec<ParamSpec>,
}

pub const LAMBDA: &str = "lambda";

/// Coefficient symbols `a5`, `c3`, ... from block names ending in digits,
/// falling back to positions when the suffixes are missing or repeat.
pub fn coefficient_symbols(prefix: &str, names: &[String]) -> Vec<String> {
    let suffixes: Vec<String> = names.iter().map(|n| n.chars().skip_while(|c| !c.is_ascii_digit()).collect()).collect();
    let mut seen = std::collections::HashSet::new();
    let usable = suffixes.iter().all(|s| !s.is_empty() && seen.insert(s.clone()));
    (0..names.len())
        .map(|i| if usable { format!("{prefix}{}", suffixes[i]) } else { format!("{prefix}{}", i + 1) })
        .collect()
}

fn is_span_symbol(s: &str, bs: &BilinearSystem) -> bool {
    s == bs.lambda_sym || bs.a_syms.iter().any(|x| x == s) || bs.c_syms.iter().any(|x| x == s)
}

/// Coefficient rows of a family of expression vectors on their common normal
/// form: one row per monomial, one column per vector.
pub fn coefficient_matrix(cols: &[Vec<Expr>]) -> Vec<Row> {
    let refs: Vec<&Expr> = cols.iter().flatten().collect();
    let nf = Normalizer::for_exprs(&refs);
    let normal: Vec<Vec<Expr>> = cols.iter().map(|c| c.iter().map(|e| nf.apply(e)).collect()).collect();
    let mut keys: BTreeMap<(usize, Mono), usize> = BTreeMap::new();
    for c in &normal {
        for (slot, e) in c.iter().enumerate() {
            for t in e.terms() {
                let n = keys.len();
                keys.entry((slot, t.mono.clone())).or_insert(n);
            }
        }
    }
    let mut rows = vec![vec![RatFunc::zero(); cols.len()]; keys.len()];
    for (j, c) in normal.iter().enumerate() {
        for (slot, e) in c.iter().enumerate() {
            for t in e.terms() {
                rows[keys[&(slot, t.mono.clone())]][j] = t.coeff.clone();
            }
        }
    }
    rows
}

pub fn bilinear_system(
    sys: &PdeSystem,
    ps: &[(String, Vec<Expr>)],
    qs: &[(String, Vec<Expr>)],
) -> Result<BilinearSystem> {
    let p_names: Vec<String> = ps.iter().map(|(n, _)| n.clone()).collect();
    let q_names: Vec<String> = qs.iter().map(|(n, _)| n.clone()).collect();
    let a_syms = coefficient_symbols("a", &q_names);
    let c_syms = coefficient_symbols("c", &p_names);
    let mut bs = BilinearSystem {
        a_syms,
        c_syms,
        lambda_sym: LAMBDA.to_string(),
        equations: Vec::new(),
        params: sys.ctx.params.clone(),
    };
    if qs.is_empty() {
        return Ok(bs);
    }
    let rp: Vec<Vec<GOperator>> = ps.iter().map(|(_, p)| symmetry_operator(sys, p)).collect::<Result<_>>()?;
    let rq: Vec<Vec<GOperator>> = qs.iter().map(|(_, q)| multiplier_operator(sys, q)).collect::<Result<_>>()?;
    let lam = RatFunc::var(LAMBDA);
    let mut cols: Vec<Vec<Expr>> = Vec::new();
    let mut weights: Vec<RatFunc> = Vec::new();
    for (i, (_, q)) in qs.iter().enumerate() {
        let a = RatFunc::var(&bs.a_syms[i]);
        for (j, (_, p)) in ps.iter().enumerate() {
            cols.push(reduced(sys, &action_with(sys, p, &rp[j], q, &rq[i]))?);
            weights.push(a.mul(&RatFunc::var(&bs.c_syms[j])));
        }
        cols.push(reduced(sys, q)?);
        weights.push(a.mul(&lam).neg());
    }
    let rows = coefficient_matrix(&cols);
    for row in rows {
        let eq = row.iter().zip(&weights).fold(RatFunc::zero(), |acc, (x, w)| acc.add(&x.mul(w)));
        if eq.is_zero() {
            continue;
        }
        let eq = primitive(&eq, &bs);
        if !bs.equations.contains(&eq) {
            bs.equations.push(eq);
        }
    }
    Ok(bs)
}

/// Scalar multiple of `eq` whose first span-monomial coefficient is one.
fn primitive(eq: &RatFunc, bs: &BilinearSystem) -> RatFunc {
    let split = eq.split_by(&|s| is_span_symbol(s, bs));
    let (_, lead) = split.iter().next().expect("nonzero equation");
    eq.div(lead)
}

impl BilinearSystem {
    fn split(&self, eq: &RatFunc) -> BTreeMap<PMono, RatFunc> {
        eq.split_by(&|s| is_span_symbol(s, self))
    }

    /// Row vectors over span monomials after dividing each equation by its
    /// monomial content in the span symbols.
    fn span_rows(&self, eqs: &[RatFunc], strip_content: bool) -> (Vec<PMono>, Vec<Row>) {
        let splits: Vec<BTreeMap<PMono, RatFunc>> = eqs
            .iter()
            .map(|e| {
                let s = self.split(e);
                if !strip_content {
                    return s;
                }
                let content = s.keys().skip(1).fold(s.keys().next().cloned().unwrap_or_else(PMono::one), |g, m| g.gcd(m));
                s.into_iter().map(|(m, c)| (m.div(&content).unwrap(), c)).collect()
            })
            .collect();
        let mut monos: Vec<PMono> = splits.iter().flat_map(|s| s.keys().cloned()).collect();
        monos.sort();
        monos.dedup();
        let rows = splits
            .iter()
            .map(|s| monos.iter().map(|m| s.get(m).cloned().unwrap_or_else(RatFunc::zero)).collect())
            .collect();
        (monos, rows)
    }

    /// Whether `expected` spans the same equations, each taken up to scaling
    /// and a monomial factor in the span symbols.
    pub fn matches(&self, expected: &[RatFunc]) -> bool {
        let mut all = self.equations.clone();
        all.extend(expected.iter().cloned());
        self.same_span(&all, false) || self.same_span(&all, true)
    }

    fn same_span(&self, all: &[RatFunc], strip_content: bool) -> bool {
        let (monos, rows) = self.span_rows(all, strip_content);
        let ours = rows[..self.equations.len()].to_vec();
        let theirs = rows[self.equations.len()..].to_vec();
        let n = monos.len();
        let r1 = crate::linalg::rank(ours, n);
        let r2 = crate::linalg::rank(theirs, n);
        let r12 = crate::linalg::rank(rows, n);
        r1 == r2 && r1 == r12
    }

    /// The equations with the multiplier coefficients fixed, as linear forms
    /// in `[λ, c_1, ...]`.
    fn fixed_rows(&self, a: &[RatFunc]) -> Vec<Row> {
        let vals: BTreeMap<&str, RatFunc> = self.a_syms.iter().map(String::as_str).zip(a.iter().cloned()).collect();
        let unknowns: Vec<&str> = std::iter::once(self.lambda_sym.as_str()).chain(self.c_syms.iter().map(String::as_str)).collect();
        self.equations
            .iter()
            .filter_map(|eq| {
                let sub = eq.subst(&|s| vals.get(s).cloned());
                if sub.is_zero() {
                    return None;
                }
                let split = sub.split_by(&|s| unknowns.contains(&s));
                let row: Row = unknowns
                    .iter()
                    .map(|u| split.get(&PMono::var(&(*u).into())).cloned().unwrap_or_else(RatFunc::zero))
                    .collect();
                Some(row)
            })
            .collect()
    }

    pub fn solve_fixed_a(&self, a: &[RatFunc]) -> Result<FixedSolution> {
        if a.iter().all(RatFunc::is_zero) {
            return Err(Error::Usage("the multiplier coefficients must not all vanish".into()));
        }
        if a.len() != self.a_syms.len() {
            return Err(Error::Usage(format!("expected {} multiplier coefficients, got {}", self.a_syms.len(), a.len())));
        }
        let rows = self.fixed_rows(a);
        let n = self.c_syms.len() + 1;
        let ns = nullspace(rows.clone(), n, &self.params);
        let red = crate::linalg::rref(rows, n, &self.params);
        let mut unknowns = vec![self.lambda_sym.clone()];
        unknowns.extend(self.c_syms.iter().cloned());
        let as_linear = |row: &Row| -> RatFunc {
            row.iter().zip(&unknowns).fold(RatFunc::zero(), |acc, (x, u)| acc.add(&x.mul(&RatFunc::var(u))))
        };
        let mut lambda = None;
        let mut constraints = Vec::new();
        for (row, &pc) in red.rows.iter().zip(&red.pivots) {
            if pc == 0 {
                lambda = Some(as_linear(&row.iter().enumerate().map(|(i, x)| if i == 0 { RatFunc::zero() } else { x.neg() }).collect()));
            } else {
                constraints.push(as_linear(row));
            }
        }
        Ok(FixedSolution {
            unknowns,
            basis: ns.basis,
            lambda,
            constraints,
            assumptions: ns.assumptions,
        })
    }
}

/// Solution set of the bilinear system for fixed multiplier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedSolution {
    /// `[λ, c_1, ...]`.
    pub unknowns: Vec<String>,
    pub basis: Vec<Row>,
    /// `λ` as a linear form in the free symmetry coefficients, when it is
    /// determined by them.
    pub lambda: Option<RatFunc>,
    /// Remaining linear conditions `form = 0` on the symmetry coefficients.
    pub constraints: Vec<RatFunc>,
    /// Polynomials in the parameters assumed nonzero by the solve.
    pub assumptions: Vec<Poly>,
}

impl FixedSolution {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn eval(&self, form: &RatFunc, v: &Row) -> RatFunc {
        let vals: BTreeMap<&str, RatFunc> = self.unknowns.iter().map(String::as_str).zip(v.iter().cloned()).collect();
        form.subst(&|s| vals.get(s).cloned())
    }

    /// Whether `λ = form(c)` on the whole solution set.
    pub fn lambda_is(&self, form: &RatFunc) -> bool {
        let lam = RatFunc::var(&self.unknowns[0]);
        let d = lam.sub(form);
        !self.basis.is_empty() && self.basis.iter().all(|v| self.eval(&d, v).is_zero())
    }

    /// Whether `form` vanishes on the whole solution set.
    pub fn satisfies(&self, form: &RatFunc) -> bool {
        self.basis.iter().all(|v| self.eval(form, v).is_zero())
    }
}

/// Induced linear action of one symmetry on a span of multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionMatrix {
    /// `action(Q_i) = Σ_j m[j][i] Q_j`.
    pub m: Vec<Row>,
    pub spectrum: Spectrum,
    /// Eigenvectors per resolved eigenvalue.
    pub eigenvectors: Vec<(RatFunc, Vec<Row>)>,
}

pub fn action_matrix(sys: &PdeSystem, p: &[Expr], qs: &[Vec<Expr>]) -> Result<ActionMatrix> {
    let n = qs.len();
    let rp = symmetry_operator(sys, p)?;
    let mut cols: Vec<Vec<Expr>> = Vec::with_capacity(2 * n);
    for q in qs {
        cols.push(reduced(sys, q)?);
    }
    for q in qs {
        let rq = multiplier_operator(sys, q)?;
        cols.push(reduced(sys, &action_with(sys, p, &rp, q, &rq))?);
    }
    let rows = coefficient_matrix(&cols);
    let column = |k: usize| -> Row { rows.iter().map(|r| r[k].clone()).collect() };
    let basis: Vec<Row> = (0..n).map(column).collect();
    let mut m = vec![vec![RatFunc::zero(); n]; n];
    for i in 0..n {
        let x = solve_columns(&basis, &column(n + i), &sys.ctx.params)
            .ok_or_else(|| Error::NotClosed(format!("the action on multiplier {} leaves the span", i + 1)))?;
        for (row, v) in m.iter_mut().zip(x) {
            row[i] = v;
        }
    }
    let spectrum = spectrum(&m);
    let eigenvectors = spectrum
        .eigenvalues
        .iter()
        .map(|(l, _)| {
            let shifted: Vec<Row> = m
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, x)| if i == j { x.sub(l) } else { x.clone() }).collect())
                .collect();
            (l.clone(), nullspace(shifted, n, &sys.ctx.params).basis)
        })
        .collect();
    Ok(ActionMatrix { m, spectrum, eigenvectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnsatzKind {
    Multiplier,
    Symmetry,
}

/// Solutions of the multiplier or symmetry determining equations within the
/// span of `basis` (each element a full vector of components).
pub fn solve_linear_ansatz(sys: &PdeSystem, basis: &[Vec<Expr>], which: AnsatzKind) -> Result<Vec<Vec<Expr>>> {
    let mut cols = Vec::with_capacity(basis.len());
    for b in basis {
        let residual = match which {
            AnsatzKind::Multiplier => {
                let pairing = sys.pair_with_equations(b);
                (0..sys.ctx.n_dep()).map(|a| euler(&pairing, a)).collect()
            }
            AnsatzKind::Symmetry => reduced(sys, &sys.frechet_all(b))?,
        };
        cols.push(residual);
    }
    let rows = coefficient_matrix(&cols);
    let ns = nullspace(rows, basis.len(), &sys.ctx.params);
    Ok(ns
        .basis
        .iter()
        .map(|v| {
            let width = basis.first().map_or(0, Vec::len);
            (0..width)
                .map(|k| basis.iter().zip(v).map(|(b, c)| b[k].scale(c)).sum())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Context;
    use crate::corpus::parse_expr;
    use crate::kernel::{JetVar, ParamSpec};
    use crate::system::Ranking;

    fn system(params: &[&str], g: &str, lead: &str, ranking: Option<Vec<usize>>) -> PdeSystem {
        let mut c = Context::new(&["t", "x"], &["u"]);
        for p in params {
            c.params.push(ParamSpec { name: p.to_string(), nonzero: true, excluded: vec![] });
        }
        let ge = parse_expr(g, &c).unwrap();
        let lead = JetVar::new(0, c.index_of(lead).unwrap());
        PdeSystem::new("t", c, vec![("G".into(), ge, lead)], ranking.map(|priority| Ranking { priority })).unwrap()
    }

    fn gkdv() -> PdeSystem {
        system(&["p", "k"], "u_t + u_xxx + k*u^p*u_x", "t", Some(vec![0, 1]))
    }

    fn gmt() -> PdeSystem {
        let mut s = system(&["p", "k"], "u_tx + u_x + k*u^p", "tx", None);
        s.ctx.params[0].excluded.push(crate::kernel::q(1));
        s.zt.params = s.ctx.params.clone();
        s
    }

    fn v(sys: &PdeSystem, s: &str) -> Vec<Expr> {
        vec![parse_expr(s, &sys.ctx).unwrap()]
    }

    fn named(sys: &PdeSystem, items: &[(&str, &str)]) -> Vec<(String, Vec<Expr>)> {
        items.iter().map(|(n, s)| (n.to_string(), v(sys, s))).collect()
    }

    fn rf(s: &str, extra: &[&str]) -> RatFunc {
        let mut c = Context::new(&[], &[]);
        for p in ["p", "k"].iter().chain(extra) {
            c.params.push(ParamSpec { name: p.to_string(), nonzero: false, excluded: vec![] });
        }
        parse_expr(s, &c).unwrap().as_constant().unwrap()
    }

    #[test]
    fn symmetry_checks() {
        let g = gkdv();
        assert_eq!(check_symmetry(&g, &v(&g, "-u_x")).unwrap(), Verdict::Pass);
        assert_eq!(check_symmetry(&g, &v(&g, "u")).unwrap(), Verdict::Fail);
    }

    #[test]
    fn gkdv_scaling_acts_on_mass() {
        let g = gkdv();
        let p3 = v(&g, "-(3*t*u_t + x*u_x + 2/p*u)");
        let inv = invariance_check(&g, &p3, &[Expr::one()]).unwrap();
        assert_eq!(inv, Invariance::Homogeneous(rf("1 - 2/p", &[])));
        assert_eq!(invariance_check(&g, &v(&g, "-u_x"), &[Expr::one()]).unwrap(), Invariance::Invariant);
        let zero = action_on_multiplier(&g, &[Expr::zero()], &[Expr::one()]).unwrap();
        assert!(zero[0].is_zero());
    }

    #[test]
    fn gmt_time_translation_and_bilinear_system() {
        let m = gmt();
        let q2 = v(&m, "-exp(2*t)*u_x");
        let inv = invariance_check(&m, &v(&m, "-u_t"), &q2).unwrap();
        assert_eq!(inv, Invariance::Homogeneous(RatFunc::from(2)));
        let ps = named(&m, &[("X1", "-u_t"), ("X2", "-u_x"), ("X3", "exp((p-1)*t)*(u_t + u)"), ("X4", "(p-1)*x*u_x + u")]);
        let qs = named(
            &m,
            &[("Q1", "-exp(2*t)*(u_t + (p-1)*x*u_x + u)"), ("Q2", "-exp(2*t)*u_x"), ("Q3", "exp((p+1)*t)*(u_t + u)")],
        );
        let bs = bilinear_system(&m, &ps, &qs).unwrap();
        let syms = ["a1", "a2", "a3", "c1", "c2", "c3", "c4", "lambda"];
        let expected = [
            rf("a1*(lambda - 2*c1 - 2*c4)", &syms),
            rf("((p+1)*c4 + 2*c1 - lambda)*a2 + (p-1)*a1*c2", &syms),
            rf("((p+1)*c1 + 2*c4 - lambda)*a3 - (p-1)*a1*c3", &syms),
        ];
        assert!(bs.matches(&expected), "{:?}", bs.equations.iter().map(|e| e.to_string()).collect::<Vec<_>>());
        assert!(!bs.matches(&expected[..2]));
        let sol = bs.solve_fixed_a(&[RatFunc::one(), RatFunc::zero(), RatFunc::zero()]).unwrap();
        assert!(sol.lambda_is(&rf("2*(c1 + c4)", &syms)));
        assert!(sol.satisfies(&rf("c2", &syms)) && sol.satisfies(&rf("c3", &syms)));
        assert_eq!(sol.dim(), 2);
        let am = action_matrix(&m, &ps[0].1, &qs.iter().map(|q| q.1.clone()).collect::<Vec<_>>()).unwrap();
        assert_eq!(am.spectrum.unresolved_degree, 0);
        assert!(am.spectrum.eigenvalues.contains(&(RatFunc::from(2), 2)));
        assert!(am.spectrum.eigenvalues.contains(&(rf("p+1", &[]), 1)));
    }

    #[test]
    fn gkdv_multiplier_ansatz() {
        let g = gkdv();
        let basis: Vec<Vec<Expr>> = ["1", "u", "u_xx", "u^(p+1)"].iter().map(|s| v(&g, s)).collect();
        let sols = solve_linear_ansatz(&g, &basis, AnsatzKind::Multiplier).unwrap();
        assert_eq!(sols.len(), 3);
        let empty = solve_linear_ansatz(&g, &[v(&g, "u_x^2")], AnsatzKind::Multiplier).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn symbol_names_follow_block_suffixes() {
        let names: Vec<String> = ["Q1", "Q6p", "Q6m"].iter().map(|s| s.to_string()).collect();
        assert_eq!(coefficient_symbols("a", &names), vec!["a1", "a6p", "a6m"]);
        let dup: Vec<String> = ["Q1", "P1", "Qx"].iter().map(|s| s.to_string()).collect();
        assert_eq!(coefficient_symbols("a", &dup), vec!["a1", "a2", "a3"]);
    }
}
