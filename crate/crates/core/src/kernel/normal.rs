//! Normal form used by the canonical zero test.
//!
//! Canonical expansion alone cannot see that `(u - u_xx)^(-1) * (u - u_xx)`
//! equals one once the product has been distributed. Every non-monomial
//! base `S` is therefore turned into a fresh coordinate `s_i` by solving `S`
//! for one of its linearly occurring jet variables and substituting. The
//! change of coordinates is invertible, so an expression is zero exactly when
//! its normal form is the zero sum.

use std::collections::{BTreeSet, HashMap};

use super::expr::{Atom, Expr, JetVar};

#[derive(Clone, Debug, Default)]
pub struct Normalizer {
    steps: Vec<(JetVar, Expr)>,
}

fn collect_bases(e: &Expr, out: &mut BTreeSet<Expr>) {
    e.visit_atoms(&mut |a| match a {
        Atom::Pow(b) | Atom::Ln(b) if b.len() > 1 && !b.jet_vars().is_empty() => {
            out.insert(b.clone());
        }
        _ => {}
    });
}

/// A jet variable occurring in `s` only as a lone linear term with a
/// parameter-field coefficient; the highest such variable is preferred.
fn pivot(s: &Expr) -> Option<JetVar> {
    let mut best: Option<JetVar> = None;
    for (i, t) in s.terms().iter().enumerate() {
        let [(Atom::Jet(v), e)] = t.mono.factors() else { continue };
        if !e.is_one() {
            continue;
        }
        let elsewhere = s
            .terms()
            .iter()
            .enumerate()
            .any(|(k, u)| k != i && Expr::from_term(u.clone()).jet_vars().contains(v));
        if !elsewhere && best.as_ref().is_none_or(|b| v > b) {
            best = Some(v.clone());
        }
    }
    best
}

impl Normalizer {
    pub fn for_exprs(exprs: &[&Expr]) -> Self {
        let mut bases = BTreeSet::new();
        for e in exprs {
            collect_bases(e, &mut bases);
        }
        let mut steps: Vec<(JetVar, Expr)> = Vec::new();
        for (i, s) in bases.into_iter().enumerate() {
            let s2 = apply_steps(&s, &steps);
            if s2.len() < 2 {
                continue;
            }
            let Some(v) = pivot(&s2) else { continue };
            let coeff = s2.terms().iter().find(|t| matches!(t.mono.factors(), [(Atom::Jet(w), _)] if *w == v)).unwrap().coeff.clone();
            let rest = &s2 - &Expr::jet(v.clone()).scale(&coeff);
            let replacement = (&Expr::sym(i) - &rest).scale(&coeff.inv());
            steps.push((v, replacement));
        }
        Normalizer { steps }
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        apply_steps(e, &self.steps)
    }

    pub fn is_trivial(&self) -> bool {
        self.steps.is_empty()
    }
}

fn apply_steps(e: &Expr, steps: &[(JetVar, Expr)]) -> Expr {
    let mut cur = e.clone();
    for (v, r) in steps {
        if !cur.jet_vars().contains(v) {
            continue;
        }
        let mut m = HashMap::new();
        m.insert(v.clone(), r.clone());
        cur = cur.subst_jets(&m);
    }
    cur
}

/// Normal form of a single expression.
pub fn normal_form(e: &Expr) -> Expr {
    let n = Normalizer::for_exprs(&[e]);
    if n.is_trivial() {
        e.clone()
    } else {
        n.apply(e)
    }
}
