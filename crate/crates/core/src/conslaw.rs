//! Multipliers, conserved currents and the scaling reconstruction formula.

use crate::calculus::{euler, higher_euler, ibp_flux, psi_pair, total_derivative_index};
use crate::error::{Error, Result};
use crate::kernel::{Atom, Expr, MultiIndex, Normalizer, RatFunc, Verdict, ZeroTest, ZeroVerdict};
use crate::system::{Current, GOperator, PdeSystem};

fn verdicts(zt: &ZeroTest, exprs: &[Expr]) -> Result<Verdict> {
    let mut vs = Vec::with_capacity(exprs.len());
    for e in exprs {
        vs.push(zt.is_zero(e)?);
    }
    Ok(Verdict::all_zero(vs))
}

/// Constant `c` of the parameter field with `a = c b` componentwise, decided
/// on a common normal form. `None` when `b` vanishes or no such `c` exists.
pub fn ratio(a: &[Expr], b: &[Expr]) -> Option<RatFunc> {
    let refs: Vec<&Expr> = a.iter().chain(b).collect();
    let nf = Normalizer::for_exprs(&refs);
    let na: Vec<Expr> = a.iter().map(|e| nf.apply(e)).collect();
    let nb: Vec<Expr> = b.iter().map(|e| nf.apply(e)).collect();
    let (i, t) = nb.iter().enumerate().find_map(|(i, e)| e.terms().first().map(|t| (i, t.clone())))?;
    let c = na[i].coeff_of(&t.mono).div(&t.coeff);
    let ok = na.iter().zip(&nb).all(|(x, y)| (x - &y.scale(&c)).is_zero());
    ok.then_some(c)
}

pub fn check_multiplier(sys: &PdeSystem, q: &[Expr]) -> Result<Verdict> {
    let pairing = sys.pair_with_equations(q);
    let el: Vec<Expr> = (0..sys.ctx.n_dep()).map(|a| euler(&pairing, a)).collect();
    verdicts(&sys.zt, &el)
}

pub fn check_adjoint_symmetry(sys: &PdeSystem, q: &[Expr]) -> Result<Verdict> {
    let mut reduced = Vec::new();
    for e in sys.adjoint_all(q) {
        reduced.push(sys.reduce_on_solutions(&e)?);
    }
    verdicts(&sys.zt, &reduced)
}

/// The operator rows of `δ*_Q G`, one per dependent variable.
pub fn multiplier_operator(sys: &PdeSystem, q: &[Expr]) -> Result<Vec<GOperator>> {
    sys.adjoint_all(q).iter().map(|e| sys.extract_r(e)).collect()
}

/// The operator rows of `δ_P G`, one per equation.
pub fn symmetry_operator(sys: &PdeSystem, p: &[Expr]) -> Result<Vec<GOperator>> {
    sys.frechet_all(p).iter().map(|e| sys.extract_r(e)).collect()
}

/// Helmholtz conditions: every coefficient of `R_Q` agrees on solutions with
/// `-(-1)^{|J|} E^J(Q)`.
pub fn check_helmholtz(sys: &PdeSystem, q: &[Expr]) -> Result<Verdict> {
    let rows = multiplier_operator(sys, q)?;
    let mut diffs = Vec::new();
    for (alpha, row) in rows.iter().enumerate() {
        let mut keys: Vec<(usize, MultiIndex)> = row.coeffs.keys().cloned().collect();
        for (a, qa) in q.iter().enumerate() {
            for w in qa.jet_vars() {
                if w.dep == alpha {
                    keys.extend(w.idx.sub_indices().into_iter().map(|j| (a, j)));
                }
            }
        }
        keys.sort();
        keys.dedup();
        for (a, j) in keys {
            let e = higher_euler(&q[a], alpha, &j);
            let expected = if j.order() % 2 == 0 { -e } else { e };
            let d = &row.get(a, &j) - &expected;
            diffs.push(sys.reduce_on_solutions(&d)?);
        }
    }
    verdicts(&sys.zt, &diffs)
}

/// With a multiplier, checks the characteristic identity
/// `D_t T + D_i X^i = Σ Q_a G^a` off the solution space; without one,
/// checks that the divergence vanishes on solutions.
pub fn verify_current(sys: &PdeSystem, phi: &Current, q: Option<&[Expr]>) -> Result<Verdict> {
    let div = phi.divergence();
    let e = match q {
        Some(q) => &div - &sys.pair_with_equations(q),
        None => sys.reduce_on_solutions(&div)?,
    };
    verdicts(&sys.zt, &[e])
}

/// Multiplier of a conserved current together with the current corrected by
/// a trivial current so that the characteristic identity holds exactly.
#[derive(Clone, Debug)]
pub struct Extracted {
    pub multiplier: Vec<Expr>,
    pub current: Current,
}

pub fn extract_multiplier(sys: &PdeSystem, phi: &Current) -> Result<Extracted> {
    let div = phi.divergence();
    let op = sys.extract_r(&div).map_err(|e| match e {
        Error::NotVanishingOnSolutions(m) => Error::NotConserved(m),
        other => other,
    })?;
    let n = sys.ctx.n_indep();
    let mut q = vec![Expr::zero(); sys.n_eq()];
    let mut correction = vec![Expr::zero(); n];
    for ((a, j), c) in &op.coeffs {
        let d = total_derivative_index(c, j);
        q[*a] = &q[*a] + &(if j.order() % 2 == 1 { -d } else { d });
        for (v, f) in ibp_flux(c, &sys.eqs[*a].expr, j).into_iter().enumerate() {
            correction[v] = &correction[v] + &f;
        }
    }
    let corrected = phi.sub(&Current::from_components(correction));
    Ok(Extracted { multiplier: q, current: corrected })
}

/// Multipliers reduced on solutions, the form in which they are compared.
pub fn reduced_multiplier(sys: &PdeSystem, q: &[Expr]) -> Result<Vec<Expr>> {
    q.iter().map(|e| sys.reduce_on_solutions(e)).collect()
}

/// Scale `s` with `q1 = s q2` on solutions, if any.
pub fn multiplier_scale(sys: &PdeSystem, q1: &[Expr], q2: &[Expr]) -> Result<Option<RatFunc>> {
    let a = reduced_multiplier(sys, q1)?;
    let b = reduced_multiplier(sys, q2)?;
    Ok(ratio(&a, &b))
}

pub fn is_trivial(sys: &PdeSystem, phi: &Current) -> Result<Verdict> {
    let ex = extract_multiplier(sys, phi)?;
    let red = reduced_multiplier(sys, &ex.multiplier)?;
    verdicts(&sys.zt, &red)
}

pub fn currents_equivalent(sys: &PdeSystem, a: &Current, b: &Current) -> Result<Verdict> {
    is_trivial(sys, &a.sub(b))
}

/// Scale `s` with `a ≡ s b` modulo trivial currents, if any.
pub fn current_scale(sys: &PdeSystem, a: &Current, b: &Current) -> Result<Option<RatFunc>> {
    let qa = extract_multiplier(sys, a)?.multiplier;
    let qb = extract_multiplier(sys, b)?.multiplier;
    multiplier_scale(sys, &qa, &qb)
}

/// `Ψ_G(P, Q)`: the current whose conservation follows from `P` being a
/// symmetry and `Q` an adjoint-symmetry.
pub fn psi_current(sys: &PdeSystem, p: &[Expr], q: &[Expr]) -> Current {
    let n = sys.ctx.n_indep();
    let mut comps = vec![Expr::zero(); n];
    for (e, qa) in sys.eqs.iter().zip(q) {
        if qa.is_zero() {
            continue;
        }
        for (v, c) in psi_pair(&e.expr, p, qa).into_iter().enumerate() {
            comps[v] = &comps[v] + &c;
        }
    }
    Current::from_components(comps)
}

/// Weights of a scaling symmetry `t -> λ^time t`, `x^i -> λ^space_i x^i`,
/// `u^α -> λ^dep_α u^α`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    pub time: RatFunc,
    pub space: Vec<RatFunc>,
    pub dep: Vec<RatFunc>,
}

impl Scaling {
    fn indep_weight(&self, v: usize) -> RatFunc {
        if v == 0 {
            self.time.clone()
        } else {
            self.space[v - 1].clone()
        }
    }

    /// `P^α = r_α u^α - (p t u^α_t + Σ q_i x^i u^α_{x_i})`.
    pub fn characteristic(&self, sys: &PdeSystem) -> Vec<Expr> {
        let n = sys.ctx.n_indep();
        (0..sys.ctx.n_dep())
            .map(|a| {
                let mut p = Expr::jet(sys.ctx.base_jet(a)).scale(&self.dep[a]);
                for v in 0..n {
                    let d = Expr::jet(sys.ctx.base_jet(a).derivative(v));
                    p = &p - &(&Expr::indep(v) * &d).scale(&self.indep_weight(v));
                }
                p
            })
            .collect()
    }

    /// The scaling generator acting on a function of the jet coordinates.
    pub fn generator(&self, f: &Expr) -> Expr {
        f.differentiate(&mut |a| match a {
            Atom::Indep(v) => Expr::indep(*v).scale(&self.indep_weight(*v)),
            Atom::Jet(j) => {
                let mut w = self.dep[j.dep].clone();
                for (v, &c) in j.idx.counts().iter().enumerate() {
                    w = w.sub(&self.indep_weight(v).mul(&RatFunc::from(c as i64)));
                }
                Expr::jet(j.clone()).scale(&w)
            }
            _ => Expr::zero(),
        })
    }
}

/// Result of the scaling formula.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    /// Scaling weight of the conserved quantity.
    pub weight: RatFunc,
    /// Scaling weight of the density.
    pub density_weight: RatFunc,
    pub current: Current,
}

/// Current of a multiplier from a scaling symmetry: `Φ = Ψ_G(P, Q) / w`.
pub fn scaling_reconstruct(sys: &PdeSystem, q: &[Expr], scaling: &Scaling) -> Result<Reconstruction> {
    let p = scaling.characteristic(sys);
    for e in sys.frechet_all(&p) {
        if sys.zt.is_zero(&sys.reduce_on_solutions(&e)?)? != ZeroVerdict::Zero {
            return Err(Error::NotVanishingOnSolutions("scaling characteristic is not a symmetry".into()));
        }
    }
    let psi = psi_current(sys, &p, q);
    let density = &psi.density;
    let image = scaling.generator(density);
    let k = ratio(std::slice::from_ref(&image), std::slice::from_ref(density))
        .ok_or_else(|| Error::WeightIndeterminate(format!("density {} is not scaling-homogeneous", density.display(&sys.ctx))))?;
    let weight = scaling.space.iter().fold(k.clone(), |acc, s| acc.add(s));
    if weight.is_zero() {
        return Err(Error::ScalingCritical(format!("weight {} vanishes", k.add(&scaling.space.iter().fold(RatFunc::zero(), |a, s| a.add(s))))));
    }
    let current = psi.scale(&weight.inv());
    Ok(Reconstruction { weight, density_weight: k, current })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::Context;
    use crate::corpus::parse_expr;
    use crate::kernel::{JetVar, ParamSpec};
    use crate::system::Ranking;

    fn system(indeps: &[&str], params: &[&str], g: &str, lead: &str, ranking: Option<Vec<usize>>) -> PdeSystem {
        let mut c = Context::new(indeps, &["u"]);
        for p in params {
            c.params.push(ParamSpec { name: p.to_string(), nonzero: true, excluded: vec![] });
        }
        let ge = parse_expr(g, &c).unwrap();
        let lead = JetVar::new(0, c.index_of(lead).unwrap());
        PdeSystem::new("t", c, vec![("G".into(), ge, lead)], ranking.map(|priority| Ranking { priority })).unwrap()
    }

    fn gkdv() -> PdeSystem {
        system(&["t", "x"], &["p", "k"], "u_t + u_xxx + k*u^p*u_x", "t", Some(vec![0, 1]))
    }

    fn gmt() -> PdeSystem {
        system(&["t", "x"], &["p", "k"], "u_tx + u_x + k*u^p", "tx", None)
    }

    fn e(sys: &PdeSystem, s: &str) -> Expr {
        parse_expr(s, &sys.ctx).unwrap()
    }

    fn cur(sys: &PdeSystem, t: &str, x: &str) -> Current {
        Current { density: e(sys, t), flux: vec![e(sys, x)] }
    }

    #[test]
    fn multiplier_checks() {
        let g = gkdv();
        assert_eq!(check_multiplier(&g, &[Expr::one()]).unwrap(), Verdict::Pass);
        assert_eq!(check_adjoint_symmetry(&g, &[e(&g, "u_x")]).unwrap(), Verdict::Fail);
        let m = gmt();
        let q3 = e(&m, "exp((p+1)*t)*(u_t + u)");
        assert_eq!(check_multiplier(&m, std::slice::from_ref(&q3)).unwrap(), Verdict::Pass);
        assert_eq!(check_helmholtz(&m, &[q3]).unwrap(), Verdict::Pass);
        let bad = e(&m, "-exp(2*t)*u_t");
        assert_eq!(check_multiplier(&m, std::slice::from_ref(&bad)).unwrap(), Verdict::Fail);
        assert_eq!(check_adjoint_symmetry(&m, std::slice::from_ref(&bad)).unwrap(), Verdict::Pass);
        assert_eq!(check_helmholtz(&m, &[bad]).unwrap(), Verdict::Fail);
        let q2 = e(&m, "-exp(2*t)*u_x");
        assert_eq!(check_helmholtz(&m, &[q2]).unwrap(), Verdict::Pass);
    }

    #[test]
    fn current_round_trip() {
        let g = gkdv();
        let mass = cur(&g, "u", "u_xx + k/(p+1)*u^(p+1)");
        assert_eq!(verify_current(&g, &mass, Some(&[Expr::one()])).unwrap(), Verdict::Pass);
        let ex = extract_multiplier(&g, &mass).unwrap();
        assert_eq!(ratio(&ex.multiplier, &[Expr::one()]), Some(RatFunc::one()));
        let m = gmt();
        let phi3 = cur(&m, "k/(p+1)*exp((p+1)*t)*u^(p+1)", "1/2*exp((p+1)*t)*(u + u_t)^2");
        let ex = extract_multiplier(&m, &phi3).unwrap();
        let q3 = e(&m, "exp((p+1)*t)*(u_t + u)");
        assert_eq!(multiplier_scale(&m, &ex.multiplier, std::slice::from_ref(&q3)).unwrap(), Some(RatFunc::one()));
        assert_eq!(verify_current(&m, &ex.current, Some(&ex.multiplier)).unwrap(), Verdict::Pass);
    }

    #[test]
    fn trivial_currents() {
        let g = gkdv();
        let theta = e(&g, "u*u_x");
        let triv = Current { density: crate::calculus::total_derivative(&theta, 1), flux: vec![-crate::calculus::total_derivative(&theta, 0)] };
        assert_eq!(verify_current(&g, &triv, None).unwrap(), Verdict::Pass);
        assert_eq!(is_trivial(&g, &triv).unwrap(), Verdict::Pass);
        let mom = cur(&g, "-1/2*u^2", "-u*u_xx + 1/2*u_x^2 - k/(p+2)*u^(p+2)");
        assert_eq!(is_trivial(&g, &mom).unwrap(), Verdict::Fail);
        assert_eq!(currents_equivalent(&g, &mom, &mom.add(&triv)).unwrap(), Verdict::Pass);
        let q = extract_multiplier(&g, &mom.add(&triv)).unwrap().multiplier;
        assert_eq!(multiplier_scale(&g, &q, &[e(&g, "-u")]).unwrap(), Some(RatFunc::one()));
    }

    #[test]
    fn scaling_formula_for_mass() {
        let g = gkdv();
        let p = RatFunc::var("p");
        let sc = Scaling { time: RatFunc::from(3), space: vec![RatFunc::one()], dep: vec![RatFunc::from(-2).div(&p)] };
        let rec = scaling_reconstruct(&g, &[Expr::one()], &sc).unwrap();
        assert_eq!(rec.weight, RatFunc::one().sub(&RatFunc::from(2).div(&p)));
        let mass = cur(&g, "u", "u_xx + k/(p+1)*u^(p+1)");
        assert_eq!(currents_equivalent(&g, &rec.current, &mass).unwrap(), Verdict::Pass);
        let g2 = g.specialize(&[("p".to_string(), RatFunc::from(2))].into_iter().collect()).unwrap();
        let sc2 = Scaling { time: RatFunc::from(3), space: vec![RatFunc::one()], dep: vec![RatFunc::from(-1)] };
        assert!(matches!(scaling_reconstruct(&g2, &[Expr::one()], &sc2), Err(Error::ScalingCritical(_))));
    }
}
