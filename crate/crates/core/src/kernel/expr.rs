use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_traits::Signed;

use super::poly::{RatFunc, Sym, Q};

/// Derivative counts per independent variable, time slot first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    pub fn unit(n: usize, v: usize) -> Self {
        let mut c = vec![0; n];
        c[v] = 1;
        MultiIndex(c)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, v: usize) -> u32 {
        self.0[v]
    }

    pub fn with_added(&self, v: usize) -> Self {
        let mut c = self.0.clone();
        c[v] += 1;
        MultiIndex(c)
    }

    pub fn plus(&self, other: &MultiIndex) -> Self {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn minus(&self, other: &MultiIndex) -> Option<Self> {
        let mut c = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if b > a {
                return None;
            }
            c.push(a - b);
        }
        Some(MultiIndex(c))
    }

    pub fn contains(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    /// The variables of this index as a sorted sequence, e.g. `txx -> [0,1,1]`.
    pub fn to_sequence(&self) -> Vec<usize> {
        let mut s = Vec::new();
        for (v, &c) in self.0.iter().enumerate() {
            for _ in 0..c {
                s.push(v);
            }
        }
        s
    }

    /// All indices `L` with `L <= self` componentwise.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::new()];
        for &c in &self.0 {
            let mut next = Vec::new();
            for prefix in &out {
                for k in 0..=c {
                    let mut p: Vec<u32> = prefix.clone();
                    p.push(k);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(MultiIndex).collect()
    }

    /// Product of binomials `prod_i C(self_i, other_i)`.
    pub fn binomial(&self, other: &MultiIndex) -> u64 {
        self.0.iter().zip(&other.0).map(|(&n, &k)| binom(n as u64, k as u64)).product()
    }
}

fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct JetVar {
    pub dep: usize,
    pub idx: MultiIndex,
}

impl JetVar {
    pub fn new(dep: usize, idx: MultiIndex) -> Self {
        JetVar { dep, idx }
    }

    pub fn base(dep: usize, n_indep: usize) -> Self {
        JetVar { dep, idx: MultiIndex::zero(n_indep) }
    }

    pub fn derivative(&self, v: usize) -> Self {
        JetVar { dep: self.dep, idx: self.idx.with_added(v) }
    }

    pub fn order(&self) -> u32 {
        self.idx.order()
    }
}

/// Basis element of a monomial. The derived order puts jet variables first,
/// then slack placeholders, independent variables, normal-form symbols and
/// finally the transcendental atoms; parameters live in coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    Jet(JetVar),
    /// Stand-in for `D_J G^a` when working off the solution space.
    Slack(usize, MultiIndex),
    Indep(usize),
    /// Auxiliary coordinate introduced by the normal form.
    Sym(usize),
    Exp(Expr),
    Ln(Expr),
    /// Power of a base that is not itself a monomial, e.g. `(u - u_xx)^(1/b)`.
    Pow(Expr),
}

impl Atom {
    fn is_leaf(&self) -> bool {
        matches!(self, Atom::Jet(_) | Atom::Slack(..) | Atom::Indep(_) | Atom::Sym(_))
    }
}

/// Product of atoms raised to parameter-field exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Mono(Vec<(Atom, RatFunc)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn factors(&self) -> &[(Atom, RatFunc)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent_of(&self, a: &Atom) -> Option<&RatFunc> {
        self.0.iter().find(|(b, _)| b == a).map(|(_, e)| e)
    }

    /// Canonicalize a raw factor list; returns the leftover factor produced
    /// when a non-monomial base reaches a positive integer power.
    fn normalize(mut raw: Vec<(Atom, RatFunc)>) -> (Mono, Option<Expr>) {
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Atom, RatFunc)> = Vec::with_capacity(raw.len());
        let mut exp_arg: Option<Expr> = None;
        let mut extra: Option<Expr> = None;
        for (a, e) in raw {
            if e.is_zero() {
                continue;
            }
            if let Atom::Exp(arg) = &a {
                let scaled = if e.is_one() { arg.clone() } else { arg.scale(&e) };
                exp_arg = Some(match exp_arg {
                    None => scaled,
                    Some(prev) => &prev + &scaled,
                });
                continue;
            }
            match out.last_mut() {
                Some((b, f)) if *b == a => *f = f.add(&e),
                _ => out.push((a, e)),
            }
        }
        out.retain(|(_, e)| !e.is_zero());
        let mut kept = Vec::with_capacity(out.len() + 1);
        for (a, e) in out {
            if let Atom::Pow(base) = &a {
                if let Some(n) = e.as_integer().filter(|n| *n > 0) {
                    let p = base.pow_int(n);
                    extra = Some(match extra {
                        None => p,
                        Some(x) => &x * &p,
                    });
                    continue;
                }
            }
            kept.push((a, e));
        }
        if let Some(arg) = exp_arg {
            if !arg.is_zero() {
                kept.push((Atom::Exp(arg), RatFunc::one()));
                kept.sort_by(|a, b| a.0.cmp(&b.0));
            }
        }
        (Mono(kept), extra)
    }

    fn mul(&self, other: &Mono) -> (Mono, Option<Expr>) {
        if self.is_one() {
            return (other.clone(), None);
        }
        if other.is_one() {
            return (self.clone(), None);
        }
        let simple = |m: &Mono| m.0.iter().all(|(a, _)| a.is_leaf());
        if simple(self) && simple(other) {
            let mut out = Vec::with_capacity(self.0.len() + other.0.len());
            let (mut i, mut j) = (0, 0);
            while i < self.0.len() && j < other.0.len() {
                match self.0[i].0.cmp(&other.0[j].0) {
                    std::cmp::Ordering::Less => {
                        out.push(self.0[i].clone());
                        i += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        out.push(other.0[j].clone());
                        j += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        let e = self.0[i].1.add(&other.0[j].1);
                        if !e.is_zero() {
                            out.push((self.0[i].0.clone(), e));
                        }
                        i += 1;
                        j += 1;
                    }
                }
            }
            out.extend_from_slice(&self.0[i..]);
            out.extend_from_slice(&other.0[j..]);
            return (Mono(out), None);
        }
        let raw: Vec<_> = self.0.iter().chain(other.0.iter()).cloned().collect();
        Mono::normalize(raw)
    }

    fn pow(&self, r: &RatFunc) -> (Mono, Option<Expr>) {
        let raw = self.0.iter().map(|(a, e)| (a.clone(), e.mul(r))).collect();
        Mono::normalize(raw)
    }

    /// Copy with the exponent of `a` lowered by one, if `a` is a factor.
    pub fn lowered_by(&self, a: &Atom) -> Option<Mono> {
        self.0.iter().position(|(b, _)| b == a).map(|i| self.lowered(i))
    }

    /// Copy with the exponent of factor `i` lowered by one.
    fn lowered(&self, i: usize) -> Mono {
        let mut v = self.0.clone();
        let e = v[i].1.sub(&RatFunc::one());
        if e.is_zero() {
            v.remove(i);
        } else {
            v[i].1 = e;
        }
        Mono(v)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Term {
    pub mono: Mono,
    pub coeff: RatFunc,
}

/// Canonical expression: a sorted sum of monomials with nonzero
/// parameter-field coefficients. Every constructor returns canonical form,
/// so structural equality is equality of canonical forms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(Arc<Vec<Term>>);

/// Accumulates terms and produces a canonical [`Expr`].
#[derive(Default)]
pub struct Builder {
    map: HashMap<Mono, RatFunc>,
}

impl Builder {
    pub fn new() -> Self {
        Builder::default()
    }

    pub fn add_term(&mut self, mono: Mono, coeff: RatFunc) {
        if coeff.is_zero() {
            return;
        }
        match self.map.get_mut(&mono) {
            Some(c) => *c = c.add(&coeff),
            None => {
                self.map.insert(mono, coeff);
            }
        }
    }

    pub fn add(&mut self, e: &Expr) {
        for t in e.terms() {
            self.add_term(t.mono.clone(), t.coeff.clone());
        }
    }

    pub fn add_scaled(&mut self, e: &Expr, c: &RatFunc) {
        if c.is_zero() {
            return;
        }
        for t in e.terms() {
            self.add_term(t.mono.clone(), t.coeff.mul(c));
        }
    }

    /// Add `mono * coeff * e`.
    pub fn add_product(&mut self, mono: &Mono, coeff: &RatFunc, e: &Expr) {
        for t in e.terms() {
            let c = coeff.mul(&t.coeff);
            let (m, extra) = mono.mul(&t.mono);
            match extra {
                None => self.add_term(m, c),
                Some(x) => self.add_product(&m, &c, &x),
            }
        }
    }

    pub fn build(self) -> Expr {
        let mut terms: Vec<Term> = self
            .map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(mono, coeff)| Term { mono, coeff })
            .collect();
        terms.sort_by(|a, b| a.mono.cmp(&b.mono));
        Expr(Arc::new(terms))
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr(Arc::new(Vec::new()))
    }

    pub fn one() -> Self {
        Expr::constant(RatFunc::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(RatFunc::from(n))
    }

    pub fn rational(c: Q) -> Self {
        Expr::constant(RatFunc::constant(c))
    }

    pub fn constant(c: RatFunc) -> Self {
        if c.is_zero() {
            Expr::zero()
        } else {
            Expr(Arc::new(vec![Term { mono: Mono::one(), coeff: c }]))
        }
    }

    pub fn param(name: &str) -> Self {
        Expr::constant(RatFunc::var(name))
    }

    pub fn atom(a: Atom) -> Self {
        Expr(Arc::new(vec![Term { mono: Mono(vec![(a, RatFunc::one())]), coeff: RatFunc::one() }]))
    }

    pub fn jet(j: JetVar) -> Self {
        Expr::atom(Atom::Jet(j))
    }

    pub fn indep(i: usize) -> Self {
        Expr::atom(Atom::Indep(i))
    }

    pub fn slack(eq: usize, idx: MultiIndex) -> Self {
        Expr::atom(Atom::Slack(eq, idx))
    }

    pub fn sym(i: usize) -> Self {
        Expr::atom(Atom::Sym(i))
    }

    pub fn from_term(t: Term) -> Self {
        if t.coeff.is_zero() {
            Expr::zero()
        } else {
            Expr(Arc::new(vec![t]))
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The value if the expression is free of atoms.
    pub fn as_constant(&self) -> Option<RatFunc> {
        match self.0.as_slice() {
            [] => Some(RatFunc::zero()),
            [t] if t.mono.is_one() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn exp(arg: &Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::atom(Atom::Exp(arg.clone()))
    }

    pub fn ln(arg: &Expr) -> Expr {
        if let [t] = arg.terms() {
            if t.coeff.is_one() {
                if t.mono.is_one() {
                    return Expr::zero();
                }
                if let [(Atom::Exp(inner), e)] = t.mono.factors() {
                    return inner.scale(e);
                }
            }
        }
        Expr::atom(Atom::Ln(arg.clone()))
    }

    pub fn scale(&self, c: &RatFunc) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        Expr(Arc::new(self.0.iter().map(|t| Term { mono: t.mono.clone(), coeff: t.coeff.mul(c) }).collect()))
    }

    pub fn pow_int(&self, n: i64) -> Expr {
        self.pow(&RatFunc::from(n))
    }

    pub fn pow(&self, r: &RatFunc) -> Expr {
        if r.is_zero() {
            return Expr::one();
        }
        if r.is_one() {
            return self.clone();
        }
        if self.is_zero() {
            assert!(
                r.as_const().is_some_and(|c| c.is_positive()),
                "zero raised to a non-positive power"
            );
            return Expr::zero();
        }
        let n = r.as_integer();
        if let [t] = self.terms() {
            if let Some(n) = n {
                let c = t.coeff.powi(n);
                let (m, extra) = t.mono.pow(r);
                return with_extra(m, c, extra);
            }
            if t.coeff.is_one() {
                let (m, extra) = t.mono.pow(r);
                return with_extra(m, RatFunc::one(), extra);
            }
            return Expr(Arc::new(vec![Term { mono: Mono(vec![(Atom::Pow(self.clone()), r.clone())]), coeff: RatFunc::one() }]));
        }
        if let Some(n) = n.filter(|n| *n > 0) {
            let mut acc = Expr::one();
            let mut base = self.clone();
            let mut k = n;
            while k > 0 {
                if k & 1 == 1 {
                    acc = &acc * &base;
                }
                k >>= 1;
                if k > 0 {
                    base = &base * &base;
                }
            }
            return acc;
        }
        let lead = self.0[0].coeff.clone();
        if lead.is_one() {
            return Expr(Arc::new(vec![Term { mono: Mono(vec![(Atom::Pow(self.clone()), r.clone())]), coeff: RatFunc::one() }]));
        }
        if let Some(n) = n {
            let base = self.scale(&lead.inv());
            return Expr(Arc::new(vec![Term { mono: Mono(vec![(Atom::Pow(base), r.clone())]), coeff: lead.powi(n) }]));
        }
        Expr(Arc::new(vec![Term { mono: Mono(vec![(Atom::Pow(self.clone()), r.clone())]), coeff: RatFunc::one() }]))
    }

    pub fn recip(&self) -> Expr {
        self.pow_int(-1)
    }

    pub fn div(&self, other: &Expr) -> Expr {
        self * &other.recip()
    }

    /// Visit every atom, descending into transcendental arguments and bases.
    pub fn visit_atoms(&self, f: &mut dyn FnMut(&Atom)) {
        for t in self.terms() {
            for (a, _) in t.mono.factors() {
                f(a);
                match a {
                    Atom::Exp(x) | Atom::Ln(x) | Atom::Pow(x) => x.visit_atoms(f),
                    _ => {}
                }
            }
        }
    }

    pub fn jet_vars(&self) -> BTreeSet<JetVar> {
        let mut s = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if let Atom::Jet(j) = a {
                s.insert(j.clone());
            }
        });
        s
    }

    pub fn has_slack(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= matches!(a, Atom::Slack(..)));
        found
    }

    pub fn has_sym(&self) -> bool {
        let mut found = false;
        self.visit_atoms(&mut |a| found |= matches!(a, Atom::Sym(..)));
        found
    }

    pub fn indeps(&self) -> BTreeSet<usize> {
        let mut s = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if let Atom::Indep(i) = a {
                s.insert(*i);
            }
        });
        s
    }

    /// Parameter symbols appearing in coefficients or exponents.
    pub fn params(&self) -> BTreeSet<Sym> {
        let mut s = BTreeSet::new();
        fn walk(e: &Expr, s: &mut BTreeSet<Sym>) {
            for t in e.terms() {
                s.extend(t.coeff.symbols());
                for (a, x) in t.mono.factors() {
                    s.extend(x.symbols());
                    if let Atom::Exp(y) | Atom::Ln(y) | Atom::Pow(y) = a {
                        walk(y, s);
                    }
                }
            }
        }
        walk(self, &mut s);
        s
    }

    /// Highest derivative order among the jet variables present.
    pub fn max_order(&self) -> u32 {
        self.jet_vars().iter().map(|j| j.order()).max().unwrap_or(0)
    }

    /// Differentiate, with `leaf` supplying derivatives of leaf atoms.
    pub fn differentiate(&self, leaf: &mut dyn FnMut(&Atom) -> Expr) -> Expr {
        let mut cache: HashMap<Atom, Expr> = HashMap::new();
        self.differentiate_cached(leaf, &mut cache)
    }

    fn differentiate_cached(&self, leaf: &mut dyn FnMut(&Atom) -> Expr, cache: &mut HashMap<Atom, Expr>) -> Expr {
        let mut b = Builder::new();
        for t in self.terms() {
            for (i, (a, e)) in t.mono.factors().iter().enumerate() {
                let inner = match cache.get(a) {
                    Some(d) => d.clone(),
                    None => {
                        let d = match a {
                            Atom::Exp(x) | Atom::Pow(x) => x.differentiate_cached(leaf, cache),
                            Atom::Ln(x) => {
                                let dx = x.differentiate_cached(leaf, cache);
                                if dx.is_zero() {
                                    dx
                                } else {
                                    &dx * &x.recip()
                                }
                            }
                            _ => leaf(a),
                        };
                        cache.insert(a.clone(), d.clone());
                        d
                    }
                };
                if inner.is_zero() {
                    continue;
                }
                if matches!(a, Atom::Exp(_)) {
                    b.add_product(&t.mono, &t.coeff, &inner);
                } else {
                    b.add_product(&t.mono.lowered(i), &t.coeff.mul(e), &inner);
                }
            }
        }
        b.build()
    }

    /// Rebuild through the smart constructors, replacing leaf atoms where
    /// `leaf` returns `Some` and transforming coefficients/exponents by `coeff`.
    pub fn rebuild(
        &self,
        leaf: &mut dyn FnMut(&Atom) -> Option<Expr>,
        coeff: Option<&dyn Fn(&RatFunc) -> RatFunc>,
    ) -> Expr {
        let mut cache: HashMap<Atom, Option<Expr>> = HashMap::new();
        self.rebuild_cached(leaf, coeff, &mut cache)
    }

    fn rebuild_cached(
        &self,
        leaf: &mut dyn FnMut(&Atom) -> Option<Expr>,
        coeff: Option<&dyn Fn(&RatFunc) -> RatFunc>,
        cache: &mut HashMap<Atom, Option<Expr>>,
    ) -> Expr {
        let mut b = Builder::new();
        for t in self.terms() {
            let mut changed = coeff.is_some();
            let mut parts: Vec<(Option<Expr>, RatFunc)> = Vec::with_capacity(t.mono.factors().len());
            for (a, e) in t.mono.factors() {
                let rep = match cache.get(a) {
                    Some(r) => r.clone(),
                    None => {
                        let r = match a {
                            Atom::Exp(x) => {
                                let y = x.rebuild_cached(leaf, coeff, cache);
                                (coeff.is_some() || y != *x).then(|| Expr::exp(&y))
                            }
                            Atom::Ln(x) => {
                                let y = x.rebuild_cached(leaf, coeff, cache);
                                (coeff.is_some() || y != *x).then(|| Expr::ln(&y))
                            }
                            Atom::Pow(x) => {
                                let y = x.rebuild_cached(leaf, coeff, cache);
                                (coeff.is_some() || y != *x).then_some(y)
                            }
                            _ => leaf(a),
                        };
                        cache.insert(a.clone(), r.clone());
                        r
                    }
                };
                changed |= rep.is_some();
                parts.push((rep, e.clone()));
            }
            if !changed {
                b.add_term(t.mono.clone(), t.coeff.clone());
                continue;
            }
            let c = match coeff {
                Some(f) => f(&t.coeff),
                None => t.coeff.clone(),
            };
            let mut acc = Expr::constant(c);
            for ((a, e), (rep, _)) in t.mono.factors().iter().zip(parts) {
                let e2 = match coeff {
                    Some(f) => f(e),
                    None => e.clone(),
                };
                let base = match (rep, a) {
                    (Some(r), _) => r,
                    (None, Atom::Pow(x)) => x.clone(),
                    (None, a) => Expr::atom(a.clone()),
                };
                let factor = if matches!(a, Atom::Pow(_) | Atom::Exp(_) | Atom::Ln(_)) || !e2.is_one() {
                    base.pow(&e2)
                } else {
                    base
                };
                acc = &acc * &factor;
                if acc.is_zero() {
                    break;
                }
            }
            b.add(&acc);
        }
        b.build()
    }

    pub fn subst_jets(&self, map: &HashMap<JetVar, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        self.rebuild(
            &mut |a| match a {
                Atom::Jet(j) => map.get(j).cloned(),
                _ => None,
            },
            None,
        )
    }

    pub fn subst_params(&self, vals: &HashMap<String, RatFunc>) -> Expr {
        if vals.is_empty() {
            return self.clone();
        }
        let f = |r: &RatFunc| r.subst(&|s| vals.get(s).cloned());
        self.rebuild(&mut |_| None, Some(&f))
    }

    /// Like [`Expr::subst_params`], failing with `DomainError` when a
    /// coefficient or exponent has a pole at the given values.
    pub fn try_subst_params(&self, vals: &HashMap<String, RatFunc>) -> crate::error::Result<Expr> {
        if vals.is_empty() {
            return Ok(self.clone());
        }
        let pole = std::cell::Cell::new(false);
        let f = |r: &RatFunc| {
            r.try_subst(&|s| vals.get(s).cloned()).unwrap_or_else(|| {
                pole.set(true);
                RatFunc::zero()
            })
        };
        let out = self.rebuild(&mut |_| None, Some(&f));
        if pole.get() {
            let at: Vec<String> = vals.iter().map(|(k, v)| format!("{k}={v}")).collect();
            return Err(crate::error::Error::DomainError(format!("pole at {}", at.join(", "))));
        }
        Ok(out)
    }

    /// Coefficient of a monomial in the canonical sum.
    pub fn coeff_of(&self, m: &Mono) -> RatFunc {
        match self.0.binary_search_by(|t| t.mono.cmp(m)) {
            Ok(i) => self.0[i].coeff.clone(),
            Err(_) => RatFunc::zero(),
        }
    }

    pub fn display<'a>(&'a self, names: &'a dyn Names) -> ExprFmt<'a> {
        ExprFmt { e: self, names }
    }
}

fn with_extra(m: Mono, c: RatFunc, extra: Option<Expr>) -> Expr {
    match extra {
        None => Expr::from_term(Term { mono: m, coeff: c }),
        Some(x) => {
            let mut b = Builder::new();
            b.add_product(&m, &c, &x);
            b.build()
        }
    }
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let (a, b) = (self.terms(), rhs.terms());
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].mono.cmp(&b[j].mono) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = a[i].coeff.add(&b[j].coeff);
                    if !c.is_zero() {
                        out.push(Term { mono: a[i].mono.clone(), coeff: c });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Expr(Arc::new(out))
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr(Arc::new(self.0.iter().map(|t| Term { mono: t.mono.clone(), coeff: t.coeff.neg() }).collect()))
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        self + &(-rhs)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if let Some(c) = self.as_constant() {
            return rhs.scale(&c);
        }
        if let Some(c) = rhs.as_constant() {
            return self.scale(&c);
        }
        let mut b = Builder::new();
        for t in self.terms() {
            b.add_product(&t.mono, &t.coeff, rhs);
        }
        b.build()
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        let mut b = Builder::new();
        for e in iter {
            b.add(&e);
        }
        b.build()
    }
}

/// Naming of variables for printing.
pub trait Names {
    fn indep_name(&self, i: usize) -> String;
    fn dep_name(&self, a: usize) -> String;
    fn eq_name(&self, a: usize) -> String {
        format!("G{a}")
    }
}

/// Fallback names: `t, x, y, z` and `u0, u1, ...`.
pub struct DefaultNames;

impl Names for DefaultNames {
    fn indep_name(&self, i: usize) -> String {
        ["t", "x", "y", "z"].get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("x{i}"))
    }

    fn dep_name(&self, a: usize) -> String {
        format!("u{a}")
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&DefaultNames))
    }
}

pub struct ExprFmt<'a> {
    e: &'a Expr,
    names: &'a dyn Names,
}

impl ExprFmt<'_> {
    fn atom(&self, a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.names;
        match a {
            Atom::Jet(j) => {
                write!(f, "{}", n.dep_name(j.dep))?;
                if j.idx.order() > 0 {
                    write!(f, "_")?;
                    for v in j.idx.to_sequence() {
                        write!(f, "{}", n.indep_name(v))?;
                    }
                }
                Ok(())
            }
            Atom::Slack(eq, idx) => {
                write!(f, "[{}]", n.eq_name(*eq))?;
                if idx.order() > 0 {
                    write!(f, "_")?;
                    for v in idx.to_sequence() {
                        write!(f, "{}", n.indep_name(v))?;
                    }
                }
                Ok(())
            }
            Atom::Indep(i) => write!(f, "{}", n.indep_name(*i)),
            Atom::Sym(i) => write!(f, "s{i}"),
            Atom::Exp(x) => write!(f, "exp({})", x.display(n)),
            Atom::Ln(x) => write!(f, "ln({})", x.display(n)),
            Atom::Pow(x) => write!(f, "({})", x.display(n)),
        }
    }
}

/// Split a coefficient into a sign and magnitude for printing.
fn sign_split(c: &RatFunc) -> (bool, RatFunc) {
    let neg = match c.as_const() {
        Some(q) => q.is_negative(),
        None => c.numerator().leading_coeff().is_negative(),
    };
    if neg {
        (true, c.neg())
    } else {
        (false, c.clone())
    }
}

impl fmt::Display for ExprFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.e.is_zero() {
            return write!(f, "0");
        }
        for (i, t) in self.e.terms().iter().enumerate() {
            let (neg, mag) = sign_split(&t.coeff);
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut first = true;
            if t.mono.is_one() || !mag.is_one() {
                let s = mag.to_string();
                if mag.as_const().is_none() && !s.starts_with('(') && s.contains(['+', '-', ' ']) {
                    write!(f, "({s})")?;
                } else {
                    write!(f, "{s}")?;
                }
                first = false;
            }
            for (a, e) in t.mono.factors() {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                self.atom(a, f)?;
                if !e.is_one() {
                    match e.as_integer() {
                        Some(n) if n > 0 => write!(f, "^{n}")?,
                        _ => write!(f, "^({e})")?,
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(idx: &[u32]) -> Expr {
        Expr::jet(JetVar::new(0, MultiIndex::from_counts(idx.to_vec())))
    }

    #[test]
    fn collects_commuted_products() {
        let e = &(&u(&[0, 1]) * &u(&[0, 0])) + &(&u(&[0, 0]) * &u(&[0, 1]));
        let expect = (&u(&[0, 0]) * &u(&[0, 1])).scale(&RatFunc::from(2));
        assert_eq!(e, expect);
    }

    #[test]
    fn merges_symbolic_powers() {
        let p = RatFunc::var("p");
        let e = &u(&[0, 0]).pow(&p) * &u(&[0, 0]);
        assert_eq!(e, u(&[0, 0]).pow(&p.add(&RatFunc::one())));
    }

    #[test]
    fn merges_exponentials_to_one() {
        let t2 = Expr::indep(0).scale(&RatFunc::from(2));
        let e = &Expr::exp(&t2) * &Expr::exp(&-&t2);
        assert_eq!(e, Expr::one());
    }

    #[test]
    fn expands_integer_powers_of_sums() {
        let s = &u(&[0, 0]) + &u(&[1, 0]);
        let sq = s.pow_int(2);
        let manual = &(&(&u(&[0, 0]) * &u(&[0, 0])) + &(&u(&[0, 0]) * &u(&[1, 0])).scale(&RatFunc::from(2))) + &(&u(&[1, 0]) * &u(&[1, 0]));
        assert_eq!(sq, manual);
        // distributed products of a base and its inverse only cancel in normal form
        let back = &(&s.pow_int(-1) * &s) - &Expr::one();
        assert!(!back.is_zero());
        assert!(crate::kernel::normal_form(&back).is_zero());
    }

    #[test]
    fn multi_index_helpers() {
        let k = MultiIndex::from_counts(vec![1, 2]);
        assert_eq!(k.sub_indices().len(), 6);
        assert_eq!(k.binomial(&MultiIndex::from_counts(vec![0, 1])), 2);
        assert_eq!(k.to_sequence(), vec![0, 1, 1]);
    }
}
