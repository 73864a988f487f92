//! Multivariate polynomials and rational functions over Q in named symbols.
//!
//! These form the coefficient field of every [`Expr`](super::Expr): parameters
//! such as `p`, `k` or `b` never appear as expression atoms, only inside
//! coefficients and exponents.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;
pub type Sym = Arc<str>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Power product of symbols, sorted by name, exponents positive.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct PMono(pub Vec<(Sym, u32)>);

impl PMono {
    pub fn one() -> Self {
        PMono(Vec::new())
    }

    pub fn var(s: &Sym) -> Self {
        PMono(vec![(s.clone(), 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exp_of(&self, s: &str) -> u32 {
        self.0.iter().find(|(v, _)| &**v == s).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, other: &PMono) -> PMono {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        PMono(out)
    }

    /// `self / other` if `other` divides `self`.
    pub fn div(&self, other: &PMono) -> Option<PMono> {
        let mut out = Vec::new();
        let mut j = 0;
        for (v, e) in &self.0 {
            if j < other.0.len() && other.0[j].0 == *v {
                let f = other.0[j].1;
                if f > *e {
                    return None;
                }
                if e - f > 0 {
                    out.push((v.clone(), e - f));
                }
                j += 1;
            } else if j < other.0.len() && other.0[j].0 < *v {
                return None;
            } else {
                out.push((v.clone(), *e));
            }
        }
        if j < other.0.len() {
            return None;
        }
        Some(PMono(out))
    }

    /// Pure lexicographic monomial order with symbols ranked by name.
    pub fn lex_cmp(&self, other: &PMono) -> Ordering {
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if ea != eb {
                            return ea.cmp(eb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }

    pub fn gcd(&self, other: &PMono) -> PMono {
        let mut out = Vec::new();
        for (v, e) in &self.0 {
            let f = other.exp_of(v);
            if f > 0 {
                out.push((v.clone(), (*e).min(f)));
            }
        }
        PMono(out)
    }
}

/// Sparse polynomial; terms sorted by monomial, coefficients nonzero.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Poly {
    terms: Vec<(PMono, Q)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Q) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(PMono::one(), c)] }
        }
    }

    pub fn var(s: &Sym) -> Self {
        Poly { terms: vec![(PMono::var(s), Q::one())] }
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (PMono, Q)>) -> Self {
        let mut map: BTreeMap<PMono, Q> = BTreeMap::new();
        for (m, c) in iter {
            if c.is_zero() {
                continue;
            }
            let slot = map.entry(m).or_insert_with(Q::zero);
            *slot += c;
        }
        Poly { terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect() }
    }

    pub fn terms(&self) -> &[(PMono, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.as_slice() {
            [] => Some(Q::zero()),
            [(m, c)] if m.is_one() => Some(c.clone()),
            _ => None,
        }
    }

    pub fn symbols(&self) -> Vec<Sym> {
        let mut out: Vec<Sym> = Vec::new();
        for (m, _) in &self.terms {
            for (v, _) in &m.0 {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out.sort();
        out
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp(&other.terms[j].0) {
                Ordering::Less => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, d)| (m.clone(), d * c)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(&c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(&c);
        }
        Poly::from_terms(self.terms.iter().flat_map(|(m1, c1)| {
            other.terms.iter().map(move |(m2, c2)| (m1.mul(m2), c1 * c2))
        }))
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::constant(Q::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    /// Leading term in the lexicographic order.
    pub fn leading(&self) -> Option<&(PMono, Q)> {
        self.terms.iter().max_by(|a, b| a.0.lex_cmp(&b.0))
    }

    pub fn leading_coeff(&self) -> Q {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::zero)
    }

    /// Exact quotient `self / d`, or `None` when `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (lm, lc) = d.leading()?.clone();
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&(Q::one() / c)));
        }
        let mut rem = self.clone();
        let mut quot = Vec::new();
        let mut steps = 0usize;
        while !rem.is_zero() {
            steps += 1;
            if steps > 100_000 {
                return None;
            }
            let (rm, rc) = rem.leading().unwrap().clone();
            let m = rm.div(&lm)?;
            let c = rc / &lc;
            let t = Poly { terms: vec![(m.clone(), c.clone())] };
            rem = rem.sub(&t.mul(d));
            quot.push((m, c));
        }
        Some(Poly::from_terms(quot))
    }

    /// Divide by the leading coefficient.
    pub fn monic(&self) -> Poly {
        let lc = self.leading_coeff();
        if lc.is_zero() {
            return self.clone();
        }
        self.scale(&(Q::one() / lc))
    }

    pub fn eval(&self, vals: &dyn Fn(&str) -> Option<Q>) -> Option<Q> {
        let mut acc = Q::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.0 {
                let x = vals(v)?;
                t *= pow_q(&x, *e as i64)?;
            }
            acc += t;
        }
        Some(acc)
    }

    /// Substitute symbols by rational functions.
    pub fn subst(&self, map: &dyn Fn(&str) -> Option<RatFunc>) -> RatFunc {
        let mut acc = RatFunc::zero();
        for (m, c) in &self.terms {
            let mut t = RatFunc::constant(c.clone());
            for (v, e) in &m.0 {
                let x = map(v).unwrap_or_else(|| RatFunc::var(v));
                t = t.mul(&x.powi(*e as i64));
            }
            acc = acc.add(&t);
        }
        acc
    }

    /// Degree in a single symbol.
    pub fn degree_in(&self, s: &str) -> u32 {
        self.terms.iter().map(|(m, _)| m.exp_of(s)).max().unwrap_or(0)
    }

    /// Coefficients as a polynomial in `s`: index k holds the coefficient of `s^k`.
    pub fn coeffs_in(&self, s: &str) -> Vec<Poly> {
        let d = self.degree_in(s) as usize;
        let mut buckets: Vec<Vec<(PMono, Q)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let e = m.exp_of(s);
            let rest = PMono(m.0.iter().filter(|(v, _)| &**v != s).cloned().collect());
            buckets[e as usize].push((rest, c.clone()));
        }
        buckets.into_iter().map(Poly::from_terms).collect()
    }

    fn monomial_content(&self) -> PMono {
        let mut it = self.terms.iter();
        let Some((first, _)) = it.next() else { return PMono::one() };
        it.fold(first.clone(), |g, (m, _)| g.gcd(m))
    }
}

pub fn pow_q(x: &Q, e: i64) -> Option<Q> {
    if e >= 0 {
        Some(num_traits::pow(x.clone(), e as usize))
    } else if x.is_zero() {
        None
    } else {
        Some(num_traits::pow(Q::one() / x, (-e) as usize))
    }
}

/// Split into a rational constant and monic, mostly irreducible factors.
pub fn factor(p: &Poly) -> (Q, Vec<(Poly, u32)>) {
    let mut out: Vec<(Poly, u32)> = Vec::new();
    let content = p.monomial_content();
    for (v, e) in &content.0 {
        out.push((Poly::var(v), *e));
    }
    let mut rest = if content.is_one() {
        p.clone()
    } else {
        Poly::from_terms(p.terms.iter().map(|(m, c)| (m.div(&content).unwrap(), c.clone())))
    };
    let lc = rest.leading_coeff();
    rest = rest.scale(&(Q::one() / &lc));
    let syms = rest.symbols();
    if syms.len() == 1 && rest.total_degree() >= 2 {
        let s = syms[0].clone();
        for root in rational_roots(&rest.coeffs_in(&s)) {
            let lin = Poly::var(&s).sub(&Poly::constant(root));
            let mut mult = 0;
            while let Some(qt) = rest.div_exact(&lin) {
                rest = qt;
                mult += 1;
            }
            if mult > 0 {
                out.push((lin, mult));
            }
        }
    }
    if rest.as_constant().is_none() {
        out.push((rest.monic(), 1));
    }
    let mut merged: BTreeMap<Poly, u32> = BTreeMap::new();
    for (f, m) in out {
        *merged.entry(f).or_insert(0) += m;
    }
    (lc, merged.into_iter().collect())
}

/// Rational roots of a univariate polynomial with constant coefficients,
/// given lowest degree first.
pub fn rational_roots(coeffs: &[Poly]) -> Vec<Q> {
    let mut cs: Vec<Q> = Vec::new();
    for c in coeffs {
        match c.as_constant() {
            Some(v) => cs.push(v),
            None => return Vec::new(),
        }
    }
    let denom_lcm = cs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<BigInt> = cs.iter().map(|c| (c * Q::from_integer(denom_lcm.clone())).to_integer()).collect();
    let mut low = 0;
    while low < ints.len() && ints[low].is_zero() {
        low += 1;
    }
    let mut roots = Vec::new();
    if low > 0 {
        roots.push(Q::zero());
    }
    if low + 1 >= ints.len() {
        return roots;
    }
    let a0 = ints[low].abs();
    let an = ints[ints.len() - 1].abs();
    let (Some(dn), Some(dd)) = (divisors(&a0), divisors(&an)) else { return roots };
    let eval = |x: &Q| -> bool {
        let mut acc = Q::zero();
        for c in cs.iter().rev() {
            acc = acc * x + c;
        }
        acc.is_zero()
    };
    for n in &dn {
        for d in &dd {
            for sign in [1, -1] {
                let cand = Q::new(BigInt::from(sign) * n, d.clone());
                if !roots.contains(&cand) && eval(&cand) {
                    roots.push(cand);
                }
            }
        }
    }
    roots
}

fn divisors(n: &BigInt) -> Option<Vec<BigInt>> {
    let n = n.to_u64().filter(|v| *v > 0 && *v <= 1_000_000)?;
    Some((1..=n).filter(|d| n % d == 0).map(BigInt::from).collect())
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum Repr {
    Const(Q),
    Frac(Box<Frac>),
}

/// `num / prod(den_i ^ m_i)` with monic denominator factors coprime to `num`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct Frac {
    num: Poly,
    den: Vec<(Poly, u32)>,
}

/// Element of the parameter field Q(p, k, ...).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RatFunc(Repr);

impl From<Q> for RatFunc {
    fn from(c: Q) -> Self {
        RatFunc::constant(c)
    }
}

impl From<i64> for RatFunc {
    fn from(n: i64) -> Self {
        RatFunc::constant(q(n))
    }
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc(Repr::Const(Q::zero()))
    }

    pub fn one() -> Self {
        RatFunc(Repr::Const(Q::one()))
    }

    pub fn constant(c: Q) -> Self {
        RatFunc(Repr::Const(c))
    }

    pub fn var(s: &str) -> Self {
        RatFunc::from_poly(Poly::var(&Sym::from(s)))
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFunc::build(p, Vec::new())
    }

    fn build(mut num: Poly, mut den: Vec<(Poly, u32)>) -> Self {
        if num.is_zero() {
            return RatFunc::zero();
        }
        for (f, m) in den.iter_mut() {
            while *m > 0 {
                match num.div_exact(f) {
                    Some(qt) => {
                        num = qt;
                        *m -= 1;
                    }
                    None => break,
                }
            }
        }
        den.retain(|(_, m)| *m > 0);
        if den.is_empty() {
            if let Some(c) = num.as_constant() {
                return RatFunc(Repr::Const(c));
            }
        }
        RatFunc(Repr::Frac(Box::new(Frac { num, den })))
    }

    fn parts(&self) -> (Poly, Vec<(Poly, u32)>) {
        match &self.0 {
            Repr::Const(c) => (Poly::constant(c.clone()), Vec::new()),
            Repr::Frac(f) => (f.num.clone(), f.den.clone()),
        }
    }

    pub fn numerator(&self) -> Poly {
        self.parts().0
    }

    pub fn denominator_factors(&self) -> Vec<(Poly, u32)> {
        self.parts().1
    }

    pub fn denominator(&self) -> Poly {
        let mut d = Poly::constant(Q::one());
        for (f, m) in self.parts().1 {
            d = d.mul(&f.pow(m));
        }
        d
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.0, Repr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(&self.0, Repr::Const(c) if c.is_one())
    }

    pub fn as_const(&self) -> Option<&Q> {
        match &self.0 {
            Repr::Const(c) => Some(c),
            Repr::Frac(_) => None,
        }
    }

    pub fn as_integer(&self) -> Option<i64> {
        self.as_const().filter(|c| c.is_integer()).and_then(|c| c.to_integer().to_i64())
    }

    pub fn is_positive_integer(&self) -> bool {
        self.as_integer().is_some_and(|n| n > 0)
    }

    pub fn symbols(&self) -> Vec<Sym> {
        let (n, d) = self.parts();
        let mut s = n.symbols();
        for (f, _) in d {
            for v in f.symbols() {
                if !s.contains(&v) {
                    s.push(v);
                }
            }
        }
        s.sort();
        s
    }

    pub fn add(&self, other: &RatFunc) -> RatFunc {
        if let (Repr::Const(a), Repr::Const(b)) = (&self.0, &other.0) {
            return RatFunc(Repr::Const(a + b));
        }
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (n1, d1) = self.parts();
        let (n2, d2) = other.parts();
        let mut lcm: BTreeMap<Poly, u32> = BTreeMap::new();
        for (f, m) in d1.iter().chain(d2.iter()) {
            let e = lcm.entry(f.clone()).or_insert(0);
            *e = (*e).max(*m);
        }
        let cofactor = |d: &[(Poly, u32)]| -> Poly {
            let mut acc = Poly::constant(Q::one());
            for (f, m) in &lcm {
                let have = d.iter().find(|(g, _)| g == f).map(|(_, k)| *k).unwrap_or(0);
                acc = acc.mul(&f.pow(m - have));
            }
            acc
        };
        let num = n1.mul(&cofactor(&d1)).add(&n2.mul(&cofactor(&d2)));
        RatFunc::build(num, lcm.into_iter().collect())
    }

    pub fn neg(&self) -> RatFunc {
        match &self.0 {
            Repr::Const(c) => RatFunc(Repr::Const(-c)),
            Repr::Frac(f) => RatFunc(Repr::Frac(Box::new(Frac { num: f.num.neg(), den: f.den.clone() }))),
        }
    }

    pub fn sub(&self, other: &RatFunc) -> RatFunc {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFunc) -> RatFunc {
        if let (Repr::Const(a), Repr::Const(b)) = (&self.0, &other.0) {
            return RatFunc(Repr::Const(a * b));
        }
        if self.is_zero() || other.is_zero() {
            return RatFunc::zero();
        }
        let (n1, d1) = self.parts();
        let (n2, d2) = other.parts();
        let mut den: BTreeMap<Poly, u32> = BTreeMap::new();
        for (f, m) in d1.into_iter().chain(d2) {
            *den.entry(f).or_insert(0) += m;
        }
        RatFunc::build(n1.mul(&n2), den.into_iter().collect())
    }

    pub fn inv(&self) -> RatFunc {
        match &self.0 {
            Repr::Const(c) => {
                assert!(!c.is_zero(), "division by zero in parameter field");
                RatFunc(Repr::Const(Q::one() / c))
            }
            Repr::Frac(f) => {
                let (lc, factors) = factor(&f.num);
                let mut num = Poly::constant(Q::one() / lc);
                for (g, m) in &f.den {
                    num = num.mul(&g.pow(*m));
                }
                RatFunc::build(num, factors)
            }
        }
    }

    pub fn div(&self, other: &RatFunc) -> RatFunc {
        self.mul(&other.inv())
    }

    pub fn powi(&self, n: i64) -> RatFunc {
        if n == 0 {
            return RatFunc::one();
        }
        let base = if n < 0 { self.inv() } else { self.clone() };
        if let Repr::Const(c) = &base.0 {
            return RatFunc(Repr::Const(num_traits::pow(c.clone(), n.unsigned_abs() as usize)));
        }
        let mut acc = RatFunc::one();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    pub fn eval(&self, vals: &dyn Fn(&str) -> Option<Q>) -> Option<Q> {
        match &self.0 {
            Repr::Const(c) => Some(c.clone()),
            Repr::Frac(f) => {
                let n = f.num.eval(vals)?;
                let mut d = Q::one();
                for (g, m) in &f.den {
                    d *= pow_q(&g.eval(vals)?, *m as i64)?;
                }
                if d.is_zero() {
                    None
                } else {
                    Some(n / d)
                }
            }
        }
    }

    pub fn subst(&self, map: &dyn Fn(&str) -> Option<RatFunc>) -> RatFunc {
        match &self.0 {
            Repr::Const(_) => self.clone(),
            Repr::Frac(f) => {
                let mut acc = f.num.subst(map);
                for (g, m) in &f.den {
                    acc = acc.div(&g.subst(map).powi(*m as i64));
                }
                acc
            }
        }
    }

    /// Like [`RatFunc::subst`], but `None` when a denominator vanishes.
    pub fn try_subst(&self, map: &dyn Fn(&str) -> Option<RatFunc>) -> Option<RatFunc> {
        match &self.0 {
            Repr::Const(_) => Some(self.clone()),
            Repr::Frac(f) => {
                let mut acc = f.num.subst(map);
                for (g, m) in &f.den {
                    let d = g.subst(map);
                    if d.is_zero() {
                        return None;
                    }
                    acc = acc.div(&d.powi(*m as i64));
                }
                Some(acc)
            }
        }
    }

    /// Split a rational function whose denominator is free of `vars` into
    /// coefficients of power products in `vars`.
    pub fn split_by(&self, vars: &dyn Fn(&str) -> bool) -> BTreeMap<PMono, RatFunc> {
        let (num, den) = self.parts();
        let mut buckets: BTreeMap<PMono, Vec<(PMono, Q)>> = BTreeMap::new();
        for (m, c) in num.terms() {
            let (inner, outer): (Vec<_>, Vec<_>) = m.0.iter().cloned().partition(|(v, _)| vars(v));
            buckets.entry(PMono(inner)).or_default().push((PMono(outer), c.clone()));
        }
        buckets
            .into_iter()
            .map(|(k, ts)| (k, RatFunc::build(Poly::from_terms(ts), den.clone())))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }
}

fn fmt_q(c: &Q, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

struct PolyFmt<'a>(&'a Poly);

impl fmt::Display for PolyFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<&(PMono, Q)> = self.0.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.lex_cmp(&a.0)));
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            if m.is_one() {
                fmt_q(&mag, f)?;
                continue;
            }
            if !mag.is_one() {
                fmt_q(&mag, f)?;
                write!(f, "*")?;
            }
            for (j, (v, e)) in m.0.iter().enumerate() {
                if j > 0 {
                    write!(f, "*")?;
                }
                if *e == 1 {
                    write!(f, "{v}")?;
                } else {
                    write!(f, "{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}

fn is_atomic_poly(p: &Poly) -> bool {
    match p.terms.as_slice() {
        [(m, c)] if m.is_one() => c.is_integer() && !c.is_negative(),
        [(m, c)] => c.is_one() && m.0.len() == 1 && m.0[0].1 == 1,
        _ => false,
    }
}

impl RatFunc {
    /// Whether the printed form needs parentheses when used as a factor.
    pub fn needs_parens(&self) -> bool {
        match &self.0 {
            Repr::Const(c) => !c.is_integer() || c.is_negative(),
            Repr::Frac(_) => true,
        }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Const(c) => fmt_q(c, f),
            Repr::Frac(fr) => {
                if fr.num.terms.len() > 1 {
                    write!(f, "({})", PolyFmt(&fr.num))?;
                } else {
                    write!(f, "{}", PolyFmt(&fr.num))?;
                }
                if fr.den.is_empty() {
                    return Ok(());
                }
                write!(f, "/")?;
                let single = fr.den.len() == 1 && fr.den[0].1 == 1;
                if single && is_atomic_poly(&fr.den[0].0) {
                    return write!(f, "{}", PolyFmt(&fr.den[0].0));
                }
                write!(f, "(")?;
                for (i, (g, m)) in fr.den.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    let wrap = g.terms.len() > 1;
                    if wrap {
                        write!(f, "({})", PolyFmt(g))?;
                    } else {
                        write!(f, "{}", PolyFmt(g))?;
                    }
                    if *m > 1 {
                        write!(f, "^{m}")?;
                    }
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> RatFunc {
        RatFunc::var(s)
    }

    #[test]
    fn cancels_common_factor() {
        let p = v("p");
        let e = p.add(&RatFunc::one()).div(&p.add(&RatFunc::one()));
        assert!(e.is_one());
    }

    #[test]
    fn sum_of_fractions_normalizes() {
        // -1 + 1/b == (1 - b)/b
        let b = v("b");
        let a = RatFunc::from(-1).add(&b.inv());
        let c = RatFunc::one().sub(&b).div(&b);
        assert_eq!(a, c);
    }

    #[test]
    fn quadratic_denominator_factors() {
        // 1/(p^2 - 1) * (p - 1) == 1/(p + 1)
        let p = v("p");
        let d = p.mul(&p).sub(&RatFunc::one());
        let e = d.inv().mul(&p.sub(&RatFunc::one()));
        assert_eq!(e, p.add(&RatFunc::one()).inv());
    }

    #[test]
    fn exact_division_detects_nondivisor() {
        let p = Poly::var(&Sym::from("p"));
        let k = Poly::var(&Sym::from("k"));
        assert!(p.mul(&k).div_exact(&k).is_some());
        assert!(p.add(&k).div_exact(&k).is_none());
    }

    #[test]
    fn split_by_symbols() {
        let e = v("a1").mul(&v("c1")).mul(&v("p")).add(&v("a1").mul(&v("lambda")));
        let parts = e.split_by(&|s| s != "p");
        assert_eq!(parts.len(), 2);
    }
}
