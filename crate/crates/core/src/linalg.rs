//! Exact linear algebra over the parameter field.
//!
//! Elimination divides only by nonzero field elements, so every result is an
//! identity in the parameters. Pivots that could vanish at special parameter
//! values outside the declared assumptions are reported alongside the result.

use crate::kernel::{factor, rational_roots, ParamSpec, Poly, RatFunc, Q};

pub type Row = Vec<RatFunc>;

/// Reduced row echelon form.
#[derive(Clone, Debug, PartialEq)]
pub struct Rref {
    pub rows: Vec<Row>,
    pub pivots: Vec<usize>,
    /// Polynomials assumed nonzero by the elimination and not covered by the
    /// declared parameter assumptions.
    pub assumptions: Vec<Poly>,
}

fn pivot_cost(r: &RatFunc) -> (usize, usize) {
    match r.as_const() {
        Some(_) => (0, 0),
        None => (1, r.numerator().terms().len()),
    }
}

/// True when the declared assumptions already exclude the zeros of `f`
/// (a monic irreducible factor).
fn declared_nonzero(f: &Poly, params: &[ParamSpec]) -> bool {
    let syms = f.symbols();
    if syms.len() != 1 || f.total_degree() != 1 {
        return false;
    }
    let Some(spec) = params.iter().find(|p| *p.name == *syms[0]) else { return false };
    // f = s - r
    let r = -f.coeffs_in(&syms[0])[0].as_constant().unwrap_or_default();
    if r == Q::default() {
        spec.nonzero
    } else {
        spec.excluded.contains(&r)
    }
}

/// Factors of `r`'s numerator that may vanish under the declared assumptions.
pub fn undeclared_factors(r: &RatFunc, params: &[ParamSpec]) -> Vec<Poly> {
    if r.as_const().is_some() {
        return Vec::new();
    }
    let (_, fs) = factor(&r.numerator());
    fs.into_iter().map(|(f, _)| f).filter(|f| !declared_nonzero(f, params)).collect()
}

pub fn rref(mut rows: Vec<Row>, ncols: usize, params: &[ParamSpec]) -> Rref {
    let mut pivots = Vec::new();
    let mut assumptions: Vec<Poly> = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let best = (r..rows.len()).filter(|&i| !rows[i][c].is_zero()).min_by_key(|&i| pivot_cost(&rows[i][c]));
        let Some(p) = best else { continue };
        rows.swap(r, p);
        for f in undeclared_factors(&rows[r][c], params) {
            if !assumptions.contains(&f) {
                assumptions.push(f);
            }
        }
        let inv = rows[r][c].inv();
        rows[r] = rows[r].iter().map(|x| x.mul(&inv)).collect();
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            let pivot_row = rows[r].clone();
            for (x, y) in rows[i].iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x = x.sub(&f.mul(y));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Rref { rows, pivots, assumptions }
}

/// Basis of the right nullspace, with the elimination's extra assumptions.
#[derive(Clone, Debug, PartialEq)]
pub struct Nullspace {
    pub basis: Vec<Row>,
    pub assumptions: Vec<Poly>,
}

pub fn nullspace(rows: Vec<Row>, ncols: usize, params: &[ParamSpec]) -> Nullspace {
    let red = rref(rows, ncols, params);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !red.pivots.contains(c)) {
        let mut v = vec![RatFunc::zero(); ncols];
        v[free] = RatFunc::one();
        for (row, &pc) in red.rows.iter().zip(&red.pivots) {
            v[pc] = row[free].neg();
        }
        basis.push(v);
    }
    Nullspace { basis, assumptions: red.assumptions }
}

pub fn rank(rows: Vec<Row>, ncols: usize) -> usize {
    rref(rows, ncols, &[]).pivots.len()
}

/// Solve `A x = b` where `A` is given by columns; `None` if inconsistent.
pub fn solve_columns(cols: &[Row], b: &Row, params: &[ParamSpec]) -> Option<Row> {
    let n = cols.len();
    let m = b.len();
    let rows: Vec<Row> = (0..m)
        .map(|i| {
            let mut r: Row = cols.iter().map(|c| c[i].clone()).collect();
            r.push(b[i].clone());
            r
        })
        .collect();
    let red = rref(rows, n + 1, params);
    if red.pivots.contains(&n) {
        return None;
    }
    let mut x = vec![RatFunc::zero(); n];
    for (row, &pc) in red.rows.iter().zip(&red.pivots) {
        x[pc] = row[n].clone();
    }
    Some(x)
}

pub fn determinant(mut m: Vec<Row>) -> RatFunc {
    let n = m.len();
    let mut det = RatFunc::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return RatFunc::zero() };
        if p != c {
            m.swap(p, c);
            det = det.neg();
        }
        let piv = m[c][c].clone();
        det = det.mul(&piv);
        let inv = piv.inv();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].mul(&inv);
            let pr = m[c].clone();
            for (x, y) in m[i].iter_mut().zip(&pr) {
                *x = x.sub(&f.mul(y));
            }
        }
    }
    det
}

/// Symbol used for the spectral variable of characteristic polynomials.
const SPECTRAL: &str = "λ";

/// Eigenvalues in the parameter field with algebraic multiplicities, plus
/// the degree of the characteristic polynomial left unresolved.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<(RatFunc, u32)>,
    pub unresolved_degree: usize,
}

pub fn spectrum(m: &[Row]) -> Spectrum {
    let n = m.len();
    let lam = RatFunc::var(SPECTRAL);
    let shifted: Vec<Row> = m
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().enumerate().map(|(j, x)| if i == j { x.sub(&lam) } else { x.clone() }).collect())
        .collect();
    let charpoly = determinant(shifted);
    let mut rest = charpoly.numerator();
    let mut candidates: Vec<RatFunc> = (0..n).map(|i| m[i][i].clone()).collect();
    let coeffs = rest.coeffs_in(SPECTRAL);
    candidates.extend(rational_roots(&coeffs).into_iter().map(RatFunc::constant));
    let mut eigenvalues: Vec<(RatFunc, u32)> = Vec::new();
    for cand in candidates {
        if eigenvalues.iter().any(|(e, _)| *e == cand) {
            continue;
        }
        // linear factor den*λ - num of λ - cand
        let lin = Poly::var(&SPECTRAL.into()).mul(&cand.denominator()).sub(&cand.numerator());
        let mut mult = 0;
        while let Some(qt) = rest.div_exact(&lin) {
            rest = qt;
            mult += 1;
        }
        if mult > 0 {
            eigenvalues.push((cand, mult));
        }
    }
    Spectrum { eigenvalues, unresolved_degree: rest.degree_in(SPECTRAL) as usize }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::q;

    fn c(n: i64) -> RatFunc {
        RatFunc::from(n)
    }

    fn p() -> RatFunc {
        RatFunc::var("p")
    }

    #[test]
    fn nullspace_of_rational_matrix() {
        let rows = vec![vec![c(1), c(2), c(3)], vec![c(2), c(4), c(6)]];
        let ns = nullspace(rows.clone(), 3, &[]);
        assert_eq!(ns.basis.len(), 2);
        for v in &ns.basis {
            for r in &rows {
                let dot = r.iter().zip(v).fold(RatFunc::zero(), |a, (x, y)| a.add(&x.mul(y)));
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn parametric_pivots_are_reported() {
        // (p - 2) x = 0
        let rows = vec![vec![p().sub(&c(2))]];
        let ns = nullspace(rows.clone(), 1, &[]);
        assert!(ns.basis.is_empty());
        assert_eq!(ns.assumptions.len(), 1);
        let spec = ParamSpec { name: "p".into(), nonzero: true, excluded: vec![q(2)] };
        assert!(nullspace(rows, 1, std::slice::from_ref(&spec)).assumptions.is_empty());
        assert!(nullspace(vec![vec![p().mul(&RatFunc::var("k"))]], 1, &[spec]).assumptions.len() == 1);
    }

    #[test]
    fn solve_in_span() {
        let cols = vec![vec![c(1), c(0), c(1)], vec![c(0), p(), c(0)]];
        let x = solve_columns(&cols, &vec![c(3), p().mul(&p()), c(3)], &[]).unwrap();
        assert_eq!(x, vec![c(3), p()]);
        assert!(solve_columns(&cols, &vec![c(1), c(0), c(0)], &[]).is_none());
    }

    #[test]
    fn parametric_spectrum() {
        let m = vec![vec![c(2), c(1), c(0)], vec![c(0), c(2), c(0)], vec![c(0), c(0), p().add(&c(1))]];
        let s = spectrum(&m);
        assert_eq!(s.unresolved_degree, 0);
        assert!(s.eigenvalues.contains(&(c(2), 2)));
        assert!(s.eigenvalues.contains(&(p().add(&c(1)), 1)));
        let rot = vec![vec![c(0), c(-1)], vec![c(1), c(0)]];
        assert_eq!(spectrum(&rot).unresolved_degree, 2);
        let off = vec![vec![c(0), c(2)], vec![c(2), c(0)]];
        assert_eq!(spectrum(&off).eigenvalues.len(), 2);
    }

    #[test]
    fn determinant_matches_expansion() {
        let m = vec![vec![p(), c(1)], vec![c(3), p()]];
        assert_eq!(determinant(m), p().mul(&p()).sub(&c(3)));
    }
}
