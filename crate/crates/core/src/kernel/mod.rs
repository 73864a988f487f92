//! Canonical symbolic expressions with exact rational coefficients.
//!
//! An [`Expr`] is a sorted sum of terms `c * m` where `c` lies in the
//! parameter field (rational functions of `p`, `k`, ... over Q) and `m` is a
//! product of atoms raised to parameter-field exponents. Atoms are ordered
//! jet variables first (by dependent variable, then derivative counts
//! lexicographically with time first), then slack placeholders, independent
//! variables, normal-form symbols, `exp`, `ln` and non-monomial power bases.
//! Monomials compare lexicographically by their factor lists and sums are
//! sorted by monomial, which fixes the printed form.
//!
//! Merges applied on construction: like terms are collected, `x^a x^b` becomes
//! `x^(a+b)`, `exp(a) exp(b)` becomes `exp(a+b)`, and integer powers of sums
//! are expanded. Nothing else is rewritten: `ln(ab)` stays opaque.

mod eval;
mod expr;
mod normal;
mod poly;
mod zero;

pub use eval::{eval, eval_scaled, Point, Value};
pub use expr::{Atom, Builder, DefaultNames, Expr, ExprFmt, JetVar, Mono, MultiIndex, Names, Term};
pub use normal::{normal_form, Normalizer};
pub use poly::{factor, q, qf, rational_roots, PMono, Poly, RatFunc, Sym, Q};
pub use zero::{ParamSpec, Verdict, ZeroMode, ZeroTest, ZeroVerdict};

/// Canonical form of an expression. Construction already canonicalizes, so
/// this is the identity; it exists for symmetry with external callers.
pub fn normalize(e: &Expr) -> Expr {
    e.clone()
}
