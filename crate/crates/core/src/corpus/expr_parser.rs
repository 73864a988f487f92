//! Recursive-descent parser for the expression language.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' sum ')' | '(' sum ')'
//! ```
//!
//! Names resolve to independent variables, parameters, extra symbols,
//! dependent variables, jets such as `u_txx`, and, when an operator column is
//! set, derivative operators `D_x` which become slack placeholders.

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::calculus::Context;
use crate::error::{Error, Result};
use crate::kernel::{Atom, Expr, JetVar, RatFunc, Q};
use crate::system::GOperator;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Name(String),
    Op(char),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn lex(src: &str, line: usize, col0: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Spanned { tok: Tok::Num(s.parse().unwrap()), col });
        } else if c.is_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Name(chars[start..i].iter().collect()), col });
        } else if "+-*/^()".contains(c) {
            out.push(Spanned { tok: Tok::Op(c), col });
            i += 1;
        } else {
            return Err(Error::ParseError { line, col, msg: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

/// Name resolution for one parse.
#[derive(Clone, Copy)]
pub struct Scope<'a> {
    pub ctx: &'a Context,
    /// Symbols accepted as parameter-field variables besides declared params.
    pub extra: &'a [String],
    /// Equation column for `D_J` operator tokens; `None` rejects them.
    pub op_column: Option<usize>,
}

impl<'a> Scope<'a> {
    pub fn new(ctx: &'a Context) -> Self {
        Scope { ctx, extra: &[], op_column: None }
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_col: usize,
    scope: Scope<'a>,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let col = self.toks.get(self.pos).map_or(self.end_col, |t| t.col);
        Err(Error::ParseError { line: self.line, col, msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.product()?;
            } else if self.eat('-') {
                acc = &acc - &self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                if d.is_zero() {
                    return self.err("division by zero");
                }
                acc = acc.div(&d);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let at = self.pos;
        let ex = self.unary()?;
        let Some(r) = ex.as_constant() else {
            self.pos = at;
            return self.err("exponent must be a constant of the parameter field");
        };
        if base.is_zero() && r.as_const().is_none_or(|c| *c <= Q::from_integer(0.into())) {
            self.pos = at;
            return self.err("zero raised to a non-positive power");
        }
        Ok(base.pow(&r))
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr::rational(Q::from_integer(n)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) && matches!(name.as_str(), "exp" | "ln") {
                    self.pos += 1;
                    let arg = self.sum()?;
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    return Ok(if name == "exp" { Expr::exp(&arg) } else { Expr::ln(&arg) });
                }
                self.pos -= 1;
                let e = self.resolve(&name)?;
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected {c:?}")),
            None => self.err("unexpected end of expression"),
        }
    }

    fn resolve(&self, name: &str) -> Result<Expr> {
        let ctx = self.scope.ctx;
        if let Some(i) = ctx.indep_index(name) {
            return Ok(Expr::indep(i));
        }
        if ctx.param(name).is_some() || self.scope.extra.iter().any(|s| s == name) {
            return Ok(Expr::param(name));
        }
        if let Some(a) = ctx.dep_index(name) {
            return Ok(Expr::jet(ctx.base_jet(a)));
        }
        if let Some(letters) = name.strip_prefix("D_") {
            let Some(col) = self.scope.op_column else {
                return self.err(format!("operator {name} outside an operator expression"));
            };
            let idx = if letters == "0" { Some(ctx.zero_index()) } else { ctx.index_of(letters) };
            return match idx {
                Some(idx) if !letters.is_empty() => Ok(Expr::slack(col, idx)),
                _ => self.err(format!("bad derivative operator {name}")),
            };
        }
        if let Some((dep, letters)) = name.rsplit_once('_') {
            if let Some(a) = ctx.dep_index(dep) {
                return match ctx.index_of(letters) {
                    Some(idx) if !letters.is_empty() => Ok(Expr::jet(JetVar::new(a, idx))),
                    _ => self.err(format!("bad derivative letters in {name}")),
                };
            }
            if dep.is_empty() || letters.is_empty() {
                return self.err(format!("malformed name {name}"));
            }
        }
        Err(Error::UnknownSymbol(name.to_string()))
    }
}

/// Parse one expression; `line`/`col` locate it in the enclosing document.
pub fn parse_expr_at(src: &str, scope: Scope<'_>, line: usize, col: usize) -> Result<Expr> {
    let toks = lex(src, line, col)?;
    let end_col = col + src.chars().count();
    let mut p = Parser { toks, pos: 0, line, end_col, scope };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

pub fn parse_expr(src: &str, ctx: &Context) -> Result<Expr> {
    parse_expr_at(src, Scope::new(ctx), 1, 1)
}

/// Parse an operator written with `D_J` tokens acting on equation `column`,
/// e.g. `-exp(2*t)*((p-1)*x*D_x + D_t + p)`. Operator factors within one
/// term compose, so `D_x^2` and `D_t*D_x` are second order.
pub fn parse_operator(src: &str, ctx: &Context, column: usize, extra: &[String], line: usize, col: usize) -> Result<GOperator> {
    let scope = Scope { ctx, extra, op_column: Some(column) };
    let e = parse_expr_at(src, scope, line, col)?;
    let mut op = GOperator::new();
    for t in e.terms() {
        let mut idx = ctx.zero_index();
        let mut rest = Vec::new();
        for (a, ex) in t.mono.factors() {
            match a {
                Atom::Slack(_, j) => {
                    let n = ex.as_integer().filter(|n| *n > 0).ok_or_else(|| Error::ParseError {
                        line,
                        col,
                        msg: "operator raised to a non-positive or fractional power".into(),
                    })?;
                    for _ in 0..n {
                        idx = idx.plus(j);
                    }
                }
                Atom::Exp(y) | Atom::Ln(y) | Atom::Pow(y) if y.has_slack() => {
                    return Err(Error::ParseError { line, col, msg: "operator inside a function".into() });
                }
                _ => rest.push((a.clone(), ex.clone())),
            }
        }
        let coeff = rebuild_term(&rest, &t.coeff);
        op.add_term(column, idx, &coeff);
    }
    Ok(op)
}

fn rebuild_term(factors: &[(Atom, RatFunc)], c: &RatFunc) -> Expr {
    let mut acc = Expr::constant(c.clone());
    for (a, ex) in factors {
        let base = match a {
            Atom::Pow(x) => x.clone(),
            _ => Expr::atom(a.clone()),
        };
        acc = &acc * &base.pow(ex);
    }
    acc
}

/// Parse `name=value` parameter assignments, e.g. `p=2` or `b=-1/2`.
pub fn parse_assignments(src: &str) -> Result<HashMap<String, RatFunc>> {
    let mut out = HashMap::new();
    for part in src.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("expected name=value, got {part:?}")))?;
        let v = parse_constant(value.trim())?;
        out.insert(name.trim().to_string(), v);
    }
    Ok(out)
}

/// Parse a rational constant such as `-3/2`.
pub fn parse_constant(src: &str) -> Result<RatFunc> {
    let ctx = Context::default();
    parse_expr(src, &ctx)?
        .as_constant()
        .ok_or_else(|| Error::Usage(format!("expected a rational constant, got {src:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> Context {
        let mut c = Context::new(&["t", "x"], &["u"]);
        c.params.push(crate::kernel::ParamSpec { name: "p".into(), nonzero: true, excluded: vec![] });
        c
    }

    #[test]
    fn jets_canonicalize_letter_order() {
        let c = ctx();
        assert_eq!(parse_expr("u_xt", &c).unwrap(), parse_expr("u_tx", &c).unwrap());
        assert_eq!(parse_expr("u_tx", &c).unwrap(), c.jet(0, "tx"));
    }

    #[test]
    fn malformed_input_reports_position() {
        let c = ctx();
        assert!(matches!(parse_expr("u_^2", &c), Err(Error::ParseError { .. })));
        assert!(matches!(parse_expr("u +", &c), Err(Error::ParseError { col: 4, .. })));
        assert!(matches!(parse_expr("w", &c), Err(Error::UnknownSymbol(_))));
        assert!(matches!(parse_expr("u^u", &c), Err(Error::ParseError { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let c = ctx();
        let u = c.jet(0, "");
        assert_eq!(parse_expr("2^3^2", &c).unwrap(), Expr::int(512));
        assert_eq!(parse_expr("-u^2", &c).unwrap(), -(&u * &u));
        assert_eq!(parse_expr("1/2*u", &c).unwrap(), u.scale(&RatFunc::constant(crate::kernel::qf(1, 2))));
        assert_eq!(parse_expr("u^(p-1)*u", &c).unwrap(), u.pow(&RatFunc::var("p")));
    }

    #[test]
    fn operators_compose_within_terms() {
        let c = ctx();
        let op = parse_operator("-t*D_x^2 + D_t*D_x + 3", &c, 0, &[], 1, 1).unwrap();
        assert_eq!(op.get(0, &c.index_of("xx").unwrap()), -Expr::indep(0));
        assert_eq!(op.get(0, &c.index_of("tx").unwrap()), Expr::one());
        assert_eq!(op.get(0, &c.zero_index()), Expr::int(3));
        assert!(parse_expr("D_x", &c).is_err());
    }

    #[test]
    fn assignments() {
        let m = parse_assignments("p=2, b=-1/2").unwrap();
        assert_eq!(m["b"], RatFunc::constant(crate::kernel::qf(-1, 2)));
        assert_eq!(m["p"], RatFunc::from(2));
    }
}
