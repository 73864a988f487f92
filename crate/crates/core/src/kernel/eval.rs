use std::collections::HashMap;

use num_traits::{ToPrimitive, Zero};

use super::expr::{Atom, Expr, JetVar};
use super::poly::{pow_q, RatFunc, Q};
use crate::error::{Error, Result};

/// Result of evaluation: exact while every power has an integer exponent.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Q),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Value::Float(f) => *f,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Value::Exact(q) if q.is_zero())
    }

    fn add(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Float(self.to_f64() + other.to_f64()),
        }
    }

    fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Float(self.to_f64() * other.to_f64()),
        }
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

/// Bindings for every symbol kind an expression can contain.
#[derive(Clone, Debug, Default)]
pub struct Point {
    pub jets: HashMap<JetVar, Q>,
    pub params: HashMap<String, Q>,
    pub indeps: HashMap<usize, Q>,
}

impl Point {
    fn param(&self, s: &str) -> Option<Q> {
        self.params.get(s).cloned()
    }

    fn ratfunc(&self, r: &RatFunc) -> Result<Q> {
        if let Some(c) = r.as_const() {
            return Ok(c.clone());
        }
        for s in r.symbols() {
            if !self.params.contains_key(&*s) {
                return Err(Error::UnboundSymbol(s.to_string()));
            }
        }
        r.eval(&|s| self.param(s)).ok_or_else(|| Error::DomainError(format!("pole of {r}")))
    }
}

pub fn eval(e: &Expr, point: &Point) -> Result<Value> {
    Ok(eval_scaled(e, point)?.0)
}

fn pow_value(base: &Value, ex: &Q) -> Result<Value> {
    if ex.is_integer() {
        let n = ex.to_integer().to_i64().ok_or_else(|| Error::DomainError("exponent too large".into()))?;
        return match base {
            Value::Exact(b) => pow_q(b, n).map(Value::Exact).ok_or_else(|| Error::DomainError("zero to a negative power".into())),
            Value::Float(f) => {
                if *f == 0.0 && n < 0 {
                    Err(Error::DomainError("zero to a negative power".into()))
                } else {
                    Ok(Value::Float(f.powi(n as i32)))
                }
            }
        };
    }
    let b = base.to_f64();
    if b <= 0.0 {
        return Err(Error::DomainError(format!("non-positive base {b} with fractional exponent")));
    }
    Ok(Value::Float(b.powf(ex.to_f64().unwrap_or(f64::NAN))))
}

/// Value together with the sum of absolute term values, used as the
/// magnitude against which float residuals are judged.
pub fn eval_scaled(e: &Expr, point: &Point) -> Result<(Value, f64)> {
    let mut cache: HashMap<Atom, Value> = HashMap::new();
    eval_inner(e, point, &mut cache)
}

fn eval_inner(e: &Expr, point: &Point, cache: &mut HashMap<Atom, Value>) -> Result<(Value, f64)> {
    let mut total = Value::Exact(Q::zero());
    let mut scale = 0.0;
    for t in e.terms() {
        let mut v = Value::Exact(point.ratfunc(&t.coeff)?);
        for (a, ex) in t.mono.factors() {
            let base = match cache.get(a) {
                Some(b) => b.clone(),
                None => {
                    let b = eval_atom(a, point, cache)?;
                    cache.insert(a.clone(), b.clone());
                    b
                }
            };
            let exv = point.ratfunc(ex)?;
            v = v.mul(&pow_value(&base, &exv)?);
        }
        scale += v.abs_f64();
        total = total.add(&v);
    }
    Ok((total, scale))
}

fn eval_atom(a: &Atom, point: &Point, cache: &mut HashMap<Atom, Value>) -> Result<Value> {
    match a {
        Atom::Jet(j) => point
            .jets
            .get(j)
            .cloned()
            .map(Value::Exact)
            .ok_or_else(|| Error::UnboundSymbol(format!("jet variable {j:?}"))),
        Atom::Indep(i) => point
            .indeps
            .get(i)
            .cloned()
            .map(Value::Exact)
            .ok_or_else(|| Error::UnboundSymbol(format!("independent variable {i}"))),
        Atom::Slack(..) => Err(Error::UnboundSymbol("slack placeholder".into())),
        Atom::Sym(i) => Err(Error::UnboundSymbol(format!("normal-form symbol s{i}"))),
        Atom::Exp(x) => {
            let v = eval_inner(x, point, cache)?.0.to_f64();
            Ok(Value::Float(v.exp()))
        }
        Atom::Ln(x) => {
            let v = eval_inner(x, point, cache)?.0;
            let f = v.to_f64();
            if f <= 0.0 {
                return Err(Error::DomainError(format!("ln of non-positive value {f}")));
            }
            match v {
                Value::Exact(q) if q == Q::from_integer(1.into()) => Ok(Value::Exact(Q::zero())),
                _ => Ok(Value::Float(f.ln())),
            }
        }
        Atom::Pow(x) => Ok(eval_inner(x, point, cache)?.0),
    }
}

