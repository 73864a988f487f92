use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eval::{eval_scaled, Point, Value};
use super::expr::{Atom, Expr};
use super::normal::normal_form;
use super::poly::{q, Q};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroMode {
    Canonical,
    Numeric,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroVerdict {
    Zero,
    NonZero,
    Inconclusive,
}

/// Sampling constraints of one parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub nonzero: bool,
    pub excluded: Vec<Q>,
}

#[derive(Clone, Debug)]
pub struct ZeroTest {
    pub mode: ZeroMode,
    pub seed: u64,
    pub trials: u32,
    pub tol: f64,
    pub params: Vec<ParamSpec>,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { mode: ZeroMode::Canonical, seed: 0, trials: 8, tol: 1e-9, params: Vec::new() }
    }
}

const RESAMPLES: u32 = 10;
const GRID: i64 = 1 << 16;

fn sample_window(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Q {
    // lo + (hi - lo) * k / GRID with 0 < k < GRID, exactly representable
    let k: i64 = rng.gen_range(1..GRID);
    Q::new(BigInt::from(lo * GRID + (hi - lo) * k), BigInt::from(GRID))
}

impl ZeroTest {
    pub fn with_mode(mut self, mode: ZeroMode) -> Self {
        self.mode = mode;
        self
    }

    fn spec(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Random point for every symbol of `e`: jets and independent variables
    /// in (1/2, 3/2), parameters in (3/2, 7/2) avoiding excluded values.
    pub fn sample_point(&self, e: &Expr, rng: &mut ChaCha8Rng) -> Point {
        let mut p = Point::default();
        let mut indeps = Vec::new();
        e.visit_atoms(&mut |a| {
            if let Atom::Indep(i) = a {
                indeps.push(*i);
            }
        });
        for j in e.jet_vars() {
            let v = sample_window(rng, 0, 1) + Q::new(1.into(), 2.into());
            p.jets.insert(j, v);
        }
        indeps.sort();
        indeps.dedup();
        for i in indeps {
            p.indeps.insert(i, sample_window(rng, 0, 1) + Q::new(1.into(), 2.into()));
        }
        for s in e.params() {
            let v = loop {
                let v = sample_window(rng, 1, 3) + Q::new(1.into(), 2.into());
                let bad = self.spec(&s).is_some_and(|sp| sp.excluded.contains(&v) || (sp.nonzero && v == q(0)));
                if !bad {
                    break v;
                }
            };
            p.params.insert(s.to_string(), v);
        }
        p
    }

    pub fn numeric(&self, e: &Expr) -> Result<ZeroVerdict> {
        if e.is_zero() {
            return Ok(ZeroVerdict::Zero);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut marginal = false;
        for _ in 0..self.trials.max(1) {
            let mut attempt = 0;
            let (val, scale) = loop {
                let pt = self.sample_point(e, &mut rng);
                match eval_scaled(e, &pt) {
                    Ok(v) => break v,
                    Err(Error::DomainError(msg)) => {
                        attempt += 1;
                        if attempt > RESAMPLES {
                            return Err(Error::EvaluationDomainError(msg));
                        }
                    }
                    Err(other) => return Err(other),
                }
            };
            match val {
                Value::Exact(v) => {
                    if v != q(0) {
                        return Ok(ZeroVerdict::NonZero);
                    }
                }
                Value::Float(f) => {
                    let bound = self.tol * scale.max(1.0);
                    if !f.is_finite() {
                        marginal = true;
                    } else if f.abs() >= 1e3 * bound {
                        return Ok(ZeroVerdict::NonZero);
                    } else if f.abs() >= bound {
                        marginal = true;
                    }
                }
            }
        }
        Ok(if marginal { ZeroVerdict::Inconclusive } else { ZeroVerdict::Zero })
    }

    pub fn canonical(&self, e: &Expr) -> ZeroVerdict {
        if e.is_zero() || normal_form(e).is_zero() {
            ZeroVerdict::Zero
        } else {
            ZeroVerdict::NonZero
        }
    }

    pub fn is_zero(&self, e: &Expr) -> Result<ZeroVerdict> {
        match self.mode {
            ZeroMode::Canonical => Ok(self.canonical(e)),
            ZeroMode::Numeric => self.numeric(e),
            ZeroMode::Both => {
                let c = self.canonical(e);
                // the numeric layer cannot bind slack placeholders
                if e.has_slack() {
                    return Ok(c);
                }
                let n = self.numeric(e)?;
                match (c, n) {
                    (ZeroVerdict::Zero, ZeroVerdict::NonZero) | (ZeroVerdict::NonZero, ZeroVerdict::Zero) => {
                        Err(Error::ModeDisagreement(format!("canonical {c:?}, numeric {n:?} for {e:?}")))
                    }
                    _ => Ok(c),
                }
            }
        }
    }

    /// Convenience: `Ok(true)` iff the verdict is `Zero`.
    pub fn zero(&self, e: &Expr) -> Result<bool> {
        Ok(self.is_zero(e)? == ZeroVerdict::Zero)
    }
}

/// Outcome of a check built on zero tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// `Pass` exactly when every verdict is `Zero`; any `NonZero` wins over
    /// an `Inconclusive`.
    pub fn all_zero(verdicts: impl IntoIterator<Item = ZeroVerdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                ZeroVerdict::NonZero => return Verdict::Fail,
                ZeroVerdict::Inconclusive => out = Verdict::Inconclusive,
                ZeroVerdict::Zero => {}
            }
        }
        out
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}
