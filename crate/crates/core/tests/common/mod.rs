#![allow(dead_code)]

use std::path::PathBuf;

use claw::calculus::{divergence, euler, frechet, frechet_adjoint, is_total_divergence, total_derivative, Context};
use claw::conslaw::is_trivial;
use claw::corpus::{parse_document, Document};
use claw::kernel::{qf, Expr, JetVar, MultiIndex, RatFunc, Verdict, ZeroTest};
use claw::system::{Current, PdeSystem};
use proptest::prelude::*;

pub const CORPUS: [&str; 6] = ["gmt", "gkdv", "gnnb", "bfam", "bfam_sys", "ns2d"];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(format!("{name}.claw"))
}

pub fn load(name: &str) -> Document {
    let text = std::fs::read_to_string(corpus_path(name)).unwrap();
    parse_document(&text).unwrap()
}

/// Random expression tree over a jet space, turned into an `Expr` once the
/// context is known.
#[derive(Clone, Debug)]
pub enum Node {
    Jet { dep: usize, counts: Vec<u32> },
    Indep(usize),
    Const(i64, i64),
    Param(usize),
    Add(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Pow(Box<Node>, i64),
    Exp(Box<Node>),
}

impl Node {
    pub fn build(&self, ctx: &Context) -> Expr {
        match self {
            Node::Jet { dep, counts } => {
                Expr::jet(JetVar::new(dep % ctx.n_dep(), MultiIndex::from_counts(counts.iter().take(ctx.n_indep()).copied().chain(std::iter::repeat(0)).take(ctx.n_indep()).collect())))
            }
            Node::Indep(i) => Expr::indep(i % ctx.n_indep()),
            Node::Const(a, b) => Expr::rational(qf(*a, *b)),
            Node::Param(i) => match ctx.params.get(i % ctx.params.len().max(1)) {
                Some(p) => Expr::param(&p.name),
                None => Expr::int(2),
            },
            Node::Add(a, b) => &a.build(ctx) + &b.build(ctx),
            Node::Mul(a, b) => &a.build(ctx) * &b.build(ctx),
            Node::Pow(a, n) => a.build(ctx).pow_int(*n),
            Node::Exp(a) => Expr::exp(&a.build(ctx)),
        }
    }

    /// The same tree with sums and products reassociated and commuted.
    pub fn shuffled(&self) -> Node {
        match self {
            Node::Add(a, b) => match (**a).clone() {
                Node::Add(x, y) => Node::Add(Box::new(b.shuffled()), Box::new(Node::Add(Box::new(y.shuffled()), Box::new(x.shuffled())))),
                _ => Node::Add(Box::new(b.shuffled()), Box::new(a.shuffled())),
            },
            Node::Mul(a, b) => match (**b).clone() {
                Node::Add(x, y) => Node::Add(
                    Box::new(Node::Mul(Box::new(y.shuffled()), Box::new(a.shuffled()))),
                    Box::new(Node::Mul(Box::new(a.shuffled()), Box::new(x.shuffled()))),
                ),
                _ => Node::Mul(Box::new(b.shuffled()), Box::new(a.shuffled())),
            },
            Node::Pow(a, n) if *n >= 2 => Node::Mul(Box::new(a.shuffled()), Box::new(Node::Pow(Box::new((**a).clone()), n - 1))),
            Node::Pow(a, n) => Node::Pow(Box::new(a.shuffled()), *n),
            Node::Exp(a) => Node::Exp(Box::new(a.shuffled())),
            leaf => leaf.clone(),
        }
    }
}

fn leaf(max_order: u32, with_indep: bool) -> BoxedStrategy<Node> {
    let jet = (0usize..3, proptest::collection::vec(0u32..=max_order, 3)).prop_map(move |(dep, mut counts)| {
        while counts.iter().sum::<u32>() > max_order {
            let i = counts.iter().position(|&c| c > 0).unwrap();
            counts[i] -= 1;
        }
        Node::Jet { dep, counts }
    });
    let constant = (-4i64..=4, 1i64..=3).prop_map(|(a, b)| Node::Const(a, b));
    if with_indep {
        prop_oneof![4 => jet, 1 => constant, 1 => (0usize..3).prop_map(Node::Indep), 1 => (0usize..2).prop_map(Node::Param)].boxed()
    } else {
        prop_oneof![4 => jet, 1 => constant, 1 => (0usize..2).prop_map(Node::Param)].boxed()
    }
}

/// Polynomial-and-exponential differential functions of bounded order.
pub fn expr_tree(max_order: u32, with_indep: bool, with_exp: bool) -> BoxedStrategy<Node> {
    leaf(max_order, with_indep)
        .prop_recursive(3, 12, 2, move |inner| {
            let base = prop_oneof![
                3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Add(Box::new(a), Box::new(b))),
                3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Mul(Box::new(a), Box::new(b))),
                1 => (inner.clone(), 2i64..=3).prop_map(|(a, n)| Node::Pow(Box::new(a), n)),
            ];
            if with_exp {
                prop_oneof![6 => base, 1 => inner.prop_map(|a| Node::Exp(Box::new(a)))].boxed()
            } else {
                base.boxed()
            }
        })
        .boxed()
}

pub fn context(n_indep: usize, n_dep: usize) -> Context {
    let indeps = ["t", "x", "y"];
    let deps = ["u", "v", "w"];
    Context::new(&indeps[..n_indep], &deps[..n_dep])
}

pub fn exact() -> ZeroTest {
    ZeroTest::default()
}

/// `E_a(Σ_v D_v F^v) = 0` for every dependent variable.
pub fn euler_kills_divergence(ctx: &Context, comps: &[Node]) -> bool {
    let f: Vec<Expr> = comps.iter().take(ctx.n_indep()).map(|n| n.build(ctx)).collect();
    let div = divergence(&f);
    let zt = exact();
    (0..ctx.n_dep()).all(|a| zt.zero(&euler(&div, a)).unwrap())
}

/// `h f'[g] - Σ_a g_a (f'^* h)_a` is a total divergence.
pub fn frechet_identity(ctx: &Context, f: &Node, g: &[Node], h: &Node) -> bool {
    let f = f.build(ctx);
    let g: Vec<Expr> = g.iter().take(ctx.n_dep()).map(|n| n.build(ctx)).collect();
    let h = h.build(ctx);
    let mut lhs = &h * &frechet(&f, &g);
    for (a, ga) in g.iter().enumerate() {
        lhs = &lhs - &(ga * &frechet_adjoint(&f, &h, a));
    }
    is_total_divergence(&lhs, ctx.n_dep(), &exact()).unwrap() == Verdict::Pass
}

/// Jet order for slack round trips: products of third-order time
/// derivatives are too large to expand in three independent variables.
pub fn slack_order(sys: &PdeSystem) -> u32 {
    if sys.ctx.n_indep() > 2 {
        2
    } else {
        3
    }
}

/// Fixed seed so that every run draws the same cases.
pub const SEED: u64 = 0x5eed;

/// `residual + Σ op D_J G = e` for the slack expansion of `e`.
pub fn slack_round_trip(sys: &PdeSystem, e: &Node) -> bool {
    let e = e.build(&sys.ctx);
    let (residual, op) = sys.slack_expand(&e).unwrap();
    let back = &residual + &sys.apply_g(&op);
    exact().zero(&(&back - &e)).unwrap()
}

/// Two association orders of the same tree have the same canonical form.
pub fn confluent(ctx: &Context, n: &Node) -> bool {
    n.build(ctx) == n.shuffled().build(ctx)
}

/// Curl-type currents in one space dimension are trivial.
pub fn gauge_is_trivial(sys: &PdeSystem, theta: &Node) -> bool {
    let th = theta.build(&sys.ctx);
    let phi = Current::from_components(vec![total_derivative(&th, 1), -total_derivative(&th, 0)]);
    is_trivial(sys, &phi).unwrap() == Verdict::Pass
}

/// gKdV at p = 2, k = 1, the system used for gauge currents.
pub fn gkdv_specialized() -> PdeSystem {
    let doc = load("gkdv");
    let vals = [("p".to_string(), RatFunc::from(2)), ("k".to_string(), RatFunc::from(1))].into_iter().collect();
    doc.system.build().unwrap().specialize(&vals).unwrap()
}
