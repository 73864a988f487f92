//! The `claw` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Expr, RatFunc, Verdict, ZeroMode, ZeroTest};
use crate::symaction::{AnsatzKind, Invariance};

use super::document::{parse_document, Document, When};
use super::runner::{regress, CheckKind, Outcome, Session};

#[derive(Parser, Debug)]
#[command(name = "claw", version, about = "Symmetries, multipliers and conservation laws of PDE systems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Fix a parameter, e.g. `--param p=2`.
    #[arg(long = "param", global = true, value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Zero-test mode; `regress` defaults to `both`, other commands to `canonical`.
    #[arg(long = "zero-test", global = true, value_enum)]
    zero_test: Option<Mode>,
    #[arg(long, global = true, default_value_t = 8)]
    trials: u32,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Machine-readable report.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Canonical,
    Numeric,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Symmetry,
    Multiplier,
    Adjoint,
    Helmholtz,
    Current,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnsatzArg {
    Multiplier,
    Symmetry,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a named item against its determining equation.
    Check {
        kind: Kind,
        file: String,
        #[arg(long)]
        name: Vec<String>,
    },
    /// Print the operator R_P of a symmetry or R_Q of a multiplier.
    Rop {
        file: String,
        #[arg(long, conflicts_with = "multiplier", required_unless_present = "multiplier")]
        symmetry: Option<String>,
        #[arg(long)]
        multiplier: Option<String>,
    },
    /// Action of a symmetry on a multiplier.
    Act {
        file: String,
        #[arg(long)]
        symmetry: String,
        #[arg(long)]
        multiplier: String,
    },
    /// Classify every symmetry and multiplier pair.
    Invariance {
        file: String,
        #[arg(long, value_delimiter = ',')]
        symmetries: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<String>>,
    },
    /// Bilinear homogeneity system of the symmetry and multiplier spans.
    Homog {
        file: String,
        #[arg(long, value_delimiter = ',')]
        symmetries: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<String>>,
        /// Solve with fixed multiplier coefficients.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        /// Spectrum of the action of the symmetry with coefficients `--c`.
        #[arg(long, requires = "c")]
        eigen: bool,
        #[arg(long, allow_hyphen_values = true)]
        c: Option<String>,
    },
    /// Current of a multiplier from the declared scaling symmetry.
    Reconstruct {
        file: String,
        #[arg(long)]
        multiplier: String,
    },
    /// Solve the determining equations within a linear span.
    SolveAnsatz {
        file: String,
        #[arg(long, value_enum, default_value = "multiplier")]
        kind: AnsatzArg,
        /// Elements separated by `;`, components of one element by `,`.
        #[arg(long)]
        basis: String,
    },
    /// Run every expectation of a document.
    Regress { file: String },
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    system: String,
    results: Vec<Outcome>,
    seed: u64,
    params: BTreeMap<String, String>,
}

/// Exit status and report text of one invocation.
pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Rop { .. } => "rop",
            Command::Act { .. } => "act",
            Command::Invariance { .. } => "invariance",
            Command::Homog { .. } => "homog",
            Command::Reconstruct { .. } => "reconstruct",
            Command::SolveAnsatz { .. } => "solve-ansatz",
            Command::Regress { .. } => "regress",
        }
    }

    fn file(&self) -> &str {
        match self {
            Command::Check { file, .. }
            | Command::Rop { file, .. }
            | Command::Act { file, .. }
            | Command::Invariance { file, .. }
            | Command::Homog { file, .. }
            | Command::Reconstruct { file, .. }
            | Command::SolveAnsatz { file, .. }
            | Command::Regress { file } => file,
        }
    }
}

fn zero_test(g: &Global, regress: bool) -> ZeroTest {
    let mode = match g.zero_test {
        Some(Mode::Canonical) => ZeroMode::Canonical,
        Some(Mode::Numeric) => ZeroMode::Numeric,
        Some(Mode::Both) => ZeroMode::Both,
        None if regress => ZeroMode::Both,
        None => ZeroMode::Canonical,
    };
    ZeroTest { mode, seed: g.seed, trials: g.trials, tol: g.tol, params: Vec::new() }
}

fn params(g: &Global) -> Result<When> {
    let mut out = When::new();
    for p in &g.params {
        out.extend(super::parse_assignments(p)?);
    }
    Ok(out)
}

fn fallible(name: &str, f: impl FnOnce() -> Result<Outcome>) -> Outcome {
    f().unwrap_or_else(|e| Outcome::new(name, Verdict::Fail).with_details(e.to_string()))
}

fn parse_coeffs(s: &Session, src: &str) -> Result<Vec<RatFunc>> {
    src.split(',').map(|x| s.parse_form(x.trim(), &[], 1)).collect()
}

fn execute(cmd: &Command, doc: &Document, vals: &When, zt: &ZeroTest) -> Result<Vec<Outcome>> {
    if let Command::Regress { .. } = cmd {
        return regress(doc, vals, zt);
    }
    let s = Session::new(doc, vals, zt)?;
    let out = match cmd {
        Command::Check { kind, name, .. } => {
            let kind = CheckKind::parse(&format!("{kind:?}").to_lowercase()).unwrap();
            let names: Vec<String> = if name.is_empty() { s.applicable(kind) } else { name.clone() };
            names
                .iter()
                .map(|n| {
                    fallible(n, || {
                        if kind == CheckKind::Current {
                            let (v, scale) = s.check_current(n)?;
                            let o = Outcome::new(n.clone(), v);
                            Ok(match scale {
                                Some(k) => o.with_details(format!("multiplier scale {k}")),
                                None => o,
                            })
                        } else {
                            Ok(Outcome::new(n.clone(), s.check(kind, n)?))
                        }
                    })
                })
                .collect()
        }
        Command::Rop { symmetry, multiplier, .. } => {
            let (is_sym, n) = match (symmetry, multiplier) {
                (Some(n), _) => (true, n),
                (None, Some(n)) => (false, n),
                _ => unreachable!("clap requires one of them"),
            };
            let (labels, rows) = s.rop(is_sym, n)?;
            vec![Outcome::new(n.clone(), Verdict::Pass).with_details(s.format_rop(&labels, &rows).join("; "))]
        }
        Command::Act { symmetry, multiplier, .. } => {
            let name = format!("{symmetry} on {multiplier}");
            vec![fallible(&name, || {
                let action = crate::symaction::action_on_multiplier(&s.sys, &s.symmetry(symmetry)?, &s.multiplier(multiplier)?)?;
                let reduced: Vec<Expr> = action.iter().map(|e| s.sys.reduce_on_solutions(e)).collect::<Result<_>>()?;
                let inv = s.invariance(symmetry, multiplier)?;
                let mut o = Outcome::new(name.clone(), Verdict::Pass).with_details(format!("{inv}; action {}", s.display_vec(&reduced)));
                if let Invariance::Homogeneous(l) = &inv {
                    o = o.with_lambda(l.to_string());
                }
                Ok(o)
            })]
        }
        Command::Invariance { symmetries, multipliers, .. } => {
            let ps = s.symmetries(symmetries.as_deref())?;
            let qs = s.multipliers(multipliers.as_deref())?;
            let mut out = Vec::new();
            for (pn, _) in &ps {
                for (qn, _) in &qs {
                    let name = format!("{pn} on {qn}");
                    out.push(fallible(&name, || {
                        let inv = s.invariance(pn, qn)?;
                        let mut o = Outcome::new(name.clone(), Verdict::Pass).with_details(inv.to_string());
                        if let Invariance::Homogeneous(l) = &inv {
                            o = o.with_lambda(l.to_string());
                        }
                        Ok(o)
                    }));
                }
            }
            out
        }
        Command::Homog { symmetries, multipliers, a, eigen, c, .. } => {
            let bs = s.bilinear(symmetries.as_deref(), multipliers.as_deref())?;
            if *eigen {
                let cs = parse_coeffs(&s, c.as_deref().unwrap_or_default())?;
                let ps = s.symmetries(symmetries.as_deref())?;
                if cs.len() != ps.len() {
                    return Err(Error::Usage(format!("expected {} symmetry coefficients, got {}", ps.len(), cs.len())));
                }
                let mut p = vec![Expr::zero(); s.sys.ctx.n_dep()];
                for ((_, comps), k) in ps.iter().zip(&cs) {
                    for (acc, e) in p.iter_mut().zip(comps) {
                        *acc = &*acc + &e.scale(k);
                    }
                }
                let qs: Vec<Vec<Expr>> = s.multipliers(multipliers.as_deref())?.into_iter().map(|x| x.1).collect();
                let am = crate::symaction::action_matrix(&s.sys, &p, &qs)?;
                let mut out = Vec::new();
                for (l, m) in &am.spectrum.eigenvalues {
                    let vecs = am.eigenvectors.iter().find(|(x, _)| x == l).map(|(_, v)| v.clone()).unwrap_or_default();
                    let shown: Vec<String> = vecs
                        .iter()
                        .map(|v| format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
                        .collect();
                    out.push(
                        Outcome::new(format!("eigenvalue {l}"), Verdict::Pass)
                            .with_lambda(l.to_string())
                            .with_details(format!("multiplicity {m}; eigenvectors {}", shown.join(", "))),
                    );
                }
                if am.spectrum.unresolved_degree > 0 {
                    out.push(
                        Outcome::new("unresolved", Verdict::Inconclusive)
                            .with_details(format!("characteristic factor of degree {} has no roots in the parameter field", am.spectrum.unresolved_degree)),
                    );
                }
                out
            } else if let Some(a) = a {
                let sol = bs.solve_fixed_a(&parse_coeffs(&s, a)?)?;
                let mut o = Outcome::new(format!("a = ({a})"), Verdict::Pass).with_details(format!(
                    "dim {}; constraints: {}",
                    sol.dim(),
                    if sol.constraints.is_empty() {
                        "none".to_string()
                    } else {
                        sol.constraints.iter().map(|c| format!("{c} = 0")).collect::<Vec<_>>().join(", ")
                    }
                ));
                if let Some(l) = &sol.lambda {
                    o = o.with_lambda(l.to_string());
                }
                vec![o]
            } else {
                bs.equations.iter().enumerate().map(|(i, e)| Outcome::new(format!("equation {}", i + 1), Verdict::Pass).with_details(format!("{e} = 0"))).collect()
            }
        }
        Command::Reconstruct { multiplier, .. } => {
            vec![fallible(multiplier, || {
                let rec = s.reconstruct(multiplier)?;
                let comps: Vec<String> = rec.current.components().iter().map(|e| s.display(e)).collect();
                Ok(Outcome::new(multiplier.clone(), Verdict::Pass).with_details(format!("weight {}; current ({})", rec.weight, comps.join(", "))))
            })]
        }
        Command::SolveAnsatz { kind, basis, .. } => {
            let (kind, width) = match kind {
                AnsatzArg::Multiplier => (AnsatzKind::Multiplier, s.sys.n_eq()),
                AnsatzArg::Symmetry => (AnsatzKind::Symmetry, s.sys.ctx.n_dep()),
            };
            let b = s.parse_basis(basis, width, 1)?;
            let sols = s.ansatz(kind, &b)?;
            if sols.is_empty() {
                vec![Outcome::new("solutions", Verdict::Pass).with_details("none")]
            } else {
                sols.iter().enumerate().map(|(i, v)| Outcome::new(format!("solution {}", i + 1), Verdict::Pass).with_details(s.display_vec(v))).collect()
            }
        }
        Command::Regress { .. } => unreachable!(),
    };
    Ok(out)
}

fn render_text(results: &[Outcome]) -> String {
    let mut s = String::new();
    for r in results {
        s.push_str(&format!("{}: {}", r.name, r.verdict));
        if let Some(l) = &r.lambda {
            s.push_str(&format!("  λ = {l}"));
        }
        if let Some(d) = &r.details {
            s.push_str(&format!("  [{d}]"));
        }
        s.push('\n');
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    s.push_str(&format!("{passed}/{} passed\n", results.len()));
    s
}

/// Parse `argv` (including the program name), run, and report.
pub fn run_command<I, T>(argv: I) -> Run
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Run { code, stdout: text, stderr: String::new() }
            } else {
                Run { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let usage = |e: Error| Run { code: 2, stdout: String::new(), stderr: format!("error: {e}\n") };
    let vals = match params(&cli.global) {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let path = cli.command.file();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return usage(Error::Usage(format!("cannot read {path}: {e}"))),
    };
    let doc = match parse_document(&text) {
        Ok(d) => d,
        Err(e) => return usage(e),
    };
    let zt = zero_test(&cli.global, matches!(cli.command, Command::Regress { .. }));
    let results = match execute(&cli.command, &doc, &vals, &zt) {
        Ok(r) => r,
        Err(e @ (Error::ParseError { .. } | Error::UnknownSymbol(_) | Error::Usage(_) | Error::InconsistentAssumptions(_))) => return usage(e),
        Err(e) => vec![Outcome::new(cli.command.name(), Verdict::Fail).with_details(e.to_string())],
    };
    let code = if results.iter().all(Outcome::passed) { 0 } else { 1 };
    let stdout = if cli.global.json {
        let report = Report {
            command: cli.command.name(),
            system: doc.system.name.clone(),
            results,
            seed: cli.global.seed,
            params: vals.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
        };
        let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
        s.push('\n');
        s
    } else {
        render_text(&results)
    };
    Run { code, stdout, stderr: String::new() }
}
