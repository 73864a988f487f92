//! The `.claw` document format, regression runner and command line.

pub mod cli;
pub mod document;
pub mod expr_parser;
pub mod runner;

pub use document::{parse_document, print_document, CurrentItem, Document, EquationDecl, Expect, Item, SystemDecl, When};
pub use expr_parser::{parse_assignments, parse_constant, parse_expr, parse_expr_at, parse_operator, Scope};
