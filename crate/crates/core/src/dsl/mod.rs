//! The `.pol` machine language: parser, printer, and validator.

pub mod ast;
pub mod check;
pub mod lexer;
pub mod parser;
pub mod pretty;

use thiserror::Error;

pub use ast::PolicyMachine;
pub use check::{compile, validate, Diagnostic, DiagnosticKind};
pub use lexer::Pos;
pub use parser::{parse_expr, parse_policy};
pub use pretty::{expr_to_string, pretty_print};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: found {found}, expected one of: {}", expected.join(", "))]
    Syntax {
        pos: Pos,
        found: String,
        expected: Vec<String>,
    },
    #[error("{pos}: duplicate {what} `{name}`")]
    Duplicate { pos: Pos, what: &'static str, name: String },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Duplicate { pos, .. } => *pos,
        }
    }
}
