//! Textual single-loop circuit descriptions.
//!
//! Grammar (whitespace-insensitive, `#` starts a line comment):
//!
//! ```text
//! circuit   := "circuit" "{" item+ "}"
//! item      := element | parallel | drive
//! element   := ("L" | "C" | "R" | "M") "{" kv ("," kv)* "}"
//! parallel  := "parallel" "{" element element "}"
//! drive     := "drive" "{" driveform "}"
//! driveform := "zero" | "const(" num ")"
//!            | "sin(amp=" num ",omega=" num ",phase=" num ")"
//! kv        := ident "=" (num | polylit)
//! polylit   := "poly(" var ";" num ("," num)* ")"
//! ```
//!
//! Recognized parameters: `L { L0 = <num> }` or `L { L = poly(I; ...) }`,
//! `C { C0 = <num> }` or `C { VC = poly(q; ...) }` (the capacitor voltage
//! Φ′_C), `R { R = poly(I; ...) }`, `M { M = poly(q; ...) }`. Polynomial
//! coefficients are ascending powers.

mod compile;
mod lexer;
mod parser;

pub use compile::compile;
pub use parser::{parse, print, DriveForm, ElementNode, Item, NetlistAst, ParamValue, Span};

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum NetlistError {
    #[error("{line}:{col}: {message}{}", expected_list(.expected))]
    Syntax {
        line: u32,
        col: u32,
        message: String,
        expected: Vec<String>,
    },
    #[error("{line}:{col}: {message}")]
    Structure { line: u32, col: u32, message: String },
}

fn expected_list(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(
            " (expected one of {})",
            expected
                .iter()
                .map(|e| format!("`{e}`"))
                .collect::<Vec<_>>()
                .join(", ")
        )
    }
}

impl NetlistError {
    /// Source position carried by every diagnostic.
    pub fn position(&self) -> (u32, u32) {
        match self {
            NetlistError::Syntax { line, col, .. } => (*line, *col),
            NetlistError::Structure { line, col, .. } => (*line, *col),
        }
    }
}
