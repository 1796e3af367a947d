//! Textual syntax for resource-aware POWL models.
//!
//! ```text
//! process "Claims" {
//!   po main {
//!     act register "Register Claim" @ "Insurance" / "Clerk"
//!     act assess "Assess Claim" @ "Insurance" / "Adjuster"
//!     order { register -> assess }
//!   }
//! }
//! ```
//!
//! Parsing never stops at the first problem: lexical, syntactic and semantic
//! errors are all collected with their source spans.

mod lexer;
mod lower;
mod parser;
mod printer;

use std::fmt;

use serde::Serialize;

use crate::model::PowlModel;

pub use printer::print;

/// The grammar as presented to model authors and language models.
pub const GRAMMAR: &str = r##"model  := "process" STRING "{" node "}"
node   := act | silent | po | choice
act    := "act" [ID] STRING "@" STRING "/" STRING     # label @ pool / lane
silent := "tau" [ID]
po     := "po" ID "{" node+ [ "order" "{" (ID "->" ID)* "}" ] "}"
choice := "choice" ID "{" node+ "edges" "{" edge* "}" "}"
edge   := (ID | "start") "->" (ID | "end")
ID     := [A-Za-z_][A-Za-z0-9_]*   (not a keyword)
STRING := double-quoted, escapes \" \\ \n \t
comment:= "#" to end of line"##;

pub(crate) const KEYWORDS: &[&str] = &[
    "process", "act", "tau", "po", "choice", "order", "edges", "start", "end",
];

/// 1-based, inclusive source positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceSpan {
    pub(crate) fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, message: impl Into<String>, expected: Vec<String>) -> Self {
        Self {
            span,
            message: message.into(),
            expected,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// Parses a program. On success the model has an empty validation report.
pub fn parse(text: &str) -> Result<PowlModel, Vec<ParseError>> {
    let (tokens, mut errors) = lexer::tokenize(text);
    let (program, syntax_errors) = parser::parse_program(&tokens);
    errors.extend(syntax_errors);
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.span);
        return Err(errors);
    }
    let program = program.expect("a program without syntax errors");
    lower::lower(program)
}
