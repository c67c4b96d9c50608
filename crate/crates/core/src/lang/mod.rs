//! Front end for Tardi: lexer, parser, pretty-printer and static checker.

pub mod ast;
pub mod check;
pub mod parser;
pub mod pretty;
pub mod token;

use std::fmt;

use thiserror::Error;

pub use ast::Program;
pub use check::{check_program, CheckError, CheckErrors, CheckedProgram};
pub use parser::{parse_program, ParseError};
pub use token::{tokenize, LexError, Span, Token, TokenKind};

#[derive(Debug, Error)]
pub enum SourceError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Check(#[from] CheckErrors),
}

impl SourceError {
    /// Renders each diagnostic as `file:line:col: message`.
    pub fn with_file<'a>(&'a self, file: &'a str) -> impl fmt::Display + 'a {
        struct WithFile<'a>(&'a SourceError, &'a str);
        impl fmt::Display for WithFile<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    SourceError::Lex(e) => write!(f, "{}:{}: {}", self.1, e.span, e.message),
                    SourceError::Parse(e) => write!(
                        f,
                        "{}:{}: expected {}, found {}",
                        self.1, e.span, e.expected, e.found
                    ),
                    SourceError::Check(errs) => {
                        for (i, e) in errs.0.iter().enumerate() {
                            if i > 0 {
                                writeln!(f)?;
                            }
                            write!(f, "{}:{}: {}", self.1, e.span, e.message)?;
                        }
                        Ok(())
                    }
                }
            }
        }
        WithFile(self, file)
    }
}

/// Tokenizes, parses and checks `source`.
pub fn compile(source: &str) -> Result<CheckedProgram, SourceError> {
    let tokens = tokenize(source)?;
    let program = parse_program(&tokens)?;
    Ok(check_program(&program)?)
}
