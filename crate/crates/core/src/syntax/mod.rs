//! Concrete declaration syntax and the S-expression storage form.

use std::fmt;

use thiserror::Error;

use crate::term::{Prop, Term, Type};

mod concrete;
pub mod sexp;

pub use concrete::{parse_program, parse_program_with, Declaration};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SyntaxError {
    /// 1-based; zero when the error has no source position.
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(message: impl Into<String>) -> Self {
        SyntaxError {
            line: 0,
            column: 0,
            message: message.into(),
        }
    }

    pub(crate) fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        let before = &src[..offset.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        SyntaxError {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}:{}: {}", self.line, self.column, self.message)
        }
    }
}

pub fn render_term(t: &Term) -> String {
    let mut out = String::new();
    sexp::write_term(t, &mut out);
    out
}

pub fn render_type(t: &Type) -> String {
    let mut out = String::new();
    sexp::write_type(t, &mut out);
    out
}

pub fn render_prop(p: &Prop) -> String {
    let mut out = String::new();
    sexp::write_prop(p, &mut out);
    out
}

pub fn parse_term_sexp(src: &str) -> Result<Term, SyntaxError> {
    sexp::term_from(&sexp::read(src)?)
}

pub fn parse_type_sexp(src: &str) -> Result<Type, SyntaxError> {
    sexp::type_from(&sexp::read(src)?)
}

pub fn parse_prop_sexp(src: &str) -> Result<Prop, SyntaxError> {
    sexp::prop_from(&sexp::read(src)?)
}
