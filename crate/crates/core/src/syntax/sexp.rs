//! Storage form: head-tagged S-expressions.
//!
//! ```text
//! term  := (num F) | (str S) | (atom C) | (record ((C term)*)) | (list term*)
//!        | (bottom C) | (select term C) | (var S) | (alias S)
//! type  := (numty) | (strty) | (voidty) | (listty type) | (recordty ((C type)*))
//!        | (enumty C+) | (subsetty term type prop) | (tyalias S)
//! prop  := (pred OP term*) | (and prop prop) | (or prop prop) | (not prop)
//!        | (exists S type prop) | (true) | (false) | (inseq term term*)
//! C     := #N | SYMBOL | S          -- positional, bare name, quoted name
//! OP    := < | <= | > | >= | =
//! ```
//!
//! Strings are double-quoted with `\\`, `\"`, `\n`, `\r`, `\t` escapes.
//! Numbers use the shortest representation that reads back to the same
//! `f64`. Rendering emits single spaces and no newlines, so one value fits
//! on one log line; reading accepts any whitespace.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::taxonomy::Concept;
use crate::term::{BuiltinOp, Prop, SubsetTy, Term, Type};

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Symbol(String),
    Str(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Sexp::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items) => Some(items),
            _ => None,
        }
    }
}

struct Reader<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::at(self.src, self.pos, message)
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn read(&mut self) -> Result<Sexp, SyntaxError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(self.error("unbalanced parenthesis")),
                        Some(')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items));
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(')') => Err(self.error("unexpected ')'")),
            Some('"') => {
                self.pos += 1;
                let mut out = String::new();
                let mut chars = self.src[self.pos..].char_indices();
                while let Some((i, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            self.pos += i + 1;
                            return Ok(Sexp::Str(out));
                        }
                        '\\' => {
                            let Some((_, esc)) = chars.next() else { break };
                            out.push(match esc {
                                'n' => '\n',
                                'r' => '\r',
                                't' => '\t',
                                '"' => '"',
                                '\\' => '\\',
                                other => {
                                    self.pos += i;
                                    return Err(self.error(format!("unknown escape \\{other}")));
                                }
                            });
                        }
                        c => out.push(c),
                    }
                }
                Err(self.error("unterminated string"))
            }
            Some(_) => {
                let rest = &self.src[self.pos..];
                let len = rest
                    .find(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == '"')
                    .unwrap_or(rest.len());
                self.pos += len;
                Ok(Sexp::Symbol(rest[..len].to_string()))
            }
        }
    }
}

/// Reads exactly one S-expression.
pub fn read(src: &str) -> Result<Sexp, SyntaxError> {
    let mut r = Reader { src, pos: 0 };
    let value = r.read()?;
    r.skip_ws();
    if r.pos != src.len() {
        return Err(r.error("trailing input after expression"));
    }
    Ok(value)
}

pub fn render(s: &Sexp) -> String {
    let mut out = String::new();
    render_into(s, &mut out);
    out
}

fn render_into(s: &Sexp, out: &mut String) {
    match s {
        Sexp::Symbol(sym) => out.push_str(sym),
        Sexp::Str(text) => write_str(text, out),
        Sexp::List(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                render_into(item, out);
            }
            out.push(')');
        }
    }
}

pub fn write_str(text: &str, out: &mut String) {
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn is_bare_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

pub fn write_concept(c: &Concept, out: &mut String) {
    match c {
        Concept::Positional(i) => {
            let _ = write!(out, "#{i}");
        }
        Concept::Named(name) if is_bare_symbol(name) => out.push_str(name),
        Concept::Named(name) => write_str(name, out),
    }
}

fn write_num(x: f64, out: &mut String) {
    let _ = write!(out, "{x:?}");
}

pub fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Num(x) => {
            out.push_str("(num ");
            write_num(*x, out);
            out.push(')');
        }
        Term::Str(s) => {
            out.push_str("(str ");
            write_str(s, out);
            out.push(')');
        }
        Term::Atom(c) => {
            out.push_str("(atom ");
            write_concept(c, out);
            out.push(')');
        }
        Term::Record(fields) => {
            out.push_str("(record (");
            for (i, (l, f)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                write_concept(l, out);
                out.push(' ');
                write_term(f, out);
                out.push(')');
            }
            out.push_str("))");
        }
        Term::List(items) => {
            out.push_str("(list");
            for item in items {
                out.push(' ');
                write_term(item, out);
            }
            out.push(')');
        }
        Term::Bottom(c) => {
            out.push_str("(bottom ");
            write_concept(c, out);
            out.push(')');
        }
        Term::Select(base, l) => {
            out.push_str("(select ");
            write_term(base, out);
            out.push(' ');
            write_concept(l, out);
            out.push(')');
        }
        Term::Var(v) => {
            out.push_str("(var ");
            write_str(v, out);
            out.push(')');
        }
        Term::Alias(n) => {
            out.push_str("(alias ");
            write_str(n, out);
            out.push(')');
        }
    }
}

pub fn write_type(t: &Type, out: &mut String) {
    match t {
        Type::Num => out.push_str("(numty)"),
        Type::Str => out.push_str("(strty)"),
        Type::Void => out.push_str("(voidty)"),
        Type::List(inner) => {
            out.push_str("(listty ");
            write_type(inner, out);
            out.push(')');
        }
        Type::Record(fields) => {
            out.push_str("(recordty (");
            for (i, (l, f)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push('(');
                write_concept(l, out);
                out.push(' ');
                write_type(f, out);
                out.push(')');
            }
            out.push_str("))");
        }
        Type::Enum(cs) => {
            out.push_str("(enumty");
            for c in cs {
                out.push(' ');
                write_concept(c, out);
            }
            out.push(')');
        }
        Type::Subset(s) => {
            out.push_str("(subsetty ");
            write_term(&s.binding_term, out);
            out.push(' ');
            write_type(&s.binding_type, out);
            out.push(' ');
            write_prop(&s.prop, out);
            out.push(')');
        }
        Type::Alias(n) => {
            out.push_str("(tyalias ");
            write_str(n, out);
            out.push(')');
        }
    }
}

pub fn write_prop(p: &Prop, out: &mut String) {
    match p {
        Prop::Builtin(op, args) => {
            out.push_str("(pred ");
            out.push_str(op.symbol());
            for a in args {
                out.push(' ');
                write_term(a, out);
            }
            out.push(')');
        }
        Prop::And(a, b) | Prop::Or(a, b) => {
            out.push_str(if matches!(p, Prop::And(..)) { "(and " } else { "(or " });
            write_prop(a, out);
            out.push(' ');
            write_prop(b, out);
            out.push(')');
        }
        Prop::Not(a) => {
            out.push_str("(not ");
            write_prop(a, out);
            out.push(')');
        }
        Prop::Exists(v, ty, body) => {
            out.push_str("(exists ");
            write_str(v, out);
            out.push(' ');
            write_type(ty, out);
            out.push(' ');
            write_prop(body, out);
            out.push(')');
        }
        Prop::True => out.push_str("(true)"),
        Prop::False => out.push_str("(false)"),
        Prop::InSequence(t, ts) => {
            out.push_str("(inseq ");
            write_term(t, out);
            for x in ts {
                out.push(' ');
                write_term(x, out);
            }
            out.push(')');
        }
    }
}

fn malformed(what: &str, s: &Sexp) -> SyntaxError {
    SyntaxError::new(format!("malformed {what}: {}", render(s)))
}

fn head<'a>(s: &'a Sexp, what: &str) -> Result<(&'a str, &'a [Sexp]), SyntaxError> {
    match s.as_list() {
        Some([Sexp::Symbol(h), rest @ ..]) => Ok((h.as_str(), rest)),
        _ => Err(malformed(what, s)),
    }
}

pub fn concept_from(s: &Sexp) -> Result<Concept, SyntaxError> {
    match s {
        Sexp::Symbol(sym) if sym.starts_with('#') => sym[1..]
            .parse::<u32>()
            .map(Concept::Positional)
            .map_err(|_| malformed("positional concept", s)),
        Sexp::Symbol(sym) if is_bare_symbol(sym) => Ok(Concept::Named(Arc::from(sym.as_str()))),
        Sexp::Str(name) if !name.is_empty() => Ok(Concept::Named(Arc::from(name.as_str()))),
        _ => Err(malformed("concept", s)),
    }
}

pub fn string_from<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, SyntaxError> {
    s.as_str().ok_or_else(|| malformed(what, s))
}

fn fields_from(s: &Sexp) -> Result<Vec<(Concept, &Sexp)>, SyntaxError> {
    let items = s.as_list().ok_or_else(|| malformed("field list", s))?;
    items
        .iter()
        .map(|f| match f.as_list() {
            Some([l, v]) => Ok((concept_from(l)?, v)),
            _ => Err(malformed("field", f)),
        })
        .collect()
}

pub fn term_from(s: &Sexp) -> Result<Term, SyntaxError> {
    let (h, args) = head(s, "term")?;
    Ok(match (h, args) {
        ("num", [Sexp::Symbol(x)]) => {
            Term::Num(x.parse::<f64>().map_err(|_| malformed("number", s))?)
        }
        ("str", [Sexp::Str(x)]) => Term::Str(x.clone()),
        ("atom", [c]) => Term::Atom(concept_from(c)?),
        ("record", [fields]) => {
            let fields = fields_from(fields)?
                .into_iter()
                .map(|(l, v)| Ok((l, term_from(v)?)))
                .collect::<Result<Vec<_>, SyntaxError>>()?;
            Term::record(fields).map_err(|e| SyntaxError::new(e.to_string()))?
        }
        ("list", items) => Term::List(items.iter().map(term_from).collect::<Result<_, _>>()?),
        ("bottom", [c]) => Term::Bottom(concept_from(c)?),
        ("select", [base, c]) => Term::Select(Box::new(term_from(base)?), concept_from(c)?),
        ("var", [v]) => Term::Var(string_from(v, "variable")?.to_string()),
        ("alias", [n]) => Term::Alias(string_from(n, "alias")?.to_string()),
        _ => return Err(malformed("term", s)),
    })
}

pub fn type_from(s: &Sexp) -> Result<Type, SyntaxError> {
    let (h, args) = head(s, "type")?;
    let wrap = |e: crate::term::TermError| SyntaxError::new(e.to_string());
    Ok(match (h, args) {
        ("numty", []) => Type::Num,
        ("strty", []) => Type::Str,
        ("voidty", []) => Type::Void,
        ("listty", [t]) => Type::List(Box::new(type_from(t)?)),
        ("recordty", [fields]) => {
            let fields = fields_from(fields)?
                .into_iter()
                .map(|(l, v)| Ok((l, type_from(v)?)))
                .collect::<Result<Vec<_>, SyntaxError>>()?;
            Type::record(fields).map_err(wrap)?
        }
        ("enumty", cs) => {
            Type::enumeration(cs.iter().map(concept_from).collect::<Result<_, _>>()?).map_err(wrap)?
        }
        ("subsetty", [t, ty, p]) => Type::Subset(Box::new(
            SubsetTy::new(term_from(t)?, type_from(ty)?, prop_from(p)?).map_err(wrap)?,
        )),
        ("tyalias", [n]) => Type::Alias(string_from(n, "type alias")?.to_string()),
        _ => return Err(malformed("type", s)),
    })
}

pub fn prop_from(s: &Sexp) -> Result<Prop, SyntaxError> {
    let (h, args) = head(s, "proposition")?;
    Ok(match (h, args) {
        ("pred", [Sexp::Symbol(op), rest @ ..]) => {
            let op = BuiltinOp::from_symbol(op).ok_or_else(|| malformed("operator", s))?;
            let terms = rest.iter().map(term_from).collect::<Result<Vec<_>, _>>()?;
            Prop::builtin(op, terms).map_err(|e| SyntaxError::new(e.to_string()))?
        }
        ("and", [a, b]) => Prop::And(Box::new(prop_from(a)?), Box::new(prop_from(b)?)),
        ("or", [a, b]) => Prop::Or(Box::new(prop_from(a)?), Box::new(prop_from(b)?)),
        ("not", [a]) => Prop::Not(Box::new(prop_from(a)?)),
        ("exists", [v, ty, body]) => Prop::Exists(
            string_from(v, "variable")?.to_string(),
            type_from(ty)?,
            Box::new(prop_from(body)?),
        ),
        ("true", []) => Prop::True,
        ("false", []) => Prop::False,
        ("inseq", [t, rest @ ..]) => Prop::InSequence(
            term_from(t)?,
            rest.iter().map(term_from).collect::<Result<_, _>>()?,
        ),
        _ => return Err(malformed("proposition", s)),
    })
}
