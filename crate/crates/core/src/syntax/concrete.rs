//! Hand-written parser for term declarations.
//!
//! ```text
//! program := (decl ";")*
//! decl    := IDENT ":=" term
//! term    := STRING | NUMBER
//!          | IDENT "(" ")"                 atom
//!          | IDENT "(" arg ("," arg)* ")"  predicate application
//!          | IDENT                         alias if declared, else atom
//!          | "{" (field ("," field)*)? "}"
//!          | "[" (term ("," term)*)? "]"
//! arg     := IDENT                         always an alias (may be forward)
//!          | term
//! field   := (STRING | IDENT) (":" | "=") term
//! ```
//!
//! `//` starts a comment running to the end of the line.

use std::collections::BTreeSet;

use crate::taxonomy::{mk_concept, Concept, Taxonomy};
use crate::term::build::check_collisions;
use crate::term::{build, Term};

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub name: String,
    pub body: Term,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    Define,
    Semi,
    Comma,
    Colon,
    Equals,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eof,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Num(x) => format!("number {x}"),
        Tok::Eof => "end of input".into(),
        other => format!("`{}`", match other {
            Tok::Define => ":=",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Equals => "=",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            _ => "]",
        }),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if src[i..].starts_with("//") {
            i = src[i..].find('\n').map_or(bytes.len(), |n| i + n);
            continue;
        }
        let start = i;
        let tok = match c {
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                i += 2;
                Tok::Define
            }
            b':' => {
                i += 1;
                Tok::Colon
            }
            b'=' => {
                i += 1;
                Tok::Equals
            }
            b';' => {
                i += 1;
                Tok::Semi
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'{' => {
                i += 1;
                Tok::LBrace
            }
            b'}' => {
                i += 1;
                Tok::RBrace
            }
            b'[' => {
                i += 1;
                Tok::LBracket
            }
            b']' => {
                i += 1;
                Tok::RBracket
            }
            b'"' => {
                let mut text = String::new();
                let mut chars = src[i + 1..].char_indices();
                let mut closed = None;
                while let Some((j, ch)) = chars.next() {
                    match ch {
                        '"' => {
                            closed = Some(i + 1 + j + 1);
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, 'n')) => text.push('\n'),
                            Some((_, 't')) => text.push('\t'),
                            Some((_, 'r')) => text.push('\r'),
                            Some((_, e @ ('"' | '\\'))) => text.push(e),
                            _ => return Err(SyntaxError::at(src, i + 1 + j, "bad escape in string")),
                        },
                        ch => text.push(ch),
                    }
                }
                i = closed.ok_or_else(|| SyntaxError::at(src, start, "unterminated string"))?;
                Tok::Str(text)
            }
            b'-' | b'0'..=b'9' => {
                let rest = &src[i..];
                let mut len = usize::from(c == b'-');
                let digits = |s: &str| s.bytes().take_while(u8::is_ascii_digit).count();
                let int = digits(&rest[len..]);
                if int == 0 {
                    return Err(SyntaxError::at(src, start, "expected digits"));
                }
                len += int;
                if rest[len..].starts_with('.') && digits(&rest[len + 1..]) > 0 {
                    len += 1 + digits(&rest[len + 1..]);
                }
                if rest[len..].starts_with(['e', 'E']) {
                    let mut k = len + 1;
                    if rest[k..].starts_with(['+', '-']) {
                        k += 1;
                    }
                    let exp = digits(&rest[k..]);
                    if exp > 0 {
                        len = k + exp;
                    }
                }
                let value = rest[..len]
                    .parse::<f64>()
                    .map_err(|_| SyntaxError::at(src, start, "malformed number"))?;
                i += len;
                Tok::Num(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let len = src[i..]
                    .bytes()
                    .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_' || *b == b'-')
                    .count();
                i += len;
                Tok::Ident(src[start..i].to_string())
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(SyntaxError::at(src, start, format!("unexpected character {ch:?}")));
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    tax: &'a Taxonomy,
    declared: BTreeSet<String>,
    known: &'a dyn Fn(&str) -> bool,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::at(self.src, self.offset(), message)
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            )))
        }
    }

    fn program(&mut self) -> Result<Vec<Declaration>, SyntaxError> {
        let mut decls = Vec::new();
        while *self.peek() != Tok::Eof {
            let at = self.offset();
            let name = match self.bump() {
                Tok::Ident(n) => n,
                other => {
                    return Err(SyntaxError::at(
                        self.src,
                        at,
                        format!("expected declaration name, found {}", describe(&other)),
                    ))
                }
            };
            if self.declared.contains(&name) {
                return Err(SyntaxError::at(self.src, at, format!("duplicate declaration `{name}`")));
            }
            self.expect(Tok::Define)?;
            let body = self.term(false)?;
            self.expect(Tok::Semi)?;
            self.declared.insert(name.clone());
            decls.push(Declaration { name, body });
        }
        Ok(decls)
    }

    fn term(&mut self, argument: bool) -> Result<Term, SyntaxError> {
        let at = self.offset();
        match self.bump() {
            Tok::Str(s) => Ok(Term::Str(s)),
            Tok::Num(x) => Ok(Term::Num(x)),
            Tok::Ident(id) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    if *self.peek() == Tok::RParen {
                        self.bump();
                        return build::atom(&id).map_err(|e| SyntaxError::at(self.src, at, e.to_string()));
                    }
                    let mut args = vec![self.term(true)?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.term(true)?);
                    }
                    self.expect(Tok::RParen)?;
                    return build::pred_app(&id, args)
                        .map_err(|e| SyntaxError::at(self.src, at, e.to_string()));
                }
                if argument || self.declared.contains(&id) || (self.known)(&id) {
                    Ok(Term::Alias(id))
                } else {
                    build::atom(&id).map_err(|e| SyntaxError::at(self.src, at, e.to_string()))
                }
            }
            Tok::LBrace => {
                let mut fields: Vec<(Concept, Term)> = Vec::new();
                if *self.peek() != Tok::RBrace {
                    loop {
                        let label_at = self.offset();
                        let label = match self.bump() {
                            Tok::Str(s) | Tok::Ident(s) => s,
                            other => {
                                return Err(SyntaxError::at(
                                    self.src,
                                    label_at,
                                    format!("expected field label, found {}", describe(&other)),
                                ))
                            }
                        };
                        let label = mk_concept(&label)
                            .map_err(|e| SyntaxError::at(self.src, label_at, e.to_string()))?;
                        match self.peek() {
                            Tok::Colon | Tok::Equals => {
                                self.bump();
                            }
                            other => {
                                return Err(self.error_here(format!(
                                    "expected `:` or `=`, found {}",
                                    describe(other)
                                )))
                            }
                        }
                        fields.push((label, self.term(false)?));
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                check_collisions(self.tax, fields.iter().map(|(l, _)| l))
                    .map_err(|e| SyntaxError::at(self.src, at, e.to_string()))?;
                Term::record(fields).map_err(|e| SyntaxError::at(self.src, at, e.to_string()))
            }
            Tok::LBracket => {
                let mut items = Vec::new();
                if *self.peek() != Tok::RBracket {
                    items.push(self.term(false)?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        items.push(self.term(false)?);
                    }
                }
                self.expect(Tok::RBracket)?;
                Ok(Term::List(items))
            }
            other => Err(SyntaxError::at(
                self.src,
                at,
                format!("expected a term, found {}", describe(&other)),
            )),
        }
    }
}

/// Parses declarations with no names known beforehand.
pub fn parse_program(src: &str, tax: &Taxonomy) -> Result<Vec<Declaration>, SyntaxError> {
    parse_program_with(src, tax, &|_| false)
}

/// `known` reports names already bound outside this program; a bare
/// identifier in value position is an alias when declared or known and an
/// atom otherwise.
pub fn parse_program_with(
    src: &str,
    tax: &Taxonomy,
    known: &dyn Fn(&str) -> bool,
) -> Result<Vec<Declaration>, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        tax,
        declared: BTreeSet::new(),
        known,
    };
    p.program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::build::*;

    fn one(src: &str) -> Declaration {
        let mut d = parse_program(src, &Taxonomy::new()).unwrap();
        assert_eq!(d.len(), 1);
        d.pop().unwrap()
    }

    #[test]
    fn record_declaration() {
        let d = one(r#"joe := {"name"="Joe", "birth_date"="1984-06-27"};"#);
        assert_eq!(d.name, "joe");
        let tax = Taxonomy::new();
        assert_eq!(
            d.body,
            record(&tax, vec![("name", str("Joe")), ("birth_date", str("1984-06-27"))]).unwrap()
        );
    }

    #[test]
    fn predicate_arguments_are_aliases() {
        let d = one("o1 := orig-of(joe, t1);");
        assert_eq!(d.body, triple("orig-of", term_name("joe"), term_name("t1")).unwrap());
    }

    #[test]
    fn number_and_atom_fields() {
        let d = one(r#"t1 := {"amount" = 500.0, "type"=check()};"#);
        let tax = Taxonomy::new();
        assert_eq!(
            d.body,
            record(&tax, vec![("amount", num_f(500.0)), ("type", atom("check").unwrap())]).unwrap()
        );
    }

    #[test]
    fn bare_identifier_depends_on_declarations() {
        let src = r#"
            Kentucky := {"name" = "Kentucky"};
            a := {"where" : Kentucky};
            b := {"where" : Ohio};
        "#;
        let d = parse_program(src, &Taxonomy::new()).unwrap();
        assert_eq!(d[1].body.field(&mk_concept("where").unwrap()), Some(&term_name("Kentucky")));
        assert_eq!(d[2].body.field(&mk_concept("where").unwrap()), Some(&atom("Ohio").unwrap()));
        let known = |n: &str| n == "Ohio";
        let d = parse_program_with(r#"b := {"where" : Ohio};"#, &Taxonomy::new(), &known).unwrap();
        assert_eq!(d[0].body.field(&mk_concept("where").unwrap()), Some(&term_name("Ohio")));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_program("a := {\"x\" = 1};\nb := {\"y\" 2};", &Taxonomy::new()).unwrap_err();
        assert_eq!((e.line, e.column), (2, 11));
        let e = parse_program("a := 1;\na := 2;", &Taxonomy::new()).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate"));
        assert!(parse_program("a := ;", &Taxonomy::new()).is_err());
        assert!(parse_program("a := 1", &Taxonomy::new()).is_err());
    }

    #[test]
    fn lists_negative_numbers_and_comments() {
        let d = one("// note\nxs := [1, -2.5e1, \"s\"]; // trailing");
        assert_eq!(d.body, list(vec![num(1), num_f(-25.0), str("s")]));
    }

    #[test]
    fn synonymous_labels_rejected() {
        let mut tax = Taxonomy::new();
        tax.same_as(&mk_concept("dob").unwrap(), &mk_concept("birth_date").unwrap())
            .unwrap();
        assert!(parse_program(r#"x := {"dob" = "1", "birth_date" = "2"};"#, &tax).is_err());
    }
}
