//! Well-formedness-preserving constructors for terms, types and
//! propositions. These are the intended way to build values; the raw enum
//! constructors skip label sorting and collision checks.

use crate::taxonomy::{mk_concept, Concept, Taxonomy};

use super::{BuiltinOp, Prop, SubsetTy, Term, TermError, Type};

pub fn str(s: &str) -> Term {
    Term::Str(s.to_string())
}

/// Integers convert exactly; there is a single float representation.
pub fn num(n: i32) -> Term {
    Term::Num(f64::from(n))
}

pub fn num_f(x: f64) -> Term {
    Term::Num(x)
}

pub fn list(items: Vec<Term>) -> Term {
    Term::List(items)
}

pub fn atom(name: &str) -> Result<Term, TermError> {
    Ok(Term::Atom(mk_concept(name)?))
}

pub fn var(name: &str) -> Term {
    Term::Var(name.to_string())
}

pub fn term_name(name: &str) -> Term {
    Term::Alias(name.to_string())
}

pub fn bottom(label: &str) -> Result<Term, TermError> {
    Ok(Term::Bottom(mk_concept(label)?))
}

/// Builds a record, rejecting labels that are the same or synonymous.
pub fn record(tax: &Taxonomy, fields: Vec<(&str, Term)>) -> Result<Term, TermError> {
    let fields = intern_fields(fields)?;
    check_collisions(tax, fields.iter().map(|(l, _)| l))?;
    Term::record(fields)
}

pub fn record_select(t: Term, label: &str) -> Result<Term, TermError> {
    Ok(Term::Select(Box::new(t), mk_concept(label)?))
}

pub fn pred_arg_select(t: Term, index: u32) -> Term {
    Term::Select(Box::new(t), Concept::positional(index))
}

/// `name(args…)` encoded as a one-field record whose value is a record
/// keyed by argument position.
pub fn pred_app(name: &str, args: Vec<Term>) -> Result<Term, TermError> {
    if args.is_empty() {
        return Err(TermError::Arity(format!("predicate {name} applied to no arguments")));
    }
    let positional = args
        .into_iter()
        .enumerate()
        .map(|(i, t)| (Concept::positional(i as u32), t))
        .collect();
    Ok(Term::Record(vec![(mk_concept(name)?, Term::Record(positional))]))
}

pub fn triple(name: &str, first: Term, second: Term) -> Result<Term, TermError> {
    pred_app(name, vec![first, second])
}

pub fn str_ty() -> Type {
    Type::Str
}

pub fn num_ty() -> Type {
    Type::Num
}

pub fn void_ty() -> Type {
    Type::Void
}

pub fn list_ty(t: Type) -> Type {
    Type::List(Box::new(t))
}

pub fn type_name(name: &str) -> Type {
    Type::Alias(name.to_string())
}

pub fn enum_ty(names: &[&str]) -> Result<Type, TermError> {
    let concepts = names.iter().map(|n| mk_concept(n)).collect::<Result<Vec<_>, _>>()?;
    Type::enumeration(concepts)
}

pub fn record_ty(tax: &Taxonomy, fields: Vec<(&str, Type)>) -> Result<Type, TermError> {
    let fields = fields
        .into_iter()
        .map(|(l, t)| Ok((mk_concept(l)?, t)))
        .collect::<Result<Vec<_>, TermError>>()?;
    check_collisions(tax, fields.iter().map(|(l, _)| l))?;
    Type::record(fields)
}

pub fn pred_ty(name: &str, args: Vec<Type>) -> Result<Type, TermError> {
    if args.is_empty() {
        return Err(TermError::Arity(format!("predicate type {name} with no arguments")));
    }
    let positional = args
        .into_iter()
        .enumerate()
        .map(|(i, t)| (Concept::positional(i as u32), t))
        .collect();
    Ok(Type::Record(vec![(mk_concept(name)?, Type::Record(positional))]))
}

pub fn triple_ty(name: &str, first: Type, second: Type) -> Result<Type, TermError> {
    pred_ty(name, vec![first, second])
}

pub fn subset_ty(binding_term: Term, binding_type: Type, prop: Prop) -> Result<Type, TermError> {
    Ok(Type::Subset(Box::new(SubsetTy::new(binding_term, binding_type, prop)?)))
}

/// `a === b`
pub fn eq(a: Term, b: Term) -> Prop {
    Prop::Builtin(BuiltinOp::Eq, vec![a, b])
}

pub fn compare(op: BuiltinOp, a: Term, b: Term) -> Prop {
    Prop::Builtin(op, vec![a, b])
}

/// `p ^^ q`
pub fn and(p: Prop, q: Prop) -> Prop {
    Prop::And(Box::new(p), Box::new(q))
}

/// `p ||| q`
pub fn or(p: Prop, q: Prop) -> Prop {
    Prop::Or(Box::new(p), Box::new(q))
}

pub fn not(p: Prop) -> Prop {
    Prop::Not(Box::new(p))
}

/// `(??) var ty body`
pub fn exists(var: &str, ty: Type, body: Prop) -> Prop {
    Prop::Exists(var.to_string(), ty, Box::new(body))
}

pub fn in_sequence(t: Term, ts: Vec<Term>) -> Prop {
    Prop::InSequence(t, ts)
}

impl Term {
    pub fn equals(self, other: Term) -> Prop {
        eq(self, other)
    }
}

impl Prop {
    pub fn and(self, other: Prop) -> Prop {
        and(self, other)
    }

    pub fn or(self, other: Prop) -> Prop {
        or(self, other)
    }
}

fn intern_fields(fields: Vec<(&str, Term)>) -> Result<Vec<(Concept, Term)>, TermError> {
    fields
        .into_iter()
        .map(|(l, t)| Ok((mk_concept(l)?, t)))
        .collect()
}

pub(crate) fn check_collisions<'a>(
    tax: &Taxonomy,
    labels: impl Iterator<Item = &'a Concept>,
) -> Result<(), TermError> {
    let labels: Vec<&Concept> = labels.collect();
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            if tax.equiv(a, b) {
                return Err(TermError::MalformedRecord((*a).clone(), (*b).clone()));
            }
        }
    }
    Ok(())
}
