//! The term, type and proposition languages.
//!
//! Terms are graph values: records are objects with essential properties,
//! predicate applications are records whose single field holds a record
//! keyed by positional concepts, and aliases are references to other named
//! terms. Types are graph schemas. Propositions are the conditions carried
//! by subset types.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::taxonomy::{Concept, TaxonomyError};

pub mod build;
mod subst;

pub use subst::Substitution;
pub(crate) use subst::fresh_name;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("malformed record: labels {0} and {1} collide")]
    MalformedRecord(Concept, Concept),
    #[error("malformed enum: no concepts")]
    EmptyEnum,
    #[error("arity error: {0}")]
    Arity(String),
    #[error("malformed subset type: {0}")]
    Construction(String),
    #[error(transparent)]
    Concept(#[from] TaxonomyError),
}

#[derive(Debug, Clone)]
pub enum Term {
    Num(f64),
    Str(String),
    Atom(Concept),
    /// Fields sorted by label, labels pairwise distinct.
    Record(Vec<(Concept, Term)>),
    List(Vec<Term>),
    /// The value of an essential property that is not known.
    Bottom(Concept),
    Select(Box<Term>, Concept),
    Var(String),
    Alias(String),
}

impl Term {
    /// Sorts fields by label and rejects identical labels. Collisions up to
    /// synonymy are checked by [`build::record`].
    pub fn record(mut fields: Vec<(Concept, Term)>) -> Result<Term, TermError> {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = fields.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(TermError::MalformedRecord(w[0].0.clone(), w[1].0.clone()));
        }
        Ok(Term::Record(fields))
    }

    pub fn field(&self, label: &Concept) -> Option<&Term> {
        match self {
            Term::Record(fields) => fields
                .binary_search_by(|(l, _)| l.cmp(label))
                .ok()
                .map(|i| &fields[i].1),
            _ => None,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Record(fields) => fields.iter().all(|(_, t)| t.is_ground()),
            Term::List(items) => items.iter().all(Term::is_ground),
            Term::Select(base, _) => base.is_ground(),
            _ => true,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Record(fields) => fields.iter().for_each(|(_, t)| t.collect_vars(out)),
            Term::List(items) => items.iter().for_each(|t| t.collect_vars(out)),
            Term::Select(base, _) => base.collect_vars(out),
            _ => {}
        }
    }

    pub fn occurs(&self, var: &str) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Record(fields) => fields.iter().any(|(_, t)| t.occurs(var)),
            Term::List(items) => items.iter().any(|t| t.occurs(var)),
            Term::Select(base, _) => base.occurs(var),
            _ => false,
        }
    }

    /// Names referenced through aliases anywhere inside the term.
    pub fn aliases(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_aliases(&mut out);
        out
    }

    fn collect_aliases(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Alias(n) => {
                out.insert(n.clone());
            }
            Term::Record(fields) => fields.iter().for_each(|(_, t)| t.collect_aliases(out)),
            Term::List(items) => items.iter().for_each(|t| t.collect_aliases(out)),
            Term::Select(base, _) => base.collect_aliases(out),
            _ => {}
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Num(_) => 0,
            Term::Str(_) => 1,
            Term::Atom(_) => 2,
            Term::Record(_) => 3,
            Term::List(_) => 4,
            Term::Bottom(_) => 5,
            Term::Select(..) => 6,
            Term::Var(_) => 7,
            Term::Alias(_) => 8,
        }
    }
}

// Structural equality. Numbers compare by `total_cmp`, so the relation is a
// genuine equivalence usable for set membership and deduplication.
impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        use Term::*;
        match (self, other) {
            (Num(a), Num(b)) => a.total_cmp(b),
            (Str(a), Str(b)) => a.cmp(b),
            (Atom(a), Atom(b)) | (Bottom(a), Bottom(b)) => a.cmp(b),
            (Record(a), Record(b)) => a.cmp(b),
            (List(a), List(b)) => a.cmp(b),
            (Select(a, la), Select(b, lb)) => a.cmp(b).then_with(|| la.cmp(lb)),
            (Var(a), Var(b)) | (Alias(a), Alias(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Term::Num(x) => x.to_bits().hash(state),
            Term::Str(s) | Term::Var(s) | Term::Alias(s) => s.hash(state),
            Term::Atom(c) | Term::Bottom(c) => c.hash(state),
            Term::Record(fields) => fields.hash(state),
            Term::List(items) => items.hash(state),
            Term::Select(base, l) => {
                base.hash(state);
                l.hash(state);
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_term(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl BuiltinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BuiltinOp::Lt => "<",
            BuiltinOp::Le => "<=",
            BuiltinOp::Gt => ">",
            BuiltinOp::Ge => ">=",
            BuiltinOp::Eq => "=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => BuiltinOp::Lt,
            "<=" => BuiltinOp::Le,
            ">" => BuiltinOp::Gt,
            ">=" => BuiltinOp::Ge,
            "=" => BuiltinOp::Eq,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prop {
    Builtin(BuiltinOp, Vec<Term>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
    Not(Box<Prop>),
    Exists(String, Type, Box<Prop>),
    True,
    False,
    InSequence(Term, Vec<Term>),
}

impl Prop {
    pub fn builtin(op: BuiltinOp, args: Vec<Term>) -> Result<Prop, TermError> {
        if args.len() != 2 {
            return Err(TermError::Arity(format!(
                "builtin {} takes two arguments, got {}",
                op.symbol(),
                args.len()
            )));
        }
        Ok(Prop::Builtin(op, args))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Prop::Builtin(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            Prop::And(a, b) | Prop::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Prop::Not(p) => p.collect_vars(out),
            Prop::Exists(v, _, body) => {
                let mut inner = BTreeSet::new();
                body.collect_vars(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
            Prop::True | Prop::False => {}
            Prop::InSequence(t, ts) => {
                t.collect_vars(out);
                ts.iter().for_each(|t| t.collect_vars(out));
            }
        }
    }

    /// Variables bound by some quantifier anywhere in the proposition.
    pub fn bound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_bound(&mut out);
        out
    }

    fn collect_bound(&self, out: &mut BTreeSet<String>) {
        match self {
            Prop::And(a, b) | Prop::Or(a, b) => {
                a.collect_bound(out);
                b.collect_bound(out);
            }
            Prop::Not(p) => p.collect_bound(out),
            Prop::Exists(v, _, body) => {
                out.insert(v.clone());
                body.collect_bound(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetTy {
    pub binding_term: Term,
    pub binding_type: Type,
    pub prop: Prop,
}

impl SubsetTy {
    pub fn new(binding_term: Term, binding_type: Type, prop: Prop) -> Result<Self, TermError> {
        let bound = prop.bound_vars();
        if let Some(v) = binding_term.free_vars().intersection(&bound).next() {
            return Err(TermError::Construction(format!(
                "binding variable {v} is captured by a quantifier"
            )));
        }
        if matches!(binding_type, Type::Subset(_)) {
            return Err(TermError::Construction("binding type is itself a subset type".into()));
        }
        Ok(SubsetTy {
            binding_term,
            binding_type,
            prop,
        })
    }

    pub fn binding_vars(&self) -> BTreeSet<String> {
        self.binding_term.free_vars()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Num,
    Str,
    List(Box<Type>),
    /// Fields sorted by label, labels pairwise distinct.
    Record(Vec<(Concept, Type)>),
    /// Sorted, deduplicated.
    Enum(Vec<Concept>),
    Void,
    Subset(Box<SubsetTy>),
    Alias(String),
}

impl Type {
    pub fn record(mut fields: Vec<(Concept, Type)>) -> Result<Type, TermError> {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = fields.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(TermError::MalformedRecord(w[0].0.clone(), w[1].0.clone()));
        }
        Ok(Type::Record(fields))
    }

    pub fn enumeration(mut concepts: Vec<Concept>) -> Result<Type, TermError> {
        if concepts.is_empty() {
            return Err(TermError::EmptyEnum);
        }
        concepts.sort();
        concepts.dedup();
        Ok(Type::Enum(concepts))
    }

    /// Built without subset types or aliases.
    pub fn is_static(&self) -> bool {
        match self {
            Type::Num | Type::Str | Type::Enum(_) | Type::Void => true,
            Type::List(t) => t.is_static(),
            Type::Record(fields) => fields.iter().all(|(_, t)| t.is_static()),
            Type::Subset(_) | Type::Alias(_) => false,
        }
    }

    /// Class names referenced through `Alias`, including inside subset
    /// binding types and quantifier bounds.
    pub fn referenced_aliases(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_aliases(&mut out);
        out
    }

    fn collect_aliases(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Alias(n) => {
                out.insert(n.clone());
            }
            Type::List(t) => t.collect_aliases(out),
            Type::Record(fields) => fields.iter().for_each(|(_, t)| t.collect_aliases(out)),
            Type::Subset(s) => {
                s.binding_type.collect_aliases(out);
                prop_type_aliases(&s.prop, out);
            }
            _ => {}
        }
    }
}

fn prop_type_aliases(p: &Prop, out: &mut BTreeSet<String>) {
    match p {
        Prop::And(a, b) | Prop::Or(a, b) => {
            prop_type_aliases(a, out);
            prop_type_aliases(b, out);
        }
        Prop::Not(p) => prop_type_aliases(p, out),
        Prop::Exists(_, ty, body) => {
            ty.collect_aliases(out);
            prop_type_aliases(body, out);
        }
        _ => {}
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_type(self))
    }
}

impl fmt::Display for Prop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::render_prop(self))
    }
}
