//! Static type inference, deterministic structural subtyping, and the
//! coercions extracted from subtyping proofs.
//!
//! The prover walks the supertype's record fields in label order and, for
//! each, takes the first unconsumed subtype field (also in label order)
//! whose label matches under the taxonomy and whose type is itself provably
//! a subtype. Extra subtype fields are allowed and are dropped by the
//! coercion, so a coerced term carries exactly the supertype's schema.

use thiserror::Error;

use crate::taxonomy::{Concept, Taxonomy};
use crate::term::{Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypingError {
    #[error("coercion domain error: {0}")]
    CoercionDomain(String),
    #[error("unknown type alias {0}")]
    UnknownAlias(String),
    #[error("type alias {0} does not name a static type")]
    NotStatic(String),
    #[error("type alias cycle through {0}")]
    AliasCycle(String),
}

/// One pairing decision at a record node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldProof {
    pub sup_label: Concept,
    pub sub_label: Concept,
    pub proof: SubtypeProof,
}

/// Witness of `sub ≤ sup`. A coercion is read off this tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubtypeProof {
    Num,
    Str,
    /// `Void ≤ T` for any `T`; only inhabited by the elements of an empty list.
    Void,
    /// Each subtype concept mapped to the supertype concept it stands for.
    Enum(Vec<(Concept, Concept)>),
    List(Box<SubtypeProof>),
    Record {
        fields: Vec<FieldProof>,
        dropped: Vec<Concept>,
    },
}

impl SubtypeProof {
    /// No renamed labels or atoms and no dropped fields anywhere.
    pub fn is_identity_shaped(&self) -> bool {
        match self {
            SubtypeProof::Num | SubtypeProof::Str | SubtypeProof::Void => true,
            SubtypeProof::Enum(pairs) => pairs.iter().all(|(a, b)| a == b),
            SubtypeProof::List(inner) => inner.is_identity_shaped(),
            SubtypeProof::Record { fields, dropped } => {
                dropped.is_empty()
                    && fields
                        .iter()
                        .all(|f| f.sup_label == f.sub_label && f.proof.is_identity_shaped())
            }
        }
    }
}

/// The term rewriter extracted from a subtyping proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coercion(SubtypeProof);

impl Coercion {
    pub fn from_proof(proof: SubtypeProof) -> Self {
        Coercion(proof)
    }

    pub fn proof(&self) -> &SubtypeProof {
        &self.0
    }

    pub fn apply(&self, t: &Term) -> Result<Term, TypingError> {
        apply_coercion(&self.0, t)
    }
}

/// Infers the static type of `t`, or `None` when the term is not typeable.
/// `resolve` gives the type of a named term, when it has one.
pub fn infer_static_type(
    tax: &Taxonomy,
    t: &Term,
    resolve: &dyn Fn(&str) -> Option<Type>,
) -> Option<Type> {
    match t {
        Term::Num(_) => Some(Type::Num),
        Term::Str(_) => Some(Type::Str),
        Term::Atom(c) => Some(Type::Enum(vec![c.clone()])),
        Term::Record(fields) => {
            let mut out = Vec::with_capacity(fields.len());
            for (l, f) in fields {
                out.push((l.clone(), infer_static_type(tax, f, resolve)?));
            }
            Some(Type::Record(out))
        }
        Term::List(items) => {
            let mut iter = items.iter();
            let Some(first) = iter.next() else {
                return Some(Type::List(Box::new(Type::Void)));
            };
            let elem = infer_static_type(tax, first, resolve)?;
            for item in iter {
                if infer_static_type(tax, item, resolve)? != elem {
                    return None;
                }
            }
            Some(Type::List(Box::new(elem)))
        }
        Term::Bottom(_) | Term::Var(_) => None,
        Term::Alias(n) => resolve(n).filter(Type::is_static),
        Term::Select(base, label) => {
            let base_ty = infer_static_type(tax, base, resolve)?;
            select_type(tax, &base_ty, label).cloned()
        }
    }
}

/// Field of a record type addressed by `label`: an exact label, then the
/// first label matching it under the taxonomy, then (for positional labels)
/// the argument of a one-field predicate record.
pub fn select_type<'a>(tax: &Taxonomy, ty: &'a Type, label: &Concept) -> Option<&'a Type> {
    let Type::Record(fields) = ty else { return None };
    select_in(tax, fields, label, |t| match t {
        Type::Record(inner) => Some(inner.as_slice()),
        _ => None,
    })
}

pub(crate) fn select_in<'a, V>(
    tax: &Taxonomy,
    fields: &'a [(Concept, V)],
    label: &Concept,
    as_record: impl Fn(&'a V) -> Option<&'a [(Concept, V)]>,
) -> Option<&'a V> {
    if let Some((_, v)) = fields.iter().find(|(l, _)| l == label) {
        return Some(v);
    }
    if let Some((_, v)) = fields.iter().find(|(l, _)| tax.label_match(l, label)) {
        return Some(v);
    }
    match (label, fields) {
        (Concept::Positional(_), [(_, inner)]) => {
            let inner = as_record(inner)?;
            inner.iter().find(|(l, _)| l == label).map(|(_, v)| v)
        }
        _ => None,
    }
}

/// Deterministic structural subtyping over static types.
pub fn prove_subtype(tax: &Taxonomy, sub: &Type, sup: &Type) -> Option<SubtypeProof> {
    match (sub, sup) {
        (Type::Void, _) => Some(SubtypeProof::Void),
        (Type::Num, Type::Num) => Some(SubtypeProof::Num),
        (Type::Str, Type::Str) => Some(SubtypeProof::Str),
        (Type::Enum(subs), Type::Enum(sups)) => {
            let mut pairs = Vec::with_capacity(subs.len());
            for c in subs {
                let target = sups
                    .iter()
                    .find(|d| *d == c)
                    .or_else(|| sups.iter().find(|d| tax.equiv(c, d)))?;
                pairs.push((c.clone(), target.clone()));
            }
            Some(SubtypeProof::Enum(pairs))
        }
        (Type::List(a), Type::List(b)) => Some(SubtypeProof::List(Box::new(prove_subtype(tax, a, b)?))),
        (Type::Record(subs), Type::Record(sups)) => {
            let mut used = vec![false; subs.len()];
            let mut fields = Vec::with_capacity(sups.len());
            for (sup_label, sup_ty) in sups {
                let found = subs.iter().enumerate().find_map(|(i, (sub_label, sub_ty))| {
                    if used[i] || !tax.label_match(sub_label, sup_label) {
                        return None;
                    }
                    prove_subtype(tax, sub_ty, sup_ty).map(|p| (i, p))
                })?;
                used[found.0] = true;
                fields.push(FieldProof {
                    sup_label: sup_label.clone(),
                    sub_label: subs[found.0].0.clone(),
                    proof: found.1,
                });
            }
            let dropped = subs
                .iter()
                .zip(&used)
                .filter(|(_, u)| !**u)
                .map(|((l, _), _)| l.clone())
                .collect();
            Some(SubtypeProof::Record { fields, dropped })
        }
        _ => None,
    }
}

pub fn coercion(proof: SubtypeProof) -> Coercion {
    Coercion(proof)
}

/// Rewrites a term of the proof's subtype into the supertype: matched
/// fields renamed to the supertype's labels, unmatched fields dropped,
/// atoms mapped onto the supertype's enum concepts. Aliases are references
/// and pass through unchanged.
pub fn apply_coercion(proof: &SubtypeProof, t: &Term) -> Result<Term, TypingError> {
    let domain = |what: &str| TypingError::CoercionDomain(format!("expected {what}, found {t}"));
    if let Term::Alias(_) = t {
        return Ok(t.clone());
    }
    match proof {
        SubtypeProof::Num => match t {
            Term::Num(_) => Ok(t.clone()),
            _ => Err(domain("a number")),
        },
        SubtypeProof::Str => match t {
            Term::Str(_) => Ok(t.clone()),
            _ => Err(domain("a string")),
        },
        SubtypeProof::Void => Err(domain("no value (void)")),
        SubtypeProof::Enum(pairs) => match t {
            Term::Atom(c) => pairs
                .iter()
                .find(|(from, _)| from == c)
                .map(|(_, to)| Term::Atom(to.clone()))
                .ok_or_else(|| domain("an atom of the enumeration")),
            _ => Err(domain("an atom")),
        },
        SubtypeProof::List(inner) => match t {
            Term::List(items) => Ok(Term::List(
                items
                    .iter()
                    .map(|i| apply_coercion(inner, i))
                    .collect::<Result<_, _>>()?,
            )),
            _ => Err(domain("a list")),
        },
        SubtypeProof::Record { fields, .. } => {
            let Term::Record(have) = t else {
                return Err(domain("a record"));
            };
            let mut out = Vec::with_capacity(fields.len());
            for f in fields {
                let value = have
                    .iter()
                    .find(|(l, _)| *l == f.sub_label)
                    .map(|(_, v)| v)
                    .ok_or_else(|| domain(&format!("a record with field {}", f.sub_label)))?;
                let value = match value {
                    Term::Bottom(_) => Term::Bottom(f.sup_label.clone()),
                    v => apply_coercion(&f.proof, v)?,
                };
                out.push((f.sup_label.clone(), value));
            }
            out.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(Term::Record(out))
        }
    }
}

/// Checks a term directly against a known static type. Unlike inference,
/// a `Bottom` field is accepted for any declared field type.
pub fn check_against(
    tax: &Taxonomy,
    t: &Term,
    sup: &Type,
    resolve: &dyn Fn(&str) -> Option<Type>,
) -> Option<SubtypeProof> {
    if let Some(inferred) = infer_static_type(tax, t, resolve) {
        return prove_subtype(tax, &inferred, sup);
    }
    match (t, sup) {
        (Term::Record(have), Type::Record(sups)) => {
            let mut used = vec![false; have.len()];
            let mut fields = Vec::with_capacity(sups.len());
            for (sup_label, sup_ty) in sups {
                let found = have.iter().enumerate().find_map(|(i, (l, v))| {
                    if used[i] || !tax.label_match(l, sup_label) {
                        return None;
                    }
                    match v {
                        Term::Bottom(_) => Some((i, trivial_proof(sup_ty))),
                        v => check_against(tax, v, sup_ty, resolve).map(|p| (i, p)),
                    }
                })?;
                used[found.0] = true;
                fields.push(FieldProof {
                    sup_label: sup_label.clone(),
                    sub_label: have[found.0].0.clone(),
                    proof: found.1,
                });
            }
            let dropped = have
                .iter()
                .zip(&used)
                .filter(|(_, u)| !**u)
                .map(|((l, _), _)| l.clone())
                .collect();
            Some(SubtypeProof::Record { fields, dropped })
        }
        (Term::List(items), Type::List(elem)) => {
            // proofs may differ per element; accept only a common one
            let mut proof = None;
            for item in items {
                let p = check_against(tax, item, elem, resolve)?;
                match &proof {
                    None => proof = Some(p),
                    Some(q) if *q == p => {}
                    Some(_) => return None,
                }
            }
            Some(SubtypeProof::List(Box::new(proof.unwrap_or(SubtypeProof::Void))))
        }
        _ => None,
    }
}

fn trivial_proof(ty: &Type) -> SubtypeProof {
    match ty {
        Type::Num => SubtypeProof::Num,
        Type::Str => SubtypeProof::Str,
        Type::Enum(cs) => SubtypeProof::Enum(cs.iter().map(|c| (c.clone(), c.clone())).collect()),
        Type::List(inner) => SubtypeProof::List(Box::new(trivial_proof(inner))),
        Type::Record(fields) => SubtypeProof::Record {
            fields: fields
                .iter()
                .map(|(l, t)| FieldProof {
                    sup_label: l.clone(),
                    sub_label: l.clone(),
                    proof: trivial_proof(t),
                })
                .collect(),
            dropped: vec![],
        },
        _ => SubtypeProof::Void,
    }
}

/// Replaces class references with their (static) definitions.
pub fn resolve_aliases(
    ty: &Type,
    lookup: &dyn Fn(&str) -> Option<Type>,
) -> Result<Type, TypingError> {
    fn go(
        ty: &Type,
        lookup: &dyn Fn(&str) -> Option<Type>,
        stack: &mut Vec<String>,
    ) -> Result<Type, TypingError> {
        Ok(match ty {
            Type::Alias(n) => {
                if stack.contains(n) {
                    return Err(TypingError::AliasCycle(n.clone()));
                }
                let def = lookup(n).ok_or_else(|| TypingError::UnknownAlias(n.clone()))?;
                if matches!(def, Type::Subset(_)) {
                    return Err(TypingError::NotStatic(n.clone()));
                }
                stack.push(n.clone());
                let out = go(&def, lookup, stack)?;
                stack.pop();
                out
            }
            Type::List(t) => Type::List(Box::new(go(t, lookup, stack)?)),
            Type::Record(fields) => Type::Record(
                fields
                    .iter()
                    .map(|(l, t)| Ok((l.clone(), go(t, lookup, stack)?)))
                    .collect::<Result<_, TypingError>>()?,
            ),
            Type::Subset(_) => return Err(TypingError::NotStatic(ty.to_string())),
            other => other.clone(),
        })
    }
    go(ty, lookup, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::mk_concept;
    use crate::term::build::*;

    fn c(s: &str) -> Concept {
        mk_concept(s).unwrap()
    }

    fn none(_: &str) -> Option<Type> {
        None
    }

    fn person(tax: &Taxonomy) -> Type {
        record_ty(tax, vec![("name", str_ty()), ("dob", str_ty())]).unwrap()
    }

    fn joe(tax: &Taxonomy) -> Term {
        record(tax, vec![("name", str("Joe")), ("birth_date", str("1984-06-27"))]).unwrap()
    }

    #[test]
    fn infers_joe() {
        let tax = Taxonomy::new();
        let ty = infer_static_type(&tax, &joe(&tax), &none).unwrap();
        assert_eq!(
            ty,
            record_ty(&tax, vec![("name", str_ty()), ("birth_date", str_ty())]).unwrap()
        );
        assert_eq!(infer_static_type(&tax, &str("x"), &none), Some(Type::Str));
        assert_eq!(infer_static_type(&tax, &term_name("ghost"), &none), None);
    }

    #[test]
    fn lists_must_be_homogeneous() {
        let tax = Taxonomy::new();
        assert_eq!(
            infer_static_type(&tax, &list(vec![num(1), num(2)]), &none),
            Some(list_ty(num_ty()))
        );
        assert_eq!(infer_static_type(&tax, &list(vec![num(1), str("a")]), &none), None);
        assert_eq!(infer_static_type(&tax, &list(vec![]), &none), Some(list_ty(void_ty())));
    }

    #[test]
    fn bottom_is_not_inferred_but_checks() {
        let tax = Taxonomy::new();
        let t = Term::record(vec![(c("name"), str("Ann")), (c("dob"), bottom("dob").unwrap())]).unwrap();
        assert_eq!(infer_static_type(&tax, &t, &none), None);
        let p = check_against(&tax, &t, &person(&tax), &none).unwrap();
        assert_eq!(apply_coercion(&p, &t).unwrap(), t);
    }

    #[test]
    fn joe_is_a_person_after_synonym() {
        let mut tax = Taxonomy::new();
        let joe_ty = infer_static_type(&tax, &joe(&tax), &none).unwrap();
        assert!(prove_subtype(&tax, &joe_ty, &person(&tax)).is_none());
        tax.same_as(&c("dob"), &c("birth_date")).unwrap();
        let proof = prove_subtype(&tax, &joe_ty, &person(&tax)).unwrap();
        let SubtypeProof::Record { fields, dropped } = &proof else { panic!() };
        assert!(dropped.is_empty());
        assert_eq!(
            fields.iter().map(|f| (f.sup_label.clone(), f.sub_label.clone())).collect::<Vec<_>>(),
            vec![(c("dob"), c("birth_date")), (c("name"), c("name"))]
        );
        let coerced = apply_coercion(&proof, &joe(&tax)).unwrap();
        assert_eq!(
            coerced,
            Term::record(vec![(c("name"), str("Joe")), (c("dob"), str("1984-06-27"))]).unwrap()
        );
        // deterministic
        assert_eq!(prove_subtype(&tax, &joe_ty, &person(&tax)), Some(proof));
    }

    #[test]
    fn missing_field_has_no_proof() {
        let tax = Taxonomy::new();
        let name_only = record_ty(&tax, vec![("name", str_ty())]).unwrap();
        assert!(prove_subtype(&tax, &name_only, &person(&tax)).is_none());
    }

    #[test]
    fn extra_fields_are_dropped() {
        let tax = Taxonomy::new();
        let t = record(&tax, vec![("name", str("A")), ("dob", str("B")), ("eyes", str("blue"))]).unwrap();
        let ty = infer_static_type(&tax, &t, &none).unwrap();
        let p = prove_subtype(&tax, &ty, &person(&tax)).unwrap();
        let out = apply_coercion(&p, &t).unwrap();
        assert_eq!(infer_static_type(&tax, &out, &none), Some(person(&tax)));
    }

    #[test]
    fn identity_proof_is_identity() {
        let tax = Taxonomy::new();
        let t = joe(&tax);
        let ty = infer_static_type(&tax, &t, &none).unwrap();
        let p = prove_subtype(&tax, &ty, &ty).unwrap();
        assert!(p.is_identity_shaped());
        assert_eq!(apply_coercion(&p, &t).unwrap(), t);
    }

    #[test]
    fn enums_and_lattice_labels() {
        let mut tax = Taxonomy::new();
        let check = enum_ty(&["check"]).unwrap();
        let kinds = enum_ty(&["check", "cc"]).unwrap();
        assert!(prove_subtype(&tax, &check, &kinds).is_some());
        assert!(prove_subtype(&tax, &kinds, &check).is_none());
        tax.add_is_a(&c("cheque"), &c("payment")).unwrap();
        let sub = record_ty(&tax, vec![("cheque", num_ty())]).unwrap();
        let sup = record_ty(&tax, vec![("payment", num_ty())]).unwrap();
        assert!(prove_subtype(&tax, &sub, &sup).is_some());
        assert!(prove_subtype(&tax, &sup, &sub).is_none());
    }

    #[test]
    fn coercion_rejects_wrong_shape() {
        let tax = Taxonomy::new();
        let p = prove_subtype(&tax, &person(&tax), &person(&tax)).unwrap();
        assert!(matches!(apply_coercion(&p, &num(1)), Err(TypingError::CoercionDomain(_))));
    }

    #[test]
    fn alias_resolution() {
        let tax = Taxonomy::new();
        let p = person(&tax);
        let lookup = |n: &str| (n == "person").then(|| p.clone());
        let t = triple_ty("orig-of", type_name("person"), type_name("person")).unwrap();
        let r = resolve_aliases(&t, &lookup).unwrap();
        assert!(r.is_static());
        assert!(matches!(
            resolve_aliases(&type_name("nope"), &lookup),
            Err(TypingError::UnknownAlias(_))
        ));
    }
}
