#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use flutes::taxonomy::{mk_concept, Concept, Taxonomy};
use flutes::term::build::record_ty;
use flutes::term::{BuiltinOp, Prop, SubsetTy, Term, Type};

pub const CONCEPTS: usize = 20;

pub fn concept(i: usize) -> Concept {
    mk_concept(&format!("c{i}")).unwrap()
}

/// Twenty concepts with a few random synonyms and is-a edges.
pub fn taxonomy(rng: &mut ChaCha8Rng) -> Taxonomy {
    let mut tax = Taxonomy::new();
    for _ in 0..rng.random_range(0..5) {
        let (a, b) = (rng.random_range(0..CONCEPTS), rng.random_range(0..CONCEPTS));
        let _ = tax.same_as(&concept(a), &concept(b));
    }
    for _ in 0..rng.random_range(0..8) {
        let (a, b) = (rng.random_range(0..CONCEPTS), rng.random_range(0..CONCEPTS));
        // edges that would close a cycle are refused; that is fine here
        let _ = tax.add_is_a(&concept(a), &concept(b));
    }
    tax
}

fn random_concept(rng: &mut ChaCha8Rng) -> Concept {
    concept(rng.random_range(0..CONCEPTS))
}

/// A static type of nesting depth at most `depth`.
pub fn static_type(rng: &mut ChaCha8Rng, tax: &Taxonomy, depth: usize) -> Type {
    let choice = if depth == 0 { rng.random_range(0..3) } else { rng.random_range(0..5) };
    match choice {
        0 => Type::Num,
        1 => Type::Str,
        2 => {
            let n = rng.random_range(1..4);
            Type::enumeration((0..n).map(|_| random_concept(rng)).collect()).unwrap()
        }
        3 => Type::List(Box::new(static_type(rng, tax, depth - 1))),
        _ => loop {
            let n = rng.random_range(1..5);
            let names: Vec<String> = (0..n).map(|_| format!("c{}", rng.random_range(0..CONCEPTS))).collect();
            let fields = names.iter().map(|l| (l.as_str(), static_type(rng, tax, depth - 1))).collect();
            if let Ok(t) = record_ty(tax, fields) {
                break t;
            }
        },
    }
}

fn related_label(rng: &mut ChaCha8Rng, tax: &Taxonomy, c: &Concept) -> Concept {
    let options: Vec<Concept> = (0..CONCEPTS)
        .map(concept)
        .filter(|d| tax.label_match(c, d))
        .collect();
    options.choose(rng).cloned().unwrap_or_else(|| c.clone())
}

/// A type the prover is likely (not certain) to accept as a supertype of
/// `ty`: fields dropped or relabelled upward, enums widened.
pub fn weaken(rng: &mut ChaCha8Rng, tax: &Taxonomy, ty: &Type) -> Type {
    match ty {
        Type::List(inner) => Type::List(Box::new(weaken(rng, tax, inner))),
        Type::Enum(cs) => {
            let mut out: Vec<Concept> = cs
                .iter()
                .map(|c| {
                    let same: Vec<Concept> = (0..CONCEPTS).map(concept).filter(|d| tax.equiv(c, d)).collect();
                    same.choose(rng).cloned().unwrap_or_else(|| c.clone())
                })
                .collect();
            for _ in 0..rng.random_range(0..2) {
                out.push(random_concept(rng));
            }
            Type::enumeration(out).unwrap()
        }
        Type::Record(fields) => {
            let mut kept: Vec<(Concept, Type)> = Vec::new();
            for (l, t) in fields {
                if rng.random_bool(0.75) {
                    kept.push((related_label(rng, tax, l), weaken(rng, tax, t)));
                }
            }
            let names: Vec<String> = kept.iter().map(|(l, _)| l.to_string()).collect();
            let attempt = record_ty(tax, names.iter().map(String::as_str).zip(kept.iter().map(|(_, t)| t.clone())).collect());
            attempt.unwrap_or_else(|_| ty.clone())
        }
        other => other.clone(),
    }
}

/// A value of type `ty`. List elements repeat one value so the list stays
/// homogeneous under inference.
pub fn inhabitant(rng: &mut ChaCha8Rng, ty: &Type) -> Option<Term> {
    Some(match ty {
        Type::Num => Term::Num(rng.random_range(-1000..1000) as f64 / 8.0),
        Type::Str => Term::Str(format!("s{}", rng.random_range(0..100))),
        Type::Enum(cs) => Term::Atom(cs.choose(rng)?.clone()),
        Type::Void => return None,
        Type::List(inner) => match inhabitant(rng, inner) {
            Some(x) => Term::List(vec![x; rng.random_range(0..4)]),
            None => Term::List(vec![]),
        },
        Type::Record(fields) => Term::record(
            fields
                .iter()
                .map(|(l, t)| Some((l.clone(), inhabitant(rng, t)?)))
                .collect::<Option<Vec<_>>>()?,
        )
        .ok()?,
        Type::Subset(_) | Type::Alias(_) => return None,
    })
}

const CHARS: &[char] = &['a', 'z', 'Q', '0', ' ', '"', '\\', '\n', '\t', 'é', '→', '(', ')', '#', ';'];

fn string(rng: &mut ChaCha8Rng) -> String {
    (0..rng.random_range(0..8)).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

fn label(rng: &mut ChaCha8Rng) -> Concept {
    match rng.random_range(0..3) {
        0 => Concept::positional(rng.random_range(0..4)),
        1 => random_concept(rng),
        _ => loop {
            if let Ok(c) = mk_concept(&string(rng)) {
                break c;
            }
        },
    }
}

fn number(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(-100..100) as f64,
        1 => rng.random::<f64>() * 1e-9,
        2 => -rng.random::<f64>() * 1e12,
        _ => f64::from_bits(rng.random::<u64>() & 0x7fef_ffff_ffff_ffff),
    }
}

/// Any term shape, including variables, aliases, bottoms and selections.
pub fn any_term(rng: &mut ChaCha8Rng, depth: usize) -> Term {
    let choice = if depth == 0 { rng.random_range(0..6) } else { rng.random_range(0..9) };
    match choice {
        0 => Term::Num(number(rng)),
        1 => Term::Str(string(rng)),
        2 => Term::Atom(label(rng)),
        3 => Term::Bottom(label(rng)),
        4 => Term::Var(format!("v{}", rng.random_range(0..5))),
        5 => Term::Alias(string(rng)),
        6 => Term::List((0..rng.random_range(0..4)).map(|_| any_term(rng, depth - 1)).collect()),
        7 => Term::Select(Box::new(any_term(rng, depth - 1)), label(rng)),
        _ => {
            let mut fields: Vec<(Concept, Term)> = (0..rng.random_range(0..4))
                .map(|_| (label(rng), any_term(rng, depth - 1)))
                .collect();
            fields.sort_by(|a, b| a.0.cmp(&b.0));
            fields.dedup_by(|a, b| a.0 == b.0);
            Term::record(fields).unwrap()
        }
    }
}

pub fn any_prop(rng: &mut ChaCha8Rng, depth: usize) -> Prop {
    let choice = if depth == 0 { rng.random_range(0..4) } else { rng.random_range(0..8) };
    let ops = [BuiltinOp::Eq, BuiltinOp::Lt, BuiltinOp::Le, BuiltinOp::Gt, BuiltinOp::Ge];
    match choice {
        0 => Prop::True,
        1 => Prop::False,
        2 => Prop::Builtin(*ops.choose(rng).unwrap(), vec![any_term(rng, 1), any_term(rng, 1)]),
        3 => Prop::InSequence(any_term(rng, 1), (0..rng.random_range(0..3)).map(|_| any_term(rng, 1)).collect()),
        4 => Prop::And(Box::new(any_prop(rng, depth - 1)), Box::new(any_prop(rng, depth - 1))),
        5 => Prop::Or(Box::new(any_prop(rng, depth - 1)), Box::new(any_prop(rng, depth - 1))),
        6 => Prop::Not(Box::new(any_prop(rng, depth - 1))),
        _ => Prop::Exists(format!("q{}", rng.random_range(0..3)), any_type(rng, 1), Box::new(any_prop(rng, depth - 1))),
    }
}

/// Any type shape, including aliases and subset types.
pub fn any_type(rng: &mut ChaCha8Rng, depth: usize) -> Type {
    let choice = if depth == 0 { rng.random_range(0..5) } else { rng.random_range(0..8) };
    match choice {
        0 => Type::Num,
        1 => Type::Str,
        2 => Type::Void,
        3 => Type::Alias(string(rng)),
        4 => Type::enumeration((0..rng.random_range(1..4)).map(|_| label(rng)).collect()).unwrap(),
        5 => Type::List(Box::new(any_type(rng, depth - 1))),
        6 => {
            let mut fields: Vec<(Concept, Type)> = (0..rng.random_range(0..4))
                .map(|_| (label(rng), any_type(rng, depth - 1)))
                .collect();
            fields.sort_by(|a, b| a.0.cmp(&b.0));
            fields.dedup_by(|a, b| a.0 == b.0);
            Type::record(fields).unwrap()
        }
        _ => loop {
            let binding = any_term(rng, 1);
            let mut ty = any_type(rng, depth - 1);
            if matches!(ty, Type::Subset(_)) {
                ty = Type::Num;
            }
            if let Ok(s) = SubsetTy::new(binding, ty, any_prop(rng, 2)) {
                break Type::Subset(Box::new(s));
            }
        },
    }
}
