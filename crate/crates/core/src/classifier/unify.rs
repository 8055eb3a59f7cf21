//! Syntactic first-order unification over terms, with occurs check.
//!
//! Aliases are constants. The `_with` variants additionally let an alias
//! stand for the term it names when it meets a non-alias term, which is how
//! stored terms that reference each other by name get compared.

use crate::term::{Substitution, Term};

/// Looks up the term a name refers to.
pub trait Deref {
    fn deref(&self, name: &str) -> Option<&Term>;
}

impl Deref for std::collections::HashMap<String, Term> {
    fn deref(&self, name: &str) -> Option<&Term> {
        self.get(name)
    }
}

struct NoDeref;

impl Deref for NoDeref {
    fn deref(&self, _: &str) -> Option<&Term> {
        None
    }
}

/// Most general unifier of `a` and `b`.
pub fn unify(a: &Term, b: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    unify_with(a, b, &mut s, &NoDeref).then_some(s)
}

/// Extends `s` so that it unifies `a` and `b`. On failure `s` may hold
/// partial bindings; callers clone before trying.
pub fn unify_with(a: &Term, b: &Term, s: &mut Substitution, env: &dyn Deref) -> bool {
    let a = s.apply(a);
    let b = s.apply(b);
    go(&a, &b, s, env, 0)
}

const MAX_DEREF: usize = 64;

fn go(a: &Term, b: &Term, s: &mut Substitution, env: &dyn Deref, depth: usize) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            let t = s.apply(t);
            if t.occurs(x) {
                return false;
            }
            s.bind(x.clone(), t);
            true
        }
        (Term::Bottom(_), _) | (_, Term::Bottom(_)) => false,
        (Term::Num(_), Term::Num(_)) | (Term::Str(_), Term::Str(_)) | (Term::Atom(_), Term::Atom(_)) => a == b,
        (Term::Record(fa), Term::Record(fb)) => {
            fa.len() == fb.len()
                && fa.iter().zip(fb).all(|((la, ta), (lb, tb))| {
                    la == lb && {
                        let ta = s.apply(ta);
                        let tb = s.apply(tb);
                        go(&ta, &tb, s, env, depth)
                    }
                })
        }
        (Term::List(la), Term::List(lb)) => {
            la.len() == lb.len()
                && la.iter().zip(lb).all(|(ta, tb)| {
                    let ta = s.apply(ta);
                    let tb = s.apply(tb);
                    go(&ta, &tb, s, env, depth)
                })
        }
        // distinct names are distinct objects, whatever their values
        (Term::Alias(x), Term::Alias(y)) => x == y,
        (Term::Alias(x), other) | (other, Term::Alias(x)) if depth < MAX_DEREF => match env.deref(x) {
            Some(value) => {
                let value = value.clone();
                go(&value, other, s, env, depth + 1)
            }
            None => false,
        },
        (Term::Select(..), Term::Select(..)) => a == b,
        _ => false,
    }
}
