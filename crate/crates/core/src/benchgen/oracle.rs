//! Brute-force reference semantics for class membership.
//!
//! Works from the class definitions directly: no skolemization, no plans,
//! no watermarks and no pruning. Every existential walks its whole class.

use std::collections::{BTreeMap, BTreeSet};

use crate::classifier::derived_name;
use crate::engine::EngineError;
use crate::store::Store;
use crate::taxonomy::Taxonomy;
use crate::term::{fresh_name, BuiltinOp, Prop, Substitution, Term, Type};
use crate::typing::{apply_coercion, infer_static_type, prove_subtype, resolve_aliases};

type Members = Vec<(String, Term)>;

struct Oracle<'a> {
    store: &'a Store,
    tax: &'a Taxonomy,
    classes: BTreeMap<String, Members>,
}

/// Every class's member terms, computed from scratch.
pub fn oracle_member_sets(store: &Store) -> Result<BTreeMap<String, BTreeSet<Term>>, EngineError> {
    Ok(oracle_members(store)?
        .into_iter()
        .map(|(c, ms)| (c, ms.into_iter().map(|(_, t)| t).collect()))
        .collect())
}

/// Members per class as `(name, term)`. Classes can only mention classes
/// registered before them, so registration order is an evaluation order.
pub fn oracle_members(store: &Store) -> Result<BTreeMap<String, Members>, EngineError> {
    let mut o = Oracle {
        store,
        tax: store.taxonomy(),
        classes: BTreeMap::new(),
    };
    for class in store.class_names() {
        let def = store.class(class)?.definition().clone();
        let found = match &def {
            Type::Subset(s) => {
                let binding_ty = resolve_aliases(&s.binding_type, &|n| o.static_def(n))
                    .map_err(crate::classifier::ClassifyError::from)?;
                let mut avoid = s.prop.free_vars();
                avoid.extend(s.binding_term.free_vars());
                let prop = rename_apart(&s.prop, &Substitution::new(), &mut avoid);
                let sols = o.solve(&prop, Substitution::new());
                let mut out = Vec::new();
                for sol in sols {
                    for full in o.ground_binding(&s.binding_term, sol) {
                        if let Some(m) = o.realize(class, &full, &binding_ty) {
                            out.push(m);
                        }
                    }
                }
                out
            }
            ty => {
                let ty = resolve_aliases(ty, &|n| o.static_def(n)).map_err(crate::classifier::ClassifyError::from)?;
                store
                    .typed()
                    .iter()
                    .filter_map(|e| {
                        let proof = prove_subtype(o.tax, &e.ty, &ty)?;
                        Some((e.name.clone(), apply_coercion(&proof, &e.term).ok()?))
                    })
                    .collect()
            }
        };
        let mut seen = BTreeSet::new();
        let members = found.into_iter().filter(|(n, _)| seen.insert(n.clone())).collect();
        o.classes.insert(class.clone(), members);
    }
    Ok(o.classes)
}

impl Oracle<'_> {
    fn static_def(&self, name: &str) -> Option<Type> {
        self.store.class(name).ok().map(|c| c.definition().clone())
    }

    fn lookup(&self, name: &str) -> Option<&Term> {
        self.store.term(name).or_else(|| {
            self.classes
                .values()
                .flat_map(|ms| ms.iter())
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
        })
    }

    fn type_of_name(&self, name: &str, depth: usize) -> Option<Type> {
        if let Some(ty) = self.store.type_of(name) {
            return Some(ty.clone());
        }
        if depth > 64 {
            return None;
        }
        let t = self.lookup(name)?;
        infer_static_type(self.tax, t, &|n| self.type_of_name(n, depth + 1))
    }

    fn realize(&self, class: &str, t: &Term, ty: &Type) -> Option<(String, Term)> {
        let (name, value) = match t {
            Term::Alias(n) => (Some(n.clone()), self.lookup(n)?.clone()),
            _ => (None, t.clone()),
        };
        let inferred = infer_static_type(self.tax, &value, &|n| self.type_of_name(n, 0))?;
        let proof = prove_subtype(self.tax, &inferred, ty)?;
        let coerced = apply_coercion(&proof, &value).ok()?;
        let name = name.unwrap_or_else(|| derived_name(class, &coerced));
        Some((name, coerced))
    }

    /// Binding terms with variables the proposition left free take every
    /// typed name in turn.
    fn ground_binding(&self, binding: &Term, s: Substitution) -> Vec<Term> {
        let t = s.apply(binding);
        let Some(v) = t.free_vars().into_iter().next() else {
            return vec![t];
        };
        let mut out = Vec::new();
        for e in self.store.typed() {
            let mut s2 = Substitution::new();
            s2.bind(v.clone(), Term::Alias(e.name.clone()));
            out.extend(self.ground_binding(&s2.apply(&t), Substitution::new()));
        }
        out
    }

    fn solve(&self, p: &Prop, s: Substitution) -> Vec<Substitution> {
        match p {
            Prop::True => vec![s],
            Prop::False => vec![],
            Prop::Or(a, b) => {
                let mut out = self.solve(a, s.clone());
                out.extend(self.solve(b, s));
                out
            }
            Prop::And(a, b) => {
                let (first, second) = if self.ready(a, &s) { (a, b) } else { (b, a) };
                let mut out = Vec::new();
                for s1 in self.solve(first, s) {
                    out.extend(self.solve(second, s1));
                }
                out
            }
            Prop::Not(q) => {
                if !self.ready(q, &s) {
                    return vec![];
                }
                match self.test(q, &s) {
                    Some(false) => vec![s],
                    _ => vec![],
                }
            }
            Prop::Exists(v, ty, body) => {
                let Type::Alias(class) = ty else { return vec![] };
                let mut out = Vec::new();
                for (n, _) in self.classes.get(class).into_iter().flatten() {
                    let mut s2 = s.clone();
                    s2.bind(v.clone(), Term::Alias(n.clone()));
                    out.extend(self.solve(body, s2));
                }
                out
            }
            Prop::Builtin(BuiltinOp::Eq, args) => {
                let (a, b) = (s.apply(&args[0]), s.apply(&args[1]));
                let mut s2 = s;
                let ok = match (a.is_ground(), b.is_ground()) {
                    (true, true) => self.same(&a, &b),
                    (false, true) => self.matches(&a, &b, &mut s2),
                    (true, false) => self.matches(&b, &a, &mut s2),
                    (false, false) => false,
                };
                if ok { vec![s2] } else { vec![] }
            }
            _ => match self.test(p, &s) {
                Some(true) => vec![s],
                _ => vec![],
            },
        }
    }

    /// Whether a literal-like proposition has everything it needs bound.
    fn ready(&self, p: &Prop, s: &Substitution) -> bool {
        match p {
            Prop::Builtin(BuiltinOp::Eq, _) | Prop::Exists(..) | Prop::True | Prop::False => true,
            Prop::And(a, b) | Prop::Or(a, b) => self.ready(a, s) && self.ready(b, s),
            _ => p.free_vars().iter().all(|v| s.get(v).is_some_and(Term::is_ground)),
        }
    }

    /// Truth of a ground quantifier-free proposition; `None` when it cannot
    /// be decided (errors count as false under either polarity).
    fn test(&self, p: &Prop, s: &Substitution) -> Option<bool> {
        match p {
            Prop::True => Some(true),
            Prop::False => Some(false),
            Prop::And(a, b) => Some(self.test(a, s)? && self.test(b, s)?),
            Prop::Or(a, b) => Some(self.test(a, s)? || self.test(b, s)?),
            Prop::Not(q) => self.test(q, s).map(|b| !b),
            Prop::Exists(..) => None,
            Prop::Builtin(op, args) => {
                let (a, b) = (s.apply(&args[0]), s.apply(&args[1]));
                if !a.is_ground() || !b.is_ground() {
                    return None;
                }
                match op {
                    BuiltinOp::Eq => {
                        if bottomish(&a) || bottomish(&b) {
                            return None;
                        }
                        Some(self.same(&a, &b))
                    }
                    _ => {
                        let (x, y) = (self.number(&a)?, self.number(&b)?);
                        Some(match op {
                            BuiltinOp::Lt => x < y,
                            BuiltinOp::Le => x <= y,
                            BuiltinOp::Gt => x > y,
                            BuiltinOp::Ge => x >= y,
                            BuiltinOp::Eq => unreachable!(),
                        })
                    }
                }
            }
            Prop::InSequence(t, ts) => {
                let t = s.apply(t);
                let ts: Vec<Term> = ts.iter().map(|x| s.apply(x)).collect();
                if !t.is_ground() || ts.iter().any(|x| !x.is_ground()) || bottomish(&t) {
                    return None;
                }
                Some(ts.iter().any(|x| self.same(&t, x)))
            }
        }
    }

    fn number(&self, t: &Term) -> Option<f64> {
        match t {
            Term::Num(x) => Some(*x),
            Term::Alias(n) => self.number(self.lookup(n)?),
            _ => None,
        }
    }

    /// Ground equality, looking through names when shapes differ.
    fn same(&self, a: &Term, b: &Term) -> bool {
        self.same_depth(a, b, 0)
    }

    fn same_depth(&self, a: &Term, b: &Term, depth: usize) -> bool {
        if depth > 64 {
            return false;
        }
        match (a, b) {
            (Term::Bottom(_), _) | (_, Term::Bottom(_)) => false,
            (Term::Alias(x), Term::Alias(y)) => x == y,
            (Term::Alias(x), _) => self.lookup(x).is_some_and(|t| self.same_depth(t, b, depth + 1)),
            (_, Term::Alias(y)) => self.lookup(y).is_some_and(|t| self.same_depth(a, t, depth + 1)),
            (Term::Record(f), Term::Record(g)) => {
                f.len() == g.len()
                    && f.iter().zip(g).all(|((l, x), (m, y))| l == m && self.same_depth(x, y, depth))
            }
            (Term::List(f), Term::List(g)) => {
                f.len() == g.len() && f.iter().zip(g).all(|(x, y)| self.same_depth(x, y, depth))
            }
            _ => a == b,
        }
    }

    /// One-way matching of `pattern` against a ground `value`.
    fn matches(&self, pattern: &Term, value: &Term, s: &mut Substitution) -> bool {
        self.match_depth(pattern, value, s, 0)
    }

    fn match_depth(&self, pattern: &Term, value: &Term, s: &mut Substitution, depth: usize) -> bool {
        if depth > 64 {
            return false;
        }
        match (pattern, value) {
            (Term::Var(v), _) => match s.get(v).cloned() {
                Some(bound) => self.same_depth(&bound, value, depth),
                None => {
                    if matches!(value, Term::Bottom(_)) {
                        return false;
                    }
                    s.bind(v.clone(), value.clone());
                    true
                }
            },
            (p, _) if p.is_ground() => self.same_depth(p, value, depth),
            (_, Term::Alias(n)) => match self.lookup(n) {
                Some(t) => self.match_depth(pattern, t, s, depth + 1),
                None => false,
            },
            (Term::Record(f), Term::Record(g)) => {
                f.len() == g.len()
                    && f.iter().zip(g).all(|((l, x), (m, y))| l == m && self.match_depth(x, y, s, depth))
            }
            (Term::List(f), Term::List(g)) => {
                f.len() == g.len() && f.iter().zip(g).all(|(x, y)| self.match_depth(x, y, s, depth))
            }
            _ => false,
        }
    }
}

/// Gives every quantified variable a name used nowhere else.
fn rename_apart(p: &Prop, renames: &Substitution, avoid: &mut BTreeSet<String>) -> Prop {
    let go = |q: &Prop, avoid: &mut BTreeSet<String>| Box::new(rename_apart(q, renames, avoid));
    match p {
        Prop::And(a, b) => Prop::And(go(a, avoid), go(b, avoid)),
        Prop::Or(a, b) => Prop::Or(go(a, avoid), go(b, avoid)),
        Prop::Not(q) => Prop::Not(go(q, avoid)),
        Prop::Exists(v, ty, body) => {
            let fresh = fresh_name(v, avoid);
            avoid.insert(fresh.clone());
            let mut inner = renames.clone();
            inner.bind(v.clone(), Term::Var(fresh.clone()));
            Prop::Exists(fresh, ty.clone(), Box::new(rename_apart(body, &inner, avoid)))
        }
        other => renames.apply_prop(other),
    }
}

fn bottomish(t: &Term) -> bool {
    match t {
        Term::Bottom(_) => true,
        Term::Record(fields) => fields.iter().any(|(_, f)| bottomish(f)),
        Term::List(items) => items.iter().any(bottomish),
        _ => false,
    }
}
