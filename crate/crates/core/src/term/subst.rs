use std::collections::{BTreeMap, BTreeSet};

use super::{Prop, Term};

/// Finite map from variable names to terms. Bindings added through
/// [`Substitution::bind`] keep the map idempotent: no bound term mentions a
/// bound variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(BTreeMap<String, Term>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, Term)>>(pairs: I) -> Self {
        let mut s = Self::new();
        for (v, t) in pairs {
            s.bind(v, t);
        }
        s
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.0.iter()
    }

    /// Adds `var ↦ term`, resolving `term` against existing bindings and
    /// rewriting existing bindings that mention `var`.
    pub fn bind(&mut self, var: String, term: Term) {
        let term = self.apply(&term);
        let single = Substitution(BTreeMap::from([(var.clone(), term.clone())]));
        for t in self.0.values_mut() {
            if t.occurs(&var) {
                *t = single.apply(t);
            }
        }
        self.0.insert(var, term);
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.0.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Record(fields) => {
                Term::Record(fields.iter().map(|(l, f)| (l.clone(), self.apply(f))).collect())
            }
            Term::List(items) => Term::List(items.iter().map(|i| self.apply(i)).collect()),
            Term::Select(base, l) => Term::Select(Box::new(self.apply(base)), l.clone()),
            _ => t.clone(),
        }
    }

    /// Capture-avoiding application to a proposition.
    pub fn apply_prop(&self, p: &Prop) -> Prop {
        if self.0.is_empty() {
            return p.clone();
        }
        match p {
            Prop::Builtin(op, args) => Prop::Builtin(*op, args.iter().map(|a| self.apply(a)).collect()),
            Prop::And(a, b) => Prop::And(Box::new(self.apply_prop(a)), Box::new(self.apply_prop(b))),
            Prop::Or(a, b) => Prop::Or(Box::new(self.apply_prop(a)), Box::new(self.apply_prop(b))),
            Prop::Not(a) => Prop::Not(Box::new(self.apply_prop(a))),
            Prop::True => Prop::True,
            Prop::False => Prop::False,
            Prop::InSequence(t, ts) => {
                Prop::InSequence(self.apply(t), ts.iter().map(|t| self.apply(t)).collect())
            }
            Prop::Exists(v, ty, body) => {
                let mut inner = self.clone();
                inner.0.remove(v);
                let captures = inner.0.values().any(|t| t.occurs(v));
                if !captures {
                    return Prop::Exists(v.clone(), ty.clone(), Box::new(inner.apply_prop(body)));
                }
                let mut avoid: BTreeSet<String> = body.free_vars();
                for t in inner.0.values() {
                    t.collect_vars(&mut avoid);
                }
                avoid.extend(inner.0.keys().cloned());
                let fresh = fresh_name(v, &avoid);
                let rename = Substitution(BTreeMap::from([(v.clone(), Term::Var(fresh.clone()))]));
                let body = rename.apply_prop(body);
                Prop::Exists(fresh, ty.clone(), Box::new(inner.apply_prop(&body)))
            }
        }
    }

    /// `compose(s1, s2)` applies `s1` first, then `s2`.
    pub fn compose(first: &Substitution, second: &Substitution) -> Substitution {
        let mut out: BTreeMap<String, Term> =
            first.0.iter().map(|(k, v)| (k.clone(), second.apply(v))).collect();
        for (k, v) in &second.0 {
            out.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Substitution(out)
    }
}

pub(crate) fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    (1..)
        .map(|i| format!("{base}'{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded")
}
