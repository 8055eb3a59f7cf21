//! Interned field labels and the relations the type system consults.
//!
//! A [`Taxonomy`] keeps three relations over [`Concept`]s:
//!
//! - a strict total order (the derived `Ord` on `Concept`): positional
//!   concepts first by index, then named concepts lexicographically;
//! - an equivalence relation (synonyms), kept as explicit classes whose
//!   representative is the least member under the total order;
//! - an acyclic is-a relation (hyponym ≤ hypernym), queried transitively
//!   over the equivalence quotient.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("invalid concept: {0}")]
    InvalidConcept(String),
    #[error("is-a edge {child} -> {parent} would close a cycle")]
    LatticeCycle { child: Concept, parent: Concept },
}

/// A taxonomy label. Named concepts are interned by string value, so two
/// handles for the same name always compare equal.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    /// Argument position of a predicate application.
    Positional(u32),
    Named(Arc<str>),
}

impl Concept {
    pub fn positional(index: u32) -> Self {
        Concept::Positional(index)
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Concept::Named(s) => Some(s),
            Concept::Positional(_) => None,
        }
    }

    pub fn is_positional(&self) -> bool {
        matches!(self, Concept::Positional(_))
    }
}

impl fmt::Debug for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Positional(i) => write!(f, "#{i}"),
            Concept::Named(s) => write!(f, "{s:?}"),
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Positional(i) => write!(f, "#{i}"),
            Concept::Named(s) => f.write_str(s),
        }
    }
}

pub fn mk_concept(name: &str) -> Result<Concept, TaxonomyError> {
    if name.is_empty() {
        return Err(TaxonomyError::InvalidConcept("empty name".into()));
    }
    Ok(Concept::Named(Arc::from(name)))
}

#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    // representative -> members (including the representative)
    classes: BTreeMap<Concept, BTreeSet<Concept>>,
    rep_of: HashMap<Concept, Concept>,
    parents: BTreeMap<Concept, BTreeSet<Concept>>,
    same_as_log: Vec<(Concept, Concept)>,
    is_a_log: Vec<(Concept, Concept)>,
    epoch: u64,
}

impl Taxonomy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bumped on every mutation. Classification caches keyed on the
    /// taxonomy must be invalidated when this changes.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn same_as_pairs(&self) -> &[(Concept, Concept)] {
        &self.same_as_log
    }

    pub fn is_a_edges(&self) -> &[(Concept, Concept)] {
        &self.is_a_log
    }

    pub fn representative(&self, c: &Concept) -> Concept {
        self.rep_of.get(c).cloned().unwrap_or_else(|| c.clone())
    }

    pub fn equiv(&self, a: &Concept, b: &Concept) -> bool {
        a == b || self.representative(a) == self.representative(b)
    }

    /// Members of `c`'s equivalence class, in total order.
    pub fn class_of(&self, c: &Concept) -> Vec<Concept> {
        match self.classes.get(&self.representative(c)) {
            Some(members) => members.iter().cloned().collect(),
            None => vec![c.clone()],
        }
    }

    pub fn same_as(&mut self, a: &Concept, b: &Concept) -> Result<(), TaxonomyError> {
        reject_positional(a)?;
        reject_positional(b)?;
        self.same_as_log.push((a.clone(), b.clone()));
        self.epoch += 1;
        let ra = self.representative(a);
        let rb = self.representative(b);
        if ra == rb {
            return Ok(());
        }
        let mut merged = self.classes.remove(&ra).unwrap_or_else(|| BTreeSet::from([ra.clone()]));
        merged.extend(self.classes.remove(&rb).unwrap_or_else(|| BTreeSet::from([rb.clone()])));
        let rep = merged.iter().next().cloned().expect("nonempty class");
        for m in &merged {
            self.rep_of.insert(m.clone(), rep.clone());
        }
        self.classes.insert(rep, merged);
        Ok(())
    }

    pub fn add_is_a(&mut self, child: &Concept, parent: &Concept) -> Result<(), TaxonomyError> {
        reject_positional(child)?;
        reject_positional(parent)?;
        if self.label_leq(parent, child) {
            return Err(TaxonomyError::LatticeCycle {
                child: child.clone(),
                parent: parent.clone(),
            });
        }
        self.parents.entry(child.clone()).or_default().insert(parent.clone());
        self.is_a_log.push((child.clone(), parent.clone()));
        self.epoch += 1;
        Ok(())
    }

    /// Reflexive-transitive is-a over the equivalence quotient.
    pub fn label_leq(&self, sub: &Concept, sup: &Concept) -> bool {
        if self.equiv(sub, sup) {
            return true;
        }
        if self.parents.is_empty() {
            return false;
        }
        let target = self.representative(sup);
        self.ancestors(sub).contains(&target)
    }

    /// True when a field labelled `sub_label` may fill a slot labelled
    /// `sup_label`: identical, synonymous, or a hyponym of it.
    pub fn label_match(&self, sub_label: &Concept, sup_label: &Concept) -> bool {
        sub_label == sup_label || self.label_leq(sub_label, sup_label)
    }

    /// Least common ancestor, when it exists and is unique.
    pub fn join(&self, a: &Concept, b: &Concept) -> Option<Concept> {
        let up_a = self.ancestors(a);
        let up_b = self.ancestors(b);
        let common: Vec<&Concept> = up_a.intersection(&up_b).collect();
        let minimal: Vec<&Concept> = common
            .iter()
            .copied()
            .filter(|u| !common.iter().any(|v| v != u && self.label_leq(v, u)))
            .collect();
        match minimal.as_slice() {
            [only] => Some((*only).clone()),
            _ => None,
        }
    }

    pub fn compare(&self, a: &Concept, b: &Concept) -> std::cmp::Ordering {
        a.cmp(b)
    }

    // Representatives of every class reachable upward from `c`, including its own.
    fn ancestors(&self, c: &Concept) -> BTreeSet<Concept> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        let start = self.representative(c);
        seen.insert(start.clone());
        queue.push_back(start);
        while let Some(rep) = queue.pop_front() {
            for member in self.class_of(&rep) {
                let Some(ps) = self.parents.get(&member) else {
                    continue;
                };
                for p in ps {
                    let pr = self.representative(p);
                    if seen.insert(pr.clone()) {
                        queue.push_back(pr);
                    }
                }
            }
        }
        seen
    }
}

fn reject_positional(c: &Concept) -> Result<(), TaxonomyError> {
    if c.is_positional() {
        return Err(TaxonomyError::InvalidConcept(format!(
            "positional concept {c} cannot take part in taxonomy relations"
        )));
    }
    Ok(())
}
