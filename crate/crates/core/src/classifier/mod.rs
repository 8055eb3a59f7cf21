//! Class membership: promoting untyped terms, static classes by subtyping
//! and coercion, subset classes by skolemized clauses and unification.
//!
//! Subset classes are evaluated semi-naively. Each disjunct binds its
//! skolem variables one position at a time from the member collections of
//! their classes. On an incremental run, a disjunct is evaluated once per
//! position that has new members: that position draws only new members,
//! earlier positions only old ones, later positions everything, and the new
//! position is bound first so the others can be pruned through it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::par;
use crate::store::{KbClass, Store, StoreError, Watermark};
use crate::syntax::render_term;
use crate::taxonomy::Taxonomy;
use crate::term::{BuiltinOp, Substitution, Term, Type};
use crate::typing::{apply_coercion, infer_static_type, prove_subtype, resolve_aliases, TypingError};

mod skolem;
mod unify;

pub use skolem::{skolemize, Atom, Literal, SkolemClause};
pub use unify::{unify, unify_with, Deref};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Typing(#[from] TypingError),
    #[error("quantifier over {0} appears under a negation")]
    QuantifierUnderNot(String),
    #[error("unsupported proposition: {0}")]
    Unsupported(String),
    #[error("class dependency cycle through {0}")]
    DependencyCycle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub workers: usize,
    /// Restrict later skolem positions through the alias index.
    pub prune: bool,
    /// Resume from watermarks instead of rescanning everything.
    pub incremental: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            workers: par::available(),
            prune: true,
            incremental: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassReport {
    pub class: String,
    /// Typed terms examined (static classes) or candidate bindings tried
    /// (subset classes).
    pub scanned: u64,
    pub matched: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FindReport {
    pub promoted: usize,
    pub classes: Vec<ClassReport>,
}

impl FindReport {
    pub fn class(&self, name: &str) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class == name)
    }

    pub fn scanned(&self) -> u64 {
        self.classes.iter().map(|c| c.scanned).sum()
    }

    pub fn matched(&self) -> u64 {
        self.classes.iter().map(|c| c.matched).sum()
    }

    /// `key<TAB>value` lines.
    pub fn render(&self, timings: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "promoted\t{}", self.promoted);
        for c in &self.classes {
            let _ = writeln!(out, "{}.scanned\t{}", c.class, c.scanned);
            let _ = writeln!(out, "{}.matched\t{}", c.class, c.matched);
            if timings {
                let _ = writeln!(out, "{}.elapsed_ms\t{:.3}", c.class, c.elapsed.as_secs_f64() * 1e3);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum ClassPlan {
    Static(Type),
    Subset(SubsetPlan),
}

#[derive(Debug, Clone)]
pub struct SubsetPlan {
    pub binding_term: Term,
    pub binding_ty: Type,
    pub clause: SkolemClause,
    disjuncts: Vec<DisjunctPlan>,
}

#[derive(Debug, Clone)]
enum PosKind {
    /// Bound by unifying the pattern with each candidate member.
    Generator(Term),
    /// Bound (or checked) as a member name.
    Checked,
    /// Not mentioned by the disjunct; only needs a witness.
    Vacuous,
}

#[derive(Debug, Clone)]
struct Position {
    var: String,
    class: String,
    kind: PosKind,
}

#[derive(Debug, Clone)]
struct DisjunctPlan {
    positions: Vec<Position>,
    rest: Vec<Literal>,
    /// Some binding variable is not fixed by any skolem position and ranges
    /// over all typed names, so the disjunct cannot be run incrementally.
    open: bool,
}

fn lookup_static(store: &Store) -> impl Fn(&str) -> Option<Type> + '_ {
    |n| store.class(n).ok().map(|c| c.definition().clone())
}

/// Compiles a class definition against the classes already in `store`.
pub fn compile(store: &Store, def: &Type) -> Result<ClassPlan, ClassifyError> {
    let Type::Subset(s) = def else {
        return Ok(ClassPlan::Static(resolve_aliases(def, &lookup_static(store))?));
    };
    let binding_ty = resolve_aliases(&s.binding_type, &lookup_static(store))?;
    let clause = skolemize(s)?;
    for (v, class) in &clause.skolems {
        if !store.has_class(class) {
            return Err(StoreError::UnknownClass(format!("{class} (bound of {v})")).into());
        }
    }
    let binding_vars = s.binding_term.free_vars();
    let disjuncts = clause
        .disjuncts
        .iter()
        .map(|lits| plan_disjunct(&clause.skolems, lits, &binding_vars))
        .collect();
    Ok(ClassPlan::Subset(SubsetPlan {
        binding_term: s.binding_term.clone(),
        binding_ty,
        clause,
        disjuncts,
    }))
}

fn plan_disjunct(skolems: &[(String, String)], lits: &[Literal], binding_vars: &BTreeSet<String>) -> DisjunctPlan {
    let class_of = |v: &str| skolems.iter().find(|(s, _)| s == v).map(|(_, c)| c.clone());
    let mut positions: Vec<Position> = Vec::new();
    let mut rest = Vec::new();
    for lit in lits {
        let generator = match (&lit.negated, &lit.atom) {
            (false, Atom::Builtin(BuiltinOp::Eq, a, b)) => match (a, b) {
                (p, Term::Var(v)) | (Term::Var(v), p)
                    if !matches!(p, Term::Var(_))
                        && class_of(v).is_some()
                        && !positions.iter().any(|q| &q.var == v) =>
                {
                    Some((v.clone(), p.clone()))
                }
                _ => None,
            },
            _ => None,
        };
        match generator {
            Some((var, pattern)) => positions.push(Position {
                class: class_of(&var).expect("skolem"),
                var,
                kind: PosKind::Generator(pattern),
            }),
            None => rest.push(lit.clone()),
        }
    }
    let mentioned: BTreeSet<String> = lits.iter().flat_map(Literal::vars).collect();
    for (v, c) in skolems {
        if positions.iter().any(|p| &p.var == v) {
            continue;
        }
        positions.push(Position {
            var: v.clone(),
            class: c.clone(),
            kind: if mentioned.contains(v) { PosKind::Checked } else { PosKind::Vacuous },
        });
    }
    let mut covered = BTreeSet::new();
    for p in &positions {
        covered.insert(p.var.clone());
        if let PosKind::Generator(t) = &p.kind {
            covered.extend(t.free_vars());
        }
    }
    DisjunctPlan {
        open: !binding_vars.is_subset(&covered),
        positions,
        rest,
    }
}

/// Classes in an order where every class follows the classes it mentions.
pub fn dependency_order(store: &Store) -> Result<Vec<String>, ClassifyError> {
    let names = store.class_names();
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut indegree = vec![0usize; names.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (i, n) in names.iter().enumerate() {
        for dep in store.class(n)?.definition().referenced_aliases() {
            if let Some(&j) = index.get(dep.as_str()) {
                indegree[i] += 1;
                dependents[j].push(i);
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..names.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(names.len());
    while let Some(i) = ready.pop_first() {
        out.push(names[i].clone());
        for &d in &dependents[i] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    if out.len() < names.len() {
        let stuck = (0..names.len()).find(|&i| indegree[i] > 0).expect("cycle member");
        return Err(ClassifyError::DependencyCycle(names[stuck].clone()));
    }
    Ok(out)
}

/// Moves every untyped term whose type can now be inferred to the typed
/// collection, repeating until nothing changes. Returns the number moved.
pub fn promote_untyped(store: &mut Store) -> Result<usize, ClassifyError> {
    let mut total = 0;
    loop {
        let mut fresh: HashMap<String, Type> = HashMap::new();
        let mut batch = Vec::new();
        for name in store.untyped() {
            let term = store.term(name).expect("untyped names are terms");
            let resolve = |n: &str| fresh.get(n).cloned().or_else(|| store.type_of(n).cloned());
            if let Some(ty) = infer_static_type(store.taxonomy(), term, &resolve) {
                fresh.insert(name.clone(), ty.clone());
                batch.push((name.clone(), ty));
            }
        }
        if batch.is_empty() {
            return Ok(total);
        }
        total += batch.len();
        store.promote(batch)?;
    }
}

/// Name for a member that is not itself a named term.
pub fn derived_name(class: &str, t: &Term) -> String {
    let digest = Sha256::digest(render_term(t).as_bytes());
    let mut out = format!("{class}#");
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Default)]
pub struct Classifier {
    plans: HashMap<String, Arc<ClassPlan>>,
    pub options: ClassifyOptions,
}

impl Classifier {
    pub fn new(options: ClassifyOptions) -> Self {
        Classifier {
            plans: HashMap::new(),
            options,
        }
    }

    pub fn plan(&mut self, store: &Store, class: &str) -> Result<Arc<ClassPlan>, ClassifyError> {
        if let Some(p) = self.plans.get(class) {
            return Ok(p.clone());
        }
        let plan = Arc::new(compile(store, store.class(class)?.definition())?);
        self.plans.insert(class.to_string(), plan.clone());
        Ok(plan)
    }

    /// Promotes untyped terms, then brings every class up to date in
    /// dependency order.
    pub fn find_members(&mut self, store: &mut Store) -> Result<FindReport, ClassifyError> {
        let order = dependency_order(store)?;
        let plans = order
            .iter()
            .map(|c| self.plan(store, c))
            .collect::<Result<Vec<_>, _>>()?;
        let promoted = promote_untyped(store)?;
        let mut report = FindReport {
            promoted,
            classes: Vec::with_capacity(order.len()),
        };
        for (class, plan) in order.iter().zip(plans) {
            let start = Instant::now();
            let (scanned, found, wm) = match &*plan {
                ClassPlan::Static(ty) => run_static(store, class, ty, &self.options)?,
                ClassPlan::Subset(p) => run_subset(store, class, p, &self.options)?,
            };
            let mut matched = 0;
            for (name, term) in found {
                if store.add_member(class, name, term)?.is_some() {
                    matched += 1;
                }
            }
            store.set_watermark(class, wm)?;
            report.classes.push(ClassReport {
                class: class.clone(),
                scanned,
                matched,
                elapsed: start.elapsed(),
            });
        }
        store.sync()?;
        Ok(report)
    }
}

type Found = (u64, Vec<(String, Term)>, Watermark);

fn run_static(store: &Store, class: &str, ty: &Type, opts: &ClassifyOptions) -> Result<Found, ClassifyError> {
    let kb = store.class(class)?;
    let tax = store.taxonomy();
    let wm = kb.watermark();
    let from = if opts.incremental && wm.epoch == tax.epoch() {
        wm.typed.min(store.typed().len())
    } else {
        0
    };
    let entries = &store.typed()[from..];
    let found = par::map(opts.workers, entries, |e| {
        let proof = prove_subtype(tax, &e.ty, ty)?;
        apply_coercion(&proof, &e.term).ok().map(|t| (e.name.clone(), t))
    });
    let wm = Watermark {
        typed: store.typed().len(),
        epoch: tax.epoch(),
        deps: BTreeMap::new(),
    };
    Ok((entries.len() as u64, found.into_iter().flatten().collect(), wm))
}

fn run_subset(store: &Store, class: &str, plan: &SubsetPlan, opts: &ClassifyOptions) -> Result<Found, ClassifyError> {
    let kb = store.class(class)?;
    let tax = store.taxonomy();
    let mut classes = HashMap::new();
    for (_, c) in &plan.clause.skolems {
        classes.insert(c.as_str(), store.class(c)?);
    }
    let world = World {
        store,
        tax,
        classes,
        prune: opts.prune,
    };
    let wm = kb.watermark();
    let full = !opts.incremental || wm.epoch != tax.epoch() || *wm == Watermark::default();
    let typed_changed = wm.typed != store.typed().len();
    let old = |c: &str| if full { 0 } else { wm.deps.get(c).copied().unwrap_or(0) };

    let mut scanned = 0;
    let mut solutions = Vec::new();
    for d in &plan.disjuncts {
        let sizes: Vec<usize> = d.positions.iter().map(|p| world.classes[p.class.as_str()].len()).collect();
        let olds: Vec<usize> = d.positions.iter().map(|p| old(&p.class).min(world.classes[p.class.as_str()].len())).collect();
        let grew = sizes.iter().zip(&olds).any(|(n, w)| w < n);
        let mut variants = Vec::new();
        if full || (d.open && (typed_changed || grew)) {
            variants.push(Variant {
                order: (0..d.positions.len()).collect(),
                ranges: sizes.iter().map(|&n| (0, n)).collect(),
            });
        } else {
            for i in 0..d.positions.len() {
                if olds[i] == sizes[i] {
                    continue;
                }
                let ranges = (0..d.positions.len())
                    .map(|j| match j.cmp(&i) {
                        std::cmp::Ordering::Less => (0, olds[j]),
                        std::cmp::Ordering::Equal => (olds[j], sizes[j]),
                        std::cmp::Ordering::Greater => (0, sizes[j]),
                    })
                    .collect();
                let order = std::iter::once(i).chain((0..d.positions.len()).filter(|&j| j != i)).collect();
                variants.push(Variant { order, ranges });
            }
        }
        for v in &variants {
            let (n, sols) = world.run_variant(plan, d, v, opts.workers);
            scanned += n;
            solutions.extend(sols);
        }
    }
    let found = par::map(opts.workers, &solutions, |s| world.realize(class, plan, s));
    let mut deps = BTreeMap::new();
    for (name, kb) in &world.classes {
        deps.insert(name.to_string(), kb.len());
    }
    let wm = Watermark {
        typed: store.typed().len(),
        epoch: tax.epoch(),
        deps,
    };
    Ok((scanned, found.into_iter().flatten().collect(), wm))
}

struct Variant {
    /// Positions in binding order.
    order: Vec<usize>,
    /// Member index range per position.
    ranges: Vec<(usize, usize)>,
}

struct World<'a> {
    store: &'a Store,
    tax: &'a Taxonomy,
    classes: HashMap<&'a str, &'a KbClass>,
    prune: bool,
}

impl Deref for World<'_> {
    fn deref(&self, name: &str) -> Option<&Term> {
        self.store.term(name).or_else(|| {
            self.classes
                .values()
                .find_map(|c| c.member(name).map(|m| &m.term))
        })
    }
}

impl World<'_> {
    fn resolve(&self, name: &str, depth: usize) -> Option<Type> {
        if let Some(ty) = self.store.type_of(name) {
            return Some(ty.clone());
        }
        if depth > 64 {
            return None;
        }
        let t = self.classes.values().find_map(|c| c.member(name))?;
        infer_static_type(self.tax, &t.term, &|n| self.resolve(n, depth + 1))
    }

    fn run_variant(&self, plan: &SubsetPlan, d: &DisjunctPlan, v: &Variant, workers: usize) -> (u64, Vec<Substitution>) {
        let mut scanned = 0;
        if v.order.is_empty() {
            let mut out = Vec::new();
            self.finish(plan, d, Substitution::new(), &mut scanned, &mut out);
            return (scanned, out);
        }
        let first = self.extend(d, v, 0, &Substitution::new(), &mut scanned);
        let parts = par::map(workers, &first, |s| {
            let mut n = 0;
            let mut out = Vec::new();
            self.step(plan, d, v, 1, s.clone(), &mut n, &mut out);
            (n, out)
        });
        let mut out = Vec::new();
        for (n, sols) in parts {
            scanned += n;
            out.extend(sols);
        }
        (scanned, out)
    }

    fn step(&self, plan: &SubsetPlan, d: &DisjunctPlan, v: &Variant, k: usize, s: Substitution, scanned: &mut u64, out: &mut Vec<Substitution>) {
        if k == v.order.len() {
            self.finish(plan, d, s, scanned, out);
            return;
        }
        for s2 in self.extend(d, v, k, &s, scanned) {
            self.step(plan, d, v, k + 1, s2, scanned, out);
        }
    }

    fn member_index(&self, kb: &KbClass, value: &Term) -> Option<usize> {
        match value {
            Term::Alias(n) => kb.index_of(n),
            t => kb.index_of_term(t),
        }
    }

    /// Every way of binding the `k`th position of the variant under `s`.
    fn extend(&self, d: &DisjunctPlan, v: &Variant, k: usize, s: &Substitution, scanned: &mut u64) -> Vec<Substitution> {
        let pi = v.order[k];
        let pos = &d.positions[pi];
        let kb = self.classes[pos.class.as_str()];
        let (lo, hi) = v.ranges[pi];
        let in_range = |i: &usize| (lo..hi).contains(i);
        let bound = s.get(&pos.var).cloned();
        let mut out = Vec::new();
        match &pos.kind {
            PosKind::Vacuous => {
                if lo < hi {
                    *scanned += 1;
                    out.push(s.clone());
                }
            }
            PosKind::Checked => match bound {
                Some(value) => {
                    *scanned += 1;
                    if self.member_index(kb, &value).is_some_and(|i| in_range(&i)) {
                        out.push(s.clone());
                    }
                }
                None => {
                    for m in &kb.members()[lo..hi] {
                        *scanned += 1;
                        let mut s2 = s.clone();
                        s2.bind(pos.var.clone(), Term::Alias(m.name.clone()));
                        out.push(s2);
                    }
                }
            },
            PosKind::Generator(pattern) => {
                let applied = s.apply(pattern);
                let candidates: Vec<usize> = if let Some(value) = bound {
                    self.member_index(kb, &value).filter(in_range).into_iter().collect()
                } else if self.prune {
                    match applied
                        .aliases()
                        .iter()
                        .map(|a| kb.holders_of(a))
                        .min_by_key(|h| h.len())
                    {
                        Some(holders) => holders.iter().copied().filter(in_range).collect(),
                        None => (lo..hi).collect(),
                    }
                } else {
                    (lo..hi).collect()
                };
                for i in candidates {
                    *scanned += 1;
                    let m = &kb.members()[i];
                    let mut s2 = s.clone();
                    if unify_with(&applied, &m.term, &mut s2, self)
                        && unify_with(&Term::Var(pos.var.clone()), &Term::Alias(m.name.clone()), &mut s2, &NoEnv)
                    {
                        out.push(s2);
                    }
                }
            }
        }
        out
    }

    fn finish(&self, plan: &SubsetPlan, d: &DisjunctPlan, mut s: Substitution, scanned: &mut u64, out: &mut Vec<Substitution>) {
        let mut pending: Vec<&Literal> = d.rest.iter().collect();
        if !self.settle(&mut pending, &mut s) {
            return;
        }
        let unbound: Vec<String> = s.apply(&plan.binding_term).free_vars().into_iter().collect();
        if unbound.is_empty() {
            if pending.is_empty() {
                out.push(s);
            }
            return;
        }
        // unconstrained binding variables range over the typed names
        let names: Vec<&str> = self.store.typed().iter().map(|e| e.name.as_str()).collect();
        if names.is_empty() {
            return;
        }
        let mut choice = vec![0usize; unbound.len()];
        loop {
            *scanned += 1;
            let mut s2 = s.clone();
            for (v, &c) in unbound.iter().zip(&choice) {
                s2.bind(v.clone(), Term::Alias(names[c].to_string()));
            }
            let mut p2 = pending.clone();
            if self.settle(&mut p2, &mut s2) && p2.is_empty() {
                out.push(s2);
            }
            let mut k = unbound.len();
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < names.len() {
                    break;
                }
                choice[k] = 0;
            }
        }
    }

    /// Evaluates literals until none can make progress. Literals that need
    /// ground arguments wait for other literals to bind their variables.
    fn settle(&self, pending: &mut Vec<&Literal>, s: &mut Substitution) -> bool {
        loop {
            let mut progress = false;
            let mut i = 0;
            while i < pending.len() {
                match self.eval_literal(pending[i], s) {
                    Some(true) => {
                        pending.remove(i);
                        progress = true;
                    }
                    Some(false) => return false,
                    None => i += 1,
                }
            }
            if !progress || pending.is_empty() {
                return true;
            }
        }
    }

    fn eval_literal(&self, lit: &Literal, s: &mut Substitution) -> Option<bool> {
        match &lit.atom {
            Atom::Builtin(BuiltinOp::Eq, a, b) if !lit.negated => {
                let mut s2 = s.clone();
                let ok = unify_with(a, b, &mut s2, self);
                if ok {
                    *s = s2;
                }
                Some(ok)
            }
            Atom::Builtin(op, a, b) => {
                let a = s.apply(a);
                let b = s.apply(b);
                if !a.free_vars().is_empty() || !b.free_vars().is_empty() {
                    return None;
                }
                let holds = match op {
                    BuiltinOp::Eq => {
                        if has_bottom(&a) || has_bottom(&b) {
                            return Some(false);
                        }
                        unify_with(&a, &b, &mut Substitution::new(), self)
                    }
                    _ => match (self.number(&a), self.number(&b)) {
                        (Some(x), Some(y)) => match op {
                            BuiltinOp::Lt => x < y,
                            BuiltinOp::Le => x <= y,
                            BuiltinOp::Gt => x > y,
                            BuiltinOp::Ge => x >= y,
                            BuiltinOp::Eq => unreachable!(),
                        },
                        // comparing non-numbers is an error: false either way
                        _ => return Some(false),
                    },
                };
                Some(holds != lit.negated)
            }
            Atom::InSeq(t, ts) => {
                let t = s.apply(t);
                let ts: Vec<Term> = ts.iter().map(|x| s.apply(x)).collect();
                if !t.free_vars().is_empty() || ts.iter().any(|x| !x.free_vars().is_empty()) {
                    return None;
                }
                if has_bottom(&t) {
                    return Some(false);
                }
                let holds = ts
                    .iter()
                    .any(|x| unify_with(&t, x, &mut Substitution::new(), self));
                Some(holds != lit.negated)
            }
        }
    }

    fn number(&self, t: &Term) -> Option<f64> {
        let mut t = t;
        for _ in 0..64 {
            match t {
                Term::Num(x) => return Some(*x),
                Term::Alias(n) => t = self.deref(n)?,
                _ => return None,
            }
        }
        None
    }

    /// Turns a solution into a coerced member of the class.
    fn realize(&self, class: &str, plan: &SubsetPlan, s: &Substitution) -> Option<(String, Term)> {
        let t = s.apply(&plan.binding_term);
        let (name, value) = match &t {
            Term::Alias(n) => (Some(n.clone()), self.deref(n)?.clone()),
            _ => (None, t),
        };
        let ty = infer_static_type(self.tax, &value, &|n| self.resolve(n, 0))?;
        let proof = prove_subtype(self.tax, &ty, &plan.binding_ty)?;
        let coerced = apply_coercion(&proof, &value).ok()?;
        let name = name.unwrap_or_else(|| derived_name(class, &coerced));
        Some((name, coerced))
    }
}

struct NoEnv;

impl Deref for NoEnv {
    fn deref(&self, _: &str) -> Option<&Term> {
        None
    }
}

fn has_bottom(t: &Term) -> bool {
    match t {
        Term::Bottom(_) => true,
        Term::Record(fields) => fields.iter().any(|(_, f)| has_bottom(f)),
        Term::List(items) => items.iter().any(has_bottom),
        Term::Select(base, _) => has_bottom(base),
        _ => false,
    }
}
