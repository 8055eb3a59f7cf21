//! Lambda-abstraction rules and analytics. Both take members of an input
//! class and must produce terms subsumed by their output type; the result
//! is coerced into that type before it is returned or stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::classifier::Deref;
use crate::par;
use crate::store::{Member, Store, StoreError};
use crate::taxonomy::Taxonomy;
use crate::term::{Substitution, Term, Type};
use crate::typing::{
    apply_coercion, check_against, infer_static_type, prove_subtype, resolve_aliases, select_in, TypingError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("no field {label} in {term}")]
    MissingField { label: String, term: String },
    #[error("cannot select {label} from non-record {term}")]
    NotARecord { label: String, term: String },
    #[error("unbound alias {0}")]
    UnboundAlias(String),
    #[error("unbound variable {0}")]
    UnboundVar(String),
    #[error("free variables {0:?} besides the parameter")]
    FreeVars(BTreeSet<String>),
    #[error("{0} is not typeable")]
    NotTypeable(String),
    #[error("{term} is not subsumed by {ty}")]
    NotSubsumed { term: String, ty: String },
    #[error("analytic failed: {0}")]
    Failed(String),
    #[error("analytic panicked: {0}")]
    Panicked(String),
    #[error(transparent)]
    Typing(#[from] TypingError),
}

impl Deref for Store {
    fn deref(&self, name: &str) -> Option<&Term> {
        self.term(name)
    }
}

/// Evaluates field selections; everything else evaluates to itself.
/// Aliases are followed only where a selection needs the record behind them.
pub fn eval_term(tax: &Taxonomy, t: &Term, env: &dyn Deref) -> Result<Term, RuleError> {
    match t {
        Term::Select(base, label) => {
            let mut value = eval_term(tax, base, env)?;
            while let Term::Alias(n) = &value {
                value = env
                    .deref(n)
                    .cloned()
                    .ok_or_else(|| RuleError::UnboundAlias(n.clone()))?;
            }
            let Term::Record(fields) = &value else {
                return Err(RuleError::NotARecord {
                    label: label.to_string(),
                    term: value.to_string(),
                });
            };
            let found = select_in(tax, fields, label, |v| match v {
                Term::Record(inner) => Some(inner.as_slice()),
                _ => None,
            });
            found.cloned().ok_or_else(|| RuleError::MissingField {
                label: label.to_string(),
                term: value.to_string(),
            })
        }
        Term::Record(fields) => Ok(Term::Record(
            fields
                .iter()
                .map(|(l, f)| Ok((l.clone(), eval_term(tax, f, env)?)))
                .collect::<Result<_, RuleError>>()?,
        )),
        Term::List(items) => Ok(Term::List(
            items
                .iter()
                .map(|i| eval_term(tax, i, env))
                .collect::<Result<_, _>>()?,
        )),
        Term::Alias(n) if env.deref(n).is_none() => Err(RuleError::UnboundAlias(n.clone())),
        Term::Var(v) => Err(RuleError::UnboundVar(v.clone())),
        other => Ok(other.clone()),
    }
}

/// `λparam : input_class. body`, with results required to fit `output_type`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRule {
    pub name: String,
    pub param: String,
    pub input_class: String,
    pub body: Term,
    pub output_type: Type,
}

impl LambdaRule {
    pub fn new(
        name: &str,
        param: &str,
        input_class: &str,
        body: Term,
        output_type: Type,
    ) -> Result<Self, RuleError> {
        let mut free = body.free_vars();
        free.remove(param);
        if !free.is_empty() {
            return Err(RuleError::FreeVars(free));
        }
        Ok(LambdaRule {
            name: name.to_string(),
            param: param.to_string(),
            input_class: input_class.to_string(),
            body,
            output_type,
        })
    }
}

fn class_type(store: &Store, ty: &Type) -> Result<Type, RuleError> {
    Ok(resolve_aliases(ty, &|n| {
        store.class(n).ok().map(|c| c.definition().clone())
    })?)
}

/// Applies the rule to one member and coerces the result into the output
/// type.
pub fn apply_lambda(store: &Store, rule: &LambdaRule, member: &Term) -> Result<Term, RuleError> {
    let tax = store.taxonomy();
    let s = Substitution::from_pairs([(rule.param.clone(), member.clone())]);
    let value = eval_term(tax, &s.apply(&rule.body), store)?;
    let out_ty = class_type(store, &rule.output_type)?;
    let resolve = |n: &str| store.type_of(n).cloned();
    let proof = check_against(tax, &value, &out_ty, &resolve).ok_or_else(|| RuleError::NotSubsumed {
        term: value.to_string(),
        ty: out_ty.to_string(),
    })?;
    Ok(apply_coercion(&proof, &value)?)
}

/// What an analytic can see while it runs.
pub struct AnalyticCtx<'a> {
    store: &'a Store,
}

impl<'a> AnalyticCtx<'a> {
    pub fn store(&self) -> &'a Store {
        self.store
    }

    pub fn term(&self, name: &str) -> Option<&'a Term> {
        self.store.term(name)
    }

    pub fn nearest(&self, k: usize, name: &str, class: &str) -> Result<BTreeSet<String>, String> {
        self.store.nearest(k, name, class).map_err(|e| e.to_string())
    }

    /// The names near `name` as a list of aliases.
    pub fn nearest_term(&self, k: usize, name: &str, class: &str) -> Result<Term, String> {
        Ok(Term::List(self.nearest(k, name, class)?.into_iter().map(Term::Alias).collect()))
    }
}

pub type AnalyticFn = Arc<dyn Fn(&AnalyticCtx<'_>, &Member) -> Result<Term, String> + Send + Sync>;

#[derive(Clone)]
pub struct Analytic {
    pub name: String,
    pub input_class: String,
    pub output_class: String,
    /// Declared free of side effects, so members may be processed in parallel.
    pub pure: bool,
    func: AnalyticFn,
}

impl std::fmt::Debug for Analytic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analytic")
            .field("name", &self.name)
            .field("input_class", &self.input_class)
            .field("output_class", &self.output_class)
            .field("pure", &self.pure)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("analytic {0} is already defined")]
    Duplicate(String),
    #[error("unknown analytic {0}")]
    Unknown(String),
    #[error("output class {0} must have a static type")]
    NotStatic(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnalyticReport {
    pub name: String,
    pub processed: usize,
    pub inserted: usize,
    /// `(member name, reason)` per member whose result was rejected.
    pub failures: Vec<(String, String)>,
    pub elapsed: Duration,
}

impl AnalyticReport {
    pub fn render(&self, timings: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "analytic\t{}", self.name);
        let _ = writeln!(out, "processed\t{}", self.processed);
        let _ = writeln!(out, "inserted\t{}", self.inserted);
        let _ = writeln!(out, "failed\t{}", self.failures.len());
        for (m, why) in &self.failures {
            let _ = writeln!(out, "failure\t{m}\t{why}");
        }
        if timings {
            let _ = writeln!(out, "elapsed_ms\t{:.3}", self.elapsed.as_secs_f64() * 1e3);
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
pub struct Analytics {
    registry: BTreeMap<String, Analytic>,
}

impl Analytics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.registry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registry.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Analytic> {
        self.registry.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.registry.keys().map(String::as_str)
    }

    pub fn mk_analytic(
        &mut self,
        store: &Store,
        name: &str,
        input_class: &str,
        output_class: &str,
        pure: bool,
        func: AnalyticFn,
    ) -> Result<(), AnalyticError> {
        if self.registry.contains_key(name) {
            return Err(AnalyticError::Duplicate(name.to_string()));
        }
        store.class(input_class)?;
        let out = store.class(output_class)?.definition().clone();
        if matches!(out, Type::Subset(_)) || class_type(store, &out).is_err() {
            return Err(AnalyticError::NotStatic(output_class.to_string()));
        }
        self.registry.insert(
            name.to_string(),
            Analytic {
                name: name.to_string(),
                input_class: input_class.to_string(),
                output_class: output_class.to_string(),
                pure,
                func,
            },
        );
        Ok(())
    }

    /// Runs the analytic over every member of its input class. Results that
    /// fail, panic, or do not fit the output class are reported per member;
    /// the rest are coerced and added to the output class.
    pub fn run_analytic(&self, store: &mut Store, name: &str, workers: usize) -> Result<AnalyticReport, AnalyticError> {
        let start = Instant::now();
        let a = self
            .registry
            .get(name)
            .ok_or_else(|| AnalyticError::Unknown(name.to_string()))?;
        let members: Vec<Member> = store.class(&a.input_class)?.members().to_vec();
        let out_ty = class_type(store, store.class(&a.output_class)?.definition())?;
        let results = {
            let store_ref: &Store = store;
            let ctx = AnalyticCtx { store: store_ref };
            let run = |m: &Member| check_output(store_ref, &ctx, a, &out_ty, m);
            if a.pure {
                par::map(workers, &members, run)
            } else {
                members.iter().map(run).collect()
            }
        };
        let mut report = AnalyticReport {
            name: name.to_string(),
            processed: members.len(),
            ..Default::default()
        };
        for (m, r) in members.iter().zip(results) {
            match r {
                Ok(t) => {
                    if store.add_member(&a.output_class, m.name.clone(), t)?.is_some() {
                        report.inserted += 1;
                    }
                }
                Err(e) => report.failures.push((m.name.clone(), e.to_string())),
            }
        }
        store.sync()?;
        report.elapsed = start.elapsed();
        Ok(report)
    }
}

fn check_output(store: &Store, ctx: &AnalyticCtx<'_>, a: &Analytic, out_ty: &Type, m: &Member) -> Result<Term, RuleError> {
    let out = match catch_unwind(AssertUnwindSafe(|| (a.func)(ctx, m))) {
        Ok(Ok(t)) => t,
        Ok(Err(e)) => return Err(RuleError::Failed(e)),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            return Err(RuleError::Panicked(msg));
        }
    };
    let tax = store.taxonomy();
    let ty = infer_static_type(tax, &out, &|n| store.type_of(n).cloned())
        .ok_or_else(|| RuleError::NotTypeable(out.to_string()))?;
    let proof = prove_subtype(tax, &ty, out_ty).ok_or_else(|| RuleError::NotSubsumed {
        term: out.to_string(),
        ty: out_ty.to_string(),
    })?;
    Ok(apply_coercion(&proof, &out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::build::*;

    fn small_corpus() -> Store {
        let tax = Taxonomy::new();
        let mut s = Store::in_memory();
        s.abox_insert("joe", record(&tax, vec![("name", str("Joe")), ("birth_date", str("1984-06-27"))]).unwrap())
            .unwrap();
        s.abox_insert("t1", record(&tax, vec![("amount", num(500)), ("type", atom("check").unwrap())]).unwrap())
            .unwrap();
        s.abox_insert("o1", triple("orig-of", term_name("joe"), term_name("t1")).unwrap())
            .unwrap();
        s
    }

    #[test]
    fn selections() {
        let s = small_corpus();
        let tax = s.taxonomy();
        let name = record_select(term_name("joe"), "name").unwrap();
        assert_eq!(eval_term(tax, &name, &s).unwrap(), str("Joe"));
        let o1 = s.term("o1").unwrap().clone();
        assert_eq!(eval_term(tax, &pred_arg_select(o1, 0), &s).unwrap(), term_name("joe"));
        assert_eq!(eval_term(tax, &str("x"), &s).unwrap(), str("x"));
        let missing = record_select(term_name("joe"), "eyes").unwrap();
        assert!(matches!(eval_term(tax, &missing, &s), Err(RuleError::MissingField { .. })));
        assert!(matches!(eval_term(tax, &term_name("ghost"), &s), Err(RuleError::UnboundAlias(_))));
    }

    #[test]
    fn lambda_projects_name() {
        let mut s = small_corpus();
        let tax = Taxonomy::new();
        let person = record_ty(&tax, vec![("name", str_ty()), ("dob", str_ty())]).unwrap();
        s.mk_kb_class("person", person).unwrap();
        let joe = record(&tax, vec![("name", str("Joe")), ("dob", str("1984-06-27"))]).unwrap();
        let rule = LambdaRule::new(
            "names",
            "p",
            "person",
            record(&tax, vec![("name", record_select(var("p"), "name").unwrap())]).unwrap(),
            record_ty(&tax, vec![("name", str_ty())]).unwrap(),
        )
        .unwrap();
        assert_eq!(
            apply_lambda(&s, &rule, &joe).unwrap(),
            record(&tax, vec![("name", str("Joe"))]).unwrap()
        );
        let id = LambdaRule::new("id", "p", "person", var("p"), type_name("person")).unwrap();
        assert_eq!(apply_lambda(&s, &id, &joe).unwrap(), joe);
        let bad = LambdaRule::new("bad", "p", "person", record_select(var("p"), "eyes").unwrap(), str_ty()).unwrap();
        assert!(apply_lambda(&s, &bad, &joe).is_err());
        assert!(matches!(
            LambdaRule::new("free", "p", "person", var("q"), str_ty()),
            Err(RuleError::FreeVars(_))
        ));
    }

    #[test]
    fn analytics_report_failures_per_member() {
        let mut s = Store::in_memory();
        let tax = Taxonomy::new();
        let ty = record_ty(&tax, vec![("name", str_ty())]).unwrap();
        s.mk_kb_class("in", ty.clone()).unwrap();
        s.mk_kb_class("out", ty).unwrap();
        for n in ["a", "b", "c"] {
            s.add_member("in", n.into(), record(&tax, vec![("name", str(n))]).unwrap())
                .unwrap();
        }
        let mut reg = Analytics::new();
        let f: AnalyticFn = Arc::new(|_, m| match m.name.as_str() {
            "a" => Ok(m.term.clone()),
            "b" => Ok(str("oops")),
            _ => Err("no".into()),
        });
        reg.mk_analytic(&s, "f", "in", "out", true, f.clone()).unwrap();
        assert!(matches!(
            reg.mk_analytic(&s, "f", "in", "out", true, f),
            Err(AnalyticError::Duplicate(_))
        ));
        let r = reg.run_analytic(&mut s, "f", 2).unwrap();
        assert_eq!((r.processed, r.inserted, r.failures.len()), (3, 1, 2));
        assert_eq!(s.class("out").unwrap().members()[0].name, "a");
        // identity into the same class changes nothing
        let id: AnalyticFn = Arc::new(|_, m| Ok(m.term.clone()));
        reg.mk_analytic(&s, "id", "in", "in", false, id).unwrap();
        let r = reg.run_analytic(&mut s, "id", 1).unwrap();
        assert_eq!(r.inserted, 0);
        assert_eq!(s.class("in").unwrap().len(), 3);
    }
}
