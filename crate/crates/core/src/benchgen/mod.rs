//! Synthetic people-and-transactions corpora, the schema used to mine them,
//! and an experiment harness that checks classification against the
//! brute-force oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::classifier::{ClassifyOptions, FindReport};
use crate::engine::{Engine, EngineError};
use crate::taxonomy::Taxonomy;
use crate::term::build::*;
use crate::term::{Term, Type};

pub mod oracle;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub persons: usize,
    pub transactions: usize,
    pub p_drop_orig: f64,
    pub p_drop_recv: f64,
    /// Filler fields per person.
    pub extra_attrs: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            persons: 100,
            transactions: 50,
            p_drop_orig: 0.0,
            p_drop_recv: 0.0,
            extra_attrs: 0,
            seed: 1,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        for (what, p) in [("drop-orig", self.p_drop_orig), ("drop-recv", self.p_drop_recv)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(BenchError::Config(format!("{what} probability {p} is outside [0, 1]")));
            }
        }
        if self.transactions > 0 && self.persons == 0 {
            return Err(BenchError::Config("transactions need at least one person".into()));
        }
        Ok(())
    }
}

/// The person every generated mission target is built around.
pub const TARGET: &str = "p0";

fn filler(rng: &mut ChaCha8Rng) -> String {
    (0..6).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

fn person_decl(out: &mut String, name: &str, label: &str, rng: &mut ChaCha8Rng, extra: usize) {
    let date = format!(
        "{}-{:02}-{:02}",
        rng.random_range(1930..2005),
        rng.random_range(1..=12),
        rng.random_range(1..=28)
    );
    let _ = write!(out, "{name} := {{\"name\"=\"{label}\", ");
    // half the people use the synonym, so classification needs the taxonomy
    let key = if rng.random_bool(0.5) { "dob" } else { "birth_date" };
    let _ = write!(out, "\"{key}\"=\"{date}\"");
    for k in 0..extra {
        let _ = write!(out, ", \"attr_{k}\"=\"{}\"", filler(rng));
    }
    out.push_str("};\n");
}

fn trans_decl(out: &mut String, name: &str, rng: &mut ChaCha8Rng) {
    let amount = rng.random_range(1..100_000) as f64 / 100.0;
    let kind = if rng.random_bool(0.5) { "check" } else { "cc" };
    let _ = writeln!(out, "{name} := {{\"amount\"={amount:?}, \"type\"={kind}()}};");
}

/// Concrete-syntax corpus: people `p<i>`, transactions `t<j>` and their
/// `orig-of` (`o<j>`) and `recv-of` (`r<j>`) links, each link kept with
/// probability one minus its drop probability.
pub fn generate(cfg: &GenConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = String::new();
    for i in 0..cfg.persons {
        person_decl(&mut out, &format!("p{i}"), &format!("Person {i}"), &mut rng, cfg.extra_attrs);
    }
    for j in 0..cfg.transactions {
        trans_decl(&mut out, &format!("t{j}"), &mut rng);
    }
    for j in 0..cfg.transactions {
        let from = rng.random_range(0..cfg.persons);
        let mut to = rng.random_range(0..cfg.persons);
        if cfg.persons > 1 && to == from {
            to = (to + 1) % cfg.persons;
        }
        if !rng.random_bool(cfg.p_drop_orig) {
            let _ = writeln!(out, "o{j} := orig-of(p{from}, t{j});");
        }
        if !rng.random_bool(cfg.p_drop_recv) {
            let _ = writeln!(out, "r{j} := recv-of(p{to}, t{j});");
        }
    }
    out
}

/// Five new transactions from the target to five new people: twenty terms.
pub fn incremental_batch(round: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (round as u64).wrapping_mul(0x9e37_79b9));
    let mut out = String::new();
    for k in 0..5 {
        let p = format!("x{round}p{k}");
        let t = format!("x{round}t{k}");
        person_decl(&mut out, &p, &format!("New {round}.{k}"), &mut rng, 0);
        trans_decl(&mut out, &t, &mut rng);
        let _ = writeln!(out, "x{round}o{k} := orig-of({TARGET}, {t});");
        let _ = writeln!(out, "x{round}r{k} := recv-of({p}, {t});");
    }
    out
}

pub fn person_type() -> Type {
    record_ty(&Taxonomy::new(), vec![("name", str_ty()), ("dob", str_ty())]).expect("static schema")
}

pub fn trans_type() -> Type {
    record_ty(
        &Taxonomy::new(),
        vec![("amount", num_ty()), ("type", enum_ty(&["check", "cc"]).expect("nonempty"))],
    )
    .expect("static schema")
}

/// Persons `p` and `q` are financially related when some transaction
/// originates with `p` and is received by `q`.
pub fn fi_related_type() -> Type {
    let (p, q, r, s, t) = (var("p"), var("q"), var("r"), var("s"), var("t"));
    let link = |name: &str, a: Term, b: Term| triple(name, a, b).expect("nonempty args");
    subset_ty(
        link("fi-related", p.clone(), q.clone()),
        triple_ty("fi-related", type_name("person"), type_name("person")).expect("nonempty"),
        exists(
            "t",
            type_name("trans"),
            exists(
                "s",
                type_name("orig_of"),
                exists(
                    "r",
                    type_name("recv_of"),
                    link("orig-of", p, t.clone())
                        .equals(s)
                        .and(link("recv-of", q, t).equals(r)),
                ),
            ),
        ),
    )
    .expect("well-formed subset type")
}

/// Persons financially related to `target`, in either direction.
pub fn m_target_type(target: &str) -> Type {
    let (p, f) = (var("p"), var("f"));
    let target = term_name(target);
    let link = |a: Term, b: Term| triple("fi-related", a, b).expect("nonempty args");
    subset_ty(
        p.clone(),
        type_name("person"),
        exists(
            "f",
            type_name("fi_related"),
            link(p.clone(), target.clone())
                .equals(f.clone())
                .or(link(target, p).equals(f)),
        ),
    )
    .expect("well-formed subset type")
}

/// person, trans, orig_of and recv_of, plus `dob` ~ `birth_date`.
pub fn define_base_schema(engine: &mut Engine) -> Result<(), EngineError> {
    engine.mk_kb_class("person", person_type())?;
    engine.mk_kb_class("trans", trans_type())?;
    let link = |name: &str| {
        triple_ty(name, type_name("person"), type_name("trans")).expect("nonempty")
    };
    engine.mk_kb_class("orig_of", link("orig-of"))?;
    engine.mk_kb_class("recv_of", link("recv-of"))?;
    engine.same_as("dob", "birth_date")?;
    Ok(())
}

/// The base schema plus the fi_related mission set and the m_target class.
pub fn define_schema(engine: &mut Engine, target: &str) -> Result<(), EngineError> {
    define_base_schema(engine)?;
    engine.mk_kb_class("fi_related", fi_related_type())?;
    engine.mk_kb_class("m_target", m_target_type(target))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub config: GenConfig,
    pub terms: usize,
    pub load: Duration,
    pub initial: FindReport,
    pub initial_counts: BTreeMap<String, usize>,
    pub incremental: FindReport,
    pub incremental_counts: BTreeMap<String, usize>,
    /// |orig_of| × |recv_of| after the initial run.
    pub unpruned_pairs: u64,
    /// `None` when the oracle was not consulted.
    pub oracle_initial: Option<bool>,
    pub oracle_incremental: Option<bool>,
}

impl Metrics {
    pub fn oracle_ok(&self) -> bool {
        self.oracle_initial != Some(false) && self.oracle_incremental != Some(false)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "key\tvalue");
        let _ = writeln!(out, "persons\t{}", c.persons);
        let _ = writeln!(out, "transactions\t{}", c.transactions);
        let _ = writeln!(out, "drop_orig\t{}", c.p_drop_orig);
        let _ = writeln!(out, "drop_recv\t{}", c.p_drop_recv);
        let _ = writeln!(out, "extra_attrs\t{}", c.extra_attrs);
        let _ = writeln!(out, "seed\t{}", c.seed);
        let _ = writeln!(out, "terms\t{}", self.terms);
        let _ = writeln!(out, "load_ms\t{:.3}", self.load.as_secs_f64() * 1e3);
        for (phase, report, counts) in [
            ("initial", &self.initial, &self.initial_counts),
            ("incremental", &self.incremental, &self.incremental_counts),
        ] {
            let _ = writeln!(out, "{phase}.promoted\t{}", report.promoted);
            for r in &report.classes {
                let _ = writeln!(out, "{phase}.{}.members\t{}", r.class, counts.get(&r.class).copied().unwrap_or(0));
                let _ = writeln!(out, "{phase}.{}.matched\t{}", r.class, r.matched);
                let _ = writeln!(out, "{phase}.{}.scanned\t{}", r.class, r.scanned);
                let _ = writeln!(out, "{phase}.{}.elapsed_ms\t{:.3}", r.class, r.elapsed.as_secs_f64() * 1e3);
            }
        }
        let _ = writeln!(out, "unpruned_pairs\t{}", self.unpruned_pairs);
        let show = |o: Option<bool>| o.map_or("skipped".to_string(), |b| b.to_string());
        let _ = writeln!(out, "oracle_initial\t{}", show(self.oracle_initial));
        let _ = writeln!(out, "oracle_incremental\t{}", show(self.oracle_incremental));
        out
    }
}

fn counts(engine: &Engine) -> BTreeMap<String, usize> {
    let store = engine.store();
    store
        .class_names()
        .iter()
        .map(|c| (c.clone(), store.class(c).map_or(0, |k| k.len())))
        .collect()
}

/// Member terms per class, for comparing against the oracle.
pub fn member_sets(engine: &Engine) -> BTreeMap<String, BTreeSet<Term>> {
    let store = engine.store();
    store
        .class_names()
        .iter()
        .map(|c| {
            let terms = store
                .class(c)
                .map(|k| k.members().iter().map(|m| m.term.clone()).collect())
                .unwrap_or_default();
            (c.clone(), terms)
        })
        .collect()
}

fn agrees(engine: &Engine) -> Result<bool, BenchError> {
    let expected = oracle::oracle_member_sets(engine.store())?;
    Ok(member_sets(engine) == expected)
}

/// Loads a generated corpus into a fresh in-memory engine, classifies it,
/// adds one incremental batch and classifies again.
pub fn run_experiment(cfg: &GenConfig, options: ClassifyOptions, check_oracle: bool) -> Result<Metrics, BenchError> {
    cfg.validate()?;
    let mut engine = Engine::in_memory();
    engine.set_options(options);
    define_schema(&mut engine, TARGET)?;
    let start = Instant::now();
    let corpus = generate(cfg);
    engine.load_str(&corpus)?;
    let load = start.elapsed();
    let initial = engine.find_members()?;
    let initial_counts = counts(&engine);
    let oracle_initial = if check_oracle { Some(agrees(&engine)?) } else { None };
    let unpruned_pairs = (initial_counts["orig_of"] as u64) * (initial_counts["recv_of"] as u64);
    if cfg.persons > 0 {
        engine.load_str(&incremental_batch(0, cfg.seed))?;
    }
    let incremental = engine.find_members()?;
    let incremental_counts = counts(&engine);
    let oracle_incremental = if check_oracle { Some(agrees(&engine)?) } else { None };
    Ok(Metrics {
        config: cfg.clone(),
        terms: engine.store().term_names().len(),
        load,
        initial,
        initial_counts,
        incremental,
        incremental_counts,
        unpruned_pairs,
        oracle_initial,
        oracle_incremental,
    })
}
