//! One knowledge base: a store, its classifier, and the analytics
//! registered against it.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::classifier::{compile, ClassifyError, ClassifyOptions, Classifier, FindReport};
use crate::rules::{apply_lambda, AnalyticError, AnalyticFn, AnalyticReport, Analytics, LambdaRule, RuleError};
use crate::store::{Member, Store, StoreError};
use crate::syntax::{parse_program_with, SyntaxError};
use crate::taxonomy::{mk_concept, TaxonomyError};
use crate::term::{Term, Type};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

impl EngineError {
    /// The store's files could not be replayed.
    pub fn is_corruption(&self) -> bool {
        matches!(
            self,
            EngineError::Store(StoreError::Corrupt { .. })
                | EngineError::Classify(ClassifyError::Store(StoreError::Corrupt { .. }))
        )
    }
}

pub struct Engine {
    store: Store,
    classifier: Classifier,
    analytics: Analytics,
}

impl Engine {
    pub fn new(store: Store) -> Self {
        Engine {
            store,
            classifier: Classifier::default(),
            analytics: Analytics::new(),
        }
    }

    pub fn in_memory() -> Self {
        Self::new(Store::in_memory())
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self, EngineError> {
        Ok(Self::new(Store::open(dir)?))
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn options(&self) -> &ClassifyOptions {
        &self.classifier.options
    }

    pub fn set_options(&mut self, options: ClassifyOptions) {
        self.classifier.options = options;
    }

    pub fn analytics(&self) -> &Analytics {
        &self.analytics
    }

    pub fn same_as(&mut self, a: &str, b: &str) -> Result<(), EngineError> {
        Ok(self.store.same_as(&mk_concept(a)?, &mk_concept(b)?)?)
    }

    pub fn is_a(&mut self, child: &str, parent: &str) -> Result<(), EngineError> {
        Ok(self.store.add_is_a(&mk_concept(child)?, &mk_concept(parent)?)?)
    }

    pub fn abox_insert(&mut self, name: &str, t: Term) -> Result<(), EngineError> {
        self.store.abox_insert(name, t)?;
        Ok(())
    }

    /// Parses concrete-syntax declarations and inserts them in order.
    /// Returns the names inserted.
    pub fn load_str(&mut self, src: &str) -> Result<Vec<String>, EngineError> {
        let store = &self.store;
        let decls = parse_program_with(src, store.taxonomy(), &|n| store.has_term(n))?;
        let mut names = Vec::with_capacity(decls.len());
        for d in decls {
            self.store.abox_insert(&d.name, d.body)?;
            names.push(d.name);
        }
        self.store.sync()?;
        Ok(names)
    }

    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<Vec<String>, EngineError> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|source| EngineError::Read {
            path: path.display().to_string(),
            source,
        })?;
        self.load_str(&src)
    }

    /// Registers a class after checking that its definition can be
    /// classified (aliases resolve, quantifiers are supported).
    pub fn mk_kb_class(&mut self, name: &str, ty: Type) -> Result<(), EngineError> {
        self.store.check_new_class(name, &ty)?;
        compile(&self.store, &ty)?;
        self.store.mk_kb_class(name, ty)?;
        self.store.sync()?;
        Ok(())
    }

    pub fn find_members(&mut self) -> Result<FindReport, EngineError> {
        Ok(self.classifier.find_members(&mut self.store)?)
    }

    pub fn members(&self, class: &str) -> Result<&[Member], EngineError> {
        Ok(self.store.class(class)?.members())
    }

    pub fn nearest(&self, k: usize, start: &str, class: &str) -> Result<BTreeSet<String>, EngineError> {
        Ok(self.store.nearest(k, start, class)?)
    }

    pub fn mk_analytic(
        &mut self,
        name: &str,
        input_class: &str,
        output_class: &str,
        pure: bool,
        func: AnalyticFn,
    ) -> Result<(), EngineError> {
        Ok(self
            .analytics
            .mk_analytic(&self.store, name, input_class, output_class, pure, func)?)
    }

    pub fn run_analytic(&mut self, name: &str) -> Result<AnalyticReport, EngineError> {
        let workers = self.classifier.options.workers;
        Ok(self.analytics.run_analytic(&mut self.store, name, workers)?)
    }

    pub fn apply_lambda(&self, rule: &LambdaRule, member: &Term) -> Result<Term, EngineError> {
        Ok(apply_lambda(&self.store, rule, member)?)
    }
}
