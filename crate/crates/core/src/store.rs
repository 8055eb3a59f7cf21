//! Embedded, file-backed storage: the untyped and typed term collections,
//! one member collection per class, the class catalog (with the taxonomy),
//! and the alias containment graph.
//!
//! Every collection is an append-only log of S-expressions, one per line.
//! A store directory holds `catalog.fsx`, `untyped.fsx`, `typed.fsx`,
//! `adjacency.fsx` and one `class_<name>.fsx` per class, plus a `lock` file
//! while a session has it open.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::syntax::sexp::{self, Sexp};
use crate::syntax::SyntaxError;
use crate::taxonomy::{Concept, Taxonomy, TaxonomyError};
use crate::term::{Term, Type};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("term {0} is already defined")]
    DuplicateTerm(String),
    #[error("inserting {0} would create an alias cycle")]
    AliasCycle(String),
    #[error("class {0} is already defined")]
    DuplicateClass(String),
    #[error("class {class} refers to undefined class {missing}")]
    DanglingAlias { class: String, missing: String },
    #[error("unknown term {0}")]
    UnknownTerm(String),
    #[error("unknown class {0}")]
    UnknownClass(String),
    #[error("store {0} is locked by another session")]
    Locked(PathBuf),
    #[error("corrupt store file {file}, line {line}: {message}")]
    Corrupt {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypedEntry {
    pub name: String,
    pub term: Term,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub name: String,
    pub term: Term,
}

/// How far classification has progressed for one class: the number of
/// typed terms scanned, the taxonomy epoch it ran under, and the member
/// counts of the classes it depends on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Watermark {
    pub typed: usize,
    pub epoch: u64,
    pub deps: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct KbClass {
    name: String,
    definition: Type,
    members: Vec<Member>,
    by_name: HashMap<String, usize>,
    by_term: HashMap<Term, usize>,
    alias_index: HashMap<String, Vec<usize>>,
    watermark: Watermark,
}

impl KbClass {
    fn new(name: String, definition: Type) -> Self {
        KbClass {
            name,
            definition,
            members: Vec::new(),
            by_name: HashMap::new(),
            by_term: HashMap::new(),
            alias_index: HashMap::new(),
            watermark: Watermark::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn definition(&self) -> &Type {
        &self.definition
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, name: &str) -> Option<&Member> {
        self.by_name.get(name).map(|&i| &self.members[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn index_of_term(&self, t: &Term) -> Option<usize> {
        self.by_term.get(t).copied()
    }

    /// Indices of members whose term mentions the alias `name`.
    pub fn holders_of(&self, name: &str) -> &[usize] {
        self.alias_index.get(name).map_or(&[], Vec::as_slice)
    }

    pub fn watermark(&self) -> &Watermark {
        &self.watermark
    }

    fn push(&mut self, name: String, term: Term) -> Option<String> {
        let mut unique = name.clone();
        let mut k = 2;
        while let Some(&i) = self.by_name.get(&unique) {
            if self.members[i].term == term {
                return None;
            }
            unique = format!("{name}~{k}");
            k += 1;
        }
        let idx = self.members.len();
        for a in term.aliases() {
            self.alias_index.entry(a).or_default().push(idx);
        }
        self.by_name.insert(unique.clone(), idx);
        self.by_term.entry(term.clone()).or_insert(idx);
        self.members.push(Member {
            name: unique.clone(),
            term,
        });
        Some(unique)
    }
}

/// Term-name containment: forward edges follow the aliases a term mentions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Adjacency {
    forward: HashMap<String, BTreeSet<String>>,
    reverse: HashMap<String, BTreeSet<String>>,
}

impl Adjacency {
    fn add(&mut self, name: &str, refs: &BTreeSet<String>) {
        for r in refs {
            self.reverse.entry(r.clone()).or_default().insert(name.to_string());
        }
        self.forward.insert(name.to_string(), refs.clone());
    }

    pub fn forward(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.forward.get(name)
    }

    pub fn reverse(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.reverse.get(name)
    }

    /// Would adding `name → refs` close a cycle?
    fn closes_cycle(&self, name: &str, refs: &BTreeSet<String>) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = refs.iter().map(String::as_str).collect();
        while let Some(n) = stack.pop() {
            if n == name {
                return true;
            }
            if seen.insert(n) {
                if let Some(next) = self.forward.get(n) {
                    stack.extend(next.iter().map(String::as_str));
                }
            }
        }
        false
    }
}

struct Disk {
    dir: PathBuf,
    writers: HashMap<String, BufWriter<File>>,
}

impl Disk {
    fn append(&mut self, file: &str, line: &str) -> io::Result<()> {
        let w = match self.writers.get_mut(file) {
            Some(w) => w,
            None => {
                let f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(self.dir.join(file))?;
                self.writers.entry(file.to_string()).or_insert(BufWriter::new(f))
            }
        };
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")
    }

    fn sync(&mut self) -> io::Result<()> {
        for w in self.writers.values_mut() {
            w.flush()?;
            w.get_ref().sync_data()?;
        }
        Ok(())
    }
}

impl Drop for Disk {
    fn drop(&mut self) {
        let _ = self.sync();
        let _ = fs::remove_file(self.dir.join("lock"));
    }
}

const CATALOG: &str = "catalog.fsx";
const UNTYPED: &str = "untyped.fsx";
const TYPED: &str = "typed.fsx";
const ADJACENCY: &str = "adjacency.fsx";

pub fn class_file_name(class: &str) -> String {
    let mut out = String::from("class_");
    for b in class.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            let _ = write!(out, "%{b:02X}");
        }
    }
    out.push_str(".fsx");
    out
}

pub struct Store {
    disk: Option<Disk>,
    taxonomy: Taxonomy,
    terms: HashMap<String, Term>,
    insertion: Vec<String>,
    untyped: Vec<String>,
    typed: Vec<TypedEntry>,
    typed_index: HashMap<String, usize>,
    classes: BTreeMap<String, KbClass>,
    class_order: Vec<String>,
    adjacency: Adjacency,
}

impl Default for Store {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            disk: None,
            taxonomy: Taxonomy::new(),
            terms: HashMap::new(),
            insertion: Vec::new(),
            untyped: Vec::new(),
            typed: Vec::new(),
            typed_index: HashMap::new(),
            classes: BTreeMap::new(),
            class_order: Vec::new(),
            adjacency: Adjacency::default(),
        }
    }

    /// Opens (creating if needed) the store in `dir` and replays its logs.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        match OpenOptions::new().write(true).create_new(true).open(dir.join("lock")) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => return Err(StoreError::Locked(dir)),
            Err(e) => return Err(e.into()),
        }
        let mut store = Store::in_memory();
        // the lock is released by Disk's Drop, also when replay fails
        store.disk = Some(Disk {
            dir: dir.clone(),
            writers: HashMap::new(),
        });
        store.replay(&dir)?;
        Ok(store)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.disk.as_ref().map(|d| d.dir.as_path())
    }

    fn replay(&mut self, dir: &Path) -> Result<(), StoreError> {
        for_each_line(dir, CATALOG, |s| {
            let items = s.as_list().unwrap_or(&[]);
            match items {
                [Sexp::Symbol(h), name, ty] if h == "class" => {
                    let name = sexp::string_from(name, "class name")?.to_string();
                    let ty = sexp::type_from(ty)?;
                    self.class_order.push(name.clone());
                    self.classes.insert(name.clone(), KbClass::new(name, ty));
                }
                [Sexp::Symbol(h), a, b] if h == "same-as" => {
                    self.taxonomy
                        .same_as(&sexp::concept_from(a)?, &sexp::concept_from(b)?)
                        .map_err(|e| SyntaxError::new(e.to_string()))?;
                }
                [Sexp::Symbol(h), a, b] if h == "is-a" => {
                    self.taxonomy
                        .add_is_a(&sexp::concept_from(a)?, &sexp::concept_from(b)?)
                        .map_err(|e| SyntaxError::new(e.to_string()))?;
                }
                _ => return Err(SyntaxError::new("unrecognized catalog entry")),
            }
            Ok(())
        })?;
        for_each_line(dir, UNTYPED, |s| match s.as_list() {
            Some([Sexp::Symbol(h), name, t]) if h == "term" => {
                let name = sexp::string_from(name, "term name")?.to_string();
                let t = sexp::term_from(t)?;
                self.adjacency.add(&name, &t.aliases());
                self.insertion.push(name.clone());
                self.untyped.push(name.clone());
                self.terms.insert(name, t);
                Ok(())
            }
            _ => Err(SyntaxError::new("unrecognized term entry")),
        })?;
        let mut promoted = Vec::new();
        for_each_line(dir, TYPED, |s| match s.as_list() {
            Some([Sexp::Symbol(h), name, ty]) if h == "typed" => {
                let name = sexp::string_from(name, "term name")?.to_string();
                let ty = sexp::type_from(ty)?;
                let term = self
                    .terms
                    .get(&name)
                    .cloned()
                    .ok_or_else(|| SyntaxError::new(format!("typed entry for unknown term {name}")))?;
                self.typed_index.insert(name.clone(), self.typed.len());
                promoted.push(name.clone());
                self.typed.push(TypedEntry { name, term, ty });
                Ok(())
            }
            _ => Err(SyntaxError::new("unrecognized typed entry")),
        })?;
        let promoted: BTreeSet<String> = promoted.into_iter().collect();
        self.untyped.retain(|n| !promoted.contains(n));
        let mut recorded = Adjacency::default();
        for_each_line(dir, ADJACENCY, |s| match s.as_list() {
            Some([Sexp::Symbol(h), name, refs @ ..]) if h == "adj" => {
                let name = sexp::string_from(name, "term name")?;
                let refs = refs
                    .iter()
                    .map(|r| sexp::string_from(r, "term name").map(str::to_string))
                    .collect::<Result<BTreeSet<_>, _>>()?;
                recorded.add(name, &refs);
                Ok(())
            }
            _ => Err(SyntaxError::new("unrecognized adjacency entry")),
        })?;
        for (name, refs) in &self.adjacency.forward {
            if !refs.is_empty() && recorded.forward(name) != Some(refs) {
                return Err(StoreError::Corrupt {
                    file: ADJACENCY.into(),
                    line: 0,
                    message: format!("adjacency of {name} disagrees with its term"),
                });
            }
        }
        let names: Vec<String> = self.class_order.clone();
        for class in names {
            let file = class_file_name(&class);
            let kb = self.classes.get_mut(&class).expect("catalogued");
            for_each_line(dir, &file, |s| match s.as_list() {
                Some([Sexp::Symbol(h), name, t]) if h == "member" => {
                    let name = sexp::string_from(name, "member name")?.to_string();
                    kb.push(name, sexp::term_from(t)?);
                    Ok(())
                }
                Some([Sexp::Symbol(h), rest @ ..]) if h == "watermark" => {
                    kb.watermark = watermark_from(rest)?;
                    Ok(())
                }
                _ => Err(SyntaxError::new("unrecognized class entry")),
            })?;
        }
        Ok(())
    }

    fn append(&mut self, file: &str, line: String) -> Result<(), StoreError> {
        if let Some(disk) = &mut self.disk {
            disk.append(file, &line)?;
        }
        Ok(())
    }

    /// Flushes and fsyncs every log written since the last call.
    pub fn sync(&mut self) -> Result<(), StoreError> {
        if let Some(disk) = &mut self.disk {
            disk.sync()?;
        }
        Ok(())
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn same_as(&mut self, a: &Concept, b: &Concept) -> Result<(), StoreError> {
        self.taxonomy.same_as(a, b)?;
        let mut line = String::from("(same-as ");
        sexp::write_concept(a, &mut line);
        line.push(' ');
        sexp::write_concept(b, &mut line);
        line.push(')');
        self.append(CATALOG, line)
    }

    pub fn add_is_a(&mut self, child: &Concept, parent: &Concept) -> Result<(), StoreError> {
        self.taxonomy.add_is_a(child, parent)?;
        let mut line = String::from("(is-a ");
        sexp::write_concept(child, &mut line);
        line.push(' ');
        sexp::write_concept(parent, &mut line);
        line.push(')');
        self.append(CATALOG, line)
    }

    /// Adds a named term to the untyped collection.
    pub fn abox_insert(&mut self, name: &str, t: Term) -> Result<(), StoreError> {
        if self.terms.contains_key(name) {
            return Err(StoreError::DuplicateTerm(name.to_string()));
        }
        let refs = t.aliases();
        if self.adjacency.closes_cycle(name, &refs) {
            return Err(StoreError::AliasCycle(name.to_string()));
        }
        let mut line = String::from("(term ");
        sexp::write_str(name, &mut line);
        line.push(' ');
        sexp::write_term(&t, &mut line);
        line.push(')');
        self.append(UNTYPED, line)?;
        if !refs.is_empty() {
            let mut line = String::from("(adj ");
            sexp::write_str(name, &mut line);
            for r in &refs {
                line.push(' ');
                sexp::write_str(r, &mut line);
            }
            line.push(')');
            self.append(ADJACENCY, line)?;
        }
        self.adjacency.add(name, &refs);
        self.insertion.push(name.to_string());
        self.untyped.push(name.to_string());
        self.terms.insert(name.to_string(), t);
        Ok(())
    }

    /// Fails when `name` is taken or `ty` mentions an unknown class.
    pub fn check_new_class(&self, name: &str, ty: &Type) -> Result<(), StoreError> {
        if self.classes.contains_key(name) {
            return Err(StoreError::DuplicateClass(name.to_string()));
        }
        match ty.referenced_aliases().into_iter().find(|a| !self.classes.contains_key(a)) {
            Some(missing) => Err(StoreError::DanglingAlias {
                class: name.to_string(),
                missing,
            }),
            None => Ok(()),
        }
    }

    /// Registers a class. Every class it mentions must already exist.
    pub fn mk_kb_class(&mut self, name: &str, ty: Type) -> Result<(), StoreError> {
        self.check_new_class(name, &ty)?;
        let mut line = String::from("(class ");
        sexp::write_str(name, &mut line);
        line.push(' ');
        sexp::write_type(&ty, &mut line);
        line.push(')');
        self.append(CATALOG, line)?;
        self.class_order.push(name.to_string());
        self.classes
            .insert(name.to_string(), KbClass::new(name.to_string(), ty));
        Ok(())
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.get(name)
    }

    pub fn has_term(&self, name: &str) -> bool {
        self.terms.contains_key(name)
    }

    /// Term names in insertion order.
    pub fn term_names(&self) -> &[String] {
        &self.insertion
    }

    pub fn untyped(&self) -> &[String] {
        &self.untyped
    }

    pub fn typed(&self) -> &[TypedEntry] {
        &self.typed
    }

    pub fn typed_entry(&self, name: &str) -> Option<&TypedEntry> {
        self.typed_index.get(name).map(|&i| &self.typed[i])
    }

    pub fn type_of(&self, name: &str) -> Option<&Type> {
        self.typed_entry(name).map(|e| &e.ty)
    }

    /// Moves the untyped terms named in `batch` (with their inferred types)
    /// to the typed collection, in the given order.
    pub fn promote(&mut self, batch: Vec<(String, Type)>) -> Result<(), StoreError> {
        if batch.is_empty() {
            return Ok(());
        }
        let moved: BTreeSet<&str> = batch.iter().map(|(n, _)| n.as_str()).collect();
        let pending: BTreeSet<&str> = self.untyped.iter().map(String::as_str).collect();
        if let Some((name, _)) = batch.iter().find(|(n, _)| !pending.contains(n.as_str())) {
            return Err(StoreError::UnknownTerm(name.clone()));
        }
        self.untyped.retain(|n| !moved.contains(n.as_str()));
        for (name, ty) in batch {
            let mut line = String::from("(typed ");
            sexp::write_str(&name, &mut line);
            line.push(' ');
            sexp::write_type(&ty, &mut line);
            line.push(')');
            self.append(TYPED, line)?;
            let term = self.terms[&name].clone();
            self.typed_index.insert(name.clone(), self.typed.len());
            self.typed.push(TypedEntry { name, term, ty });
        }
        Ok(())
    }

    pub fn class(&self, name: &str) -> Result<&KbClass, StoreError> {
        self.classes
            .get(name)
            .ok_or_else(|| StoreError::UnknownClass(name.to_string()))
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Class names in registration order.
    pub fn class_names(&self) -> &[String] {
        &self.class_order
    }

    /// Appends a member unless a structurally equal one exists. Returns the
    /// name the member was stored under.
    pub fn add_member(&mut self, class: &str, name: String, term: Term) -> Result<Option<String>, StoreError> {
        let kb = self
            .classes
            .get_mut(class)
            .ok_or_else(|| StoreError::UnknownClass(class.to_string()))?;
        let Some(stored) = kb.push(name, term) else {
            return Ok(None);
        };
        let mut line = String::from("(member ");
        sexp::write_str(&stored, &mut line);
        line.push(' ');
        sexp::write_term(&kb.members.last().expect("just pushed").term, &mut line);
        line.push(')');
        self.append(&class_file_name(class), line)?;
        Ok(Some(stored))
    }

    pub fn set_watermark(&mut self, class: &str, wm: Watermark) -> Result<(), StoreError> {
        let kb = self
            .classes
            .get_mut(class)
            .ok_or_else(|| StoreError::UnknownClass(class.to_string()))?;
        if kb.watermark == wm {
            return Ok(());
        }
        let mut line = format!("(watermark {} {} (", wm.typed, wm.epoch);
        for (i, (dep, n)) in wm.deps.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push('(');
            sexp::write_str(dep, &mut line);
            let _ = write!(line, " {n})");
        }
        line.push_str("))");
        kb.watermark = wm;
        self.append(&class_file_name(class), line)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    /// Names directly referenced by `name`.
    pub fn contains(&self, name: &str) -> Result<BTreeSet<String>, StoreError> {
        if !self.has_term(name) {
            return Err(StoreError::UnknownTerm(name.to_string()));
        }
        Ok(self.adjacency.forward(name).cloned().unwrap_or_default())
    }

    /// Names of the terms that reference `name`.
    pub fn contained_by(&self, name: &str) -> Result<BTreeSet<String>, StoreError> {
        if !self.has_term(name) {
            return Err(StoreError::UnknownTerm(name.to_string()));
        }
        Ok(self.adjacency.reverse(name).cloned().unwrap_or_default())
    }

    /// Members of `class` reachable from `start` by an undirected
    /// containment path of length 1..=k. The start term itself is excluded.
    pub fn nearest(&self, k: usize, start: &str, class: &str) -> Result<BTreeSet<String>, StoreError> {
        if !self.has_term(start) {
            return Err(StoreError::UnknownTerm(start.to_string()));
        }
        let kb = self.class(class)?;
        let mut found = BTreeSet::new();
        let mut dist: HashMap<&str, usize> = HashMap::from([(start, 0)]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n];
            if d > 0 && kb.index_of(n).is_some() {
                found.insert(n.to_string());
            }
            if d == k {
                continue;
            }
            let fwd = self.adjacency.forward(n).into_iter().flatten();
            let rev = self.adjacency.reverse(n).into_iter().flatten();
            for next in fwd.chain(rev) {
                if !dist.contains_key(next.as_str()) && self.has_term(next) {
                    dist.insert(next, d + 1);
                    queue.push_back(next);
                }
            }
        }
        Ok(found)
    }

    /// A canonical rendering of the whole store state, for comparisons.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (a, b) in self.taxonomy.same_as_pairs() {
            let _ = writeln!(out, "same-as {a} {b}");
        }
        for (a, b) in self.taxonomy.is_a_edges() {
            let _ = writeln!(out, "is-a {a} {b}");
        }
        for name in &self.insertion {
            let _ = writeln!(out, "term {name:?} {}", self.terms[name]);
        }
        for name in &self.untyped {
            let _ = writeln!(out, "untyped {name:?}");
        }
        for e in &self.typed {
            let _ = writeln!(out, "typed {:?} {}", e.name, e.ty);
        }
        let mut adj: Vec<_> = self.adjacency.forward.iter().collect();
        adj.sort();
        for (n, refs) in adj {
            let _ = writeln!(out, "adj {n:?} {refs:?}");
        }
        for name in &self.class_order {
            let kb = &self.classes[name];
            let _ = writeln!(out, "class {name:?} {} {:?}", kb.definition, kb.watermark);
            for m in &kb.members {
                let _ = writeln!(out, "  member {:?} {}", m.name, m.term);
            }
        }
        out
    }
}

fn watermark_from(rest: &[Sexp]) -> Result<Watermark, SyntaxError> {
    let num = |s: &Sexp| -> Result<u64, SyntaxError> {
        s.as_symbol()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| SyntaxError::new("expected a count in watermark"))
    };
    match rest {
        [typed, epoch, deps] => {
            let mut out = Watermark {
                typed: num(typed)? as usize,
                epoch: num(epoch)?,
                deps: BTreeMap::new(),
            };
            for d in deps.as_list().ok_or_else(|| SyntaxError::new("expected dependency list"))? {
                match d.as_list() {
                    Some([name, n]) => {
                        out.deps
                            .insert(sexp::string_from(name, "class name")?.to_string(), num(n)? as usize);
                    }
                    _ => return Err(SyntaxError::new("malformed dependency watermark")),
                }
            }
            Ok(out)
        }
        _ => Err(SyntaxError::new("malformed watermark")),
    }
}

fn for_each_line(
    dir: &Path,
    file: &str,
    mut f: impl FnMut(&Sexp) -> Result<(), SyntaxError>,
) -> Result<(), StoreError> {
    let path = dir.join(file);
    let reader = match File::open(&path) {
        Ok(h) => BufReader::new(h),
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |e: SyntaxError| StoreError::Corrupt {
            file: file.to_string(),
            line: i + 1,
            message: e.to_string(),
        };
        let s = sexp::read(&line).map_err(corrupt)?;
        f(&s).map_err(corrupt)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::mk_concept;
    use crate::term::build::*;

    fn small_corpus(store: &mut Store) {
        let tax = Taxonomy::new();
        store
            .abox_insert("joe", record(&tax, vec![("name", str("Joe")), ("birth_date", str("1984-06-27"))]).unwrap())
            .unwrap();
        store
            .abox_insert("sue", record(&tax, vec![("name", str("Sue")), ("dob", str("1941-12-07"))]).unwrap())
            .unwrap();
        store
            .abox_insert("t1", record(&tax, vec![("amount", num(500)), ("type", atom("check").unwrap())]).unwrap())
            .unwrap();
        store
            .abox_insert("o1", triple("orig-of", term_name("joe"), term_name("t1")).unwrap())
            .unwrap();
        store
            .abox_insert("r1", triple("recv-of", term_name("sue"), term_name("t1")).unwrap())
            .unwrap();
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn containment() {
        let mut s = Store::in_memory();
        small_corpus(&mut s);
        assert_eq!(s.contains("o1").unwrap(), set(&["joe", "t1"]));
        assert_eq!(s.contained_by("t1").unwrap(), set(&["o1", "r1"]));
        assert_eq!(s.contains("joe").unwrap(), set(&[]));
        assert!(matches!(s.contains("nobody"), Err(StoreError::UnknownTerm(_))));
    }

    #[test]
    fn duplicate_and_cycle() {
        let mut s = Store::in_memory();
        s.abox_insert("a", list(vec![term_name("b")])).unwrap();
        assert!(matches!(s.abox_insert("a", num(1)), Err(StoreError::DuplicateTerm(_))));
        assert!(matches!(
            s.abox_insert("b", list(vec![term_name("a")])),
            Err(StoreError::AliasCycle(_))
        ));
        assert!(matches!(
            s.abox_insert("c", list(vec![term_name("c")])),
            Err(StoreError::AliasCycle(_))
        ));
    }

    #[test]
    fn class_registration() {
        let mut s = Store::in_memory();
        let tax = Taxonomy::new();
        s.mk_kb_class("person", record_ty(&tax, vec![("name", str_ty())]).unwrap())
            .unwrap();
        assert!(matches!(
            s.mk_kb_class("person", str_ty()),
            Err(StoreError::DuplicateClass(_))
        ));
        assert!(matches!(
            s.mk_kb_class("x", type_name("nonexistent")),
            Err(StoreError::DanglingAlias { .. })
        ));
        assert_eq!(s.class("person").unwrap().watermark(), &Watermark::default());
    }

    #[test]
    fn nearest_walks_undirected() {
        let mut s = Store::in_memory();
        small_corpus(&mut s);
        s.mk_kb_class("person", str_ty()).unwrap();
        s.add_member("person", "joe".into(), str("j")).unwrap();
        s.add_member("person", "sue".into(), str("s")).unwrap();
        assert_eq!(s.nearest(4, "joe", "person").unwrap(), set(&["sue"]));
        assert_eq!(s.nearest(2, "joe", "person").unwrap(), set(&[]));
        assert_eq!(s.nearest(0, "joe", "person").unwrap(), set(&[]));
        s.mk_kb_class("empty", str_ty()).unwrap();
        assert!(s.nearest(10, "joe", "empty").unwrap().is_empty());
    }

    #[test]
    fn members_are_keyed_by_name() {
        let mut s = Store::in_memory();
        s.mk_kb_class("c", str_ty()).unwrap();
        assert_eq!(s.add_member("c", "a".into(), str("x")).unwrap(), Some("a".into()));
        assert_eq!(s.add_member("c", "a".into(), str("x")).unwrap(), None);
        // equal values under different names are different objects
        assert_eq!(s.add_member("c", "b".into(), str("x")).unwrap(), Some("b".into()));
        assert_eq!(s.add_member("c", "a".into(), str("y")).unwrap(), Some("a~2".into()));
        assert_eq!(s.add_member("c", "a".into(), str("y")).unwrap(), None);
    }

    #[test]
    fn reopen_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let snap;
        {
            let mut s = Store::open(dir.path()).unwrap();
            assert!(matches!(Store::open(dir.path()), Err(StoreError::Locked(_))));
            small_corpus(&mut s);
            s.same_as(&mk_concept("dob").unwrap(), &mk_concept("birth date").unwrap())
                .unwrap();
            s.mk_kb_class("person", str_ty()).unwrap();
            s.promote(vec![("joe".into(), str_ty()), ("t1".into(), num_ty())]).unwrap();
            s.add_member("person", "joe".into(), str("j")).unwrap();
            s.set_watermark(
                "person",
                Watermark {
                    typed: 2,
                    epoch: 1,
                    deps: BTreeMap::from([("x".to_string(), 3)]),
                },
            )
            .unwrap();
            s.sync().unwrap();
            snap = s.snapshot();
        }
        let s = Store::open(dir.path()).unwrap();
        assert_eq!(s.snapshot(), snap);
        assert_eq!(s.untyped(), &["sue".to_string(), "o1".into(), "r1".into()]);
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(UNTYPED), "(term \"a\" (num 1))\n(term \"b\"\n").unwrap();
        match Store::open(dir.path()) {
            Err(StoreError::Corrupt { line, .. }) => assert_eq!(line, 2),
            Err(e) => panic!("unexpected {e}"),
            Ok(_) => panic!("expected corruption"),
        }
        // the failed open released its lock
        assert!(!dir.path().join("lock").exists());
    }
}
