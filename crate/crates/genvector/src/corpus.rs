//! Corpus and embedding containers.

use std::collections::HashMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Interned concept vocabulary: id <-> string, insertion-ordered.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Vocab {
    names: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, index }
    }

    /// Interns `name`, returning its id.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Rebuilds the name->id map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
    }
}

/// Per-user documents of concept tokens plus the shared vocabulary.
///
/// Documents keep token order and repetitions; `docs[u]` holds concept ids
/// into `vocab`. Every document is non-empty by construction (the user topic
/// is drawn uniformly from the document's token topics, which needs at least
/// one token).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    users: Vec<String>,
    docs: Vec<Vec<usize>>,
    vocab: Vocab,
    #[serde(skip)]
    user_index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from (user id, token strings) records.
    ///
    /// Rejects duplicate user ids and empty documents.
    pub fn from_records<S: AsRef<str>>(records: Vec<(String, Vec<S>)>) -> Result<Self> {
        let mut corpus = Corpus {
            users: Vec::with_capacity(records.len()),
            docs: Vec::with_capacity(records.len()),
            vocab: Vocab::new(),
            user_index: HashMap::new(),
        };
        for (user, tokens) in records {
            if tokens.is_empty() {
                return Err(Error::EmptyDocument(user));
            }
            if corpus.user_index.contains_key(&user) {
                return Err(Error::DuplicateUser(user));
            }
            let doc = tokens
                .iter()
                .map(|t| corpus.vocab.intern(t.as_ref()))
                .collect();
            corpus.user_index.insert(user.clone(), corpus.users.len());
            corpus.users.push(user);
            corpus.docs.push(doc);
        }
        Ok(corpus)
    }

    /// Assembles a corpus from already-interned ids. `vocab` may contain
    /// concepts no document uses; every document must be non-empty and only
    /// reference known ids.
    pub fn from_parts(users: Vec<String>, docs: Vec<Vec<usize>>, vocab: Vocab) -> Result<Self> {
        if users.len() != docs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} users vs {} docs",
                users.len(),
                docs.len()
            )));
        }
        for (u, doc) in users.iter().zip(&docs) {
            if doc.is_empty() {
                return Err(Error::EmptyDocument(u.clone()));
            }
            if let Some(&w) = doc.iter().find(|&&w| w >= vocab.len()) {
                return Err(Error::UnknownConcept(format!("id {w} out of vocab range")));
            }
        }
        let user_index: HashMap<String, usize> = users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
        if user_index.len() != users.len() {
            let dup = users
                .iter()
                .enumerate()
                .find(|(i, u)| user_index[*u] != *i)
                .map(|(_, u)| u.clone())
                .unwrap_or_default();
            return Err(Error::DuplicateUser(dup));
        }
        Ok(Corpus {
            users,
            docs,
            vocab,
            user_index,
        })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn user_id(&self, name: &str) -> Option<usize> {
        self.user_index.get(name).copied()
    }

    pub fn user_name(&self, u: usize) -> &str {
        &self.users[u]
    }

    pub fn doc(&self, u: usize) -> &[usize] {
        &self.docs[u]
    }

    pub fn docs(&self) -> &[Vec<usize>] {
        &self.docs
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Occurrence count of concept `w` in user `u`'s document.
    pub fn doc_concept_count(&self, u: usize, w: usize) -> usize {
        self.docs[u].iter().filter(|&&t| t == w).count()
    }

    /// Distinct concepts of `u`'s document in ascending id order.
    pub fn distinct_concepts(&self, u: usize) -> Vec<usize> {
        let mut ids = self.docs[u].clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn rebuild_indexes(&mut self) {
        self.vocab.rebuild_index();
        self.user_index = self
            .users
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();
    }
}

/// Dense user and concept embeddings, mutable during training.
///
/// Row `u` of `user` aligns with `Corpus::users`; row `w` of `concept`
/// aligns with the vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStore<T> {
    pub user: Array2<T>,
    pub concept: Array2<T>,
}

impl<T: Scalar> EmbeddingStore<T> {
    pub fn new(user: Array2<T>, concept: Array2<T>) -> Self {
        Self { user, concept }
    }

    pub fn user_dim(&self) -> usize {
        self.user.ncols()
    }

    pub fn concept_dim(&self) -> usize {
        self.concept.ncols()
    }

    /// Checks row counts against the corpus and that every entry is finite.
    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.user.nrows() != corpus.num_users() {
            return Err(Error::DimensionMismatch(format!(
                "{} user embeddings for {} users",
                self.user.nrows(),
                corpus.num_users()
            )));
        }
        if self.concept.nrows() != corpus.vocab().len() {
            return Err(Error::DimensionMismatch(format!(
                "{} concept embeddings for {} vocab concepts",
                self.concept.nrows(),
                corpus.vocab().len()
            )));
        }
        if self.user_dim() < 1 || self.concept_dim() < 1 {
            return Err(Error::DimensionMismatch(
                "embedding dimensions must be >= 1".into(),
            ));
        }
        if self.user.iter().any(|v| !v.is_finite()) || self.concept.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding store"));
        }
        Ok(())
    }
}
