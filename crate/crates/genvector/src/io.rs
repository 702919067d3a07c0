//! File formats: line-delimited corpus records, word2vec-style text
//! embeddings, prediction and truth files, the trace CSV, and the JSON
//! model snapshot.
//!
//! Parsers reject malformed input outright; nothing is silently repaired.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmbeddingStore};
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::params::ModelParams;
use crate::sampler::{TopicState, TracePoint, TrainedModel};
use crate::scalar::Scalar;
use crate::stats::TopicSuffStats;

/// One corpus line: a user id and its ordered concept tokens.
#[derive(Debug, Serialize, Deserialize)]
struct CorpusRecord {
    user: String,
    concepts: Vec<String>,
}

/// Reads a corpus from line-delimited JSON records
/// `{"user": ..., "concepts": [...]}`.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    read_corpus(BufReader::new(File::open(path)?))
}

pub fn read_corpus(reader: impl BufRead) -> Result<Corpus> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::CorpusParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if rec.concepts.is_empty() {
            return Err(Error::EmptyDocument(rec.user));
        }
        records.push((rec.user, rec.concepts));
    }
    Corpus::from_records(records)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_corpus(corpus, &mut out)
}

pub fn write_corpus(corpus: &Corpus, out: &mut impl Write) -> Result<()> {
    for (u, doc) in corpus.docs().iter().enumerate() {
        let rec = CorpusRecord {
            user: corpus.user_name(u).to_string(),
            concepts: doc
                .iter()
                .map(|&w| corpus.vocab().name(w).to_string())
                .collect(),
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads word2vec text-format embeddings ("count dim" header, then one
/// `token v1 .. v_dim` line each) and aligns the rows to `expected` order.
/// Tokens beyond `expected` are tolerated; missing ones are an error naming
/// the token.
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    expected: &[String],
) -> Result<Array2<T>> {
    read_embeddings(BufReader::new(File::open(path)?), expected)
}

pub fn read_embeddings<T: Scalar>(reader: impl BufRead, expected: &[String]) -> Result<Array2<T>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::EmbeddingParse("empty file".into()))??;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .ok_or_else(|| Error::EmbeddingParse("missing token count in header".into()))?
        .parse()
        .map_err(|e| Error::EmbeddingParse(format!("bad token count: {e}")))?;
    let dim: usize = parts
        .next()
        .ok_or_else(|| Error::EmbeddingParse("missing dimension in header".into()))?
        .parse()
        .map_err(|e| Error::EmbeddingParse(format!("bad dimension: {e}")))?;
    if parts.next().is_some() {
        return Err(Error::EmbeddingParse("header has trailing fields".into()));
    }
    if dim == 0 {
        return Err(Error::EmbeddingParse("dimension must be >= 1".into()));
    }

    let mut by_token: std::collections::HashMap<String, Vec<T>> =
        std::collections::HashMap::with_capacity(count);
    let mut rows = 0usize;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| Error::EmbeddingParse(format!("line {}: empty record", i + 2)))?;
        let values: Vec<T> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map(T::of)
                    .map_err(|e| Error::EmbeddingParse(format!("line {}: {e}", i + 2)))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::EmbeddingParse(format!(
                "line {}: {} values for declared dimension {dim}",
                i + 2,
                values.len()
            )));
        }
        if by_token.insert(token.to_string(), values).is_some() {
            return Err(Error::EmbeddingParse(format!(
                "line {}: duplicate token {token:?}",
                i + 2
            )));
        }
    }
    if rows != count {
        return Err(Error::EmbeddingParse(format!(
            "header declares {count} rows but file has {rows}"
        )));
    }

    let mut matrix = Array2::zeros((expected.len(), dim));
    for (i, token) in expected.iter().enumerate() {
        let row = by_token
            .get(token)
            .ok_or_else(|| Error::MissingEmbedding(token.clone()))?;
        for (e, &v) in row.iter().enumerate() {
            matrix[[i, e]] = v;
        }
    }
    Ok(matrix)
}

pub fn save_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    tokens: &[String],
    matrix: &Array2<T>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{} {}", tokens.len(), matrix.ncols())?;
    for (token, row) in tokens.iter().zip(matrix.outer_iter()) {
        write!(out, "{token}")?;
        for v in row.iter() {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Prediction file: per user one line, `user<TAB>concept:logscore,...`.
pub fn write_predictions<T: Scalar>(
    corpus: &Corpus,
    skg: &crate::predictor::SocialKnowledgeGraph<T>,
    out: &mut impl Write,
) -> Result<()> {
    for (u, ranking) in skg.per_user.iter().enumerate() {
        write!(out, "{}\t", corpus.user_name(u))?;
        for (i, (w, score)) in ranking.iter().enumerate() {
            if i > 0 {
                write!(out, ",")?;
            }
            write!(out, "{}:{}", corpus.vocab().name(*w), score)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Parses a prediction file back into (user, [(concept, logscore)]) rows.
/// The score sits after the last ':' so concept names may contain colons.
pub fn read_predictions(reader: impl BufRead) -> Result<Vec<(String, Vec<(String, f64)>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (user, rest) = line.split_once('\t').ok_or_else(|| Error::CorpusParse {
            line: i + 1,
            message: "expected `user<TAB>pairs`".into(),
        })?;
        let mut pairs = Vec::new();
        if !rest.is_empty() {
            for pair in rest.split(',') {
                let (concept, score) = pair.rsplit_once(':').ok_or_else(|| Error::CorpusParse {
                    line: i + 1,
                    message: format!("expected `concept:logscore`, got {pair:?}"),
                })?;
                let score: f64 = score.parse().map_err(|e| Error::CorpusParse {
                    line: i + 1,
                    message: format!("bad score {score:?}: {e}"),
                })?;
                pairs.push((concept.to_string(), score));
            }
        }
        out.push((user.to_string(), pairs));
    }
    Ok(out)
}

/// Truth file: same line-delimited record shape as the corpus, holding each
/// user's relevant concept set.
pub fn write_truth(users: &[String], relevant: &[Vec<String>], out: &mut impl Write) -> Result<()> {
    for (user, concepts) in users.iter().zip(relevant) {
        let rec = CorpusRecord {
            user: user.clone(),
            concepts: concepts.clone(),
        };
        serde_json::to_writer(&mut *out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_truth(reader: impl BufRead) -> Result<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::CorpusParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((rec.user, rec.concepts));
    }
    Ok(out)
}

/// Trace CSV with the fixed header `iteration,seconds,log_likelihood`.
pub fn write_trace(trace: &[TracePoint], out: &mut impl Write) -> Result<()> {
    writeln!(out, "iteration,seconds,log_likelihood")?;
    for p in trace {
        writeln!(out, "{},{},{}", p.iteration, p.seconds, p.log_likelihood)?;
    }
    Ok(())
}

pub const SNAPSHOT_VERSION: u32 = 1;

/// Self-describing serialized model: hyperparameters, tables, averaged
/// parameters, final assignments, embeddings, and the trace. Loading
/// reproduces bit-identical rankings.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelSnapshot<T> {
    pub format_version: u32,
    pub hyper: Hyperparameters<T>,
    pub users: Vec<String>,
    pub vocab: Vec<String>,
    pub docs: Vec<Vec<usize>>,
    pub params: ModelParams<T>,
    pub z: Vec<Vec<usize>>,
    pub y: Vec<usize>,
    pub user_embeddings: Array2<T>,
    pub concept_embeddings: Array2<T>,
    pub trace: Vec<TracePoint>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl<T: Scalar> ModelSnapshot<T> {
    pub fn from_model(model: &TrainedModel<T>) -> Self {
        Self {
            format_version: SNAPSHOT_VERSION,
            hyper: model.hyper.clone(),
            users: model.corpus.users().to_vec(),
            vocab: model.corpus.vocab().names().to_vec(),
            docs: model.corpus.docs().to_vec(),
            params: model.params.clone(),
            z: model.state.z.clone(),
            y: model.state.y.clone(),
            user_embeddings: model.embeddings.user.clone(),
            concept_embeddings: model.embeddings.concept.clone(),
            trace: model.trace.clone(),
        }
    }

    pub fn into_model(self) -> Result<TrainedModel<T>> {
        if self.format_version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotVersion {
                found: self.format_version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let vocab = crate::corpus::Vocab::from_names(self.vocab);
        let corpus = Corpus::from_parts(self.users, self.docs, vocab)?;
        let embeddings = EmbeddingStore::new(self.user_embeddings, self.concept_embeddings);
        embeddings.validate(&corpus)?;
        if self.z.len() != corpus.num_users() || self.y.len() != corpus.num_users() {
            return Err(Error::Snapshot(
                "assignment shapes disagree with corpus".into(),
            ));
        }
        let stats = TopicSuffStats::from_assignments(
            &corpus,
            &embeddings,
            &self.z,
            &self.y,
            self.hyper.num_topics,
        );
        let state = TopicState {
            z: self.z,
            y: self.y,
            stats,
        };
        Ok(TrainedModel {
            corpus,
            params: self.params,
            state,
            embeddings,
            hyper: self.hyper,
            trace: self.trace,
        })
    }
}

pub fn save_model<T: Scalar>(model: &TrainedModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let snapshot = ModelSnapshot::from_model(model);
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &snapshot)?;
    out.flush()?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<TrainedModel<T>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let probe: VersionProbe = serde_json::from_str(&text)
        .map_err(|e| Error::Snapshot(format!("unreadable snapshot: {e}")))?;
    if probe.format_version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotVersion {
            found: probe.format_version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let snapshot: ModelSnapshot<T> = serde_json::from_str(&text)
        .map_err(|e| Error::Snapshot(format!("corrupt snapshot: {e}")))?;
    snapshot.into_model()
}
