//! Evaluation metrics and the frequency baseline.

use std::collections::HashSet;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::predictor::{sort_ranking, SocialKnowledgeGraph};
use crate::scalar::Scalar;

/// Mean over users of |top-k ∩ truth| / min(k, |ranking|); users with an
/// empty truth set are excluded.
pub fn precision_at_k<T: Scalar>(
    skg: &SocialKnowledgeGraph<T>,
    truth: &[Vec<usize>],
    k: usize,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if skg.num_users() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rankings vs {} truth sets",
            skg.num_users(),
            truth.len()
        )));
    }
    let mut total = 0.0;
    let mut evaluable = 0usize;
    for (ranking, truth_u) in skg.per_user.iter().zip(truth) {
        if truth_u.is_empty() {
            continue;
        }
        let truth_set: HashSet<usize> = truth_u.iter().copied().collect();
        let denom = ranking.len().min(k);
        if denom == 0 {
            continue;
        }
        let hits = ranking
            .iter()
            .take(k)
            .filter(|(w, _)| truth_set.contains(w))
            .count();
        total += hits as f64 / denom as f64;
        evaluable += 1;
    }
    if evaluable == 0 {
        return Err(Error::NoEvaluableUsers);
    }
    Ok(total / evaluable as f64)
}

/// CountKG: per user, document concepts ranked by occurrence count with
/// ascending-id tie-break. The "score" is the raw count; embeddings play no
/// role.
pub fn frequency_baseline<T: Scalar>(corpus: &Corpus, k: usize) -> Result<SocialKnowledgeGraph<T>> {
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    let per_user = corpus
        .docs()
        .iter()
        .enumerate()
        .map(|(u, _)| {
            let mut scored: Vec<(usize, T)> = corpus
                .distinct_concepts(u)
                .into_iter()
                .map(|w| (w, T::of_usize(corpus.doc_concept_count(u, w))))
                .collect();
            sort_ranking(&mut scored);
            scored.truncate(k);
            scored
        })
        .collect();
    Ok(SocialKnowledgeGraph { per_user })
}

/// Clustering accuracy maximized over topic-label permutations, computed as
/// an exact assignment over the T x T confusion matrix (bitmask DP, so T is
/// capped at 20).
pub fn topic_recovery_accuracy(pred: &[usize], truth: &[usize], num_topics: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predicted labels vs {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Config("no labels to compare".into()));
    }
    if num_topics == 0 || num_topics > 20 {
        return Err(Error::Config(format!(
            "num_topics {num_topics} outside supported range 1..=20"
        )));
    }
    let mut confusion = vec![vec![0u64; num_topics]; num_topics];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= num_topics || t >= num_topics {
            return Err(Error::Config(format!(
                "label out of range: pred {p}, true {t}, num_topics {num_topics}"
            )));
        }
        confusion[p][t] += 1;
    }
    // dp[mask]: best total matching predicted labels 0..popcount(mask) to
    // the true labels in mask.
    let full = 1usize << num_topics;
    let mut dp = vec![0u64; full];
    for mask in 1..full {
        let row = (mask as u32).count_ones() as usize - 1;
        let mut best = 0;
        for t in 0..num_topics {
            if mask & (1 << t) != 0 {
                best = best.max(dp[mask ^ (1 << t)] + confusion[row][t]);
            }
        }
        dp[mask] = best;
    }
    Ok(dp[full - 1] as f64 / pred.len() as f64)
}
