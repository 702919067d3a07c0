//! Concept scoring and social-knowledge-graph construction.
//!
//! A concept's log-score for a user mixes, over topics, the user's averaged
//! topic proportions, the smoothed interaction count, and the Gaussian
//! densities of both embeddings under the topic's read-out parameters:
//!
//! score(u, w) = log sum_t exp( log theta_u^t + log(n_u^w + l)
//!               + sum_e log N(f^r_ue; mu^r_te, lambda^r_te)
//!               + sum_e log N(f^k_we; mu^k_te, lambda^k_te) )

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::TrainedModel;
use crate::scalar::{ln_normal_pdf, log_sum_exp, Scalar};

/// Which concepts compete in a user's ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateSet {
    /// Distinct concepts of the user's own document.
    #[default]
    DocConcepts,
    /// Every vocabulary concept; unseen ones survive only through the
    /// Laplace term.
    FullVocab,
}

/// Per-user ranked top-k concept lists with log-scores, aligned with the
/// corpus user order. Scores are non-increasing within each list and ties
/// break toward the smaller concept id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialKnowledgeGraph<T> {
    pub per_user: Vec<Vec<(usize, T)>>,
}

impl<T> SocialKnowledgeGraph<T> {
    pub fn num_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn ranking(&self, u: usize) -> &[(usize, T)] {
        &self.per_user[u]
    }
}

/// Sorts (concept, score) pairs by descending score, ascending id on ties.
pub(crate) fn sort_ranking<T: Scalar>(scored: &mut [(usize, T)]) {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are never NaN")
            .then_with(|| a.0.cmp(&b.0))
    });
}

impl<T: Scalar> TrainedModel<T> {
    /// Log-score of concept `w` for user `u` under the averaged read-out
    /// parameters. Pure in (model, u, w).
    pub fn score(&self, u: usize, w: usize) -> Result<T> {
        if u >= self.corpus.num_users() {
            return Err(Error::UnknownUser(format!("index {u}")));
        }
        if w >= self.corpus.vocab().len() {
            return Err(Error::UnknownConcept(format!("index {w}")));
        }
        let count = T::of_usize(self.corpus.doc_concept_count(u, w));
        Ok(self.score_inner(u, w, count))
    }

    fn score_inner(&self, u: usize, w: usize, count: T) -> T {
        let ln_interaction = (count + self.hyper.laplace_l).ln();
        let p = &self.params;
        let user_row = self.embeddings.user.row(u);
        let concept_row = self.embeddings.concept.row(w);
        let terms: Vec<T> = (0..p.num_topics())
            .map(|t| {
                let mut s = p.theta[[u, t]].ln() + ln_interaction;
                for (e, &f) in user_row.iter().enumerate() {
                    s += ln_normal_pdf(f, p.mu_r[[t, e]], p.lambda_r[[t, e]]);
                }
                for (e, &f) in concept_row.iter().enumerate() {
                    s += ln_normal_pdf(f, p.mu_k[[t, e]], p.lambda_k[[t, e]]);
                }
                s
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Ranks `u`'s candidate concepts by score, truncated to `k`.
    pub fn rank_user(
        &self,
        u: usize,
        k: usize,
        candidates: CandidateSet,
    ) -> Result<Vec<(usize, T)>> {
        if k < 1 {
            return Err(Error::Config("top-k must be >= 1".into()));
        }
        if u >= self.corpus.num_users() {
            return Err(Error::UnknownUser(format!("index {u}")));
        }
        let pool: Vec<usize> = match candidates {
            CandidateSet::DocConcepts => self.corpus.distinct_concepts(u),
            CandidateSet::FullVocab => (0..self.corpus.vocab().len()).collect(),
        };
        let mut scored: Vec<(usize, T)> = pool
            .into_iter()
            .map(|w| {
                let count = T::of_usize(self.corpus.doc_concept_count(u, w));
                (w, self.score_inner(u, w, count))
            })
            .collect();
        sort_ranking(&mut scored);
        scored.truncate(k);
        Ok(scored)
    }

    /// Ranks every user; deterministic for a fixed model.
    pub fn build_skg(&self, k: usize, candidates: CandidateSet) -> Result<SocialKnowledgeGraph<T>> {
        let per_user = (0..self.corpus.num_users())
            .map(|u| self.rank_user(u, k, candidates))
            .collect::<Result<_>>()?;
        Ok(SocialKnowledgeGraph { per_user })
    }
}
