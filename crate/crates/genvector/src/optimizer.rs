//! Data log-likelihood under fixed parameters and gradient-ascent
//! refinement of the embeddings.
//!
//! L sums, over every user and every topic, the per-dimension Gaussian
//! penalty of the user's embedding, plus the concept penalties weighted by
//! n_w^t. The user term deliberately sums over all topics unweighted — that
//! is the form whose gradients the update uses; `UserTermMode` exposes the
//! assignment-weighted alternative for comparison.

use ndarray::Array2;

use crate::corpus::EmbeddingStore;
use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::params::ModelParams;
use crate::sampler::TopicState;
use crate::scalar::Scalar;

/// How the user term of L treats topics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UserTermMode {
    /// Sum over all topics, unweighted.
    #[default]
    AllTopics,
    /// Only the user's assigned topic y_u contributes.
    AssignedTopic,
}

/// The two-term log-likelihood and its total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodReport<T> {
    pub total: T,
    pub user_term: T,
    pub concept_term: T,
}

/// Evaluates L with the default (all-topics) user term.
pub fn log_likelihood<T: Scalar>(
    state: &TopicState<T>,
    params: &ModelParams<T>,
    embeddings: &EmbeddingStore<T>,
) -> LikelihoodReport<T> {
    log_likelihood_with(state, params, embeddings, UserTermMode::AllTopics)
}

pub fn log_likelihood_with<T: Scalar>(
    state: &TopicState<T>,
    params: &ModelParams<T>,
    embeddings: &EmbeddingStore<T>,
    mode: UserTermMode,
) -> LikelihoodReport<T> {
    let half = T::of(0.5);
    let num_topics = params.num_topics();

    let mut user_term = T::zero();
    for (u, row) in embeddings.user.outer_iter().enumerate() {
        match mode {
            UserTermMode::AllTopics => {
                for t in 0..num_topics {
                    for (e, &f) in row.iter().enumerate() {
                        let d = f - params.mu_r[[t, e]];
                        user_term -= half * params.lambda_r[[t, e]] * d * d;
                    }
                }
            }
            UserTermMode::AssignedTopic => {
                let t = state.y[u];
                for (e, &f) in row.iter().enumerate() {
                    let d = f - params.mu_r[[t, e]];
                    user_term -= half * params.lambda_r[[t, e]] * d * d;
                }
            }
        }
    }

    let mut concept_term = T::zero();
    for (w, row) in embeddings.concept.outer_iter().enumerate() {
        for t in 0..num_topics {
            let n_wt = state.stats.concept_topic[[w, t]];
            if n_wt == 0 {
                continue;
            }
            let weight = T::of_usize(n_wt as usize);
            for (e, &f) in row.iter().enumerate() {
                let d = f - params.mu_k[[t, e]];
                concept_term -= weight * half * params.lambda_k[[t, e]] * d * d;
            }
        }
    }

    LikelihoodReport {
        total: user_term + concept_term,
        user_term,
        concept_term,
    }
}

/// Gradients of L with respect to both embedding matrices:
///
/// dL/df^r_ue = sum_t -lambda^r_te (f^r_ue - mu^r_te)
/// dL/df^k_we = sum_t n_w^t (-lambda^k_te)(f^k_we - mu^k_te)
pub fn gradients<T: Scalar>(
    state: &TopicState<T>,
    params: &ModelParams<T>,
    embeddings: &EmbeddingStore<T>,
) -> (Array2<T>, Array2<T>) {
    gradients_with(state, params, embeddings, UserTermMode::AllTopics)
}

pub fn gradients_with<T: Scalar>(
    state: &TopicState<T>,
    params: &ModelParams<T>,
    embeddings: &EmbeddingStore<T>,
    mode: UserTermMode,
) -> (Array2<T>, Array2<T>) {
    let num_topics = params.num_topics();
    let mut user_grad = Array2::zeros(embeddings.user.dim());
    for (u, row) in embeddings.user.outer_iter().enumerate() {
        match mode {
            UserTermMode::AllTopics => {
                for t in 0..num_topics {
                    for (e, &f) in row.iter().enumerate() {
                        user_grad[[u, e]] -= params.lambda_r[[t, e]] * (f - params.mu_r[[t, e]]);
                    }
                }
            }
            UserTermMode::AssignedTopic => {
                let t = state.y[u];
                for (e, &f) in row.iter().enumerate() {
                    user_grad[[u, e]] -= params.lambda_r[[t, e]] * (f - params.mu_r[[t, e]]);
                }
            }
        }
    }

    let mut concept_grad = Array2::zeros(embeddings.concept.dim());
    for (w, row) in embeddings.concept.outer_iter().enumerate() {
        for t in 0..num_topics {
            let n_wt = state.stats.concept_topic[[w, t]];
            if n_wt == 0 {
                continue;
            }
            let weight = T::of_usize(n_wt as usize);
            for (e, &f) in row.iter().enumerate() {
                concept_grad[[w, e]] -=
                    weight * params.lambda_k[[t, e]] * (f - params.mu_k[[t, e]]);
            }
        }
    }
    (user_grad, concept_grad)
}

/// Performs `embed_steps` ascent steps f <- f + lr * grad(L); gradients are
/// recomputed at each step. Leaves z, y and the topic counts untouched; the
/// caller refreshes the moment statistics afterwards since they embed the
/// moved values.
pub fn update_embeddings<T: Scalar>(
    state: &TopicState<T>,
    params: &ModelParams<T>,
    embeddings: &mut EmbeddingStore<T>,
    hyper: &Hyperparameters<T>,
) -> Result<()> {
    for _ in 0..hyper.embed_steps {
        let (user_grad, concept_grad) = gradients(state, params, embeddings);
        if user_grad.iter().any(|g| !g.is_finite()) || concept_grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("embedding gradient"));
        }
        embeddings
            .user
            .zip_mut_with(&user_grad, |f, &g| *f += hyper.embed_lr * g);
        embeddings
            .concept
            .zip_mut_with(&concept_grad, |f, &g| *f += hyper.embed_lr * g);
    }
    Ok(())
}
