//! Collapsed Gibbs sampling of the topic assignments and the alternating
//! training loop.
//!
//! A sweep resamples every token topic z from its collapsed conditional,
//! then every user topic y, documents in index order, with the
//! remove -> score -> sample -> add discipline keeping the sufficient
//! statistics exact. Training alternates sweeps with expectation read-outs
//! and (after burn-in) gradient-ascent refinement of the embeddings.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmbeddingStore};
use crate::error::{Error, Result};
use crate::hyper::{Hyperparameters, NormalGammaPrior};
use crate::normal_gamma::beta_from_moments;
use crate::optimizer::{log_likelihood, update_embeddings};
use crate::params::{ModelParams, ReadoutAccumulator};
use crate::scalar::{log_sum_exp, Scalar};
use crate::stats::{ModalityDelta, MomentsView, TopicSuffStats};

/// Full recompute cadence bounding incremental float drift.
const REBUILD_EVERY_SWEEPS: usize = 10;

/// Topic assignments plus the sufficient statistics kept consistent with
/// them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicState<T> {
    /// z[u][m]: topic of the m-th token in document u.
    pub z: Vec<Vec<usize>>,
    /// y[u]: topic of user u.
    pub y: Vec<usize>,
    pub stats: TopicSuffStats<T>,
}

impl<T: Scalar> TopicState<T> {
    /// Uniform z; y drawn uniformly from the document's initial z values.
    pub fn init_random<R: Rng>(
        corpus: &Corpus,
        embeddings: &EmbeddingStore<T>,
        num_topics: usize,
        rng: &mut R,
    ) -> Self {
        let z: Vec<Vec<usize>> = corpus
            .docs()
            .iter()
            .map(|doc| {
                doc.iter()
                    .map(|_| rng.random_range(0..num_topics))
                    .collect()
            })
            .collect();
        let y: Vec<usize> = z
            .iter()
            .map(|zu| zu[rng.random_range(0..zu.len())])
            .collect();
        let stats = TopicSuffStats::from_assignments(corpus, embeddings, &z, &y, num_topics);
        Self { z, y, stats }
    }

    /// Recomputes the statistics from assignments and current embedding
    /// values.
    pub fn rebuild_stats(&mut self, corpus: &Corpus, embeddings: &EmbeddingStore<T>) {
        let num_topics = self.stats.num_topics();
        self.stats =
            TopicSuffStats::from_assignments(corpus, embeddings, &self.z, &self.y, num_topics);
    }

    pub fn num_topics(&self) -> usize {
        self.stats.num_topics()
    }
}

/// Log-gamma lookup at half-integer offsets from a fixed alpha0, so the
/// inner scoring loop never calls ln_gamma.
pub(crate) struct LnGammaHalfSteps<T> {
    table: Vec<T>,
}

impl<T: Scalar> LnGammaHalfSteps<T> {
    pub fn new(alpha0: T, max_points: usize) -> Self {
        let table = (0..=max_points + 1)
            .map(|j| (alpha0 + T::of(j as f64 * 0.5)).ln_gamma())
            .collect();
        Self { table }
    }

    /// ln Gamma(alpha0 + (m+1)/2) - ln Gamma(alpha0 + m/2)
    fn ratio(&self, m: usize) -> T {
        self.table[m + 1] - self.table[m]
    }
}

/// Sum over dimensions of the log posterior predictive of `row` against
/// topic `topic`; algebraically identical to summing `log_gprime` per
/// dimension with the per-topic factors hoisted out of the loop.
fn ln_predictive_row<T: Scalar>(
    view: &MomentsView<'_, T>,
    topic: usize,
    row: &[T],
    tau: &NormalGammaPrior<T>,
    lgamma: Option<&LnGammaHalfSteps<T>>,
) -> T {
    let half = T::of(0.5);
    let ln_two_pi = T::of(core::f64::consts::TAU.ln());
    let m = view.point_count(topic);
    let mf = T::of_usize(m);
    let alpha_m = tau.alpha0 + half * mf;
    let alpha_m1 = alpha_m + half;
    let ln_gamma_ratio = match lgamma {
        Some(t) => t.ratio(m),
        None => alpha_m1.ln_gamma() - alpha_m.ln_gamma(),
    };
    let kappa_m = tau.kappa0 + mf;
    let per_dim =
        ln_gamma_ratio + half * (kappa_m.ln() - (kappa_m + T::one()).ln()) - half * ln_two_pi;

    let mut acc = per_dim * T::of_usize(row.len());
    for (e, &x) in row.iter().enumerate() {
        let (sum, sumsq) = view.sums(topic, e);
        let beta_m = beta_from_moments(m, sum, sumsq, tau);
        let beta_m1 = beta_from_moments(m + 1, sum + x, sumsq + x * x, tau);
        acc += alpha_m * beta_m.ln() - alpha_m1 * beta_m1.ln();
    }
    acc
}

/// Normalizes log-scores into a simplex vector in place.
fn normalize_scores<T: Scalar>(scores: &mut [T]) {
    let lse = log_sum_exp(scores);
    for s in scores.iter_mut() {
        *s = (*s - lse).exp();
    }
}

/// Conditional over the user topic y_u: proportional to (n_u^t + l) times
/// the per-dimension predictive of the user's embedding.
///
/// Pre: user u's embedding has been removed from the user-modality
/// statistics.
fn y_scores<T: Scalar>(
    user_view: &MomentsView<'_, T>,
    doc_counts: &[u32],
    user_row: &[T],
    hyper: &Hyperparameters<T>,
    lgamma: Option<&LnGammaHalfSteps<T>>,
) -> Vec<T> {
    let mut scores: Vec<T> = (0..hyper.num_topics)
        .map(|t| {
            let smoothed = T::of_usize(doc_counts[t] as usize) + hyper.laplace_l;
            smoothed.ln() + ln_predictive_row(user_view, t, user_row, &hyper.tau_r, lgamma)
        })
        .collect();
    normalize_scores(&mut scores);
    scores
}

/// Conditional over a token topic z_um: proportional to
/// (n_u^{y_u} + [t = y_u] + l)(n_u^t + alpha) times the per-dimension
/// predictive of the concept's embedding.
///
/// Pre: the token has been removed from the concept-modality statistics and
/// from the document/concept counts, so `doc_counts` excludes it.
fn z_scores<T: Scalar>(
    concept_view: &MomentsView<'_, T>,
    doc_counts: &[u32],
    y_u: usize,
    concept_row: &[T],
    hyper: &Hyperparameters<T>,
    lgamma: Option<&LnGammaHalfSteps<T>>,
) -> Vec<T> {
    let support = T::of_usize(doc_counts[y_u] as usize);
    let mut scores: Vec<T> = (0..hyper.num_topics)
        .map(|t| {
            let coupling = if t == y_u {
                support + T::one()
            } else {
                support
            } + hyper.laplace_l;
            let dm = T::of_usize(doc_counts[t] as usize) + hyper.alpha;
            coupling.ln()
                + dm.ln()
                + ln_predictive_row(concept_view, t, concept_row, &hyper.tau_k, lgamma)
        })
        .collect();
    normalize_scores(&mut scores);
    scores
}

/// Conditional distribution of user u's topic given everything else.
///
/// Pre: `state` must have u's embedding temporarily removed from the
/// user-modality statistics.
pub fn conditional_y<T: Scalar>(
    state: &TopicState<T>,
    embeddings: &EmbeddingStore<T>,
    hyper: &Hyperparameters<T>,
    u: usize,
) -> Vec<T> {
    let row: Vec<T> = embeddings.user.row(u).to_vec();
    y_scores(
        &MomentsView::plain(&state.stats.user_stats),
        &state.stats.doc_topic[u],
        &row,
        hyper,
        None,
    )
}

/// Conditional distribution of token (u, m)'s topic given everything else.
///
/// Pre: `state` must have the token temporarily removed from the
/// concept-modality statistics and the n_u / n_w counts.
pub fn conditional_z<T: Scalar>(
    state: &TopicState<T>,
    embeddings: &EmbeddingStore<T>,
    hyper: &Hyperparameters<T>,
    corpus: &Corpus,
    u: usize,
    m: usize,
) -> Vec<T> {
    let w = corpus.doc(u)[m];
    let row: Vec<T> = embeddings.concept.row(w).to_vec();
    z_scores(
        &MomentsView::plain(&state.stats.concept_stats),
        &state.stats.doc_topic[u],
        state.y[u],
        &row,
        hyper,
        None,
    )
}

/// Inverse-CDF draw with a fixed accumulation order.
fn sample_categorical<T: Scalar, R: Rng>(probs: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0f64;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One exact single-threaded sweep: all z in document order, then all y.
pub fn sweep<T: Scalar, R: Rng>(
    state: &mut TopicState<T>,
    corpus: &Corpus,
    embeddings: &EmbeddingStore<T>,
    hyper: &Hyperparameters<T>,
    tables: &SamplerTables<T>,
    rng: &mut R,
) -> Result<()> {
    let mut row_buf: Vec<T> = Vec::new();
    for (u, doc) in corpus.docs().iter().enumerate() {
        for (m, &w) in doc.iter().enumerate() {
            let old = state.z[u][m];
            row_buf.clear();
            row_buf.extend(embeddings.concept.row(w).iter().copied());
            state.stats.doc_topic[u][old] -= 1;
            state.stats.concept_topic[[w, old]] -= 1;
            state
                .stats
                .concept_stats
                .remove_point(old, embeddings.concept.row(w))?;
            let probs = z_scores(
                &MomentsView::plain(&state.stats.concept_stats),
                &state.stats.doc_topic[u],
                state.y[u],
                &row_buf,
                hyper,
                Some(&tables.concept),
            );
            let new = sample_categorical(&probs, rng);
            state.z[u][m] = new;
            state.stats.doc_topic[u][new] += 1;
            state.stats.concept_topic[[w, new]] += 1;
            state
                .stats
                .concept_stats
                .add_point(new, embeddings.concept.row(w))?;
        }
    }
    for u in 0..corpus.num_users() {
        let old = state.y[u];
        row_buf.clear();
        row_buf.extend(embeddings.user.row(u).iter().copied());
        state
            .stats
            .user_stats
            .remove_point(old, embeddings.user.row(u))?;
        let probs = y_scores(
            &MomentsView::plain(&state.stats.user_stats),
            &state.stats.doc_topic[u],
            &row_buf,
            hyper,
            Some(&tables.user),
        );
        let new = sample_categorical(&probs, rng);
        state.y[u] = new;
        state
            .stats
            .user_stats
            .add_point(new, embeddings.user.row(u))?;
    }
    Ok(())
}

/// Pre-sized log-gamma tables for both modalities.
pub struct SamplerTables<T> {
    user: LnGammaHalfSteps<T>,
    concept: LnGammaHalfSteps<T>,
}

impl<T: Scalar> SamplerTables<T> {
    pub fn new(corpus: &Corpus, hyper: &Hyperparameters<T>) -> Self {
        Self {
            user: LnGammaHalfSteps::new(hyper.tau_r.alpha0, corpus.num_users()),
            concept: LnGammaHalfSteps::new(hyper.tau_k.alpha0, corpus.num_tokens()),
        }
    }
}

/// Merge barriers per parallel sweep phase. A stage freezes the shared
/// statistics, partitions its slice of documents across workers, and merges
/// the deltas before the next stage, keeping the scoring views at most a
/// stage behind.
const PARALLEL_STAGES: usize = 20;

/// Approximate parallel sweep: documents are partitioned across `workers`;
/// each worker scores against a frozen snapshot of the shared modality
/// statistics overlaid with its own deltas. Sweeps are split into a few
/// staged barriers (a whole-sweep snapshot lets workers break topic
/// symmetry divergently while assignments are still sorting). Per-document
/// counts are owned by exactly one worker and merged statistics are exact
/// for the new assignments; only the scoring views are approximate. Worker
/// RNG streams derive from (seed, sweep, stage, worker), so the result is
/// independent of thread scheduling.
#[allow(clippy::too_many_arguments)]
pub fn sweep_parallel<T: Scalar>(
    state: &mut TopicState<T>,
    corpus: &Corpus,
    embeddings: &EmbeddingStore<T>,
    hyper: &Hyperparameters<T>,
    tables: &SamplerTables<T>,
    seed: u64,
    sweep_index: u64,
    workers: usize,
) -> Result<()> {
    let num_docs = corpus.num_users();
    let workers = workers.max(1).min(num_docs);
    let num_topics = hyper.num_topics;
    let stage_bounds = chunk_bounds(num_docs, PARALLEL_STAGES.min(num_docs));

    // Phase 1: token topics.
    for (stage, range) in stage_bounds.windows(2).enumerate() {
        let (lo, hi) = (range[0], range[1]);
        if lo == hi {
            continue;
        }
        let bounds = chunk_bounds(hi - lo, workers.min(hi - lo));
        let concept_base = &state.stats.concept_stats;
        let y = &state.y;
        let mut z_rest: &mut [Vec<usize>] = &mut state.z[lo..hi];
        let mut dt_rest: &mut [Vec<u32>] = &mut state.stats.doc_topic[lo..hi];
        let mut tasks = Vec::new();
        for widx in 0..bounds.len() - 1 {
            let len = bounds[widx + 1] - bounds[widx];
            let (z_chunk, zr) = z_rest.split_at_mut(len);
            let (dt_chunk, dr) = dt_rest.split_at_mut(len);
            z_rest = zr;
            dt_rest = dr;
            tasks.push((widx, lo + bounds[widx], z_chunk, dt_chunk));
        }

        let results: Vec<(ModalityDelta<T>, Vec<(usize, usize, usize)>)> =
            std::thread::scope(|scope| {
                let handles: Vec<_> = tasks
                    .into_iter()
                    .map(|(widx, doc_offset, z_chunk, dt_chunk)| {
                        scope.spawn(move || {
                            let mut rng =
                                worker_rng(seed, sweep_index, stage as u64, widx as u64, 0);
                            let mut delta =
                                ModalityDelta::zeros(num_topics, embeddings.concept_dim());
                            // (concept, old topic, new topic) moves for the
                            // shared concept-topic counts.
                            let mut moves = Vec::new();
                            let mut row_buf: Vec<T> = Vec::new();
                            for (local, (zu, dtu)) in
                                z_chunk.iter_mut().zip(dt_chunk.iter_mut()).enumerate()
                            {
                                let u = doc_offset + local;
                                let doc = corpus.doc(u);
                                for (m, &w) in doc.iter().enumerate() {
                                    let old = zu[m];
                                    row_buf.clear();
                                    row_buf.extend(embeddings.concept.row(w).iter().copied());
                                    dtu[old] -= 1;
                                    delta.remove_point(old, embeddings.concept.row(w));
                                    let view = MomentsView::overlaid(concept_base, &delta);
                                    let probs = z_scores(
                                        &view,
                                        dtu,
                                        y[u],
                                        &row_buf,
                                        hyper,
                                        Some(&tables.concept),
                                    );
                                    let new = sample_categorical(&probs, &mut rng);
                                    zu[m] = new;
                                    dtu[new] += 1;
                                    delta.add_point(new, embeddings.concept.row(w));
                                    if new != old {
                                        moves.push((w, old, new));
                                    }
                                }
                            }
                            (delta, moves)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            });

        for (delta, moves) in &results {
            state.stats.concept_stats.merge_delta(delta)?;
            for &(w, old, new) in moves {
                state.stats.concept_topic[[w, old]] -= 1;
                state.stats.concept_topic[[w, new]] += 1;
            }
        }
    }

    // Phase 2: user topics.
    for (stage, range) in stage_bounds.windows(2).enumerate() {
        let (lo, hi) = (range[0], range[1]);
        if lo == hi {
            continue;
        }
        let bounds = chunk_bounds(hi - lo, workers.min(hi - lo));
        let user_base = &state.stats.user_stats;
        let doc_topic = &state.stats.doc_topic;
        let mut y_rest: &mut [usize] = &mut state.y[lo..hi];
        let mut tasks = Vec::new();
        for widx in 0..bounds.len() - 1 {
            let len = bounds[widx + 1] - bounds[widx];
            let (y_chunk, yr) = y_rest.split_at_mut(len);
            y_rest = yr;
            tasks.push((widx, lo + bounds[widx], y_chunk));
        }

        let deltas: Vec<ModalityDelta<T>> = std::thread::scope(|scope| {
            let handles: Vec<_> = tasks
                .into_iter()
                .map(|(widx, user_offset, y_chunk)| {
                    scope.spawn(move || {
                        let mut rng = worker_rng(seed, sweep_index, stage as u64, widx as u64, 1);
                        let mut delta = ModalityDelta::zeros(num_topics, embeddings.user_dim());
                        let mut row_buf: Vec<T> = Vec::new();
                        for (local, yu) in y_chunk.iter_mut().enumerate() {
                            let u = user_offset + local;
                            row_buf.clear();
                            row_buf.extend(embeddings.user.row(u).iter().copied());
                            delta.remove_point(*yu, embeddings.user.row(u));
                            let view = MomentsView::overlaid(user_base, &delta);
                            let probs =
                                y_scores(&view, &doc_topic[u], &row_buf, hyper, Some(&tables.user));
                            let new = sample_categorical(&probs, &mut rng);
                            *yu = new;
                            delta.add_point(new, embeddings.user.row(u));
                        }
                        delta
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });

        for delta in &deltas {
            state.stats.user_stats.merge_delta(delta)?;
        }
    }

    Ok(())
}

fn chunk_bounds(n: usize, chunks: usize) -> Vec<usize> {
    let chunks = chunks.max(1);
    let base = n / chunks;
    let extra = n % chunks;
    let mut bounds = Vec::with_capacity(chunks + 1);
    bounds.push(0);
    for c in 0..chunks {
        bounds.push(bounds[c] + base + usize::from(c < extra));
    }
    bounds
}

fn worker_rng(seed: u64, sweep_index: u64, stage: u64, worker: u64, phase: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((sweep_index << 24) | (stage << 20) | (phase << 19) | (worker + 1));
    rng
}

/// One point of the likelihood-versus-time trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub seconds: f64,
    pub log_likelihood: f64,
}

/// Everything training produces: averaged read-out parameters, the final
/// assignments and statistics, the (possibly refined) embeddings, and the
/// post-burn-in likelihood trace. Immutable and shareable once built.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub corpus: Corpus,
    pub params: ModelParams<T>,
    pub state: TopicState<T>,
    pub embeddings: EmbeddingStore<T>,
    pub hyper: Hyperparameters<T>,
    pub trace: Vec<TracePoint>,
}

/// Trains the model: `max_iter` outer iterations of `latent_iters` sweeps,
/// reading parameters out every `readout_period` sweeps after burn-in and
/// averaging all read-outs, with one embedding update per post-burn-in outer
/// iteration. `threads = 1` is the exact, fully deterministic mode.
pub fn run_inference<T: Scalar>(
    corpus: Corpus,
    embeddings: EmbeddingStore<T>,
    hyper: Hyperparameters<T>,
    threads: usize,
) -> Result<TrainedModel<T>> {
    run_inference_observed(corpus, embeddings, hyper, threads, |_, _| {})
}

/// `run_inference` with a hook receiving (log-likelihood before, after)
/// around every embedding update, in f64.
pub fn run_inference_observed<T: Scalar>(
    corpus: Corpus,
    mut embeddings: EmbeddingStore<T>,
    hyper: Hyperparameters<T>,
    threads: usize,
    mut on_embed_update: impl FnMut(f64, f64),
) -> Result<TrainedModel<T>> {
    hyper.validate()?;
    if corpus.num_users() == 0 {
        return Err(Error::Config("corpus has no users".into()));
    }
    embeddings.validate(&corpus)?;

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut state = TopicState::init_random(&corpus, &embeddings, hyper.num_topics, &mut rng);
    let tables = SamplerTables::new(&corpus, &hyper);

    let mut readouts = ReadoutAccumulator::new();
    let mut trace = Vec::with_capacity(hyper.max_iter - hyper.burn_in);
    let mut sweep_index = 0u64;
    let mut sweeps_since_rebuild = 0usize;
    let mut sweeps_since_readout = 0usize;
    let start = Instant::now();

    for outer in 1..=hyper.max_iter {
        for _ in 0..hyper.latent_iters {
            if threads <= 1 {
                sweep(&mut state, &corpus, &embeddings, &hyper, &tables, &mut rng)?;
            } else {
                sweep_parallel(
                    &mut state,
                    &corpus,
                    &embeddings,
                    &hyper,
                    &tables,
                    hyper.seed,
                    sweep_index,
                    threads,
                )?;
            }
            sweep_index += 1;
            sweeps_since_rebuild += 1;
            if sweeps_since_rebuild >= REBUILD_EVERY_SWEEPS {
                state.rebuild_stats(&corpus, &embeddings);
                sweeps_since_rebuild = 0;
            }
            if outer > hyper.burn_in {
                sweeps_since_readout += 1;
                if sweeps_since_readout >= hyper.readout_period {
                    readouts.push(ModelParams::read_out(&state.stats, &hyper));
                    sweeps_since_readout = 0;
                }
            }
        }

        if outer > hyper.burn_in {
            let params = readouts.mean()?;
            let report = if hyper.embed_updates {
                let before = log_likelihood(&state, &params, &embeddings);
                update_embeddings(&state, &params, &mut embeddings, &hyper)?;
                state.rebuild_stats(&corpus, &embeddings);
                sweeps_since_rebuild = 0;
                let after = log_likelihood(&state, &params, &embeddings);
                on_embed_update(before.total.to_f64_lossy(), after.total.to_f64_lossy());
                after
            } else {
                log_likelihood(&state, &params, &embeddings)
            };
            trace.push(TracePoint {
                iteration: outer,
                seconds: start.elapsed().as_secs_f64(),
                log_likelihood: report.total.to_f64_lossy(),
            });
        }
    }

    let params = readouts.mean()?;
    Ok(TrainedModel {
        corpus,
        params,
        state,
        embeddings,
        hyper,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_gamma::log_gprime;
    use crate::stats::Modality;
    use ndarray::Array2;

    fn tiny_setup() -> (Corpus, EmbeddingStore<f64>, Hyperparameters<f64>) {
        let corpus = Corpus::from_records(vec![
            ("u0".to_string(), vec!["a", "b", "a"]),
            ("u1".to_string(), vec!["c", "b"]),
        ])
        .unwrap();
        let user = Array2::from_shape_vec((2, 2), vec![0.3, -1.0, 2.0, 0.7]).unwrap();
        let concept = Array2::from_shape_vec((3, 2), vec![1.0, 0.2, -0.4, 1.5, 0.8, -2.0]).unwrap();
        let mut hyper = Hyperparameters::new(3);
        hyper.tau_r = NormalGammaPrior::new(2.0, 1.5, 0.8, 0.1).unwrap();
        hyper.tau_k = NormalGammaPrior::new(1.5, 2.0, 1.2, -0.2).unwrap();
        (corpus, EmbeddingStore::new(user, concept), hyper)
    }

    #[test]
    fn single_topic_conditionals_are_degenerate() {
        let (corpus, emb, mut hyper) = tiny_setup();
        hyper.num_topics = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut state = TopicState::init_random(&corpus, &emb, 1, &mut rng);

        state
            .stats
            .user_stats
            .remove_point(state.y[0], emb.user.row(0))
            .unwrap();
        let py = conditional_y(&state, &emb, &hyper, 0);
        assert_eq!(py, vec![1.0]);
        state
            .stats
            .user_stats
            .add_point(state.y[0], emb.user.row(0))
            .unwrap();

        let before = state.clone();
        let tables = SamplerTables::new(&corpus, &hyper);
        sweep(&mut state, &corpus, &emb, &hyper, &tables, &mut rng).unwrap();
        assert_eq!(state.z, before.z);
        assert_eq!(state.y, before.y);
    }

    #[test]
    fn conditionals_are_simplex_vectors() {
        let (corpus, emb, hyper) = tiny_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = TopicState::init_random(&corpus, &emb, hyper.num_topics, &mut rng);

        let w = corpus.doc(0)[1];
        let old = state.z[0][1];
        state.stats.doc_topic[0][old] -= 1;
        state.stats.concept_topic[[w, old]] -= 1;
        state
            .stats
            .concept_stats
            .remove_point(old, emb.concept.row(w))
            .unwrap();
        let pz = conditional_z(&state, &emb, &hyper, &corpus, 0, 1);
        let sum: f64 = pz.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(pz.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn smoothing_keeps_empty_topics_reachable() {
        let (corpus, emb, hyper) = tiny_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = TopicState::init_random(&corpus, &emb, hyper.num_topics, &mut rng);
        // Force every token of doc 0 to topic 0, so topics 1 and 2 have
        // zero document count.
        for m in 0..corpus.doc(0).len() {
            let w = corpus.doc(0)[m];
            let old = state.z[0][m];
            state.stats.doc_topic[0][old] -= 1;
            state.stats.concept_topic[[w, old]] -= 1;
            state
                .stats
                .concept_stats
                .remove_point(old, emb.concept.row(w))
                .unwrap();
            state.z[0][m] = 0;
            state.stats.doc_topic[0][0] += 1;
            state.stats.concept_topic[[w, 0]] += 1;
            state
                .stats
                .concept_stats
                .add_point(0, emb.concept.row(w))
                .unwrap();
        }
        state
            .stats
            .user_stats
            .remove_point(state.y[0], emb.user.row(0))
            .unwrap();
        let py = conditional_y(&state, &emb, &hyper, 0);
        assert!(py[1] > 0.0 && py[2] > 0.0);
    }

    #[test]
    fn hoisted_scoring_matches_log_gprime_composition() {
        let (corpus, emb, hyper) = tiny_setup();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let state = TopicState::init_random(&corpus, &emb, hyper.num_topics, &mut rng);
        let tables = SamplerTables::new(&corpus, &hyper);
        let row: Vec<f64> = emb.user.row(1).to_vec();
        for t in 0..hyper.num_topics {
            let direct: f64 = (0..row.len())
                .map(|e| {
                    log_gprime(&state.stats, Modality::User, t, e, row[e], &hyper.tau_r).unwrap()
                })
                .sum();
            for table in [None, Some(&tables.user)] {
                let hoisted = ln_predictive_row(
                    &MomentsView::plain(&state.stats.user_stats),
                    t,
                    &row,
                    &hyper.tau_r,
                    table,
                );
                assert!(
                    (direct - hoisted).abs() < 1e-10,
                    "t={t}: {direct} vs {hoisted}"
                );
            }
        }
    }

    #[test]
    fn sweep_keeps_stats_consistent_and_is_deterministic() {
        let (corpus, emb, hyper) = tiny_setup();
        let tables = SamplerTables::new(&corpus, &hyper);

        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = TopicState::init_random(&corpus, &emb, hyper.num_topics, &mut rng);
            for _ in 0..5 {
                sweep(&mut state, &corpus, &emb, &hyper, &tables, &mut rng).unwrap();
            }
            state
        };
        let a = run(123);
        let b = run(123);
        assert_eq!(a.z, b.z);
        assert_eq!(a.y, b.y);

        let rebuilt = TopicSuffStats::from_assignments(&corpus, &emb, &a.z, &a.y, hyper.num_topics);
        assert!(a.stats.relative_deviation(&rebuilt) < 1e-8);
    }

    #[test]
    fn parallel_sweep_merges_to_exact_stats() {
        let (corpus, emb, hyper) = tiny_setup();
        let tables = SamplerTables::new(&corpus, &hyper);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = TopicState::init_random(&corpus, &emb, hyper.num_topics, &mut rng);
        for s in 0..4 {
            sweep_parallel(&mut state, &corpus, &emb, &hyper, &tables, 9, s, 2).unwrap();
        }
        let rebuilt =
            TopicSuffStats::from_assignments(&corpus, &emb, &state.z, &state.y, hyper.num_topics);
        assert!(state.stats.relative_deviation(&rebuilt) < 1e-8);
    }

    #[test]
    fn run_inference_validates_inputs() {
        let (corpus, emb, mut hyper) = tiny_setup();
        hyper.burn_in = hyper.max_iter; // t_b < t_m violated
        assert!(run_inference(corpus.clone(), emb.clone(), hyper, 1).is_err());

        let (_, emb, hyper) = tiny_setup();
        let empty = Corpus::from_records::<&str>(vec![]).unwrap();
        assert!(run_inference(empty, emb, hyper, 1).is_err());
    }

    #[test]
    fn trace_has_one_row_per_post_burn_in_iteration() {
        let (corpus, emb, mut hyper) = tiny_setup();
        hyper.burn_in = 2;
        hyper.max_iter = 5;
        hyper.latent_iters = 2;
        hyper.readout_period = 1;
        let model = run_inference(corpus, emb, hyper.clone(), 1).unwrap();
        assert_eq!(model.trace.len(), hyper.max_iter - hyper.burn_in);
        for pair in model.trace.windows(2) {
            assert!(pair[1].iteration > pair[0].iteration);
            assert!(pair[1].seconds >= pair[0].seconds);
        }
    }
}
