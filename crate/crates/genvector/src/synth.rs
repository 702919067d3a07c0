//! Forward sampling from the generative process, for ground-truth testing.
//!
//! Each vocabulary concept gets a single true topic and one embedding drawn
//! from that topic's Gaussians; documents then emit concepts whose true
//! topic matches the token's sampled z. This keeps one embedding per
//! concept (the data model) while preserving the likelihood structure of
//! the per-token generative story.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::corpus::{Corpus, EmbeddingStore, Vocab};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Knobs of the synthetic generator. `topic_mean_separation` is the minimum
/// pairwise Euclidean distance between topic mean vectors, in units of the
/// average component standard deviation; it controls identifiability.
#[derive(Debug, Clone)]
pub struct SyntheticConfig<T> {
    pub num_users: usize,
    pub num_topics: usize,
    pub vocab_size: usize,
    pub tokens_per_doc: usize,
    pub user_dim: usize,
    pub concept_dim: usize,
    pub topic_mean_separation: T,
    /// Dirichlet concentration for the per-user topic proportions.
    pub dirichlet_alpha: T,
    /// True component precisions are Gamma(shape, rate) draws; the defaults
    /// concentrate near 1.
    pub lambda_shape: T,
    pub lambda_rate: T,
    pub seed: u64,
}

impl<T: Scalar> SyntheticConfig<T> {
    pub fn new(num_users: usize, num_topics: usize, vocab_size: usize) -> Self {
        Self {
            num_users,
            num_topics,
            vocab_size,
            tokens_per_doc: 50,
            user_dim: 8,
            concept_dim: 8,
            topic_mean_separation: T::of(4.0),
            dirichlet_alpha: T::of(0.25),
            lambda_shape: T::of(100.0),
            lambda_rate: T::of(100.0),
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("num_users", self.num_users),
            ("num_topics", self.num_topics),
            ("vocab_size", self.vocab_size),
            ("tokens_per_doc", self.tokens_per_doc),
            ("user_dim", self.user_dim),
            ("concept_dim", self.concept_dim),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.vocab_size < self.num_topics {
            return Err(Error::Config(
                "vocab_size must be >= num_topics so every topic has a concept".into(),
            ));
        }
        if !(self.topic_mean_separation > T::zero()) {
            return Err(Error::Config("topic_mean_separation must be > 0".into()));
        }
        for (name, v) in [
            ("dirichlet_alpha", self.dirichlet_alpha),
            ("lambda_shape", self.lambda_shape),
            ("lambda_rate", self.lambda_rate),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Everything the generator knows that inference has to recover.
#[derive(Debug, Clone)]
pub struct GroundTruth<T> {
    pub z: Vec<Vec<usize>>,
    pub y: Vec<usize>,
    pub mu_r: Array2<T>,
    pub lambda_r: Array2<T>,
    pub mu_k: Array2<T>,
    pub lambda_k: Array2<T>,
    /// True topic of each vocabulary concept.
    pub concept_topic: Vec<usize>,
    /// Per user: all concepts whose true topic equals the user's y.
    pub relevant: Vec<Vec<usize>>,
}

const SEPARATION_ATTEMPTS: usize = 1000;

/// Draws one modality's true per-topic (mean, precision), resampling the
/// means until the separation constraint holds.
fn sample_topic_gaussians<T: Scalar, R: Rng>(
    num_topics: usize,
    dim: usize,
    config: &SyntheticConfig<T>,
    rng: &mut R,
) -> Result<(Array2<T>, Array2<T>)> {
    let gamma = Gamma::new(
        config.lambda_shape.to_f64_lossy(),
        1.0 / config.lambda_rate.to_f64_lossy(),
    )
    .map_err(|e| Error::Synth(format!("invalid precision distribution: {e}")))?;
    let mut lambda = Array2::zeros((num_topics, dim));
    for t in 0..num_topics {
        for e in 0..dim {
            lambda[[t, e]] = T::of(gamma.sample(rng));
        }
    }
    let mean_sigma: f64 = lambda
        .iter()
        .map(|&l| 1.0 / l.to_f64_lossy().sqrt())
        .sum::<f64>()
        / (num_topics * dim) as f64;
    let sep = config.topic_mean_separation.to_f64_lossy() * mean_sigma;
    let spread = sep.max(mean_sigma);

    for _ in 0..SEPARATION_ATTEMPTS {
        let mut mu = Array2::zeros((num_topics, dim));
        for t in 0..num_topics {
            for e in 0..dim {
                let n: f64 = StandardNormal.sample(rng);
                mu[[t, e]] = T::of(n * spread);
            }
        }
        let mut ok = true;
        'pairs: for a in 0..num_topics {
            for b in (a + 1)..num_topics {
                let dist2: f64 = (0..dim)
                    .map(|e| {
                        let d = mu[[a, e]].to_f64_lossy() - mu[[b, e]].to_f64_lossy();
                        d * d
                    })
                    .sum();
                if dist2.sqrt() < sep {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if ok {
            return Ok((mu, lambda));
        }
    }
    Err(Error::Synth(format!(
        "could not separate {num_topics} topic means by {sep:.3} in {dim} dims after {SEPARATION_ATTEMPTS} attempts"
    )))
}

fn sample_dirichlet<T: Scalar, R: Rng>(alpha: f64, len: usize, rng: &mut R) -> Vec<T> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated positive");
    let draws: Vec<f64> = (0..len).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        // All draws underflowed (tiny alpha); fall back to a point mass.
        let mut v = vec![T::zero(); len];
        v[rng.random_range(0..len)] = T::one();
        return v;
    }
    draws.into_iter().map(|g| T::of(g / total)).collect()
}

fn sample_from_weights<T: Scalar, R: Rng>(weights: &[T], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Forward-samples a corpus, its embeddings, and the ground truth.
pub fn generate_synthetic<T: Scalar>(
    config: &SyntheticConfig<T>,
) -> Result<(Corpus, EmbeddingStore<T>, GroundTruth<T>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let t_count = config.num_topics;

    let (mu_r, lambda_r) = sample_topic_gaussians(t_count, config.user_dim, config, &mut rng)?;
    let (mu_k, lambda_k) = sample_topic_gaussians(t_count, config.concept_dim, config, &mut rng)?;

    // Round-robin topic assignment covers every topic (vocab >= topics).
    let concept_topic: Vec<usize> = (0..config.vocab_size).map(|w| w % t_count).collect();
    let concepts_of_topic: Vec<Vec<usize>> = (0..t_count)
        .map(|t| {
            (0..config.vocab_size)
                .filter(|w| w % t_count == t)
                .collect()
        })
        .collect();

    let mut concept_emb = Array2::zeros((config.vocab_size, config.concept_dim));
    for w in 0..config.vocab_size {
        let t = concept_topic[w];
        for e in 0..config.concept_dim {
            let n: f64 = StandardNormal.sample(&mut rng);
            let sigma = T::one() / lambda_k[[t, e]].sqrt();
            concept_emb[[w, e]] = mu_k[[t, e]] + T::of(n) * sigma;
        }
    }

    let digits = config.num_users.max(config.vocab_size).to_string().len();
    let vocab = Vocab::from_names(
        (0..config.vocab_size)
            .map(|w| format!("c{w:0digits$}"))
            .collect(),
    );
    let users: Vec<String> = (0..config.num_users)
        .map(|u| format!("u{u:0digits$}"))
        .collect();

    let alpha = config.dirichlet_alpha.to_f64_lossy();
    let mut docs = Vec::with_capacity(config.num_users);
    let mut z = Vec::with_capacity(config.num_users);
    let mut y = Vec::with_capacity(config.num_users);
    let mut user_emb = Array2::zeros((config.num_users, config.user_dim));
    for u in 0..config.num_users {
        let theta: Vec<T> = sample_dirichlet(alpha, t_count, &mut rng);
        let mut doc = Vec::with_capacity(config.tokens_per_doc);
        let mut zu = Vec::with_capacity(config.tokens_per_doc);
        for _ in 0..config.tokens_per_doc {
            let t = sample_from_weights(&theta, &mut rng);
            let pool = &concepts_of_topic[t];
            doc.push(pool[rng.random_range(0..pool.len())]);
            zu.push(t);
        }
        let yu = zu[rng.random_range(0..zu.len())];
        for e in 0..config.user_dim {
            let n: f64 = StandardNormal.sample(&mut rng);
            let sigma = T::one() / lambda_r[[yu, e]].sqrt();
            user_emb[[u, e]] = mu_r[[yu, e]] + T::of(n) * sigma;
        }
        docs.push(doc);
        z.push(zu);
        y.push(yu);
    }

    let relevant: Vec<Vec<usize>> = y.iter().map(|&yu| concepts_of_topic[yu].clone()).collect();

    let corpus = Corpus::from_parts(users, docs, vocab)?;
    let embeddings = EmbeddingStore::new(user_emb, concept_emb);
    let truth = GroundTruth {
        z,
        y,
        mu_r,
        lambda_r,
        mu_k,
        lambda_k,
        concept_topic,
        relevant,
    };
    Ok((corpus, embeddings, truth))
}
