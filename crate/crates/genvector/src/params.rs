//! Expectation read-outs of the model parameters and their averaging.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::normal_gamma::posterior_from_moments;
use crate::scalar::Scalar;
use crate::stats::{Modality, TopicSuffStats};

/// Point estimates extracted from the collapsed state: per-user topic
/// proportions and per-topic per-dimension Gaussian (mean, precision) for
/// both modalities. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// theta: num_users x num_topics, rows on the simplex.
    pub theta: Array2<T>,
    /// User-modality Gaussian means, num_topics x user_dim.
    pub mu_r: Array2<T>,
    /// User-modality Gaussian precisions, strictly positive.
    pub lambda_r: Array2<T>,
    /// Concept-modality Gaussian means, num_topics x concept_dim.
    pub mu_k: Array2<T>,
    /// Concept-modality Gaussian precisions, strictly positive.
    pub lambda_k: Array2<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Reads parameters out of the current sufficient statistics:
    ///
    /// theta_u^t = (n_u^t + alpha) / sum_t' (n_u^t' + alpha),
    /// mu_t = posterior location, lambda_t = alpha_n / beta_n.
    pub fn read_out(stats: &TopicSuffStats<T>, hyper: &Hyperparameters<T>) -> Self {
        let num_topics = stats.num_topics();
        let num_users = stats.doc_topic.len();
        let mut theta = Array2::zeros((num_users, num_topics));
        for (u, counts) in stats.doc_topic.iter().enumerate() {
            let total: T = counts.iter().map(|&c| T::of_usize(c as usize)).sum::<T>()
                + T::of_usize(num_topics) * hyper.alpha;
            for t in 0..num_topics {
                theta[[u, t]] = (T::of_usize(counts[t] as usize) + hyper.alpha) / total;
            }
        }
        let (mu_r, lambda_r) = Self::modality_readout(stats, Modality::User, hyper);
        let (mu_k, lambda_k) = Self::modality_readout(stats, Modality::Concept, hyper);
        Self {
            theta,
            mu_r,
            lambda_r,
            mu_k,
            lambda_k,
        }
    }

    fn modality_readout(
        stats: &TopicSuffStats<T>,
        modality: Modality,
        hyper: &Hyperparameters<T>,
    ) -> (Array2<T>, Array2<T>) {
        let m = stats.modality(modality);
        let tau = match modality {
            Modality::User => &hyper.tau_r,
            Modality::Concept => &hyper.tau_k,
        };
        let (num_topics, dim) = (m.num_topics(), m.dim());
        let mut mu = Array2::zeros((num_topics, dim));
        let mut lambda = Array2::zeros((num_topics, dim));
        for t in 0..num_topics {
            let n = m.point_count(t);
            for e in 0..dim {
                let (sum, sumsq) = m.sums(t, e);
                let p = posterior_from_moments(n, sum, sumsq, tau);
                mu[[t, e]] = p.mu;
                lambda[[t, e]] = p.alpha / p.beta;
            }
        }
        (mu, lambda)
    }

    pub fn num_topics(&self) -> usize {
        self.mu_r.nrows()
    }

    /// Element-wise arithmetic mean of several read-outs.
    pub fn average(readouts: &[Self]) -> Result<Self> {
        let first = readouts
            .first()
            .ok_or_else(|| Error::Config("cannot average zero read-outs".into()))?;
        let mut acc = first.clone();
        for r in &readouts[1..] {
            for (a, b) in [
                (&mut acc.theta, &r.theta),
                (&mut acc.mu_r, &r.mu_r),
                (&mut acc.lambda_r, &r.lambda_r),
                (&mut acc.mu_k, &r.mu_k),
                (&mut acc.lambda_k, &r.lambda_k),
            ] {
                if a.dim() != b.dim() {
                    return Err(Error::DimensionMismatch(
                        "read-outs have incongruent shapes".into(),
                    ));
                }
                *a += b;
            }
        }
        let n = T::of_usize(readouts.len());
        for a in [
            &mut acc.theta,
            &mut acc.mu_r,
            &mut acc.lambda_r,
            &mut acc.mu_k,
            &mut acc.lambda_k,
        ] {
            a.mapv_inplace(|v| v / n);
        }
        Ok(acc)
    }
}

/// Running sum of read-outs; `mean()` is the averaged parameter set used for
/// embedding updates and prediction.
#[derive(Debug, Clone)]
pub struct ReadoutAccumulator<T> {
    sum: Option<ModelParams<T>>,
    count: usize,
}

impl<T: Scalar> ReadoutAccumulator<T> {
    pub fn new() -> Self {
        Self {
            sum: None,
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, readout: ModelParams<T>) {
        self.count += 1;
        match &mut self.sum {
            None => self.sum = Some(readout),
            Some(acc) => {
                acc.theta += &readout.theta;
                acc.mu_r += &readout.mu_r;
                acc.lambda_r += &readout.lambda_r;
                acc.mu_k += &readout.mu_k;
                acc.lambda_k += &readout.lambda_k;
            }
        }
    }

    pub fn mean(&self) -> Result<ModelParams<T>> {
        let sum = self
            .sum
            .as_ref()
            .ok_or_else(|| Error::Config("cannot average zero read-outs".into()))?;
        let n = T::of_usize(self.count);
        let mut out = sum.clone();
        for a in [
            &mut out.theta,
            &mut out.mu_r,
            &mut out.lambda_r,
            &mut out.mu_k,
            &mut out.lambda_k,
        ] {
            a.mapv_inplace(|v| v / n);
        }
        Ok(out)
    }
}

impl<T: Scalar> Default for ReadoutAccumulator<T> {
    fn default() -> Self {
        Self::new()
    }
}
