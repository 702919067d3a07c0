//! Sufficient statistics for the topic assignments.
//!
//! Per modality and topic the Gaussian components track the moment triple
//! (n, sum x, sum x^2) per dimension; alongside live the per-document and
//! per-concept topic counts. Everything is maintained incrementally during
//! sweeps, with periodic full recomputation bounding float drift.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EmbeddingStore};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The two observed embedding spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modality {
    /// Network-based user embeddings (one point per user, keyed by y).
    User,
    /// Text-based concept embeddings (one point per token, keyed by z).
    Concept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Add,
    Remove,
}

/// Gaussian component moments for one modality: per topic, a point count
/// plus per-dimension sum and sum of squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityStats<T> {
    count: Vec<u32>,
    sum: Array2<T>,
    sumsq: Array2<T>,
}

impl<T: Scalar> ModalityStats<T> {
    pub fn new(num_topics: usize, dim: usize) -> Self {
        Self {
            count: vec![0; num_topics],
            sum: Array2::zeros((num_topics, dim)),
            sumsq: Array2::zeros((num_topics, dim)),
        }
    }

    pub fn num_topics(&self) -> usize {
        self.count.len()
    }

    pub fn dim(&self) -> usize {
        self.sum.ncols()
    }

    pub fn point_count(&self, topic: usize) -> usize {
        self.count[topic] as usize
    }

    pub fn sums(&self, topic: usize, dim: usize) -> (T, T) {
        (self.sum[[topic, dim]], self.sumsq[[topic, dim]])
    }

    pub fn add_point(&mut self, topic: usize, point: ArrayView1<'_, T>) -> Result<()> {
        self.check_dim(point.len())?;
        self.count[topic] += 1;
        for (e, &x) in point.iter().enumerate() {
            self.sum[[topic, e]] += x;
            self.sumsq[[topic, e]] += x * x;
        }
        Ok(())
    }

    pub fn remove_point(&mut self, topic: usize, point: ArrayView1<'_, T>) -> Result<()> {
        self.check_dim(point.len())?;
        if self.count[topic] == 0 {
            return Err(Error::InvalidStats(format!(
                "remove from empty component (topic {topic})"
            )));
        }
        self.count[topic] -= 1;
        for (e, &x) in point.iter().enumerate() {
            self.sum[[topic, e]] -= x;
            self.sumsq[[topic, e]] -= x * x;
        }
        Ok(())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "point dimension {got} vs component dimension {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Largest relative per-field deviation from `other`.
    pub fn relative_deviation(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for t in 0..self.num_topics() {
            let d = (self.count[t] as f64 - other.count[t] as f64).abs();
            worst = worst.max(d);
            for e in 0..self.dim() {
                for (a, b) in [
                    (self.sum[[t, e]], other.sum[[t, e]]),
                    (self.sumsq[[t, e]], other.sumsq[[t, e]]),
                ] {
                    let (a, b) = (a.to_f64_lossy(), b.to_f64_lossy());
                    let scale = a.abs().max(b.abs()).max(1.0);
                    worst = worst.max((a - b).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Signed moment deltas accumulated by a parallel worker against a frozen
/// snapshot; merged into the base statistics at the sweep barrier.
#[derive(Debug, Clone)]
pub struct ModalityDelta<T> {
    count: Vec<i64>,
    sum: Array2<T>,
    sumsq: Array2<T>,
}

impl<T: Scalar> ModalityDelta<T> {
    pub fn zeros(num_topics: usize, dim: usize) -> Self {
        Self {
            count: vec![0; num_topics],
            sum: Array2::zeros((num_topics, dim)),
            sumsq: Array2::zeros((num_topics, dim)),
        }
    }

    pub fn add_point(&mut self, topic: usize, point: ArrayView1<'_, T>) {
        self.count[topic] += 1;
        for (e, &x) in point.iter().enumerate() {
            self.sum[[topic, e]] += x;
            self.sumsq[[topic, e]] += x * x;
        }
    }

    pub fn remove_point(&mut self, topic: usize, point: ArrayView1<'_, T>) {
        self.count[topic] -= 1;
        for (e, &x) in point.iter().enumerate() {
            self.sum[[topic, e]] -= x;
            self.sumsq[[topic, e]] -= x * x;
        }
    }
}

impl<T: Scalar> ModalityStats<T> {
    pub fn merge_delta(&mut self, delta: &ModalityDelta<T>) -> Result<()> {
        for t in 0..self.num_topics() {
            let merged = self.count[t] as i64 + delta.count[t];
            if merged < 0 {
                return Err(Error::InvalidStats(format!(
                    "negative merged count for topic {t}"
                )));
            }
            self.count[t] = merged as u32;
            for e in 0..self.dim() {
                self.sum[[t, e]] += delta.sum[[t, e]];
                self.sumsq[[t, e]] += delta.sumsq[[t, e]];
            }
        }
        Ok(())
    }
}

/// Read-only view of a modality's moments: a frozen base plus an optional
/// worker-local delta. Scoring in both single-threaded and parallel sweeps
/// goes through this.
#[derive(Clone, Copy)]
pub struct MomentsView<'a, T> {
    base: &'a ModalityStats<T>,
    delta: Option<&'a ModalityDelta<T>>,
}

impl<'a, T: Scalar> MomentsView<'a, T> {
    pub fn plain(base: &'a ModalityStats<T>) -> Self {
        Self { base, delta: None }
    }

    pub fn overlaid(base: &'a ModalityStats<T>, delta: &'a ModalityDelta<T>) -> Self {
        Self {
            base,
            delta: Some(delta),
        }
    }

    pub fn point_count(&self, topic: usize) -> usize {
        let n = self.base.count[topic] as i64 + self.delta.map_or(0, |d| d.count[topic]);
        debug_assert!(n >= 0, "overlay drove component count negative");
        n.max(0) as usize
    }

    pub fn sums(&self, topic: usize, dim: usize) -> (T, T) {
        let (mut s, mut q) = self.base.sums(topic, dim);
        if let Some(d) = self.delta {
            s += d.sum[[topic, dim]];
            q += d.sumsq[[topic, dim]];
        }
        (s, q)
    }
}

/// All sufficient statistics the sampler maintains: Gaussian moments for both
/// modalities, per-document topic counts n_u^t, and per-concept topic counts
/// n_w^t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSuffStats<T> {
    pub user_stats: ModalityStats<T>,
    pub concept_stats: ModalityStats<T>,
    /// n_u^t: tokens of document u assigned to topic t.
    pub doc_topic: Vec<Vec<u32>>,
    /// n_w^t: tokens of concept w assigned to topic t.
    pub concept_topic: Array2<u32>,
}

impl<T: Scalar> TopicSuffStats<T> {
    pub fn with_shape(
        num_topics: usize,
        user_dim: usize,
        concept_dim: usize,
        num_docs: usize,
        vocab_size: usize,
    ) -> Self {
        Self {
            user_stats: ModalityStats::new(num_topics, user_dim),
            concept_stats: ModalityStats::new(num_topics, concept_dim),
            doc_topic: vec![vec![0; num_topics]; num_docs],
            concept_topic: Array2::zeros((vocab_size, num_topics)),
        }
    }

    pub fn num_topics(&self) -> usize {
        self.user_stats.num_topics()
    }

    pub fn modality(&self, m: Modality) -> &ModalityStats<T> {
        match m {
            Modality::User => &self.user_stats,
            Modality::Concept => &self.concept_stats,
        }
    }

    pub fn modality_mut(&mut self, m: Modality) -> &mut ModalityStats<T> {
        match m {
            Modality::User => &mut self.user_stats,
            Modality::Concept => &mut self.concept_stats,
        }
    }

    /// Adds or removes one embedding point from a Gaussian component.
    /// An add followed by a remove of the same point restores the moments.
    pub fn update(
        &mut self,
        modality: Modality,
        topic: usize,
        point: ArrayView1<'_, T>,
        direction: Direction,
    ) -> Result<()> {
        let stats = self.modality_mut(modality);
        match direction {
            Direction::Add => stats.add_point(topic, point),
            Direction::Remove => stats.remove_point(topic, point),
        }
    }

    /// Rebuilds every field from raw assignments and current embedding
    /// values.
    pub fn from_assignments(
        corpus: &Corpus,
        embeddings: &EmbeddingStore<T>,
        z: &[Vec<usize>],
        y: &[usize],
        num_topics: usize,
    ) -> Self {
        let mut stats = Self::with_shape(
            num_topics,
            embeddings.user_dim(),
            embeddings.concept_dim(),
            corpus.num_users(),
            corpus.vocab().len(),
        );
        for (u, doc) in corpus.docs().iter().enumerate() {
            for (m, &w) in doc.iter().enumerate() {
                let t = z[u][m];
                stats.doc_topic[u][t] += 1;
                stats.concept_topic[[w, t]] += 1;
                stats
                    .concept_stats
                    .add_point(t, embeddings.concept.row(w))
                    .expect("congruent shapes");
            }
            stats
                .user_stats
                .add_point(y[u], embeddings.user.row(u))
                .expect("congruent shapes");
        }
        stats
    }

    /// Largest relative deviation across all fields versus `other`.
    pub fn relative_deviation(&self, other: &Self) -> f64 {
        let mut worst = self
            .user_stats
            .relative_deviation(&other.user_stats)
            .max(self.concept_stats.relative_deviation(&other.concept_stats));
        for (a, b) in self.doc_topic.iter().zip(&other.doc_topic) {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((*x as f64 - *y as f64).abs());
            }
        }
        for (x, y) in self.concept_topic.iter().zip(&other.concept_topic) {
            worst = worst.max((*x as f64 - *y as f64).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn add_accumulates_moments() {
        let mut s = ModalityStats::<f64>::new(2, 2);
        s.add_point(0, arr1(&[1.0, 3.0]).view()).unwrap();
        assert_eq!(s.point_count(0), 1);
        assert_eq!(s.sums(0, 0), (1.0, 1.0));
        assert_eq!(s.sums(0, 1), (3.0, 9.0));
        assert_eq!(s.point_count(1), 0);
    }

    #[test]
    fn two_point_scatter() {
        // Points (1,1) and (3,3): per-dim mean 2, sum of squared deviations 2.
        let mut s = ModalityStats::<f64>::new(1, 2);
        s.add_point(0, arr1(&[1.0, 1.0]).view()).unwrap();
        s.add_point(0, arr1(&[3.0, 3.0]).view()).unwrap();
        for e in 0..2 {
            let (sum, sumsq) = s.sums(0, e);
            let mean = sum / 2.0;
            assert_eq!(mean, 2.0);
            assert_eq!(sumsq - sum * mean, 2.0);
        }
    }

    #[test]
    fn add_then_remove_restores() {
        let mut s = ModalityStats::<f64>::new(1, 3);
        s.add_point(0, arr1(&[0.5, -2.0, 7.0]).view()).unwrap();
        let before = s.clone();
        let v = arr1(&[1.25, 3.5, -0.75]);
        s.add_point(0, v.view()).unwrap();
        s.remove_point(0, v.view()).unwrap();
        assert!(before.relative_deviation(&s) < 1e-12);
    }

    #[test]
    fn remove_from_empty_errors() {
        let mut s = ModalityStats::<f64>::new(1, 1);
        let r = s.remove_point(0, arr1(&[1.0]).view());
        assert!(matches!(r, Err(Error::InvalidStats(_))));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut s = ModalityStats::<f64>::new(1, 2);
        assert!(s.add_point(0, arr1(&[1.0]).view()).is_err());
    }

    #[test]
    fn delta_overlay_matches_direct_mutation() {
        let mut base = ModalityStats::<f64>::new(2, 1);
        base.add_point(0, arr1(&[2.0]).view()).unwrap();
        base.add_point(1, arr1(&[5.0]).view()).unwrap();

        let mut delta = ModalityDelta::zeros(2, 1);
        delta.remove_point(0, arr1(&[2.0]).view());
        delta.add_point(1, arr1(&[-1.0]).view());

        let view = MomentsView::overlaid(&base, &delta);
        assert_eq!(view.point_count(0), 0);
        assert_eq!(view.point_count(1), 2);
        assert_eq!(view.sums(1, 0), (4.0, 26.0));

        let mut merged = base.clone();
        merged.merge_delta(&delta).unwrap();
        assert_eq!(merged.point_count(0), 0);
        assert_eq!(merged.sums(1, 0), (4.0, 26.0));
    }
}
