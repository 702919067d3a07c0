//! Conjugate normal-gamma math: posterior updates and the log posterior
//! predictive that drives both sampling conditionals.

use crate::error::{Error, Result};
use crate::hyper::NormalGammaPrior;
use crate::scalar::Scalar;
use crate::stats::{Modality, TopicSuffStats};

/// Posterior normal-gamma parameters after absorbing `n` points.
#[derive(Debug, Clone, Copy)]
pub struct NgPosterior<T> {
    pub alpha: T,
    pub beta: T,
    pub kappa: T,
    pub mu: T,
}

/// Computes the posterior from the moment triple (n, sum x, sum x^2):
///
/// kappa_n = kappa0 + n,  alpha_n = alpha0 + n/2,
/// mu_n = (kappa0 mu0 + n xbar) / kappa_n,
/// beta_n = beta0 + ssd/2 + kappa0 n (xbar - mu0)^2 / (2 kappa_n)
///
/// where ssd is the sum of squared deviations from the sample mean.
pub fn posterior_from_moments<T: Scalar>(
    n: usize,
    sum: T,
    sumsq: T,
    tau: &NormalGammaPrior<T>,
) -> NgPosterior<T> {
    let half = T::of(0.5);
    let nf = T::of_usize(n);
    let kappa = tau.kappa0 + nf;
    let alpha = tau.alpha0 + half * nf;
    let mu = (tau.kappa0 * tau.mu0 + sum) / kappa;
    let beta = beta_from_moments(n, sum, sumsq, tau);
    NgPosterior {
        alpha,
        beta,
        kappa,
        mu,
    }
}

/// The beta_n update alone; shared by the read-out and the sampler's
/// per-dimension scoring loop.
pub fn beta_from_moments<T: Scalar>(n: usize, sum: T, sumsq: T, tau: &NormalGammaPrior<T>) -> T {
    if n == 0 {
        return tau.beta0;
    }
    let half = T::of(0.5);
    let nf = T::of_usize(n);
    let xbar = sum / nf;
    // Centered form of the scatter; clamp the cancellation residue.
    let ssd = (sumsq - sum * xbar).max(T::zero());
    let dm = xbar - tau.mu0;
    tau.beta0 + half * ssd + tau.kappa0 * nf * dm * dm / (T::of(2.0) * (tau.kappa0 + nf))
}

/// Log posterior predictive density of `x` given the `n` points summarized
/// by (sum, sumsq) — the moments must EXCLUDE the candidate point.
///
/// This is the ratio of normal-gamma marginal likelihoods with and without
/// the candidate, equal to a Student-t log-density with 2*alpha_n degrees of
/// freedom, location mu_n, and squared scale beta_n (kappa_n + 1) /
/// (alpha_n kappa_n).
pub fn ln_predictive<T: Scalar>(n: usize, sum: T, sumsq: T, x: T, tau: &NormalGammaPrior<T>) -> T {
    let half = T::of(0.5);
    let ln_two_pi = T::of(core::f64::consts::TAU.ln());
    let without = posterior_from_moments(n, sum, sumsq, tau);
    let with = posterior_from_moments(n + 1, sum + x, sumsq + x * x, tau);
    (with.alpha.ln_gamma() - without.alpha.ln_gamma())
        + (without.alpha * without.beta.ln() - with.alpha * with.beta.ln())
        + half * (without.kappa.ln() - with.kappa.ln())
        - half * ln_two_pi
}

/// Log posterior predictive of embedding value `x` against topic `t`,
/// dimension `e` of the given modality.
///
/// The statistics must already exclude the candidate point (the sampler's
/// remove-then-score discipline guarantees this; when the point was assigned
/// to `t` this reproduces the n vs n-1 marginal-likelihood ratio exactly).
pub fn log_gprime<T: Scalar>(
    stats: &TopicSuffStats<T>,
    modality: Modality,
    topic: usize,
    dim: usize,
    x: T,
    tau: &NormalGammaPrior<T>,
) -> Result<T> {
    if !x.is_finite() {
        return Err(Error::NonFinite("log_gprime candidate value"));
    }
    let m = stats.modality(modality);
    let (sum, sumsq) = m.sums(topic, dim);
    let v = ln_predictive(m.point_count(topic), sum, sumsq, x, tau);
    debug_assert!(!v.is_nan(), "log_gprime produced NaN");
    Ok(v)
}
