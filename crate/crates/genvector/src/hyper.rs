//! Hyperparameters for the model and the training loop.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normal-gamma prior over a Gaussian's (mean, precision), one per modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalGammaPrior<T> {
    pub alpha0: T,
    pub beta0: T,
    pub kappa0: T,
    pub mu0: T,
}

impl<T: Scalar> NormalGammaPrior<T> {
    pub fn new(alpha0: T, beta0: T, kappa0: T, mu0: T) -> Result<Self> {
        let prior = Self {
            alpha0,
            beta0,
            kappa0,
            mu0,
        };
        prior.validate("normal-gamma prior")?;
        Ok(prior)
    }

    /// Shape/scale values reported to work well on the production-scale
    /// corpus; also the defaults the CLI uses.
    pub fn reference_defaults() -> Self {
        Self {
            alpha0: T::of(1e3),
            beta0: T::one(),
            kappa0: T::of(1e-5),
            mu0: T::zero(),
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        for (name, v) in [
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("kappa0", self.kappa0),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "{what}: {name} must be > 0, got {v}"
                )));
            }
        }
        if !self.mu0.is_finite() {
            return Err(Error::Config(format!("{what}: mu0 must be finite")));
        }
        Ok(())
    }
}

/// Everything the trainer needs besides the data itself.
///
/// `tau_r` governs the user-embedding modality, `tau_k` the concept-embedding
/// modality. Iteration counts follow the alternating schedule: `max_iter`
/// outer iterations of `latent_iters` Gibbs sweeps each, with parameters read
/// out every `readout_period` sweeps and one embedding update per outer
/// iteration, both only after `burn_in` outer iterations have passed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters<T> {
    pub tau_r: NormalGammaPrior<T>,
    pub tau_k: NormalGammaPrior<T>,
    /// Symmetric Dirichlet concentration applied to every topic.
    pub alpha: T,
    /// Laplace smoothing constant for the user-topic draw.
    pub laplace_l: T,
    pub num_topics: usize,
    pub burn_in: usize,
    pub max_iter: usize,
    pub latent_iters: usize,
    pub readout_period: usize,
    /// Gradient-ascent step size for embedding refinement.
    pub embed_lr: T,
    /// Ascent steps per embedding update.
    pub embed_steps: usize,
    /// Disable to freeze the input embeddings (the "-E" model variant).
    pub embed_updates: bool,
    pub seed: u64,
}

impl<T: Scalar> Hyperparameters<T> {
    /// Defaults mirroring the reference configuration: T topics with
    /// alpha = 0.25, add-one Laplace smoothing, and a single 1e-3 ascent
    /// step per outer iteration.
    pub fn new(num_topics: usize) -> Self {
        Self {
            tau_r: NormalGammaPrior::reference_defaults(),
            tau_k: NormalGammaPrior::reference_defaults(),
            alpha: T::of(0.25),
            laplace_l: T::one(),
            num_topics,
            burn_in: 20,
            max_iter: 60,
            latent_iters: 5,
            readout_period: 5,
            embed_lr: T::of(1e-3),
            embed_steps: 1,
            embed_updates: true,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.tau_r.validate("tau_r")?;
        self.tau_k.validate("tau_k")?;
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return Err(Error::Config(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if !(self.laplace_l >= T::zero()) || !self.laplace_l.is_finite() {
            return Err(Error::Config(format!(
                "laplace_l must be >= 0, got {}",
                self.laplace_l
            )));
        }
        if self.num_topics < 1 {
            return Err(Error::Config("num_topics must be >= 1".into()));
        }
        for (name, v) in [
            ("burn_in", self.burn_in),
            ("max_iter", self.max_iter),
            ("latent_iters", self.latent_iters),
            ("readout_period", self.readout_period),
            ("embed_steps", self.embed_steps),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.burn_in >= self.max_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be < max_iter ({})",
                self.burn_in, self.max_iter
            )));
        }
        if self.readout_period > self.latent_iters {
            return Err(Error::Config(format!(
                "readout_period ({}) must be <= latent_iters ({})",
                self.readout_period, self.latent_iters
            )));
        }
        if !(self.embed_lr > T::zero()) || !self.embed_lr.is_finite() {
            return Err(Error::Config(format!(
                "embed_lr must be > 0, got {}",
                self.embed_lr
            )));
        }
        Ok(())
    }
}
