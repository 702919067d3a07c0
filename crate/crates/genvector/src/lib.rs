//! GenVector: a multi-modal Bayesian embedding topic model that links
//! social-network users to knowledge concepts.
//!
//! The model represents two observed modalities — network-based user
//! embeddings and text-based concept embeddings — in a shared latent topic
//! space. Each topic carries per-dimension Gaussian parameters (mean and
//! precision) under a normal-gamma prior for both modalities. Inference
//! alternates between collapsed Gibbs sampling of the discrete topic
//! assignments and gradient ascent on the embeddings, and prediction emits
//! a ranked top-k concept list per user (a social knowledge graph).
//!
//! The numeric core is generic over the scalar type (see [`Scalar`]);
//! the CLI and the convenience aliases below use `f64`.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hyper;
pub mod io;
pub mod normal_gamma;
pub mod optimizer;
pub mod params;
pub mod predictor;
pub mod sampler;
pub mod scalar;
pub mod stats;
pub mod synth;

pub use corpus::{Corpus, EmbeddingStore};
pub use error::{Error, Result};
pub use hyper::{Hyperparameters, NormalGammaPrior};
pub use optimizer::{LikelihoodReport, UserTermMode};
pub use params::ModelParams;
pub use predictor::{CandidateSet, SocialKnowledgeGraph};
pub use sampler::{run_inference, TopicState, TracePoint, TrainedModel};
pub use scalar::Scalar;
pub use stats::{Modality, TopicSuffStats};
pub use synth::{GroundTruth, SyntheticConfig};

/// Scalar type used by the command-line tools and the snapshot format.
pub type DefaultScalar = f64;

/// `f64` model, as produced by the CLI.
pub type TrainedModelF64 = sampler::TrainedModel<f64>;
/// Single-precision model for memory-constrained use.
pub type TrainedModelF32 = sampler::TrainedModel<f32>;
