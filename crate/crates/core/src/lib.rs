//! Bayesian mixture-model clustering that fuses overfitted kernel components.
//!
//! The pipeline: fit a finite Gaussian mixture by Gibbs sampling ([`gibbs`]),
//! estimate the matrix of posterior-expected Hellinger distances between the
//! localized densities of all observation pairs ([`delta`]), and minimize a
//! pairwise risk over partitions ([`loss`], [`optimize`]). Loss-parameter
//! selection and uncertainty quantification live in [`tuning`] and [`uq`],
//! oracle clustering rules and the convergence harness in [`oracle`], and
//! synthetic data generators in [`simgen`].

pub mod dataset;
pub mod delta;
pub mod error;
pub mod gibbs;
pub mod kernel;
pub mod loss;
pub mod mixture;
pub mod optimize;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod rng;
pub mod simgen;
pub mod tuning;
pub mod uq;

pub use dataset::Dataset;
pub use delta::DeltaMatrix;
pub use error::FoldError;
pub use gibbs::{ChainConfig, GmmPrior, PosteriorSamples};
pub use kernel::{hellinger_gaussian, GaussianKernel};
pub use loss::{fold_loss, LossParams, RiskReport};
pub use mixture::MixtureDraw;
pub use optimize::{CandidatePath, GreedyConfig};
pub use partition::Clustering;
pub use uq::{CredibleBall, SimilarityMatrix};
