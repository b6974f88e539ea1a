//! Anomaly detection with density matrices over Fourier features.
//!
//! Training samples are embedded with a (optionally gradient-refined) random
//! Fourier feature map that approximates a Gaussian kernel, the normalized
//! embeddings are averaged into a single `D × D` density matrix, and a new
//! sample's density is the quadratic form `φ(x)ᵀ R φ(x)`. Samples whose density
//! falls below the anomaly-rate quantile of validation densities are flagged.
//!
//! ```no_run
//! use dmkde::{dataio, detector};
//!
//! let ds = dataio::generate_synthetic(&dataio::SyntheticSpec::two_gaussians(1)).unwrap();
//! let split = dataio::stratified_split(&ds, 0.3, 0.3, 1).unwrap();
//! let cfg = detector::FitConfig { sigma: 0.5, ..Default::default() };
//! let model = detector::fit(
//!     ds.subset(&split.train).features(),
//!     ds.subset(&split.val).features(),
//!     ds.anomaly_rate(),
//!     &cfg,
//! )
//! .unwrap();
//! let (label, density) = model.predict(ds.features().row(0)).unwrap();
//! ```

pub mod config;
pub mod dataio;
pub mod density;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model_io;
pub mod oracle;
pub mod report;
pub mod rng;

pub use config::RunConfig;
pub use dataio::LabeledDataset;
pub use density::DensityMatrix;
pub use detector::{DetectorModel, FitConfig, Label};
pub use embedding::{AffConfig, EmbeddingParams, FeatureVector};
pub use error::{DmkdeError, Result};
