//! Flat key-value run configuration (TOML syntax, no tables).
//!
//! ```toml
//! seed = 42
//! sigma = 1.0
//! embed_dim = 1024
//! use_aff = false
//! standardize = true
//! aff_epochs = 1000
//! aff_pairs = 10000
//! aff_heldout_pairs = 1000
//! aff_learning_rate = 0.001
//! aff_seed = 0
//! aff_max_retries = 4
//! test_frac = 0.3
//! val_frac = 0.3
//! label_column = "label"     # or "@last"
//! grid_sigma = "median"      # or a list such as [0.5, 1.0, 2.0]
//! grid_embed_dim = [1024]
//! grid_use_aff = [false]
//! ```

use std::path::Path;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataio::{fit_standardizer, CsvOptions, LabelColumn};
use crate::detector::{FitConfig, Grid};
use crate::embedding::{median_sigma_grid, AffConfig};
use crate::error::{DmkdeError, Result};

/// Sigma values for the grid: explicit, or derived from the median
/// pairwise distance of the (standardized) training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaGrid {
    Values(Vec<f64>),
    Keyword(String),
}

impl Default for SigmaGrid {
    fn default() -> Self {
        SigmaGrid::Keyword("median".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub sigma: f64,
    pub embed_dim: usize,
    pub use_aff: bool,
    pub standardize: bool,
    pub aff_epochs: usize,
    pub aff_pairs: usize,
    pub aff_heldout_pairs: usize,
    pub aff_learning_rate: f64,
    pub aff_seed: u64,
    pub aff_max_retries: usize,
    pub test_frac: f64,
    pub val_frac: f64,
    pub label_column: String,
    pub grid_sigma: SigmaGrid,
    pub grid_embed_dim: Vec<usize>,
    pub grid_use_aff: Vec<bool>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::default();
        let aff = AffConfig::default();
        RunConfig {
            seed: fit.seed,
            sigma: fit.sigma,
            embed_dim: fit.embed_dim,
            use_aff: fit.use_aff,
            standardize: fit.standardize,
            aff_epochs: aff.epochs,
            aff_pairs: aff.num_pairs,
            aff_heldout_pairs: aff.heldout_pairs,
            aff_learning_rate: aff.learning_rate,
            aff_seed: aff.seed,
            aff_max_retries: aff.max_retries,
            test_frac: 0.3,
            val_frac: 0.3,
            label_column: "label".to_string(),
            grid_sigma: SigmaGrid::default(),
            grid_embed_dim: vec![fit.embed_dim],
            grid_use_aff: vec![false],
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| DmkdeError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DmkdeError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            DmkdeError::Config(msg) => DmkdeError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DmkdeError::Config(msg));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be >= 1".into());
        }
        for (name, frac) in [("test_frac", self.test_frac), ("val_frac", self.val_frac)] {
            if !(frac > 0.0 && frac < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {frac}"));
            }
        }
        if self.aff_pairs == 0 {
            return bad("aff_pairs must be >= 1".into());
        }
        if !(self.aff_learning_rate > 0.0 && self.aff_learning_rate.is_finite()) {
            return bad(format!(
                "aff_learning_rate must be positive, got {}",
                self.aff_learning_rate
            ));
        }
        match &self.grid_sigma {
            SigmaGrid::Keyword(k) if k != "median" => {
                return bad(format!(
                    "grid_sigma must be a list or \"median\", got \"{k}\""
                ))
            }
            SigmaGrid::Values(v) if v.iter().any(|s| !(*s > 0.0 && s.is_finite())) => {
                return bad("grid_sigma values must be positive".into())
            }
            _ => {}
        }
        if self.grid_embed_dim.contains(&0) {
            return bad("grid_embed_dim values must be >= 1".into());
        }
        Ok(())
    }

    /// The grid is empty when any axis is empty.
    pub fn grid_is_empty(&self) -> bool {
        matches!(&self.grid_sigma, SigmaGrid::Values(v) if v.is_empty())
            || self.grid_embed_dim.is_empty()
            || self.grid_use_aff.is_empty()
    }

    pub fn aff_config(&self) -> AffConfig {
        AffConfig {
            num_pairs: self.aff_pairs,
            epochs: self.aff_epochs,
            learning_rate: self.aff_learning_rate,
            seed: self.aff_seed,
            heldout_pairs: self.aff_heldout_pairs,
            max_retries: self.aff_max_retries,
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            sigma: self.sigma,
            embed_dim: self.embed_dim,
            use_aff: self.use_aff,
            aff: self.aff_config(),
            seed: self.seed,
            standardize: self.standardize,
        }
    }

    pub fn csv_options(&self) -> CsvOptions {
        let label_column = if self.label_column == "@last" {
            LabelColumn::Last
        } else {
            LabelColumn::Named(self.label_column.clone())
        };
        CsvOptions { label_column }
    }

    /// Concrete grid for `train`; the median keyword is resolved on the rows
    /// the embedding will see (standardized when `standardize` is on).
    pub fn resolve_grid(&self, train: ArrayView2<f64>) -> Result<Grid> {
        let sigmas = match &self.grid_sigma {
            SigmaGrid::Values(v) => v.clone(),
            SigmaGrid::Keyword(_) => {
                if self.standardize {
                    let scaled = fit_standardizer(train)?.apply(train);
                    median_sigma_grid(scaled.view(), self.seed)?
                } else {
                    median_sigma_grid(train, self.seed)?
                }
            }
        };
        Ok(Grid {
            sigmas,
            embed_dims: self.grid_embed_dim.clone(),
            use_aff: self.grid_use_aff.clone(),
        })
    }
}
