//! Shared linear auto-encoder and its training loop.
//!
//! Each smoothed view `X~^v` is encoded with one shared weight matrix,
//! `Z^v = X~^v W`, and decoded with `X̄^v = Z^v W_de`. There are no biases
//! and no activations. The concatenated embedding `[Z^1 .. Z^V]` drives a
//! Student-t soft assignment against learned cluster centers.

mod adam;
mod kmeans;
mod objective;
mod train;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use kmeans::{kmeans, KMeansResult};
pub use objective::{Forward, Gradients, LossBreakdown, Objective, PairDiagnostics};
pub use train::{train, train_on_views, LossReport, TrainOutcome};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::graph::DenseMatrix;

pub const DEFAULT_EPOCHS: usize = 400;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-2;
pub const DEFAULT_WEIGHT_DECAY: f64 = 1e-3;
pub const DEFAULT_EMBEDDING_DIM: usize = 10;

/// Which objective terms participate in training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossTerms {
    pub feature_decorrelation: bool,
    pub reconstruction: bool,
    pub clustering: bool,
}

impl Default for LossTerms {
    fn default() -> Self {
        Self::FULL
    }
}

impl LossTerms {
    pub const FULL: LossTerms = LossTerms {
        feature_decorrelation: true,
        reconstruction: true,
        clustering: true,
    };
    pub const WITHOUT_DECORRELATION: LossTerms = LossTerms {
        feature_decorrelation: false,
        ..Self::FULL
    };
    /// Encoder only: no decoder, no reconstruction term.
    pub const WITHOUT_RECONSTRUCTION: LossTerms = LossTerms {
        reconstruction: false,
        ..Self::FULL
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Embedding width per view.
    pub d: usize,
    pub seed: u64,
    pub filter: FilterConfig,
    /// Epochs between recomputations of the target distribution.
    pub target_refresh_interval: usize,
    pub kmeans_restarts: usize,
    pub terms: LossTerms,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LEARNING_RATE,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            d: DEFAULT_EMBEDDING_DIM,
            seed: 0,
            filter: FilterConfig::default(),
            target_refresh_interval: 1,
            kmeans_restarts: 10,
            terms: LossTerms::FULL,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight decay must be >= 0, got {}", self.weight_decay)));
        }
        if self.d < 1 {
            return Err(Error::Config("embedding dimension d must be >= 1".into()));
        }
        if self.target_refresh_interval < 1 {
            return Err(Error::Config("target_refresh_interval must be >= 1".into()));
        }
        if self.kmeans_restarts < 1 {
            return Err(Error::Config("kmeans_restarts must be >= 1".into()));
        }
        self.filter.validate()
    }
}

/// Trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// f x d, shared across views.
    pub encoder: DenseMatrix,
    /// d x f.
    pub decoder: DenseMatrix,
    /// c x (V d).
    pub centers: DenseMatrix,
}

impl Parameters {
    pub fn tensors(&self) -> [&DenseMatrix; 3] {
        [&self.encoder, &self.decoder, &self.centers]
    }

    pub fn tensors_mut(&mut self) -> [&mut DenseMatrix; 3] {
        [&mut self.encoder, &mut self.decoder, &mut self.centers]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Parameters,
    pub adam: AdamState,
    pub epoch: usize,
    pub n_views: usize,
}

impl ModelState {
    pub fn n_features(&self) -> usize {
        self.params.encoder.nrows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.params.encoder.ncols()
    }

    pub fn n_clusters(&self) -> usize {
        self.params.centers.nrows()
    }
}

/// `Z = X~ W`.
pub fn encode(smoothed: &DenseMatrix, encoder: &DenseMatrix) -> Result<DenseMatrix> {
    if smoothed.ncols() != encoder.nrows() {
        return Err(Error::shape(
            "encode",
            format!("encoder with {} rows", smoothed.ncols()),
            format!("{}", encoder.nrows()),
        ));
    }
    Ok(smoothed * encoder)
}

/// `X̄ = Z W_de`.
pub fn decode(z: &DenseMatrix, decoder: &DenseMatrix) -> Result<DenseMatrix> {
    if z.ncols() != decoder.nrows() {
        return Err(Error::shape(
            "decode",
            format!("decoder with {} rows", z.ncols()),
            format!("{}", decoder.nrows()),
        ));
    }
    Ok(z * decoder)
}

/// Encodes every view and concatenates the embeddings column-wise.
pub fn concat_embedding(smoothed: &[DenseMatrix], encoder: &DenseMatrix) -> Result<DenseMatrix> {
    let views = smoothed
        .iter()
        .map(|x| encode(x, encoder))
        .collect::<Result<Vec<_>>>()?;
    Ok(hstack(&views))
}

pub(crate) fn hstack(blocks: &[DenseMatrix]) -> DenseMatrix {
    let n = blocks.first().map_or(0, |b| b.nrows());
    let width: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DenseMatrix::zeros(n, width);
    let mut offset = 0;
    for b in blocks {
        out.columns_mut(offset, b.ncols()).copy_from(b);
        offset += b.ncols();
    }
    out
}

/// Row-wise argmax; ties go to the smallest cluster index.
pub fn assign_labels(q: &DenseMatrix) -> Vec<usize> {
    q.row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
