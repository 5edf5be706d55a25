//! Multi-view stochastic block model with Gaussian block attributes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DenseMatrix, MultiRelationalGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbmConfig {
    pub blocks: Vec<usize>,
    /// Within-block edge probability, one entry per view.
    pub intra: Vec<f64>,
    /// Between-block edge probability, one entry per view.
    pub inter: Vec<f64>,
    pub features: usize,
    /// Distance of each block mean from the origin, in units of `noise`.
    pub separation: f64,
    /// Standard deviation of the attribute noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SbmConfig {
    /// Three blocks of 50 nodes over two views.
    fn default() -> Self {
        Self {
            blocks: vec![50, 50, 50],
            intra: vec![0.5, 0.4],
            inter: vec![0.02, 0.02],
            features: 20,
            separation: 5.0,
            noise: 1.0,
            seed: 0,
        }
    }
}

impl SbmConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::Config("every SBM block needs at least one node".into()));
        }
        if self.intra.is_empty() || self.intra.len() != self.inter.len() {
            return Err(Error::Config(format!(
                "need one intra and one inter probability per view, got {} and {}",
                self.intra.len(),
                self.inter.len()
            )));
        }
        if let Some(p) = self.intra.iter().chain(&self.inter).find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Parameter(format!("edge probability {p} outside [0, 1]")));
        }
        if self.features == 0 {
            return Err(Error::Config("SBM needs at least one attribute column".into()));
        }
        if !(self.noise >= 0.0) || !self.separation.is_finite() {
            return Err(Error::Parameter("noise must be >= 0 and separation finite".into()));
        }
        Ok(())
    }
}

/// Block means: block `b` sits on feature axis `b mod f`, offset by
/// `separation * noise` (blocks sharing an axis alternate sign and grow).
fn block_mean(block: usize, cfg: &SbmConfig) -> Vec<f64> {
    let f = cfg.features;
    let mut mean = vec![0.0; f];
    let lap = block / f;
    let sign = if lap.is_multiple_of(2) { 1.0 } else { -1.0 };
    // Noiseless data keeps the separation in absolute units.
    let unit = if cfg.noise > 0.0 { cfg.noise } else { 1.0 };
    let scale = cfg.separation * unit * (1 + lap / 2) as f64;
    mean[block % f] = sign * scale;
    mean
}

pub fn generate_sbm(cfg: &SbmConfig) -> Result<MultiRelationalGraph> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = cfg
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();

    let mut views = Vec::with_capacity(cfg.intra.len());
    for (&p_in, &p_out) in cfg.intra.iter().zip(&cfg.inter) {
        let mut adj = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let p = if labels[i] == labels[j] { p_in } else { p_out };
                if rng.random::<f64>() < p {
                    adj[(i, j)] = 1.0;
                    adj[(j, i)] = 1.0;
                }
            }
        }
        views.push(adj);
    }

    let means: Vec<Vec<f64>> = (0..cfg.blocks.len()).map(|b| block_mean(b, cfg)).collect();
    let mut x = DenseMatrix::zeros(n, cfg.features);
    for i in 0..n {
        for j in 0..cfg.features {
            let eps: f64 = rng.sample(StandardNormal);
            x[(i, j)] = means[labels[i]][j] + cfg.noise * eps;
        }
    }
    MultiRelationalGraph::new(views, x, Some(labels), cfg.blocks.len())
}
