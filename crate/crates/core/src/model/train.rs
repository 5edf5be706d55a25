use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{inner_product_matrix, symmetric_part_eigenvalues};
use crate::error::{Error, Result};
use crate::filter::smoothed_views;
use crate::graph::{DenseMatrix, MultiRelationalGraph};
use crate::losses::{target_distribution, view_pairs};

use super::{
    adam_step, assign_labels, concat_embedding, kmeans, AdamConfig, AdamState, ModelState,
    Objective, PairDiagnostics, Parameters, TrainConfig,
};

/// Loss values for one epoch, evaluated before that epoch's update.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub epoch: usize,
    pub feature_decorrelation: f64,
    pub reconstruction: f64,
    pub clustering: f64,
    pub total: f64,
    pub pairs: Vec<PairDiagnostics>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: ModelState,
    pub history: Vec<LossReport>,
    pub labels: Vec<usize>,
    /// Final concatenated embedding, n x (V d).
    pub embedding: DenseMatrix,
    pub q: DenseMatrix,
    /// Minimum eigenvalue of the symmetrized inner product per view pair.
    pub pair_min_eigs: Vec<f64>,
    /// Set when there is a single view and the decorrelation term was dropped.
    pub decorrelation_omitted: bool,
}

fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-bound..bound))
}

/// Fan-in scaled uniform initialization of encoder and decoder.
fn init_weights(f: usize, d: usize, rng: &mut ChaCha8Rng) -> (DenseMatrix, DenseMatrix) {
    let enc = uniform(f, d, 1.0 / (f as f64).sqrt(), rng);
    let dec = uniform(d, f, 1.0 / (d as f64).sqrt(), rng);
    (enc, dec)
}

/// Trains on pre-smoothed views. [`train`] is the usual entry point.
pub fn train_on_views(smoothed: Vec<DenseMatrix>, n_clusters: usize, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let objective = Objective::new(smoothed, cfg.terms)?;
    let f = objective.smoothed()[0].ncols();
    let n_views = objective.n_views();

    let pair_min_eigs = view_pairs(n_views)
        .map(|(a, b)| {
            let h = inner_product_matrix(&objective.smoothed()[a], &objective.smoothed()[b])?;
            Ok(symmetric_part_eigenvalues(&h)?[0])
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (encoder, decoder) = init_weights(f, cfg.d, &mut rng);
    let initial = concat_embedding(objective.smoothed(), &encoder)?;
    let centers = kmeans(&initial, n_clusters, cfg.kmeans_restarts, rng.random())?.centers;
    let mut params = Parameters {
        encoder,
        decoder,
        centers,
    };
    let mut adam = AdamState::zeros_like(&params);
    let adam_cfg = AdamConfig::new(cfg.learning_rate, cfg.weight_decay);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut target: Option<DenseMatrix> = None;
    for epoch in 0..cfg.epochs {
        let grads;
        {
            let fwd = objective.forward(&params)?;
            if epoch % cfg.target_refresh_interval == 0 || target.is_none() {
                target = Some(target_distribution(fwd.q())?);
            }
            let p = target.as_ref().expect("target set above");
            let loss = fwd.loss(p)?;
            if !loss.total.is_finite() {
                return Err(Error::Divergence { epoch, loss: loss.total });
            }
            grads = fwd.backward(p)?;
            if !grads.is_finite() {
                return Err(Error::Divergence { epoch, loss: loss.total });
            }
            history.push(LossReport {
                epoch,
                feature_decorrelation: loss.feature_decorrelation,
                reconstruction: loss.reconstruction,
                clustering: loss.clustering,
                total: loss.total,
                pairs: fwd.pair_diagnostics()?,
            });
        }
        adam_step(&mut params, &mut adam, &grads, &adam_cfg);
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss: f64::NAN,
            });
        }
    }

    let (labels, embedding, q) = {
        let fwd = objective.forward(&params)?;
        (assign_labels(fwd.q()), fwd.embedding().clone(), fwd.q().clone())
    };
    Ok(TrainOutcome {
        state: ModelState {
            params,
            adam,
            epoch: cfg.epochs,
            n_views,
        },
        history,
        labels,
        embedding,
        q,
        pair_min_eigs,
        decorrelation_omitted: n_views < 2 && cfg.terms.feature_decorrelation,
    })
}

/// Filters every view, then trains the shared auto-encoder and clustering head.
pub fn train(graph: &MultiRelationalGraph, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let smoothed = smoothed_views(graph, &cfg.filter)?;
    train_on_views(smoothed, graph.n_clusters(), cfg)
}
