//! Forward pass and analytic gradients of
//! `L = L_MSCE + L_FD + L_CLU` with respect to encoder, decoder and centers.
//!
//! The target distribution `P` is an input and is held constant while
//! differentiating.
//!
//! Gradient pieces, per view `v` with `Z = X~ W`:
//!
//! ```text
//! Barlow Twins, M = Ẑaᵀ Ẑb:   G = dL/dM,  G_ii = 2(M_ii - 1),  G_ij = 2 λ M_ij
//!                             dẐa = Ẑb Gᵀ,  dẐb = Ẑa G
//! column normalization:       dz = (dẑ - ẑ (ẑᵀ dẑ)) / ||z||
//! scaled cosine error:        d/db (1 - cos)^2 = -2 (1 - cos) (a/(|a||b|) - cos b/|b|^2)
//! KL with Student-t:          dz_i = Σ_j 2 k_ij (p_ij - q_ij)(z_i - σ_j),  dσ_j = -Σ_i (same)
//! ```

use crate::bounds::{nsd_lower_bound, psd_upper_bound};
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::losses::{
    column_normalize, kl_clustering_loss, off_diagonal_mass, pair_count, row_cosines,
    student_kernel, view_pairs, BARLOW_LAMBDA,
};

use super::{decode, encode, hstack, LossTerms, Parameters};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub feature_decorrelation: f64,
    pub reconstruction: f64,
    pub clustering: f64,
    pub total: f64,
}

/// Barlow Twins value and both bounds for one view pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDiagnostics {
    pub views: (usize, usize),
    pub barlow_twins: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: DenseMatrix,
    /// `None` when the reconstruction term is disabled.
    pub decoder: Option<DenseMatrix>,
    pub centers: DenseMatrix,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        let fin = |m: &DenseMatrix| m.iter().all(|v| v.is_finite());
        fin(&self.encoder) && self.decoder.as_ref().is_none_or(fin) && fin(&self.centers)
    }
}

/// The training objective over fixed smoothed views.
#[derive(Debug, Clone)]
pub struct Objective {
    smoothed: Vec<DenseMatrix>,
    terms: LossTerms,
    lambda: f64,
}

struct ViewCache {
    z: DenseMatrix,
    z_hat: DenseMatrix,
    norms: Vec<f64>,
    reconstruction: Option<DenseMatrix>,
}

/// Intermediate values of one forward pass.
pub struct Forward<'a> {
    objective: &'a Objective,
    params: &'a Parameters,
    views: Vec<ViewCache>,
    /// Cross-correlation for each pair in [`view_pairs`] order.
    correlations: Vec<DenseMatrix>,
    concat: DenseMatrix,
    kernel: DenseMatrix,
    q: DenseMatrix,
}

impl Objective {
    pub fn new(smoothed: Vec<DenseMatrix>, terms: LossTerms) -> Result<Self> {
        let Some(first) = smoothed.first() else {
            return Err(Error::Config("objective needs at least one view".into()));
        };
        let shape = first.shape();
        if let Some(bad) = smoothed.iter().find(|x| x.shape() != shape) {
            return Err(Error::shape(
                "Objective::new",
                format!("{}x{}", shape.0, shape.1),
                format!("{}x{}", bad.nrows(), bad.ncols()),
            ));
        }
        Ok(Self {
            smoothed,
            terms,
            lambda: BARLOW_LAMBDA,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n_views(&self) -> usize {
        self.smoothed.len()
    }

    pub fn smoothed(&self) -> &[DenseMatrix] {
        &self.smoothed
    }

    pub fn terms(&self) -> LossTerms {
        self.terms
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True when the decorrelation term is actually evaluated.
    pub fn uses_decorrelation(&self) -> bool {
        self.terms.feature_decorrelation && self.n_views() >= 2
    }

    pub fn forward<'a>(&'a self, params: &'a Parameters) -> Result<Forward<'a>> {
        let d = params.encoder.ncols();
        let expected_width = d * self.n_views();
        if params.centers.ncols() != expected_width {
            return Err(Error::shape(
                "Objective::forward",
                format!("centers with {expected_width} columns"),
                format!("{}", params.centers.ncols()),
            ));
        }
        let views = self
            .smoothed
            .iter()
            .map(|x| {
                let z = encode(x, &params.encoder)?;
                let (z_hat, norms) = column_normalize(&z)?;
                let reconstruction = if self.terms.reconstruction {
                    Some(decode(&z, &params.decoder)?)
                } else {
                    None
                };
                Ok(ViewCache {
                    z,
                    z_hat,
                    norms,
                    reconstruction,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let correlations = view_pairs(views.len())
            .map(|(a, b)| views[a].z_hat.transpose() * &views[b].z_hat)
            .collect();
        let concat = hstack(&views.iter().map(|v| v.z.clone()).collect::<Vec<_>>());
        let kernel = student_kernel(&concat, &params.centers)?;
        let mut q = kernel.clone();
        for mut row in q.row_iter_mut() {
            let s = row.sum();
            row /= s;
        }
        Ok(Forward {
            objective: self,
            params,
            views,
            correlations,
            concat,
            kernel,
            q,
        })
    }
}

fn barlow_from_correlation(m: &DenseMatrix, lambda: f64) -> f64 {
    let inv: f64 = m.diagonal().iter().map(|x| (x - 1.0).powi(2)).sum();
    inv + lambda * off_diagonal_mass(m)
}

fn column_normalize_backward(z_hat: &DenseMatrix, norms: &[f64], grad_hat: &DenseMatrix) -> DenseMatrix {
    let mut out = grad_hat.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let zh = z_hat.column(j);
        let proj = zh.dot(&col);
        col.axpy(-proj, &zh, 1.0);
        col /= norms[j];
    }
    out
}

impl Forward<'_> {
    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn embedding(&self) -> &DenseMatrix {
        &self.concat
    }

    pub fn view_embedding(&self, view: usize) -> &DenseMatrix {
        &self.views[view].z
    }

    pub fn column_norms(&self, view: usize) -> &[f64] {
        &self.views[view].norms
    }

    pub fn correlation(&self, pair: usize) -> &DenseMatrix {
        &self.correlations[pair]
    }

    /// Barlow Twins value and bounds for every view pair, whether or not the
    /// decorrelation term is being trained.
    pub fn pair_diagnostics(&self) -> Result<Vec<PairDiagnostics>> {
        let lambda = self.objective.lambda;
        view_pairs(self.views.len())
            .zip(&self.correlations)
            .map(|((a, b), m)| {
                Ok(PairDiagnostics {
                    views: (a, b),
                    barlow_twins: barlow_from_correlation(m, lambda),
                    lower_bound: nsd_lower_bound(&self.views[a].norms, &self.views[b].norms)?,
                    upper_bound: psd_upper_bound(m, lambda),
                })
            })
            .collect()
    }

    fn decorrelation_value(&self) -> f64 {
        let lambda = self.objective.lambda;
        let sum: f64 = self
            .correlations
            .iter()
            .map(|m| barlow_from_correlation(m, lambda))
            .sum();
        sum / pair_count(self.views.len()) as f64
    }

    fn reconstruction_value(&self) -> Result<f64> {
        let mut total = 0.0;
        for (x, view) in self.objective.smoothed.iter().zip(&self.views) {
            let rec = view.reconstruction.as_ref().expect("decoder enabled");
            total += row_cosines(x, rec)?.into_iter().map(|c| (1.0 - c).powi(2)).sum::<f64>();
        }
        Ok(total / self.views.len() as f64)
    }

    /// Loss values, with `target` playing the role of `P`.
    pub fn loss(&self, target: &DenseMatrix) -> Result<LossBreakdown> {
        let terms = self.objective.terms;
        let mut out = LossBreakdown::default();
        if self.objective.uses_decorrelation() {
            out.feature_decorrelation = self.decorrelation_value();
        }
        if terms.reconstruction {
            out.reconstruction = self.reconstruction_value()?;
        }
        if terms.clustering {
            out.clustering = kl_clustering_loss(target, &self.q)?;
        }
        out.total = out.reconstruction + out.feature_decorrelation + out.clustering;
        Ok(out)
    }

    /// Gradient of the total loss with `target` held fixed.
    pub fn backward(&self, target: &DenseMatrix) -> Result<Gradients> {
        let objective = self.objective;
        let terms = objective.terms;
        let n_views = self.views.len();
        let d = self.params.encoder.ncols();
        let mut grad_z: Vec<DenseMatrix> = self
            .views
            .iter()
            .map(|v| DenseMatrix::zeros(v.z.nrows(), v.z.ncols()))
            .collect();

        if objective.uses_decorrelation() {
            let scale = 1.0 / pair_count(n_views) as f64;
            for ((a, b), m) in view_pairs(n_views).zip(&self.correlations) {
                let g = DenseMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        2.0 * (m[(i, i)] - 1.0) * scale
                    } else {
                        2.0 * objective.lambda * m[(i, j)] * scale
                    }
                });
                let (va, vb) = (&self.views[a], &self.views[b]);
                let grad_hat_a = &vb.z_hat * g.transpose();
                let grad_hat_b = &va.z_hat * &g;
                grad_z[a] += column_normalize_backward(&va.z_hat, &va.norms, &grad_hat_a);
                grad_z[b] += column_normalize_backward(&vb.z_hat, &vb.norms, &grad_hat_b);
            }
        }

        let decoder = if terms.reconstruction {
            let decoder = &self.params.decoder;
            let mut grad_dec = DenseMatrix::zeros(decoder.nrows(), decoder.ncols());
            let scale = 1.0 / n_views as f64;
            for (v, (x, view)) in objective.smoothed.iter().zip(&self.views).enumerate() {
                let rec = view.reconstruction.as_ref().expect("decoder enabled");
                let cosines = row_cosines(x, rec)?;
                let mut grad_rec = DenseMatrix::zeros(rec.nrows(), rec.ncols());
                for (i, &c) in cosines.iter().enumerate() {
                    let a = x.row(i);
                    let b = rec.row(i);
                    let (na, nb) = (a.norm(), b.norm());
                    let outer = -2.0 * (1.0 - c) * scale;
                    let row = (a / (na * nb) - b * (c / (nb * nb))) * outer;
                    grad_rec.row_mut(i).copy_from(&row);
                }
                grad_dec += view.z.transpose() * &grad_rec;
                grad_z[v] += grad_rec * decoder.transpose();
            }
            Some(grad_dec)
        } else {
            None
        };

        let centers = &self.params.centers;
        let mut grad_centers = DenseMatrix::zeros(centers.nrows(), centers.ncols());
        if terms.clustering {
            if target.shape() != self.q.shape() {
                return Err(Error::shape(
                    "Forward::backward",
                    format!("{}x{} target", self.q.nrows(), self.q.ncols()),
                    format!("{}x{}", target.nrows(), target.ncols()),
                ));
            }
            let coef = DenseMatrix::from_fn(self.q.nrows(), self.q.ncols(), |i, j| {
                2.0 * self.kernel[(i, j)] * (target[(i, j)] - self.q[(i, j)])
            });
            let row_sums: Vec<f64> = coef.row_iter().map(|r| r.sum()).collect();
            let col_sums: Vec<f64> = coef.column_iter().map(|c| c.sum()).collect();
            let mut grad_concat = -(&coef * centers);
            for (i, mut row) in grad_concat.row_iter_mut().enumerate() {
                row += self.concat.row(i) * row_sums[i];
            }
            grad_centers = -(coef.transpose() * &self.concat);
            for (j, mut row) in grad_centers.row_iter_mut().enumerate() {
                row += centers.row(j) * col_sums[j];
            }
            for (v, g) in grad_z.iter_mut().enumerate() {
                *g += grad_concat.columns(v * d, d);
            }
        }

        let mut grad_enc = DenseMatrix::zeros(self.params.encoder.nrows(), d);
        for (x, g) in objective.smoothed.iter().zip(&grad_z) {
            grad_enc += x.transpose() * g;
        }
        Ok(Gradients {
            encoder: grad_enc,
            decoder,
            centers: grad_centers,
        })
    }
}
