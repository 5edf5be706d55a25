//! Barlow-Twins-guided graph filter.
//!
//! The learned filter for a view minimizes
//!
//! ```text
//! J(K) = ||X - K X||_F^2 + gamma ||K - phi(L)||_F^2,   phi(L) = (I - L/2)^k
//! ```
//!
//! Setting the gradient to zero gives `K (X X^T + gamma I) = X X^T + gamma phi(L)`,
//! so `K = B A^{-1}` with `A = X X^T + gamma I` and `B = X X^T + gamma phi(L)`.
//! The naive route factors the n x n matrix `A`; the Woodbury route rewrites
//! `A^{-1} = I/gamma - X S^{-1} X^T / gamma^2` with the f x f matrix
//! `S = I + X^T X / gamma`, which costs O(n^2 f) instead of O(n^3).

use nalgebra::linalg::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    ensure_finite, ensure_square, low_pass_filter, mix_pass_filter, view_laplacian, DenseMatrix,
    MultiRelationalGraph,
};

pub const DEFAULT_GAMMA: f64 = 10.0;
pub const DEFAULT_ORDER: usize = 2;

/// Tuning grid for the low-pass order.
pub const ORDER_GRID: [usize; 5] = [1, 2, 3, 4, 5];
/// Tuning grid for the trade-off between self-expression and the low-pass prior.
pub const GAMMA_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// Closed-form minimizer of the self-expression objective.
    Learned,
    /// `(I - L/2)^k`.
    LowPass,
    /// `(I - L/2)^2 + (L/2)^2`.
    MixPass,
    /// No filtering.
    Identity,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] = [
        FilterKind::Learned,
        FilterKind::LowPass,
        FilterKind::MixPass,
        FilterKind::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Learned => "learned",
            FilterKind::LowPass => "low_pass",
            FilterKind::MixPass => "mix_pass",
            FilterKind::Identity => "identity",
        }
    }
}

/// Which linear-algebra route the learned filter takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Woodbury when `f < n`, naive otherwise.
    #[default]
    Auto,
    Naive,
    Woodbury,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub gamma: f64,
    pub k: usize,
    pub kind: FilterKind,
    pub method: SolveMethod,
    /// Scale every attribute row to unit l2 norm before filtering.
    pub row_normalize: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            k: DEFAULT_ORDER,
            kind: FilterKind::Learned,
            method: SolveMethod::Auto,
            row_normalize: false,
        }
    }
}

impl FilterConfig {
    pub fn learned(gamma: f64, k: usize) -> Self {
        Self {
            gamma,
            k,
            ..Self::default()
        }
    }

    pub fn of_kind(kind: FilterKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("gamma must be a positive finite number, got {}", self.gamma)));
        }
        if self.k < 1 {
            return Err(Error::Parameter(format!("filter order k must be >= 1, got {}", self.k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterMatrix {
    pub matrix: DenseMatrix,
    pub config: FilterConfig,
}

impl FilterMatrix {
    pub fn apply(&self, attributes: &DenseMatrix) -> Result<DenseMatrix> {
        apply_filter(&self.matrix, attributes)
    }
}

/// Value of the self-expression objective for a candidate filter.
pub fn filter_objective(k: &DenseMatrix, x: &DenseMatrix, prior: &DenseMatrix, gamma: f64) -> f64 {
    let fit = x - k * x;
    let reg = k - prior;
    fit.norm_squared() + gamma * reg.norm_squared()
}

fn check_inputs(x: &DenseMatrix, laplacian: &DenseMatrix, cfg: &FilterConfig) -> Result<()> {
    cfg.validate()?;
    ensure_square(laplacian, "solve_filter")?;
    if laplacian.nrows() != x.nrows() {
        return Err(Error::shape(
            "solve_filter",
            format!("{} attribute rows", laplacian.nrows()),
            format!("{}", x.nrows()),
        ));
    }
    ensure_finite(x, "attributes")?;
    ensure_finite(laplacian, "laplacian")
}

fn spd_factor(m: DenseMatrix) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    // gamma > 0 makes both systems positive definite, so this only fails on overflow.
    Cholesky::new(m).ok_or(Error::NonFinite("filter system"))
}

/// Learned filter via a dense n x n positive-definite solve.
pub fn solve_filter_naive(x: &DenseMatrix, laplacian: &DenseMatrix, cfg: &FilterConfig) -> Result<DenseMatrix> {
    check_inputs(x, laplacian, cfg)?;
    let prior = low_pass_filter(laplacian, cfg.k)?;
    solve_naive_with_prior(x, &prior, cfg.gamma)
}

/// Learned filter via the Woodbury identity; the only factorization is f x f.
pub fn solve_filter_woodbury(x: &DenseMatrix, laplacian: &DenseMatrix, cfg: &FilterConfig) -> Result<DenseMatrix> {
    check_inputs(x, laplacian, cfg)?;
    let prior = low_pass_filter(laplacian, cfg.k)?;
    solve_woodbury_with_prior(x, &prior, cfg.gamma)
}

/// Learned filter, picking the cheaper route unless `cfg.method` forces one.
pub fn solve_filter(x: &DenseMatrix, laplacian: &DenseMatrix, cfg: &FilterConfig) -> Result<DenseMatrix> {
    match resolve_method(cfg.method, x) {
        SolveMethod::Naive => solve_filter_naive(x, laplacian, cfg),
        _ => solve_filter_woodbury(x, laplacian, cfg),
    }
}

fn resolve_method(method: SolveMethod, x: &DenseMatrix) -> SolveMethod {
    match method {
        SolveMethod::Auto if x.ncols() < x.nrows() => SolveMethod::Woodbury,
        SolveMethod::Auto => SolveMethod::Naive,
        m => m,
    }
}

/// Naive route for a precomputed prior `phi(L)`.
pub fn solve_naive_with_prior(x: &DenseMatrix, prior: &DenseMatrix, gamma: f64) -> Result<DenseMatrix> {
    let n = x.nrows();
    let gram = x * x.transpose();
    let system = &gram + DenseMatrix::identity(n, n) * gamma;
    let rhs = &gram + prior * gamma;
    // K A = B  <=>  A K^T = B^T
    let chol = spd_factor(system)?;
    Ok(chol.solve(&rhs.transpose()).transpose())
}

/// Woodbury route for a precomputed prior `phi(L)`.
pub fn solve_woodbury_with_prior(x: &DenseMatrix, prior: &DenseMatrix, gamma: f64) -> Result<DenseMatrix> {
    let f = x.ncols();
    let xt = x.transpose();
    let xtx = &xt * x;
    let inner = DenseMatrix::identity(f, f) + &xtx * (1.0 / gamma);
    // B X = X (X^T X) + gamma phi X
    let bx = x * &xtx + (prior * x) * gamma;
    // (B X) S^{-1} = (S^{-1} (B X)^T)^T, S symmetric
    let chol = spd_factor(inner)?;
    let bx_sinv = chol.solve(&bx.transpose()).transpose();
    let mut k = prior.clone();
    k += (x * &xt) * (1.0 / gamma);
    k -= (bx_sinv * xt) * (1.0 / (gamma * gamma));
    Ok(k)
}

/// `X~ = K X`.
pub fn apply_filter(k: &DenseMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if k.ncols() != x.nrows() {
        return Err(Error::shape(
            "apply_filter",
            format!("{} attribute rows", k.ncols()),
            format!("{}", x.nrows()),
        ));
    }
    Ok(k * x)
}

/// Builds the filter for one raw adjacency view.
pub fn make_filter(adjacency: &DenseMatrix, x: &DenseMatrix, cfg: &FilterConfig) -> Result<FilterMatrix> {
    cfg.validate()?;
    let n = adjacency.nrows();
    let matrix = match cfg.kind {
        FilterKind::Identity => {
            ensure_square(adjacency, "make_filter")?;
            DenseMatrix::identity(n, n)
        }
        FilterKind::LowPass => low_pass_filter(&view_laplacian(adjacency)?, cfg.k)?,
        FilterKind::MixPass => mix_pass_filter(&view_laplacian(adjacency)?)?,
        FilterKind::Learned => solve_filter(x, &view_laplacian(adjacency)?, cfg)?,
    };
    ensure_finite(&matrix, "filter")?;
    Ok(FilterMatrix { matrix, config: *cfg })
}

/// Scales every nonzero row of `x` to unit l2 norm.
pub fn row_normalize(x: &DenseMatrix) -> DenseMatrix {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

/// Attributes as the filter sees them (optionally row-normalized).
pub fn prepared_attributes(graph: &MultiRelationalGraph, cfg: &FilterConfig) -> DenseMatrix {
    if cfg.row_normalize {
        row_normalize(graph.attributes())
    } else {
        graph.attributes().clone()
    }
}

/// One filter per view, solved independently.
pub fn make_filters(graph: &MultiRelationalGraph, cfg: &FilterConfig) -> Result<Vec<FilterMatrix>> {
    let x = prepared_attributes(graph, cfg);
    (0..graph.n_views())
        .into_par_iter()
        .map(|v| make_filter(graph.adjacency(v), &x, cfg))
        .collect()
}

/// Smoothed attributes `K^v X` for every view.
pub fn smoothed_views(graph: &MultiRelationalGraph, cfg: &FilterConfig) -> Result<Vec<DenseMatrix>> {
    let x = prepared_attributes(graph, cfg);
    make_filters(graph, cfg)?
        .iter()
        .map(|k| k.apply(&x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn apply_filter_examples() {
        let x = dmatrix![1.0, 0.0; 0.0, 1.0];
        let k = dmatrix![0.75, 0.25; 0.25, 0.75];
        assert_eq!(apply_filter(&k, &x).unwrap(), k);
        assert_eq!(apply_filter(&DenseMatrix::identity(2, 2), &x).unwrap(), x);
        assert_eq!(apply_filter(&DenseMatrix::zeros(2, 2), &x).unwrap(), DenseMatrix::zeros(2, 2));
        assert!(apply_filter(&DenseMatrix::zeros(3, 3), &x).is_err());
    }

    #[test]
    fn zero_laplacian_gives_identity() {
        let x = dmatrix![1.0, 2.0; -0.5, 0.3; 0.7, 0.1];
        let l = DenseMatrix::zeros(3, 3);
        let cfg = FilterConfig::learned(1.0, 2);
        for k in [solve_filter_naive(&x, &l, &cfg).unwrap(), solve_filter_woodbury(&x, &l, &cfg).unwrap()] {
            assert!((k - DenseMatrix::identity(3, 3)).abs().max() < 1e-12);
        }
    }

    #[test]
    fn zero_attributes_give_prior() {
        let adj = dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 1.0; 0.0, 1.0, 0.0];
        let l = view_laplacian(&adj).unwrap();
        let prior = low_pass_filter(&l, 2).unwrap();
        let cfg = FilterConfig::learned(10.0, 2);
        let x = DenseMatrix::zeros(3, 2);
        assert!((solve_filter_naive(&x, &l, &cfg).unwrap() - &prior).abs().max() < 1e-15);
        assert_eq!(solve_filter_woodbury(&x, &l, &cfg).unwrap(), prior);
    }

    #[test]
    fn parameter_validation() {
        let x = DenseMatrix::zeros(2, 1);
        let l = DenseMatrix::zeros(2, 2);
        let bad_gamma = FilterConfig::learned(0.0, 2);
        assert!(matches!(solve_filter_naive(&x, &l, &bad_gamma), Err(Error::Parameter(_))));
        let bad_k = FilterConfig::learned(1.0, 0);
        assert!(matches!(solve_filter_woodbury(&x, &l, &bad_k), Err(Error::Parameter(_))));
        let mut nan = x.clone();
        nan[(0, 0)] = f64::NAN;
        assert!(matches!(solve_filter_naive(&nan, &l, &FilterConfig::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn dispatch_by_kind() {
        let adj = dmatrix![0.0, 1.0; 1.0, 0.0];
        let x = dmatrix![1.0; 2.0];
        let id = make_filter(&adj, &x, &FilterConfig::of_kind(FilterKind::Identity)).unwrap();
        assert_eq!(id.matrix, DenseMatrix::identity(2, 2));
        let low = make_filter(&adj, &x, &FilterConfig::of_kind(FilterKind::LowPass)).unwrap();
        assert!((low.matrix - dmatrix![0.625, 0.375; 0.375, 0.625]).abs().max() < 1e-15);
        let mix = make_filter(&adj, &x, &FilterConfig::of_kind(FilterKind::MixPass)).unwrap();
        assert!((mix.matrix - dmatrix![0.75, 0.25; 0.25, 0.75]).abs().max() < 1e-15);
        assert_eq!(mix.config.kind, FilterKind::MixPass);
    }

    #[test]
    fn auto_method_selection() {
        let tall = DenseMatrix::zeros(5, 2);
        let wide = DenseMatrix::zeros(2, 5);
        assert_eq!(resolve_method(SolveMethod::Auto, &tall), SolveMethod::Woodbury);
        assert_eq!(resolve_method(SolveMethod::Auto, &wide), SolveMethod::Naive);
        assert_eq!(resolve_method(SolveMethod::Naive, &tall), SolveMethod::Naive);
    }

    #[test]
    fn row_normalize_skips_zero_rows() {
        let x = dmatrix![3.0, 4.0; 0.0, 0.0];
        assert_eq!(row_normalize(&x), dmatrix![0.6, 0.8; 0.0, 0.0]);
    }
}
