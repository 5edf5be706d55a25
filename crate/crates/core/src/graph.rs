//! Multi-relational graph container and the analytic filter family.
//!
//! Every view carries its own symmetric, nonnegative adjacency over a shared
//! node set. The renormalized adjacency adds self-loops before computing
//! degrees, so `D_ii >= 1` always holds and isolated nodes need no special
//! casing:
//!
//! ```text
//! A = D^{-1/2} (adj + I) D^{-1/2},   D = diag(rowsum(adj + I))
//! L = I - A                          eigenvalues in [0, 2)
//! low-pass:  (I - L/2)^k
//! mix-pass:  (I - L/2)^2 + (L/2)^2
//! ```

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense row/column matrix used for adjacencies, filters, attributes and embeddings.
pub type DenseMatrix = DMatrix<f64>;

/// Asymmetry at or below this level is repaired by averaging with the transpose.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiRelationalGraph {
    adjacency: Vec<DenseMatrix>,
    attributes: DenseMatrix,
    labels: Option<Vec<usize>>,
    n_clusters: usize,
}

impl MultiRelationalGraph {
    /// Builds a graph, validating every view against the attribute matrix.
    ///
    /// Adjacencies with asymmetry below [`SYMMETRY_TOLERANCE`] are symmetrized.
    pub fn new(
        adjacency: Vec<DenseMatrix>,
        attributes: DenseMatrix,
        labels: Option<Vec<usize>>,
        n_clusters: usize,
    ) -> Result<Self> {
        if adjacency.is_empty() {
            return Err(Error::Config("a multi-relational graph needs at least one view".into()));
        }
        let n = attributes.nrows();
        ensure_finite(&attributes, "attributes")?;
        let adjacency = adjacency
            .into_iter()
            .map(|adj| {
                if adj.nrows() != n || adj.ncols() != n {
                    return Err(Error::shape(
                        "MultiRelationalGraph::new",
                        format!("{n}x{n} adjacency"),
                        format!("{}x{}", adj.nrows(), adj.ncols()),
                    ));
                }
                validate_adjacency(adj)
            })
            .collect::<Result<Vec<_>>>()?;
        if n_clusters == 0 {
            return Err(Error::Config("number of clusters must be at least 1".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::shape(
                    "MultiRelationalGraph::new",
                    format!("{n} labels"),
                    format!("{}", labels.len()),
                ));
            }
        }
        Ok(Self {
            adjacency,
            attributes,
            labels,
            n_clusters,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.attributes.nrows()
    }

    pub fn n_views(&self) -> usize {
        self.adjacency.len()
    }

    pub fn n_features(&self) -> usize {
        self.attributes.ncols()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn adjacency(&self, view: usize) -> &DenseMatrix {
        &self.adjacency[view]
    }

    pub fn views(&self) -> impl Iterator<Item = &DenseMatrix> {
        self.adjacency.iter()
    }

    pub fn attributes(&self) -> &DenseMatrix {
        &self.attributes
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Replaces the attribute matrix, keeping the topology.
    pub fn with_attributes(mut self, attributes: DenseMatrix) -> Result<Self> {
        if attributes.nrows() != self.n_nodes() {
            return Err(Error::shape(
                "with_attributes",
                format!("{} rows", self.n_nodes()),
                format!("{}", attributes.nrows()),
            ));
        }
        ensure_finite(&attributes, "attributes")?;
        self.attributes = attributes;
        Ok(self)
    }

    /// Keeps only the listed views, in the given order.
    pub fn select_views(&self, views: &[usize]) -> Result<Self> {
        let adjacency = views
            .iter()
            .map(|&v| {
                self.adjacency
                    .get(v)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("view {v} does not exist")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(adjacency, self.attributes.clone(), self.labels.clone(), self.n_clusters)
    }
}

fn validate_adjacency(adj: DenseMatrix) -> Result<DenseMatrix> {
    ensure_finite(&adj, "adjacency")?;
    let adj = symmetrize(adj)?;
    let n = adj.nrows();
    for row in 0..n {
        for col in 0..n {
            let value = adj[(row, col)];
            if value < 0.0 {
                return Err(Error::NegativeEntry { row, col, value });
            }
        }
    }
    Ok(adj)
}

pub(crate) fn ensure_square(m: &DenseMatrix, op: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(
            op,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

pub(crate) fn ensure_finite(m: &DenseMatrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Largest absolute difference between `m` and its transpose.
pub fn max_asymmetry(m: &DenseMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Averages `m` with its transpose when the asymmetry is within tolerance.
pub fn symmetrize(m: DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(&m, "symmetrize")?;
    let asym = max_asymmetry(&m);
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asym));
    }
    if asym == 0.0 {
        return Ok(m);
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Renormalized adjacency `D^{-1/2} (adj + I) D^{-1/2}`.
pub fn normalize_adjacency(adj: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(adj, "normalize_adjacency")?;
    let adj = validate_adjacency(adj.clone())?;
    let n = adj.nrows();
    let with_loops = adj + DenseMatrix::identity(n, n);
    let inv_sqrt_deg: Vec<f64> = with_loops
        .row_iter()
        .map(|row| 1.0 / row.sum().sqrt())
        .collect();
    Ok(DenseMatrix::from_fn(n, n, |i, j| {
        with_loops[(i, j)] * inv_sqrt_deg[i] * inv_sqrt_deg[j]
    }))
}

/// `L = I - A`.
pub fn laplacian(normalized_adjacency: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(normalized_adjacency, "laplacian")?;
    let n = normalized_adjacency.nrows();
    Ok(DenseMatrix::identity(n, n) - normalized_adjacency)
}

/// Convenience: Laplacian of the renormalized adjacency of a raw view.
pub fn view_laplacian(adj: &DenseMatrix) -> Result<DenseMatrix> {
    laplacian(&normalize_adjacency(adj)?)
}

/// `(I - L/2)^k` by repeated multiplication.
pub fn low_pass_filter(laplacian: &DenseMatrix, order: usize) -> Result<DenseMatrix> {
    ensure_square(laplacian, "low_pass_filter")?;
    if order < 1 {
        return Err(Error::Parameter(format!("low-pass order must be >= 1, got {order}")));
    }
    let n = laplacian.nrows();
    let base = DenseMatrix::identity(n, n) - laplacian * 0.5;
    let mut out = base.clone();
    for _ in 1..order {
        out = &out * &base;
    }
    Ok(out)
}

/// `(I - L/2)^2 + (L/2)^2`.
pub fn mix_pass_filter(laplacian: &DenseMatrix) -> Result<DenseMatrix> {
    ensure_square(laplacian, "mix_pass_filter")?;
    let low = low_pass_filter(laplacian, 2)?;
    let half = laplacian * 0.5;
    Ok(low + &half * &half)
}
