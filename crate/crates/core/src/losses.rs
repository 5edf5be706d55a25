//! Objectives: Barlow Twins feature decorrelation, Student-t soft assignment
//! with its sharpened target, KL clustering loss and scaled cosine error.

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

/// Weight of the redundancy-reduction (off-diagonal) term.
pub const BARLOW_LAMBDA: f64 = 0.0051;

/// Columns or rows with l2 norm below this are treated as collapsed.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Cosine cross-correlation between the columns of two embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrelation {
    pub matrix: DenseMatrix,
    pub lambda: f64,
}

impl CrossCorrelation {
    pub fn new(z1: &DenseMatrix, z2: &DenseMatrix, lambda: f64) -> Result<Self> {
        Ok(Self {
            matrix: cross_correlation(z1, z2)?,
            lambda,
        })
    }

    pub fn invariance(&self) -> f64 {
        self.matrix.diagonal().iter().map(|m| (m - 1.0).powi(2)).sum()
    }

    /// Sum of squared off-diagonal entries (without the lambda weight).
    pub fn redundancy(&self) -> f64 {
        off_diagonal_mass(&self.matrix)
    }

    pub fn loss(&self) -> f64 {
        self.invariance() + self.lambda * self.redundancy()
    }
}

pub(crate) fn off_diagonal_mass(m: &DenseMatrix) -> f64 {
    let mut total = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                total += m[(i, j)] * m[(i, j)];
            }
        }
    }
    total
}

/// Soft assignment together with the target it is pulled toward.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentPair {
    pub q: DenseMatrix,
    pub p: DenseMatrix,
}

impl AssignmentPair {
    pub fn new(z: &DenseMatrix, centers: &DenseMatrix) -> Result<Self> {
        let q = soft_assignment(z, centers)?;
        let p = target_distribution(&q)?;
        Ok(Self { q, p })
    }

    pub fn kl(&self) -> Result<f64> {
        kl_clustering_loss(&self.p, &self.q)
    }
}

/// Splits `z` into unit-norm columns and their norms.
pub fn column_normalize(z: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut out = z.clone();
    let mut norms = Vec::with_capacity(z.ncols());
    for (column, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm >= DEGENERACY_EPS) {
            return Err(Error::DegenerateColumn { column, norm });
        }
        col /= norm;
        norms.push(norm);
    }
    Ok((out, norms))
}

fn same_shape(a: &DenseMatrix, b: &DenseMatrix, op: &'static str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(())
}

/// `M_ij = cos(z1[:, i], z2[:, j])`.
pub fn cross_correlation(z1: &DenseMatrix, z2: &DenseMatrix) -> Result<DenseMatrix> {
    same_shape(z1, z2, "cross_correlation")?;
    let (n1, _) = column_normalize(z1)?;
    let (n2, _) = column_normalize(z2)?;
    Ok(n1.transpose() * n2)
}

pub fn barlow_twins(z1: &DenseMatrix, z2: &DenseMatrix, lambda: f64) -> Result<f64> {
    Ok(CrossCorrelation::new(z1, z2, lambda)?.loss())
}

/// Number of unordered view pairs, `V choose 2`.
pub fn pair_count(views: usize) -> usize {
    views * views.saturating_sub(1) / 2
}

/// Unordered view pairs `(v1, v2)` with `v1 < v2`, in lexicographic order.
pub fn view_pairs(views: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..views).flat_map(move |a| ((a + 1)..views).map(move |b| (a, b)))
}

/// Mean Barlow Twins loss over all unordered view pairs.
pub fn feature_decorrelation(embeddings: &[DenseMatrix], lambda: f64) -> Result<f64> {
    if embeddings.len() < 2 {
        return Err(Error::Config(format!(
            "feature decorrelation needs at least two views, got {}",
            embeddings.len()
        )));
    }
    let mut total = 0.0;
    for (a, b) in view_pairs(embeddings.len()) {
        total += barlow_twins(&embeddings[a], &embeddings[b], lambda)?;
    }
    Ok(total / pair_count(embeddings.len()) as f64)
}

/// Student-t kernel `(1 + ||z_i - s_j||^2)^{-1}` for every node/center pair.
pub(crate) fn student_kernel(z: &DenseMatrix, centers: &DenseMatrix) -> Result<DenseMatrix> {
    if z.ncols() != centers.ncols() {
        return Err(Error::shape(
            "soft_assignment",
            format!("centers with {} columns", z.ncols()),
            format!("{}", centers.ncols()),
        ));
    }
    Ok(DenseMatrix::from_fn(z.nrows(), centers.nrows(), |i, j| {
        let d2 = (z.row(i) - centers.row(j)).norm_squared();
        1.0 / (1.0 + d2)
    }))
}

/// Row-normalized Student-t similarities between embeddings and centers.
pub fn soft_assignment(z: &DenseMatrix, centers: &DenseMatrix) -> Result<DenseMatrix> {
    if centers.nrows() == 0 {
        return Err(Error::Config("soft assignment needs at least one center".into()));
    }
    let mut q = student_kernel(z, centers)?;
    for mut row in q.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    Ok(q)
}

/// Sharpened target `p_ij ∝ q_ij^2 / sum_i q_ij`, rows summing to one.
pub fn target_distribution(q: &DenseMatrix) -> Result<DenseMatrix> {
    let freq: Vec<f64> = q.column_iter().map(|c| c.sum()).collect();
    if let Some(j) = freq.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateCluster(j));
    }
    let mut p = DenseMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * q[(i, j)] / freq[j]);
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    Ok(p)
}

/// `KL(P || Q) = sum p log(p / q)`.
pub fn kl_clustering_loss(p: &DenseMatrix, q: &DenseMatrix) -> Result<f64> {
    same_shape(p, q, "kl_clustering_loss")?;
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if !(pi > 0.0) || !(qi > 0.0) {
            return Err(Error::Domain(format!("KL needs positive entries, got p={pi}, q={qi}")));
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total)
}

pub(crate) fn row_cosines(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    same_shape(a, b, "sce")?;
    (0..a.nrows())
        .map(|i| {
            let ra = a.row(i);
            let rb = b.row(i);
            let (na, nb) = (ra.norm(), rb.norm());
            for norm in [na, nb] {
                if !(norm >= DEGENERACY_EPS) {
                    return Err(Error::DegenerateRow { row: i, norm });
                }
            }
            Ok(ra.dot(&rb) / (na * nb))
        })
        .collect()
}

/// Scaled cosine error, summed over nodes: `sum_i (1 - cos(xt_i, xr_i))^2`.
pub fn sce(smoothed: &DenseMatrix, reconstructed: &DenseMatrix) -> Result<f64> {
    Ok(row_cosines(smoothed, reconstructed)?
        .into_iter()
        .map(|c| (1.0 - c).powi(2))
        .sum())
}

/// Mean scaled cosine error across views.
pub fn msce(pairs: &[(DenseMatrix, DenseMatrix)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Config("msce needs at least one view".into()));
    }
    let mut total = 0.0;
    for (xt, xr) in pairs {
        total += sce(xt, xr)?;
    }
    Ok(total / pairs.len() as f64)
}

pub fn total_loss(msce: f64, feature_decorrelation: f64, clustering: f64) -> f64 {
    msce + feature_decorrelation + clustering
}
