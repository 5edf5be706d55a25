//! Clustering evaluation against ground truth.
//!
//! | Metric | Range | Notes |
//! |--------|-------|-------|
//! | [`hungarian_accuracy`] | [0, 1] | best one-to-one relabeling of predictions |
//! | [`macro_f1`] | [0, 1] | unweighted mean of per-class F1 after relabeling |
//! | [`nmi`] | [0, 1] | mutual information over the arithmetic mean of entropies |
//! | [`ari`] | [-0.5, 1] | pair-counting index adjusted for chance |
//!
//! [`silhouette`] is an internal criterion for data without labels.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvaluation {
    pub acc: f64,
    pub f1: f64,
    pub nmi: f64,
    pub ari: f64,
    /// `mapping[predicted] = truth` label.
    pub mapping: Vec<usize>,
}

impl ClusterEvaluation {
    pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let (acc, mapping) = hungarian_accuracy(pred, truth)?;
        Ok(Self {
            acc,
            f1: macro_f1(pred, truth, &mapping)?,
            nmi: nmi(pred, truth)?,
            ari: ari(pred, truth)?,
            mapping,
        })
    }
}

fn check_labels(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::shape(
            "clustering metric",
            format!("{} predicted labels", truth.len()),
            format!("{}", pred.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Config("clustering metrics need at least one point".into()));
    }
    Ok(())
}

fn n_labels(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |&m| m + 1)
}

/// Counts `table[p][t]` of points with predicted label `p` and true label `t`.
fn contingency(pred: &[usize], truth: &[usize]) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; n_labels(truth)]; n_labels(pred)];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1;
    }
    table
}

/// Minimum-cost perfect assignment on a square cost matrix.
///
/// Returns `assignment[row] = column`. Shortest augmenting path with
/// potentials, O(k^3).
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let k = cost.len();
    if k == 0 {
        return Vec::new();
    }
    // 1-indexed arrays; column 0 is a virtual source.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r = owner[col0];
            let mut delta = f64::INFINITY;
            let mut next = 0;
            for col in 1..=k {
                if used[col] {
                    continue;
                }
                let reduced = cost[r - 1][col - 1] - u[r] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    next = col;
                }
            }
            for col in 0..=k {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = next;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; k];
    for col in 1..=k {
        if owner[col] > 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

/// Accuracy under the best one-to-one mapping of predicted to true labels.
///
/// Among mappings with the same matched count the one with the largest sum
/// of per-pair F1 scores `2 n_pt / (|p| + |t|)` wins, so the returned mapping
/// and the F1 computed from it do not depend on how predictions are numbered.
pub fn hungarian_accuracy(pred: &[usize], truth: &[usize]) -> Result<(f64, Vec<usize>)> {
    check_labels(pred, truth)?;
    let table = contingency(pred, truth);
    let k = n_labels(pred).max(n_labels(truth));
    let count = |p: usize, t: usize| table.get(p).and_then(|r| r.get(t)).copied().unwrap_or(0);
    let pred_sizes: Vec<usize> = (0..k).map(|p| (0..k).map(|t| count(p, t)).sum()).collect();
    let truth_sizes: Vec<usize> = (0..k).map(|t| (0..k).map(|p| count(p, t)).sum()).collect();
    // total tie-break weight stays below one matched point
    let eps = 1.0 / (k as f64 + 1.0);
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|p| {
            (0..k)
                .map(|t| {
                    let n = count(p, t) as f64;
                    let f1 = if n > 0.0 { 2.0 * n / (pred_sizes[p] + truth_sizes[t]) as f64 } else { 0.0 };
                    -(n + eps * f1)
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost);
    let matched: usize = assignment.iter().enumerate().map(|(p, &t)| count(p, t)).sum();
    let mapping = assignment[..n_labels(pred)].to_vec();
    Ok((matched as f64 / pred.len() as f64, mapping))
}

/// Macro-averaged F1 after relabeling predictions through `mapping`.
pub fn macro_f1(pred: &[usize], truth: &[usize], mapping: &[usize]) -> Result<f64> {
    check_labels(pred, truth)?;
    let mapped: Vec<usize> = pred
        .iter()
        .map(|&p| {
            mapping
                .get(p)
                .copied()
                .ok_or_else(|| Error::Config(format!("label {p} missing from mapping")))
        })
        .collect::<Result<_>>()?;
    let classes: BTreeSet<usize> = truth.iter().chain(&mapped).copied().collect();
    let mut total = 0.0;
    for &class in &classes {
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fn_ = 0usize;
        for (&m, &t) in mapped.iter().zip(truth) {
            match (m == class, t == class) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        if tp > 0 {
            total += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        }
    }
    Ok(total / classes.len() as f64)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `2 I(U;V) / (H(U) + H(V))`.
///
/// When either partition has zero entropy the result is 1 if both are a
/// single cluster and 0 otherwise.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_labels(pred, truth)?;
    let n = pred.len() as f64;
    let table = contingency(pred, truth);
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<usize> = (0..n_labels(truth)).map(|t| table.iter().map(|r| r[t]).sum()).collect();
    let h_pred = entropy(row_sums.iter().copied(), n);
    let h_truth = entropy(col_sums.iter().copied(), n);
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(if h_pred == 0.0 && h_truth == 0.0 { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (p, row) in table.iter().enumerate() {
        for (t, &count) in row.iter().enumerate() {
            if count > 0 {
                let c = count as f64;
                mi += c / n * (c * n / (row_sums[p] as f64 * col_sums[t] as f64)).ln();
            }
        }
    }
    Ok((2.0 * mi / (h_pred + h_truth)).clamp(0.0, 1.0))
}

fn comb2(x: usize) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_labels(pred, truth)?;
    if pred.len() < 2 {
        return Err(Error::Config("ARI is undefined for fewer than two points".into()));
    }
    let table = contingency(pred, truth);
    let index: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let a: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let b: f64 = (0..n_labels(truth))
        .map(|t| comb2(table.iter().map(|r| r[t]).sum()))
        .sum();
    let total = comb2(pred.len());
    let expected = a * b / total;
    let max_index = 0.5 * (a + b);
    if max_index == expected {
        // Both partitions all-singletons or both one cluster.
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Mean silhouette coefficient of `labels` over the rows of `points`.
///
/// Points alone in their cluster score 0.
pub fn silhouette(points: &DenseMatrix, labels: &[usize]) -> Result<f64> {
    if points.nrows() != labels.len() {
        return Err(Error::shape(
            "silhouette",
            format!("{} labels", points.nrows()),
            format!("{}", labels.len()),
        ));
    }
    let k = n_labels(labels);
    let sizes: Vec<usize> = (0..k).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::Config("silhouette needs at least two non-empty clusters".into()));
    }
    let n = points.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += (points.row(i) - points.row(j)).norm();
            }
        }
        let own = labels[i];
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}
