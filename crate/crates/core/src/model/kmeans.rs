//! Lloyd's algorithm with k-means++ seeding and best-of-restarts selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

const MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centers: DenseMatrix,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
}

fn sq_dist(points: &DenseMatrix, i: usize, centers: &DenseMatrix, j: usize) -> f64 {
    (points.row(i) - centers.row(j)).norm_squared()
}

fn nearest(points: &DenseMatrix, i: usize, centers: &DenseMatrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..centers.nrows() {
        let d = sq_dist(points, i, centers, j);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_seed(points: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let n = points.nrows();
    let mut centers = DenseMatrix::zeros(k, points.ncols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DenseMatrix, mut centers: DenseMatrix) -> KMeansResult {
    let n = points.nrows();
    let k = centers.nrows();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for i in 0..n {
            let (j, d) = nearest(points, i, &centers);
            dists[i] = d;
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
        }
        let mut sums = DenseMatrix::zeros(k, points.ncols());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let mut row = sums.row_mut(labels[i]);
            row += points.row(i);
            counts[labels[i]] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers.row_mut(j).copy_from(&(sums.row(j) / counts[j] as f64));
                continue;
            }
            // Empty cluster: move it to the point farthest from its center.
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]));
            if let Some(far) = far {
                counts[labels[far]] -= 1;
                labels[far] = j;
                counts[j] = 1;
                dists[far] = 0.0;
                centers.row_mut(j).copy_from(&points.row(far));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(points, i, &centers, labels[i])).sum();
    KMeansResult { centers, labels, inertia }
}

/// Clusters the rows of `points` into `k` groups.
pub fn kmeans(points: &DenseMatrix, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    if points.nrows() < k {
        return Err(Error::Config(format!(
            "k-means needs at least k = {k} points, got {}",
            points.nrows()
        )));
    }
    if restarts == 0 {
        return Err(Error::Config("k-means needs at least one restart".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = lloyd(points, plus_plus_seed(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_points() -> DenseMatrix {
        DenseMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.1, 0.0, 10.0, 10.0, 10.1, 10.0])
    }

    #[test]
    fn separated_pairs() {
        let r = kmeans(&four_points(), 2, 5, 7).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        let c0 = r.centers.row(r.labels[0]);
        let c1 = r.centers.row(r.labels[2]);
        assert!((c0[0] - 0.05).abs() < 1e-12 && c0[1].abs() < 1e-12);
        assert!((c1[0] - 10.05).abs() < 1e-12 && (c1[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_is_mean() {
        let r = kmeans(&four_points(), 1, 1, 0).unwrap();
        assert!((r.centers[(0, 0)] - 5.05).abs() < 1e-12 && (r.centers[(0, 1)] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn one_cluster_per_point() {
        let r = kmeans(&four_points(), 4, 3, 1).unwrap();
        assert!(r.inertia.abs() < 1e-24);
        let mut labels = r.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicates_never_leave_empty_clusters() {
        let pts = DenseMatrix::from_row_slice(5, 1, &[1.0, 1.0, 1.0, 1.0, 2.0]);
        let r = kmeans(&pts, 3, 2, 3).unwrap();
        for j in 0..3 {
            assert!(r.labels.contains(&j), "cluster {j} empty: {:?}", r.labels);
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let a = kmeans(&four_points(), 2, 4, 11).unwrap();
        let b = kmeans(&four_points(), 2, 4, 11).unwrap();
        assert_eq!(a, b);
        assert!(matches!(kmeans(&four_points(), 5, 1, 0), Err(Error::Config(_))));
    }
}
