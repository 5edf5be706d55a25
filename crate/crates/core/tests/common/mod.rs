#![allow(dead_code)]

use btgf::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Symmetric 0/1 adjacency with zero diagonal.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    a
}

pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm() / b.norm()
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m - 1);
            out.push(q);
        }
    }
    out
}

/// Best accuracy over every relabeling of the predicted ids.
pub fn brute_force_accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    let m = pred.iter().chain(truth).max().map_or(0, |&x| x + 1);
    permutations(m)
        .iter()
        .map(|perm| pred.iter().zip(truth).filter(|(p, t)| perm[**p] == **t).count())
        .max()
        .unwrap_or(0) as f64
        / pred.len() as f64
}

/// ARI from explicit enumeration of all node pairs.
pub fn brute_force_ari(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len();
    let (mut both, mut same_pred, mut same_truth, mut total) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = pred[i] == pred[j];
            let t = truth[i] == truth[j];
            both += (p && t) as u8 as f64;
            same_pred += p as u8 as f64;
            same_truth += t as u8 as f64;
            total += 1.0;
        }
    }
    let expected = same_pred * same_truth / total;
    let max = 0.5 * (same_pred + same_truth);
    if max == expected {
        1.0
    } else {
        (both - expected) / (max - expected)
    }
}

pub fn random_labels(n: usize, c: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..c)).collect()
}
