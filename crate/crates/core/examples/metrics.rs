//! Scores a labeling against ground truth.
//!
//! cargo run --example metrics

use btgf::metrics::{hungarian_accuracy, silhouette, ClusterEvaluation};
use btgf::DenseMatrix;

fn main() -> btgf::Result<()> {
    let truth = [0, 0, 0, 1, 1, 1, 2, 2, 2];
    let pred = [2, 2, 1, 0, 0, 0, 1, 1, 1];

    let (acc, mapping) = hungarian_accuracy(&pred, &truth)?;
    println!("best mapping (pred -> truth): {mapping:?}, accuracy {acc:.4}");

    let eval = ClusterEvaluation::evaluate(&pred, &truth)?;
    println!("ACC {:.4}  F1 {:.4}  NMI {:.4}  ARI {:.4}", eval.acc, eval.f1, eval.nmi, eval.ari);

    let points = DenseMatrix::from_fn(9, 2, |i, j| (truth[i] * 4) as f64 + 0.1 * (i + j) as f64);
    println!("silhouette of truth on toy points {:.4}", silhouette(&points, &truth)?);
    Ok(())
}
