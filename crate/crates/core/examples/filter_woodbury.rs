//! Learns a graph filter both ways and compares accuracy and wall time.
//!
//! cargo run --release --example filter_woodbury -- [n] [f]

use std::time::Instant;

use btgf::filter::{filter_objective, solve_naive_with_prior, solve_woodbury_with_prior};
use btgf::graph::{low_pass_filter, view_laplacian};
use btgf::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> btgf::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let n = args.next().flatten().unwrap_or(800);
    let f = args.next().flatten().unwrap_or(50);
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let x = DenseMatrix::from_fn(n, f, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut adj = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < 10.0 / n as f64 {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
        }
    }
    let prior = low_pass_filter(&view_laplacian(&adj)?, 2)?;

    for gamma in [0.1, 10.0, 1000.0] {
        let start = Instant::now();
        let naive = solve_naive_with_prior(&x, &prior, gamma)?;
        let t_naive = start.elapsed();
        let start = Instant::now();
        let wood = solve_woodbury_with_prior(&x, &prior, gamma)?;
        let t_wood = start.elapsed();
        let diff = (&wood - &naive).norm() / naive.norm();
        println!(
            "gamma {gamma:>7}: naive {t_naive:>9.2?}  woodbury {t_wood:>9.2?}  rel diff {diff:.1e}  objective {:.4}  |K - prior| {:.4}",
            filter_objective(&wood, &x, &prior, gamma),
            (&wood - &prior).norm(),
        );
    }
    Ok(())
}
