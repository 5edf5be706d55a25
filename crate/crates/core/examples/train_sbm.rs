//! Trains on the default three-block SBM and prints clustering quality.
//!
//! cargo run --release --example train_sbm -- [seed]

use std::time::Instant;

use btgf::data::{generate_sbm, SbmConfig};
use btgf::metrics::ClusterEvaluation;
use btgf::model::{train, TrainConfig};

fn main() -> btgf::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let graph = generate_sbm(&SbmConfig::default().with_seed(seed))?;
    let cfg = TrainConfig { seed, ..TrainConfig::default() };

    let start = Instant::now();
    let out = train(&graph, &cfg)?;
    let elapsed = start.elapsed();

    for r in out.history.iter().step_by(50).chain(out.history.last()) {
        println!(
            "epoch {:>3}  l_fd {:.4}  l_msce {:.4}  l_clu {:.5}  total {:.4}",
            r.epoch, r.feature_decorrelation, r.reconstruction, r.clustering, r.total
        );
    }
    let eval = ClusterEvaluation::evaluate(&out.labels, graph.labels().expect("SBM is labeled"))?;
    println!(
        "ACC {:.4}  F1 {:.4}  NMI {:.4}  ARI {:.4}  ({:.2?})",
        eval.acc, eval.f1, eval.nmi, eval.ari, elapsed
    );
    Ok(())
}
