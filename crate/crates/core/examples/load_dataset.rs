//! Writes a small SBM to disk in the dataset layout, loads it back and
//! trains on it.
//!
//! cargo run --release --example load_dataset -- [dir]

use std::path::PathBuf;

use btgf::data::{generate_sbm, load_dataset, write_dataset, SbmConfig};
use btgf::metrics::ClusterEvaluation;
use btgf::model::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("btgf-example"));
    std::fs::create_dir_all(&dir)?;

    let manifest = write_dataset(&generate_sbm(&SbmConfig::default())?, &dir, "sbm")?;
    println!("wrote {}", manifest.display());

    let graph = load_dataset(&manifest)?;
    println!(
        "loaded n={} V={} f={} c={}",
        graph.n_nodes(),
        graph.n_views(),
        graph.n_features(),
        graph.n_clusters()
    );
    let out = train(&graph, &TrainConfig::default())?;
    let eval = ClusterEvaluation::evaluate(&out.labels, graph.labels().expect("labels.txt present"))?;
    println!("ACC {:.4}  NMI {:.4}  ARI {:.4}", eval.acc, eval.nmi, eval.ari);
    Ok(())
}
