//! Compares the learned filter against fixed filters and dropped loss terms.
//!
//! cargo run --release --example ablation -- [seeds] [gamma]

use btgf::data::{generate_sbm, SbmConfig};
use btgf::model::TrainConfig;
use btgf::pipeline::ablate;

fn main() -> btgf::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seeds: u64 = args.first().and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut base = TrainConfig::default();
    if let Some(gamma) = args.get(1).and_then(|s| s.parse().ok()) {
        base.filter.gamma = gamma;
    }
    let graph = generate_sbm(&SbmConfig {
        intra: vec![0.2, 0.15],
        inter: vec![0.05, 0.05],
        separation: 1.5,
        ..SbmConfig::default()
    })?;
    let seeds: Vec<u64> = (0..seeds).collect();
    let table = ablate(&graph, &base, &seeds)?;
    println!("{table}");
    Ok(())
}
