//! Dataset loading, synthetic generation and result export.

mod dataset;
mod export;
mod sbm;

pub use dataset::{load_dataset, read_attributes, read_edge_list, read_labels, write_dataset, DatasetManifest};
pub use export::{
    export_embeddings, export_labels, export_losses, export_metrics, load_checkpoint, metrics_row,
    save_checkpoint, Checkpoint, MatrixRecord, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, LOSSES_HEADER,
    METRICS_HEADER,
};
pub use sbm::{generate_sbm, SbmConfig};
