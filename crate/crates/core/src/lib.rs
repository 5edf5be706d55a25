//! Multi-relational graph clustering with a Barlow-Twins-guided learned
//! graph filter.
//!
//! Each relation is smoothed by a filter `K` that trades fidelity to the
//! attributes against closeness to a fixed spectral prior. The smoothed views
//! are encoded by a shared linear auto-encoder trained with a cross-view
//! Barlow Twins decorrelation loss, a cosine reconstruction loss and a
//! Student-t clustering loss.
//!
//! ```no_run
//! use btgf::data::{generate_sbm, SbmConfig};
//! use btgf::metrics::ClusterEvaluation;
//! use btgf::model::{train, TrainConfig};
//!
//! let graph = generate_sbm(&SbmConfig::default())?;
//! let out = train(&graph, &TrainConfig::default())?;
//! let eval = ClusterEvaluation::evaluate(&out.labels, graph.labels().unwrap())?;
//! println!("ACC {:.3}", eval.acc);
//! # Ok::<(), btgf::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod data;
pub mod error;
pub mod filter;
pub mod graph;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;

pub use error::{Error, Result};
pub use graph::{DenseMatrix, MultiRelationalGraph};
