//! CSV exports and model checkpoints.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! reads back bit-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DenseMatrix;
use crate::metrics::ClusterEvaluation;
use crate::model::{AdamState, LossReport, ModelState, Parameters};

use super::dataset::{write_labels, write_matrix_csv};

/// `n` rows of `V d` comma-separated values, no header.
pub fn export_embeddings(embedding: &DenseMatrix, path: &Path) -> Result<()> {
    write_matrix_csv(path, embedding)
}

pub const METRICS_HEADER: &str = "acc,f1,nmi,ari";

pub fn metrics_row(eval: &ClusterEvaluation) -> String {
    format!("{:?},{:?},{:?},{:?}", eval.acc, eval.f1, eval.nmi, eval.ari)
}

/// Header plus a single `acc,f1,nmi,ari` row.
pub fn export_metrics(eval: &ClusterEvaluation, path: &Path) -> Result<()> {
    let text = format!("{METRICS_HEADER}\n{}\n", metrics_row(eval));
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const LOSSES_HEADER: &str = "epoch,l_fd,l_msce,l_clu,total,lower,upper";

/// Header plus one row per epoch; bounds are averaged over view pairs.
pub fn export_losses(history: &[LossReport], path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{LOSSES_HEADER}").map_err(io)?;
    for r in history {
        let k = r.pairs.len();
        let (lower, upper) = if k == 0 {
            (f64::NAN, f64::NAN)
        } else {
            (
                r.pairs.iter().map(|p| p.lower_bound).sum::<f64>() / k as f64,
                r.pairs.iter().map(|p| p.upper_bound).sum::<f64>() / k as f64,
            )
        };
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.epoch, r.feature_decorrelation, r.reconstruction, r.clustering, r.total, lower, upper
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn export_labels(labels: &[usize], path: &Path) -> Result<()> {
    write_labels(path, labels)
}

pub const CHECKPOINT_FORMAT: &str = "btgf-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Row-major matrix record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DenseMatrix> for MatrixRecord {
    fn from(m: &DenseMatrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl MatrixRecord {
    fn into_matrix(self, what: &str) -> Result<DenseMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Config(format!(
                "checkpoint matrix {what}: {} values for {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DenseMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// JSON checkpoint layout.
///
/// ```json
/// { "format": "btgf-checkpoint", "version": 1, "epoch": 400, "views": 2,
///   "encoder": {"rows": f, "cols": d, "data": [...]},
///   "decoder": {...}, "centers": {...},
///   "adam_step": 400, "adam_first": [enc, dec, centers], "adam_second": [...] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub epoch: usize,
    pub views: usize,
    pub encoder: MatrixRecord,
    pub decoder: MatrixRecord,
    pub centers: MatrixRecord,
    pub adam_step: u64,
    pub adam_first: Vec<MatrixRecord>,
    pub adam_second: Vec<MatrixRecord>,
}

impl From<&ModelState> for Checkpoint {
    fn from(state: &ModelState) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            epoch: state.epoch,
            views: state.n_views,
            encoder: (&state.params.encoder).into(),
            decoder: (&state.params.decoder).into(),
            centers: (&state.params.centers).into(),
            adam_step: state.adam.step,
            adam_first: state.adam.first.iter().map(Into::into).collect(),
            adam_second: state.adam.second.iter().map(Into::into).collect(),
        }
    }
}

impl Checkpoint {
    pub fn into_state(self) -> Result<ModelState> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let triple = |records: Vec<MatrixRecord>, what: &str| -> Result<[DenseMatrix; 3]> {
            let mats = records
                .into_iter()
                .map(|r| r.into_matrix(what))
                .collect::<Result<Vec<_>>>()?;
            mats.try_into()
                .map_err(|_| Error::Config(format!("checkpoint {what} needs three tensors")))
        };
        Ok(ModelState {
            params: Parameters {
                encoder: self.encoder.into_matrix("encoder")?,
                decoder: self.decoder.into_matrix("decoder")?,
                centers: self.centers.into_matrix("centers")?,
            },
            adam: AdamState {
                first: triple(self.adam_first, "adam_first")?,
                second: triple(self.adam_second, "adam_second")?,
                step: self.adam_step,
            },
            epoch: self.epoch,
            n_views: self.views,
        })
    }
}

pub fn save_checkpoint(state: &ModelState, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&Checkpoint::from(state)).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    ckpt.into_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn perfect_metrics_row() {
        let eval = ClusterEvaluation::evaluate(&[0, 0, 1], &[1, 1, 0]).unwrap();
        assert_eq!(metrics_row(&eval), "1.0,1.0,1.0,1.0");
    }

    #[test]
    fn checkpoint_round_trip() {
        let params = Parameters {
            encoder: dmatrix![0.1, 1.0 / 3.0; -2.5, 1e-300],
            decoder: dmatrix![1.0, 2.0; 3.0, 4.0],
            centers: dmatrix![std::f64::consts::PI, -0.0, 7.0, 8.0],
        };
        let mut adam = AdamState::zeros_like(&params);
        adam.step = 3;
        adam.first[0][(0, 1)] = 0.125;
        let state = ModelState {
            params,
            adam,
            epoch: 3,
            n_views: 2,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        save_checkpoint(&state, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), state);
    }
}
