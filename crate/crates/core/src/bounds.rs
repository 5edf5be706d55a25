//! Executable lower/upper bounds on the Barlow Twins loss.
//!
//! With `H = X~aᵀ X~b` and a shared linear encoder `W`, the diagonal of the
//! cross-correlation is `M_ii = W_iᵀ H W_i / (Λa_i Λb_i)`.
//!
//! * If `H` is negative semi-definite every `M_ii <= 0`, so the invariance
//!   term alone exceeds `Σ_i (Λa_i Λb_i / (max Λa · max Λb))^2`.
//! * If `H` is positive semi-definite every `M_ii ∈ [0, 1]`, so the loss is at
//!   most `d + λ Σ_{i≠j} M_ij^2`.
//!
//! Quadratic forms only see the symmetric part of `H`, which is what
//! [`definiteness`] inspects.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graph::{ensure_square, DenseMatrix};
use crate::losses::{column_normalize, off_diagonal_mass, CrossCorrelation, BARLOW_LAMBDA};
use crate::model::LossReport;

/// Relative eigenvalue tolerance for [`definiteness`].
pub const DEFINITENESS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveSemiDefinite,
    NegativeSemiDefinite,
    Indefinite,
}

/// `H = X~1ᵀ X~2`.
pub fn inner_product_matrix(smoothed_a: &DenseMatrix, smoothed_b: &DenseMatrix) -> Result<DenseMatrix> {
    if smoothed_a.shape() != smoothed_b.shape() {
        return Err(Error::shape(
            "inner_product_matrix",
            format!("{}x{}", smoothed_a.nrows(), smoothed_a.ncols()),
            format!("{}x{}", smoothed_b.nrows(), smoothed_b.ncols()),
        ));
    }
    Ok(smoothed_a.transpose() * smoothed_b)
}

/// Sorted eigenvalues of `(H + Hᵀ)/2`.
pub fn symmetric_part_eigenvalues(h: &DenseMatrix) -> Result<Vec<f64>> {
    ensure_square(h, "symmetric_part_eigenvalues")?;
    let sym = (h + h.transpose()) * 0.5;
    let mut eig: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Largest singular value.
pub fn spectral_norm(h: &DenseMatrix) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    h.clone().singular_values().max()
}

pub fn definiteness(h: &DenseMatrix, tol: f64) -> Result<Definiteness> {
    let eig = symmetric_part_eigenvalues(h)?;
    let scale = tol * spectral_norm(h);
    let (min, max) = (eig[0], eig[eig.len() - 1]);
    Ok(if min >= -scale {
        Definiteness::PositiveSemiDefinite
    } else if max <= scale {
        Definiteness::NegativeSemiDefinite
    } else {
        Definiteness::Indefinite
    })
}

/// `Σ_i (Λa_i Λb_i / (max Λa · max Λb))^2`.
pub fn nsd_lower_bound(norms_a: &[f64], norms_b: &[f64]) -> Result<f64> {
    if norms_a.len() != norms_b.len() || norms_a.is_empty() {
        return Err(Error::shape(
            "nsd_lower_bound",
            format!("{} norms", norms_a.len()),
            format!("{}", norms_b.len()),
        ));
    }
    if let Some(&bad) = norms_a.iter().chain(norms_b).find(|&&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("column norms must be positive, got {bad}")));
    }
    let max_a = norms_a.iter().copied().fold(f64::MIN, f64::max);
    let max_b = norms_b.iter().copied().fold(f64::MIN, f64::max);
    Ok(norms_a
        .iter()
        .zip(norms_b)
        .map(|(a, b)| (a * b / (max_a * max_b)).powi(2))
        .sum())
}

/// `d + λ Σ_{i≠j} M_ij^2`.
pub fn psd_upper_bound(correlation: &DenseMatrix, lambda: f64) -> f64 {
    correlation.nrows() as f64 + lambda * off_diagonal_mass(correlation)
}

/// One row of a bound trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundRecord {
    pub epoch: usize,
    pub views: (usize, usize),
    pub barlow_twins: f64,
    pub lower: f64,
    pub upper: f64,
    pub min_eig: f64,
}

/// Per-epoch averages over view pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochBounds {
    pub epoch: usize,
    pub feature_decorrelation: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrace {
    pub records: Vec<BoundRecord>,
    pub epochs: Vec<EpochBounds>,
}

/// Collects bound values recorded during training.
///
/// `min_eigs[p]` is the smallest eigenvalue of the symmetrized `H` for the
/// `p`-th view pair; it does not change during training.
pub fn trace_bounds(history: &[LossReport], min_eigs: &[f64]) -> Result<BoundTrace> {
    if history.is_empty() {
        return Err(Error::Config("cannot trace bounds of an empty history".into()));
    }
    let mut records = Vec::new();
    let mut epochs = Vec::with_capacity(history.len());
    for report in history {
        let pairs = &report.pairs;
        for (p, pair) in pairs.iter().enumerate() {
            records.push(BoundRecord {
                epoch: report.epoch,
                views: pair.views,
                barlow_twins: pair.barlow_twins,
                lower: pair.lower_bound,
                upper: pair.upper_bound,
                min_eig: min_eigs.get(p).copied().unwrap_or(f64::NAN),
            });
        }
        let k = pairs.len().max(1) as f64;
        epochs.push(EpochBounds {
            epoch: report.epoch,
            feature_decorrelation: pairs.iter().map(|p| p.barlow_twins).sum::<f64>() / k,
            lower: pairs.iter().map(|p| p.lower_bound).sum::<f64>() / k,
            upper: pairs.iter().map(|p| p.upper_bound).sum::<f64>() / k,
        });
    }
    Ok(BoundTrace { records, epochs })
}

impl BoundTrace {
    pub const CSV_HEADER: &'static str = "epoch,pair,l_fd,lower,upper,min_eig";

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                out,
                "{},{}-{},{:?},{:?},{:?},{:?}",
                r.epoch, r.views.0, r.views.1, r.barlow_twins, r.lower, r.upper, r.min_eig
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of the randomized bound checks.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckReport {
    pub trials: usize,
    pub lower_passed: usize,
    pub upper_passed: usize,
    /// Smallest observed `loss - lower` under negated inputs.
    pub min_lower_gap: f64,
    /// Smallest observed `upper - loss` under identical inputs.
    pub min_upper_gap: f64,
}

impl BoundCheckReport {
    pub fn all_passed(&self) -> bool {
        self.lower_passed == self.trials && self.upper_passed == self.trials
    }
}

/// Slack allowed when comparing a loss against its bound.
pub const BOUND_SLACK: f64 = 1e-9;

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Result of one lower-bound trial: `(loss, bound, H classified NSD)`.
pub fn lower_bound_trial(
    smoothed_a: &DenseMatrix,
    smoothed_b: &DenseMatrix,
    w: &DenseMatrix,
    lambda: f64,
) -> Result<(f64, f64, bool)> {
    let z1 = smoothed_a * w;
    let z2 = smoothed_b * w;
    let (_, n1) = column_normalize(&z1)?;
    let (_, n2) = column_normalize(&z2)?;
    let loss = CrossCorrelation::new(&z1, &z2, lambda)?.loss();
    let h = inner_product_matrix(smoothed_a, smoothed_b)?;
    let nsd = definiteness(&h, DEFINITENESS_TOLERANCE)? == Definiteness::NegativeSemiDefinite;
    Ok((loss, nsd_lower_bound(&n1, &n2)?, nsd))
}

/// Result of one upper-bound trial: `(loss, bound, diagonal in [0, 1], H classified PSD)`.
pub fn upper_bound_trial(
    smoothed_a: &DenseMatrix,
    smoothed_b: &DenseMatrix,
    w: &DenseMatrix,
    lambda: f64,
) -> Result<(f64, f64, bool, bool)> {
    let cc = CrossCorrelation::new(&(smoothed_a * w), &(smoothed_b * w), lambda)?;
    let diag_ok = cc.matrix.diagonal().iter().all(|&m| (0.0..=1.0 + 1e-12).contains(&m));
    let h = inner_product_matrix(smoothed_a, smoothed_b)?;
    let psd = definiteness(&h, DEFINITENESS_TOLERANCE)? == Definiteness::PositiveSemiDefinite;
    Ok((cc.loss(), psd_upper_bound(&cc.matrix, lambda), diag_ok, psd))
}

/// Random `E` with `Xᵀ E = 0`, scaled by `scale`.
fn orthogonal_noise(x: &DenseMatrix, scale: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let q = x.clone().qr().q();
    let r = gaussian(x.nrows(), x.ncols(), rng);
    (&r - &q * (q.transpose() * &r)) * scale
}

/// A second view `sign · X + E` with `E` orthogonal to the columns of `X`,
/// so `H = sign · XᵀX` while the embeddings of the two views differ.
pub fn constructed_pair(x: &DenseMatrix, sign: f64, noise: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    x * sign + orthogonal_noise(x, noise, rng)
}

/// Randomized checks of both bounds over `trials` random inputs and encoders.
pub fn check_bounds(seed: u64, trials: usize) -> Result<BoundCheckReport> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = BoundCheckReport {
        trials,
        lower_passed: 0,
        upper_passed: 0,
        min_lower_gap: f64::INFINITY,
        min_upper_gap: f64::INFINITY,
    };
    for _ in 0..trials {
        let n = rng.random_range(12..=30);
        let f = rng.random_range(2..=6);
        let d = rng.random_range(1..=6);
        let x = gaussian(n, f, &mut rng);
        let w = gaussian(f, d, &mut rng);
        let noise = rng.random_range(0.0..3.0);

        let xb = constructed_pair(&x, -1.0, noise, &mut rng);
        let (loss, lower, nsd) = lower_bound_trial(&x, &xb, &w, BARLOW_LAMBDA)?;
        let gap = loss - lower;
        report.min_lower_gap = report.min_lower_gap.min(gap);
        if nsd && gap >= -BOUND_SLACK {
            report.lower_passed += 1;
        }

        let xb = constructed_pair(&x, 1.0, noise, &mut rng);
        let (loss, upper, diag_ok, psd) = upper_bound_trial(&x, &xb, &w, BARLOW_LAMBDA)?;
        let gap = upper - loss;
        report.min_upper_gap = report.min_upper_gap.min(gap);
        if psd && diag_ok && gap >= -BOUND_SLACK {
            report.upper_passed += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn inner_product_examples() {
        let x = dmatrix![1.0, 2.0; 3.0, -1.0; 0.5, 0.5];
        let h = inner_product_matrix(&x, &x).unwrap();
        assert_eq!(h, x.transpose() * &x);
        assert_eq!(definiteness(&h, DEFINITENESS_TOLERANCE).unwrap(), Definiteness::PositiveSemiDefinite);
        let h = inner_product_matrix(&x, &(-&x)).unwrap();
        assert_eq!(definiteness(&h, DEFINITENESS_TOLERANCE).unwrap(), Definiteness::NegativeSemiDefinite);
        let y = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(inner_product_matrix(&DenseMatrix::identity(2, 2), &y).unwrap(), y);
        assert!(inner_product_matrix(&x, &y).is_err());
    }

    #[test]
    fn definiteness_examples() {
        let tol = DEFINITENESS_TOLERANCE;
        assert_eq!(definiteness(&DenseMatrix::identity(3, 3), tol).unwrap(), Definiteness::PositiveSemiDefinite);
        assert_eq!(definiteness(&-DenseMatrix::identity(3, 3), tol).unwrap(), Definiteness::NegativeSemiDefinite);
        assert_eq!(definiteness(&dmatrix![1.0, 0.0; 0.0, -1.0], tol).unwrap(), Definiteness::Indefinite);
        // skew part is invisible to quadratic forms
        assert_eq!(definiteness(&dmatrix![1.0, 5.0; -5.0, 1.0], tol).unwrap(), Definiteness::PositiveSemiDefinite);
        assert!(definiteness(&DenseMatrix::zeros(2, 3), tol).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert!((nsd_lower_bound(&[2.0; 4], &[2.0; 4]).unwrap() - 4.0).abs() < 1e-15);
        assert!((nsd_lower_bound(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0625).abs() < 1e-15);
        assert!(nsd_lower_bound(&[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(nsd_lower_bound(&[3.0, 0.1, 7.0], &[0.2, 5.0, 1.0]).unwrap() <= 3.0);
    }

    #[test]
    fn upper_bound_examples() {
        assert_eq!(psd_upper_bound(&DenseMatrix::identity(3, 3), BARLOW_LAMBDA), 3.0);
        let m = dmatrix![0.3, 1.0; 1.0, 0.9];
        assert!((psd_upper_bound(&m, BARLOW_LAMBDA) - 2.0102).abs() < 1e-15);
    }

    #[test]
    fn check_bounds_rejects_zero_trials() {
        assert!(matches!(check_bounds(0, 0), Err(Error::Config(_))));
        let r = check_bounds(3, 20).unwrap();
        assert!(r.all_passed(), "{r:?}");
        assert!(r.min_lower_gap >= 0.0);
    }

    #[test]
    fn trace_of_empty_history_fails() {
        assert!(trace_bounds(&[], &[]).is_err());
    }
}
