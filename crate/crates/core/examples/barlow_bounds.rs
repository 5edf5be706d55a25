//! Evaluates the Barlow Twins loss against its bounds for opposed and
//! aligned view pairs, then runs the randomized check.
//!
//! cargo run --example barlow_bounds

use btgf::bounds::{check_bounds, constructed_pair, lower_bound_trial, upper_bound_trial};
use btgf::losses::BARLOW_LAMBDA;
use btgf::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> btgf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = DenseMatrix::from_fn(40, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
    let w = DenseMatrix::from_fn(6, 4, |_, _| rng.sample::<f64, _>(StandardNormal));

    for noise in [0.0, 0.5, 2.0] {
        let opposed = constructed_pair(&x, -1.0, noise, &mut rng);
        let (loss, lower, nsd) = lower_bound_trial(&x, &opposed, &w, BARLOW_LAMBDA)?;
        println!("opposed views, noise {noise}: H NSD {nsd}, loss {loss:.4} >= lower {lower:.4}");

        let aligned = constructed_pair(&x, 1.0, noise, &mut rng);
        let (loss, upper, diag_ok, psd) = upper_bound_trial(&x, &aligned, &w, BARLOW_LAMBDA)?;
        println!("aligned views, noise {noise}: H PSD {psd}, diag in [0,1] {diag_ok}, loss {loss:.4} <= upper {upper:.4}");
    }

    println!("{}", check_bounds(0, 100)?);
    Ok(())
}
