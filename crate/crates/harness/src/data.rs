//! Synthetic data generators.

use adasi_core::sfs::SfsProblem;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;

/// Number of leading features carrying signal under the alternative.
pub const ACTIVE_FEATURES: usize = 5;

/// Regression data `D = X beta + noise` with standard normal design and
/// noise; `beta` has `delta` on the first five entries.
pub fn gen_sfs_data(
    n: usize,
    p: usize,
    k: usize,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<SfsProblem> {
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let beta = DVector::from_fn(p, |j, _| if j < ACTIVE_FEATURES { delta } else { 0.0 });
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let d = &x * beta + noise;
    Ok(SfsProblem::new(x, d, 1.0, k)?)
}

/// Row-major `d × d` image of standard normal noise plus `delta` on a
/// randomly placed square of side `ceil(d / 2)`. Returns the image and the
/// pixels of the square.
pub fn gen_image(d: usize, delta: f64, rng: &mut impl Rng) -> (DVector<f64>, Vec<usize>) {
    let side = d.div_ceil(2);
    let top = rng.random_range(0..=d - side);
    let left = rng.random_range(0..=d - side);
    let region: Vec<usize> = (top..top + side)
        .flat_map(|i| (left..left + side).map(move |j| i * d + j))
        .collect();
    let mut image = DVector::from_fn(d * d, |_, _| rng.sample::<f64, _>(StandardNormal));
    for &i in &region {
        image[i] += delta;
    }
    (image, region)
}
