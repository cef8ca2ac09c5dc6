//! Seeded random operators for identity checks.
//!
//! Probe `i` of a suite seeded with `s` draws from stream `i` of a ChaCha
//! generator seeded with `s`, so suites can be evaluated in parallel and still
//! reproduce exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operators::{BandOperator, C64};
use crate::space::DistanceSource;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn unit_disc_sample(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Dense operator with entries in the unit square, scaled so that the
/// operator norm is at most `sqrt(2)`.
pub fn random_dense(n: usize, rng: &mut ChaCha8Rng) -> BandOperator {
    let scale = 1.0 / n.max(1) as f64;
    BandOperator::from_fn(n, |_, _| unit_disc_sample(rng) * scale)
}

/// Random operator supported on `d(x, y) <= r`, scaled by the largest row
/// support so the norm stays at most `sqrt(2)`.
pub fn random_band<D: DistanceSource + ?Sized>(metric: &D, r: f64, rng: &mut ChaCha8Rng) -> BandOperator {
    let n = metric.size();
    let width = (0..n)
        .map(|x| (0..n).filter(|&y| metric.distance(x, y) <= r).count())
        .max()
        .unwrap_or(1)
        .max(1);
    let scale = 1.0 / width as f64;
    BandOperator::from_fn(n, |x, y| {
        if metric.distance(x, y) <= r {
            unit_disc_sample(rng) * scale
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Real diagonal operator with entries in `[-1, 1]`.
pub fn random_diagonal(n: usize, rng: &mut ChaCha8Rng) -> BandOperator {
    let values: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    BandOperator::diagonal(&values)
}

/// `count` tuples of `arity` operators; tuple `i` uses stream `i`.
pub fn random_tuples(
    sample: impl Fn(&mut ChaCha8Rng) -> BandOperator,
    arity: usize,
    count: usize,
    seed: u64,
) -> Vec<Vec<BandOperator>> {
    (0..count)
        .map(|i| {
            let mut rng = rng(seed, i as u64);
            (0..arity).map(|_| sample(&mut rng)).collect()
        })
        .collect()
}
