//! Averages `u* b u` over diagonal unitaries `u`.
//!
//! Conjugating by a diagonal unitary multiplies `b_xy` by `conj(u_x) u_y`, so
//! the diagonal is untouched and off-diagonal entries are rotated. Averaging
//! over the full sign group `{±1}^n` kills them exactly; random phases kill
//! them on average.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{BandOperator, OperatorError, C64};

/// Windows above this size make `2^n` sign patterns too many.
pub const MAX_EXHAUSTIVE_POINTS: usize = 12;

const CHUNK: usize = 16;

/// `(1/k) Σ u_i* b u_i` over `k` i.i.d. diagonal unitaries with uniform phases.
///
/// Sample `i` draws from stream `i` of a ChaCha generator seeded with `seed`,
/// and partial sums are combined in a fixed order, so the result does not
/// depend on the thread count.
pub fn diagonal_average(b: &BandOperator, k: usize, seed: u64) -> Result<BandOperator, OperatorError> {
    if k == 0 {
        return Err(OperatorError::InvalidArgument("sample count must be positive".into()));
    }
    let n = b.dim();
    let chunks: Vec<Vec<C64>> = (0..k)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|samples| {
            let mut acc = vec![C64::new(0.0, 0.0); n * n];
            let mut phases = vec![0.0f64; n];
            for &i in samples {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                for p in phases.iter_mut() {
                    *p = rng.random::<f64>() * std::f64::consts::TAU;
                }
                for x in 0..n {
                    for y in 0..n {
                        if x != y {
                            let turn = C64::from_polar(1.0, phases[y] - phases[x]);
                            acc[x * n + y] += b.get(x, y) * turn;
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![C64::new(0.0, 0.0); n * n];
    for chunk in &chunks {
        for (t, c) in total.iter_mut().zip(chunk) {
            *t += c;
        }
    }
    let scale = 1.0 / k as f64;
    let mut out = BandOperator::from_fn(n, |x, y| total[x * n + y] * scale);
    // the phase factor on the diagonal is exactly one
    for x in 0..n {
        out.set(x, x, b.get(x, x));
    }
    Ok(maybe_cross(out, b))
}

/// Exact average over all `2^n` real sign patterns.
pub fn diagonal_average_exhaustive(b: &BandOperator) -> Result<BandOperator, OperatorError> {
    let n = b.dim();
    if n > MAX_EXHAUSTIVE_POINTS {
        return Err(OperatorError::WindowTooLargeForExhaustive {
            n,
            limit: MAX_EXHAUSTIVE_POINTS,
        });
    }
    let patterns = 1usize << n;
    // integer sign sums keep the average exact
    let mut sums = vec![0i64; n * n];
    for mask in 0..patterns {
        for x in 0..n {
            for y in 0..n {
                let flip = ((mask >> x) ^ (mask >> y)) & 1;
                sums[x * n + y] += if flip == 1 { -1 } else { 1 };
            }
        }
    }
    let scale = 1.0 / patterns as f64;
    let total: Vec<C64> = sums
        .iter()
        .enumerate()
        .map(|(k, &s)| b.get(k / n, k % n) * (s as f64))
        .collect();
    let out = BandOperator::from_fn(n, |x, y| total[x * n + y] * scale);
    Ok(maybe_cross(out, b))
}

fn maybe_cross(out: BandOperator, like: &BandOperator) -> BandOperator {
    match like.coupling() {
        super::Coupling::Cross => out.as_cross(),
        super::Coupling::SameCopy => out,
    }
}
