#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Central difference of `f` at `x`.
pub fn central(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    (f(x + FD_STEP) - f(x - FD_STEP)) / (2.0 * FD_STEP)
}

/// Central differences of a scalar function over every coordinate of `p`.
pub fn central_grad(f: impl Fn(&[f64]) -> f64, p: &[f64]) -> Vec<f64> {
    let mut work = p.to_vec();
    (0..p.len())
        .map(|k| {
            work[k] = p[k] + FD_STEP;
            let plus = f(&work);
            work[k] = p[k] - FD_STEP;
            let minus = f(&work);
            work[k] = p[k];
            (plus - minus) / (2.0 * FD_STEP)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Denominator floor for comparing against a central difference of a function
/// of magnitude `f`: the stencil's rounding error is about `eps * |f| / h`,
/// i.e. `2e-10 * |f|`, which stays below `1e-5` of this floor.
pub fn fd_floor(f: f64) -> f64 {
    1e-4 * f.abs().max(1.0)
}
