//! Seeded random and low-discrepancy sampling.
//!
//! Every stochastic routine takes an explicit seed; independent streams are
//! derived from `(seed, stream)` so that parallel sweeps stay reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use super::NumericsError;

pub type SeededRng = ChaCha8Rng;

pub fn rng_for(seed: u64, stream: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform point on the unit sphere `S^dim ⊂ R^{dim+1}`.
pub fn sphere_point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, dim + 1);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `count` points on `S^dim ⊂ R^{dim+1}`.
///
/// With `equispaced`, the circle (`dim = 1`) is sampled at equal angles and the
/// 2-sphere on a Fibonacci lattice; other dimensions have no equispaced mode.
pub fn sphere_sample(
    dim: usize,
    count: usize,
    seed: u64,
    equispaced: bool,
) -> Result<Vec<Vec<f64>>, NumericsError> {
    if dim == 0 {
        return Err(NumericsError::InvalidInput("sphere dimension must be ≥ 1".into()));
    }
    if equispaced {
        return match dim {
            1 => Ok((0..count)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / count as f64;
                    vec![th.cos(), th.sin()]
                })
                .collect()),
            2 => {
                let golden = PI * (3.0 - 5f64.sqrt());
                Ok((0..count)
                    .map(|k| {
                        let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        let th = golden * k as f64;
                        vec![r * th.cos(), r * th.sin(), z]
                    })
                    .collect())
            }
            _ => Err(NumericsError::InvalidInput(format!(
                "no equispaced sampler for S^{dim}"
            ))),
        };
    }
    let mut rng = rng_for(seed, 0);
    Ok((0..count).map(|_| sphere_point(&mut rng, dim)).collect())
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Deterministic, well-spread points on `S^dim` (Halton + Box–Muller).
pub fn halton_sphere(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let m = dim + 1;
    let pairs = m.div_ceil(2);
    assert!(2 * pairs <= PRIMES.len(), "dimension too large for Halton table");
    (1..=count as u64)
        .map(|i| {
            let mut g = Vec::with_capacity(2 * pairs);
            for p in 0..pairs {
                let u1 = halton(i, PRIMES[2 * p]).max(1e-12);
                let u2 = halton(i, PRIMES[2 * p + 1]);
                let r = (-2.0 * u1.ln()).sqrt();
                g.push(r * (2.0 * PI * u2).cos());
                g.push(r * (2.0 * PI * u2).sin());
            }
            g.truncate(m);
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            g.into_iter().map(|x| x / n).collect()
        })
        .collect()
}
