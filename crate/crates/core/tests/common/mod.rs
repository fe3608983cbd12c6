#![allow(dead_code, clippy::needless_range_loop)]

use hypoflag::exact::{int, Rational};
use hypoflag::model::{derive_geometry, validate_model, ModelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random valid model with `n` in 2..=3 and `k` in 1..=2; `switching`
/// controls whether Q may be nonzero.
pub fn fuzz_model(seed: u64, switching: bool) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=3usize);
        let k = rng.random_range(1..=2usize);
        let lambda: Vec<Vec<Rational>> =
            (0..=n).map(|_| (0..k).map(|_| int(rng.random_range(-3..=3))).collect()).collect();
        let mut q = vec![vec![int(0); n + 1]; n + 1];
        if switching {
            for i in 0..=n {
                let mut total = 0;
                for j in 0..=n {
                    if i != j && rng.random_bool(0.4) {
                        let rate = rng.random_range(1..=3);
                        q[i][j] = int(rate);
                        total += rate;
                    }
                }
                q[i][i] = int(-total);
            }
            if q.iter().flatten().all(|x| *x == int(0)) {
                continue;
            }
        }
        let Ok(spec) = ModelSpec::new(k, lambda, q) else { continue };
        if validate_model(&spec).map(|v| v.is_valid()).unwrap_or(false) && derive_geometry(&spec).is_ok() {
            return spec;
        }
    }
}

pub fn fuzz_models(count: usize, switching: bool, offset: u64) -> Vec<ModelSpec> {
    (0..count as u64).map(|s| fuzz_model(offset + s, switching)).collect()
}

/// All multi-indices of length `k` with total order in `1..=max`.
pub fn multi_indices(k: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..=max).map(move |e| {
                    let mut q = p.clone();
                    q.push(e);
                    q
                })
            })
            .collect();
    }
    out.retain(|a| (1..=max).contains(&a.iter().sum()));
    out
}
