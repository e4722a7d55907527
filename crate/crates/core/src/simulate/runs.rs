//! Runs estimator of the extremal index with a path bootstrap.

use crate::asymptotic::{ExtremalIndex, Provenance};
use crate::error::{Error, Result};
use rand::Rng;

/// Fewest exceedances the estimator accepts.
pub const MIN_EXCEEDANCES: usize = 30;
/// Bootstrap resamples of whole paths.
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Default run length.
pub const DEFAULT_RUN: usize = 2;
/// Default threshold quantile.
pub const DEFAULT_QUANTILE: f64 = 0.95;

/// Per-path counts: exceedances at `i ≤ n − r`, and those followed by `r` non-exceedances.
fn path_counts(path: &[f64], u: f64, r: usize) -> (u64, u64) {
    let n = path.len();
    if n <= r {
        return (0, 0);
    }
    let (mut exc, mut ends) = (0, 0);
    for i in 0..n - r {
        if path[i] > u {
            exc += 1;
            if path[i + 1..=i + r].iter().all(|&v| v <= u) {
                ends += 1;
            }
        }
    }
    (exc, ends)
}

/// `θ̂ = #{X_i > u, X_{i+1..i+r} ≤ u} / #{X_i > u}` with `u` the pooled `q`-quantile,
/// and a 95% percentile interval from resampling paths.
pub fn empirical_extremal_index(paths: &[Vec<f64>], r: usize, q: f64, seed: u64) -> Result<ExtremalIndex> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("run length must be at least 2, got {r}")));
    }
    if !(q > 0.8 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold quantile must lie in (0.8, 1), got {q}")));
    }
    let mut pooled: Vec<f64> = paths.iter().flatten().copied().collect();
    if pooled.is_empty() {
        return Err(Error::InsufficientExceedances { needed: MIN_EXCEEDANCES, have: 0 });
    }
    pooled.sort_by(f64::total_cmp);
    let u = pooled[((q * pooled.len() as f64).ceil() as usize).clamp(1, pooled.len()) - 1];
    let counts: Vec<(u64, u64)> = paths.iter().map(|p| path_counts(p, u, r)).collect();
    let (exc, ends) = counts.iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    if (exc as usize) < MIN_EXCEEDANCES {
        return Err(Error::InsufficientExceedances { needed: MIN_EXCEEDANCES, have: exc as usize });
    }
    let theta = ends as f64 / exc as f64;
    let mut rng = crate::rng::stream(seed, 0);
    let mut boot: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .filter_map(|_| {
            let (mut e, mut k) = (0u64, 0u64);
            for _ in 0..paths.len() {
                let (a, b) = counts[rng.random_range(0..paths.len())];
                e += a;
                k += b;
            }
            (e > 0).then(|| k as f64 / e as f64)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let ci = (!boot.is_empty()).then(|| {
        let at = |p: f64| boot[((p * boot.len() as f64) as usize).min(boot.len() - 1)];
        (at(0.025), at(0.975))
    });
    let abs_error = ci.map_or(f64::NAN, |(lo, hi)| 0.5 * (hi - lo));
    Ok(ExtremalIndex { theta, abs_error, provenance: Provenance::Empirical, limit: None, ci, flagged: !(theta > 0.0 && theta <= 1.0) })
}
