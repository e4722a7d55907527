//! Separation-of-variables integrand with variable reordering, integrated over a
//! randomly digit-shifted Sobol' sequence.

use crate::normal;
use rand::Rng;
use rayon::prelude::*;
use sobol::params::JoeKuoD6;
use sobol::Sobol;
use std::sync::OnceLock;

/// Cholesky factor (packed rows) and limits after reordering.
pub(crate) struct Sov {
    d: usize,
    l: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn row(i: usize) -> usize {
    i * (i + 1) / 2
}

impl Sov {
    /// Reorders so that each next variable has the smallest expected truncated
    /// probability given the ones already placed. `cov` must be PD.
    pub(crate) fn new(lower: &[f64], upper: &[f64], cov: &[Vec<f64>]) -> Sov {
        let d = lower.len();
        let mut c: Vec<Vec<f64>> = cov.to_vec();
        let mut a = lower.to_vec();
        let mut b = upper.to_vec();
        let mut l = vec![vec![0.0; d]; d];
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut best = (f64::INFINITY, i, 1.0);
            for j in i..d {
                let s: f64 = (0..i).map(|k| l[j][k] * y[k]).sum();
                let v = c[j][j] - (0..i).map(|k| l[j][k] * l[j][k]).sum::<f64>();
                let den = v.max(1e-300).sqrt();
                let p = normal::cdf((b[j] - s) / den) - normal::cdf((a[j] - s) / den);
                if p < best.0 {
                    best = (p, j, den);
                }
            }
            let j = best.1;
            if j != i {
                c.swap(i, j);
                for r in c.iter_mut() {
                    r.swap(i, j);
                }
                a.swap(i, j);
                b.swap(i, j);
                l.swap(i, j);
            }
            let lii = best.2;
            l[i][i] = lii;
            for r in i + 1..d {
                let s: f64 = (0..i).map(|k| l[r][k] * l[i][k]).sum();
                l[r][i] = (c[r][i] - s) / lii;
            }
            // conditional expectation of the truncated variable
            let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
            let (ta, tb) = ((a[i] - s) / lii, (b[i] - s) / lii);
            let p = normal::cdf(tb) - normal::cdf(ta);
            y[i] = if p > 1e-300 {
                (normal::pdf(ta) - normal::pdf(tb)) / p
            } else if ta.is_finite() && tb.is_finite() {
                (ta + tb) / 2.0
            } else if ta.is_finite() {
                ta
            } else {
                tb
            };
        }
        let mut packed = Vec::with_capacity(d * (d + 1) / 2);
        for (i, r) in l.iter().enumerate() {
            packed.extend_from_slice(&r[..=i]);
        }
        Sov { d, l: packed, a, b }
    }

    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let l00 = self.l[0];
        let mut lo = normal::cdf(self.a[0] / l00);
        let mut hi = normal::cdf(self.b[0] / l00);
        let mut f = hi - lo;
        for i in 1..self.d {
            if f <= 0.0 {
                return 0.0;
            }
            let u = (lo + w[i - 1] * (hi - lo)).clamp(1e-300, 1.0 - 1e-16);
            y[i - 1] = normal::quantile(u);
            let r = &self.l[row(i)..row(i) + i + 1];
            let s: f64 = r[..i].iter().zip(&y[..i]).map(|(l, y)| l * y).sum();
            lo = normal::cdf((self.a[i] - s) / r[i]);
            hi = normal::cdf((self.b[i] - s) / r[i]);
            f *= hi - lo;
        }
        f
    }
}

pub(crate) struct QmcOutcome {
    pub value: f64,
    pub std_error: f64,
    pub evals: usize,
    pub converged: bool,
}

fn params() -> &'static JoeKuoD6 {
    static P: OnceLock<JoeKuoD6> = OnceLock::new();
    P.get_or_init(JoeKuoD6::standard)
}

const TO_UNIT: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

/// Integrates until `3·SE ≤ tol` or the evaluation budget is spent. Each
/// randomization is an independent random digital shift of one Sobol' sequence.
pub(crate) fn integrate(sov: &Sov, tol: f64, seed: u64, shifts: usize, max_evals: usize) -> QmcOutcome {
    let m = sov.d - 1;
    let mut rng = crate::rng::stream(seed, 0);
    let shift_vecs: Vec<Vec<u64>> = (0..shifts).map(|_| (0..m).map(|_| rng.random::<u64>()).collect()).collect();
    let mut seq = Sobol::<u64>::new(m, params());
    let mut sums = vec![0.0; shifts];
    let mut done = 0usize;
    let mut batch = 1024usize;
    loop {
        let pts: Vec<u64> = seq.by_ref().take(batch).flatten().collect();
        let add: Vec<f64> = shift_vecs
            .par_iter()
            .map(|sh| {
                let mut w = vec![0.0; m];
                let mut y = vec![0.0; sov.d];
                let mut acc = 0.0;
                for p in pts.chunks_exact(m) {
                    for j in 0..m {
                        w[j] = (((p[j] ^ sh[j]) >> 11) as f64 + 0.5) * TO_UNIT;
                    }
                    acc += sov.eval(&w, &mut y);
                }
                acc
            })
            .collect();
        for (s, a) in sums.iter_mut().zip(add) {
            *s += a;
        }
        done += batch;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let value = means.iter().sum::<f64>() / shifts as f64;
        let var = means.iter().map(|v| (v - value).powi(2)).sum::<f64>() / ((shifts - 1) as f64 * shifts as f64);
        let std_error = var.sqrt();
        let evals = done * shifts;
        let converged = 3.0 * std_error <= tol;
        if converged || 2 * evals > max_evals {
            return QmcOutcome { value: value.clamp(0.0, 1.0), std_error, evals, converged };
        }
        batch = done;
    }
}
