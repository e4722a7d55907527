//! Monte-Carlo oracle: path generators for every process family, empirical
//! record statistics and extremal-index estimation.
//!
//! Path `i` of a study draws from the random stream `(seed, i)`, so results do
//! not depend on the number of worker threads.

pub mod dump;
pub mod runs;
pub mod stable;

pub use dump::{read_raw_dump, write_raw_dump};
pub use runs::empirical_extremal_index;
pub use stable::sample_stable;

use crate::asymptotic::gaussian_norming;
use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::multivariate::{stack_index, CrossCorrelationModel};
use crate::records::model::{CorrelationModel, ModelKind};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest path length simulated through a dense Cholesky factor.
pub const CHOLESKY_MAX_N: usize = 500;
/// Step cap of the sequential increment simulation.
pub const DEFAULT_INCREMENT_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Process {
    Gaussian(CorrelationModel),
    MultiGaussian(CrossCorrelationModel),
    /// `X_t = X_{t−1}/m + ε_t`, `ε` uniform on `{0, 1/m, …, (m−1)/m}`, `X_0 ~ U[0, 1]`.
    Chernick {
        m: u32,
    },
    /// `X_t = Σ_i c_i ε_{t−i}` with iid `stable(1, α, κ)` noise.
    StableMa {
        coeffs: Vec<f64>,
        alpha: f64,
        kappa: f64,
    },
}

/// Strictly increasing map applied to every simulated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MarginTransform {
    Exp,
    Cube,
    Sinh,
    Affine { scale: f64, shift: f64 },
}

impl MarginTransform {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            MarginTransform::Exp => x.exp(),
            MarginTransform::Cube => x * x * x,
            MarginTransform::Sinh => x.sinh(),
            MarginTransform::Affine { scale, shift } => scale * x + shift,
        }
    }

    /// Checks strict increase on a grid over [−20, 20].
    pub fn validate(&self) -> Result<()> {
        let grid: Vec<f64> = (-400..=400).map(|k| k as f64 * 0.05).collect();
        let ok = grid.windows(2).all(|w| self.apply(w[0]) < self.apply(w[1]));
        if !ok {
            return Err(Error::InvalidArgument(format!("margin transform {self:?} is not strictly increasing")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStudy {
    pub process: Process,
    /// Path length.
    pub n: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub margin: Option<MarginTransform>,
}

impl SimStudy {
    pub fn new(process: Process, n: usize, n_paths: usize, seed: u64) -> Result<Self> {
        let s = Self { process, n, n_paths, seed, margin: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_margin(mut self, margin: MarginTransform) -> Result<Self> {
        margin.validate()?;
        self.margin = Some(margin);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("n and n_paths must be at least 1".into()));
        }
        if let Some(m) = &self.margin {
            m.validate()?;
        }
        match &self.process {
            Process::Chernick { m } if *m < 2 => Err(Error::InvalidArgument(format!("m must be at least 2, got {m}"))),
            Process::StableMa { coeffs, alpha, kappa } => {
                stable::check(*alpha, *kappa)?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidArgument("coefficients must be a non-empty finite list".into()));
                }
                if coeffs.iter().all(|&c| c == 0.0) {
                    return Err(Error::AllZeroCoefficients);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Coordinates per time step.
    pub fn dim(&self) -> usize {
        match &self.process {
            Process::MultiGaussian(m) => m.d,
            _ => 1,
        }
    }

    /// Paths `range` as rows of length `n·dim` (component-major for vector processes).
    pub fn paths(&self, range: std::ops::Range<usize>) -> Result<Vec<Vec<f64>>> {
        let g = Generator::new(self)?;
        Ok(range.into_par_iter().map(|i| g.path(i)).collect())
    }

    /// Paths `0..n_paths` as a matrix (one path per row).
    pub fn path_matrix(&self) -> Result<DMatrix<f64>> {
        let rows = self.paths(0..self.n_paths)?;
        let w = self.n * self.dim();
        Ok(DMatrix::from_fn(rows.len(), w, |i, j| rows[i][j]))
    }
}

enum GenKind {
    Iid,
    Ar1(f64),
    Chol(DMatrix<f64>),
    Chernick(u32),
    Stable { coeffs: Vec<f64>, alpha: f64, kappa: f64 },
}

struct Generator {
    kind: GenKind,
    width: usize,
    n: usize,
    seed: u64,
    margin: Option<MarginTransform>,
}

impl Generator {
    fn new(s: &SimStudy) -> Result<Self> {
        s.validate()?;
        let kind = match &s.process {
            Process::Gaussian(m) => match m.kind {
                ModelKind::Iid => GenKind::Iid,
                ModelKind::Ar1 { phi } if s.n > CHOLESKY_MAX_N => GenKind::Ar1(phi),
                _ if s.n > CHOLESKY_MAX_N => return Err(Error::Model(format!("paths longer than {CHOLESKY_MAX_N} need an AR(1) or iid model"))),
                _ => GenKind::Chol(cholesky(&m.matrix(s.n)?)?.matrix().clone()),
            },
            Process::MultiGaussian(m) => {
                if s.n * m.d > CHOLESKY_MAX_N {
                    return Err(Error::Model(format!("n·d must not exceed {CHOLESKY_MAX_N}")));
                }
                GenKind::Chol(cholesky(&m.matrix(s.n)?)?.matrix().clone())
            }
            Process::Chernick { m } => GenKind::Chernick(*m),
            Process::StableMa { coeffs, alpha, kappa } => GenKind::Stable { coeffs: coeffs.clone(), alpha: *alpha, kappa: *kappa },
        };
        Ok(Self { kind, width: s.n * s.dim(), n: s.n, seed: s.seed, margin: s.margin })
    }

    fn path(&self, i: usize) -> Vec<f64> {
        let mut rng: ChaCha8Rng = crate::rng::stream(self.seed, i as u64);
        let mut x = vec![0.0; self.width];
        match &self.kind {
            GenKind::Iid => x.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng)),
            GenKind::Ar1(phi) => {
                let s = (1.0 - phi * phi).sqrt();
                let mut prev: f64 = StandardNormal.sample(&mut rng);
                x[0] = prev;
                for v in x.iter_mut().skip(1) {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    prev = phi * prev + s * e;
                    *v = prev;
                }
            }
            GenKind::Chol(l) => {
                let e: Vec<f64> = (0..self.width).map(|_| StandardNormal.sample(&mut rng)).collect();
                for (r, v) in x.iter_mut().enumerate() {
                    *v = (0..=r).map(|c| l[(r, c)] * e[c]).sum();
                }
            }
            GenKind::Chernick(m) => {
                let mf = *m as f64;
                let mut prev: f64 = rng.random();
                for v in x.iter_mut() {
                    prev = prev / mf + rng.random_range(0..*m) as f64 / mf;
                    *v = prev;
                }
            }
            GenKind::Stable { coeffs, alpha, kappa } => {
                let l = coeffs.len();
                let noise: Vec<f64> = (0..self.n + l - 1).map(|_| stable::draw(*alpha, *kappa, &mut rng)).collect();
                for (t, v) in x.iter_mut().enumerate() {
                    // noise[t + l − 1] is ε_t
                    *v = coeffs.iter().enumerate().map(|(k, c)| c * noise[t + l - 1 - k]).sum();
                }
            }
        }
        if let Some(m) = &self.margin {
            x.iter_mut().for_each(|v| *v = m.apply(*v));
        }
        x
    }
}

/// Record indicators of a univariate path: strict exceedance of the running maximum.
pub fn record_indicators(path: &[f64]) -> Vec<bool> {
    let mut max = f64::NEG_INFINITY;
    path.iter()
        .map(|&v| {
            let r = v > max;
            if r {
                max = v;
            }
            r
        })
        .collect()
}

/// Complete-record indicators of a component-major path of `n` times and `d` coordinates.
pub fn complete_record_indicators(path: &[f64], d: usize, n: usize) -> Vec<bool> {
    let per: Vec<Vec<bool>> = (0..d).map(|a| record_indicators(&path[stack_index(a, 0, n)..stack_index(a, 0, n) + n])).collect();
    (0..n).map(|t| per.iter().all(|r| r[t])).collect()
}

/// Runs `f` on every path (in parallel, results in path order).
pub fn for_each_path<R, F>(study: &SimStudy, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, &[f64]) -> R + Sync,
{
    let g = Generator::new(study)?;
    Ok((0..study.n_paths).into_par_iter().map(|i| f(i, &g.path(i))).collect())
}

/// Bernoulli rate and its binomial standard error.
pub fn rate(hits: u64, total: usize) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

/// Empirical CDF of `samples` at `x` (fraction `≤ x` over `total`).
pub fn ecdf(samples: &[f64], x: f64, total: usize) -> f64 {
    samples.iter().filter(|&&v| v <= x).count() as f64 / total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRecordStats {
    pub n: usize,
    pub n_paths: usize,
    /// Record rate at times `1..=n` (complete records for vector processes).
    pub record_rate: Vec<f64>,
    /// `√(p̂(1 − p̂)/n_paths)`; NaN when `n_paths = 1`.
    pub record_se: Vec<f64>,
    pub mean_records: f64,
    pub mean_records_se: f64,
    /// Path counts of `T(2) = k` and `T(3) = k`, indexed by `k` (entries 0 and 1 unused).
    pub t2_counts: Vec<u64>,
    pub t3_counts: Vec<u64>,
    /// `X_{T(2)} − X_1` and `X_{T(3)} − X_{T(2)}` for paths where they occur.
    pub first_increments: Vec<f64>,
    pub second_increments: Vec<f64>,
    /// Path maxima (univariate processes).
    pub maxima: Vec<f64>,
    /// 1-based times pooled for the scaled statistics.
    pub window: Option<(usize, usize)>,
    /// Mean over paths of the window average of `k·R_k`, with its standard error.
    pub pooled_scaled_rate: Option<(f64, f64)>,
    /// Normed record values `(X_k − b_k)/a_k` for records at `k` in the window.
    pub scaled_record_values: Vec<f64>,
    pub se_defined: bool,
}

impl EmpiricalRecordStats {
    /// `(rate, se)` at 1-based time `k`.
    pub fn rate_at(&self, k: usize) -> (f64, f64) {
        (self.record_rate[k - 1], self.record_se[k - 1])
    }

    pub fn t2_pmf(&self, k: usize) -> (f64, f64) {
        rate(self.t2_counts[k], self.n_paths)
    }

    pub fn t3_pmf(&self, k: usize) -> (f64, f64) {
        rate(self.t3_counts[k], self.n_paths)
    }
}

struct PathSummary {
    record_times: Vec<u32>,
    inc1: Option<f64>,
    inc2: Option<f64>,
    max: f64,
    window_mean: f64,
    scaled: Vec<f64>,
}

/// `(a_k, b_k)` for the scaled record values, when the process has a known norming.
fn norming(study: &SimStudy, k: usize) -> Option<(f64, f64)> {
    if study.margin.is_some() {
        return None;
    }
    match &study.process {
        Process::Chernick { .. } => Some((1.0 / k as f64, 1.0)),
        Process::StableMa { alpha, .. } => Some(((k as f64).powf(1.0 / alpha), 0.0)),
        Process::Gaussian(_) => gaussian_norming(k as u64).ok(),
        Process::MultiGaussian(_) => None,
    }
}

/// Record statistics of a study.
pub fn simulate_records(study: &SimStudy) -> Result<EmpiricalRecordStats> {
    let n = study.n;
    let d = study.dim();
    let window = (n >= 4).then(|| (n.div_ceil(2), n));
    let norms: Vec<Option<(f64, f64)>> = (1..=n).map(|k| norming(study, k)).collect();
    let summaries = for_each_path(study, |_, x| {
        let rec = if d == 1 { record_indicators(x) } else { complete_record_indicators(x, d, n) };
        let record_times: Vec<u32> = rec.iter().enumerate().filter(|(_, &r)| r).map(|(t, _)| t as u32 + 1).collect();
        let (mut inc1, mut inc2, mut max, mut window_mean, mut scaled) = (None, None, f64::NAN, f64::NAN, Vec::new());
        if d == 1 {
            let at = |k: u32| x[k as usize - 1];
            inc1 = record_times.get(1).map(|&k| at(k) - x[0]);
            inc2 = record_times.get(2).map(|&k| at(k) - at(record_times[1]));
            max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        if let Some((lo, hi)) = window {
            let in_w = record_times.iter().filter(|&&k| (lo..=hi).contains(&(k as usize)));
            window_mean = in_w.clone().map(|&k| k as f64).sum::<f64>() / (hi - lo + 1) as f64;
            if d == 1 {
                scaled = in_w.filter_map(|&k| norms[k as usize - 1].map(|(a, b)| (x[k as usize - 1] - b) / a)).collect();
            }
        }
        PathSummary { record_times, inc1, inc2, max, window_mean, scaled }
    })?;
    let np = study.n_paths;
    let mut hits = vec![0u64; n];
    let mut t2_counts = vec![0u64; n + 1];
    let mut t3_counts = vec![0u64; n + 1];
    let (mut first_increments, mut second_increments, mut maxima, mut scaled_record_values) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut cnt_sum, mut cnt_sq, mut w_sum, mut w_sq) = (0.0, 0.0, 0.0, 0.0);
    for s in &summaries {
        for &k in &s.record_times {
            hits[k as usize - 1] += 1;
        }
        if let Some(&k) = s.record_times.get(1) {
            t2_counts[k as usize] += 1;
        }
        if let Some(&k) = s.record_times.get(2) {
            t3_counts[k as usize] += 1;
        }
        first_increments.extend(s.inc1);
        second_increments.extend(s.inc2);
        if d == 1 {
            maxima.push(s.max);
        }
        let c = s.record_times.len() as f64;
        cnt_sum += c;
        cnt_sq += c * c;
        w_sum += s.window_mean;
        w_sq += s.window_mean * s.window_mean;
        scaled_record_values.extend_from_slice(&s.scaled);
    }
    let npf = np as f64;
    let se_defined = np >= 2;
    let sample_se = |sum: f64, sq: f64| if se_defined { ((sq - sum * sum / npf) / (npf - 1.0) / npf).max(0.0).sqrt() } else { f64::NAN };
    let (record_rate, record_se): (Vec<f64>, Vec<f64>) = hits
        .iter()
        .map(|&h| {
            let (p, se) = rate(h, np);
            (p, if se_defined { se } else { f64::NAN })
        })
        .unzip();
    Ok(EmpiricalRecordStats {
        n,
        n_paths: np,
        record_rate,
        record_se,
        mean_records: cnt_sum / npf,
        mean_records_se: sample_se(cnt_sum, cnt_sq),
        t2_counts,
        t3_counts,
        first_increments,
        second_increments,
        maxima,
        window,
        pooled_scaled_rate: window.map(|_| (w_sum / npf, sample_se(w_sum, w_sq))),
        scaled_record_values,
        se_defined,
    })
}

pub fn simulate_chernick(m: u32, n: usize, n_paths: usize, seed: u64) -> Result<EmpiricalRecordStats> {
    simulate_records(&SimStudy::new(Process::Chernick { m }, n, n_paths, seed)?)
}

pub fn simulate_stable_ma(coeffs: &[f64], alpha: f64, kappa: f64, n: usize, n_paths: usize, seed: u64) -> Result<EmpiricalRecordStats> {
    let process = Process::StableMa { coeffs: coeffs.to_vec(), alpha, kappa };
    simulate_records(&SimStudy::new(process, n, n_paths, seed)?)
}

/// Increments observed by running each path until its third record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementSamples {
    pub n_paths: usize,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Paths that reached the step cap before the second (third) record.
    pub censored_first: usize,
    pub censored_second: usize,
}

impl IncrementSamples {
    /// `P̂(increment ≤ x)` over all paths and a bound `3·SE + censored fraction`.
    pub fn cdf(&self, second: bool, x: f64) -> (f64, f64) {
        let (s, c) = if second { (&self.second, self.censored_second) } else { (&self.first, self.censored_first) };
        let hits = s.iter().filter(|&&v| v <= x).count() as u64;
        let (p, se) = rate(hits, self.n_paths);
        (p, se + c as f64 / self.n_paths as f64)
    }
}

/// Sequential simulation of `X_{T(2)} − X_1` and `X_{T(3)} − X_{T(2)}` for iid or AR(1) models.
pub fn simulate_increments(model: &CorrelationModel, n_paths: usize, seed: u64, cap: usize) -> Result<IncrementSamples> {
    let phi = match model.kind {
        ModelKind::Iid => 0.0,
        ModelKind::Ar1 { phi } => phi,
        _ => return Err(Error::Model("sequential increment simulation needs an iid or AR(1) model".into())),
    };
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let s = (1.0 - phi * phi).sqrt();
    let out: Vec<(Option<f64>, Option<f64>)> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::stream(seed, i as u64);
            let mut x: f64 = StandardNormal.sample(&mut rng);
            let x1 = x;
            let (mut max, mut second) = (x, None::<f64>);
            for _ in 1..cap {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + s * e;
                if x > max {
                    match second {
                        None => second = Some(x),
                        Some(x2) => return (Some(x2 - x1), Some(x - x2)),
                    }
                    max = x;
                }
            }
            (second.map(|x2| x2 - x1), None)
        })
        .collect();
    let first: Vec<f64> = out.iter().filter_map(|o| o.0).collect();
    let second: Vec<f64> = out.iter().filter_map(|o| o.1).collect();
    Ok(IncrementSamples { n_paths, censored_first: n_paths - first.len(), censored_second: n_paths - second.len(), first, second })
}
