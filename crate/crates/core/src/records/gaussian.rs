//! Exact record laws of a stationary standard Gaussian sequence.
//!
//! Record times are 1-based: `X_1` is always a record.

use super::gamma::{Constraint, GammaConstruction};
use super::law::{CdfPoint, LawMeta, RecordLaw, SeriesResult, TailPolicy};
use super::model::CorrelationModel;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, CorrMatrix};
use crate::normal;
use crate::numerics::{Estimate, Numerics};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const TAG_REC: u64 = 1;
const TAG_CDF: u64 = 2;
const TAG_NO_SECOND: u64 = 3;
const TAG_ARRIVAL: u64 = 4;
const TAG_INC1: u64 = 5;
const TAG_INC2: u64 = 6;
const TAG_INC2_PMF: u64 = 7;
const TAG_T3_TAIL: u64 = 8;
const TAG_CONS: u64 = 9;
const TAG_JOINT: u64 = 10;
const TAG_CDF_UPPER: u64 = 11;

const NEG_INF: f64 = f64::NEG_INFINITY;
const INF: f64 = f64::INFINITY;

fn below_all(n: usize) -> Vec<Constraint> {
    vec![Constraint::below(0); n]
}

fn term_numerics(num: &Numerics, policy: &TailPolicy, labels: &[u64]) -> Numerics {
    Numerics { tol: Some(policy.term_tol), ..num.child(labels) }
}

/// Γ construction for a record at time `n`: condition on `X_n`, all earlier values below it.
pub fn gamma_single(model: &CorrelationModel, n: usize) -> Result<GammaConstruction> {
    if n < 2 {
        return Err(Error::InvalidTimes(format!("a record law needs n >= 2, got {n}")));
    }
    let r = model.record_matrix(n)?;
    let last = n - 1;
    for i in 0..last {
        let rho = r.get(i, last);
        if rho.abs() >= 1.0 - 1e-12 {
            return Err(Error::DegenerateCorrelation { i: i + 1, n, rho });
        }
    }
    // admissibility of γ_{i,j;n} straight from the correlations
    for i in 0..last {
        for j in 0..i {
            let (rin, rjn) = (r.get(i, last), r.get(j, last));
            let gamma = (1.0 + r.get(i, j) - rin - rjn) / (2.0 * ((1.0 - rin) * (1.0 - rjn)).sqrt());
            if !(gamma.abs() <= 1.0 + 1e-12) {
                return Err(Error::InvalidGamma { i: j + 1, j: i + 1, n, gamma });
            }
        }
    }
    let comp: Vec<usize> = (0..last).collect();
    let g = GammaConstruction::build(&r, &[last], &comp, &below_all(last)).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::InvalidGamma { i: 0, j: 0, n, gamma: f64::NAN },
        other => other,
    })?;
    if cholesky(&g.gamma).is_err() {
        return Err(Error::InvalidGamma { i: 0, j: 0, n, gamma: f64::NAN });
    }
    Ok(g)
}

/// `P(R_n = 1) = Φ_{n−1}(0; Γ)`; `P(R_1 = 1) = 1`.
pub fn record_probability(model: &CorrelationModel, n: usize, num: &Numerics) -> Result<RecordLaw> {
    if n == 0 {
        return Err(Error::InvalidTimes("time indices start at 1".into()));
    }
    if n == 1 {
        return Ok(RecordLaw { probability: Estimate::exact(1.0), cdf: vec![], meta: LawMeta { dims: vec![], seed: num.seed, tol: 0.0 } });
    }
    let g = gamma_single(model, n)?;
    let probability = g.latent_prob(&num.child(&[TAG_REC, n as u64]))?;
    Ok(RecordLaw { probability, cdf: vec![], meta: LawMeta { dims: vec![n - 1], seed: num.seed, tol: num.tol_for(n - 1) } })
}

/// `P(X_n ≤ x | R_n = 1) = Ψ_{1,n−1}(x; ϱ, Σ̄)`.
pub fn record_value_cdf(model: &CorrelationModel, n: usize, x: f64, num: &Numerics) -> Result<RecordLaw> {
    record_value_cdf_points(model, n, &[x], num)
}

/// [`record_value_cdf`] at several points sharing one normalizing integral.
pub fn record_value_cdf_points(model: &CorrelationModel, n: usize, xs: &[f64], num: &Numerics) -> Result<RecordLaw> {
    if xs.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("record value CDF point is NaN".into()));
    }
    let mut law = record_probability(model, n, num)?;
    let mut inner = None;
    if n > 1 && xs.iter().any(|x| x.is_finite()) {
        let g = gamma_single(model, n)?;
        let fine = num.for_ratio(n, law.probability.value);
        law.probability = g.latent_prob(&fine.child(&[TAG_REC, n as u64]))?;
        law.meta.dims.push(n);
        law.meta.tol = fine.tol_for(n);
        inner = Some((g.csn()?, fine));
    }
    for &x in xs {
        let value = match &inner {
            _ if n == 1 => Estimate::exact(normal::cdf(x)),
            _ if x == INF => Estimate::exact(1.0),
            _ if x == NEG_INF => Estimate::exact(0.0),
            Some((csn, fine)) => {
                // integrate whichever side of x holds less mass: its QMC error is
                // smaller and the normalizer's error enters with the smaller weight
                let one = DMatrix::identity(1, 1);
                let tag = [TAG_CDF, n as u64, x.to_bits()];
                let coarse = csn.mass_rect(&one, &[NEG_INF], &[x], &num.child(&tag))?;
                if coarse.value <= 0.5 * law.probability.value {
                    let below = csn.mass_rect(&one, &[NEG_INF], &[x], &fine.child(&tag))?;
                    below.ratio(law.probability).clamp_unit()
                } else {
                    let above = csn.mass_rect(&one, &[x], &[INF], &fine.child(&[TAG_CDF_UPPER, n as u64, x.to_bits()]))?;
                    let r = above.ratio(law.probability);
                    Estimate { value: 1.0 - r.value, ..r }.clamp_unit()
                }
            }
            None => unreachable!("finite points build the CSN law"),
        };
        law.cdf.push(CdfPoint { x, value });
    }
    Ok(law)
}

/// `P(T(2) = j_2, …, T(k) = j_k)` for strictly increasing `times = [j_2, …, j_k]`.
pub fn arrival_times_joint(model: &CorrelationModel, times: &[usize], num: &Numerics) -> Result<Estimate> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("at least one arrival time is needed".into()));
    }
    if times[0] < 2 || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidTimes(format!("times must satisfy 2 <= j_2 < ... < j_k, got {times:?}")));
    }
    let last = *times.last().unwrap();
    let r = model.matrix(last)?;
    let cond: Vec<usize> = std::iter::once(0).chain(times.iter().map(|t| t - 1)).collect();
    let comp: Vec<usize> = (0..last).filter(|c| !cond.contains(c)).collect();
    let cons: Vec<Constraint> = comp.iter().map(|&c| Constraint::below(cond.iter().rposition(|&i| i < c).expect("index 0 precedes"))).collect();
    let g = GammaConstruction::build(&r, &cond, &comp, &cons)?;
    let k = cond.len();
    let d = DMatrix::from_fn(k - 1, k, |a, b| {
        if a == b {
            1.0
        } else if b == a + 1 {
            -1.0
        } else {
            0.0
        }
    });
    let mut labels = vec![TAG_ARRIVAL];
    labels.extend(times.iter().map(|&t| t as u64));
    g.mass(&d, &vec![NEG_INF; k - 1], &vec![0.0; k - 1], &num.child(&labels))
}

/// `P(X_i < X_1, 2 ≤ i ≤ k) = P(T(2) > k)`.
fn no_second_record(model: &CorrelationModel, k: usize, num: &Numerics) -> Result<Estimate> {
    match k {
        0 | 1 => Ok(Estimate::exact(1.0)),
        2 => Ok(Estimate::exact(0.5)),
        _ => {
            let r = model.matrix(k)?;
            let comp: Vec<usize> = (1..k).collect();
            let g = GammaConstruction::build(&r, &[0], &comp, &below_all(k - 1))?;
            g.latent_prob(&num.child(&[TAG_NO_SECOND, k as u64]))
        }
    }
}

/// `P(T(2) = n) = Φ_{n−2}(0; Γ_{2:n−1}) − Φ_{n−1}(0; Γ_{2:n})`; exactly 1/2 at `n = 2`.
pub fn second_record_time_pmf(model: &CorrelationModel, n: usize, num: &Numerics) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::InvalidTimes(format!("T(2) >= 2, got {n}")));
    }
    if n == 2 {
        return Ok(Estimate::exact(0.5));
    }
    let p = no_second_record(model, n - 1, num)? - no_second_record(model, n, num)?;
    Ok(p.clamp_unit())
}

/// Terms up to `n_max`, computed in parallel chunks, stopping by the policy.
/// Returns the terms kept and the extrapolated tail if the rule fired.
fn run_series<F>(first: usize, n_max: usize, policy: &TailPolicy, term: F) -> Result<(Vec<Estimate>, Option<f64>)>
where
    F: Fn(usize) -> Result<Estimate> + Sync,
{
    let chunk = rayon::current_num_threads().max(1);
    let mut terms: Vec<Estimate> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut n = first;
    while n <= n_max {
        let hi = (n + chunk - 1).min(n_max);
        let batch: Vec<Result<Estimate>> = (n..=hi).into_par_iter().map(&term).collect();
        for t in batch {
            let t = t?;
            terms.push(t);
            values.push(t.value);
            if let Some(tail) = policy.stop(&values) {
                return Ok((terms, Some(tail)));
            }
        }
        n = hi + 1;
    }
    Ok((terms, None))
}

/// Closes a series with the bracket `[r·mass, mass]` for the uncovered mass.
fn close_tail(partial: Estimate, mass: Estimate, ratio: f64, terms_used: usize, policy: &TailPolicy) -> Result<(Estimate, f64)> {
    let m = mass.value.max(0.0);
    let r = if ratio.is_finite() { ratio.clamp(0.0, 1.0) } else { 0.5 };
    let half = 0.5 * (1.0 - r) * m;
    if half > policy.max_residual {
        return Err(Error::TailNotConverged { terms: terms_used, residual: half });
    }
    let value = Estimate {
        value: partial.value + 0.5 * (1.0 + r) * m,
        abs_error: partial.abs_error + half + mass.abs_error,
        converged: partial.converged && mass.converged,
    };
    Ok((value, m))
}

fn series_cap(model: &CorrelationModel, policy: &TailPolicy, num: &Numerics, offset: usize) -> usize {
    (policy.max_terms + offset).min(num.max_dim + 1).min(model.horizon)
}

/// `P(X_{T(2)} − X_1 ≤ x)`, series over `n = T(2)`.
///
/// Past the last term, the uncovered mass is exactly `P(T(2) > N)`; its share
/// below `x` is bracketed by the last conditional ratio (the increment given
/// `T(2) = n` shrinks as `n` grows) and 1, and the midpoint is reported.
pub fn first_increment_cdf(model: &CorrelationModel, x: f64, policy: &TailPolicy, num: &Numerics) -> Result<SeriesResult> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("increment level must be positive, got {x}")));
    }
    let n_max = series_cap(model, policy, num, 1);
    if n_max < 2 {
        return Err(Error::DimensionCap { dim: 1, cap: num.max_dim });
    }
    let term = |n: usize| -> Result<Estimate> {
        if x == 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        let r = model.matrix(n)?;
        let comp: Vec<usize> = (1..n).collect();
        let mut cons = below_all(n - 1);
        cons[n - 2] = Constraint { selector: Some(0), lo: 0.0, hi: x };
        let g = GammaConstruction::build(&r, &[0], &comp, &cons)?;
        g.latent_prob(&term_numerics(num, policy, &[TAG_INC1, n as u64, x.to_bits()]))
    };
    let (terms, tail) = run_series(2, n_max, policy, term)?;
    let last = terms.len() + 1;
    let partial: Estimate = terms.iter().copied().sum();
    if let Some(tail) = tail {
        return Ok(SeriesResult { value: partial.with_error(tail), terms, truncation_index: last, residual_bound: tail, tail_bracketed: false });
    }
    let tn = term_numerics(num, policy, &[]);
    let mass = no_second_record(model, last, &tn)?;
    let pmf = second_record_time_pmf(model, last, &tn)?;
    let ratio = terms.last().unwrap().value / pmf.value;
    let (mut value, bound) = close_tail(partial, mass, ratio, terms.len(), policy)?;
    value.value = value.value.clamp(0.0, 1.0);
    Ok(SeriesResult { value, terms, truncation_index: last, residual_bound: bound, tail_bracketed: true })
}

/// Ingredients for the (j, k) term of the second increment: condition on
/// `(X_1, X_j, X_k)`, values before `j` below `X_1`, values between below `X_j`.
fn second_increment_construction(model: &CorrelationModel, j: usize, k: usize) -> Result<GammaConstruction> {
    let r = model.matrix(k)?;
    let cond = [0, j - 1, k - 1];
    let comp: Vec<usize> = (1..k - 1).filter(|&c| c != j - 1).collect();
    let cons: Vec<Constraint> = comp.iter().map(|&c| Constraint::below(if c < j - 1 { 0 } else { 1 })).collect();
    GammaConstruction::build(&r, &cond, &comp, &cons)
}

/// `P(T(2) = j, T(3) = k, X_k − X_j ≤ x)`; `x = ∞` gives the arrival pmf.
fn second_increment_term(model: &CorrelationModel, j: usize, k: usize, x: f64, num: &Numerics) -> Result<Estimate> {
    let g = second_increment_construction(model, j, k)?;
    // rows: z_1 − z_j < 0 and 0 < z_k − z_j ≤ x
    let a = DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, -1.0, 1.0]);
    g.mass(&a, &[NEG_INF, 0.0], &[0.0, x], num)
}

/// `P(T(3) > k) = P(T(2) > k) + Σ_{j ≤ k} P(T(2) = j, no record in j+1..k)`.
fn no_third_record(model: &CorrelationModel, k: usize, num: &Numerics) -> Result<Estimate> {
    let mut total = no_second_record(model, k, num)?;
    let r = model.matrix(k)?;
    let parts: Vec<Result<Estimate>> = (2..=k)
        .into_par_iter()
        .map(|j| {
            let comp: Vec<usize> = (1..k).filter(|&c| c != j - 1).collect();
            let cons: Vec<Constraint> = comp.iter().map(|&c| Constraint::below(if c < j - 1 { 0 } else { 1 })).collect();
            let g = GammaConstruction::build(&r, &[0, j - 1], &comp, &cons)?;
            let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
            g.mass(&a, &[NEG_INF], &[0.0], &num.child(&[TAG_T3_TAIL, j as u64, k as u64]))
        })
        .collect();
    for p in parts {
        total = total + p?;
    }
    Ok(total)
}

/// `P(X_{T(3)} − X_{T(2)} ≤ x)`, double series over `(T(2), T(3)) = (j, k)`,
/// enumerated by `k` with every `j < k`; the tail is closed as in
/// [`first_increment_cdf`] with the exact mass `P(T(3) > K)`.
pub fn second_increment_cdf(model: &CorrelationModel, x: f64, policy: &TailPolicy, num: &Numerics) -> Result<SeriesResult> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("increment level must be positive, got {x}")));
    }
    let k_max = series_cap(model, policy, num, 2);
    if k_max < 3 {
        return Err(Error::DimensionCap { dim: 2, cap: num.max_dim });
    }
    let row = |k: usize, level: f64, tag: u64| -> Result<Estimate> {
        if level == 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        (2..k)
            .map(|j| second_increment_term(model, j, k, level, &term_numerics(num, policy, &[tag, j as u64, k as u64, level.to_bits()])))
            .collect::<Result<Vec<Estimate>>>()
            .map(|v| v.into_iter().sum())
    };
    let (terms, tail) = run_series(3, k_max, policy, |k| row(k, x, TAG_INC2))?;
    let last = terms.len() + 2;
    let partial: Estimate = terms.iter().copied().sum();
    if let Some(tail) = tail {
        return Ok(SeriesResult { value: partial.with_error(tail), terms, truncation_index: last, residual_bound: tail, tail_bracketed: false });
    }
    let mass = no_third_record(model, last, &term_numerics(num, policy, &[]))?;
    let pmf_last = row(last, INF, TAG_INC2_PMF)?;
    let ratio = terms.last().unwrap().value / pmf_last.value;
    let (mut value, bound) = close_tail(partial, mass, ratio, terms.len(), policy)?;
    value.value = value.value.clamp(0.0, 1.0);
    Ok(SeriesResult { value, terms, truncation_index: last, residual_bound: bound, tail_bracketed: true })
}

/// Classification of `E(N) = 1 + Σ_{n≥2} P(R_n = 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesClass {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRecords {
    /// Partial sum (plus the extrapolated tail when convergent).
    pub value: Estimate,
    /// `P(R_n = 1)` for `n = 2, 3, …`.
    pub terms: Vec<Estimate>,
    pub class: SeriesClass,
    /// Largest `n` summed.
    pub horizon: usize,
    /// Whether every evaluated Γ̄ had all off-diagonal entries at least 1/2.
    pub gamma_at_least_half: bool,
}

/// Expected number of records with a divergence/convergence classification.
///
/// Divergent: every evaluated Γ̄ has off-diagonal entries ≥ 1/2 (then
/// `P(R_n) ≥ 1/n`), or `n·P(R_n)` does not decrease over the upper half of the
/// evaluated range. Convergent: the stopping rule fires or the last five term
/// ratios are all ≤ 0.9, with a geometric tail added.
pub fn expected_records(model: &CorrelationModel, policy: &TailPolicy, num: &Numerics) -> Result<ExpectedRecords> {
    let n_max = series_cap(model, policy, num, 1);
    let half = std::sync::atomic::AtomicBool::new(true);
    let term = |n: usize| -> Result<Estimate> {
        let g = gamma_single(model, n)?;
        let gb = g.gamma_bar();
        let ok = (0..n - 1).all(|i| (0..i).all(|j| gb.get(i, j) >= 0.5 - 1e-9));
        if !ok {
            half.store(false, std::sync::atomic::Ordering::Relaxed);
        }
        g.latent_prob(&term_numerics(num, policy, &[TAG_REC, n as u64]))
    };
    let (terms, tail) = run_series(2, n_max, policy, term)?;
    let horizon = terms.len() + 1;
    let gamma_at_least_half = half.load(std::sync::atomic::Ordering::Relaxed);
    let partial = Estimate::exact(1.0) + terms.iter().copied().sum();
    if let Some(tail) = tail {
        let value = Estimate { value: partial.value + tail, abs_error: partial.abs_error + tail, ..partial };
        return Ok(ExpectedRecords { value, terms, class: SeriesClass::Convergent, horizon, gamma_at_least_half });
    }
    let c: Vec<f64> = terms.iter().enumerate().map(|(i, t)| (i + 2) as f64 * t.value).collect();
    let mid = c.len() / 2;
    let slack = |i: usize| (i + 2) as f64 * terms[i].abs_error;
    let harmonic = c.len() >= 4 && (mid..c.len()).all(|i| c[i] + slack(i) >= c[mid] - slack(mid));
    if gamma_at_least_half || harmonic {
        return Ok(ExpectedRecords { value: partial, terms, class: SeriesClass::Divergent, horizon, gamma_at_least_half });
    }
    let v: Vec<f64> = terms.iter().map(|t| t.value).collect();
    if v.len() >= 6 {
        let ratios: Vec<f64> = v.windows(2).rev().take(5).map(|w| w[1] / w[0]).collect();
        if ratios.iter().all(|r| *r >= 0.0 && *r <= 0.9) {
            let r = ratios.iter().copied().fold(0.0, f64::max);
            let tail = v[v.len() - 1] * r / (1.0 - r);
            let value = Estimate { value: partial.value + tail, abs_error: partial.abs_error + tail, ..partial };
            return Ok(ExpectedRecords { value, terms, class: SeriesClass::Convergent, horizon, gamma_at_least_half });
        }
    }
    Ok(ExpectedRecords { value: partial, terms, class: SeriesClass::Inconclusive, horizon, gamma_at_least_half })
}

fn check_pair(j: usize, n: usize, min_j: usize) -> Result<()> {
    if j < min_j || j >= n {
        return Err(Error::InvalidTimes(format!("need {min_j} <= j < n, got j={j}, n={n}")));
    }
    Ok(())
}

/// Conditioning on `X_j` only, everything in `others` below it, plus optional constraints.
fn cons_construction(r: &CorrMatrix, j: usize, others: &[usize], extra: Option<(usize, Constraint)>) -> Result<GammaConstruction> {
    let mut comp: Vec<usize> = others.to_vec();
    let mut cons = below_all(comp.len());
    if let Some((c, k)) = extra {
        comp.push(c);
        cons.push(k);
    }
    GammaConstruction::build(r, &[j], &comp, &cons)
}

/// `P(R_j = 1, R_n = 1, no record strictly between)
///  = Φ_{n−2}(0; Γ_{1:n−1∖j}) − Φ_{n−1}(0; Γ_{1:n∖j})`.
pub fn consecutive_joint_record_prob(model: &CorrelationModel, j: usize, n: usize, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, 1)?;
    let r = model.matrix(n)?;
    let before: Vec<usize> = (0..n - 1).filter(|&c| c != j - 1).collect();
    let all: Vec<usize> = (0..n).filter(|&c| c != j - 1).collect();
    let nm = num.child(&[TAG_CONS, j as u64, n as u64]);
    let a = if before.is_empty() { Estimate::exact(1.0) } else { cons_construction(&r, j - 1, &before, None)?.latent_prob(&nm.child(&[0]))? };
    let b = cons_construction(&r, j - 1, &all, None)?.latent_prob(&nm.child(&[1]))?;
    Ok((a - b).clamp_unit())
}

/// `P(X_j ≤ x1, X_n ≤ x2 | consecutive records at j and n)`, as `(A − B)/P` with
/// `A = P(others < X_j ≤ x1, X_n ≤ x2)` and `B = P(others < X_j ≤ x1, X_n < X_j)`;
/// for `x1 > x2` the value at `(x2, x2)`.
pub fn consecutive_joint_record_cdf(model: &CorrelationModel, j: usize, n: usize, x1: f64, x2: f64, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, 1)?;
    let x1 = x1.min(x2);
    if x1 == NEG_INF {
        return Ok(Estimate::exact(0.0));
    }
    let p = consecutive_joint_record_prob(model, j, n, num)?;
    if x1 == INF {
        return Ok(Estimate::exact(1.0));
    }
    let fine = num.for_ratio(n, p.value);
    let p = consecutive_joint_record_prob(model, j, n, &fine)?;
    let r = model.matrix(n)?;
    let before: Vec<usize> = (0..n - 1).filter(|&c| c != j - 1).collect();
    let all: Vec<usize> = (0..n).filter(|&c| c != j - 1).collect();
    let nm = fine.child(&[TAG_CONS, j as u64, n as u64, x1.to_bits(), x2.to_bits()]);
    let one = DMatrix::identity(1, 1);
    let a = cons_construction(&r, j - 1, &before, Some((n - 1, Constraint::level(x2))))?.mass(&one, &[NEG_INF], &[x1], &nm.child(&[2]))?;
    let b = cons_construction(&r, j - 1, &all, None)?.mass(&one, &[NEG_INF], &[x1], &nm.child(&[3]))?;
    Ok((a - b).ratio(p).clamp_unit())
}

fn joint_construction(model: &CorrelationModel, j: usize, n: usize) -> Result<GammaConstruction> {
    let r = model.matrix(n)?;
    let comp: Vec<usize> = (0..n - 1).filter(|&c| c != j - 1).collect();
    let cons: Vec<Constraint> = comp.iter().map(|&c| Constraint::below(if c < j - 1 { 0 } else { 1 })).collect();
    GammaConstruction::build(&r, &[j - 1, n - 1], &comp, &cons)
}

fn joint_prob_with(g: &GammaConstruction, num: &Numerics) -> Result<Estimate> {
    g.mass(&DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), &[NEG_INF], &[0.0], num)
}

/// `P(R_j = 1, R_n = 1)`: the CSN mass of `{z_j < z_n}` with `I = {j, n}`.
pub fn joint_record_prob(model: &CorrelationModel, j: usize, n: usize, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, 2)?;
    let g = joint_construction(model, j, n)?;
    Ok(joint_prob_with(&g, &num.child(&[TAG_JOINT, j as u64, n as u64]))?.clamp_unit())
}

/// Numerator of the joint CDF for `a = min(x1, x2)`:
/// mass of `{z_j − z_n < 0, z_n ≤ a}` plus mass of `{z_j ≤ a < z_n ≤ x2}`.
pub(crate) fn joint_cdf_mass(g: &GammaConstruction, x1: f64, x2: f64, num: &Numerics) -> Result<Estimate> {
    let a = x1.min(x2);
    if a == NEG_INF {
        return Ok(Estimate::exact(0.0));
    }
    let d = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
    let mut m = g.mass(&d, &[NEG_INF, NEG_INF], &[0.0, a], &num.child(&[0]))?;
    if a < x2 {
        m = m + g.mass(&DMatrix::identity(2, 2), &[NEG_INF, a], &[a, x2], &num.child(&[1]))?;
    }
    Ok(m)
}

/// `P(X_j ≤ x1, X_n ≤ x2 | R_j = R_n = 1)`; for `x1 > x2` this equals the value at `(x2, x2)`.
pub fn joint_record_cdf(model: &CorrelationModel, j: usize, n: usize, x1: f64, x2: f64, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, 2)?;
    if x1.min(x2) == INF {
        return Ok(Estimate::exact(1.0));
    }
    let g = joint_construction(model, j, n)?;
    let p = joint_prob_with(&g, &num.child(&[TAG_JOINT, j as u64, n as u64]))?;
    let fine = num.for_ratio(n, p.value);
    let p = joint_prob_with(&g, &fine.child(&[TAG_JOINT, j as u64, n as u64]))?;
    let m = joint_cdf_mass(&g, x1, x2, &fine.child(&[TAG_JOINT, j as u64, n as u64, x1.to_bits(), x2.to_bits()]))?;
    Ok(m.ratio(p).clamp_unit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Marginal {
    AtJ,
    AtN,
}

/// Marginal CDF of `X_j` or `X_n` given that both are records.
pub fn joint_record_marginals(model: &CorrelationModel, j: usize, n: usize, x: f64, which: Marginal, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, 2)?;
    match which {
        Marginal::AtJ => joint_record_cdf(model, j, n, x, INF, num),
        Marginal::AtN => {
            if x == INF {
                return Ok(Estimate::exact(1.0));
            }
            let g = joint_construction(model, j, n)?;
            let p = joint_prob_with(&g, &num.child(&[TAG_JOINT, j as u64, n as u64]))?;
            let fine = num.for_ratio(n, p.value);
            let p = joint_prob_with(&g, &fine.child(&[TAG_JOINT, j as u64, n as u64]))?;
            let d = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]);
            let m = g.mass(&d, &[NEG_INF, NEG_INF], &[0.0, x], &fine.child(&[TAG_JOINT, j as u64, n as u64, x.to_bits(), 1]))?;
            Ok(m.ratio(p).clamp_unit())
        }
    }
}
