//! Complete records of stationary d-dimensional Gaussian sequences.
//!
//! `X_n` is a complete record when every coordinate exceeds all earlier values of
//! that coordinate. Vectors of `(X_1, …, X_n)` are stacked component-major: all
//! times of coordinate 1, then all times of coordinate 2, and so on
//! (see [`stack_index`]).

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CorrMatrix};
use crate::numerics::{Estimate, Numerics};
use crate::records::gamma::{Constraint, GammaConstruction};
use crate::records::law::{LawMeta, RecordLaw};
use crate::records::model::{CorrelationModel, DEFAULT_HORIZON};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest dimension accepted by [`joint_complete_record_cdf`].
pub const MAX_SUBSET_DIM: usize = 4;

const TAG_COMPLETE: u64 = 21;
const TAG_COMPLETE_CDF: u64 = 22;
const TAG_JOINT_COMPLETE: u64 = 23;

/// Position of coordinate `component` at 0-based `time` in a stacked vector of `n` times.
pub fn stack_index(component: usize, time: usize, n: usize) -> usize {
    component * n + time
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockRule {
    /// `Cov(X_s^a, X_t^b) = ρ(|s−t|) C_ab`.
    Separable { temporal: CorrelationModel, cross: CorrMatrix },
    /// Independent coordinates, each with its own autocorrelation.
    Independent { components: Vec<CorrelationModel> },
    /// `Cov(X_s, X_{s+h}) = B_h` for `h ≤ H`, zero beyond; `B_0` is the lag-0 correlation.
    Tabulated { blocks: Vec<DMatrix<f64>> },
}

/// Stationary cross-correlation of a d-dimensional sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelationModel {
    pub d: usize,
    pub rule: BlockRule,
    pub horizon: usize,
}

impl CrossCorrelationModel {
    pub fn separable(temporal: CorrelationModel, cross: CorrMatrix) -> Result<Self> {
        if !cross.is_correlation() {
            return Err(Error::InvalidArgument("cross-correlation needs unit diagonal".into()));
        }
        cholesky(&cross)?;
        if !temporal.is_stationary() {
            return Err(Error::Model("separable models need a stationary temporal part".into()));
        }
        let horizon = temporal.horizon;
        Ok(Self { d: cross.dim(), rule: BlockRule::Separable { temporal, cross }, horizon })
    }

    pub fn independent(components: Vec<CorrelationModel>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("at least one component is needed".into()));
        }
        if components.iter().any(|c| !c.is_stationary()) {
            return Err(Error::Model("independent models need stationary components".into()));
        }
        let horizon = components.iter().map(|c| c.horizon).min().unwrap();
        Ok(Self { d: components.len(), rule: BlockRule::Independent { components }, horizon })
    }

    /// One-dimensional model wrapping a univariate autocorrelation.
    pub fn univariate(model: CorrelationModel) -> Result<Self> {
        Self::independent(vec![model])
    }

    pub fn tabulated(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let b0 = blocks.first().ok_or_else(|| Error::InvalidArgument("the lag-0 block is required".into()))?;
        let d = b0.nrows();
        if blocks.iter().any(|b| b.nrows() != d || b.ncols() != d) {
            return Err(Error::DimensionMismatch(format!("all blocks must be {d}x{d}")));
        }
        let lag0 = CorrMatrix::correlation(b0.clone())?;
        cholesky(&lag0)?;
        Ok(Self { d, rule: BlockRule::Tabulated { blocks }, horizon: DEFAULT_HORIZON })
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    /// `Cov(X_s, X_{s+h})` as a d×d block.
    pub fn block(&self, h: usize) -> DMatrix<f64> {
        let d = self.d;
        match &self.rule {
            BlockRule::Separable { temporal, cross } => cross.matrix() * temporal.rho(h).unwrap_or(0.0),
            BlockRule::Independent { components } => DMatrix::from_fn(d, d, |a, b| if a == b { components[a].rho(h).unwrap_or(0.0) } else { 0.0 }),
            BlockRule::Tabulated { blocks } => blocks.get(h).cloned().unwrap_or_else(|| DMatrix::zeros(d, d)),
        }
    }

    /// Correlation of the component-major stack of `(X_1, …, X_n)`, validated PD.
    pub fn matrix(&self, n: usize) -> Result<CorrMatrix> {
        if n == 0 || n > self.horizon {
            return Err(Error::Model(format!("size {n} outside 1..={}", self.horizon)));
        }
        let d = self.d;
        let blocks: Vec<DMatrix<f64>> = (0..n).map(|h| self.block(h)).collect();
        let mut m = DMatrix::zeros(n * d, n * d);
        for s in 0..n {
            for t in 0..n {
                let b = &blocks[s.abs_diff(t)];
                for a in 0..d {
                    for c in 0..d {
                        // Cov(X_s^a, X_t^c) = B_{t−s}[a, c] for s ≤ t
                        let v = if s <= t { b[(a, c)] } else { b[(c, a)] };
                        m[(stack_index(a, s, n), stack_index(c, t, n))] = v;
                    }
                }
            }
        }
        let m = CorrMatrix::new(m)?;
        cholesky(&m)?;
        Ok(m)
    }

    pub fn label(&self) -> String {
        match &self.rule {
            BlockRule::Separable { temporal, .. } => format!("separable(d={}, {})", self.d, temporal.label()),
            BlockRule::Independent { .. } => format!("independent(d={})", self.d),
            BlockRule::Tabulated { blocks } => format!("tabulated(d={}, {} lags)", self.d, blocks.len() - 1),
        }
    }
}

fn check_cap(dim: usize, num: &Numerics) -> Result<()> {
    if dim > num.max_dim {
        return Err(Error::DimensionCap { dim, cap: num.max_dim });
    }
    Ok(())
}

/// Conditioning on `X_n`; each earlier coordinate is compared with its own coordinate at `n`.
fn complete_construction(model: &CrossCorrelationModel, n: usize) -> Result<GammaConstruction> {
    let d = model.d;
    let r = model.matrix(n)?;
    let cond: Vec<usize> = (0..d).map(|a| stack_index(a, n - 1, n)).collect();
    let mut comp = Vec::with_capacity(d * (n - 1));
    let mut cons = Vec::with_capacity(d * (n - 1));
    for a in 0..d {
        for t in 0..n - 1 {
            comp.push(stack_index(a, t, n));
            cons.push(Constraint::below(a));
        }
    }
    GammaConstruction::build(&r, &cond, &comp, &cons)
}

/// `P(X_n is a complete record) = Φ_{(n−1)d}(0; Γ)`.
pub fn complete_record_probability(model: &CrossCorrelationModel, n: usize, num: &Numerics) -> Result<RecordLaw> {
    if n == 0 {
        return Err(Error::InvalidTimes("time indices start at 1".into()));
    }
    if n == 1 {
        return Ok(RecordLaw { probability: Estimate::exact(1.0), cdf: vec![], meta: LawMeta { dims: vec![], seed: num.seed, tol: 0.0 } });
    }
    let dim = (n - 1) * model.d;
    check_cap(dim, num)?;
    let g = complete_construction(model, n)?;
    let probability = g.latent_prob(&num.child(&[TAG_COMPLETE, n as u64]))?;
    Ok(RecordLaw { probability, cdf: vec![], meta: LawMeta { dims: vec![dim], seed: num.seed, tol: num.tol_for(dim) } })
}

fn check_point(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d || x.iter().any(|v| v.is_nan()) {
        return Err(Error::DimensionMismatch(format!("point needs {d} non-NaN coordinates, got {x:?}")));
    }
    Ok(())
}

/// `P(X_n ≤ x | X_n is a complete record)`.
pub fn complete_record_cdf(model: &CrossCorrelationModel, n: usize, x: &[f64], num: &Numerics) -> Result<Estimate> {
    let d = model.d;
    check_point(x, d)?;
    if x.contains(&f64::NEG_INFINITY) {
        return Ok(Estimate::exact(0.0));
    }
    if x.iter().all(|&v| v == f64::INFINITY) {
        return Ok(Estimate::exact(1.0));
    }
    if n == 1 {
        let r = model.matrix(1)?;
        let p = crate::mvn::MvnProblem::orthant(x.to_vec(), r)?;
        return Ok(crate::mvn::mvn_cdf_with(&p, num)?.estimate());
    }
    check_cap(n * d, num)?;
    let p = complete_record_probability(model, n, num)?.probability;
    let fine = num.for_ratio(n * d, p.value);
    let p = complete_record_probability(model, n, &fine)?.probability;
    let g = complete_construction(model, n)?;
    let mut labels = vec![TAG_COMPLETE_CDF, n as u64];
    labels.extend(x.iter().map(|v| v.to_bits()));
    let m = g.mass(&DMatrix::identity(d, d), &vec![f64::NEG_INFINITY; d], x, &fine.child(&labels))?;
    Ok(m.ratio(p).clamp_unit())
}

/// Conditioning on `(X_j, X_n)` (`z_j` first, then `z_n`); earlier values are
/// compared with `X_j`, those strictly between with `X_n`.
fn joint_construction(model: &CrossCorrelationModel, j: usize, n: usize) -> Result<GammaConstruction> {
    let d = model.d;
    let r = model.matrix(n)?;
    let cond: Vec<usize> = (0..d).map(|a| stack_index(a, j - 1, n)).chain((0..d).map(|a| stack_index(a, n - 1, n))).collect();
    let mut comp = Vec::new();
    let mut cons = Vec::new();
    for a in 0..d {
        for t in (0..n - 1).filter(|&t| t != j - 1) {
            comp.push(stack_index(a, t, n));
            cons.push(Constraint::below(if t < j - 1 { a } else { d + a }));
        }
    }
    GammaConstruction::build(&r, &cond, &comp, &cons)
}

fn check_pair(j: usize, n: usize, d: usize, num: &Numerics) -> Result<()> {
    if j < 2 || j >= n {
        return Err(Error::InvalidTimes(format!("need 2 <= j < n, got j={j}, n={n}")));
    }
    check_cap(d * n, num)
}

/// `[I_d  −I_d]`: rows `z_j^a − z_n^a`.
fn difference_rows(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, 2 * d, |a, c| {
        if c == a {
            1.0
        } else if c == d + a {
            -1.0
        } else {
            0.0
        }
    })
}

fn joint_prob_with(g: &GammaConstruction, d: usize, num: &Numerics) -> Result<Estimate> {
    g.mass(&difference_rows(d), &vec![f64::NEG_INFINITY; d], &vec![0.0; d], num)
}

/// `P(X_j and X_n are complete records)`.
pub fn joint_complete_record_prob(model: &CrossCorrelationModel, j: usize, n: usize, num: &Numerics) -> Result<Estimate> {
    check_pair(j, n, model.d, num)?;
    let g = joint_construction(model, j, n)?;
    Ok(joint_prob_with(&g, model.d, &num.child(&[TAG_JOINT_COMPLETE, j as u64, n as u64]))?.clamp_unit())
}

/// `P(X_j ≤ x1, X_n ≤ x2 | both complete records)`.
///
/// Per coordinate the event `{z_j < z_n, z_j ≤ x1, z_n ≤ x2}` splits, with
/// `a = min(x1, x2)`, into `{z_j − z_n < 0, z_n ≤ a}` and `{z_j ≤ a < z_n ≤ x2}`;
/// each subset `J` of coordinates taking the first piece gives one rectangle term.
pub fn joint_complete_record_cdf(model: &CrossCorrelationModel, j: usize, n: usize, x1: &[f64], x2: &[f64], num: &Numerics) -> Result<Estimate> {
    let d = model.d;
    if d > MAX_SUBSET_DIM {
        return Err(Error::SubsetExplosion { d });
    }
    check_point(x1, d)?;
    check_point(x2, d)?;
    check_pair(j, n, d, num)?;
    let a: Vec<f64> = x1.iter().zip(x2).map(|(p, q)| p.min(*q)).collect();
    if a.contains(&f64::NEG_INFINITY) {
        return Ok(Estimate::exact(0.0));
    }
    // no shortcut at +∞: the subset sum then reduces to the normalizer on its own
    let g = joint_construction(model, j, n)?;
    let p = joint_prob_with(&g, d, &num.child(&[TAG_JOINT_COMPLETE, j as u64, n as u64]))?;
    let fine = num.for_ratio(n * d, p.value);
    let p = joint_prob_with(&g, d, &fine.child(&[TAG_JOINT_COMPLETE, j as u64, n as u64]))?;
    let mut labels = vec![TAG_JOINT_COMPLETE, j as u64, n as u64];
    labels.extend(a.iter().chain(x2).map(|v| v.to_bits()));
    let base = fine.child(&labels);
    let terms: Vec<Result<Estimate>> = (0..1u64 << d)
        .into_par_iter()
        .map(|mask| {
            let in_j = |c: usize| mask >> c & 1 == 1;
            if (0..d).any(|c| !in_j(c) && a[c] >= x2[c]) {
                return Ok(Estimate::exact(0.0));
            }
            let mut m = DMatrix::zeros(2 * d, 2 * d);
            let mut lo = vec![f64::NEG_INFINITY; 2 * d];
            let mut hi = vec![0.0; 2 * d];
            for c in 0..d {
                let (r1, r2) = (2 * c, 2 * c + 1);
                if in_j(c) {
                    m[(r1, c)] = 1.0;
                    m[(r1, d + c)] = -1.0;
                    m[(r2, d + c)] = 1.0;
                    hi[r2] = a[c];
                } else {
                    m[(r1, c)] = 1.0;
                    hi[r1] = a[c];
                    m[(r2, d + c)] = 1.0;
                    lo[r2] = a[c];
                    hi[r2] = x2[c];
                }
            }
            g.mass(&m, &lo, &hi, &base.child(&[mask]))
        })
        .collect();
    let mut total = Estimate::exact(0.0);
    for t in terms {
        total = total + t?;
    }
    Ok(total.ratio(p).clamp_unit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corr2(r: f64) -> CorrMatrix {
        CorrMatrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap()
    }

    #[test]
    fn stacking_is_component_major() {
        let m = CrossCorrelationModel::separable(CorrelationModel::ar1(0.5).unwrap(), corr2(0.3)).unwrap();
        let r = m.matrix(3).unwrap();
        // coordinate 0 at times 0 and 2
        assert!((r.get(stack_index(0, 0, 3), stack_index(0, 2, 3)) - 0.25).abs() < 1e-15);
        // coordinate 0 at time 1 against coordinate 1 at time 2
        assert!((r.get(stack_index(0, 1, 3), stack_index(1, 2, 3)) - 0.15).abs() < 1e-15);
        assert_eq!(stack_index(1, 0, 3), 3);
    }

    #[test]
    fn tabulated_blocks_are_transposed_backwards() {
        let b0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]);
        let b1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.05, 0.4]);
        let m = CrossCorrelationModel::tabulated(vec![b0, b1]).unwrap();
        let r = m.matrix(2).unwrap();
        // Cov(X_1^0, X_2^1) = B_1[0,1], Cov(X_2^0, X_1^1) = B_1[1,0]
        assert_eq!(r.get(stack_index(0, 0, 2), stack_index(1, 1, 2)), 0.1);
        assert_eq!(r.get(stack_index(0, 1, 2), stack_index(1, 0, 2)), -0.05);
    }

    #[test]
    fn independent_probability_is_power() {
        let m = CrossCorrelationModel::independent(vec![CorrelationModel::iid(), CorrelationModel::iid()]).unwrap();
        let p = complete_record_probability(&m, 3, &Numerics::default()).unwrap().probability;
        assert!((p.value - 1.0 / 9.0).abs() < 1e-5);
        let c = complete_record_cdf(&m, 2, &[0.0, 0.0], &Numerics::default()).unwrap();
        assert!((c.value - 1.0 / 16.0).abs() < 1e-5);
        let j = joint_complete_record_prob(&m, 2, 3, &Numerics::default()).unwrap();
        assert!((j.value - 1.0 / 36.0).abs() < 1e-5);
    }

    #[test]
    fn subset_cap() {
        let comps = vec![CorrelationModel::iid(); 5];
        let m = CrossCorrelationModel::independent(comps).unwrap();
        let x = vec![0.0; 5];
        assert_eq!(joint_complete_record_cdf(&m, 2, 3, &x, &x, &Numerics::default()), Err(Error::SubsetExplosion { d: 5 }));
    }
}
