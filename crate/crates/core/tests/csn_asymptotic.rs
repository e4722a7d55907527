//! Closed skew-normal laws against Owen's T and sampling; asymptotic limits
//! against exact finite-n values and simulation.

use nalgebra::DMatrix;
use recordlab::asymptotic::*;
use recordlab::normal;
use recordlab::quadrature::gauss_legendre;
use recordlab::records::*;
use recordlab::simulate::{simulate_chernick, Process};
use recordlab::{CorrMatrix, CsnParams, Numerics, SimStudy};
use std::collections::BTreeMap;

fn num() -> Numerics {
    Numerics::with_seed(5).with_tol(1e-6)
}

/// Owen's `T(h, a) = (1/2π) ∫_0^a exp(−h²(1+t²)/2)/(1+t²) dt`.
fn owens_t(h: f64, a: f64) -> f64 {
    let (x, w) = gauss_legendre(64);
    let half = 0.5 * a;
    x.iter()
        .zip(&w)
        .map(|(t, w)| {
            let u = half * (t + 1.0);
            half * w * (-0.5 * h * h * (1.0 + u * u)).exp() / (1.0 + u * u)
        })
        .sum::<f64>()
        / (2.0 * std::f64::consts::PI)
}

fn skew_normal(shape: f64) -> CsnParams {
    CsnParams::standard(DMatrix::from_element(1, 1, shape), CorrMatrix::identity(1)).unwrap()
}

#[test]
fn skew_normal_cdf_matches_owens_t() {
    for shape in [-3.0, 0.7, 2.5] {
        let sn = skew_normal(shape);
        for x in [-1.2, 0.0, 0.4, 2.0] {
            let c = sn.cdf(&[x], &num()).unwrap();
            let exact = normal::cdf(x) - 2.0 * owens_t(x, shape);
            assert!((c.value - exact).abs() <= c.abs_error + 1e-7, "shape {shape}, x {x}: {} vs {exact}", c.value);
        }
    }
}

#[test]
fn affine_marginal_agrees_with_direct_rectangle() {
    let omega = CorrMatrix::from_rows(&[vec![1.0, 0.4], vec![0.4, 1.0]]).unwrap();
    let delta = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, 0.3, 0.8]);
    let sigma = CorrMatrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 1.0]]).unwrap();
    let law = CsnParams::new(vec![0.1, -0.2], omega, delta, vec![0.0, 0.3], sigma).unwrap();
    let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
    let marginal = law.affine(&a, &[0.5]).unwrap();
    for x in [-1.0, 0.5, 1.7] {
        let via_params = marginal.cdf(&[x], &num()).unwrap();
        let direct = law.prob_rect(&a, &[f64::NEG_INFINITY], &[x - 0.5], &num()).unwrap();
        assert!((via_params.value - direct.value).abs() <= via_params.abs_error + direct.abs_error + 1e-7);
    }
}

#[test]
fn sampler_reproduces_the_cdf() {
    let omega = CorrMatrix::from_rows(&[vec![1.0, -0.3], vec![-0.3, 1.0]]).unwrap();
    let delta = DMatrix::from_row_slice(1, 2, &[2.0, 1.0]);
    let law = CsnParams::new(vec![0.0, 0.0], omega, delta, vec![0.5], CorrMatrix::identity(1)).unwrap();
    let paths = 200_000;
    let (s, acc) = law.sample(paths, 17).unwrap();
    let p = law.normalizer(&num()).unwrap().value;
    // acceptance rate estimates the normalizer
    assert!((acc - p).abs() < 0.01, "{acc} vs {p}");
    for x in [[-0.2, 0.3], [0.8, 0.8], [1.5, -0.5]] {
        let hits = (0..paths).filter(|&i| s[(i, 0)] <= x[0] && s[(i, 1)] <= x[1]).count() as f64 / paths as f64;
        let c = law.cdf(&x, &num()).unwrap();
        let se = (c.value * (1.0 - c.value) / paths as f64).sqrt();
        assert!((hits - c.value).abs() <= 4.0 * se + c.abs_error, "{x:?}: {hits} vs {}", c.value);
    }
}

#[test]
fn pdf_integrates_to_cdf_increments() {
    let sn = skew_normal(1.8);
    let (a, b) = (-0.7, 1.3);
    let (x, w) = gauss_legendre(48);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    let integral: f64 = x.iter().zip(&w).map(|(t, w)| h * w * sn.pdf(&[c + h * t], &num()).unwrap().value).sum();
    let diff = sn.cdf(&[b], &num()).unwrap().value - sn.cdf(&[a], &num()).unwrap().value;
    assert!((integral - diff).abs() < 1e-6, "{integral} vs {diff}");
}

#[test]
fn gaussian_maximum_approaches_gumbel() {
    // Φ(a_n x + b_n)^n → exp(−e^{−x}) at rate 1/log n
    let spec = GevSpec::gumbel();
    let errs: Vec<f64> = [1e3, 1e6, 1e12]
        .iter()
        .map(|&n| {
            let (a, b) = spec.norming(n as u64).unwrap();
            [-1.0, 0.0, 1.5].iter().map(|&x| ((n * normal::cdf(a * x + b).ln()).exp() - gev_cdf(x, &spec, 1.0).unwrap()).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 0.02, "{errs:?}");
}

#[test]
fn chernick_maximum_matches_theta_power() {
    let (m, n, total) = (3u32, 2000, 20_000);
    let theta = chernick_theta(m).unwrap();
    let spec = theta.limit.unwrap();
    let study = SimStudy::new(Process::Chernick { m }, n, total, 8).unwrap();
    let mut maxima = Vec::with_capacity(total);
    for start in (0..total).step_by(2000) {
        maxima.extend(study.paths(start..start + 2000).unwrap().iter().map(|p| p.iter().copied().fold(f64::NEG_INFINITY, f64::max)));
    }
    let (a, b) = spec.norming(n as u64).unwrap();
    for x in [-3.0, -1.0, -0.3] {
        let level = a * x + b;
        let hits = maxima.iter().filter(|&&v| v <= level).count() as f64 / total as f64;
        let exact = gev_cdf(x, &spec, theta.theta).unwrap();
        let se = (exact * (1.0 - exact) / total as f64).sqrt();
        assert!((hits - exact).abs() < 4.0 * se + 2e-3, "x={x}: {hits} vs {exact}");
    }
}

#[test]
fn chernick_record_rate_approaches_the_limit() {
    let (m, n) = (2u32, 1000);
    let stats = simulate_chernick(m, n, 5000, 4).unwrap();
    let (pooled, se) = stats.pooled_scaled_rate.unwrap();
    let limit = 1.0 / chernick_theta(m).unwrap().theta;
    assert!((pooled - limit).abs() < 4.0 * se + 0.05, "{pooled} ± {se} vs {limit}");
}

#[test]
fn hsing_index_is_one_without_finite_lags_and_drops_with_dependence() {
    let none: BTreeMap<usize, f64> = [(1, f64::INFINITY)].into();
    assert_eq!(hsing_theta(&none, &num()).unwrap().theta, 1.0);
    let weak: BTreeMap<usize, f64> = [(1, 4.0)].into();
    let strong: BTreeMap<usize, f64> = [(1, 0.5)].into();
    let tw = hsing_theta(&weak, &num()).unwrap().theta;
    let ts = hsing_theta(&strong, &num()).unwrap().theta;
    assert!(0.0 < ts && ts < tw && tw < 1.0, "{ts} {tw}");
    // one finite lag: E Φ(√δ − U/(2√δ)) integrates in closed form to 2Φ(√δ) − 1
    let closed = 2.0 * normal::cdf(2.0) - 1.0;
    assert!((tw - closed).abs() < 1e-6, "{tw} vs {closed}");
    let closed = 2.0 * normal::cdf(0.5f64.sqrt()) - 1.0;
    assert!((ts - closed).abs() < 1e-6, "{ts} vs {closed}");
}

#[test]
fn asymptotic_record_probability_tracks_exact_iid_values() {
    for n in [10u64, 20] {
        let exact = record_probability(&CorrelationModel::iid(), n as usize, &Numerics::with_seed(1).with_tol(1e-5)).unwrap().probability;
        let approx = asymptotic_record_prob(1.0, n).unwrap().0;
        assert!((exact.value - approx).abs() <= exact.abs_error + 1e-6);
    }
}
