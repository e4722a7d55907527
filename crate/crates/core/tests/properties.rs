//! Invariants checked over random inputs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use recordlab::asymptotic::*;
use recordlab::mvn::bvn::bvnu;
use recordlab::mvn::{mvn_cdf, MvnProblem};
use recordlab::normal;
use recordlab::records::*;
use recordlab::simulate::{complete_record_indicators, read_raw_dump, record_indicators, write_raw_dump, MarginTransform};
use recordlab::{CorrMatrix, Numerics};

fn num(seed: u64) -> Numerics {
    Numerics::with_seed(seed).with_tol(1e-5)
}

fn close(a: recordlab::Estimate, b: f64, slack: f64) -> bool {
    (a.value - b).abs() <= a.abs_error + slack
}

/// Random correlation matrix `D^{-1/2} B Bᵀ D^{-1/2}` with a ridge.
fn corr(dim: usize) -> impl Strategy<Value = CorrMatrix> {
    prop::collection::vec(-1.0f64..1.0, dim * dim).prop_map(move |v| {
        let b = DMatrix::from_vec(dim, dim, v);
        let s = &b * b.transpose() + DMatrix::identity(dim, dim) * 0.2;
        let d: Vec<f64> = (0..dim).map(|i| s[(i, i)].sqrt()).collect();
        CorrMatrix::new(DMatrix::from_fn(dim, dim, |i, j| s[(i, j)] / (d[i] * d[j]))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn two_point_record_probability_is_one_half(phi in -0.95f64..0.95) {
        let p = record_probability(&CorrelationModel::ar1(phi).unwrap(), 2, &num(1)).unwrap().probability;
        prop_assert!(close(p, 0.5, 1e-6), "{}", p.value);
    }

    // nonnegative equicorrelation leaves the ranks exchangeable
    #[test]
    fn equicorrelated_ranks_match_iid(rho in 0.0f64..0.9, n in 3usize..7) {
        let m = CorrelationModel::equicorrelated(rho).unwrap();
        let p = record_probability(&m, n, &num(2)).unwrap().probability;
        prop_assert!(close(p, 1.0 / n as f64, 2e-5), "{}", p.value);
        let j = joint_record_prob(&m, 2, n, &num(3)).unwrap();
        prop_assert!(close(j, 1.0 / (2 * n) as f64, 2e-5), "{}", j.value);
    }

    #[test]
    fn record_value_cdf_is_monotone_within_unit_interval(phi in -0.8f64..0.8, n in 2usize..6, xs in prop::collection::vec(-2.5f64..2.5, 3)) {
        let mut xs = xs;
        xs.sort_by(f64::total_cmp);
        let law = record_value_cdf_points(&CorrelationModel::ar1(phi).unwrap(), n, &xs, &num(4)).unwrap();
        let mut prev = 0.0;
        for c in &law.cdf {
            prop_assert!((0.0..=1.0).contains(&c.value.value));
            prop_assert!(c.value.value + c.value.abs_error + 1e-6 >= prev, "{:?}", law.cdf);
            prev = c.value.value;
        }
    }

    #[test]
    fn joint_probability_is_below_each_marginal(phi in -0.8f64..0.8, j in 2usize..4, gap in 1usize..3) {
        let m = CorrelationModel::ar1(phi).unwrap();
        let n = j + gap;
        let both = joint_record_prob(&m, j, n, &num(5)).unwrap();
        for k in [j, n] {
            let single = record_probability(&m, k, &num(6)).unwrap().probability;
            prop_assert!(both.value <= single.value + both.abs_error + single.abs_error + 1e-7);
        }
    }

    #[test]
    fn mvn_probability_is_invariant_under_permutation(r in corr(4), hi in prop::collection::vec(-1.5f64..1.5, 4)) {
        let p = MvnProblem::orthant(hi.clone(), r.clone()).unwrap();
        let a = mvn_cdf(&p, 1e-6, 9).unwrap();
        let perm = [2usize, 0, 3, 1];
        let rp = CorrMatrix::new(DMatrix::from_fn(4, 4, |i, j| r.get(perm[i], perm[j]))).unwrap();
        let hp: Vec<f64> = perm.iter().map(|&i| hi[i]).collect();
        let b = mvn_cdf(&MvnProblem::orthant(hp, rp).unwrap(), 1e-6, 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.value));
        prop_assert!((a.value - b.value).abs() <= a.abs_error + b.abs_error + 1e-9, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn mvn_probability_grows_with_the_upper_limit(r in corr(3), hi in prop::collection::vec(-1.5f64..1.5, 3), bump in 0.05f64..1.0) {
        let a = mvn_cdf(&MvnProblem::orthant(hi.clone(), r.clone()).unwrap(), 1e-6, 1).unwrap();
        let mut h2 = hi;
        h2[1] += bump;
        let b = mvn_cdf(&MvnProblem::orthant(h2, r).unwrap(), 1e-6, 1).unwrap();
        prop_assert!(b.value + b.abs_error + a.abs_error >= a.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bivariate_upper_orthant_symmetries(h in -4.0f64..4.0, k in -4.0f64..4.0, r in -0.99f64..0.99) {
        prop_assert!((bvnu(h, k, r) - bvnu(k, h, r)).abs() < 1e-13);
        // P(X > h, Y > k) + P(X > h, Y ≤ k) = P(X > h)
        let total = bvnu(h, k, r) + bvnu(h, -k, -r);
        prop_assert!((total - normal::cdf(-h)).abs() < 1e-12, "{total}");
        let v = bvnu(h, k, r);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn independent_bivariate_factorizes(h in -4.0f64..4.0, k in -4.0f64..4.0) {
        prop_assert!((bvnu(h, k, 0.0) - normal::cdf(-h) * normal::cdf(-k)).abs() < 1e-14);
    }

    #[test]
    fn normal_quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let x = normal::quantile(p);
        prop_assert!((normal::cdf(x) - p).abs() <= 1e-13 + 1e-9 * p.min(1.0 - p));
    }

    #[test]
    fn gev_cdf_is_a_distribution_function(x in -6.0f64..6.0, dx in 0.0f64..3.0, theta in 0.05f64..1.0, alpha in 0.3f64..3.0) {
        for spec in [GevSpec::gumbel(), GevSpec::frechet(alpha), GevSpec::neg_weibull(alpha)] {
            let a = gev_cdf(x, &spec, theta).unwrap();
            let b = gev_cdf(x + dx, &spec, theta).unwrap();
            prop_assert!((0.0..=1.0).contains(&a) && a <= b + 1e-15);
            prop_assert!(gev_pdf(x, &spec, theta).unwrap() >= 0.0);
            // θ-power: G^θ ≥ G
            prop_assert!(a + 1e-15 >= gev_cdf(x, &spec, 1.0).unwrap());
        }
    }

    #[test]
    fn asymptotic_record_probability_decreases(theta in 0.01f64..1.0, n in 1u64..1_000_000) {
        let a = asymptotic_record_prob(theta, n).unwrap().0;
        let b = asymptotic_record_prob(theta, n + 1).unwrap().0;
        prop_assert!(a <= 1.0 && b <= a);
    }

    #[test]
    fn record_indicators_ignore_increasing_maps(path in prop::collection::vec(-3.0f64..3.0, 1..60)) {
        let rec = record_indicators(&path);
        prop_assert!(rec[0]);
        let mut max = f64::NEG_INFINITY;
        for (x, r) in path.iter().zip(&rec) {
            prop_assert_eq!(*r, *x > max);
            max = max.max(*x);
        }
        for t in [MarginTransform::Exp, MarginTransform::Cube, MarginTransform::Sinh] {
            let mapped: Vec<f64> = path.iter().map(|x| t.apply(*x)).collect();
            prop_assert_eq!(&record_indicators(&mapped), &rec);
        }
        prop_assert_eq!(&complete_record_indicators(&path, 1, path.len()), &rec);
    }

    #[test]
    fn complete_records_need_every_component(a in prop::collection::vec(-3.0f64..3.0, 2..30), b in prop::collection::vec(-3.0f64..3.0, 30)) {
        let n = a.len();
        let stacked: Vec<f64> = a.iter().chain(&b[..n]).copied().collect();
        let both = complete_record_indicators(&stacked, 2, n);
        let (ra, rb) = (record_indicators(&a), record_indicators(&b[..n]));
        for t in 0..n {
            prop_assert_eq!(both[t], ra[t] && rb[t]);
        }
    }

    #[test]
    fn raw_dump_round_trips(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
        let m = DMatrix::from_fn(rows, cols, |i, j| (seed.wrapping_mul(31 + i as u64).wrapping_add(j as u64) as f64).sin());
        let mut buf = Vec::new();
        write_raw_dump(&mut buf, &m).unwrap();
        prop_assert_eq!(buf.len(), 28 + 8 * rows * cols);
        prop_assert_eq!(read_raw_dump(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn chernick_and_stable_indices(m in 2u32..50, c in prop::collection::vec(-2.0f64..2.0, 1..6), alpha in 0.2f64..2.0) {
        let t = chernick_theta(m).unwrap().theta;
        prop_assert!((t - (m - 1) as f64 / m as f64).abs() < 1e-15);
        prop_assume!(c.iter().any(|v| *v != 0.0));
        // symmetric noise: scaling the coefficients by s scales θ by s^α
        let a = stable_ma_theta(&c, alpha, 0.0).unwrap().theta;
        let scaled: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let b = stable_ma_theta(&scaled, alpha, 0.0).unwrap().theta;
        prop_assert!((b - 2f64.powf(alpha) * a).abs() <= 1e-12 * b.abs().max(1.0));
        prop_assert!(a >= 0.0);
    }
}
