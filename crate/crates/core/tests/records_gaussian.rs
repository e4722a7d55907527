//! Record laws against closed forms (iid) and against direct Gaussian
//! integrals over difference vectors in the original coordinates.

use nalgebra::DMatrix;
use recordlab::mvn::{mvn_cdf, MvnProblem};
use recordlab::normal;
use recordlab::quadrature::gauss_legendre;
use recordlab::records::*;
use recordlab::{CorrMatrix, Numerics};

const NI: f64 = f64::NEG_INFINITY;
const PI: f64 = f64::INFINITY;

fn num() -> Numerics {
    Numerics::with_seed(7).with_tol(1e-5)
}

/// `P(lo < L X ≤ hi)` for `X ~ N(0, R)`.
fn direct(r: &CorrMatrix, l: &DMatrix<f64>, lo: Vec<f64>, hi: Vec<f64>) -> f64 {
    let d = l.nrows();
    direct_shifted(r, l, vec![0.0; d], lo, hi)
}

/// `P(lo < L X ≤ hi)` for `X ~ N(0, R)` with `L X` shifted by `shift`.
fn direct_shifted(r: &CorrMatrix, l: &DMatrix<f64>, shift: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> f64 {
    let cov = CorrMatrix::new(l * r.matrix() * l.transpose()).unwrap();
    mvn_cdf(&MvnProblem::new(lo, hi, shift, cov).unwrap(), 1e-6, 99).unwrap().value
}

/// `∫_a^b f` by 48-point Gauss–Legendre.
fn integrate_on(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(48);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    x.iter().zip(&w).map(|(t, w)| h * w * f(c + h * t)).sum()
}

/// `P(rest, X_j ≤ x1, X_j < X_n ≤ x2)` by integrating over `X_n = y`; the
/// conditional law of the first `n − 1` values is `N(ρ y, R_11 − ρ ρᵀ)`, and
/// `rest` lists `(i, Some(j))` pairs meaning `X_i < X_j` or `(i, None)` meaning `X_i < X_n`.
fn condition_on_last(r: &CorrMatrix, j: usize, rest: &[(usize, Option<usize>)], x1: f64, x2: f64) -> f64 {
    let n = r.dim();
    let m = r.matrix();
    let rho = m.view((0, n - 1), (n - 1, 1)).into_owned();
    let s = CorrMatrix::new(m.view((0, 0), (n - 1, n - 1)) - &rho * rho.transpose()).unwrap();
    let mut pairs = rest.to_vec();
    pairs.push((j, None));
    let k = pairs.len();
    let l = rows(n - 1, &pairs.iter().map(|&(a, b)| (a, b)).collect::<Vec<_>>());
    let f = |y: f64| {
        let mean = &l * &rho * y;
        let hi: Vec<f64> = pairs
            .iter()
            .map(|&(a, b)| match b {
                Some(_) => 0.0,
                None if a == j => y.min(x1),
                None => y,
            })
            .collect();
        normal::pdf(y) * direct_shifted(&s, &l, mean.iter().copied().collect(), vec![NI; k], hi)
    };
    // the integrand has a kink at y = x1
    let (top, kink) = (x2.min(8.5), x1.min(x2).min(8.5));
    integrate_on(-8.5, kink, f) + if kink < top { integrate_on(kink, top, f) } else { 0.0 }
}

/// Rows `e_a − e_b`, or `e_a` when `b` is None.
fn rows(n: usize, pairs: &[(usize, Option<usize>)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(pairs.len(), n);
    for (k, &(a, b)) in pairs.iter().enumerate() {
        l[(k, a)] = 1.0;
        if let Some(b) = b {
            l[(k, b)] -= 1.0;
        }
    }
    l
}

#[test]
fn iid_record_probability_is_one_over_n() {
    let m = CorrelationModel::iid();
    for n in 1..=8 {
        let p = record_probability(&m, n, &num()).unwrap().probability;
        assert!((p.value - 1.0 / n as f64).abs() < 1e-5 + p.abs_error, "n={n}: {}", p.value);
    }
}

#[test]
fn iid_record_value_cdf_is_phi_power() {
    let m = CorrelationModel::iid();
    for &(n, x) in &[(3, 0.4), (5, 1.2), (6, -0.3)] {
        let law = record_value_cdf(&m, n, x, &num()).unwrap();
        let want = normal::cdf(x).powi(n as i32);
        assert!((law.cdf[0].value.value - want).abs() < 1e-4, "n={n} x={x}");
    }
    let law = record_value_cdf(&m, 4, PI, &num()).unwrap();
    assert_eq!(law.cdf[0].value.value, 1.0);
}

#[test]
fn iid_arrival_times_and_second_record_pmf() {
    let m = CorrelationModel::iid();
    let p = arrival_times_joint(&m, &[2, 3], &num()).unwrap();
    assert!((p.value - 1.0 / 6.0).abs() < 1e-6);
    let p = arrival_times_joint(&m, &[2, 4], &num()).unwrap();
    assert!((p.value - 1.0 / 12.0).abs() < 1e-5);
    assert_eq!(second_record_time_pmf(&m, 2, &num()).unwrap().value, 0.5);
    for n in 3..=7 {
        let p = second_record_time_pmf(&m, n, &num()).unwrap();
        assert!((p.value - 1.0 / (n * (n - 1)) as f64).abs() < 2e-5, "n={n}");
    }
}

#[test]
fn invalid_times_are_rejected() {
    let m = CorrelationModel::iid();
    assert!(matches!(arrival_times_joint(&m, &[3, 3], &num()), Err(recordlab::Error::InvalidTimes(_))));
    assert!(matches!(arrival_times_joint(&m, &[1], &num()), Err(recordlab::Error::InvalidTimes(_))));
    assert!(matches!(joint_record_prob(&m, 4, 4, &num()), Err(recordlab::Error::InvalidTimes(_))));
    assert!(matches!(consecutive_joint_record_prob(&m, 0, 4, &num()), Err(recordlab::Error::InvalidTimes(_))));
}

#[test]
fn iid_pair_laws() {
    let m = CorrelationModel::iid();
    let c = consecutive_joint_record_prob(&m, 2, 4, &num()).unwrap();
    assert!((c.value - 1.0 / 12.0).abs() < 1e-5);
    let j = joint_record_prob(&m, 3, 5, &num()).unwrap();
    assert!((j.value - 1.0 / 15.0).abs() < 1e-5);
    // X_n given both records is the maximum of n values
    let x = 0.7;
    let at_n = joint_record_marginals(&m, 3, 5, x, Marginal::AtN, &num()).unwrap();
    assert!((at_n.value - normal::cdf(x).powi(5)).abs() < 1e-4);
    // X_j: density φ(y)Φ(y)^{j−1}(1 − Φ(y)^{k+1})/(k+1), k = n − 1 − j, over P = 1/(jn)
    let (jj, n) = (3, 5);
    let k = (n - 1 - jj) as i32;
    let dens = |y: f64| normal::pdf(y) * normal::cdf(y).powi(jj as i32 - 1) * (1.0 - normal::cdf(y).powi(k + 1)) / (k + 1) as f64;
    let want = integrate_on(-9.0, x, dens) * (jj * n) as f64;
    let at_j = joint_record_marginals(&m, jj, n, x, Marginal::AtJ, &num()).unwrap();
    assert!((at_j.value - want).abs() < 2e-3, "{} vs {want}", at_j.value);
}

fn ar1() -> (CorrelationModel, f64) {
    (CorrelationModel::ar1(0.6).unwrap(), 0.6)
}

#[test]
fn record_probability_matches_difference_orthant() {
    let (m, _) = ar1();
    for n in [3usize, 6, 9] {
        let r = m.matrix(n).unwrap();
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, Some(n - 1))).collect();
        let want = direct(&r, &rows(n, &pairs), vec![NI; n - 1], vec![0.0; n - 1]);
        let got = record_probability(&m, n, &num()).unwrap().probability.value;
        assert!((got - want).abs() < 3e-5, "n={n}: {got} vs {want}");
    }
}

#[test]
fn record_value_cdf_matches_direct_integral() {
    let (m, _) = ar1();
    let (n, x) = (5, 0.8);
    let r = m.matrix(n).unwrap();
    let mut pairs: Vec<_> = (0..n - 1).map(|i| (i, Some(n - 1))).collect();
    pairs.push((n - 1, None));
    let mut hi = vec![0.0; n - 1];
    hi.push(x);
    let joint = direct(&r, &rows(n, &pairs), vec![NI; n], hi);
    let law = record_value_cdf(&m, n, x, &num()).unwrap();
    let want = joint / law.probability.value;
    assert!((law.cdf[0].value.value - want).abs() < 1e-4);
}

#[test]
fn second_record_pmf_agrees_with_single_arrival() {
    let (m, _) = ar1();
    for n in 3..=7 {
        let a = second_record_time_pmf(&m, n, &num()).unwrap().value;
        let b = arrival_times_joint(&m, &[n], &num()).unwrap().value;
        assert!((a - b).abs() < 5e-5, "n={n}: {a} vs {b}");
    }
}

#[test]
fn arrival_times_match_difference_orthant() {
    let (m, _) = ar1();
    let times = [3usize, 4, 7];
    let n = 7;
    let r = m.matrix(n).unwrap();
    // record indices 0, 2, 3, 6; each non-record below the latest record, records increasing
    let pairs = vec![(1, Some(0)), (0, Some(2)), (2, Some(3)), (4, Some(3)), (5, Some(3)), (3, Some(6))];
    let want = direct(&r, &rows(n, &pairs), vec![NI; 6], vec![0.0; 6]);
    let got = arrival_times_joint(&m, &times, &num()).unwrap().value;
    assert!((got - want).abs() < 3e-5, "{got} vs {want}");
}

#[test]
fn consecutive_laws_match_direct_integrals() {
    let (m, _) = ar1();
    let (j, n) = (3, 6);
    let r = m.matrix(n).unwrap();
    let mut pairs: Vec<_> = (0..n - 1).filter(|&i| i != j - 1).map(|i| (i, Some(j - 1))).collect();
    pairs.push((j - 1, Some(n - 1)));
    let k = pairs.len();
    let p_want = direct(&r, &rows(n, &pairs), vec![NI; k], vec![0.0; k]);
    let p = consecutive_joint_record_prob(&m, j, n, &num()).unwrap();
    assert!((p.value - p_want).abs() < 3e-5);

    let rest: Vec<_> = (0..n - 1).filter(|&i| i != j - 1).map(|i| (i, Some(j - 1))).collect();
    for &(x1, x2) in &[(0.3, 1.1), (1.0, 0.4), (-0.2, 0.9)] {
        let want = condition_on_last(&r, j - 1, &rest, x1, x2) / p_want;
        let got = consecutive_joint_record_cdf(&m, j, n, x1, x2, &num()).unwrap();
        assert!((got.value - want).abs() < 3e-4, "({x1},{x2}): {} vs {want}", got.value);
    }
}

#[test]
fn joint_laws_match_direct_integrals() {
    let (m, _) = ar1();
    let (j, n) = (3, 6);
    let r = m.matrix(n).unwrap();
    let mut pairs: Vec<_> = (0..j - 1).map(|i| (i, Some(j - 1))).collect();
    pairs.extend((j - 1..n - 1).map(|i| (i, Some(n - 1))));
    let k = pairs.len();
    let p_want = direct(&r, &rows(n, &pairs), vec![NI; k], vec![0.0; k]);
    let p = joint_record_prob(&m, j, n, &num()).unwrap();
    assert!((p.value - p_want).abs() < 3e-5);

    let mut rest: Vec<_> = (0..j - 1).map(|i| (i, Some(j - 1))).collect();
    rest.extend((j..n - 1).map(|i| (i, None)));
    for &(x1, x2) in &[(0.3, 1.1), (1.0, 0.4), (-0.5, -0.1), (0.5, PI)] {
        let want = condition_on_last(&r, j - 1, &rest, x1, x2) / p_want;
        let got = joint_record_cdf(&m, j, n, x1, x2, &num()).unwrap();
        assert!((got.value - want).abs() < 3e-4, "({x1},{x2}): {} vs {want}", got.value);
    }
}

#[test]
fn pair_probabilities_are_ordered() {
    let (m, _) = ar1();
    for (j, n) in [(2usize, 4usize), (3, 7)] {
        let c = consecutive_joint_record_prob(&m, j, n, &num()).unwrap().value;
        let jt = joint_record_prob(&m, j, n, &num()).unwrap().value;
        let rj = record_probability(&m, j, &num()).unwrap().probability.value;
        assert!(c <= jt + 1e-5 && jt <= rj + 1e-5, "{c} {jt} {rj}");
    }
}

#[test]
fn iid_first_increment_matches_quadrature() {
    let m = CorrelationModel::iid();
    let x = 0.5;
    // Σ_n P(T(2) = n, X_n − X_1 ≤ x) = ∫ φ(y) (Φ(y + x) − Φ(y)) / (1 − Φ(y)) dy
    let want = integrate_on(-9.0, 9.0, |y| {
        let s = normal::cdf(-y);
        if s < 1e-300 {
            0.0
        } else {
            normal::pdf(y) * (normal::cdf(y + x) - normal::cdf(y)) / s
        }
    });
    let res = first_increment_cdf(&m, x, &TailPolicy::default(), &num()).unwrap();
    assert!(res.tail_bracketed);
    assert!((res.value.value - want).abs() <= res.value.abs_error + 1e-3, "{:?} vs {want}", res.value);
}

#[test]
fn expected_records_classification() {
    let policy = TailPolicy::default();
    let n = Numerics { max_dim: 12, ..num() };
    let e = expected_records(&CorrelationModel::iid(), &policy, &n).unwrap();
    assert_eq!(e.class, SeriesClass::Divergent);
    assert!(e.gamma_at_least_half);
    let e = expected_records(&CorrelationModel::unit_gamma_array(), &policy, &Numerics { max_dim: 40, ..num() }).unwrap();
    assert_eq!(e.class, SeriesClass::Convergent);
    assert!((e.value.value - 2.0).abs() < 1e-4, "{:?}", e.value);
}

#[test]
fn gamma_single_flags_degenerate_correlation() {
    let m = CorrelationModel::tabulated(vec![1.0], TailRule::Zero).unwrap();
    assert!(matches!(gamma_single(&m, 3), Err(recordlab::Error::DegenerateCorrelation { .. }) | Err(recordlab::Error::InvalidArgument(_))));
}

#[test]
fn iid_second_increment_matches_quadrature() {
    let m = CorrelationModel::iid();
    let x = 0.5;
    // second record value has density φ(y)H(y), H = −log(1 − Φ); the next one is the
    // normal law truncated to (y, ∞)
    let want = integrate_on(-9.0, 9.0, |y| {
        let s = normal::cdf(-y);
        if s < 1e-300 {
            0.0
        } else {
            normal::pdf(y) * (-s.ln()) * (normal::cdf(y + x) - normal::cdf(y)) / s
        }
    });
    let policy = TailPolicy { max_residual: 0.25, ..TailPolicy::default() };
    let res = second_increment_cdf(&m, x, &policy, &Numerics { max_dim: 16, ..num() }).unwrap();
    assert!(res.tail_bracketed);
    assert!((res.value.value - want).abs() <= res.value.abs_error + 1e-3, "{:?} vs {want}", res.value);
}
