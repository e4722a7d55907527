//! `validate` suites: closed forms against exact iid laws and against Monte Carlo.

use crate::args::SuiteArg;
use crate::error::{usage, CliResult};
use crate::table::{fmt, Table};
use nalgebra::DMatrix;
use recordlab::multivariate as mv;
use recordlab::normal;
use recordlab::records::{self as rec, Marginal, TailPolicy};
use recordlab::rng::derive;
use recordlab::simulate::{self as sim, Process, DEFAULT_INCREMENT_CAP};
use recordlab::{CorrMatrix, CorrelationModel, CrossCorrelationModel, Estimate, Numerics, SimStudy};

const TAG_MC: u64 = 901;
const TAG_MULTI: u64 = 902;
const TAG_INCREMENT: u64 = 903;

struct Check {
    name: &'static str,
    params: String,
    closed: Estimate,
    dim: usize,
    reference: f64,
    reference_se: f64,
    bound: f64,
}

struct Suite {
    checks: Vec<Check>,
    num: Numerics,
}

impl Suite {
    /// Against an exact value: `|gap| ≤ abs_error + tol`.
    fn exact(&mut self, name: &'static str, params: String, closed: Estimate, dim: usize, reference: f64) {
        let bound = closed.abs_error + self.num.tol_for(dim);
        self.checks.push(Check { name, params, closed, dim, reference, reference_se: 0.0, bound });
    }

    /// Against a Monte-Carlo rate: `|gap| ≤ 3·(SE + abs_error)`.
    fn mc(&mut self, name: &'static str, params: String, closed: Estimate, dim: usize, (p, se): (f64, f64)) {
        let bound = 3.0 * (se + closed.abs_error);
        self.checks.push(Check { name, params, closed, dim, reference: p, reference_se: se, bound });
    }
}

/// `a·b` with first-order error propagation.
fn product(a: Estimate, b: Estimate) -> Estimate {
    Estimate { value: a.value * b.value, abs_error: a.abs_error * b.value.abs() + b.abs_error * a.value.abs(), converged: a.converged && b.converged }
}

fn pair(j: usize, n: usize) -> String {
    format!("j={j};n={n}")
}

/// iid `P(X_j ≤ x1, X_n ≤ x2 | records at j and n)`.
fn iid_joint_cdf(j: usize, n: usize, x1: f64, x2: f64) -> f64 {
    let (f1, f2) = (normal::cdf(x1), normal::cdf(x2));
    if x1 >= x2 {
        return f2.powi(n as i32);
    }
    let (j, n) = (j as i32, n as i32);
    f1.powi(n) + n as f64 * f1.powi(j) * (f2.powi(n - j) - f1.powi(n - j)) / (n - j) as f64
}

/// iid `P(X_j ≤ x1, X_n ≤ x2 | consecutive records at j and n)`.
fn iid_cons_cdf(n: usize, x1: f64, x2: f64) -> f64 {
    let (fa, f2) = (normal::cdf(x1.min(x2)), normal::cdf(x2));
    let n = n as i32;
    n as f64 * f2 * fa.powi(n - 1) - (n - 1) as f64 * fa.powi(n)
}

/// iid arrival law: record indicators are independent with `P(R_m) = 1/m`.
fn iid_arrival(times: &[usize]) -> f64 {
    let last = *times.last().expect("non-empty");
    (2..=last).map(|m| if times.contains(&m) { 1.0 / m as f64 } else { 1.0 - 1.0 / m as f64 }).product()
}

fn iid_exact(s: &mut Suite, nmax: usize) -> CliResult<()> {
    let model = CorrelationModel::iid();
    let num = s.num;
    for n in 2..=nmax {
        let p = rec::record_probability(&model, n, &num)?.probability;
        s.exact("record_probability", format!("n={n}"), p, n - 1, 1.0 / n as f64);
        let t2 = rec::second_record_time_pmf(&model, n, &num)?;
        s.exact("second_record_time_pmf", format!("n={n}"), t2, n - 2, 1.0 / (n * (n - 1)) as f64);
    }
    for n in [2, nmax] {
        for pt in rec::record_value_cdf_points(&model, n, &[-1.0, 0.0, 1.0], &num)?.cdf {
            s.exact("record_value_cdf", format!("n={n};x={}", fmt(pt.x)), pt.value, n, normal::cdf(pt.x).powi(n as i32));
        }
    }
    let mut arrivals = vec![vec![2, 3]];
    if nmax > 4 {
        arrivals.push(vec![2, 4, nmax]);
    }
    for t in arrivals {
        let e = rec::arrival_times_joint(&model, &t, &num)?;
        let last = *t.last().unwrap();
        s.exact("arrival_times_joint", t.iter().map(usize::to_string).collect::<Vec<_>>().join(";"), e, last - 1 - t.len(), iid_arrival(&t));
    }
    let mut pairs = vec![(2, nmax)];
    if nmax > 3 {
        pairs.push((nmax - 1, nmax));
    }
    for (j, n) in pairs {
        s.exact("joint_record_prob", pair(j, n), rec::joint_record_prob(&model, j, n, &num)?, n - 1, 1.0 / (j * n) as f64);
        for (x1, x2) in [(0.5, 1.0), (1.0, 0.5)] {
            let e = rec::joint_record_cdf(&model, j, n, x1, x2, &num)?;
            s.exact("joint_record_cdf", format!("{};x1={};x2={}", pair(j, n), fmt(x1), fmt(x2)), e, n, iid_joint_cdf(j, n, x1, x2));
        }
        let at_j = rec::joint_record_marginals(&model, j, n, 0.5, Marginal::AtJ, &num)?;
        s.exact("joint_record_marginal", format!("{};at-j;x=0.5", pair(j, n)), at_j, n, iid_joint_cdf(j, n, 0.5, f64::INFINITY));
        let at_n = rec::joint_record_marginals(&model, j, n, 0.5, Marginal::AtN, &num)?;
        s.exact("joint_record_marginal", format!("{};at-n;x=0.5", pair(j, n)), at_n, n, normal::cdf(0.5).powi(n as i32));
    }
    for j in [1, nmax - 2] {
        let n = nmax;
        let p = rec::consecutive_joint_record_prob(&model, j, n, &num)?;
        s.exact("consecutive_joint_record_prob", pair(j, n), p, n - 1, 1.0 / (n * (n - 1)) as f64);
        let c = rec::consecutive_joint_record_cdf(&model, j, n, 0.5, 1.0, &num)?;
        s.exact("consecutive_joint_record_cdf", format!("{};x1=0.5;x2=1", pair(j, n)), c, n, iid_cons_cdf(n, 0.5, 1.0));
    }
    let indep = CrossCorrelationModel::independent(vec![model.clone(), model])?;
    for n in 2..=nmax.min(5) {
        let p = mv::complete_record_probability(&indep, n, &num)?.probability;
        s.exact("complete_record_probability", format!("d=2;n={n}"), p, 2 * (n - 1), 1.0 / (n * n) as f64);
    }
    Ok(())
}

/// Per-path record bitmask and the values at times 2 and `n`.
fn mc_against(s: &mut Suite, model: &CorrelationModel, nmax: usize, paths: usize) -> CliResult<()> {
    let num = s.num;
    let study = SimStudy::new(Process::Gaussian(model.clone()), nmax, paths, derive(num.seed, &[TAG_MC]))?;
    let (x1, x2) = (0.5, 1.0);
    let summaries = sim::for_each_path(&study, |_, path| {
        let mask = sim::record_indicators(path).iter().enumerate().fold(0u64, |m, (i, &r)| m | (r as u64) << i);
        (mask, path[1], path[nmax - 1])
    })?;
    let bit = |m: u64, t: usize| m >> (t - 1) & 1 == 1;
    let rate = |f: &dyn Fn(&(u64, f64, f64)) -> bool| sim::rate(summaries.iter().filter(|s| f(s)).count() as u64, paths);

    for n in 2..=nmax {
        let p = rec::record_probability(model, n, &num)?.probability;
        s.mc("record_probability", format!("n={n}"), p, n - 1, rate(&|s| bit(s.0, n)));
        let t2 = rec::second_record_time_pmf(model, n, &num)?;
        s.mc("second_record_time_pmf", format!("n={n}"), t2, n - 2, rate(&|s| bit(s.0, n) && (2..n).all(|k| !bit(s.0, k))));
    }
    let a = rec::arrival_times_joint(model, &[2, 3], &num)?;
    s.mc("arrival_times_joint", "2;3".into(), a, 0, rate(&|s| bit(s.0, 2) && bit(s.0, 3)));

    let n = nmax;
    let law = rec::record_value_cdf(model, n, x1, &num)?;
    let joint = product(law.cdf[0].value, law.probability);
    s.mc("record_value_cdf*probability", format!("n={n};x=0.5"), joint, n, rate(&|s| bit(s.0, n) && s.2 <= x1));

    let jp = rec::joint_record_prob(model, 2, n, &num)?;
    s.mc("joint_record_prob", pair(2, n), jp, n - 1, rate(&|s| bit(s.0, 2) && bit(s.0, n)));
    let jc = product(rec::joint_record_cdf(model, 2, n, x1, x2, &num)?, jp);
    s.mc("joint_record_cdf*probability", format!("{};x1=0.5;x2=1", pair(2, n)), jc, n, rate(&|s| bit(s.0, 2) && bit(s.0, n) && s.1 <= x1 && s.2 <= x2));

    let j = n - 2;
    let none_between = |m: u64| (j + 1..n).all(|k| !bit(m, k));
    let cp = rec::consecutive_joint_record_prob(model, j, n, &num)?;
    s.mc("consecutive_joint_record_prob", pair(j, n), cp, n - 1, rate(&|s| bit(s.0, j) && bit(s.0, n) && none_between(s.0)));

    let inc = sim::simulate_increments(model, paths, derive(num.seed, &[TAG_INCREMENT]), DEFAULT_INCREMENT_CAP)?;
    let r = rec::first_increment_cdf(model, 1.0, &TailPolicy::default(), &num)?;
    let (p, bound) = inc.cdf(false, 1.0);
    // the censored fraction is part of the reference uncertainty
    s.mc("first_increment_cdf", "x=1".into(), r.value, r.truncation_index, (p, bound));
    Ok(())
}

fn mc_multivariate(s: &mut Suite, model: &CorrelationModel, paths: usize) -> CliResult<()> {
    let num = s.num;
    let n = 5;
    let cross = CorrMatrix::correlation(DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]))?;
    let m = CrossCorrelationModel::separable(model.clone(), cross)?;
    let study = SimStudy::new(Process::MultiGaussian(m.clone()), n, paths, derive(num.seed, &[TAG_MULTI]))?;
    let ind = sim::for_each_path(&study, |_, path| sim::complete_record_indicators(path, 2, n))?;
    for k in 2..=n {
        let p = mv::complete_record_probability(&m, k, &num)?.probability;
        let hits = ind.iter().filter(|r| r[k - 1]).count() as u64;
        s.mc("complete_record_probability", format!("d=2;cross=0.3;n={k}"), p, 2 * (k - 1), sim::rate(hits, paths));
    }
    Ok(())
}

pub fn run(suite: SuiteArg, nmax: usize, paths: usize, phi: f64, num: &Numerics) -> CliResult<Table> {
    if !(3..=30).contains(&nmax) {
        return Err(usage("--n-max", format!("{nmax} outside 3..=30")));
    }
    if paths < 1000 {
        return Err(usage("--paths", "need at least 1000 paths"));
    }
    let mut s = Suite { checks: Vec::new(), num: *num };
    match suite {
        SuiteArg::Iid => {
            iid_exact(&mut s, nmax)?;
            mc_against(&mut s, &CorrelationModel::iid(), nmax, paths)?;
        }
        SuiteArg::Ar1 => {
            let model = CorrelationModel::ar1(phi).map_err(|e| usage("--phi", e))?;
            mc_against(&mut s, &model, nmax, paths)?;
            mc_multivariate(&mut s, &model, paths)?;
        }
    }
    let mut t = Table::new(&["quantity", "params", "value", "abs_error", "dim", "seed", "reference", "reference_se", "gap", "bound", "status"]);
    let mut failed = 0;
    for c in &s.checks {
        let gap = c.closed.value - c.reference;
        let ok = gap.abs() <= c.bound;
        failed += usize::from(!ok);
        let extra = [fmt(c.reference), fmt(c.reference_se), fmt(gap), fmt(c.bound), if ok { "pass" } else { "FAIL" }.to_string()];
        t.estimate(c.name, std::slice::from_ref(&c.params), &c.closed, c.dim, num.seed, &extra);
    }
    t.checks = Some((failed, s.checks.len()));
    Ok(t)
}
