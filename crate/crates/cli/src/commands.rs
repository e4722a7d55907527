//! Subcommand dispatch: resolve flags, call the library, fill a [`Table`].

use crate::args::{Cli, Command, FamilyArg, Global, MarginalArg, ModelArgs, MultiModelArgs, ProcessArg, SeriesArgs};
use crate::error::{usage, CliError, CliResult};
use crate::input;
use crate::table::{fmt, Table};
use crate::validate;
use recordlab::asymptotic::{self, ExtremalIndex, GevFamily, GevSpec};
use recordlab::multivariate as mv;
use recordlab::numerics::MIN_TOL;
use recordlab::records::{self as rec, Marginal, SeriesClass, SeriesResult};
use recordlab::simulate::{self as sim, Process};
use recordlab::{CorrelationModel, CrossCorrelationModel, Estimate, Numerics, SimStudy, TailPolicy};
use std::fs::File;
use std::io::BufWriter;

const ESTIMATE_COLUMNS: [&str; 4] = ["value", "abs_error", "dim", "seed"];

fn columns(params: &[&str], extra: &[&str]) -> Table {
    let mut c = vec!["quantity"];
    c.extend_from_slice(params);
    c.extend_from_slice(&ESTIMATE_COLUMNS);
    c.extend_from_slice(extra);
    Table::new(&c)
}

pub fn numerics(g: &Global) -> CliResult<Numerics> {
    if let Some(t) = g.tol {
        if !(t >= MIN_TOL) {
            return Err(usage("--tol", format!("{t} is below the smallest supported tolerance {MIN_TOL:e}")));
        }
    }
    if g.max_dim == 0 {
        return Err(usage("--max-dim", "must be at least 1"));
    }
    Ok(Numerics { tol: g.tol, seed: g.seed, max_dim: g.max_dim, ..Numerics::default() })
}

fn model(args: &ModelArgs, size: usize, g: &Global) -> CliResult<CorrelationModel> {
    input::jitter(input::model(args)?, size, g.jitter)
}

fn multi_model(args: &MultiModelArgs, size: usize, g: &Global) -> CliResult<CrossCorrelationModel> {
    input::jitter_multi(input::multi_model(args)?, size, g.jitter)
}

fn no_jitter(g: &Global, cmd: &str) -> CliResult<()> {
    match g.jitter {
        Some(_) => Err(usage("--jitter", format!("{cmd} takes no correlation matrix"))),
        None => Ok(()),
    }
}

fn policy(s: &SeriesArgs) -> CliResult<TailPolicy> {
    if !(s.eps_tail > 0.0) {
        return Err(usage("--eps-tail", "must be positive"));
    }
    if s.run == 0 || s.max_terms == 0 {
        return Err(usage(if s.run == 0 { "--run" } else { "--max-terms" }, "must be at least 1"));
    }
    if !(s.max_residual > 0.0) {
        return Err(usage("--max-residual", "must be positive"));
    }
    if !(s.term_tol >= MIN_TOL) {
        return Err(usage("--term-tol", format!("must be at least {MIN_TOL:e}")));
    }
    Ok(TailPolicy { eps_tail: s.eps_tail, run: s.run, max_terms: s.max_terms, max_residual: s.max_residual, term_tol: s.term_tol })
}

/// Times needed by a series: bounded by the term cap and the dimension cap.
fn series_size(s: &SeriesArgs, num: &Numerics) -> usize {
    s.max_terms.min(num.max_dim) + 3
}

fn series_row(t: &mut Table, quantity: &str, x: f64, r: &SeriesResult, seed: u64) {
    t.estimate(quantity, &[fmt(x)], &r.value, r.truncation_index, seed, &[fmt(r.residual_bound), r.tail_bracketed.to_string()]);
}

fn family_label(s: &GevSpec) -> String {
    match s.family() {
        GevFamily::Gumbel => "gumbel".into(),
        GevFamily::Frechet { alpha } => format!("frechet({alpha})"),
        GevFamily::NegWeibull { alpha } => format!("neg-weibull({alpha})"),
    }
}

fn theta_row(t: &mut Table, method: &str, e: &ExtremalIndex, dim: usize, seed: u64) {
    let (lo, hi) = e.ci.map_or((String::new(), String::new()), |(a, b)| (fmt(a), fmt(b)));
    let limit = e.limit.as_ref().map(family_label).unwrap_or_default();
    t.estimate("extremal_index", &[method.into()], &Estimate::new(e.theta, e.abs_error), dim, seed, &[lo, hi, limit, e.flagged.to_string()]);
}

fn check_times(flag: &str, ns: &[usize], min: usize) -> CliResult<usize> {
    match ns.iter().find(|&&n| n < min) {
        Some(n) => Err(usage(flag, format!("time {n} is below {min}"))),
        None => Ok(*ns.iter().max().expect("non-empty")),
    }
}

fn pair(j: usize, n: usize, min_j: usize) -> CliResult<()> {
    if j < min_j || j >= n {
        return Err(usage("--j", format!("need {min_j} <= j < n, got j={j}, n={n}")));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<Table> {
    let g = &cli.global;
    let num = numerics(g)?;
    let seed = g.seed;
    let t = match &cli.command {
        Command::RecordProb { model: m, n } => {
            let ns = input::times("--n", n)?;
            let model = model(m, check_times("--n", &ns, 1)?, g)?;
            let mut t = columns(&["n"], &[]);
            for n in ns {
                let law = rec::record_probability(&model, n, &num)?;
                t.estimate("record_probability", &[n.to_string()], &law.probability, n - 1, seed, &[]);
            }
            t
        }
        Command::RecordCdf { model: m, n, x } => {
            let ns = input::times("--n", n)?;
            let xs = input::points("--x", x)?;
            let model = model(m, check_times("--n", &ns, 1)?, g)?;
            let mut t = columns(&["n", "x"], &[]);
            for n in ns {
                let law = rec::record_value_cdf_points(&model, n, &xs, &num)?;
                let dim = law.meta.dims.iter().copied().max().unwrap_or(0);
                for pt in &law.cdf {
                    t.estimate("record_value_cdf", &[n.to_string(), fmt(pt.x)], &pt.value, dim, seed, &[]);
                }
            }
            t
        }
        Command::ArrivalTimes { model: m, times } => {
            let ts = input::times("--times", times)?;
            let last = check_times("--times", &ts, 2)?;
            if ts.windows(2).any(|w| w[0] >= w[1]) {
                return Err(usage("--times", "times must be strictly increasing"));
            }
            let model = model(m, last, g)?;
            let e = rec::arrival_times_joint(&model, &ts, &num)?;
            let label = ts.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
            let mut t = columns(&["times"], &[]);
            t.estimate("arrival_times_joint", &[label], &e, (last - 1).saturating_sub(ts.len()), seed, &[]);
            t
        }
        Command::T2Pmf { model: m, n } => {
            let ns = input::times("--n", n)?;
            let model = model(m, check_times("--n", &ns, 2)?, g)?;
            let mut t = columns(&["n"], &[]);
            for n in ns {
                let e = rec::second_record_time_pmf(&model, n, &num)?;
                t.estimate("second_record_time_pmf", &[n.to_string()], &e, n - 2, seed, &[]);
            }
            t
        }
        Command::IncrementCdf { model: m, series, x } | Command::Increment2Cdf { model: m, series, x } => {
            let second = matches!(cli.command, Command::Increment2Cdf { .. });
            let xs = input::points("--x", x)?;
            let pol = policy(series)?;
            let model = model(m, series_size(series, &num), g)?;
            let mut t = columns(&["x"], &["residual_bound", "tail_bracketed"]);
            for x in xs {
                let r = if second { rec::second_increment_cdf(&model, x, &pol, &num)? } else { rec::first_increment_cdf(&model, x, &pol, &num)? };
                series_row(&mut t, if second { "second_increment_cdf" } else { "first_increment_cdf" }, x, &r, seed);
            }
            t
        }
        Command::ExpectedRecords { model: m, series } => {
            let pol = policy(series)?;
            let model = model(m, series_size(series, &num), g)?;
            let r = rec::expected_records(&model, &pol, &num)?;
            let class = match r.class {
                SeriesClass::Divergent => "divergent",
                SeriesClass::Convergent => "convergent",
                SeriesClass::Inconclusive => "inconclusive",
            };
            let mut t = columns(&[], &["class", "horizon", "gamma_at_least_half"]);
            t.estimate("expected_records", &[], &r.value, r.terms.len(), seed, &[class.into(), r.horizon.to_string(), r.gamma_at_least_half.to_string()]);
            t
        }
        Command::JointProb { model: m, j, n } => {
            pair(*j, *n, 2)?;
            let model = model(m, *n, g)?;
            let mut t = columns(&["j", "n"], &[]);
            t.estimate("joint_record_prob", &[j.to_string(), n.to_string()], &rec::joint_record_prob(&model, *j, *n, &num)?, n - 1, seed, &[]);
            t
        }
        Command::JointCdf { model: m, j, n, x1, x2, marginal, x } => {
            pair(*j, *n, 2)?;
            let model = model(m, *n, g)?;
            match (marginal, x) {
                (Some(which), Some(x)) => {
                    let mut t = columns(&["j", "n", "marginal", "x"], &[]);
                    let (w, label) = match which {
                        MarginalArg::AtJ => (Marginal::AtJ, "at-j"),
                        MarginalArg::AtN => (Marginal::AtN, "at-n"),
                    };
                    for x in input::points("--x", x)? {
                        let e = rec::joint_record_marginals(&model, *j, *n, x, w, &num)?;
                        t.estimate("joint_record_marginal", &[j.to_string(), n.to_string(), label.into(), fmt(x)], &e, *n, seed, &[]);
                    }
                    t
                }
                _ => {
                    let (x1, x2) = (x1.ok_or_else(|| usage("--x1", "required"))?, x2.ok_or_else(|| usage("--x2", "required"))?);
                    let mut t = columns(&["j", "n", "x1", "x2"], &[]);
                    let e = rec::joint_record_cdf(&model, *j, *n, x1, x2, &num)?;
                    t.estimate("joint_record_cdf", &[j.to_string(), n.to_string(), fmt(x1), fmt(x2)], &e, *n, seed, &[]);
                    t
                }
            }
        }
        Command::ConsJointProb { model: m, j, n } => {
            pair(*j, *n, 1)?;
            let model = model(m, *n, g)?;
            let mut t = columns(&["j", "n"], &[]);
            let e = rec::consecutive_joint_record_prob(&model, *j, *n, &num)?;
            t.estimate("consecutive_joint_record_prob", &[j.to_string(), n.to_string()], &e, n - 1, seed, &[]);
            t
        }
        Command::ConsJointCdf { model: m, j, n, x1, x2 } => {
            pair(*j, *n, 1)?;
            let model = model(m, *n, g)?;
            let mut t = columns(&["j", "n", "x1", "x2"], &[]);
            let e = rec::consecutive_joint_record_cdf(&model, *j, *n, *x1, *x2, &num)?;
            t.estimate("consecutive_joint_record_cdf", &[j.to_string(), n.to_string(), fmt(*x1), fmt(*x2)], &e, *n, seed, &[]);
            t
        }
        Command::CompleteProb { model: m, n } => {
            let ns = input::times("--n", n)?;
            let model = multi_model(m, check_times("--n", &ns, 1)?, g)?;
            let mut t = columns(&["d", "n"], &[]);
            for n in ns {
                let law = mv::complete_record_probability(&model, n, &num)?;
                t.estimate("complete_record_probability", &[model.d.to_string(), n.to_string()], &law.probability, model.d * (n - 1), seed, &[]);
            }
            t
        }
        Command::CompleteCdf { model: m, n, x } => {
            check_times("--n", &[*n], 1)?;
            let model = multi_model(m, *n, g)?;
            let x = input::list("--x", x)?;
            let mut t = columns(&["d", "n", "x"], &[]);
            let e = mv::complete_record_cdf(&model, *n, &x, &num)?;
            t.estimate("complete_record_cdf", &[model.d.to_string(), n.to_string(), join(&x)], &e, model.d * n, seed, &[]);
            t
        }
        Command::JointCompleteProb { model: m, j, n } => {
            pair(*j, *n, 2)?;
            let model = multi_model(m, *n, g)?;
            let mut t = columns(&["d", "j", "n"], &[]);
            let e = mv::joint_complete_record_prob(&model, *j, *n, &num)?;
            t.estimate("joint_complete_record_prob", &[model.d.to_string(), j.to_string(), n.to_string()], &e, model.d * (n - 1), seed, &[]);
            t
        }
        Command::JointCompleteCdf { model: m, j, n, x1, x2 } => {
            pair(*j, *n, 2)?;
            let model = multi_model(m, *n, g)?;
            let (x1, x2) = (input::list("--x1", x1)?, input::list("--x2", x2)?);
            let mut t = columns(&["d", "j", "n", "x1", "x2"], &[]);
            let e = mv::joint_complete_record_cdf(&model, *j, *n, &x1, &x2, &num)?;
            t.estimate("joint_complete_record_cdf", &[model.d.to_string(), j.to_string(), n.to_string(), join(&x1), join(&x2)], &e, model.d * n, seed, &[]);
            t
        }
        Command::Theta { chernick_m, stable_coeffs, alpha, kappa, deltas, deltas_file, dump, run_length, quantile, record_n } => {
            no_jitter(g, "theta")?;
            let mut t = columns(&["method"], &["ci_lo", "ci_hi", "limit", "flagged"]);
            let (method, e, dim) = if let Some(m) = chernick_m {
                ("chernick", asymptotic::chernick_theta(*m).map_err(|e| usage("--chernick-m", e))?, 0)
            } else if let Some(c) = stable_coeffs {
                let c = input::list("--stable-coeffs", c)?;
                ("stable-ma", asymptotic::stable_ma_theta(&c, *alpha, *kappa)?, 0)
            } else if deltas.is_some() || deltas_file.is_some() {
                let d = match (deltas, deltas_file) {
                    (Some(s), _) => input::deltas("--deltas", s)?,
                    (_, Some(p)) => input::deltas_file("--deltas-file", p)?,
                    _ => unreachable!("one source is set"),
                };
                let k = d.values().filter(|v| v.is_finite()).count();
                ("hsing", asymptotic::hsing_theta(&d, &num)?, k)
            } else if let Some(p) = dump {
                let f = File::open(p).map_err(|e| usage("--dump", format!("{}: {e}", p.display())))?;
                let m = sim::read_raw_dump(std::io::BufReader::new(f)).map_err(|e| usage("--dump", e))?;
                let paths: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
                ("runs", sim::empirical_extremal_index(&paths, *run_length, *quantile, seed)?, 0)
            } else {
                return Err(usage("theta", "one of --chernick-m, --stable-coeffs, --deltas, --deltas-file, --dump is required"));
            };
            theta_row(&mut t, method, &e, dim, seed);
            if let Some(n) = record_n {
                let a = asymptotic::asymptotic_record_prob(e.theta, *n).map_err(|e| usage("--record-n", e))?;
                let extra = [String::new(), String::new(), format!("n={n}"), String::new()];
                t.estimate("asymptotic_record_prob", &[method.into()], &Estimate::exact(a.0), 0, seed, &extra);
            }
            t
        }
        Command::Gev { family, alpha, theta, x } => {
            no_jitter(g, "gev")?;
            let spec = match family {
                FamilyArg::Gumbel => GevSpec::gumbel(),
                FamilyArg::Frechet | FamilyArg::NegWeibull if !(*alpha > 0.0) => return Err(usage("--alpha", "must be positive")),
                FamilyArg::Frechet => GevSpec::frechet(*alpha),
                FamilyArg::NegWeibull => GevSpec::neg_weibull(*alpha),
            };
            let label = family_label(&spec);
            let mut t = columns(&["family", "theta", "x"], &[]);
            for x in input::points("--x", x)? {
                let p = [label.clone(), fmt(*theta), fmt(x)];
                t.estimate("gev_cdf", &p, &Estimate::exact(asymptotic::gev_cdf(x, &spec, *theta).map_err(|e| usage("--theta", e))?), 0, seed, &[]);
                t.estimate("gev_pdf", &p, &Estimate::exact(asymptotic::gev_pdf(x, &spec, *theta).map_err(|e| usage("--theta", e))?), 0, seed, &[]);
            }
            t
        }
        Command::Simulate { process, model: m, chernick_m, stable_coeffs, alpha, kappa, n, paths, margin, dump } => {
            let proc = match process {
                ProcessArg::Gaussian => {
                    if m.d != 1 || m.cross.is_some() || m.blocks_file.is_some() {
                        return Err(usage("--process", "use --process multi for vector models"));
                    }
                    Process::Gaussian(model(&m.base, *n, g)?)
                }
                ProcessArg::Multi => Process::MultiGaussian(multi_model(m, *n, g)?),
                ProcessArg::Chernick => {
                    no_jitter(g, "a Chernick simulation")?;
                    Process::Chernick { m: *chernick_m }
                }
                ProcessArg::Stable => {
                    no_jitter(g, "a stable simulation")?;
                    Process::StableMa { coeffs: input::list("--stable-coeffs", stable_coeffs)?, alpha: *alpha, kappa: *kappa }
                }
            };
            let mut study = SimStudy::new(proc, *n, *paths, seed).map_err(|e| usage("simulate", e))?;
            if let Some(s) = margin {
                study = study.with_margin(input::margin(s)?).map_err(|e| usage("--margin", e))?;
            }
            simulate(&study, dump.as_deref())?
        }
        Command::Validate { suite, n_max, paths, phi } => {
            no_jitter(g, "validate")?;
            validate::run(*suite, *n_max, *paths, *phi, &num)?
        }
    };
    Ok(t)
}

fn join(x: &[f64]) -> String {
    x.iter().map(|v| fmt(*v)).collect::<Vec<_>>().join(";")
}

fn simulate(study: &SimStudy, dump: Option<&std::path::Path>) -> CliResult<Table> {
    let stats = sim::simulate_records(study)?;
    let (n, seed, dim) = (study.n, study.seed, study.n * study.dim());
    let mut t = columns(&["k"], &["se"]);
    let row = |t: &mut Table, q: &str, k: usize, (p, se): (f64, f64)| {
        t.estimate(q, &[k.to_string()], &Estimate::new(p, 3.0 * se), dim, seed, &[fmt(se)]);
    };
    for k in 1..=n {
        row(&mut t, "record_rate", k, stats.rate_at(k));
    }
    for k in 2..=n {
        row(&mut t, "second_record_time_pmf", k, stats.t2_pmf(k));
    }
    row(&mut t, "mean_records", n, (stats.mean_records, stats.mean_records_se));
    if let Some(s) = stats.pooled_scaled_rate {
        row(&mut t, "pooled_scaled_rate", n, s);
    }
    if let Some(path) = dump {
        let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), msg: e.to_string() };
        let f = File::create(path).map_err(io)?;
        sim::write_raw_dump(BufWriter::new(f), &study.path_matrix()?)?;
    }
    Ok(t)
}
