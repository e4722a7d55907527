//! Parsing of flag values and model files.

use crate::args::{ModelArgs, MultiModelArgs};
use crate::error::{usage, CliResult};
use nalgebra::DMatrix;
use recordlab::records::{ModelKind, TailRule};
use recordlab::simulate::MarginTransform;
use recordlab::{CorrMatrix, CorrelationModel, CrossCorrelationModel};
use std::collections::BTreeMap;
use std::path::Path;

fn num(flag: &str, s: &str) -> CliResult<f64> {
    s.trim().parse::<f64>().map_err(|_| usage(flag, format!("'{s}' is not a number")))
}

fn index(flag: &str, s: &str) -> CliResult<usize> {
    s.trim().parse::<usize>().map_err(|_| usage(flag, format!("'{s}' is not a non-negative integer")))
}

/// `N`, `A..B` (inclusive) or a comma list.
pub fn times(flag: &str, s: &str) -> CliResult<Vec<usize>> {
    let out = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (index(flag, a)?, index(flag, b)?);
        if a > b {
            return Err(usage(flag, format!("empty range {s}")));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|t| index(flag, t)).collect::<CliResult<Vec<_>>>()?
    };
    if out.is_empty() {
        return Err(usage(flag, "no values given"));
    }
    Ok(out)
}

/// Comma list of numbers.
pub fn list(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|t| num(flag, t)).collect()
}

/// Comma list or `LO:HI:STEP` grid.
pub fn points(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return list(flag, s);
    }
    let (lo, hi, step) = (num(flag, parts[0])?, num(flag, parts[1])?, num(flag, parts[2])?);
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(usage(flag, format!("grid {s} needs finite LO <= HI and STEP > 0")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(usage(flag, format!("grid {s} has more than 10^6 points")));
    }
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// `LAG:DELTA,...` with `inf` allowed.
pub fn deltas(flag: &str, s: &str) -> CliResult<BTreeMap<usize, f64>> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once(':').ok_or_else(|| usage(flag, format!("'{kv}' is not LAG:DELTA")))?;
            Ok((index(flag, k)?, num(flag, v)?))
        })
        .collect()
}

fn read_rows(flag: &str, path: &Path) -> CliResult<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| usage(flag, format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| usage(flag, format!("{}: {e}", path.display())))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(usage(flag, format!("{} has no data rows", path.display())));
    }
    Ok(rows)
}

fn numeric_rows(flag: &str, rows: &[Vec<String>]) -> CliResult<Vec<Vec<f64>>> {
    rows.iter().map(|r| r.iter().map(|v| num(flag, v)).collect()).collect()
}

/// `lag,delta` rows.
pub fn deltas_file(flag: &str, path: &Path) -> CliResult<BTreeMap<usize, f64>> {
    read_rows(flag, path)?
        .iter()
        .map(|r| match r.as_slice() {
            [k, v] => Ok((index(flag, k)?, num(flag, v)?)),
            _ => Err(usage(flag, "expected lag,delta rows")),
        })
        .collect()
}

fn tail_rule(flag: &str, s: &str) -> CliResult<TailRule> {
    match s.split_once(':') {
        None if s == "zero" => Ok(TailRule::Zero),
        Some(("geometric", r)) => Ok(TailRule::Geometric { ratio: num(flag, r)? }),
        _ => Err(usage(flag, format!("'{s}' is not zero or geometric:RATIO"))),
    }
}

/// A CSV of `lag,value` rows (lags consecutive from 0 or 1) is an autocorrelation
/// table; anything else must be a square correlation matrix.
fn model_file(path: &Path, tail: TailRule) -> CliResult<CorrelationModel> {
    const FLAG: &str = "--model-file";
    let rows = numeric_rows(FLAG, &read_rows(FLAG, path)?)?;
    let first = rows[0].first().copied().unwrap_or(f64::NAN);
    let is_table = rows.iter().all(|r| r.len() == 2) && (first == 0.0 || first == 1.0) && rows.iter().enumerate().all(|(i, r)| r[0] == first + i as f64);
    if is_table {
        let mut rho: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        if first == 0.0 {
            if rho[0] != 1.0 {
                return Err(usage(FLAG, "lag 0 must have autocorrelation 1"));
            }
            rho.remove(0);
        }
        return Ok(CorrelationModel::tabulated(rho, tail)?);
    }
    let m = CorrMatrix::from_rows(&rows).map_err(|e| usage(FLAG, e))?;
    Ok(CorrelationModel::explicit(m)?)
}

pub fn model(args: &ModelArgs) -> CliResult<CorrelationModel> {
    let tail = tail_rule("--tail", &args.tail)?;
    if let Some(path) = &args.model_file {
        return model_file(path, tail);
    }
    const FLAG: &str = "--model";
    let s = args.model.as_str();
    Ok(match s.split_once(':') {
        None if s == "iid" => CorrelationModel::iid(),
        None if s == "unit-gamma" => CorrelationModel::unit_gamma_array(),
        Some(("ar1", v)) => CorrelationModel::ar1(num(FLAG, v)?).map_err(|e| usage(FLAG, e))?,
        Some(("equi", v)) => CorrelationModel::equicorrelated(num(FLAG, v)?).map_err(|e| usage(FLAG, e))?,
        Some(("tab", v)) => CorrelationModel::tabulated(list(FLAG, v)?, tail).map_err(|e| usage(FLAG, e))?,
        _ => return Err(usage(FLAG, format!("unknown model '{s}' (iid, ar1:PHI, equi:RHO, tab:R1,R2,..., unit-gamma)"))),
    })
}

/// Sections `lag,H` each followed by `d` rows of `d` values; lags run 0, 1, 2, ….
fn blocks_file(path: &Path) -> CliResult<CrossCorrelationModel> {
    const FLAG: &str = "--blocks-file";
    let rows = read_rows(FLAG, path)?;
    let mut blocks: Vec<Vec<Vec<f64>>> = Vec::new();
    for r in &rows {
        if r[0] == "lag" {
            let lag = r.get(1).map(|v| index(FLAG, v)).transpose()?.ok_or_else(|| usage(FLAG, "lag line needs a lag"))?;
            if lag != blocks.len() {
                return Err(usage(FLAG, format!("expected lag {}, found lag {lag}", blocks.len())));
            }
            blocks.push(Vec::new());
        } else {
            let block = blocks.last_mut().ok_or_else(|| usage(FLAG, "data before the first lag line"))?;
            block.push(r.iter().map(|v| num(FLAG, v)).collect::<CliResult<_>>()?);
        }
    }
    let d = blocks.first().map_or(0, Vec::len);
    let mut mats = Vec::with_capacity(blocks.len());
    for (h, b) in blocks.iter().enumerate() {
        if b.len() != d || b.iter().any(|r| r.len() != d) {
            return Err(usage(FLAG, format!("block at lag {h} is not {d}x{d}")));
        }
        mats.push(DMatrix::from_fn(d, d, |i, j| b[i][j]));
    }
    CrossCorrelationModel::tabulated(mats).map_err(|e| usage(FLAG, e))
}

pub fn multi_model(args: &MultiModelArgs) -> CliResult<CrossCorrelationModel> {
    if let Some(path) = &args.blocks_file {
        return blocks_file(path);
    }
    if args.d == 0 {
        return Err(usage("--d", "need at least one coordinate"));
    }
    let base = model(&args.base)?;
    match args.cross {
        Some(rho) => {
            let d = args.d;
            let c = CorrMatrix::correlation(DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { rho })).map_err(|e| usage("--cross", e))?;
            CrossCorrelationModel::separable(base, c).map_err(|e| usage("--cross", e))
        }
        None => Ok(CrossCorrelationModel::independent(vec![base; args.d])?),
    }
}

fn check_jitter(eps: f64) -> CliResult<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(usage("--jitter", format!("{eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// `(R + εI)/(1 + ε)` on the first `size` times as an explicit model. Record
/// events only compare equal-variance values, so rescaling does not change them.
pub fn jitter(m: CorrelationModel, size: usize, eps: Option<f64>) -> CliResult<CorrelationModel> {
    let Some(eps) = eps else { return Ok(m) };
    check_jitter(eps)?;
    if let ModelKind::UnitGammaArray = m.kind {
        return Err(usage("--jitter", "not available for the unit-gamma array"));
    }
    let size = size.min(m.horizon).max(1);
    let r = m.matrix(size)?.with_jitter(eps).into_matrix() / (1.0 + eps);
    Ok(CorrelationModel::explicit(CorrMatrix::new(r)?)?)
}

/// Same as [`jitter`] for the stacked vector process: ε enters the lag-0 block.
pub fn jitter_multi(m: CrossCorrelationModel, size: usize, eps: Option<f64>) -> CliResult<CrossCorrelationModel> {
    let Some(eps) = eps else { return Ok(m) };
    check_jitter(eps)?;
    let d = m.d;
    let blocks = (0..size.max(1))
        .map(|h| {
            let b = if h == 0 { m.block(0) + DMatrix::identity(d, d) * eps } else { m.block(h) };
            b / (1.0 + eps)
        })
        .collect();
    Ok(CrossCorrelationModel::tabulated(blocks)?.with_horizon(m.horizon))
}

pub fn margin(s: &str) -> CliResult<MarginTransform> {
    const FLAG: &str = "--margin";
    let parts: Vec<&str> = s.split(':').collect();
    Ok(match parts.as_slice() {
        ["exp"] => MarginTransform::Exp,
        ["cube"] => MarginTransform::Cube,
        ["sinh"] => MarginTransform::Sinh,
        ["affine", a, b] => MarginTransform::Affine { scale: num(FLAG, a)?, shift: num(FLAG, b)? },
        _ => return Err(usage(FLAG, format!("unknown margin '{s}' (exp, cube, sinh, affine:SCALE:SHIFT)"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists() {
        assert_eq!(times("--n", "2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(times("--n", "7,3").unwrap(), vec![7, 3]);
        assert!(times("--n", "4..2").is_err());
    }

    #[test]
    fn grids_do_not_accumulate_rounding() {
        let g = points("--x", "-1:1:0.1").unwrap();
        assert_eq!(g.len(), 21);
        assert!((g[20] - 1.0).abs() < 1e-12);
        assert_eq!(points("--x", "0.5,2").unwrap(), vec![0.5, 2.0]);
    }

    #[test]
    fn delta_maps_accept_infinity() {
        let d = deltas("--deltas", "1:0.5,2:inf").unwrap();
        assert_eq!(d[&1], 0.5);
        assert!(d[&2].is_infinite());
    }

    #[test]
    fn jitter_keeps_unit_diagonal() {
        let m = jitter(CorrelationModel::ar1(0.5).unwrap(), 4, Some(0.1)).unwrap();
        let r = m.matrix(4).unwrap();
        assert!((r.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((r.get(0, 1) - 0.5 / 1.1).abs() < 1e-15);
    }
}
