//! Input parsing and JSON encoding of the core types.
//!
//! Parsed inputs are normalized into JSON values and embedded in artifacts, so
//! a run can be reproduced from its artifact alone.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use tchak_core::frames::FrameFamily;
use tchak_core::systems::Entries;
use tchak_core::{DiscreteMeasure, Field, FunctionSystem, MomentVector, PointList, QuadratureRule, WeightClass, Weights, C64};

/// `{family, n, params}` description of a function system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub family: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl SystemSpec {
    fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| anyhow!("family '{}' needs a size field 'n'", self.family))
    }

    fn f64_param(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| anyhow!("params.{key}: expected a number, got {v}")),
        }
    }

    fn bool_param(&self, key: &str, default: bool) -> Result<bool> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_bool().ok_or_else(|| anyhow!("params.{key}: expected true or false, got {v}")),
        }
    }

    fn int_param(&self, key: &str, default: i64) -> Result<i64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_i64().ok_or_else(|| anyhow!("params.{key}: expected an integer, got {v}")),
        }
    }

    fn required(&self, key: &str) -> Result<&Value> {
        self.params.get(key).ok_or_else(|| anyhow!("family '{}' needs params.{key}", self.family))
    }

    pub fn build(&self) -> Result<FunctionSystem> {
        let sys = match self.family.as_str() {
            "monomial" => FunctionSystem::monomial(self.n()?),
            "powers" => {
                let e: Vec<i32> = serde_json::from_value(self.required("exponents")?.clone())
                    .context("params.exponents: expected a list of integers")?;
                FunctionSystem::powers(e)
            }
            "legendre" => FunctionSystem::legendre(self.n()?, self.bool_param("normalized", false)?),
            "chebyshev" => FunctionSystem::chebyshev(self.n()?),
            "fourier" => FunctionSystem::fourier(self.int_param("k_min", 0)?, self.n()?, self.f64_param("period", 1.0)?),
            "real_trig" => FunctionSystem::real_trig(
                self.n()?,
                self.f64_param("period", 1.0)?,
                self.bool_param("normalized", false)?,
            ),
            "piecewise" => {
                let m = self.int_param("m", 1)?;
                let m = usize::try_from(m).map_err(|_| anyhow!("params.m: must be non-negative"))?;
                FunctionSystem::piecewise(m, self.n()?)?
            }
            "gaussian" => {
                let centers = points_from_value(self.required("centers")?).context("params.centers")?;
                FunctionSystem::gaussian_features(centers, self.f64_param("length_scale", 1.0)?)
            }
            "matrix" => match matrix_from_value(self.required("rows")?).context("params.rows")? {
                Entries::Real(m) => FunctionSystem::matrix_real(m),
                Entries::Complex(m) => FunctionSystem::matrix_complex(m),
            },
            "constant" => FunctionSystem::constant(self.f64_param("value", 1.0)?),
            other => bail!(
                "unknown family '{other}' (expected monomial, powers, legendre, chebyshev, fourier, \
                 real_trig, piecewise, gaussian, matrix or constant)"
            ),
        };
        if let Some(n) = self.n {
            if n != sys.len() {
                bail!("family '{}' has {} functions but n = {n}", self.family, sys.len());
            }
        }
        Ok(sys)
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("system description serializes")
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).context("invalid system description")
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Parses a JSON document, naming the file and position on failure.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column())
    })
}

pub fn read_system(path: &Path) -> Result<SystemSpec> {
    let spec: SystemSpec = read_json(path)?;
    spec.build().with_context(|| format!("{}: invalid system", path.display()))?;
    Ok(spec)
}

/// Parses a number or a complex value such as `1.5`, `2i`, `-1e-3+0.5i` or `3-2j`.
pub fn parse_scalar(cell: &str) -> Option<C64> {
    let s = cell.trim();
    if s.is_empty() {
        return None;
    }
    if let Ok(x) = s.parse::<f64>() {
        return Some(C64::new(x, 0.0));
    }
    let body = s.strip_suffix('i').or_else(|| s.strip_suffix('j'))?;
    // Split before the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let re = body[..k].trim().parse::<f64>().ok()?;
            let im_txt = body[k..].trim();
            let im = match im_txt {
                "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(C64::new(re, im))
        }
        None => {
            let im = match body.trim() {
                "" | "+" => 1.0,
                "-" => -1.0,
                t => t.parse::<f64>().ok()?,
            };
            Some(C64::new(0.0, im))
        }
    }
}

/// Numeric CSV rows. A first row that does not parse is taken as a header.
/// Cells must be numbers unless `complex` is set.
fn read_csv_rows(path: &Path, complex: bool) -> Result<Vec<Vec<C64>>> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        let mut bad = None;
        for (f, cell) in record.iter().enumerate() {
            let parsed = if complex { parse_scalar(cell) } else { cell.parse::<f64>().ok().map(|x| C64::new(x, 0.0)) };
            match parsed {
                Some(z) if z.re.is_finite() && z.im.is_finite() => row.push(z),
                _ => {
                    bad = Some((f, cell.to_string()));
                    break;
                }
            }
        }
        if let Some((f, cell)) = bad {
            if rows.is_empty() && k == 0 {
                continue;
            }
            bail!("{}: line {line}, field {}: invalid number '{cell}'", path.display(), f + 1);
        }
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                bail!("{}: line {line}: {} fields, expected {first}", path.display(), row.len());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(rows)
}

fn real_rows(rows: Vec<Vec<C64>>) -> Vec<Vec<f64>> {
    rows.into_iter().map(|r| r.into_iter().map(|z| z.re).collect()).collect()
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// `{points, weights}` form of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl MeasureDoc {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        Ok(DiscreteMeasure::new(PointList::from_rows(&self.points)?, self.weights.clone())?)
    }

    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        Self { points: point_rows(mu.points()), weights: mu.weights().to_vec() }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("measure serializes")
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).context("invalid embedded measure")
    }
}

#[derive(Deserialize)]
struct LooseMeasure {
    points: Value,
    weights: Vec<f64>,
}

/// Reads a measure from CSV (coordinates, then the weight in the last column;
/// a single column means weights on the index points `0..M`) or JSON.
pub fn read_measure(path: &Path) -> Result<MeasureDoc> {
    let doc = if is_json(path) {
        let loose: LooseMeasure = read_json(path)?;
        let points = points_from_value(&loose.points).with_context(|| format!("{}: points", path.display()))?;
        MeasureDoc { points: point_rows(&points), weights: loose.weights }
    } else {
        let rows = real_rows(read_csv_rows(path, false)?);
        let weights: Vec<f64> = rows.iter().map(|r| r[r.len() - 1]).collect();
        let points = if rows[0].len() == 1 {
            (0..rows.len()).map(|i| vec![i as f64]).collect()
        } else {
            rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect()
        };
        MeasureDoc { points, weights }
    };
    doc.build().with_context(|| format!("{}: invalid measure", path.display()))?;
    Ok(doc)
}

/// Reads one value per row (first column), e.g. measure weights on a family.
pub fn read_column(path: &Path) -> Result<Vec<f64>> {
    Ok(real_rows(read_csv_rows(path, false)?).into_iter().map(|r| r[0]).collect())
}

/// Reads a matrix from CSV; entries may be complex (`a+bi`).
pub fn read_matrix(path: &Path) -> Result<Entries> {
    let rows = read_csv_rows(path, true)?;
    let (r, c) = (rows.len(), rows[0].len());
    let complex = rows.iter().flatten().any(|z| z.im != 0.0);
    Ok(if complex {
        Entries::Complex(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    } else {
        Entries::Real(DMatrix::from_fn(r, c, |i, j| rows[i][j].re))
    })
}

/// Reads a vector family: one vector per CSV row.
pub fn read_family(path: &Path) -> Result<Entries> {
    let m = read_matrix(path)?;
    Ok(match m {
        Entries::Real(m) => Entries::Real(m.transpose()),
        Entries::Complex(m) => Entries::Complex(m.transpose()),
    })
}

pub fn family_from_entries(v: &Entries) -> Result<FrameFamily> {
    Ok(FrameFamily::from_entries(v.clone())?)
}

pub fn point_rows(p: &PointList) -> Vec<Vec<f64>> {
    p.iter().map(<[f64]>::to_vec).collect()
}

/// Points as `[[x, y], …]` or, for one dimension, `[x, …]`.
pub fn points_from_value(v: &Value) -> Result<PointList> {
    let arr = v.as_array().ok_or_else(|| anyhow!("expected a list of points"))?;
    if arr.iter().all(Value::is_number) {
        let xs: Vec<f64> = arr.iter().map(|x| x.as_f64().expect("number")).collect();
        return Ok(PointList::from_scalars(&xs));
    }
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).context("expected numbers or lists of numbers")?;
    Ok(PointList::from_rows(&rows)?)
}

pub fn complex_value(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn scalar_from_value(v: &Value) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::new(x, 0.0));
    }
    let pair: [f64; 2] = serde_json::from_value(v.clone()).context("expected a number or an [re, im] pair")?;
    Ok(C64::new(pair[0], pair[1]))
}

/// Row-major nested lists; complex entries as `[re, im]`.
pub fn matrix_value(m: &Entries) -> Value {
    match m {
        Entries::Real(a) => Value::Array((0..a.nrows()).map(|i| json!(a.row(i).iter().collect::<Vec<_>>())).collect()),
        Entries::Complex(a) => Value::Array(
            (0..a.nrows()).map(|i| Value::Array(a.row(i).iter().map(|&z| complex_value(z)).collect())).collect(),
        ),
    }
}

pub fn matrix_from_value(v: &Value) -> Result<Entries> {
    let rows = v.as_array().ok_or_else(|| anyhow!("expected a list of rows"))?;
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    let mut complex = false;
    for (i, row) in rows.iter().enumerate() {
        let cells = row.as_array().ok_or_else(|| anyhow!("row {i}: expected a list"))?;
        let mut r = Vec::with_capacity(cells.len());
        for (j, c) in cells.iter().enumerate() {
            complex |= c.is_array();
            r.push(scalar_from_value(c).with_context(|| format!("row {i}, entry {j}"))?);
        }
        if out.first().is_some_and(|f| f.len() != r.len()) {
            bail!("row {i}: {} entries, expected {}", r.len(), out[0].len());
        }
        out.push(r);
    }
    let (nr, nc) = (out.len(), out.first().map_or(0, Vec::len));
    Ok(if complex {
        Entries::Complex(DMatrix::from_fn(nr, nc, |i, j| out[i][j]))
    } else {
        Entries::Real(DMatrix::from_fn(nr, nc, |i, j| out[i][j].re))
    })
}

pub fn weights_value(w: &Weights) -> Value {
    match w {
        Weights::Real(w) => json!(w),
        Weights::Complex(w) => Value::Array(w.iter().map(|&z| complex_value(z)).collect()),
    }
}

pub fn moments_value(m: &MomentVector) -> Value {
    match m {
        MomentVector::Real(v) => json!(v),
        MomentVector::Complex(v) => Value::Array(v.iter().map(|&z| complex_value(z)).collect()),
    }
}

pub fn moments_from_value(v: &Value, field: Field) -> Result<MomentVector> {
    let arr = v.as_array().ok_or_else(|| anyhow!("expected a list of values"))?;
    let vals: Vec<C64> = arr.iter().map(scalar_from_value).collect::<Result<_>>()?;
    Ok(match field {
        Field::Complex => MomentVector::Complex(vals),
        Field::Real if vals.iter().all(|z| z.im == 0.0) => MomentVector::Real(vals.iter().map(|z| z.re).collect()),
        Field::Real => MomentVector::Complex(vals),
    })
}

/// A quadrature rule with its diagnostics against `target`.
pub fn rule_value(rule: &QuadratureRule, target: &MomentVector) -> Value {
    json!({
        "node_ids": rule.node_ids,
        "nodes": point_rows(&rule.nodes),
        "weights": weights_value(&rule.weights),
        "weight_class": rule.weight_class.as_str(),
        "residual": rule.residual,
        "relative_residual": rule.relative_residual(target),
        "node_bound": rule.node_bound_used,
        "total_weight": complex_value(rule.total_weight()),
        "target": moments_value(target),
    })
}

pub fn rule_from_value(v: &Value) -> Result<QuadratureRule> {
    let get = |k: &str| v.get(k).ok_or_else(|| anyhow!("rule is missing '{k}'"));
    let node_ids: Vec<usize> = serde_json::from_value(get("node_ids")?.clone()).context("node_ids")?;
    let nodes = points_from_value(get("nodes")?).context("nodes")?;
    let weight_class = match get("weight_class")?.as_str() {
        Some("general") => WeightClass::General,
        Some("real") => WeightClass::Real,
        Some("nonneg") => WeightClass::Nonneg,
        other => bail!("unknown weight_class {other:?}"),
    };
    let wv = get("weights")?.as_array().ok_or_else(|| anyhow!("weights: expected a list"))?;
    let weights = if wv.iter().any(Value::is_array) {
        Weights::Complex(wv.iter().map(scalar_from_value).collect::<Result<_>>()?)
    } else {
        Weights::Real(serde_json::from_value(get("weights")?.clone()).context("weights")?)
    };
    let residual = get("residual")?.as_f64().ok_or_else(|| anyhow!("residual: expected a number"))?;
    let node_bound_used = get("node_bound")?.as_u64().ok_or_else(|| anyhow!("node_bound: expected an integer"))? as usize;
    if node_ids.len() != nodes.len() || nodes.len() != weights.len() {
        bail!("rule has {} ids, {} nodes and {} weights", node_ids.len(), nodes.len(), weights.len());
    }
    Ok(QuadratureRule { node_ids, nodes, weights, weight_class, residual, node_bound_used })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_cells() {
        assert_eq!(parse_scalar("1.5"), Some(C64::new(1.5, 0.0)));
        assert_eq!(parse_scalar("2i"), Some(C64::new(0.0, 2.0)));
        assert_eq!(parse_scalar("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_scalar("1e-3-2.5j"), Some(C64::new(1e-3, -2.5)));
        assert_eq!(parse_scalar("-1e+2+1e-2i"), Some(C64::new(-100.0, 0.01)));
        assert_eq!(parse_scalar("abc"), None);
    }

    #[test]
    fn matrix_value_round_trips() {
        let m = Entries::Complex(DMatrix::from_row_slice(1, 2, &[C64::new(0.1, -0.3), C64::new(1.0 / 3.0, 0.0)]));
        let v = matrix_value(&m);
        let text = serde_json::to_string(&v).unwrap();
        let back = matrix_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
