//! Function systems, their evaluation matrices, realification and ranks.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{Field, C64};

/// Points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList {
    dim: usize,
    coords: Vec<f64>,
}

impl PointList {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("point dimension must be positive".into()));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(1, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Dimension(format!(
                "point {bad} has {} coordinates, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(dim, rows.concat())
    }

    /// One-dimensional points.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self { dim: 1, coords: xs.to_vec() }
    }

    /// The index points `0, 1, …, m-1`, used by matrix-backed systems and frames.
    pub fn indices(m: usize) -> Self {
        Self { dim: 1, coords: (0..m).map(|i| i as f64).collect() }
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim: dim.max(1), coords: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn select(&self, ids: &[usize]) -> PointList {
        let mut coords = Vec::with_capacity(ids.len() * self.dim);
        for &i in ids {
            coords.extend_from_slice(self.get(i));
        }
        PointList { dim: self.dim, coords }
    }

    pub fn concat(&self, other: &PointList) -> Result<PointList> {
        if !self.is_empty() && !other.is_empty() && self.dim != other.dim {
            return Err(Error::Dimension("cannot concatenate point lists of different dimension".into()));
        }
        let dim = if self.is_empty() { other.dim } else { self.dim };
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointList { dim, coords })
    }
}

/// Function values at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Real(v) => v.len(),
            Values::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_complex(self) -> Vec<C64> {
        match self {
            Values::Real(v) => v.into_iter().map(|x| C64::new(x, 0.0)).collect(),
            Values::Complex(v) => v,
        }
    }
}

/// Descriptive label of a system's construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyTag {
    Monomial,
    Legendre,
    Chebyshev,
    Trig,
    Piecewise,
    KernelFeature,
    MatrixBacked,
    Custom,
    Product,
    Power,
    Composite,
}

impl FamilyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyTag::Monomial => "monomial",
            FamilyTag::Legendre => "legendre",
            FamilyTag::Chebyshev => "chebyshev",
            FamilyTag::Trig => "trig",
            FamilyTag::Piecewise => "piecewise",
            FamilyTag::KernelFeature => "kernel-feature",
            FamilyTag::MatrixBacked => "matrix-backed",
            FamilyTag::Custom => "custom",
            FamilyTag::Product => "product",
            FamilyTag::Power => "power",
            FamilyTag::Composite => "composite",
        }
    }
}

type RealFn = dyn Fn(&[f64]) -> core::result::Result<Vec<f64>, String> + Send + Sync;
type ComplexFn = dyn Fn(&[f64]) -> core::result::Result<Vec<C64>, String> + Send + Sync;

pub(crate) enum Family {
    Powers(Vec<i32>),
    Legendre { normalized: bool },
    Chebyshev,
    Fourier { k_min: i64, period: f64 },
    RealTrig { period: f64, normalized: bool },
    Piecewise { m: usize },
    Gaussian { centers: PointList, length_scale: f64 },
    Matrix(Entries),
    Constant(f64),
    CustomReal(Box<RealFn>),
    CustomComplex(Box<ComplexFn>),
    Concat(Vec<FunctionSystem>),
    Select(FunctionSystem, Vec<usize>),
    /// Products `φ_k · conj(φ_l)`; real bases keep only `k ≤ l`.
    Product(FunctionSystem),
    /// Monomials `φ^κ` for the listed exponent vectors.
    Power(FunctionSystem, Vec<Vec<u32>>),
}

/// A finite list of functions `φ_1, …, φ_n` on a point domain.
///
/// Evaluation is deterministic and the system is cheap to clone and share
/// across threads.
#[derive(Clone)]
pub struct FunctionSystem {
    family: Arc<Family>,
    field: Field,
    n: usize,
    tag: FamilyTag,
}

impl fmt::Debug for FunctionSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSystem")
            .field("family", &self.tag.as_str())
            .field("field", &self.field)
            .field("n", &self.n)
            .finish()
    }
}

impl FunctionSystem {
    pub(crate) fn from_family(family: Family, field: Field, n: usize, tag: FamilyTag) -> Self {
        Self { family: Arc::new(family), field, n, tag }
    }

    /// `1, x, …, x^{n-1}` on the real line.
    pub fn monomial(n: usize) -> Self {
        let exps = (0..n as i32).collect();
        Self::from_family(Family::Powers(exps), Field::Real, n, FamilyTag::Monomial)
    }

    /// `x^k` for each listed integer exponent; negative exponents are undefined at 0.
    pub fn powers(exponents: Vec<i32>) -> Self {
        let n = exponents.len();
        Self::from_family(Family::Powers(exponents), Field::Real, n, FamilyTag::Monomial)
    }

    /// Legendre polynomials `P_0, …, P_{n-1}`. With `normalized`, scaled by
    /// `sqrt(2k+1)` so they are orthonormal for the uniform probability on `[-1, 1]`.
    pub fn legendre(n: usize, normalized: bool) -> Self {
        Self::from_family(Family::Legendre { normalized }, Field::Real, n, FamilyTag::Legendre)
    }

    /// Chebyshev polynomials of the first kind `T_0, …, T_{n-1}`.
    pub fn chebyshev(n: usize) -> Self {
        Self::from_family(Family::Chebyshev, Field::Real, n, FamilyTag::Chebyshev)
    }

    /// `exp(2πi k x / period)` for `k = k_min, …, k_min + n - 1`.
    pub fn fourier(k_min: i64, n: usize, period: f64) -> Self {
        Self::from_family(Family::Fourier { k_min, period }, Field::Complex, n, FamilyTag::Trig)
    }

    /// `1, cos(2πx/T), sin(2πx/T), cos(4πx/T), …` truncated to `n` functions;
    /// `normalized` multiplies the non-constant terms by `sqrt(2)`.
    pub fn real_trig(n: usize, period: f64, normalized: bool) -> Self {
        Self::from_family(Family::RealTrig { period, normalized }, Field::Real, n, FamilyTag::Trig)
    }

    /// The space `V_{m,n}`: indicators of `(j-1, j)` for `j ≤ m`, then the
    /// centered linear pieces `(x - k + 1/2)·χ_{(k-1,k)}` for `m < k ≤ n`.
    pub fn piecewise(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("piecewise split m = {m} must lie in 1..={n}")));
        }
        Ok(Self::from_family(Family::Piecewise { m }, Field::Real, n, FamilyTag::Piecewise))
    }

    /// Gaussian kernel features `exp(-|x - c_j|² / (2ℓ²))`.
    pub fn gaussian_features(centers: PointList, length_scale: f64) -> Self {
        let n = centers.len();
        Self::from_family(Family::Gaussian { centers, length_scale }, Field::Real, n, FamilyTag::KernelFeature)
    }

    /// Rows are functions, columns are the index points `0, …, M-1`.
    pub fn matrix_real(entries: DMatrix<f64>) -> Self {
        let n = entries.nrows();
        Self::from_family(Family::Matrix(Entries::Real(entries)), Field::Real, n, FamilyTag::MatrixBacked)
    }

    pub fn matrix_complex(entries: DMatrix<C64>) -> Self {
        let n = entries.nrows();
        Self::from_family(Family::Matrix(Entries::Complex(entries)), Field::Complex, n, FamilyTag::MatrixBacked)
    }

    /// The single constant function.
    pub fn constant(value: f64) -> Self {
        Self::from_family(Family::Constant(value), Field::Real, 1, FamilyTag::Monomial)
    }

    pub fn custom_real<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> core::result::Result<Vec<f64>, String> + Send + Sync + 'static,
    {
        Self::from_family(Family::CustomReal(Box::new(f)), Field::Real, n, FamilyTag::Custom)
    }

    pub fn custom_complex<F>(n: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> core::result::Result<Vec<C64>, String> + Send + Sync + 'static,
    {
        Self::from_family(Family::CustomComplex(Box::new(f)), Field::Complex, n, FamilyTag::Custom)
    }

    /// Direct sum: the functions of every part, in order.
    pub fn concat(parts: Vec<FunctionSystem>) -> Self {
        let n = parts.iter().map(|s| s.n).sum();
        let field = parts.iter().fold(Field::Real, |f, s| f.join(s.field));
        Self::from_family(Family::Concat(parts), field, n, FamilyTag::Composite)
    }

    /// This system with the constant function adjoined last.
    pub fn with_constant(&self) -> Self {
        Self::concat(alloc::vec![self.clone(), Self::constant(1.0)])
    }

    /// The listed functions of this system.
    pub fn select(&self, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidArgument(format!("function index {bad} out of range 0..{}", self.n)));
        }
        let n = indices.len();
        Ok(Self::from_family(Family::Select(self.clone(), indices), self.field, n, FamilyTag::Composite))
    }

    /// The first `k` functions.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        self.select((0..k).collect())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn family_tag(&self) -> FamilyTag {
        self.tag
    }

    /// Evaluates `φ(x)`; the error string names the domain violation.
    pub fn eval(&self, x: &[f64]) -> core::result::Result<Values, String> {
        let v = self.eval_raw(x)?;
        debug_assert_eq!(v.len(), self.n);
        let finite = match &v {
            Values::Real(r) => r.iter().all(|a| a.is_finite()),
            Values::Complex(c) => c.iter().all(|a| a.re.is_finite() && a.im.is_finite()),
        };
        if !finite {
            return Err("non-finite function value".to_string());
        }
        Ok(v)
    }

    fn eval_raw(&self, x: &[f64]) -> core::result::Result<Values, String> {
        let n = self.n;
        match &*self.family {
            Family::Powers(exps) => {
                let t = scalar_arg(x)?;
                let mut out = Vec::with_capacity(n);
                for &k in exps {
                    if k < 0 && t == 0.0 {
                        return Err(format!("x^{k} is undefined at 0"));
                    }
                    out.push(t.powi(k));
                }
                Ok(Values::Real(out))
            }
            Family::Legendre { normalized } => {
                let t = scalar_arg(x)?;
                let mut out = three_term(n, t, |k, t, p1, p0| {
                    let kf = k as f64;
                    ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0)
                });
                if *normalized {
                    for (k, v) in out.iter_mut().enumerate() {
                        *v *= (2.0 * k as f64 + 1.0).sqrt();
                    }
                }
                Ok(Values::Real(out))
            }
            Family::Chebyshev => {
                let t = scalar_arg(x)?;
                Ok(Values::Real(three_term(n, t, |_, t, p1, p0| 2.0 * t * p1 - p0)))
            }
            Family::Fourier { k_min, period } => {
                let t = scalar_arg(x)?;
                let out = (0..n as i64)
                    .map(|j| {
                        let theta = 2.0 * PI * ((k_min + j) as f64) * t / period;
                        C64::new(theta.cos(), theta.sin())
                    })
                    .collect();
                Ok(Values::Complex(out))
            }
            Family::RealTrig { period, normalized } => {
                let t = scalar_arg(x)?;
                let scale = if *normalized { 2.0f64.sqrt() } else { 1.0 };
                let out = (0..n)
                    .map(|j| {
                        if j == 0 {
                            1.0
                        } else {
                            let k = j.div_ceil(2) as f64;
                            let theta = 2.0 * PI * k * t / period;
                            scale * if j % 2 == 1 { theta.cos() } else { theta.sin() }
                        }
                    })
                    .collect();
                Ok(Values::Real(out))
            }
            Family::Piecewise { m } => {
                let t = scalar_arg(x)?;
                let out = (1..=n)
                    .map(|j| {
                        let jf = j as f64;
                        let inside = t > jf - 1.0 && t < jf;
                        match (inside, j <= *m) {
                            (false, _) => 0.0,
                            (true, true) => 1.0,
                            (true, false) => t - jf + 0.5,
                        }
                    })
                    .collect();
                Ok(Values::Real(out))
            }
            Family::Gaussian { centers, length_scale } => {
                if x.len() != centers.dim() {
                    return Err(format!("expected a {}-d point, got {}-d", centers.dim(), x.len()));
                }
                let denom = 2.0 * length_scale * length_scale;
                let out = centers
                    .iter()
                    .map(|c| {
                        let d2: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                        (-d2 / denom).exp()
                    })
                    .collect();
                Ok(Values::Real(out))
            }
            Family::Matrix(entries) => {
                let t = scalar_arg(x)?;
                let cols = entries.ncols();
                if t < 0.0 || t.fract() != 0.0 || t >= cols as f64 {
                    return Err(format!("matrix-backed system has no stored point {t}"));
                }
                let j = t as usize;
                Ok(match entries {
                    Entries::Real(m) => Values::Real(m.column(j).iter().copied().collect()),
                    Entries::Complex(m) => Values::Complex(m.column(j).iter().copied().collect()),
                })
            }
            Family::Constant(c) => Ok(Values::Real(alloc::vec![*c])),
            Family::CustomReal(f) => {
                let v = f(x)?;
                check_len(v.len(), n)?;
                Ok(Values::Real(v))
            }
            Family::CustomComplex(f) => {
                let v = f(x)?;
                check_len(v.len(), n)?;
                Ok(Values::Complex(v))
            }
            Family::Concat(parts) => {
                if self.field == Field::Real {
                    let mut out = Vec::with_capacity(n);
                    for p in parts {
                        match p.eval(x)? {
                            Values::Real(v) => out.extend(v),
                            Values::Complex(_) => unreachable!("real concat has real parts"),
                        }
                    }
                    Ok(Values::Real(out))
                } else {
                    let mut out = Vec::with_capacity(n);
                    for p in parts {
                        out.extend(p.eval(x)?.into_complex());
                    }
                    Ok(Values::Complex(out))
                }
            }
            Family::Select(base, idx) => Ok(match base.eval(x)? {
                Values::Real(v) => Values::Real(idx.iter().map(|&i| v[i]).collect()),
                Values::Complex(v) => Values::Complex(idx.iter().map(|&i| v[i]).collect()),
            }),
            Family::Product(base) => Ok(match base.eval(x)? {
                Values::Real(v) => {
                    let mut out = Vec::with_capacity(n);
                    for k in 0..v.len() {
                        for l in k..v.len() {
                            out.push(v[k] * v[l]);
                        }
                    }
                    Values::Real(out)
                }
                Values::Complex(v) => {
                    let mut out = Vec::with_capacity(n);
                    for a in &v {
                        for b in &v {
                            out.push(a * b.conj());
                        }
                    }
                    Values::Complex(out)
                }
            }),
            Family::Power(base, exps) => Ok(match base.eval(x)? {
                Values::Real(v) => Values::Real(
                    exps.iter()
                        .map(|e| e.iter().zip(&v).map(|(&k, &b)| b.powi(k as i32)).product())
                        .collect(),
                ),
                Values::Complex(v) => Values::Complex(
                    exps.iter()
                        .map(|e| {
                            e.iter().zip(&v).fold(C64::new(1.0, 0.0), |acc, (&k, &b)| acc * b.powu(k))
                        })
                        .collect(),
                ),
            }),
        }
    }
}

fn scalar_arg(x: &[f64]) -> core::result::Result<f64, String> {
    match x {
        [t] => Ok(*t),
        _ => Err(format!("expected a 1-d point, got {}-d", x.len())),
    }
}

fn check_len(got: usize, want: usize) -> core::result::Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("evaluator returned {got} values, expected {want}"))
    }
}

fn three_term(n: usize, t: f64, next: impl Fn(usize, f64, f64, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        out.push(1.0);
    }
    if n > 1 {
        out.push(t);
    }
    for k in 1..n.saturating_sub(1) {
        let v = next(k, t, out[k], out[k - 1]);
        out.push(v);
    }
    out
}

/// Matrix storage over either field.
#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl Entries {
    pub fn nrows(&self) -> usize {
        match self {
            Entries::Real(m) => m.nrows(),
            Entries::Complex(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Entries::Real(m) => m.ncols(),
            Entries::Complex(m) => m.ncols(),
        }
    }

    pub fn field(&self) -> Field {
        match self {
            Entries::Real(_) => Field::Real,
            Entries::Complex(_) => Field::Complex,
        }
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match self {
            Entries::Real(m) => m.map(|x| C64::new(x, 0.0)),
            Entries::Complex(m) => m.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Entries {
        match self {
            Entries::Real(m) => Entries::Real(m.select_columns(cols)),
            Entries::Complex(m) => Entries::Complex(m.select_columns(cols)),
        }
    }
}

/// `n × M` matrix whose column `j` is `φ(x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationMatrix {
    pub entries: Entries,
    pub point_ids: Vec<usize>,
}

impl EvaluationMatrix {
    pub fn real(m: DMatrix<f64>) -> Self {
        let point_ids = (0..m.ncols()).collect();
        Self { entries: Entries::Real(m), point_ids }
    }

    pub fn complex(m: DMatrix<C64>) -> Self {
        let point_ids = (0..m.ncols()).collect();
        Self { entries: Entries::Complex(m), point_ids }
    }

    pub fn field(&self) -> Field {
        self.entries.field()
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    /// The real matrix, available for real-field matrices only.
    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match &self.entries {
            Entries::Real(m) => Some(m),
            Entries::Complex(_) => None,
        }
    }

    /// Columns at the given positions (not point ids).
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            entries: self.entries.select_columns(cols),
            point_ids: cols.iter().map(|&c| self.point_ids[c]).collect(),
        }
    }
}

/// Evaluates every function at every point.
pub fn evaluate(system: &FunctionSystem, points: &PointList) -> Result<EvaluationMatrix> {
    let n = system.len();
    let m = points.len();
    let point_ids = (0..m).collect();
    let entries = match system.field() {
        Field::Real => {
            let mut out = DMatrix::<f64>::zeros(n, m);
            for (j, x) in points.iter().enumerate() {
                match system.eval(x).map_err(|reason| Error::Evaluation { point: j, reason })? {
                    Values::Real(v) => out.column_mut(j).copy_from_slice(&v),
                    Values::Complex(_) => unreachable!("real system returned complex values"),
                }
            }
            Entries::Real(out)
        }
        Field::Complex => {
            let mut out = DMatrix::<C64>::zeros(n, m);
            for (j, x) in points.iter().enumerate() {
                let v = system.eval(x).map_err(|reason| Error::Evaluation { point: j, reason })?;
                out.column_mut(j).copy_from_slice(&v.into_complex());
            }
            Entries::Complex(out)
        }
    };
    Ok(EvaluationMatrix { entries, point_ids })
}

/// Stacks real and imaginary parts: rows `(Re φ_1, Im φ_1, …, Re φ_n, Im φ_n)`.
/// Real input is returned unchanged.
pub fn realify(m: &EvaluationMatrix) -> EvaluationMatrix {
    match &m.entries {
        Entries::Real(_) => m.clone(),
        Entries::Complex(c) => {
            let (n, cols) = c.shape();
            let out = DMatrix::from_fn(2 * n, cols, |i, j| {
                let z = c[(i / 2, j)];
                if i % 2 == 0 {
                    z.re
                } else {
                    z.im
                }
            });
            EvaluationMatrix { entries: Entries::Real(out), point_ids: m.point_ids.clone() }
        }
    }
}

/// Realifies a complex vector the same way as [`realify`] stacks rows.
pub fn realify_vector(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Number of singular values above `rel_tol · σ_max`; 0 for the zero matrix.
pub fn numerical_rank(m: &EvaluationMatrix, rel_tol: f64) -> usize {
    match &m.entries {
        Entries::Real(r) => linalg::numerical_rank(r, rel_tol),
        Entries::Complex(c) => linalg::numerical_rank(c, rel_tol),
    }
}

/// Real dimension of the span of the real parts, detected on the supplied
/// candidate points. Candidate points that are too sparse under-report it.
pub fn effective_real_dimension(system: &FunctionSystem, candidates: &PointList, rel_tol: f64) -> Result<usize> {
    let m = evaluate(system, candidates)?;
    let cap = match system.field() {
        Field::Real => system.len(),
        Field::Complex => 2 * system.len(),
    };
    Ok(numerical_rank(&realify(&m), rel_tol).min(cap))
}

/// Point ids of `rank(m)` columns chosen by greedy column pivoting; the
/// corresponding submatrix has full column rank.
pub fn select_independent_points(m: &EvaluationMatrix, rel_tol: f64) -> Vec<usize> {
    let rank = numerical_rank(m, rel_tol);
    let order: Vec<usize> = (0..m.ncols()).collect();
    let cols = match &m.entries {
        Entries::Real(r) => linalg::pivoted_columns(r, rank, &order),
        Entries::Complex(c) => linalg::pivoted_columns(c, rank, &order),
    };
    cols.into_iter().map(|c| m.point_ids[c]).collect()
}
