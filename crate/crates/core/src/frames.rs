//! Finite frames: frame operators, Parseval scalability, tuning to a target
//! operator, and operator-preserving weighted subsampling.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::caratheodory::{self, ReduceOptions};
use crate::cones::{cone_membership_matrix, FeasibilityResult, Verdict};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::DiscreteMeasure;
use crate::scalar::{Field, Scalar, C64};
use crate::systems::{evaluate, Entries, EvaluationMatrix, FunctionSystem, PointList};

/// Vectors `φ_x ∈ K^n` indexed by the points of a finite domain.
#[derive(Debug, Clone)]
pub struct FrameFamily {
    system: FunctionSystem,
    domain: PointList,
    vectors: EvaluationMatrix,
}

impl FrameFamily {
    /// The vectors `φ(x)` for every `x` in `domain`.
    pub fn new(system: FunctionSystem, domain: PointList) -> Result<Self> {
        let vectors = evaluate(&system, &domain)?;
        let nonzero = match &vectors.entries {
            Entries::Real(m) => m.iter().any(|&x| x != 0.0),
            Entries::Complex(m) => m.iter().any(|z| z.re != 0.0 || z.im != 0.0),
        };
        if !nonzero {
            return Err(Error::InvalidArgument("a frame family needs at least one nonzero vector".into()));
        }
        Ok(Self { system, domain, vectors })
    }

    /// Columns of `v` as the vectors, indexed `0..M`.
    pub fn from_real(v: DMatrix<f64>) -> Result<Self> {
        let m = v.ncols();
        Self::new(FunctionSystem::matrix_real(v), PointList::indices(m))
    }

    pub fn from_complex(v: DMatrix<C64>) -> Result<Self> {
        let m = v.ncols();
        Self::new(FunctionSystem::matrix_complex(v), PointList::indices(m))
    }

    pub fn from_entries(v: Entries) -> Result<Self> {
        match v {
            Entries::Real(m) => Self::from_real(m),
            Entries::Complex(m) => Self::from_complex(m),
        }
    }

    pub fn n(&self) -> usize {
        self.system.len()
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn field(&self) -> Field {
        self.system.field()
    }

    pub fn system(&self) -> &FunctionSystem {
        &self.system
    }

    pub fn domain(&self) -> &PointList {
        &self.domain
    }

    /// `n × M`; column `j` is the vector at domain point `j`.
    pub fn vectors(&self) -> &Entries {
        &self.vectors.entries
    }

    /// A measure on the domain points with the given weights.
    pub fn measure(&self, weights: Vec<f64>) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.domain.clone(), weights)
    }

    /// A measure supported on the listed domain points.
    pub fn measure_on(&self, ids: &[usize], weights: Vec<f64>) -> Result<DiscreteMeasure> {
        DiscreteMeasure::new(self.domain.select(ids), weights)
    }

    /// Every vector multiplied by the matrix `t` (`n × n`).
    pub fn transformed(&self, t: &Entries) -> Result<FrameFamily> {
        let out = match (t, &self.vectors.entries) {
            (Entries::Real(t), Entries::Real(v)) => Entries::Real(t * v),
            (t, v) => Entries::Complex(t.to_complex() * v.to_complex()),
        };
        let fam = FrameFamily::from_entries(out)?;
        Ok(FrameFamily { system: fam.system, domain: self.domain.clone(), vectors: fam.vectors })
    }
}

/// `S = Σ μ_j φ_j φ_j*` with its extreme eigenvalues (the optimal frame bounds).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOperator {
    pub matrix: Entries,
    pub eigen_bounds: (f64, f64),
}

impl FrameOperator {
    /// `‖S − other‖_F`.
    pub fn distance(&self, other: &Entries) -> f64 {
        (self.matrix.to_complex() - other.to_complex()).norm()
    }

    pub fn distance_to_identity(&self) -> f64 {
        let n = self.matrix.nrows();
        self.distance(&Entries::Real(DMatrix::identity(n, n)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.to_complex().norm()
    }
}

pub fn frame_operator(family: &FrameFamily, mu: &DiscreteMeasure) -> Result<FrameOperator> {
    let v = evaluate(family.system(), mu.points())?;
    Ok(operator_from(&v.entries, mu.weights()))
}

pub(crate) fn operator_from(v: &Entries, w: &[f64]) -> FrameOperator {
    match v {
        Entries::Real(v) => {
            let s = weighted_outer(v, w);
            let b = bounds(&s);
            FrameOperator { matrix: Entries::Real(s), eigen_bounds: b }
        }
        Entries::Complex(v) => {
            let s = weighted_outer(v, w);
            let b = bounds(&s);
            FrameOperator { matrix: Entries::Complex(s), eigen_bounds: b }
        }
    }
}

fn weighted_outer<T: Scalar>(v: &DMatrix<T>, w: &[f64]) -> DMatrix<T> {
    let n = v.nrows();
    let mut s = DMatrix::<T>::zeros(n, n);
    for (j, &wj) in w.iter().enumerate() {
        if wj != 0.0 {
            let c = v.column(j);
            s.gerc(T::from_real(wj), &c, &c, T::one());
        }
    }
    // Exact Hermitian symmetry.
    let t = s.adjoint();
    (s + t) * T::from_real(0.5)
}

fn bounds<T: Scalar>(s: &DMatrix<T>) -> (f64, f64) {
    let (vals, _) = linalg::hermitian_eig(s);
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if vals.is_empty() {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Length of [`gram_vectorize`] output: `n(n+1)/2` real, `n²` complex.
pub fn gram_dimension(n: usize, field: Field) -> usize {
    match field {
        Field::Real => n * (n + 1) / 2,
        Field::Complex => n * n,
    }
}

/// Isometric coordinates of `vv*`: entries `(i, j)` with `i ≤ j` row by row,
/// the diagonal as is and off-diagonal entries scaled by `√2` (real and
/// imaginary parts separately for complex vectors).
pub fn gram_vectorize<T: Scalar>(v: &[T]) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(gram_dimension(n, T::FIELD));
    let v: Vec<C64> = v.iter().map(|x| x.to_c64()).collect();
    for i in 0..n {
        for j in i..n {
            let a = v[i] * v[j].conj();
            push_entry(&mut out, i == j, a, T::FIELD);
        }
    }
    out
}

/// The same coordinates for an arbitrary Hermitian matrix.
pub fn hermitian_vectorize(m: &Entries) -> Vec<f64> {
    vectorize_in(m, m.field())
}

/// Coordinates of `m` in the layout used by vectors over `field`.
fn vectorize_in(m: &Entries, field: Field) -> Vec<f64> {
    let c = m.to_complex();
    let n = c.nrows();
    let mut out = Vec::with_capacity(gram_dimension(n, field));
    for i in 0..n {
        for j in i..n {
            push_entry(&mut out, i == j, (c[(i, j)] + c[(j, i)].conj()) * 0.5, field);
        }
    }
    out
}

fn push_entry(out: &mut Vec<f64>, diag: bool, a: C64, field: Field) {
    if diag {
        out.push(a.re);
    } else {
        out.push(core::f64::consts::SQRT_2 * a.re);
        if field == Field::Complex {
            out.push(core::f64::consts::SQRT_2 * a.im);
        }
    }
}

/// Inverse of [`hermitian_vectorize`].
pub fn hermitian_devectorize(c: &[f64], n: usize, field: Field) -> Result<Entries> {
    if c.len() != gram_dimension(n, field) {
        return Err(Error::Dimension(alloc::format!("{} coordinates for an {n} × {n} matrix", c.len())));
    }
    let mut h = DMatrix::<C64>::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                h[(i, i)] = C64::new(c[k], 0.0);
                k += 1;
            } else {
                let re = c[k] / core::f64::consts::SQRT_2;
                k += 1;
                let im = if field == Field::Complex {
                    k += 1;
                    c[k - 1] / core::f64::consts::SQRT_2
                } else {
                    0.0
                };
                h[(i, j)] = C64::new(re, im);
                h[(j, i)] = C64::new(re, -im);
            }
        }
    }
    Ok(match field {
        Field::Real => Entries::Real(h.map(|z| z.re)),
        Field::Complex => Entries::Complex(h),
    })
}

/// `d × M` matrix whose column `j` is [`gram_vectorize`] of vector `j`.
pub(crate) fn gram_matrix(v: &Entries) -> DMatrix<f64> {
    let (n, m) = (v.nrows(), v.ncols());
    let d = gram_dimension(n, v.field());
    let mut g = DMatrix::zeros(d, m);
    for j in 0..m {
        let col = match v {
            Entries::Real(r) => gram_vectorize(r.column(j).as_slice()),
            Entries::Complex(c) => gram_vectorize(c.column(j).as_slice()),
        };
        g.column_mut(j).copy_from_slice(&col);
    }
    g
}

/// Domain positions and weights of a measure on a family's domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMeasure {
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
}

impl FrameMeasure {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn to_measure(&self, family: &FrameFamily) -> Result<DiscreteMeasure> {
        family.measure_on(&self.ids, self.weights.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameVerdict {
    /// A measure under which the family has the requested frame operator.
    Scalable(FrameMeasure),
    /// Hermitian `H` with `φ_x* H φ_x ≤ 0` for every `x` and `⟨H, target⟩ > 0`.
    NotScalable { witness: Entries },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityResult {
    pub verdict: FrameVerdict,
    /// Cone-membership result on the vectorized Gramians.
    pub feasibility: FeasibilityResult,
}

impl ScalabilityResult {
    pub fn is_scalable(&self) -> bool {
        matches!(self.verdict, FrameVerdict::Scalable(_))
    }

    pub fn measure(&self) -> Option<&FrameMeasure> {
        match &self.verdict {
            FrameVerdict::Scalable(m) => Some(m),
            FrameVerdict::NotScalable { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&Entries> {
        match &self.verdict {
            FrameVerdict::NotScalable { witness } => Some(witness),
            FrameVerdict::Scalable(_) => None,
        }
    }
}

/// Decides whether some non-negative weights make the family Parseval; the
/// returned support has at most `gram_dimension(n)` points.
pub fn scalability_test(family: &FrameFamily, tol: f64, opts: ReduceOptions) -> Result<ScalabilityResult> {
    let n = family.n();
    let id = Entries::Real(DMatrix::identity(n, n));
    scalable_to(family.vectors(), &vectorize_in(&id, family.field()), n, family.field(), tol, opts)
}

fn scalable_to(v: &Entries, target: &[f64], n: usize, field: Field, tol: f64, opts: ReduceOptions) -> Result<ScalabilityResult> {
    let g = gram_matrix(v);
    let b = DVector::from_column_slice(target);
    let feasibility = cone_membership_matrix(&g, &b, tol)?;
    let verdict = match &feasibility.verdict {
        Verdict::Feasible { weights } => {
            let red = caratheodory::reduce_matrix(&g, weights, opts)?;
            FrameVerdict::Scalable(FrameMeasure { ids: red.indices, weights: red.weights })
        }
        Verdict::Infeasible { certificate } => {
            FrameVerdict::NotScalable { witness: hermitian_devectorize(certificate, n, field)? }
        }
    };
    Ok(ScalabilityResult { verdict, feasibility })
}

/// Weights with `Σ μ_x φ_x φ_x* = F`, found by making `F^{-1/2} φ` Parseval.
/// On failure the witness `H` satisfies `φ_x* H φ_x ≤ 0` and `⟨H, F⟩ > 0`.
pub fn tune_to_target(family: &FrameFamily, target: &Entries, tol: f64, opts: ReduceOptions) -> Result<ScalabilityResult> {
    let n = family.n();
    if target.nrows() != n || target.ncols() != n {
        return Err(Error::Dimension(alloc::format!("target must be {n} × {n}")));
    }
    let tc = target.to_complex();
    if (&tc - tc.adjoint()).norm() > 1e-12 * (1.0 + tc.norm()) {
        return Err(Error::InvalidArgument("target is not Hermitian".into()));
    }
    let field = family.field().join(target.field());
    let vals = match target {
        Entries::Real(t) => linalg::hermitian_eig(t).0,
        Entries::Complex(t) => linalg::hermitian_eig(t).0,
    };
    let lmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lmin > tol) {
        return Err(Error::NonPositiveTarget(lmin));
    }
    let root = match target {
        Entries::Real(t) => Entries::Real(linalg::inv_sqrt_hermitian(t, tol)),
        Entries::Complex(t) => Entries::Complex(linalg::inv_sqrt_hermitian(t, tol)),
    };
    let v = match (&root, family.vectors()) {
        (Entries::Real(r), Entries::Real(v)) => Entries::Real(r * v),
        (r, v) => Entries::Complex(r.to_complex() * v.to_complex()),
    };
    let id = Entries::Real(DMatrix::identity(n, n));
    let mut out = scalable_to(&v, &vectorize_in(&id, field), n, field, tol, opts)?;
    if let FrameVerdict::NotScalable { witness } = &out.verdict {
        let h = match (&root, witness) {
            (Entries::Real(r), Entries::Real(h)) => Entries::Real(r * h * r),
            (r, h) => {
                let r = r.to_complex();
                Entries::Complex(&r * h.to_complex() * &r)
            }
        };
        out.verdict = FrameVerdict::NotScalable { witness: h };
    }
    Ok(out)
}

/// A sub-measure with the same frame operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsample {
    /// Positions of the kept atoms in the input measure.
    pub ids: Vec<usize>,
    pub measure: DiscreteMeasure,
    /// `√μ_j`, the scaling that turns the kept vectors into a frame with the
    /// same operator.
    pub scales: Vec<f64>,
}

pub fn subsample_frame(family: &FrameFamily, mu: &DiscreteMeasure, opts: ReduceOptions) -> Result<Subsample> {
    let v = evaluate(family.system(), mu.points())?;
    let g = gram_matrix(&v.entries);
    let red = caratheodory::reduce_matrix(&g, mu.weights(), opts)?;
    let scales = red.weights.iter().map(|w| w.sqrt()).collect();
    let measure = DiscreteMeasure::new(mu.points().select(&red.indices), red.weights)?;
    Ok(Subsample { ids: red.indices, measure, scales })
}

/// `φ* H φ` for every vector of the family.
pub fn witness_values(family: &FrameFamily, h: &Entries) -> Vec<f64> {
    let hc = h.to_complex();
    let v = family.vectors().to_complex();
    (0..v.ncols())
        .map(|j| {
            let c = v.column(j);
            (c.adjoint() * &hc * c)[(0, 0)].re
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn opts() -> ReduceOptions {
        ReduceOptions::default()
    }

    fn mercedes() -> FrameFamily {
        let s = 3f64.sqrt() / 2.0;
        FrameFamily::from_real(DMatrix::from_row_slice(2, 3, &[0.0, -s, s, 1.0, -0.5, -0.5])).unwrap()
    }

    #[test]
    fn complex_unitary_columns_are_scalable() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_row_slice(2, 2, &[C64::new(h, 0.0), C64::new(0.0, h), C64::new(0.0, h), C64::new(h, 0.0)]);
        let fam = FrameFamily::from_complex(u).unwrap();
        let res = scalability_test(&fam, 1e-9, opts()).unwrap();
        let m = res.measure().unwrap();
        let s = frame_operator(&fam, &m.to_measure(&fam).unwrap()).unwrap();
        assert!(s.distance_to_identity() < 1e-12);
        let skew = FrameFamily::from_complex(DMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0)])).unwrap();
        assert!(!scalability_test(&skew, 1e-9, opts()).unwrap().is_scalable());
    }

    #[test]
    fn identity_vectorizes_to_its_diagonal() {
        let e1 = gram_vectorize(&[1.0, 0.0]);
        assert_eq!(e1, vec![1.0, 0.0, 0.0]);
        let id = hermitian_vectorize(&Entries::Real(DMatrix::identity(3, 3)));
        assert_eq!(id, vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn devectorize_inverts_vectorize() {
        let v = [C64::new(1.0, 2.0), C64::new(-0.5, 0.25), C64::new(0.0, 1.0)];
        let c = gram_vectorize(&v);
        let h = hermitian_devectorize(&c, 3, Field::Complex).unwrap();
        let d = DVector::from_column_slice(&v);
        assert!((h.to_complex() - &d * d.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn orthonormal_basis_is_its_own_parseval_frame() {
        let fam = FrameFamily::from_real(DMatrix::identity(3, 3)).unwrap();
        let s = frame_operator(&fam, &fam.measure(vec![1.0; 3]).unwrap()).unwrap();
        assert_eq!(s.eigen_bounds, (1.0, 1.0));
        let res = scalability_test(&fam, 1e-9, opts()).unwrap();
        let m = res.measure().unwrap();
        assert!(m.weights.iter().all(|w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn shear_pair_is_not_scalable() {
        let fam = FrameFamily::from_real(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0])).unwrap();
        let res = scalability_test(&fam, 1e-9, opts()).unwrap();
        let h = res.witness().unwrap();
        assert!(witness_values(&fam, h).iter().all(|&v| v <= 1e-9));
        let Entries::Real(h) = h else { panic!() };
        assert!(h.trace() > 0.0);
    }

    #[test]
    fn mercedes_frame_weights() {
        let res = scalability_test(&mercedes(), 1e-9, opts()).unwrap();
        let m = res.measure().unwrap();
        assert_eq!(m.len(), 3);
        assert!(m.weights.iter().all(|w| (w - 2.0 / 3.0).abs() < 1e-12));
    }

    #[test]
    fn tuning_to_own_operator_is_feasible() {
        let fam = FrameFamily::from_real(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, 1.0])).unwrap();
        let mu = fam.measure(vec![0.5, 1.0, 2.0]).unwrap();
        let s = frame_operator(&fam, &mu).unwrap();
        let res = tune_to_target(&fam, &s.matrix, 1e-9, opts()).unwrap();
        let got = frame_operator(&fam, &res.measure().unwrap().to_measure(&fam).unwrap()).unwrap();
        assert!(got.distance(&s.matrix) < 1e-10);
    }

    #[test]
    fn target_outside_the_span_is_refused_with_a_witness() {
        let fam = FrameFamily::from_real(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0])).unwrap();
        let f = Entries::Real(DMatrix::identity(2, 2));
        let res = tune_to_target(&fam, &f, 1e-9, opts()).unwrap();
        let h = res.witness().unwrap();
        assert!(witness_values(&fam, h).iter().all(|&v| v <= 1e-9));
        let Entries::Real(h) = h else { panic!() };
        assert!(h.trace() > 0.0);
    }

    #[test]
    fn non_positive_target_is_an_error() {
        let f = Entries::Real(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert!(matches!(tune_to_target(&mercedes(), &f, 1e-9, opts()), Err(Error::NonPositiveTarget(_))));
    }
}
