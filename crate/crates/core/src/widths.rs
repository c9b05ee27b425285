//! Worst-case integration errors in reproducing-kernel classes, evaluated
//! against a discrete base measure, and the quadrature-width bound checks
//! built on them.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::caratheodory::ReduceOptions;
use crate::error::{Error, Result};
use crate::measures::{draw_indices, moments, DiscreteMeasure, MomentVector};
use crate::scalar::{Field, KahanSum};
use crate::systems::{evaluate, FunctionSystem, PointList, Values};
use crate::tchakaloff::{tchakaloff_rule, tchakaloff_rule_normalized, QuadratureRule, Weights};

/// Non-increasing singular values `σ_1 ≥ σ_2 ≥ … ≥ 0` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub enum SingularSequence {
    /// `σ_j = first · ratio^{j−1}` with `0 ≤ ratio < 1`.
    Geometric { first: f64, ratio: f64 },
    /// Finitely many values, zero afterwards.
    Finite(Vec<f64>),
}

impl SingularSequence {
    pub fn get(&self, j: usize) -> f64 {
        assert!(j >= 1, "singular values are 1-based");
        match self {
            SingularSequence::Geometric { first, ratio } => first * ratio.powi(j as i32 - 1),
            SingularSequence::Finite(v) => v.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_{j ≥ from} σ_j²` in closed form.
    pub fn tail_squared(&self, from: usize) -> f64 {
        let from = from.max(1);
        match self {
            SingularSequence::Geometric { first, ratio } => {
                let q2 = ratio * ratio;
                first * first * q2.powi(from as i32 - 1) / (1.0 - q2)
            }
            SingularSequence::Finite(v) => {
                let mut s = KahanSum::default();
                for x in v.iter().skip(from - 1) {
                    s.add(x * x);
                }
                s.value()
            }
        }
    }

    /// Number of nonzero values, `None` if infinite.
    pub fn rank(&self) -> Option<usize> {
        match self {
            SingularSequence::Geometric { first, ratio } if *first == 0.0 || *ratio == 0.0 => {
                Some(usize::from(*first != 0.0))
            }
            SingularSequence::Geometric { .. } => None,
            SingularSequence::Finite(v) => Some(v.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1)),
        }
    }
}

type KernelFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// A symmetric positive-definite kernel.
#[derive(Clone)]
pub enum Kernel {
    /// `exp(−‖x−y‖² / (2ℓ²))`.
    Gaussian { length_scale: f64 },
    Constant(f64),
    /// `Σ_{j ≤ terms} σ_j² η_j(x) η_j(y)` for a real system `η`.
    Spectral { sigma: SingularSequence, eta: FunctionSystem, terms: usize },
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Gaussian { length_scale } => f.debug_struct("Gaussian").field("length_scale", length_scale).finish(),
            Kernel::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Kernel::Spectral { sigma, terms, .. } => {
                f.debug_struct("Spectral").field("sigma", sigma).field("terms", terms).finish()
            }
            Kernel::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Kernel {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Kernel::Custom(Arc::new(f))
    }
}

/// A kernel together with the base measure all integrals are taken against.
#[derive(Debug, Clone)]
pub struct RkhsSpec {
    kernel: Kernel,
    base: DiscreteMeasure,
    /// `h(x_i) = Σ_l w_l k(x_i, x_l)` on the base points.
    embedding: Vec<f64>,
    /// `∫∫ k dμ dμ`.
    double_integral: f64,
    /// `∫ k(x, x) dμ`.
    trace: f64,
    /// `∫ η_j dμ` for spectral kernels.
    eta_integrals: Option<Vec<f64>>,
}

impl RkhsSpec {
    pub fn new(kernel: Kernel, base: DiscreteMeasure) -> Result<Self> {
        let mut eta_integrals = None;
        if let Kernel::Spectral { eta, terms, .. } = &kernel {
            if eta.field() != Field::Real || eta.len() < *terms {
                return Err(Error::InvalidArgument("spectral kernel needs a real system with at least `terms` functions".into()));
            }
            let MomentVector::Real(v) = moments(&eta.truncate(*terms)?, &base)? else {
                unreachable!("real system")
            };
            eta_integrals = Some(v);
        }
        let mut spec = RkhsSpec { kernel, base, embedding: Vec::new(), double_integral: 0.0, trace: 0.0, eta_integrals };
        let pts = spec.base.points().clone();
        let w = spec.base.weights().to_vec();
        spec.embedding = (0..pts.len()).map(|i| spec.embedding_at(pts.get(i))).collect::<Result<_>>()?;
        let mut s = KahanSum::default();
        let mut t = KahanSum::default();
        for (i, &wi) in w.iter().enumerate() {
            s.add(wi * spec.embedding[i]);
            t.add(wi * spec.k(pts.get(i), pts.get(i))?);
        }
        spec.double_integral = s.value();
        spec.trace = t.value();
        Ok(spec)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn base(&self) -> &DiscreteMeasure {
        &self.base
    }

    pub fn double_integral(&self) -> f64 {
        self.double_integral
    }

    /// `∫ k(x, x) dμ`.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `C² = ∫ k(x,x) dμ − ∫∫ k dμ dμ`, clamped at zero.
    pub fn mc_constant(&self) -> f64 {
        (self.trace - self.double_integral).max(0.0).sqrt()
    }

    pub fn k(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(match &self.kernel {
            Kernel::Gaussian { length_scale } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * length_scale * length_scale)).exp()
            }
            Kernel::Constant(c) => *c,
            Kernel::Spectral { sigma, eta, terms } => {
                let ex = real_values(eta, x)?;
                let ey = real_values(eta, y)?;
                let mut s = KahanSum::default();
                for j in 0..*terms {
                    let sj = sigma.get(j + 1);
                    s.add(sj * sj * ex[j] * ey[j]);
                }
                s.value()
            }
            Kernel::Custom(f) => f(x, y),
        })
    }

    fn embedding_at(&self, x: &[f64]) -> Result<f64> {
        let pts = self.base.points();
        let mut s = KahanSum::default();
        for (l, &wl) in self.base.weights().iter().enumerate() {
            s.add(wl * self.k(x, pts.get(l))?);
        }
        Ok(s.value())
    }
}

fn real_values(sys: &FunctionSystem, x: &[f64]) -> Result<Vec<f64>> {
    match sys.eval(x).map_err(|reason| Error::Evaluation { point: 0, reason })? {
        Values::Real(v) => Ok(v),
        Values::Complex(_) => Err(Error::InvalidArgument("expected a real system".into())),
    }
}

/// Norm of the error functional `f ↦ ∫ f dμ − Σ μ_j f(x_j)` on the unit ball.
/// Spectral kernels use `Σ σ_j² (∫η_j dμ − Σ μ_i η_j(x_i))²`; other kernels the
/// double-sum formula, clamped at zero.
pub fn worst_case_error(rule: &QuadratureRule, spec: &RkhsSpec) -> Result<f64> {
    let w = match &rule.weights {
        Weights::Real(w) => w,
        Weights::Complex(_) => return Err(Error::InvalidArgument("worst-case error needs real weights".into())),
    };
    worst_case_error_on(&rule.nodes, w, spec)
}

pub fn worst_case_error_on(nodes: &PointList, w: &[f64], spec: &RkhsSpec) -> Result<f64> {
    if let (Kernel::Spectral { sigma, eta, terms }, Some(ints)) = (&spec.kernel, &spec.eta_integrals) {
        let ev = evaluate(&eta.truncate(*terms)?, nodes)?;
        let m = ev.as_real().expect("real system");
        let mut e2 = KahanSum::default();
        for j in 0..*terms {
            let mut q = KahanSum::default();
            for (i, &wi) in w.iter().enumerate() {
                q.add(wi * m[(j, i)]);
            }
            let d = ints[j] - q.value();
            let sj = sigma.get(j + 1);
            e2.add(sj * sj * d * d);
        }
        return Ok(e2.value().max(0.0).sqrt());
    }
    let mut cross = KahanSum::default();
    let mut quad = KahanSum::default();
    for (i, &wi) in w.iter().enumerate() {
        let xi = nodes.get(i);
        cross.add(wi * spec.embedding_at(xi)?);
        let mut row = KahanSum::default();
        for (j, &wj) in w.iter().enumerate() {
            row.add(wj * spec.k(xi, nodes.get(j))?);
        }
        quad.add(wi * row.value());
    }
    let mut e2 = KahanSum::default();
    e2.add(spec.double_integral);
    e2.add(-2.0 * cross.value());
    e2.add(quad.value());
    Ok(e2.value().max(0.0).sqrt())
}

/// One row of the Monte-Carlo check.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q90: f64,
    /// `C / √n`.
    pub bound: f64,
    /// `C / √n · (1 + 3/√trials)`.
    pub allowed: f64,
    pub pass: bool,
    /// Mean error of density-weighted rules (reported, not checked).
    pub importance_mean: f64,
    pub importance_q90: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub c: f64,
    pub trials: usize,
    pub rows: Vec<McRow>,
}

impl McReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Averages the worst-case error of iid equal-weight rules with `n` nodes
/// drawn from the (normalized) base measure and compares with `C/√n`. Also
/// reports rules drawn from the density `k(x,x)/∫k(y,y)dμ` with weights
/// `1/(n ϱ(x_i))`.
pub fn mc_rule_bound_check(spec: &RkhsSpec, n_values: &[usize], trials: usize, seed: u64) -> Result<McReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let probability = spec.base.normalized()?;
    let spec = if (spec.base.total_mass() - 1.0).abs() > 1e-12 {
        RkhsSpec::new(spec.kernel.clone(), probability.clone())?
    } else {
        spec.clone()
    };
    let c = spec.mc_constant();
    let pts = probability.points();
    let diag: Vec<f64> = (0..pts.len()).map(|i| spec.k(pts.get(i), pts.get(i))).collect::<Result<_>>()?;
    let density: Vec<f64> = diag.iter().map(|d| d / spec.trace).collect();
    let dens_probs: Vec<f64> = probability.weights().iter().zip(&density).map(|(a, b)| a * b).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        if n == 0 {
            return Err(Error::InvalidArgument("rule sizes must be positive".into()));
        }
        let mut errs = Vec::with_capacity(trials);
        let mut imp = Vec::with_capacity(trials);
        for _ in 0..trials {
            let ids = draw_indices(probability.weights(), n, &mut rng)?;
            errs.push(worst_case_error_on(&pts.select(&ids), &alloc::vec![1.0 / n as f64; n], &spec)?);
            let ids = draw_indices(&dens_probs, n, &mut rng)?;
            let w: Vec<f64> = ids.iter().map(|&i| 1.0 / (n as f64 * density[i])).collect();
            imp.push(worst_case_error_on(&pts.select(&ids), &w, &spec)?);
        }
        let mean = errs.iter().sum::<f64>() / trials as f64;
        let bound = c / (n as f64).sqrt();
        let allowed = bound * (1.0 + 3.0 / (trials as f64).sqrt());
        rows.push(McRow {
            n,
            mean,
            median: quantile(&mut errs, 0.5),
            q90: quantile(&mut errs, 0.9),
            bound,
            allowed,
            pass: mean <= allowed,
            importance_mean: imp.iter().sum::<f64>() / trials as f64,
            importance_q90: quantile(&mut imp, 0.9),
        });
    }
    Ok(McReport { c, trials, rows })
}

fn quantile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = ((v.len() - 1) as f64 * q).round() as usize;
    v[k]
}

/// Result of the tail construction for one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub n: usize,
    pub rule: QuadratureRule,
    pub achieved: f64,
    /// `2 √μ(Ω) (Σ_{j≥n} σ_j²)^{1/2}`.
    pub bound: f64,
    /// `Σ_{j=n+1}^{n+J} σ_j²`.
    pub truncated_tail: f64,
    /// `Σ_{j>n} σ_j²` in closed form.
    pub analytic_tail: f64,
    pub pass: bool,
}

/// Builds `V_n ⊕ span{√E_n}` with `E_n = Σ_{j=n+1}^{n+J} σ_j² η_j²`, takes its
/// Tchakaloff rule, and measures the worst-case error over the unit ball of
/// the kernel `Σ_{j ≤ n+J} σ_j² η_j ⊗ η_j`. The `η_j` should be orthonormal
/// for `base`.
pub fn tail_bound_rule(
    sigma: &SingularSequence,
    eta: &FunctionSystem,
    base: &DiscreteMeasure,
    n: usize,
    tail_len: usize,
    opts: ReduceOptions,
) -> Result<TailReport> {
    let terms = n + tail_len;
    if eta.field() != Field::Real || eta.len() < terms {
        return Err(Error::InvalidArgument(alloc::format!("need a real system with at least {terms} functions")));
    }
    let mass = base.total_mass();
    let bound = 2.0 * mass.sqrt() * sigma.tail_squared(n).sqrt();
    let analytic_tail = sigma.tail_squared(n + 1);
    let neglected = sigma.tail_squared(terms + 1);
    let allowed = 1e-3 * bound;
    if neglected > 0.0 && neglected >= allowed {
        return Err(Error::TruncationTooShort { neglected, allowed });
    }
    let mut truncated = KahanSum::default();
    for j in n + 1..=terms {
        truncated.add(sigma.get(j) * sigma.get(j));
    }

    let eta_all = eta.truncate(terms)?;
    let sig: Vec<f64> = (1..=terms).map(|j| sigma.get(j)).collect();
    let e_sys = eta_all.clone();
    let root_e = FunctionSystem::custom_real(1, move |x| {
        let v = match e_sys.eval(x)? {
            Values::Real(v) => v,
            Values::Complex(_) => return Err("expected real values".into()),
        };
        let mut s = KahanSum::default();
        for j in n..v.len() {
            s.add(sig[j] * sig[j] * v[j] * v[j]);
        }
        Ok(alloc::vec![s.value().max(0.0).sqrt()])
    });
    let v_plus = if n == 0 { root_e } else { FunctionSystem::concat(alloc::vec![eta_all.truncate(n)?, root_e]) };
    let rule = tchakaloff_rule(&v_plus, base, opts)?;
    let spec = RkhsSpec::new(Kernel::Spectral { sigma: sigma.clone(), eta: eta_all, terms }, base.clone())?;
    let achieved = worst_case_error(&rule, &spec)?;
    Ok(TailReport {
        n,
        pass: achieved <= bound,
        rule,
        achieved,
        bound,
        truncated_tail: truncated.value(),
        analytic_tail,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KolmogorovReport {
    pub rule: QuadratureRule,
    /// Largest `|∫ f dμ − Σ μ_j f(x_j)|` over the class members.
    pub sampled_error: f64,
    /// Largest grid sup-norm distance of a class member to `V_n`.
    pub distance: f64,
    /// `2 μ(Ω) · distance`.
    pub bound: f64,
    pub pass: bool,
}

/// Mass-preserving rule for `V_n ⊕ span{1}` checked against
/// `2 μ(Ω) · sup_f dist_∞(f, V_n)` on the points of `mu`. `class` lists the
/// sampled class members as the components of a real system; `system = None`
/// means `V_0 = {0}`.
pub fn kolmogorov_bound_rule(
    system: Option<&FunctionSystem>,
    class: &FunctionSystem,
    mu: &DiscreteMeasure,
    opts: ReduceOptions,
) -> Result<KolmogorovReport> {
    if class.field() != Field::Real || system.is_some_and(|s| s.field() != Field::Real) {
        return Err(Error::InvalidArgument("Kolmogorov check works over real systems".into()));
    }
    let rule = match system {
        Some(s) => tchakaloff_rule_normalized(s, mu, opts)?,
        None => tchakaloff_rule_normalized(&FunctionSystem::constant(1.0), mu, opts)?,
    };
    let rw = rule.weights.as_real().expect("non-negative rule");
    let fvals = evaluate(class, mu.points())?;
    let f = fvals.as_real().expect("real class");
    let on_nodes = evaluate(class, &rule.nodes)?;
    let fn_ = on_nodes.as_real().expect("real class");
    let basis = match system {
        Some(s) => Some(evaluate(s, mu.points())?.as_real().expect("real system").clone()),
        None => None,
    };
    let mut sampled_error = 0.0f64;
    let mut distance = 0.0f64;
    for k in 0..class.len() {
        let mut exact = KahanSum::default();
        for (j, &w) in mu.weights().iter().enumerate() {
            exact.add(w * f[(k, j)]);
        }
        let mut q = KahanSum::default();
        for (j, &w) in rw.iter().enumerate() {
            q.add(w * fn_[(k, j)]);
        }
        sampled_error = sampled_error.max((exact.value() - q.value()).abs());
        let row: Vec<f64> = f.row(k).iter().copied().collect();
        let d = match &basis {
            Some(b) => minimax_distance(b, &row, 400),
            None => row.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        distance = distance.max(d);
    }
    let bound = 2.0 * mu.total_mass() * distance;
    Ok(KolmogorovReport { rule, sampled_error, distance, bound, pass: sampled_error <= bound + 1e-12 * (1.0 + bound) })
}

/// Sup-norm distance from `f` to the row span of `basis` (`n × M`) via
/// Lawson's iteratively reweighted least squares. Any iterate's residual is
/// an upper bound on the best distance; the smallest one seen is returned.
fn minimax_distance(basis: &nalgebra::DMatrix<f64>, f: &[f64], iters: usize) -> f64 {
    let m = f.len();
    let fv = nalgebra::DVector::from_column_slice(f);
    let bt = basis.transpose();
    let mut u = alloc::vec![1.0 / m as f64; m];
    let mut best = f64::INFINITY;
    for _ in 0..iters {
        let mut a = bt.clone();
        let mut b = fv.clone();
        for i in 0..m {
            let s = u[i].sqrt();
            a.row_mut(i).iter_mut().for_each(|x| *x *= s);
            b[i] *= s;
        }
        let c = crate::linalg::lstsq(&a, &b, 1e-13);
        let r = &fv - &bt * &c;
        let sup = r.amax();
        best = best.min(sup);
        let total: f64 = u.iter().zip(r.iter()).map(|(ui, ri)| ui * ri.abs()).sum();
        if total <= 0.0 {
            break;
        }
        for i in 0..m {
            u[i] *= r[i].abs() / total;
        }
    }
    best
}

/// Grid shadow of the kernel `δ_{xy} + 1` example: with base weights `1/M`
/// on `M` points and an equal-weight rule on `nodes` (distinct ids), the
/// largest integration error over the point indicators. Positive whenever
/// the rule has fewer than `M` nodes.
pub fn indicator_exactness_gap(m: usize, nodes: &[usize]) -> Result<f64> {
    if m == 0 || nodes.is_empty() || nodes.iter().any(|&i| i >= m) {
        return Err(Error::InvalidArgument("need a non-empty rule on the grid".into()));
    }
    let base = 1.0 / m as f64;
    let w = 1.0 / nodes.len() as f64;
    let mut hit = alloc::vec![0.0; m];
    for &i in nodes {
        hit[i] += w;
    }
    Ok(hit.iter().map(|&h| (h - base).abs()).fold(0.0, f64::max))
}
