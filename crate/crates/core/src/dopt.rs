//! D-optimal design: Christoffel rescaling, determinant maximization over
//! the simplex of rank-1 moment matrices, and extraction of Parseval weights.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::caratheodory::{self, ReduceOptions};
use crate::error::{Error, Result};
use crate::frames::{gram_matrix, FrameFamily, FrameMeasure};
use crate::linalg;
use crate::scalar::{Scalar, C64};
use crate::systems::Entries;

/// `ψ(x) = φ(x)·√ω(x)` with `ω = n / ‖φ(x)‖²` on kept points and `ω = 0` on
/// degenerate ones.
#[derive(Debug, Clone)]
pub struct Rescaled {
    /// The rescaled vectors, same domain as the input family.
    pub psi: Entries,
    pub omega: Vec<f64>,
    /// Domain positions with `γ(x) > tol · max γ`.
    pub kept: Vec<usize>,
    pub degenerate: Vec<usize>,
}

impl Rescaled {
    pub fn n(&self) -> usize {
        self.psi.nrows()
    }
}

/// Rescales every vector to squared norm `n`, excluding points whose
/// Christoffel value `γ(x) = ‖φ(x)‖²/n` is at most `tol · max γ`.
pub fn christoffel_rescale(family: &FrameFamily, tol: f64) -> Result<Rescaled> {
    let n = family.n();
    let v = family.vectors();
    let m = v.ncols();
    let c = v.to_complex();
    let gamma: Vec<f64> = (0..m).map(|j| c.column(j).norm_squared() / n as f64).collect();
    let gmax = gamma.iter().copied().fold(0.0, f64::max);
    if !(gmax > 0.0) {
        return Err(Error::AllDegenerate);
    }
    let mut kept = Vec::new();
    let mut degenerate = Vec::new();
    let mut omega = alloc::vec![0.0; m];
    for (j, &g) in gamma.iter().enumerate() {
        if g > tol * gmax {
            kept.push(j);
            omega[j] = 1.0 / g;
        } else {
            degenerate.push(j);
        }
    }
    let psi = match v {
        Entries::Real(r) => Entries::Real(scale_columns(r, &omega)),
        Entries::Complex(z) => Entries::Complex(scale_columns(z, &omega)),
    };
    Ok(Rescaled { psi, omega, kept, degenerate })
}

fn scale_columns<T: Scalar>(v: &DMatrix<T>, omega: &[f64]) -> DMatrix<T> {
    let mut out = v.clone();
    for (j, &w) in omega.iter().enumerate() {
        let s = T::from_real(w.sqrt());
        out.column_mut(j).iter_mut().for_each(|x| *x *= s);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoptOptions {
    /// Stop once `max κ ≤ n (1 + epsilon)`.
    pub epsilon: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Also move mass away from the worst support point when that gains more.
    pub away_steps: bool,
    /// Trim the final support with a mass-preserving Carathéodory pass.
    pub trim: bool,
    /// Iterations between recomputing `A` and its inverse from scratch.
    pub refresh_every: usize,
    /// Stop early once the optimum is certified to have `det < certify_below`.
    pub certify_below: Option<f64>,
}

impl Default for DoptOptions {
    fn default() -> Self {
        Self { epsilon: 1e-6, max_iter: 100_000, seed: 0, away_steps: false, trim: true, refresh_every: 200, certify_below: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    /// Domain positions with `α > 0`, ascending.
    pub support: Vec<usize>,
    /// Simplex weights over the whole domain.
    pub alpha: Vec<f64>,
    /// `A = Σ α_x ψ(x)ψ(x)*`.
    pub a: Entries,
    pub a_inv: Entries,
    pub log_det: f64,
    /// `κ(x) = ψ(x)* A⁻¹ ψ(x)` on the domain (0 on degenerate points).
    pub leverage: Vec<f64>,
    pub iteration: usize,
    /// `max κ − n`; zero exactly at the optimum. By concavity,
    /// `log det A* ≤ log det A + gap` for the maximizer `A*`.
    pub gap: f64,
    pub converged: bool,
    /// `(log det A, Tr A)` after every accepted step, starting with the initial design.
    pub history: Vec<(f64, f64)>,
}

impl DesignState {
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }

    /// Upper bound on the largest achievable determinant.
    pub fn det_upper_bound(&self) -> f64 {
        (self.log_det + self.gap.max(0.0)).exp()
    }

    /// `‖A − I‖_F`.
    pub fn distance_to_identity(&self) -> f64 {
        let n = self.a.nrows();
        (self.a.to_complex() - DMatrix::<C64>::identity(n, n)).norm()
    }
}

/// Maximizes `log det A` over the simplex by Frank–Wolfe steps with exact line
/// search, starting from a pivoted basis of `n` candidates.
pub fn dopt_maximize(r: &Rescaled, opts: DoptOptions) -> Result<DesignState> {
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::InvalidArgument("epsilon must lie in (0, 1)".into()));
    }
    if r.kept.is_empty() {
        return Err(Error::AllDegenerate);
    }
    match &r.psi {
        Entries::Real(p) => run(p, r, opts),
        Entries::Complex(p) => run(p, r, opts),
    }
}

fn wrap<T: Scalar>(a: DMatrix<T>) -> Entries {
    match T::FIELD {
        crate::Field::Real => Entries::Real(a.map(|x| x.to_c64().re)),
        crate::Field::Complex => Entries::Complex(a.map(|x| x.to_c64())),
    }
}

fn moment<T: Scalar>(psi: &DMatrix<T>, alpha: &[f64]) -> DMatrix<T> {
    let n = psi.nrows();
    let mut a = DMatrix::<T>::zeros(n, n);
    for (j, &w) in alpha.iter().enumerate() {
        if w > 0.0 {
            let c = psi.column(j);
            a.gerc(T::from_real(w), &c, &c, T::one());
        }
    }
    let t = a.adjoint();
    (a + t) * T::from_real(0.5)
}

fn leverage<T: Scalar>(psi: &DMatrix<T>, a_inv: &DMatrix<T>, kept: &[usize], out: &mut [f64]) {
    let y = a_inv * psi;
    for &j in kept {
        out[j] = psi.column(j).dotc(&y.column(j)).real();
    }
}

fn initial<T: Scalar>(psi: &DMatrix<T>, r: &Rescaled, seed: u64) -> Result<(Vec<f64>, f64, DMatrix<T>)> {
    let n = r.n();
    let m = psi.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = r.kept.clone();
    for _attempt in 0..8 {
        order.shuffle(&mut rng);
        let chosen = linalg::pivoted_columns(psi, n, &order);
        if chosen.len() < n {
            return Err(Error::SingularStart);
        }
        let mut alpha = alloc::vec![0.0; m];
        for &j in &chosen {
            alpha[j] = 1.0 / n as f64;
        }
        if let Some((ld, inv)) = linalg::logdet_inverse(&moment(psi, &alpha)) {
            if ld.is_finite() {
                return Ok((alpha, ld, inv));
            }
        }
    }
    Err(Error::SingularStart)
}

fn run<T: Scalar>(psi: &DMatrix<T>, r: &Rescaled, opts: DoptOptions) -> Result<DesignState> {
    let n = r.n();
    let nf = n as f64;
    let m = psi.ncols();
    let (mut alpha, mut log_det, mut a_inv) = initial(psi, r, opts.seed)?;
    let mut a = moment(psi, &alpha);
    let mut kappa = alloc::vec![0.0; m];
    let trace = |a: &DMatrix<T>| a.trace().real();
    let mut history = alloc::vec![(log_det, trace(&a))];
    let mut iteration = 0;
    let mut converged = false;
    let mut gap;
    loop {
        leverage(psi, &a_inv, &r.kept, &mut kappa);
        let (mut best, mut kmax) = (r.kept[0], f64::NEG_INFINITY);
        for &j in &r.kept {
            if kappa[j] > kmax {
                kmax = kappa[j];
                best = j;
            }
        }
        gap = kmax - nf;
        if kmax <= nf * (1.0 + opts.epsilon) {
            converged = true;
            break;
        }
        if iteration >= opts.max_iter {
            break;
        }
        if let Some(t) = opts.certify_below {
            if log_det + gap < t.ln() {
                break;
            }
        }
        iteration += 1;

        let mut away = None;
        if opts.away_steps {
            let (mut worst, mut kmin) = (usize::MAX, f64::INFINITY);
            for &j in &r.kept {
                if alpha[j] > 0.0 && kappa[j] < kmin {
                    kmin = kappa[j];
                    worst = j;
                }
            }
            if worst != usize::MAX && alpha[worst] < 1.0 && nf - kmin > kmax - nf {
                // A ← (1+μ)A − μψψ*, with μ capped so α stays ≥ 0.
                let cap = alpha[worst] / (1.0 - alpha[worst]);
                let mu = if kmin <= 1.0 { cap } else { ((nf - kmin) / (nf * (kmin - 1.0))).min(cap) };
                let c = mu / (1.0 + mu);
                if 1.0 - c * kmin > 0.0 {
                    away = Some((worst, kmin, mu, mu >= cap));
                }
            }
        }

        let col;
        let y;
        match away {
            None => {
                // A ← (1−λ)A + λψψ*, exact line search.
                let lambda = (kmax / nf - 1.0) / (kmax - 1.0);
                let c = lambda / (1.0 - lambda);
                col = psi.column(best).into_owned();
                y = &a_inv * &col;
                let denom = 1.0 + c * kmax;
                a_inv = (&a_inv - &y * y.adjoint() * T::from_real(c / denom)) * T::from_real(1.0 / (1.0 - lambda));
                a = (&a * T::from_real(1.0 - lambda)) + &col * col.adjoint() * T::from_real(lambda);
                log_det += nf * (1.0 - lambda).ln() + denom.ln();
                for w in alpha.iter_mut() {
                    *w *= 1.0 - lambda;
                }
                alpha[best] += lambda;
            }
            Some((j, k, mu, drop)) => {
                let c = mu / (1.0 + mu);
                col = psi.column(j).into_owned();
                y = &a_inv * &col;
                let denom = 1.0 - c * k;
                a_inv = (&a_inv + &y * y.adjoint() * T::from_real(c / denom)) * T::from_real(1.0 / (1.0 + mu));
                a = (&a * T::from_real(1.0 + mu)) - &col * col.adjoint() * T::from_real(mu);
                log_det += nf * (1.0 + mu).ln() + denom.ln();
                for w in alpha.iter_mut() {
                    *w *= 1.0 + mu;
                }
                alpha[j] -= mu;
                if drop || alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                }
            }
        }

        if iteration % opts.refresh_every.max(1) == 0 {
            let s: f64 = alpha.iter().sum();
            alpha.iter_mut().for_each(|w| *w /= s);
            a = moment(psi, &alpha);
            match linalg::logdet_inverse(&a) {
                Some((ld, inv)) => {
                    log_det = ld;
                    a_inv = inv;
                }
                None => return Err(Error::SingularStart),
            }
        }
        let tr = trace(&a);
        debug_assert!(log_det <= 1e-9, "det(A) exceeded 1: log det = {log_det}");
        debug_assert!(tr <= nf + 1e-9, "Tr(A) exceeded n: {tr}");
        history.push((log_det, tr));
    }

    if opts.trim {
        let support: Vec<usize> = (0..m).filter(|&j| alpha[j] > 0.0).collect();
        let g = gram_matrix(&wrap(psi.select_columns(&support)));
        let w: Vec<f64> = support.iter().map(|&j| alpha[j]).collect();
        if let Ok(red) = caratheodory::reduce_matrix_convex(&g, &w, ReduceOptions::default()) {
            let mut trimmed = alloc::vec![0.0; m];
            for (&k, &v) in red.indices.iter().zip(&red.weights) {
                trimmed[support[k]] = v;
            }
            let a2 = moment(psi, &trimmed);
            if let Some((ld, inv)) = linalg::logdet_inverse(&a2) {
                alpha = trimmed;
                a = a2;
                log_det = ld;
                a_inv = inv;
                leverage(psi, &a_inv, &r.kept, &mut kappa);
                gap = r.kept.iter().map(|&j| kappa[j]).fold(f64::NEG_INFINITY, f64::max) - nf;
            }
        }
    }

    let support = (0..m).filter(|&j| alpha[j] > 0.0).collect();
    Ok(DesignState {
        support,
        alpha,
        a: wrap(a),
        a_inv: wrap(a_inv),
        log_det,
        leverage: kappa,
        iteration,
        gap,
        converged,
        history,
    })
}

/// `μ_j = α_j · ω(x_j)` on the support, provided `det A ≥ 1 − det_tol`.
pub fn extract_rule(state: &DesignState, r: &Rescaled, det_tol: f64) -> Result<FrameMeasure> {
    let required = 1.0 - det_tol;
    if !(state.det() >= required) {
        return Err(Error::NotConverged { det: state.det(), required });
    }
    let weights = state.support.iter().map(|&j| state.alpha[j] * r.omega[j]).collect();
    Ok(FrameMeasure { ids: state.support.clone(), weights })
}
