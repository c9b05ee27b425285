//! Exact discrete `L_p` norms for even `p` through product and power systems.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::caratheodory::ReduceOptions;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{Field, KahanSum, C64};
use crate::systems::{evaluate, Family, FamilyTag, FunctionSystem};
use crate::tchakaloff::{tchakaloff_rule, QuadratureRule, Weights};

/// Largest power system [`power_system`] will build.
pub const MAX_COMPOSITIONS: u128 = 1_000_000;

/// All products `φ_k · conj(φ_l)`: `n²` functions (`k`-major) for complex
/// systems, `n(n+1)/2` with `k ≤ l` for real ones.
pub fn product_system(system: &FunctionSystem) -> FunctionSystem {
    let n = system.len();
    let count = match system.field() {
        Field::Real => n * (n + 1) / 2,
        Field::Complex => n * n,
    };
    FunctionSystem::from_family(Family::Product(system.clone()), system.field(), count, FamilyTag::Product)
}

/// `binom(n + k − 1, k)`, saturating.
pub fn composition_count(n: usize, k: u32) -> u128 {
    if n == 0 {
        return u128::from(k == 0);
    }
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        c = match c.checked_mul(n as u128 - 1 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    c
}

/// Weak compositions of `k` into `n` parts in lexicographically descending
/// order, e.g. `(2,0), (1,1), (0,2)`.
pub fn weak_compositions(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = alloc::vec![0u32; n];
    fill(&mut cur, 0, k, &mut out);
    out
}

fn fill(cur: &mut [u32], i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if i + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = left;
            out.push(cur.to_vec());
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for v in (0..=left).rev() {
        cur[i] = v;
        fill(cur, i + 1, left - v, out);
    }
}

/// Monomials `φ_1^{κ_1} ⋯ φ_n^{κ_n}` with `Σκ = half_p`. `half_p = 1` is the
/// system itself.
pub fn power_system(system: &FunctionSystem, half_p: u32) -> Result<FunctionSystem> {
    if half_p == 0 {
        return Err(Error::InvalidArgument("half_p must be at least 1".into()));
    }
    if half_p == 1 {
        return Ok(system.clone());
    }
    let count = composition_count(system.len(), half_p);
    if count > MAX_COMPOSITIONS {
        return Err(Error::TooManyCompositions { count, cap: MAX_COMPOSITIONS });
    }
    let exps = weak_compositions(system.len(), half_p);
    let n = exps.len();
    Ok(FunctionSystem::from_family(Family::Power(system.clone(), exps), system.field(), n, FamilyTag::Power))
}

fn check_p(p: u32) -> Result<u32> {
    if p == 0 || !p.is_multiple_of(2) {
        Err(Error::OddExponent(p))
    } else {
        Ok(p / 2)
    }
}

/// Node bound for an exact `L_p` rule: `binom(n+p−1, p)` for real systems,
/// `binom(n+p/2−1, p/2)²` for complex ones.
pub fn node_bound(n: usize, p: u32, field: Field) -> Result<u128> {
    let h = check_p(p)?;
    Ok(match field {
        Field::Real => composition_count(n, p),
        Field::Complex => composition_count(n, h).saturating_mul(composition_count(n, h)),
    })
}

/// Non-negative rule with `Σ μ_j |f(x_j)|^p = ∫ |f|^p dμ` for every `f` in the span.
pub fn mz_rule(system: &FunctionSystem, mu: &DiscreteMeasure, p: u32, opts: ReduceOptions) -> Result<QuadratureRule> {
    let h = check_p(p)?;
    let w = power_system(system, h)?;
    tchakaloff_rule(&product_system(&w), mu, opts)
}

/// Largest relative error `|Σ μ_j |f(x_j)|^p − ∫|f|^p dμ| / ∫|f|^p dμ` over
/// `trials` random `f = Σ c_k φ_k` with standard normal (circular complex)
/// coefficients. Both sides vanishing counts as error 0.
pub fn mz_verify(
    rule: &QuadratureRule,
    system: &FunctionSystem,
    mu: &DiscreteMeasure,
    p: u32,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is needed".into()));
    }
    let rw = match &rule.weights {
        Weights::Real(w) => w.clone(),
        Weights::Complex(_) => return Err(Error::InvalidArgument("rule must have real weights".into())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = system.len();
    let on_rule = evaluate(system, &rule.nodes)?.entries.to_complex();
    let on_mu = evaluate(system, mu.points())?.entries.to_complex();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let c: Vec<C64> = (0..n)
            .map(|_| match system.field() {
                Field::Real => C64::new(StandardNormal.sample(&mut rng), 0.0),
                Field::Complex => {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    C64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
                }
            })
            .collect();
        worst = worst.max(relative_gap(&c, &on_rule, &rw, &on_mu, mu.weights(), p));
    }
    Ok(worst)
}

/// Relative `L_p` gap for a single coefficient vector.
pub fn mz_error_for(
    rule: &QuadratureRule,
    system: &FunctionSystem,
    mu: &DiscreteMeasure,
    p: u32,
    coeffs: &[C64],
) -> Result<f64> {
    let rw = rule.weights.as_real().ok_or_else(|| Error::InvalidArgument("rule must have real weights".into()))?;
    let on_rule = evaluate(system, &rule.nodes)?.entries.to_complex();
    let on_mu = evaluate(system, mu.points())?.entries.to_complex();
    Ok(relative_gap(coeffs, &on_rule, rw, &on_mu, mu.weights(), p))
}

fn relative_gap(
    c: &[C64],
    on_rule: &nalgebra::DMatrix<C64>,
    rw: &[f64],
    on_mu: &nalgebra::DMatrix<C64>,
    mw: &[f64],
    p: u32,
) -> f64 {
    let lp = |m: &nalgebra::DMatrix<C64>, w: &[f64]| {
        let mut s = KahanSum::default();
        for (j, &wj) in w.iter().enumerate() {
            let mut f = C64::new(0.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                f += ck * m[(k, j)];
            }
            s.add(wj * f.norm_sqr().powi(p as i32 / 2));
        }
        s.value()
    };
    let a = lp(on_rule, rw);
    let b = lp(on_mu, mw);
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / b
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::PointList;
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn product_counts() {
        assert_eq!(product_system(&FunctionSystem::monomial(1)).len(), 1);
        assert_eq!(product_system(&FunctionSystem::monomial(2)).len(), 3);
        assert_eq!(product_system(&FunctionSystem::fourier(-2, 5, 2.0 * PI)).len(), 25);
    }

    #[test]
    fn fourier_products_collapse_to_nine() {
        let sys = product_system(&FunctionSystem::fourier(-2, 5, 2.0 * PI));
        let xs: Vec<f64> = (0..64).map(|i| 2.0 * PI * i as f64 / 64.0).collect();
        let m = evaluate(&sys, &PointList::from_scalars(&xs)).unwrap();
        assert_eq!(crate::systems::numerical_rank(&m, 1e-10), 9);
    }

    #[test]
    fn compositions_and_powers() {
        assert_eq!(weak_compositions(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(weak_compositions(4, 2).len(), 10);
        assert_eq!(composition_count(4, 2), 10);
        let base = FunctionSystem::monomial(2);
        assert_eq!(power_system(&base, 1).unwrap().len(), 2);
        let v = power_system(&base, 2).unwrap().eval(&[3.0]).unwrap();
        assert_eq!(v, crate::systems::Values::Real(vec![1.0, 3.0, 9.0]));
    }

    #[test]
    fn composition_cap() {
        let base = FunctionSystem::monomial(40);
        assert!(matches!(power_system(&base, 6), Err(Error::TooManyCompositions { .. })));
    }

    #[test]
    fn odd_exponent_is_rejected() {
        let mu = DiscreteMeasure::uniform(PointList::from_scalars(&[0.0, 1.0]), 1.0).unwrap();
        let err = mz_rule(&FunctionSystem::monomial(2), &mu, 3, ReduceOptions::default()).unwrap_err();
        assert_eq!(err, Error::OddExponent(3));
    }

    #[test]
    fn one_function_squared() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let mu = DiscreteMeasure::uniform(PointList::from_scalars(&xs), 1.0).unwrap();
        let sys = FunctionSystem::custom_real(1, |x| Ok(vec![1.0 + x[0]]));
        let rule = mz_rule(&sys, &mu, 2, ReduceOptions::default()).unwrap();
        assert_eq!(rule.len(), 1);
        assert!(mz_verify(&rule, &sys, &mu, 2, 10, 1).unwrap() < 1e-12);
        assert_eq!(mz_error_for(&rule, &sys, &mu, 2, &[C64::new(0.0, 0.0)]).unwrap(), 0.0);
    }
}
