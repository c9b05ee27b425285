//! Deterministic computations behind every subcommand. `execute` turns a
//! [`Job`] into a result, and `verify` re-runs it from an artifact.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tchak_core::cones::{discretize_functional, FunctionalOutcome};
use tchak_core::dopt::{christoffel_rescale, dopt_maximize, extract_rule, DoptOptions};
use tchak_core::frames::{
    frame_operator, gram_dimension, scalability_test, subsample_frame, tune_to_target, witness_values, FrameFamily,
    FrameVerdict, ScalabilityResult,
};
use tchak_core::measures::moments;
use tchak_core::mz::{composition_count, mz_rule, mz_verify, node_bound};
use tchak_core::systems::{effective_real_dimension, evaluate, realify, Entries};
use tchak_core::tchakaloff::{tchakaloff_rule, tchakaloff_rule_normalized};
use tchak_core::widths::{
    kolmogorov_bound_rule, mc_rule_bound_check, tail_bound_rule, Kernel, RkhsSpec, SingularSequence,
};
use tchak_core::{DiscreteMeasure, FunctionSystem, PointList};

use crate::artifact::{Job, Status};
use crate::formats::{
    matrix_from_value, matrix_value, moments_from_value, points_from_value, rule_value, MeasureDoc,
    SystemSpec,
};

pub struct Outcome {
    pub status: Status,
    pub result: Value,
    /// Plot data as `(header, rows)`.
    pub table: Option<(Vec<&'static str>, Vec<Vec<f64>>)>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Self { status: Status::Ok, result, table: None }
    }

    fn infeasible(result: Value) -> Self {
        Self { status: Status::Infeasible, result, table: None }
    }
}

fn input<'a>(job: &'a Job, key: &str) -> Result<&'a Value> {
    job.inputs.get(key).ok_or_else(|| anyhow!("artifact inputs lack '{key}'"))
}

fn system_input(job: &Job, key: &str) -> Result<FunctionSystem> {
    SystemSpec::from_value(input(job, key)?)?.build()
}

fn measure_input(job: &Job, key: &str) -> Result<DiscreteMeasure> {
    MeasureDoc::from_value(input(job, key)?)?.build()
}

fn family_input(job: &Job) -> Result<FrameFamily> {
    Ok(FrameFamily::from_entries(matrix_from_value(input(job, "family")?).context("family")?)?)
}

fn params<T: for<'de> Deserialize<'de>>(job: &Job) -> Result<T> {
    serde_json::from_value(job.params.clone()).with_context(|| format!("invalid parameters for '{}'", job.kind))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureParams {
    pub normalized: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MzParams {
    pub p: u32,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoptParams {
    pub epsilon: f64,
    pub max_iter: usize,
    pub away_steps: bool,
    /// Required `1 − det` for an extracted rule, and the certified-deficit threshold.
    pub det_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McParams {
    pub length_scale: f64,
    pub grid: usize,
    pub n: Vec<usize>,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailParams {
    /// `σ_j = first · ratio^{j−1}`.
    pub first: f64,
    pub ratio: f64,
    pub grid: usize,
    pub n: Vec<usize>,
    pub tail_len: usize,
}

pub fn execute(job: &Job) -> Result<Outcome> {
    match job.kind.as_str() {
        "quadrature" => quadrature(job),
        "functional" => functional(job),
        "mz" => mz(job),
        "frame-scale" => frame_scale(job),
        "frame-tune" => frame_tune(job),
        "frame-subsample" => frame_subsample(job),
        "dopt" => dopt(job),
        "widths-mc" => widths_mc(job),
        "widths-tail" => widths_tail(job),
        "widths-kolmogorov" => widths_kolmogorov(job),
        other => bail!("unknown artifact kind '{other}'"),
    }
}

fn quadrature(job: &Job) -> Result<Outcome> {
    let p: QuadratureParams = params(job)?;
    let sys = system_input(job, "system")?;
    let mu = measure_input(job, "measure")?;
    let opts = job.tolerances.reduce();
    let rule = if p.normalized { tchakaloff_rule_normalized(&sys, &mu, opts)? } else { tchakaloff_rule(&sys, &mu, opts)? };
    let target = moments(&sys, &mu)?;
    let effdim = effective_real_dimension(&sys, mu.points(), opts.rank_tol)?;
    Ok(Outcome::ok(json!({
        "rule": rule_value(&rule, &target),
        "effective_dimension": effdim,
        "total_mass": mu.total_mass(),
    })))
}

fn functional(job: &Job) -> Result<Outcome> {
    let sys = system_input(job, "system")?;
    let omega = points_from_value(input(job, "omega")?).context("omega")?;
    let values = moments_from_value(input(job, "values")?, sys.field()).context("values")?;
    match discretize_functional(&sys, &omega, &values, job.tolerances.tol, job.tolerances.reduce())? {
        FunctionalOutcome::Rule(rule) => Ok(Outcome::ok(json!({ "rule": rule_value(&rule, &values) }))),
        FunctionalOutcome::Infeasible(res) => {
            let c = res.certificate().expect("infeasible result carries a certificate");
            let a = realify(&evaluate(&sys, &omega)?);
            let a = a.as_real().expect("realified");
            let on_omega = (0..a.ncols())
                .map(|j| a.column(j).iter().zip(c).map(|(x, y)| x * y).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            let b = match &values {
                tchak_core::MomentVector::Real(v) => v.clone(),
                v => tchak_core::systems::realify_vector(&v.to_complex()),
            };
            let separation: f64 = b.iter().zip(c).map(|(x, y)| x * y).sum();
            Ok(Outcome::infeasible(json!({
                "certificate": c,
                "max_on_domain": on_omega,
                "separation": separation,
                "residual": res.residual,
            })))
        }
    }
}

fn mz(job: &Job) -> Result<Outcome> {
    let p: MzParams = params(job)?;
    let sys = system_input(job, "system")?;
    let mu = measure_input(job, "measure")?;
    let rule = mz_rule(&sys, &mu, p.p, job.tolerances.reduce())?;
    let err = mz_verify(&rule, &sys, &mu, p.p, p.trials, job.seed)?;
    let bound = node_bound(sys.len(), p.p, sys.field())?;
    let power = tchak_core::mz::power_system(&sys, p.p / 2)?;
    let target = moments(&tchak_core::mz::product_system(&power), &mu)?;
    Ok(Outcome::ok(json!({
        "rule": rule_value(&rule, &target),
        "node_bound": bound as f64,
        "compositions": composition_count(sys.len(), p.p / 2) as f64,
        "max_relative_error": err,
    })))
}

fn scalability_outcome(fam: &FrameFamily, res: ScalabilityResult, target: &Entries) -> Result<Outcome> {
    match &res.verdict {
        FrameVerdict::Scalable(m) => {
            let s = frame_operator(fam, &m.to_measure(fam)?)?;
            Ok(Outcome::ok(json!({
                "ids": m.ids,
                "weights": m.weights,
                "operator_distance": s.distance(target),
                "support_bound": gram_dimension(fam.n(), fam.field()),
            })))
        }
        FrameVerdict::NotScalable { witness } => {
            let vals = witness_values(fam, witness);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let t = target.to_complex();
            let h = witness.to_complex();
            let inner: f64 = h.iter().zip(t.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            Ok(Outcome::infeasible(json!({
                "witness": matrix_value(witness),
                "max_witness_value": max,
                "target_pairing": inner,
                "residual": res.feasibility.residual,
            })))
        }
    }
}

fn frame_scale(job: &Job) -> Result<Outcome> {
    let fam = family_input(job)?;
    let res = scalability_test(&fam, job.tolerances.tol, job.tolerances.reduce())?;
    let n = fam.n();
    scalability_outcome(&fam, res, &Entries::Real(nalgebra::DMatrix::identity(n, n)))
}

fn frame_tune(job: &Job) -> Result<Outcome> {
    let fam = family_input(job)?;
    let target = matrix_from_value(input(job, "target")?).context("target")?;
    let res = tune_to_target(&fam, &target, job.tolerances.tol, job.tolerances.reduce())?;
    scalability_outcome(&fam, res, &target)
}

fn frame_subsample(job: &Job) -> Result<Outcome> {
    let fam = family_input(job)?;
    let w: Vec<f64> = serde_json::from_value(input(job, "weights")?.clone()).context("weights")?;
    let mu = fam.measure(w)?;
    let sub = subsample_frame(&fam, &mu, job.tolerances.reduce())?;
    let before = frame_operator(&fam, &mu)?;
    let after = frame_operator(&fam, &sub.measure)?;
    Ok(Outcome::ok(json!({
        "ids": sub.ids,
        "weights": sub.measure.weights(),
        "scales": sub.scales,
        "support_bound": gram_dimension(fam.n(), fam.field()),
        "operator_change": before.distance(&after.matrix),
    })))
}

fn dopt(job: &Job) -> Result<Outcome> {
    let p: DoptParams = params(job)?;
    let fam = family_input(job)?;
    let r = christoffel_rescale(&fam, job.tolerances.rank_tol)?;
    let opts = DoptOptions {
        epsilon: p.epsilon,
        max_iter: p.max_iter,
        seed: job.seed,
        away_steps: p.away_steps,
        certify_below: Some(1.0 - p.det_tol),
        ..DoptOptions::default()
    };
    let st = dopt_maximize(&r, opts)?;
    let summary = json!({
        "support": st.support,
        "alpha": st.support.iter().map(|&j| st.alpha[j]).collect::<Vec<_>>(),
        "det": st.det(),
        "det_upper_bound": st.det_upper_bound(),
        "gap": st.gap,
        "iterations": st.iteration,
        "converged": st.converged,
        "degenerate": r.degenerate,
    });
    if st.det() >= 1.0 - p.det_tol {
        let m = extract_rule(&st, &r, p.det_tol)?;
        let s = frame_operator(&fam, &m.to_measure(&fam)?)?;
        Ok(Outcome::ok(json!({
            "design": summary,
            "ids": m.ids,
            "weights": m.weights,
            "operator_distance": s.distance_to_identity(),
        })))
    } else if st.det_upper_bound() < 1.0 - p.det_tol {
        Ok(Outcome::infeasible(json!({ "design": summary })))
    } else {
        bail!(
            "design not converged after {} iterations: det {:e}, upper bound {:e}",
            st.iteration,
            st.det(),
            st.det_upper_bound()
        )
    }
}

fn midpoint_grid(m: usize) -> Result<DiscreteMeasure> {
    if m == 0 {
        bail!("the grid needs at least one point");
    }
    let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    Ok(DiscreteMeasure::uniform(PointList::from_scalars(&xs), 1.0)?)
}

fn widths_mc(job: &Job) -> Result<Outcome> {
    let p: McParams = params(job)?;
    let base = match job.inputs.get("measure") {
        Some(v) => MeasureDoc::from_value(v)?.build()?,
        None => midpoint_grid(p.grid)?,
    };
    let spec = RkhsSpec::new(Kernel::Gaussian { length_scale: p.length_scale }, base)?;
    let rep = mc_rule_bound_check(&spec, &p.n, p.trials, job.seed)?;
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n, "mean": r.mean, "median": r.median, "q90": r.q90, "bound": r.bound,
                "allowed": r.allowed, "pass": r.pass,
                "importance_mean": r.importance_mean, "importance_q90": r.importance_q90,
            })
        })
        .collect();
    let table = rep.rows.iter().map(|r| vec![r.n as f64, r.mean, r.bound, r.median, r.q90]).collect();
    Ok(Outcome {
        status: Status::Ok,
        result: json!({ "c": rep.c, "trials": rep.trials, "pass": rep.pass(), "rows": rows }),
        table: Some((vec!["n", "achieved", "bound", "median", "q90"], table)),
    })
}

fn widths_tail(job: &Job) -> Result<Outcome> {
    let p: TailParams = params(job)?;
    let n_max = p.n.iter().copied().max().unwrap_or(0);
    let terms = n_max + p.tail_len;
    if p.grid <= terms {
        bail!("a grid of {} points cannot resolve {terms} orthonormal functions", p.grid);
    }
    let xs: Vec<f64> = (0..p.grid).map(|i| i as f64 / p.grid as f64).collect();
    let base = DiscreteMeasure::uniform(PointList::from_scalars(&xs), 1.0)?;
    let eta = FunctionSystem::real_trig(terms, 1.0, true);
    let sigma = SingularSequence::Geometric { first: p.first, ratio: p.ratio };
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &n in &p.n {
        let r = tail_bound_rule(&sigma, &eta, &base, n, p.tail_len, job.tolerances.reduce())?;
        table.push(vec![n as f64, r.achieved, r.bound, r.rule.len() as f64]);
        rows.push(json!({
            "n": n, "achieved": r.achieved, "bound": r.bound, "nodes": r.rule.len(),
            "truncated_tail": r.truncated_tail, "analytic_tail": r.analytic_tail, "pass": r.pass,
            "node_ids": r.rule.node_ids, "weights": r.rule.weights.as_real(),
        }));
    }
    let pass = rows.iter().all(|r| r["pass"] == Value::Bool(true));
    Ok(Outcome {
        status: Status::Ok,
        result: json!({ "pass": pass, "rows": rows }),
        table: Some((vec!["n", "achieved", "bound", "nodes"], table)),
    })
}

fn widths_kolmogorov(job: &Job) -> Result<Outcome> {
    let sys = match job.inputs.get("system") {
        Some(Value::Null) | None => None,
        Some(v) => Some(SystemSpec::from_value(v)?.build()?),
    };
    let class = system_input(job, "class")?;
    let mu = measure_input(job, "measure")?;
    let rep = kolmogorov_bound_rule(sys.as_ref(), &class, &mu, job.tolerances.reduce())?;
    let n = sys.as_ref().map_or(0, FunctionSystem::len);
    Ok(Outcome {
        status: Status::Ok,
        result: json!({
            "n": n, "sampled_error": rep.sampled_error, "distance": rep.distance, "bound": rep.bound,
            "pass": rep.pass, "nodes": rep.rule.len(), "node_ids": rep.rule.node_ids,
            "weights": rep.rule.weights.as_real(),
        }),
        table: Some((vec!["n", "achieved", "bound"], vec![vec![n as f64, rep.sampled_error, rep.bound]])),
    })
}
