use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use tchak_core::measures::moments;

use crate::artifact::{Artifact, Job, Status, Tolerances, VERSION};
use crate::formats::{
    matrix_value, read_column, read_family, read_json, read_matrix, read_measure, read_system, rule_from_value,
    MeasureDoc, SystemSpec,
};
use crate::jobs::{execute, DoptParams, McParams, MzParams, Outcome, QuadratureParams, TailParams};

#[derive(Debug, Parser)]
#[command(name = "tchak", version, about = "Exact non-negative discretization of integrals, frames and designs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Feasibility tolerance for cone and span tests.
    #[arg(long, default_value_t = tchak_core::DEFAULT_FEASIBILITY_TOL)]
    pub tol: f64,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, default_value_t = tchak_core::DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Relative threshold below which weights are dropped.
    #[arg(long, default_value_t = tchak_core::DEFAULT_WEIGHT_TOL)]
    pub weight_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Artifact path; the default depends on the subcommand and outcome.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances { tol: self.tol, rank_tol: self.rank_tol, weight_tol: self.weight_tol }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Non-negative exact rule for a function system and a discrete measure.
    Quadrature {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        /// Also preserve the total mass.
        #[arg(long)]
        normalized: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Positive discretization of a linear functional on a finite domain.
    Functional {
        /// JSON with `system`, `omega` and `values`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Exact discrete L_p norms for even p.
    Mz {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        /// Random coefficient vectors used to check the rule.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Frame scaling, tuning and subsampling.
    Frame {
        #[command(subcommand)]
        op: FrameOp,
    },
    /// D-optimal design on rescaled candidate vectors.
    Dopt {
        #[arg(long)]
        family: PathBuf,
        /// Stop once the largest leverage is below n(1 + epsilon).
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        /// Enable away steps.
        #[arg(long)]
        away: bool,
        /// Accept the design when det ≥ 1 − det_tol.
        #[arg(long, default_value_t = 1e-6)]
        det_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Worst-case error experiments.
    Widths {
        #[command(subcommand)]
        op: WidthsOp,
    },
    /// Recompute an artifact, or the residual of a rule, and compare.
    Verify {
        #[arg(long, conflicts_with_all = ["rule", "system", "measure"])]
        artifact: Option<PathBuf>,
        #[arg(long, requires_all = ["system", "measure"])]
        rule: Option<PathBuf>,
        #[arg(long)]
        system: Option<PathBuf>,
        #[arg(long)]
        measure: Option<PathBuf>,
        /// Allowed gap between the stored and recomputed residual.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum FrameOp {
    /// Decide whether the family can be reweighted into a Parseval frame.
    Scale {
        /// CSV with one vector per row.
        #[arg(long)]
        family: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reweight the family to a prescribed frame operator.
    Tune {
        #[arg(long)]
        family: PathBuf,
        /// CSV with the target matrix.
        #[arg(long)]
        target: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Keep a small sub-family with the same frame operator.
    Subsample {
        #[arg(long)]
        family: PathBuf,
        /// One weight per vector; defaults to all ones.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum WidthsOp {
    /// Mean worst-case error of iid rules against C/√n for a Gaussian kernel.
    Mc {
        #[arg(long, default_value_t = 0.1)]
        length_scale: f64,
        /// Midpoint grid size on [0, 1], used when no measure is given.
        #[arg(long, default_value_t = 2000)]
        grid: usize,
        #[arg(long)]
        measure: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64,256")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Plot data path; defaults to the artifact path with a .csv extension.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Tail-bound rules for a geometric singular sequence on a trigonometric basis.
    Tail {
        #[arg(long, default_value_t = 0.5)]
        first: f64,
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 40)]
        tail_len: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Mass-preserving rule checked against the sup-norm distance of a sampled class.
    Kolmogorov {
        /// Approximation space; omitted means the zero space.
        #[arg(long)]
        system: Option<PathBuf>,
        /// Real system whose components are the class members.
        #[arg(long)]
        class: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 on success, 2 on certified infeasibility, 1 on error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn threads() -> Result<usize> {
    match std::env::var("TCHAK_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => {
            let n: usize = s.trim().parse().with_context(|| format!("TCHAK_THREADS: invalid value '{s}'"))?;
            if n == 0 {
                bail!("TCHAK_THREADS must be positive");
            }
            Ok(n)
        }
    }
}

fn log_run(job: &Job) -> Result<()> {
    let cap = threads()?;
    let t = job.tolerances;
    eprintln!(
        "tchak {VERSION} {}: seed={} tol={:e} rank_tol={:e} weight_tol={:e} threads=1 (cap {cap})",
        job.kind, job.seed, t.tol, t.rank_tol, t.weight_tol
    );
    Ok(())
}

struct Request {
    job: Job,
    common: Common,
    /// Default artifact names for success and infeasibility.
    names: (&'static str, &'static str),
    csv: Option<PathBuf>,
}

fn request(kind: &str, common: Common, inputs: Value, params: Value, names: (&'static str, &'static str)) -> Request {
    let job = Job { kind: kind.to_string(), seed: common.seed, tolerances: common.tolerances(), inputs, params };
    Request { job, common, names, csv: None }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let req = match cmd {
        Command::Quadrature { system, measure, normalized, common } => request(
            "quadrature",
            common,
            json!({ "system": read_system(&system)?.to_value(), "measure": read_measure(&measure)?.to_value() }),
            serde_json::to_value(QuadratureParams { normalized })?,
            ("rule.json", "rule.json"),
        ),
        Command::Functional { input, common } => {
            let doc: Value = read_json(&input)?;
            let sys = doc.get("system").with_context(|| format!("{}: missing 'system'", input.display()))?;
            let spec = SystemSpec::from_value(sys).with_context(|| format!("{}: system", input.display()))?;
            spec.build().with_context(|| format!("{}: system", input.display()))?;
            let omega = doc.get("omega").with_context(|| format!("{}: missing 'omega'", input.display()))?;
            let values = doc.get("values").with_context(|| format!("{}: missing 'values'", input.display()))?;
            request(
                "functional",
                common,
                json!({ "system": spec.to_value(), "omega": omega, "values": values }),
                json!({}),
                ("functional.json", "certificate.json"),
            )
        }
        Command::Mz { p, system, measure, trials, common } => request(
            "mz",
            common,
            json!({ "system": read_system(&system)?.to_value(), "measure": read_measure(&measure)?.to_value() }),
            serde_json::to_value(MzParams { p, trials })?,
            ("mz.json", "mz.json"),
        ),
        Command::Frame { op } => match op {
            FrameOp::Scale { family, common } => request(
                "frame-scale",
                common,
                json!({ "family": matrix_value(&read_family(&family)?) }),
                json!({}),
                ("scale.json", "certificate.json"),
            ),
            FrameOp::Tune { family, target, common } => request(
                "frame-tune",
                common,
                json!({ "family": matrix_value(&read_family(&family)?), "target": matrix_value(&read_matrix(&target)?) }),
                json!({}),
                ("tune.json", "certificate.json"),
            ),
            FrameOp::Subsample { family, weights, common } => {
                let fam = read_family(&family)?;
                let w = match weights {
                    Some(p) => read_column(&p)?,
                    None => vec![1.0; fam.ncols()],
                };
                request(
                    "frame-subsample",
                    common,
                    json!({ "family": matrix_value(&fam), "weights": w }),
                    json!({}),
                    ("subsample.json", "subsample.json"),
                )
            }
        },
        Command::Dopt { family, epsilon, max_iter, away, det_tol, common } => request(
            "dopt",
            common,
            json!({ "family": matrix_value(&read_family(&family)?) }),
            serde_json::to_value(DoptParams { epsilon, max_iter, away_steps: away, det_tol })?,
            ("dopt.json", "certificate.json"),
        ),
        Command::Widths { op } => match op {
            WidthsOp::Mc { length_scale, grid, measure, n, trials, csv, common } => {
                let inputs = match measure {
                    Some(p) => json!({ "measure": read_measure(&p)?.to_value() }),
                    None => json!({}),
                };
                let params = serde_json::to_value(McParams { length_scale, grid, n, trials })?;
                Request { csv, ..request("widths-mc", common, inputs, params, ("widths_mc.json", "widths_mc.json")) }
            }
            WidthsOp::Tail { first, ratio, grid, n, tail_len, csv, common } => {
                let params = serde_json::to_value(TailParams { first, ratio, grid, n, tail_len })?;
                Request {
                    csv,
                    ..request("widths-tail", common, json!({}), params, ("widths_tail.json", "widths_tail.json"))
                }
            }
            WidthsOp::Kolmogorov { system, class, measure, csv, common } => {
                let sys = match system {
                    Some(p) => read_system(&p)?.to_value(),
                    None => Value::Null,
                };
                let inputs = json!({
                    "system": sys,
                    "class": read_system(&class)?.to_value(),
                    "measure": read_measure(&measure)?.to_value(),
                });
                let names = ("widths_kolmogorov.json", "widths_kolmogorov.json");
                Request { csv, ..request("widths-kolmogorov", common, inputs, json!({}), names) }
            }
        },
        Command::Verify { artifact, rule, system, measure, tol } => {
            return match (artifact, rule, system, measure) {
                (Some(a), _, _, _) => verify_artifact(&a),
                (None, Some(r), Some(s), Some(m)) => verify_rule(&r, &s, &m, tol),
                _ => bail!("verify needs --artifact, or --rule with --system and --measure"),
            };
        }
    };
    produce(req)
}

fn produce(req: Request) -> Result<i32> {
    log_run(&req.job)?;
    let outcome = execute(&req.job)?;
    let art = Artifact::new(&req.job, outcome.status, outcome.result.clone());
    let out = req.common.out.clone().unwrap_or_else(|| {
        PathBuf::from(if outcome.status == Status::Ok { req.names.0 } else { req.names.1 })
    });
    art.write(&out)?;
    if let Some(table) = &outcome.table {
        let csv_path = req.csv.clone().unwrap_or_else(|| out.with_extension("csv"));
        write_table(&csv_path, table)?;
        eprintln!("wrote {}", csv_path.display());
    }
    eprintln!("wrote {} ({})", out.display(), status_word(outcome.status));
    Ok(outcome.status.exit_code())
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Ok => "ok",
        Status::Infeasible => "infeasible, certificate written",
    }
}

fn write_table(path: &Path, (header, rows): &(Vec<&'static str>, Vec<Vec<f64>>)) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Re-runs the job embedded in an artifact and compares the bytes.
pub fn verify_artifact(path: &Path) -> Result<i32> {
    let (art, bytes) = Artifact::read(path)?;
    if art.version != VERSION {
        bail!("{} was written by version {}, this is {VERSION}", path.display(), art.version);
    }
    let job = art.job();
    log_run(&job)?;
    let Outcome { status, result, .. } = execute(&job)?;
    let redo = Artifact::new(&job, status, result);
    let fresh = redo.to_bytes()?;
    if fresh != bytes {
        let differing = first_difference(&art.result, &redo.result);
        bail!(
            "{}: recomputed artifact differs{}",
            path.display(),
            differing.map(|k| format!(" (first at result.{k})")).unwrap_or_default()
        );
    }
    if let Some(rule) = art.result.get("rule") {
        residual_check(&job, rule)?;
    }
    eprintln!("{}: verified, bit-identical", path.display());
    Ok(0)
}

fn first_difference(a: &Value, b: &Value) -> Option<String> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, v) in x {
                match y.get(k) {
                    Some(w) if w == v => {}
                    Some(w) => return Some(first_difference(v, w).map_or(k.clone(), |s| format!("{k}.{s}"))),
                    None => return Some(k.clone()),
                }
            }
            y.keys().find(|k| !x.contains_key(*k)).cloned()
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .position(|(v, w)| v != w)
            .map(|i| first_difference(&x[i], &y[i]).map_or(format!("[{i}]"), |s| format!("[{i}].{s}"))),
        _ if a == b => None,
        _ => Some(String::new()),
    }
    .map(|s| s.trim_end_matches('.').to_string())
}

/// For quadrature artifacts, the stored residual also has to match a fresh
/// evaluation of the stored rule.
fn residual_check(job: &Job, rule: &Value) -> Result<()> {
    if job.kind != "quadrature" {
        return Ok(());
    }
    let sys = SystemSpec::from_value(&job.inputs["system"])?.build()?;
    let mu = MeasureDoc::from_value(&job.inputs["measure"])?.build()?;
    let stored = rule_from_value(rule)?;
    let again = stored.recompute_residual(&sys, &moments(&sys, &mu)?)?;
    if again.to_bits() != stored.residual.to_bits() {
        bail!("stored residual {:e} but the stored rule gives {again:e}", stored.residual);
    }
    Ok(())
}

fn verify_rule(rule: &Path, system: &Path, measure: &Path, tol: f64) -> Result<i32> {
    let doc: Value = read_json(rule)?;
    let rv = match doc.get("result").and_then(|r| r.get("rule")) {
        Some(r) => r.clone(),
        None => doc,
    };
    let stored = rule_from_value(&rv).with_context(|| format!("{}: invalid rule", rule.display()))?;
    let sys = read_system(system)?.build()?;
    let mu = read_measure(measure)?.build()?;
    let target = moments(&sys, &mu)?;
    let again = stored.recompute_residual(&sys, &target)?;
    let gap = (again - stored.residual).abs();
    eprintln!(
        "stored residual {:e}, recomputed {again:e}, difference {gap:e}, relative residual {:e}",
        stored.residual,
        again / target.norm().max(f64::MIN_POSITIVE)
    );
    if gap.is_nan() || gap > tol {
        bail!("recomputed residual differs from the stored one by {gap:e} (allowed {tol:e})");
    }
    Ok(0)
}
