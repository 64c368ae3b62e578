use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use thermal_channel::channel::{QuantumChannel, ReferenceState};
use thermal_channel::constraints::ConstraintSet;
use thermal_channel::io::{self, hermitian_to_data, SolutionFile, FORMAT_VERSION};
use thermal_channel::learner::{self, RunOptions, Shots, UpdateOptions};
use thermal_channel::linalg::operator_norm;
use thermal_channel::metrics::{channel_entropy_with, channel_relative_entropy_with, diamond_distance, ReferenceSearch};
use thermal_channel::micro::{iid_concentration_experiment, ParamSchedule};
use thermal_channel::presets::{channel_registry, constraint_registry, Params};
use thermal_channel::solver::{optimality_residual, thermal_channel, verify_structure, SolverOptions};
use thermal_channel::Error;

use crate::output::{DiamondOutput, EntropyOutput, RelentOutput, VerifyOutput};
use crate::{
    ConstraintSource, DiamondArgs, EntropyArgs, LearnArgs, MaxentArgs, MicroArgs, RelentArgs, VerifyArgs,
};

/// Thresholds applied by `verify`.
const GIBBS_TOL: f64 = 1e-5;
const IDENTITY_TOL: f64 = 1e-5;
const OPTIMALITY_TOL: f64 = 1e-3;
const CONSTRAINT_TOL: f64 = 1e-6;
const CPTP_TOL: f64 = 1e-7;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    /// 2: invalid input or infeasible problem; 3: numerical failure; 4: I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 4,
            CliError::ChecksFailed(_) => 3,
            CliError::Core(e) => match e {
                Error::Io(_) => 4,
                Error::NonFinite(_)
                | Error::NotConverged { .. }
                | Error::DualDivergence { .. }
                | Error::EigenvalueBelowFloor { .. } => 3,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

/// A channel argument: an existing file, otherwise a preset spec.
fn load_channel(arg: &str) -> CliResult<QuantumChannel> {
    let path = Path::new(arg);
    if path.is_file() {
        let file: io::ChannelFile = serde_json::from_str(&read_text(path)?).map_err(Error::from)?;
        return Ok(file.to_channel()?);
    }
    if arg.ends_with(".json") || arg.contains(std::path::MAIN_SEPARATOR) {
        return Err(CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "channel file not found"),
        });
    }
    Ok(channel_registry().build_spec(arg)?)
}

fn parse_params(raw: &[String]) -> CliResult<Params> {
    let mut params = Params::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("parameter `{item}` is not KEY=VALUE")))?;
        let value = serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.to_string()));
        params.insert(k.to_string(), value);
    }
    Ok(params)
}

fn load_constraints(src: &ConstraintSource) -> CliResult<(ConstraintSet, String)> {
    match (&src.preset, &src.constraints) {
        (Some(name), None) => {
            let mut params = parse_params(&src.params)?;
            if let Some(h) = &src.h {
                params.insert("H".into(), Value::String(h.clone()));
            }
            if let Some(q) = src.q {
                params.insert("q".into(), serde_json::json!(q));
            }
            Ok((constraint_registry().build(name, &params)?, format!("preset {name}")))
        }
        (None, Some(path)) => {
            if !src.params.is_empty() || src.h.is_some() || src.q.is_some() {
                return Err(CliError::Usage("preset parameters given together with a constraint file".into()));
            }
            let file: io::ConstraintFile = serde_json::from_str(&read_text(path)?).map_err(Error::from)?;
            Ok((file.to_constraint_set()?, path.display().to_string()))
        }
        _ => Err(CliError::Usage("give exactly one of --preset or --constraints".into())),
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.10}")
}

pub fn maxent(a: &MaxentArgs) -> CliResult<()> {
    let (cs, source) = load_constraints(&a.source)?;
    let opts = SolverOptions { tol: a.tol, restarts: a.restarts, seed: a.seed, ..SolverOptions::default() };
    let th = thermal_channel(&cs, &opts)?;
    println!("thermal channel for {source} ({} constraints, {}→{})", cs.len(), cs.d_in(), cs.d_out());
    println!("seed: {}", a.seed);
    println!("channel entropy S = {}", fmt(th.entropy));
    for (c, mu) in cs.items().iter().zip(&th.mu) {
        println!("  mu[{}] = {}", c.label, fmt(*mu));
    }
    println!("boundary regime: {}", th.boundary_flag);
    println!("constraint residual: {:.3e}", th.residuals.constraint);
    if let Some(g) = th.residuals.gibbs_form {
        println!("Gibbs-form residual: {g:.3e}");
    }
    println!("entropy identity gap: {:.3e}", th.residuals.entropy_identity);
    if let Some(o) = th.residuals.optimality {
        println!("reference optimality residual: {o:.3e}");
    }
    if let Some(out) = &a.out {
        write_json(out, &SolutionFile::new(&th, &cs, a.seed)?)?;
    }
    Ok(())
}

pub fn entropy(a: &EntropyArgs) -> CliResult<()> {
    let ch = load_channel(&a.channel)?;
    let r = channel_entropy_with(&ch, &ReferenceSearch::new(a.restarts, a.seed))?;
    println!("seed: {}", a.seed);
    println!("S({}) = {}", a.channel, fmt(r.value));
    if let Some(out) = &a.out {
        write_json(
            out,
            &EntropyOutput {
                format_version: FORMAT_VERSION,
                command: "entropy",
                channel: a.channel.clone(),
                seed: a.seed,
                restarts: a.restarts,
                value: r.value,
                phi: hermitian_to_data(r.phi.operator()),
            },
        )?;
    }
    Ok(())
}

pub fn relent(a: &RelentArgs) -> CliResult<()> {
    let (n, m) = (load_channel(&a.a)?, load_channel(&a.b)?);
    let r = channel_relative_entropy_with(&n, &m, &ReferenceSearch::new(a.restarts, a.seed))?;
    let infinite = r.value.is_infinite();
    println!("seed: {}", a.seed);
    println!("D({} ‖ {}) = {}", a.a, a.b, if infinite { "inf".to_string() } else { fmt(r.value) });
    if let Some(out) = &a.out {
        write_json(
            out,
            &RelentOutput {
                format_version: FORMAT_VERSION,
                command: "relent",
                a: a.a.clone(),
                b: a.b.clone(),
                seed: a.seed,
                restarts: a.restarts,
                infinite,
                value: (!infinite).then_some(r.value),
                phi: (!infinite).then(|| hermitian_to_data(r.phi.operator())),
            },
        )?;
    }
    Ok(())
}

pub fn diamond(a: &DiamondArgs) -> CliResult<()> {
    let (n, m) = (load_channel(&a.a)?, load_channel(&a.b)?);
    let d = diamond_distance(&n, &m)?;
    println!("½‖{} − {}‖⋄ = {}{}", a.a, a.b, fmt(d.value), if d.approximate { " (lower bound)" } else { "" });
    if let Some(out) = &a.out {
        write_json(
            out,
            &DiamondOutput {
                format_version: FORMAT_VERSION,
                command: "diamond",
                a: a.a.clone(),
                b: a.b.clone(),
                value: d.value,
                approximate: d.approximate,
            },
        )?;
    }
    Ok(())
}

pub fn learn(a: &LearnArgs) -> CliResult<()> {
    let target = load_channel(&a.target)?;
    let opts = RunOptions {
        iterations: a.iters,
        eta: a.eta,
        shots: if a.exact { Shots::Exact } else { Shots::Finite(a.shots) },
        seed: a.seed,
        update: UpdateOptions { restarts: a.restarts, ..UpdateOptions::default() },
        metric_restarts: a.restarts,
        timing: a.timing,
    };
    if !(a.eta > 0.0 && a.eta < 1.0) {
        return Err(CliError::Usage(format!("--eta {} must lie in (0, 1)", a.eta)));
    }
    if !a.exact && a.shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    let trace = learner::run(&target, &opts)?;
    let csv = trace.to_csv(&[("true", a.target.clone()), ("iters", a.iters.to_string()), ("restarts", a.restarts.to_string())]);
    write_text(&a.out, &csv)?;
    let (first, last) = (trace.first(), trace.last());
    println!("seed: {}", a.seed);
    println!("rounds: {}", a.iters);
    println!("D(M‖true): {} → {}", learner_fmt(first.rel_entropy), learner_fmt(last.rel_entropy));
    println!("diamond:   {} → {}", fmt(first.diamond), fmt(last.diamond));
    Ok(())
}

fn learner_fmt(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        fmt(v)
    }
}

fn solution_and_constraints(path: &Path) -> CliResult<(SolutionFile, ConstraintSet)> {
    let file: SolutionFile = serde_json::from_str(&read_text(path)?).map_err(Error::from)?;
    let cs = file.constraint_set()?;
    Ok((file, cs))
}

pub fn micro(a: &MicroArgs) -> CliResult<()> {
    let (file, stored) = solution_and_constraints(&a.thermal)?;
    let th = file.to_solution()?;
    let cs = match &a.preset {
        Some(name) => constraint_registry().build(name, &parse_params(&a.params)?)?,
        None if a.params.is_empty() => stored,
        None => return Err(CliError::Usage("--param needs --preset".into())),
    };
    if cs.is_empty() {
        return Err(CliError::Usage("the concentration experiment needs at least one constraint".into()));
    }
    if th.mu.len() != cs.len() {
        return Err(CliError::Usage(format!(
            "solution has {} multipliers but the constraint set has {} constraints",
            th.mu.len(),
            cs.len()
        )));
    }
    if a.nmin == 0 || a.nmax < a.nmin {
        return Err(CliError::Usage("need 1 ≤ nmin ≤ nmax".into()));
    }
    let sigmas = a
        .sigma
        .iter()
        .map(|s| match s.as_str() {
            "mixed" => Ok(ReferenceState::maximally_mixed(th.channel.d_in())),
            "phi" => Ok(th.phi.clone()),
            other => Err(CliError::Usage(format!("unknown reference `{other}` (use mixed, phi)"))),
        })
        .collect::<CliResult<Vec<_>>>()?;
    let schedule = match (a.eta, a.y) {
        (Some(eta), Some(y)) => ParamSchedule::Fixed { eta, y, nu: 1.5 },
        (None, None) => {
            let c_min = match a.c_min {
                Some(c) => c,
                None => cs
                    .items()
                    .iter()
                    .map(|c| operator_norm(&c.op))
                    .collect::<thermal_channel::Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min),
            };
            ParamSchedule::Regime { gamma: a.gamma, c_min }
        }
        _ => return Err(CliError::Usage("--eta and --y go together".into())),
    };
    let ns: Vec<usize> = (a.nmin..=a.nmax).collect();
    let table = iid_concentration_experiment(&th, &cs, &sigmas, &ns, &schedule)?;
    let schedule_desc = match schedule {
        ParamSchedule::Fixed { eta, y, nu } => format!("fixed eta={eta} y={y} nu={nu}"),
        ParamSchedule::Regime { gamma, c_min } => format!("regime gamma={gamma} c_min={c_min}"),
    };
    let csv = table.to_csv(&[
        ("thermal_seed", file.seed.to_string()),
        ("schedule", schedule_desc),
        ("sigma", a.sigma.join(";")),
    ]);
    write_text(&a.out, &csv)?;
    for ((j, s), slope) in table.slopes() {
        println!("constraint {j}, reference {}: fitted log-tail slope {slope:.6}", a.sigma[s]);
    }
    if let Err(e) = table.check_slopes() {
        println!("warning: {e}");
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    let (file, cs) = solution_and_constraints(&a.solution)?;
    let th = file.to_solution()?;
    let report = verify_structure(&th, &cs)?;
    let diag = th.channel.diagnostics();
    let cptp = diag.cp_violation.max(diag.tp_violation);
    let optimality = if th.boundary_flag { None } else { Some(optimality_residual(&th.channel, &th.phi)?) };
    let passed = report.constraint <= CONSTRAINT_TOL
        && cptp <= CPTP_TOL
        && report.gibbs_form.is_none_or(|g| g <= GIBBS_TOL)
        && report.entropy_identity <= IDENTITY_TOL
        && optimality.is_none_or(|o| o <= OPTIMALITY_TOL);
    println!("constraint residual:  {:.3e}", report.constraint);
    println!("CPTP violation:       {cptp:.3e}");
    match report.gibbs_form {
        Some(g) => println!("Gibbs-form residual:  {g:.3e}"),
        None => println!("Gibbs-form residual:  skipped (boundary regime)"),
    }
    println!("entropy identity gap: {:.3e}", report.entropy_identity);
    match optimality {
        Some(o) => println!("optimality residual:  {o:.3e}"),
        None => println!("optimality residual:  skipped (boundary regime)"),
    }
    if let Some(out) = &a.out {
        write_json(
            out,
            &VerifyOutput {
                format_version: FORMAT_VERSION,
                command: "verify",
                solution_seed: file.seed,
                constraint: report.constraint,
                cptp,
                gibbs_form: report.gibbs_form,
                entropy_identity: report.entropy_identity,
                optimality,
                limit_regime: report.limit_regime,
                passed,
            },
        )?;
    }
    if passed {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::ChecksFailed("structure checks failed".into()))
    }
}
