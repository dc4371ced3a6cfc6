#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracorder::forward::{observe_mode1, write_field_csv, write_series_csv, ForwardSolution};
use fracorder::inverse::{
    admissibility_check, invert_rho, invert_rho_sigma, multi_start, ObservationSet, RecoveryResult, RhoBox, SigmaBox,
    SigmaSpec, DEFAULT_RHO_BOX, DEFAULT_TOL,
};
use fracorder::specfun::{ml_eval, ml_neg, MLArgument};
use fracorder::Error;
use serde::Serialize;

mod config;
mod json;
mod selftest;

use config::{Experiment, ExperimentConfig, Format};

const EXIT_SELFTEST: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_TOLERANCE: u8 = 4;
const EXIT_INADMISSIBLE: u8 = 5;
const EXIT_DETERMINANT: u8 = 6;

#[derive(Parser)]
#[command(
    name = "fracorder",
    version,
    about = "Fractional diffusion: forward solves and order recovery"
)]
struct Cli {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; overrides the config's output.path
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate E_rho(-lambda^sigma t^rho), or E_rho(z)
    Ml(MlArgs),
    /// Time series (or field values) of the forward solution
    Forward { config_path: Option<PathBuf> },
    /// Observation of the first mode at t0 (and t1), as invert input
    Observe {
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: Option<f64>,
        config_path: Option<PathBuf>,
    },
    /// Recover rho, or (rho, sigma), from an observation
    Invert(InvertArgs),
    /// Admissibility report only
    Check(InvertArgs),
    Selftest {
        #[arg(value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Args)]
struct MlArgs {
    #[arg(long)]
    rho: f64,
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["sigma", "lambda", "t"])]
    z: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct InvertArgs {
    /// Observation JSON; stdin when omitted or "-"
    input: Option<PathBuf>,
    #[arg(long, value_parser = parse_pair)]
    rho_box: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_pair, conflicts_with = "sigma")]
    sigma_box: Option<(f64, f64)>,
    /// Known sigma (first inverse problem)
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Extra Newton restarts from random points (two-parameter problem)
    #[arg(long, default_value_t = 0)]
    restarts: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    GammaTable,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected a,b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

struct Failure {
    code: u8,
    message: String,
    stdout: Option<String>,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            stdout: None,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Inadmissible(_)
        | Error::NonMonotone { .. }
        | Error::RootBeyondClamp { .. }
        | Error::SpacingViolation { .. }
        | Error::InnerBracket { .. } => EXIT_INADMISSIBLE,
        Error::DeterminantSignChange(_) => EXIT_DETERMINANT,
        Error::Io(_) | Error::InvalidSpectrum(_) => EXIT_CONFIG,
        _ => EXIT_TOLERANCE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(exit_code(&e), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(s) = f.stdout {
                println!("{s}");
            }
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Ml(a) => cmd_ml(a),
        Command::Forward { config_path } => cmd_forward(&load(cli, config_path)?, cli.out.as_deref()),
        Command::Observe { t0, t1, config_path } => cmd_observe(&load(cli, config_path)?, *t0, *t1, cli.out.as_deref()),
        Command::Invert(a) => cmd_invert(a, cli.seed, cli.out.as_deref()),
        Command::Check(a) => cmd_check(a, cli.out.as_deref()),
        Command::Selftest { level, inject_fault } => cmd_selftest(*level, *inject_fault, cli.seed),
    }
}

fn load(cli: &Cli, positional: &Option<PathBuf>) -> Result<Experiment, Failure> {
    let path = positional
        .as_ref()
        .or(cli.config.as_ref())
        .ok_or_else(|| Failure::new(EXIT_USAGE, "a config path is required"))?;
    ExperimentConfig::load(path)
        .and_then(ExperimentConfig::build)
        .map_err(|m| Failure::new(EXIT_CONFIG, m))
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String, Failure> {
    json::to_string(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::new(EXIT_TOLERANCE, e.to_string()))
}

fn cmd_ml(a: &MlArgs) -> Outcome {
    let value = if let Some(z) = a.z {
        if !(a.rho > 0.0 && a.rho <= 1.0) {
            return Err(Failure::new(EXIT_USAGE, "rho must be in (0,1]"));
        }
        if !(z <= 0.0 && z.is_finite()) {
            return Err(Failure::new(EXIT_USAGE, "z must be <= 0"));
        }
        ml_neg(a.rho, -z)?
    } else {
        if !(a.rho > 0.0 && a.rho < 1.0) {
            return Err(Failure::new(EXIT_USAGE, "rho must be in (0,1)"));
        }
        let (Some(sigma), Some(lambda), Some(t)) = (a.sigma, a.lambda, a.t) else {
            return Err(Failure::new(EXIT_USAGE, "give --z, or all of --sigma --lambda --t"));
        };
        let arg = MLArgument::new(a.rho, sigma, lambda, t).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
        ml_eval(&arg)?
    };
    emit(&json_line(&value)?, None)
}

fn cmd_forward(exp: &Experiment, out: Option<&Path>) -> Outcome {
    if exp.times.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, "times: at least one time is required"));
    }
    let t_min = exp.times.iter().copied().fold(f64::INFINITY, f64::min);
    let sol = ForwardSolution::new(exp.model.clone(), exp.params, exp.data.clone(), t_min, exp.tol)?;
    let mut buf = Vec::new();
    match (&exp.points, exp.output.format) {
        (Some(points), Format::Csv) => write_field_csv(&mut buf, &sol.field_rows(points, &exp.times)?)?,
        (None, Format::Csv) => write_series_csv(&mut buf, &sol.time_series(&exp.times)?)?,
        (points, Format::Json) => {
            #[derive(Serialize)]
            struct Output {
                k_used: usize,
                tail_bound: f64,
                series: Vec<fracorder::forward::SeriesRow>,
                #[serde(skip_serializing_if = "Option::is_none")]
                field: Option<Vec<fracorder::forward::FieldRow>>,
            }
            let field = points.as_ref().map(|p| sol.field_rows(p, &exp.times)).transpose()?;
            let o = Output {
                k_used: sol.k_used,
                tail_bound: sol.tail_bound,
                series: sol.time_series(&exp.times)?,
                field,
            };
            buf = json_line(&o)?.into_bytes();
        }
    }
    let text = String::from_utf8(buf).expect("UTF-8 output");
    emit(&text, out.or(exp.output.path.as_deref()))
}

fn cmd_observe(exp: &Experiment, t0: f64, t1: Option<f64>, out: Option<&Path>) -> Outcome {
    for t in std::iter::once(t0).chain(t1) {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::new(EXIT_USAGE, "observation times must be positive"));
        }
    }
    let o0 = observe_mode1(&exp.model, &exp.params, &exp.data, t0)?;
    if o0.phi_vanishes {
        eprintln!(
            "warning: phi_1 vanishes (|phi_1| = {:e}); the observation carries no information",
            o0.phi_abs
        );
    }
    let obs = match t1 {
        None => ObservationSet::single(t0, o0.value, o0.phi_abs, o0.lambda),
        Some(t1) => {
            let o1 = observe_mode1(&exp.model, &exp.params, &exp.data, t1)?;
            ObservationSet::pair(t0, o0.value, t1, o1.value, o0.phi_abs, o0.lambda)
        }
    };
    emit(&json_line(&obs)?, out)
}

fn read_observation(input: &Option<PathBuf>) -> Result<ObservationSet, Failure> {
    let text = match input {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read_to_string(p).map_err(|e| Failure::new(EXIT_CONFIG, format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::new(EXIT_CONFIG, e.to_string()))?;
            s
        }
    };
    let obs: ObservationSet =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_CONFIG, format!("observation: {e}")))?;
    obs.validate()
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("observation: {e}")))?;
    Ok(obs)
}

enum Problem {
    Rho(f64),
    RhoSigma(SigmaBox),
}

fn problem(a: &InvertArgs, obs: &ObservationSet) -> Result<(RhoBox, Problem), Failure> {
    let usage = |e: Error| Failure::new(EXIT_USAGE, e.to_string());
    let rho_box = match a.rho_box {
        Some((lo, hi)) => RhoBox::new(lo, hi).map_err(usage)?,
        None => DEFAULT_RHO_BOX,
    };
    let p = match (a.sigma, a.sigma_box) {
        (Some(s), None) => {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Failure::new(EXIT_USAGE, "sigma must be positive"));
            }
            Problem::Rho(s)
        }
        (None, Some((lo, hi))) => {
            if obs.t1.is_none() {
                return Err(Failure::new(EXIT_CONFIG, "observation: --sigma-box needs t1 and d1"));
            }
            Problem::RhoSigma(SigmaBox::new(lo, hi).map_err(usage)?)
        }
        _ => {
            return Err(Failure::new(
                EXIT_USAGE,
                "exactly one of --sigma or --sigma-box is required",
            ))
        }
    };
    Ok((rho_box, p))
}

fn spec(p: &Problem) -> SigmaSpec {
    match p {
        Problem::Rho(s) => SigmaSpec::Known(*s),
        Problem::RhoSigma(b) => SigmaSpec::Box(*b),
    }
}

#[derive(Serialize)]
struct InvertOutput {
    #[serde(flatten)]
    result: RecoveryResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    restarts: Option<Vec<Option<(f64, f64)>>>,
}

fn cmd_invert(a: &InvertArgs, seed: u64, out: Option<&Path>) -> Outcome {
    if !(a.tol > 0.0) {
        return Err(Failure::new(EXIT_USAGE, "tol must be positive"));
    }
    let obs = read_observation(&a.input)?;
    let (rho_box, p) = problem(a, &obs)?;
    let solved = match &p {
        Problem::Rho(s) => invert_rho(&obs, rho_box, *s, a.tol),
        Problem::RhoSigma(b) => invert_rho_sigma(&obs, rho_box, *b, a.tol),
    };
    let result = match solved {
        Ok(r) => r,
        Err(e) => {
            let mut f = Failure::from(e);
            if f.code == EXIT_INADMISSIBLE {
                if let Ok(r) = admissibility_check(&obs, rho_box, spec(&p)) {
                    f.stdout = Some(json::to_string(&r).map_err(|e| Failure::new(EXIT_TOLERANCE, e.to_string()))?);
                }
            }
            return Err(f);
        }
    };
    let restarts = match (&p, a.restarts) {
        (Problem::RhoSigma(b), n) if n > 0 => Some(
            multi_start(&obs, rho_box, *b, a.tol, n, seed)
                .into_iter()
                .map(|r| r.ok().and_then(|r| r.sigma.map(|s| (r.rho, s))))
                .collect(),
        ),
        _ => None,
    };
    emit(&json_line(&InvertOutput { result, restarts })?, out)
}

fn cmd_check(a: &InvertArgs, out: Option<&Path>) -> Outcome {
    let obs = read_observation(&a.input)?;
    let (rho_box, p) = problem(a, &obs)?;
    let report = admissibility_check(&obs, rho_box, spec(&p))?;
    let text = json_line(&report)?;
    if report.admissible() {
        emit(&text, out)
    } else {
        emit(&text, out)?;
        Err(Failure::new(EXIT_INADMISSIBLE, "observation is not admissible"))
    }
}

fn cmd_selftest(level: LevelArg, fault: Option<FaultArg>, seed: u64) -> Outcome {
    let level = match level {
        LevelArg::Quick => selftest::Level::Quick,
        LevelArg::Full => selftest::Level::Full,
    };
    let fault = match fault {
        None => selftest::Fault::None,
        Some(FaultArg::GammaTable) => selftest::Fault::GammaTable,
    };
    let (checks, extra) = selftest::run(level, fault, seed);
    let mut text = selftest::render(&checks);
    text.push_str(&extra);
    emit(&text, None)?;
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(Failure::new(EXIT_SELFTEST, "selftest failed"))
    }
}
