//! Command-line front end.
//!
//! Every subcommand prints one JSON document on standard output and writes
//! its CSV artifacts to the output directory (`--out`, else
//! `$BERNOULLI_LAB_OUT`, else nowhere). Exit codes: 0 on success, 1 on a
//! solver error, 2 on a usage error, 3 when a computed check failed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::error::{invalid, Error, Result};
use crate::exterior::{solve_exterior_with, ExteriorOptions};
use crate::geometry::{sample_support, BodySpec, DEFAULT_DIRECTIONS};
use crate::harness::{run_suite, Suite, SuiteConfig};
use crate::interior::{
    bernoulli_constant, lambda_ball, solve_interior_with, InteriorOptions, InteriorOutcome, LambdaOptions,
    DEFAULT_BISECT_TOL,
};
use crate::io::{resolve_out_dir, to_json_pretty, write_artifact, write_report_csvs};
use crate::minkowski::{combination_sign, combine_solutions, subsolution_certificate, DEFAULT_HM_TOL};
use crate::ring::{solve_ring, PLaplaceParams, DEFAULT_LEVELS, DEFAULT_NEWTON_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "bernoulli-lab", version, about = "p-Laplacian Bernoulli free-boundary solvers on planar convex domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    /// Number of directions θ_j.
    #[arg(long = "M", default_value_t = DEFAULT_DIRECTIONS)]
    m: usize,
    /// Number of level intervals in t.
    #[arg(long = "L", default_value_t = DEFAULT_LEVELS)]
    l: usize,
    #[arg(long, default_value_t = DEFAULT_NEWTON_TOL)]
    newton_tol: f64,
    /// Fixed-point tolerance of the trial iterations.
    #[arg(long, default_value_t = crate::exterior::DEFAULT_FP_TOL)]
    fp_tol: f64,
    /// Relative width of the final bracket on Λ.
    #[arg(long, default_value_t = DEFAULT_BISECT_TOL)]
    bisect_tol: f64,
    /// Directory for CSV artifacts (default: $BERNOULLI_LAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GridArgs {
    fn params(&self, p: f64) -> Result<PLaplaceParams> {
        let mut params = PLaplaceParams::new(p, self.m, self.l)?;
        params.newton_tol = self.newton_tol;
        params.validate()?;
        Ok(params)
    }

    fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("M".into(), json!(self.m));
        m.insert("L".into(), json!(self.l));
        m.insert("newton_tol".into(), json!(self.newton_tol));
        m.insert("fp_tol".into(), json!(self.fp_tol));
        m.insert("bisect_tol".into(), json!(self.bisect_tol));
        m
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exterior problem: find Ω ⊃ K with |Du| = τ on ∂Ω.
    Exterior {
        /// Body K as JSON text or a path to a JSON file.
        #[arg(long)]
        body: String,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Interior problem: the largest K ⊂ Ω with |Du| = τ on ∂K.
    Interior {
        /// Body Ω as JSON text or a path to a JSON file.
        #[arg(long)]
        body: String,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Bernoulli constant Λ(Ω).
    Lambda {
        #[arg(long)]
        body: String,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Levelwise Minkowski combination of ring solutions.
    Combine {
        /// Ring as `{"outer": <body>, "inner": <body>}`; repeat once per input.
        #[arg(long = "ring", required = true)]
        rings: Vec<String>,
        /// Comma-separated weights summing to 1 (default: equal weights).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        p: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run named verification suites.
    Verify {
        /// bm, urysohn, hadwiger, homogeneity, exterior-inclusion,
        /// interior-inclusion, uniqueness, monotonicity, subsolution,
        /// flucher-rumpf or all.
        #[arg(long)]
        suite: String,
        /// Suite configuration as JSON text or a path to a JSON file.
        #[arg(long)]
        config: Option<String>,
        /// Worker threads for independent checks.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the grid of the configuration.
        #[arg(long = "M")]
        m: Option<usize>,
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long)]
        newton_tol: Option<f64>,
        #[arg(long)]
        fp_tol: Option<f64>,
        #[arg(long)]
        bisect_tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form Bernoulli constant of a ball in R^N.
    Ball {
        #[arg(long = "R", allow_negative_numbers = true)]
        radius: f64,
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long = "N", default_value_t = 2)]
        n: u32,
    },
}

/// What a command produced, before it is printed.
struct Outcome {
    document: Value,
    code: i32,
}

/// Error raised while turning arguments into inputs; reported as usage.
struct Usage(String);

enum Failure {
    Usage(Usage),
    Solver(Error, Value),
}

impl From<Usage> for Failure {
    fn from(u: Usage) -> Self {
        Failure::Usage(u)
    }
}

/// Text of a JSON-valued flag: inline when it starts with `{` or `[`,
/// otherwise the contents of the named file.
fn json_text(arg: &str) -> std::result::Result<String, Usage> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_owned());
    }
    std::fs::read_to_string(arg).map_err(|e| Usage(format!("cannot read '{arg}': {e}")))
}

fn parse_body(arg: &str) -> std::result::Result<BodySpec, Usage> {
    let text = json_text(arg)?;
    BodySpec::from_json(&text).map_err(|e| Usage(format!("--body: {e}")))
}

/// Parses `argv` (including the program name), runs the command and writes
/// its JSON document to `stdout`; diagnostics go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command) {
        Ok(out) => {
            let _ = writeln!(stdout, "{}", to_json_pretty(&out.document));
            out.code
        }
        Err(Failure::Usage(Usage(msg))) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Solver(err, context)) => {
            let doc = json!({"kind": err.kind(), "detail": err.to_string(), "context": context});
            let _ = writeln!(stdout, "{}", to_json_pretty(&doc));
            let _ = writeln!(stderr, "error: {err}");
            EXIT_SOLVER
        }
    }
}

fn execute(cmd: Command) -> std::result::Result<Outcome, Failure> {
    match cmd {
        Command::Exterior { body, tau, p, grid } => {
            let spec = parse_body(&body)?;
            let config = config_echo("exterior", &grid, json!({"body": spec, "tau": tau, "p": p}));
            let out_dir = resolve_out_dir(grid.out.as_deref());
            attach(config.clone(), exterior(&spec, tau, p, &grid, out_dir.as_deref(), config))
        }
        Command::Interior { body, tau, p, grid } => {
            let spec = parse_body(&body)?;
            let config = config_echo("interior", &grid, json!({"body": spec, "tau": tau, "p": p}));
            let out_dir = resolve_out_dir(grid.out.as_deref());
            attach(config.clone(), interior(&spec, tau, p, &grid, out_dir.as_deref(), config))
        }
        Command::Lambda { body, p, grid } => {
            let spec = parse_body(&body)?;
            let config = config_echo("lambda", &grid, json!({"body": spec, "p": p}));
            let out_dir = resolve_out_dir(grid.out.as_deref());
            attach(config.clone(), lambda(&spec, p, &grid, out_dir.as_deref(), config))
        }
        Command::Combine { rings, weights, p, grid } => {
            let mut cases = Vec::with_capacity(rings.len());
            for r in &rings {
                let text = json_text(r)?;
                let case: crate::harness::RingCase =
                    serde_json::from_str(&text).map_err(|e| Usage(format!("--ring: {e}")))?;
                cases.push(case);
            }
            let weights = weights.unwrap_or_else(|| vec![1.0 / cases.len() as f64; cases.len()]);
            if weights.len() != cases.len() {
                return Err(Usage(format!("{} weights given for {} rings", weights.len(), cases.len())).into());
            }
            let config = config_echo("combine", &grid, json!({"rings": cases, "weights": weights, "p": p}));
            let out_dir = resolve_out_dir(grid.out.as_deref());
            attach(config.clone(), combine(&cases, &weights, p, &grid, out_dir.as_deref(), config))
        }
        Command::Verify {
            suite,
            config,
            jobs,
            m,
            l,
            newton_tol,
            fp_tol,
            bisect_tol,
            out,
        } => {
            let suite: Suite = suite.parse().map_err(|e: Error| Usage(e.to_string()))?;
            let mut cfg: SuiteConfig = match config {
                Some(c) => {
                    let text = json_text(&c)?;
                    serde_json::from_str(&text).map_err(|e| Usage(format!("--config: {e}")))?
                }
                None => SuiteConfig::default(),
            };
            cfg.m = m.or(cfg.m);
            cfg.l = l.or(cfg.l);
            cfg.newton_tol = newton_tol.or(cfg.newton_tol);
            cfg.fp_tol = fp_tol.or(cfg.fp_tol);
            cfg.bisect_tol = bisect_tol.or(cfg.bisect_tol);
            if jobs == 0 {
                return Err(Usage("--jobs must be at least 1".into()).into());
            }
            let echo = json!({"command": "verify", "suite": suite.name(), "jobs": jobs, "suite_config": cfg});
            let out_dir = resolve_out_dir(out.as_deref());
            attach(echo.clone(), verify(suite, &cfg, jobs, out_dir.as_deref(), echo))
        }
        Command::Ball { radius, p, n } => {
            let config = json!({"command": "ball", "R": radius, "p": p, "N": n});
            if !(radius > 0.0) || !(p > 1.0) || n < 2 {
                return Err(Failure::Solver(
                    invalid(format!("ball needs R > 0, p > 1 and N ≥ 2 (got R = {radius}, p = {p}, N = {n})")),
                    json!({"config": config}),
                ));
            }
            Ok(Outcome {
                document: json!({"lambda": lambda_ball(radius, p, n), "config": config}),
                code: EXIT_OK,
            })
        }
    }
}

fn config_echo(command: &str, grid: &GridArgs, extra: Value) -> Value {
    let mut m = grid.echo();
    m.insert("command".into(), json!(command));
    if let Value::Object(e) = extra {
        m.extend(e);
    }
    m.insert(
        "out".into(),
        json!(resolve_out_dir(grid.out.as_deref()).map(|p| p.display().to_string())),
    );
    Value::Object(m)
}

fn attach(config: Value, r: Result<Outcome>) -> std::result::Result<Outcome, Failure> {
    r.map_err(|e| Failure::Solver(e, json!({"config": config})))
}

fn artifact_list(paths: &[PathBuf]) -> Value {
    json!(paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())
}

fn exterior(spec: &BodySpec, tau: f64, p: f64, grid: &GridArgs, out: Option<&Path>, config: Value) -> Result<Outcome> {
    let params = grid.params(p)?;
    let h_k = sample_support(spec, params.grid)?;
    let opts = ExteriorOptions {
        fp_tol: grid.fp_tol,
        ..ExteriorOptions::default()
    };
    let sol = solve_exterior_with(&h_k, tau, &params, &opts)?;
    let mut paths = Vec::new();
    if let Some(dir) = out {
        paths.push(write_artifact(dir, "exterior_boundary.csv", |w| sol.write_csv(w))?);
        paths.push(write_artifact(dir, "exterior_ring.csv", |w| sol.ring.field.write_csv(w))?);
        paths.push(write_artifact(dir, "exterior_gradients.csv", |w| sol.ring.write_gradient_csv(w))?);
    }
    Ok(Outcome {
        document: json!({"result": sol.summary(), "config": config, "artifacts": artifact_list(&paths)}),
        code: EXIT_OK,
    })
}

fn interior(spec: &BodySpec, tau: f64, p: f64, grid: &GridArgs, out: Option<&Path>, config: Value) -> Result<Outcome> {
    let params = grid.params(p)?;
    let h = sample_support(spec, params.grid)?;
    let opts = InteriorOptions {
        fp_tol: grid.fp_tol,
        ..InteriorOptions::default()
    };
    let result = match solve_interior_with(&h, tau, &params, &opts)? {
        InteriorOutcome::Solved(sol) => {
            let mut paths = Vec::new();
            if let Some(dir) = out {
                paths.push(write_artifact(dir, "interior_boundary.csv", |w| sol.write_csv(w))?);
                paths.push(write_artifact(dir, "interior_ring.csv", |w| sol.ring.field.write_csv(w))?);
                paths.push(write_artifact(dir, "interior_gradients.csv", |w| sol.ring.write_gradient_csv(w))?);
            }
            json!({"outcome": "solved", "result": sol.summary(), "artifacts": artifact_list(&paths)})
        }
        InteriorOutcome::Infeasible(inf) => json!({
            "outcome": "infeasible",
            "result": {
                "tau": inf.tau,
                "iterations": inf.iterations,
                "final_inradius": inf.final_inradius,
                "threshold": inf.threshold,
                "min_gradient_seen": inf.min_gradient_seen,
            },
            "artifacts": [],
        }),
    };
    let mut doc = result;
    doc["config"] = config;
    Ok(Outcome {
        document: doc,
        code: EXIT_OK,
    })
}

fn lambda(spec: &BodySpec, p: f64, grid: &GridArgs, out: Option<&Path>, config: Value) -> Result<Outcome> {
    let params = grid.params(p)?;
    let h = sample_support(spec, params.grid)?;
    let opts = LambdaOptions {
        bisect_tol: grid.bisect_tol,
        ..LambdaOptions::default()
    };
    let res = bernoulli_constant(&h, &params, &opts)?;
    let mut paths = Vec::new();
    if let Some(dir) = out {
        paths.push(write_artifact(dir, "lambda_log.csv", |w| {
            writeln!(w, "size,tau,feasible")?;
            for e in &res.log {
                writeln!(w, "{},{},{}", crate::io::format_f64(e.size), crate::io::format_f64(e.tau), e.feasible)?;
            }
            Ok(())
        })?);
        paths.push(write_artifact(dir, "lambda_critical_set.csv", |w| res.critical_set.write_csv(w))?);
    }
    let mut doc = res.summary();
    doc["config"] = config;
    doc["artifacts"] = artifact_list(&paths);
    Ok(Outcome {
        document: doc,
        code: EXIT_OK,
    })
}

fn combine(
    cases: &[crate::harness::RingCase],
    weights: &[f64],
    p: f64,
    grid: &GridArgs,
    out: Option<&Path>,
    config: Value,
) -> Result<Outcome> {
    let params = grid.params(p)?;
    let mut sols = Vec::with_capacity(cases.len());
    for c in cases {
        let ho = sample_support(&c.outer, params.grid)?;
        let hi = sample_support(&c.inner, params.grid)?;
        sols.push(solve_ring(&ho, &hi, &params)?);
    }
    let refs: Vec<_> = sols.iter().collect();
    let combo = combine_solutions(weights, &refs)?;
    let signs = combination_sign(weights, &refs)?;
    let cert = subsolution_certificate(weights, &refs, DEFAULT_HM_TOL)?;
    let mut paths = Vec::new();
    if let Some(dir) = out {
        paths.push(write_artifact(dir, "combined_ring.csv", |w| combo.write_csv(w))?);
        paths.push(write_artifact(dir, "combined_sign.csv", |w| {
            writeln!(w, "theta,t,sign,value")?;
            let m = combo.grid().len();
            for (node, (&s, &v)) in signs.signs.iter().zip(&signs.values).enumerate() {
                let (j, k) = (node % m, node / m + 1);
                writeln!(
                    w,
                    "{},{},{},{}",
                    crate::io::format_f64(combo.grid().angle(j)),
                    crate::io::format_f64(combo.t(k)),
                    s,
                    crate::io::format_f64(v)
                )?;
            }
            Ok(())
        })?);
    }
    let inputs: Vec<Value> = sols.iter().map(|s| s.summary()).collect();
    Ok(Outcome {
        document: json!({
            "result": {
                "certificate": cert,
                "min_plaplacian": signs.min_value(),
                "sign_tol": signs.sign_tol,
                "inputs": inputs,
            },
            "config": config,
            "artifacts": artifact_list(&paths),
        }),
        code: if cert.pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn verify(suite: Suite, cfg: &SuiteConfig, jobs: usize, out: Option<&Path>, config: Value) -> Result<Outcome> {
    let reports = run_suite(suite, cfg, jobs)?;
    let pass = reports.iter().all(|r| r.pass);
    let mut paths = Vec::new();
    if let Some(dir) = out {
        paths.push(write_artifact(dir, "reports.json", |w| {
            writeln!(w, "{}", to_json_pretty(&serde_json::to_value(&reports)?))?;
            Ok(())
        })?);
        paths.extend(write_report_csvs(dir, &reports)?);
    }
    let failed: Vec<Value> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.pass)
        .map(|(i, r)| json!({"index": i, "name": r.name}))
        .collect();
    Ok(Outcome {
        document: json!({
            "pass": pass,
            "checks": reports.len(),
            "failed": failed,
            "reports": reports,
            "config": config,
            "artifacts": artifact_list(&paths),
        }),
        code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}
