//! Command-line front end: grid verification suites, finite-difference
//! convergence diagnostics and curve diagnostics, with JSON/CSV output.
//!
//! Exit codes: 0 all asserted checks pass, 1 check failure (report still
//! written), 2 usage error, 3 family/parameter/constraint error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qbh::families::FamilyName;
use qbh::geometry::Window;
use qbh::report::{
    family_from_params, run_convergence, run_curve, run_verification, rows_to_csv, Backend,
    CurveJob, VerifyJob,
};
use qbh::QbhError;

#[derive(Parser)]
#[command(name = "qbh", version, about = "Verification engine for marginally trapped Lagrangian surfaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the per-point check suite for a family over a grid.
    Verify {
        /// Family name, e.g. thm9-i (see `families` module)
        #[arg(long)]
        family: String,
        /// Family parameter as key=value (repeatable)
        #[arg(long = "param")]
        params: Vec<String>,
        /// Grid resolution NXxNY
        #[arg(long, default_value = "21x21")]
        grid: String,
        /// Window override as x0:x1,y0:y1 (defaults to the family window)
        #[arg(long)]
        window: Option<String>,
        /// Evaluation backend: jet | fd
        #[arg(long, default_value = "jet")]
        backend: String,
        /// Finite-difference step for the fd backend
        #[arg(long, default_value_t = 2e-2)]
        fd_step: f64,
        /// Base check tolerance (default 1e-8 jet, 1e-4 fd)
        #[arg(long)]
        tol: Option<f64>,
        /// JSON report path (stdout if omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional per-point residual CSV path
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the fd backend against analytic jets at shrinking steps.
    Convergence {
        #[arg(long)]
        family: String,
        #[arg(long = "param")]
        params: Vec<String>,
        /// Coarsest finite-difference step (then halved twice)
        #[arg(long, default_value_t = 2e-2)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Light-cone curve diagnostics: residuals, invariants, drift.
    Curve {
        /// Closed-form flat null curve, parameters as mu=VALUE
        #[arg(long = "flat-null")]
        flat_null: Option<String>,
        /// Integrated curve, parameters as key=value (f, f1, delta)
        #[arg(long = "remark12", num_args = 1.., value_name = "KEY=VALUE")]
        remark12: Vec<String>,
        /// Integration range t0:t1
        #[arg(long, default_value = "0:2")]
        range: String,
        /// Integration step
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Number of report samples
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional CSV dump of the integrated curve samples
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// A usage problem (exit 2) as opposed to a family/engine error (exit 3).
struct UsageError(String);

fn parse_kv(s: &str) -> Result<(String, f64), UsageError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| UsageError(format!("expected key=value, got {s:?}")))?;
    let v: f64 = v
        .parse()
        .map_err(|_| UsageError(format!("bad numeric value in {s:?}")))?;
    Ok((k.to_string(), v))
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, UsageError> {
    items.iter().map(|s| parse_kv(s)).collect()
}

fn parse_grid(s: &str) -> Result<(usize, usize), UsageError> {
    let (nx, ny) = s
        .split_once('x')
        .ok_or_else(|| UsageError(format!("expected NXxNY, got {s:?}")))?;
    let parse = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|&n| n >= 2)
            .ok_or_else(|| UsageError(format!("bad grid size {t:?} (need an integer >= 2)")))
    };
    Ok((parse(nx)?, parse(ny)?))
}

fn parse_span(s: &str) -> Result<(f64, f64), UsageError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| UsageError(format!("expected LO:HI, got {s:?}")))?;
    let parse = |t: &str| {
        t.parse::<f64>().map_err(|_| UsageError(format!("bad number {t:?}")))
    };
    let (lo, hi) = (parse(a)?, parse(b)?);
    if lo >= hi {
        return Err(UsageError(format!("empty span {s:?}")));
    }
    Ok((lo, hi))
}

fn parse_window(s: &str) -> Result<Window, UsageError> {
    let (xs, ys) = s
        .split_once(',')
        .ok_or_else(|| UsageError(format!("expected x0:x1,y0:y1, got {s:?}")))?;
    let (x0, x1) = parse_span(xs)?;
    let (y0, y1) = parse_span(ys)?;
    Ok(Window::new(x0, x1, y0, y1))
}

fn write_output(path: &Option<PathBuf>, body: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn usage_exit(msg: &str) -> ExitCode {
    eprintln!("usage error: {msg}");
    ExitCode::from(2)
}

fn engine_exit(err: &QbhError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(3)
}

fn cmd_verify(
    family: &str,
    params: &[String],
    grid: &str,
    window: Option<&str>,
    backend: &str,
    fd_step: f64,
    tol: Option<f64>,
    out: &Option<PathBuf>,
    csv: &Option<PathBuf>,
) -> ExitCode {
    let name: FamilyName = match family.parse() {
        Ok(n) => n,
        Err(e) => return engine_exit(&e),
    };
    let params = match parse_params(params) {
        Ok(p) => p,
        Err(UsageError(m)) => return usage_exit(&m),
    };
    let (nx, ny) = match parse_grid(grid) {
        Ok(g) => g,
        Err(UsageError(m)) => return usage_exit(&m),
    };
    let window = match window.map(parse_window).transpose() {
        Ok(w) => w,
        Err(UsageError(m)) => return usage_exit(&m),
    };
    let backend = match backend {
        "jet" => Backend::Jet,
        "fd" => Backend::Fd,
        other => return usage_exit(&format!("unknown backend {other:?} (jet | fd)")),
    };
    let tol = tol.unwrap_or(match backend {
        Backend::Jet => 1e-8,
        Backend::Fd => 1e-4,
    });

    let fam = match family_from_params(name, &params) {
        Ok(f) => f,
        Err(e) => return engine_exit(&e),
    };
    let job = VerifyJob { family: name, params, nx, ny, window, backend, fd_step, tol };
    let (report, rows) = match run_verification(&job, &fam) {
        Ok(r) => r,
        Err(e) => return engine_exit(&e),
    };
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(m) = write_output(out, &body) {
        return engine_exit(&QbhError::ParameterError(m));
    }
    if let Some(p) = csv {
        let dump = rows_to_csv(&rows, backend, tol);
        if let Err(e) = std::fs::write(p, dump) {
            return engine_exit(&QbhError::ParameterError(format!(
                "writing {}: {e}",
                p.display()
            )));
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_convergence(
    family: &str,
    params: &[String],
    step: f64,
    out: &Option<PathBuf>,
) -> ExitCode {
    let name: FamilyName = match family.parse() {
        Ok(n) => n,
        Err(e) => return engine_exit(&e),
    };
    let params = match parse_params(params) {
        Ok(p) => p,
        Err(UsageError(m)) => return usage_exit(&m),
    };
    if !(step > 0.0 && step.is_finite()) {
        return usage_exit("step must be positive");
    }
    let fam = match family_from_params(name, &params) {
        Ok(f) => f,
        Err(e) => return engine_exit(&e),
    };
    let report = match run_convergence(&fam, step) {
        Ok(r) => r,
        Err(e) => return engine_exit(&e),
    };
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(m) = write_output(out, &body) {
        return engine_exit(&QbhError::ParameterError(m));
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_curve(
    flat_null: Option<&str>,
    remark12: &[String],
    range: &str,
    step: f64,
    samples: usize,
    out: &Option<PathBuf>,
    csv: &Option<PathBuf>,
) -> ExitCode {
    let job = match (flat_null, remark12.is_empty()) {
        (Some(spec), true) => {
            let (k, mu) = match parse_kv(spec) {
                Ok(kv) => kv,
                Err(UsageError(m)) => return usage_exit(&m),
            };
            if k != "mu" {
                return usage_exit(&format!("--flat-null takes mu=VALUE, got {k:?}"));
            }
            CurveJob::FlatNull { mu, samples }
        }
        (None, false) => {
            let kvs = match parse_params(remark12) {
                Ok(p) => p,
                Err(UsageError(m)) => return usage_exit(&m),
            };
            let mut f0 = 1.0;
            let mut f1 = 0.0;
            let mut delta = 0.0;
            for (k, v) in kvs {
                match k.as_str() {
                    "f" | "f0" => f0 = v,
                    "f1" => f1 = v,
                    "delta" => delta = v,
                    other => {
                        return usage_exit(&format!("unknown --remark12 key {other:?}"))
                    }
                }
            }
            let (t0, t1) = match parse_span(range) {
                Ok(r) => r,
                Err(UsageError(m)) => return usage_exit(&m),
            };
            if t0 != 0.0 {
                return usage_exit("integration range must start at 0");
            }
            CurveJob::Remark12 { f0, f1, delta, t_end: t1, step, samples }
        }
        _ => return usage_exit("exactly one of --flat-null or --remark12 is required"),
    };
    let (report, curve_csv) = match run_curve(&job) {
        Ok(r) => r,
        Err(e) => return engine_exit(&e),
    };
    let body = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(m) = write_output(out, &body) {
        return engine_exit(&QbhError::ParameterError(m));
    }
    if let (Some(p), Some(dump)) = (csv, curve_csv) {
        if let Err(e) = std::fs::write(p, dump) {
            return engine_exit(&QbhError::ParameterError(format!(
                "writing {}: {e}",
                p.display()
            )));
        }
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Verify { family, params, grid, window, backend, fd_step, tol, out, csv } => {
            cmd_verify(
                family,
                params,
                grid,
                window.as_deref(),
                backend,
                *fd_step,
                *tol,
                out,
                csv,
            )
        }
        Cmd::Convergence { family, params, step, out } => {
            cmd_convergence(family, params, *step, out)
        }
        Cmd::Curve { flat_null, remark12, range, step, samples, out, csv } => cmd_curve(
            flat_null.as_deref(),
            remark12,
            range,
            *step,
            *samples,
            out,
            csv,
        ),
    }
}
