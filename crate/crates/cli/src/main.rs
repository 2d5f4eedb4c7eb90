//! `qrst`: solve for Z-eigenpairs of symmetric tensors, generate test tensors,
//! and rerun the labeling-tensor experiments.
//!
//! Exit codes: 0 success, 1 failed checks or internal error, 2 bad input,
//! 3 no eigenpair converged, 4 example not reproducible without `--input`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use qrst_core::config::SolverConfig;
use qrst_core::hopm::{conservative_shift, multistart, PowerMethod, PowerRun};
use qrst_core::io::{write_eigen_table, write_power_trace, write_qrst_trace, write_tensor};
use qrst_core::linalg::QrSign;
use qrst_core::oracle::{enumerate_eigenpairs, OracleConfig};
use qrst_core::pqrst::pqrst;
use qrst_core::qrst::qrst_all;
use qrst_core::random::{random_symmetric, StartDistribution};
use qrst_core::reproduce::{
    run_example1, run_random_example, run_tensor_example, Example1Protocol,
};
use qrst_core::spectra::EigenSet;
use qrst_core::{Error, SymTensor};

#[derive(Parser)]
#[command(
    name = "qrst",
    version,
    about = "Real Z-eigenpairs of symmetric tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a tensor file and write the eigenpair table.
    Solve(SolveArgs),
    /// Write a labeling, random or identity tensor.
    Generate(GenerateArgs),
    /// Rerun one of the numbered reference examples.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Qrst,
    Pqrst,
    Shopm,
    Sshopm,
    SshopmAdaptive,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Start {
    Uniform,
    UniformSymmetric,
    Normal,
}

impl From<Start> for StartDistribution {
    fn from(s: Start) -> Self {
        match s {
            Start::Uniform => StartDistribution::Uniform,
            Start::UniformSymmetric => StartDistribution::UniformSymmetric,
            Start::Normal => StartDistribution::Normal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QrConvention {
    Householder,
    Nonnegative,
}

#[derive(Args)]
struct SolveArgs {
    /// Tensor JSON file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Shift the QRST slices (default).
    #[arg(long, conflicts_with = "unshifted")]
    shifted: bool,
    #[arg(long)]
    unshifted: bool,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Fixed SS-HOPM shift; defaults to the conservative shift `(d−1)·Σ|a|`.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Restarts for the power methods (default 100) or oracle starts (default 5000).
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long, default_value_t = 120)]
    perm_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    start: Start,
    #[arg(long, value_enum, default_value = "householder")]
    qr_sign: QrConvention,
    /// Eigenpair table; JSON when the name ends in `.json`, CSV otherwise.
    #[arg(long)]
    output: PathBuf,
    /// Convergence trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Run manifest; defaults to `<output>.manifest.json`.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Labeling,
    Random,
    Identity,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    order: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    example: u8,
    /// Tensor for examples whose entries are not distributed with this tool.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for per-slice and per-restart trace CSVs.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 120)]
    perm_cap: usize,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }
}

/// Errors caused by the user's files or flags exit 2, the rest 1.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Csv(_) => Failure::internal(e),
            _ => Failure::input(e),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Generate(args) => generate(args),
        Command::Reproduce(args) => reproduce(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Summary {
    distinct_pairs: usize,
    max_residual: f64,
    non_converged: usize,
}

/// Everything needed to replay a `solve` run.
#[derive(Serialize)]
struct RunManifest {
    solver: Method,
    shifted: Option<bool>,
    restarts: Option<usize>,
    config: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleConfig>,
    input: InputRecord,
    outputs: Vec<String>,
    duration_secs: f64,
    summary: Summary,
    diagnostics: serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load_tensor(path: &Path) -> Result<(SymTensor, String), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Failure::input(format!("{}: not UTF-8", path.display())))?;
    let tensor = qrst_core::io::parse_tensor_json(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok((tensor, sha256_hex(text.as_bytes())))
}

fn write_csv_file(
    path: &Path,
    write: impl FnOnce(fs::File) -> qrst_core::Result<()>,
) -> Result<(), Failure> {
    let file = fs::File::create(path)
        .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    write(file).map_err(Failure::from)
}

fn power_diagnostics(run: &PowerRun) -> serde_json::Value {
    let rows: Vec<_> = run
        .outcomes
        .iter()
        .filter(|o| !o.converged())
        .map(|o| serde_json::json!({ "run": o.run + 1, "status": o.status, "iterations": o.iterations, "lambda": o.lambda }))
        .collect();
    serde_json::Value::Array(rows)
}

fn solve(args: SolveArgs) -> CmdResult {
    let (a, digest) = load_tensor(&args.input)?;
    let shifted = !args.unshifted;
    let mut cfg = SolverConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        delta: args.delta,
        seed: args.seed,
        perm_cap: args.perm_cap,
        start: args.start.into(),
        qr_sign: match args.qr_sign {
            QrConvention::Householder => QrSign::Householder,
            QrConvention::Nonnegative => QrSign::NonNegativeDiagonal,
        },
        ..Default::default()
    };
    cfg.validate()?;
    if args.trace.is_some() && args.method == Method::Oracle {
        return Err(Failure::input(
            "--trace: the oracle records no iteration trace",
        ));
    }
    if args.restarts == Some(0) {
        return Err(Failure::input("--restarts must be at least 1"));
    }

    let started = Instant::now();
    let mut trace_rows = 0;
    let mut oracle_cfg = None;
    let mut restarts = None;
    let (set, non_converged, diagnostics): (EigenSet, usize, serde_json::Value) = match args.method
    {
        Method::Qrst => {
            let run = qrst_all(&a, &cfg, shifted)?;
            if let Some(path) = &args.trace {
                let rows: Vec<_> = run.traces().map(|t| (None, t)).collect();
                trace_rows = rows.len();
                write_csv_file(path, |f| write_qrst_trace(f, rows, false))?;
            }
            let diag = serde_json::to_value(&run.diagnostics).map_err(Failure::internal)?;
            (run.set, run.diagnostics.len(), diag)
        }
        Method::Pqrst => {
            let run = pqrst(&a, &cfg, shifted)?;
            if let Some(path) = &args.trace {
                let rows: Vec<_> = run.traces().map(|(p, t)| (Some(p), t)).collect();
                trace_rows = rows.len();
                write_csv_file(path, |f| write_qrst_trace(f, rows, true))?;
            }
            let diag = serde_json::to_value(&run.diagnostics).map_err(Failure::internal)?;
            (run.set, run.diagnostics.len(), diag)
        }
        Method::Shopm | Method::Sshopm | Method::SshopmAdaptive => {
            let method = match args.method {
                Method::Shopm => PowerMethod::Unshifted,
                Method::Sshopm => {
                    PowerMethod::Fixed(args.alpha.unwrap_or_else(|| conservative_shift(&a)))
                }
                _ => PowerMethod::Adaptive,
            };
            if let PowerMethod::Fixed(alpha) = method {
                cfg.alpha = alpha;
                cfg.validate()?;
            }
            let n = args.restarts.unwrap_or(100);
            restarts = Some(n);
            let run = multistart(&a, method, n, &cfg)?;
            if let Some(path) = &args.trace {
                trace_rows = run.traces().count();
                write_csv_file(path, |f| write_power_trace(f, run.traces()))?;
            }
            (
                run.set.clone(),
                n - run.converged_count(),
                power_diagnostics(&run),
            )
        }
        Method::Oracle => {
            let ocfg = OracleConfig {
                n_starts: args.restarts.unwrap_or(5000),
                seed: args.seed,
                ..Default::default()
            };
            let run = enumerate_eigenpairs(&a, &ocfg)?;
            restarts = Some(ocfg.n_starts);
            oracle_cfg = Some(ocfg);
            let diag = serde_json::json!({ "attempts": run.attempts, "failures": run.failures });
            (run.set, run.failures, diag)
        }
    };

    write_eigen_table(&args.output, &set, a.dim())?;
    let duration = started.elapsed().as_secs_f64();
    let max_residual = set.pairs().map(|p| p.residual).fold(0.0_f64, f64::max);

    let mut outputs = vec![args.output.display().to_string()];
    if let Some(t) = &args.trace {
        outputs.push(t.display().to_string());
    }
    let manifest_path = args.manifest.clone().unwrap_or_else(|| {
        let mut p = args.output.clone().into_os_string();
        p.push(".manifest.json");
        PathBuf::from(p)
    });
    outputs.push(manifest_path.display().to_string());
    let is_qr = matches!(args.method, Method::Qrst | Method::Pqrst);
    let manifest = RunManifest {
        solver: args.method,
        shifted: is_qr.then_some(shifted),
        restarts,
        config: cfg,
        oracle: oracle_cfg,
        input: InputRecord {
            path: args.input.display().to_string(),
            sha256: digest,
        },
        outputs,
        duration_secs: duration,
        summary: Summary {
            distinct_pairs: set.len(),
            max_residual,
            non_converged,
        },
        diagnostics,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(Failure::internal)?;
    fs::write(&manifest_path, text + "\n")
        .map_err(|e| Failure::internal(format!("{}: {e}", manifest_path.display())))?;

    println!("distinct pairs: {}", set.len());
    println!("max residual:   {max_residual:.3e}");
    println!("non-converged:  {non_converged}");
    if args.trace.is_some() {
        println!("trace rows:     {trace_rows}");
    }
    Ok(if set.is_empty() { 3 } else { 0 })
}

fn generate(args: GenerateArgs) -> CmdResult {
    let t = match args.kind {
        Kind::Labeling => SymTensor::labeling(args.order, args.dim)?,
        Kind::Random => random_symmetric(args.order, args.dim, args.seed)?,
        Kind::Identity => SymTensor::identity(args.order, args.dim)?,
    };
    write_tensor(&args.output, &t)?;
    Ok(0)
}

const EXTERNAL: &str =
    "T. G. Kolda and J. R. Mayo, \"Shifted power method for computing tensor eigenpairs\", \
                        SIAM J. Matrix Anal. Appl. 32(4), 2011";

fn reproduce(args: ReproduceArgs) -> CmdResult {
    if let Some(dir) = &args.trace_dir {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::internal(format!("{}: {e}", dir.display())))?;
    }
    let (report, passed) = match (args.example, &args.input) {
        (1, None) => {
            let r = run_example1(&Example1Protocol::default())?;
            if let Some(dir) = &args.trace_dir {
                write_example1_traces(dir, &r)?;
            }
            (r.render(), r.passed())
        }
        (1, Some(_)) => {
            return Err(Failure::input(
                "--input: example 1 always uses the built-in labeling tensor",
            ))
        }
        (2 | 3, None) => {
            let which = if args.example == 2 {
                "Example 3.5 (order 4, dimension 3)"
            } else {
                "Example 3.6 (order 3, dimension 3)"
            };
            eprintln!(
                "example {} uses the tensor of {which} in {EXTERNAL}; its entries are not distributed here. \
                 Supply it with --input <tensor.json>.",
                args.example
            );
            return Ok(4);
        }
        (2..=4, Some(path)) => {
            let (a, _) = load_tensor(path)?;
            let r = run_tensor_example(a, args.seed, args.perm_cap)?;
            if let Some(dir) = &args.trace_dir {
                write_tensor_traces(dir, &r)?;
            }
            (r.render(), r.passed())
        }
        (4, None) => {
            let r = run_random_example(args.seed, args.perm_cap)?;
            if let Some(dir) = &args.trace_dir {
                write_tensor_traces(dir, &r)?;
            }
            (r.render(), r.passed())
        }
        (n, _) => {
            return Err(Failure::input(format!(
                "--example: no example {n} (choose 1 to 4)"
            )))
        }
    };
    print!("{report}");
    if let Some(path) = &args.output {
        fs::write(path, &report)
            .map_err(|e| Failure::internal(format!("{}: {e}", path.display())))?;
    }
    Ok(if passed { 0 } else { 1 })
}

fn write_pqrst_slice_traces(
    dir: &Path,
    prefix: &str,
    run: &qrst_core::pqrst::PqrstRun,
) -> Result<(), Failure> {
    for pr in &run.runs {
        for o in &pr.outcomes {
            let path = dir.join(format!("{prefix}-p{}-s{}.csv", pr.index + 1, o.slice + 1));
            write_csv_file(&path, |f| {
                write_qrst_trace(f, o.trace.iter().map(|t| (Some(pr.index), t)), true)
            })?;
        }
    }
    Ok(())
}

fn write_example1_traces(
    dir: &Path,
    r: &qrst_core::reproduce::Example1Report,
) -> Result<(), Failure> {
    write_pqrst_slice_traces(dir, "pqrst-shifted", &r.pqrst_shifted)?;
    write_pqrst_slice_traces(dir, "pqrst-unshifted", &r.pqrst_unshifted)?;
    write_csv_file(&dir.join("sshopm.csv"), |f| {
        write_power_trace(f, r.sshopm.traces())
    })
}

fn write_tensor_traces(
    dir: &Path,
    r: &qrst_core::reproduce::RandomExampleReport,
) -> Result<(), Failure> {
    write_pqrst_slice_traces(dir, "pqrst-shifted", &r.pqrst_shifted)?;
    write_csv_file(&dir.join("sshopm.csv"), |f| {
        write_power_trace(f, r.sshopm.traces())
    })
}
