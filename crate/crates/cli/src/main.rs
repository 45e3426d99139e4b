//! `mrof`: denoising, oracle comparison and verification studies.
//!
//! Exit codes: 0 success, 1 failed study or solver failure, 2 invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use mrof_core::io::{field_from_json, field_to_json, schedule_from_json, trace_csv};
use mrof_core::solver::validate_schedule;
use mrof_core::verify::{self, PiecewiseGeodesic, StudyReport};
use mrof_core::{
    continuation, default_schedule, EnergyParams, Error, Field64, Grid64, Kernel, Manifold64, SolveConfig, Stage,
};
use rand::SeedableRng;

#[derive(Parser, Debug)]
#[command(name = "mrof", version, about = "Manifold-valued ROF / Mosolov denoising")]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "MROF_THREADS", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Denoise a field file.
    Denoise(DenoiseArgs),
    /// Run a verification study.
    Verify(VerifyArgs),
    /// Compare the solver with the taut-string oracle on random scalar signals.
    OracleCompare(OracleArgs),
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    /// Must match the input file when given.
    #[arg(long)]
    manifold: Option<String>,
    /// Must match the input file when given.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    input: PathBuf,
    /// Minimizer path; the report and trace go next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Single-stage eps, ignored with --schedule.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// `default` or a JSON file of stages `[{"eps":..,"sigma":..,"delta":..}]`.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// roundtrip, radii, retraction, convexity, s2-search, gradient,
    /// ellipticity, lipschitz, oracle, range, mollifier
    study: String,
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Report JSON path; a CSV of the cases is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, default_value = "interval:64")]
    grid: String,
    #[arg(long, default_value_t = 8.0)]
    lambda: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Distinguishes bad input (exit 2) from everything else.
#[derive(Debug)]
struct Invalid(String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(Invalid(e.to_string()))
}

/// Library errors caused by the caller's input map to exit code 2.
fn classify(e: Error) -> anyhow::Error {
    match e {
        Error::Parse(_)
        | Error::GridMismatch(_)
        | Error::InvalidParameter(_)
        | Error::RequiresPositiveEps
        | Error::RangeViolation(_)
        | Error::Domain(_) => invalid(e),
        other => anyhow!(other),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn denoise(a: DenoiseArgs) -> anyhow::Result<bool> {
    let (m, grid, f): (Manifold64, Grid64, Field64) = field_from_json(&read(&a.input)?).map_err(classify)?;
    if let Some(spec) = &a.manifold {
        let given: Manifold64 = spec.parse().map_err(classify)?;
        if given != m {
            return Err(invalid(format!("--manifold {given} does not match input manifold {m}")));
        }
    }
    if let Some(spec) = &a.grid {
        let given: Grid64 = spec.parse().map_err(classify)?;
        if given.to_string() != grid.to_string() {
            return Err(invalid(format!("--grid {given} does not match input grid {grid}")));
        }
    }
    let schedule: Vec<Stage<f64>> = match a.schedule.as_deref() {
        None => vec![Stage { eps: a.eps, sigma: a.sigma, delta: a.delta }],
        Some("default") => {
            let mut s = default_schedule(&grid, false);
            s.iter_mut().for_each(|st| st.sigma = st.sigma.max(a.sigma));
            s
        }
        Some(path) => schedule_from_json(&read(Path::new(path))?).map_err(classify)?,
    };
    validate_schedule(&schedule).map_err(classify)?;
    EnergyParams::new(a.lambda, a.sigma, a.eps).validate().map_err(classify)?;
    let cfg = SolveConfig { seed: a.seed, ..SolveConfig::default() };
    let (u, reports) = continuation(&m, &grid, &f, a.lambda, &schedule, &cfg).map_err(classify)?;

    write(&a.out, &field_to_json(&m, &grid, &u)?)?;
    write(&sibling(&a.out, ".report.json"), &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    write(&sibling(&a.out, ".trace.csv"), &trace_csv(&reports))?;
    let last = reports.last().expect("validated schedule is nonempty");
    println!(
        "denoise: {} stages, {} iterations, energy {}, grad {:e}, converged {}",
        reports.len(),
        reports.iter().map(|r| r.iterations).sum::<usize>(),
        last.final_energy().total,
        last.final_grad_norm,
        last.flags.converged
    );
    Ok(true)
}

fn manifold_or(spec: &Option<String>, default: &str) -> anyhow::Result<Manifold64> {
    spec.as_deref().unwrap_or(default).parse().map_err(classify)
}

fn grid_or(spec: &Option<String>, default: &str) -> anyhow::Result<Grid64> {
    spec.as_deref().unwrap_or(default).parse().map_err(classify)
}

fn run_study(a: &VerifyArgs) -> anyhow::Result<StudyReport> {
    let seed = a.seed;
    let params = || EnergyParams::new(a.lambda.unwrap_or(2.0), a.sigma.unwrap_or(0.3), a.eps.unwrap_or(0.05));
    let report = match a.study.as_str() {
        "roundtrip" => verify::roundtrip_study(&manifold_or(&a.manifold, "sphere:2")?, a.trials.unwrap_or(1000), seed),
        "radii" => verify::radii_study(),
        "retraction" => {
            let m = manifold_or(&a.manifold, "hyperbolic:2")?;
            let g = grid_or(&a.grid, "rect2d:6x6:rho=sphere_patch")?;
            let n = a.trials.unwrap_or(500);
            let radius = 0.4f64.min(0.45 * m.convexity_radius());
            verify::retraction_study(&m, &g, 2 * n, n, radius, &params(), seed).map_err(classify)?
        }
        "convexity" => {
            let m = manifold_or(&a.manifold, "hyperbolic:2")?;
            let g = grid_or(&a.grid, "circle:16")?;
            verify::convexity_sweep(&m, &g, a.trials.unwrap_or(100), &params(), seed).map_err(classify)?
        }
        "s2-search" => {
            let g = grid_or(&a.grid, "circle:16")?;
            verify::counterexample_search_s2(&g, a.trials.unwrap_or(10_000), seed).map_err(classify)?
        }
        "gradient" => verify::gradient_study(a.trials.unwrap_or(200), seed).map_err(classify)?,
        "ellipticity" => {
            let m = manifold_or(&a.manifold, "sphere:2")?;
            let g = grid_or(&a.grid, "rect2d:8x8:rho=sphere_patch")?;
            verify::ellipticity_sweep(&m, g.preset(), a.trials.unwrap_or(10_000), a.sigma.unwrap_or(0.1), seed)
        }
        "lipschitz" => {
            let m = manifold_or(&a.manifold, "hyperbolic:2")?;
            let start = m.origin();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let end = if m.dim() == 1 && m.is_npc() && m.kappa_lo() == 0.0 {
                mrof_core::Point64::new(vec![start.coords[0] + 1.0])
            } else {
                m.random_point_at_distance(&start, 1.0f64.min(0.45 * m.convexity_radius()), &mut rng)
            };
            let signal = PiecewiseGeodesic::sawtooth(start, end, 2);
            verify::lipschitz_scaling_study(
                &m,
                &signal,
                &[32, 64, 128, 256, 512],
                a.lambda.unwrap_or(50.0),
                None,
                &SolveConfig::default(),
            )
            .map_err(classify)?
        }
        "oracle" => {
            let g = grid_or(&a.grid, "interval:64")?;
            verify::oracle_study(g.len(), a.lambda.unwrap_or(20.0), a.trials.unwrap_or(20), seed).map_err(classify)?
        }
        "range" => {
            let m = manifold_or(&a.manifold, "hyperbolic:2")?;
            let g = grid_or(&a.grid, "rect2d:8x8:rho=sphere_patch")?;
            verify::range_study(&m, &g, a.trials.unwrap_or(20), a.lambda.unwrap_or(5.0), seed).map_err(classify)?
        }
        "mollifier" => {
            let m = manifold_or(&a.manifold, "euclidean:2")?;
            let g = grid_or(&a.grid, "rect2d:12x12:rho=flat")?;
            verify::mollifier_study(&m, &g, &[0.1, 0.15, 0.2, 0.3], Kernel::Bump, seed).map_err(classify)?
        }
        other => return Err(invalid(format!("unknown study '{other}'"))),
    };
    Ok(report)
}

fn emit(report: &StudyReport, out: Option<&Path>) -> anyhow::Result<()> {
    if let Some(out) = out {
        write(out, &(serde_json::to_string_pretty(report)? + "\n"))?;
        write(&out.with_extension("csv"), &report.to_csv())?;
    }
    println!(
        "{}: {} ({} cases, {} violations{})",
        report.study,
        if report.passed { "PASS" } else { "FAIL" },
        report.cases.len(),
        report.violations(),
        if report.report_only { ", report only" } else { "" }
    );
    for (k, v) in &report.summary {
        if v.fract() == 0.0 && v.abs() < 1e15 {
            println!("  {k} = {v}");
        } else {
            println!("  {k} = {v:e}");
        }
    }
    Ok(())
}

fn oracle_compare(a: OracleArgs) -> anyhow::Result<bool> {
    let grid: Grid64 = a.grid.parse().map_err(classify)?;
    if !matches!(grid.kind(), mrof_core::GridKind::Interval(_)) {
        return Err(invalid("oracle-compare needs an interval grid"));
    }
    let report = verify::oracle_study(grid.len(), a.lambda, a.trials, a.seed).map_err(classify)?;
    emit(&report, a.out.as_deref())?;
    println!("max gap {:e}", report.summary["max_gap"]);
    Ok(report.passed)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if cli.threads == 0 {
        return Err(invalid("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("thread pool")?;
    match cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Verify(a) => {
            let report = run_study(&a)?;
            emit(&report, a.out.as_deref())?;
            Ok(report.passed)
        }
        Command::OracleCompare(a) => oracle_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mrof: {e:#}");
            ExitCode::from(if e.is::<Invalid>() { 2 } else { 1 })
        }
    }
}
