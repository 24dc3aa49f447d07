//! `ou-kit`: run verification suites and evaluate kernels, bound constants,
//! semigroup and resolvent fields from the command line.
//!
//! Reports are machine-readable JSON plus a human summary; all sampled checks
//! take their randomness from `--seed`, so re-running a configuration
//! reproduces the records byte for byte (modulo the `runtime_ms` fields).
//! The environment variable `OU_KIT_THREADS` caps worker parallelism.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN-rejecting flag validation

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use oukit::grid::{AxisSpec, GridSpec};
use oukit::kernel::{bound_c, kernel_slice_csv, BoundExtra};
use oukit::linalg::{load_system, spectral_quantities, OUSystem};
use oukit::report::{all_pass, summarize, VerificationRecord};
use oukit::semigroup::{
    apply_resolvent, apply_semigroup, omega_bound, AnalyticField, GrowthBound, OmegaMode,
    QuadSettings,
};
use oukit::suites::{presets, run_suite, SuiteSettings, SUITE_NAMES};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "ou-kit", version, about = "Ornstein-Uhlenbeck kernel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write pass/fail records.
    Verify(VerifyArgs),
    /// Evaluate kernels, bounds, semigroup or resolvent data to CSV.
    Eval(EvalArgs),
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// System definition JSON; the built-in scalar heat system when omitted.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Comma-separated suite names (default: all).
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
    /// Output directory for records.json and summary.txt.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    /// Seed for every sampled check.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Global scale on the residual thresholds (1 = specified values).
    #[arg(long, default_value_t = 1.0)]
    tol: f64,
    /// Grid spec "min:max:count[,min:max:count...]" for grid-based outputs.
    #[arg(long)]
    grid: Option<String>,
    /// JSON config file; its entries override the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// On-disk configuration; any present field overrides the matching flag.
#[derive(Deserialize, Default)]
struct ConfigFile {
    system: Option<PathBuf>,
    suites: Option<Vec<String>>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    grid: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// What to evaluate.
    #[arg(long, value_enum)]
    subject: Subject,
    /// System definition JSON; the built-in scalar heat system when omitted.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "eval-out")]
    out: PathBuf,
    /// Evaluation time (kernel/semigroup subjects).
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Bounds subject: log-spaced t range.
    #[arg(long, default_value_t = 1e-2)]
    t_min: f64,
    #[arg(long, default_value_t = 1e2)]
    t_max: f64,
    #[arg(long, default_value_t = 40)]
    t_count: usize,
    /// Weight growth rate times p entering the bound constants.
    #[arg(long, default_value_t = 0.0)]
    eta_p: f64,
    /// Norm index for C4..C6.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Resolvent subject: spectral margin Re λ - ω.
    #[arg(long, default_value_t = 0.5)]
    margin: f64,
    /// Resolvent subject: imaginary part of λ.
    #[arg(long, default_value_t = 0.0)]
    lambda_im: f64,
    /// Kernel subject: slice radius and sample count.
    #[arg(long, default_value_t = 6.0)]
    r_max: f64,
    #[arg(long, default_value_t = 121)]
    count: usize,
    /// Grid spec "min:max:count[,...]" for semigroup/resolvent outputs.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Subject {
    Kernel,
    Semigroup,
    Resolvent,
    Bounds,
}

fn main() {
    if let Ok(threads) = std::env::var("OU_KIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Verify(args) => match cmd_verify(args) {
            Ok(pass) => {
                if pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                2
            }
        },
        Command::Eval(args) => match cmd_eval(args) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e:#}");
                2
            }
        },
    };
    std::process::exit(code);
}

fn load_or_default(path: &Option<PathBuf>) -> Result<(String, OUSystem)> {
    match path {
        Some(p) => {
            let sys = load_system(p).with_context(|| format!("loading system {}", p.display()))?;
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("system").to_string();
            Ok((name, sys))
        }
        None => Ok(("scalar-heat".into(), presets::scalar_heat())),
    }
}

fn parse_grid(text: &str, d: usize) -> Result<GridSpec> {
    let mut axes = Vec::new();
    for part in text.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            bail!("grid axis must be min:max:count, got {part:?}");
        }
        axes.push(AxisSpec {
            min: fields[0].trim().parse()?,
            max: fields[1].trim().parse()?,
            count: fields[2].trim().parse()?,
        });
    }
    if axes.len() == 1 && d > 1 {
        axes = vec![axes[0]; d];
    }
    if axes.len() != d {
        bail!("grid has {} axes, system dimension is {d}", axes.len());
    }
    Ok(GridSpec { axes }.validated()?)
}

fn cmd_verify(mut args: VerifyArgs) -> Result<bool> {
    if let Some(cfg_path) = &args.config {
        let text = std::fs::read_to_string(cfg_path)
            .with_context(|| format!("reading config {}", cfg_path.display()))?;
        let cfg: ConfigFile = serde_json::from_str(&text).context("parsing config JSON")?;
        // config entries override flags
        if cfg.system.is_some() {
            args.system = cfg.system;
        }
        if let Some(s) = cfg.suites {
            args.suite = s;
        }
        if let Some(o) = cfg.out {
            args.out = o;
        }
        if let Some(s) = cfg.seed {
            args.seed = s;
        }
        if let Some(t) = cfg.tol {
            args.tol = t;
        }
        if cfg.grid.is_some() {
            args.grid = cfg.grid;
        }
    }
    if !(args.tol > 0.0) {
        bail!("--tol must be positive");
    }
    let suites: Vec<String> = if args.suite.is_empty() {
        SUITE_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.suite.clone()
    };
    for s in &suites {
        if !SUITE_NAMES.contains(&s.as_str()) {
            bail!("unknown suite {s:?}; available: {}", SUITE_NAMES.join(", "));
        }
    }
    let settings = SuiteSettings { seed: args.seed, tol_scale: args.tol };

    // a system that fails validation is a failing record, not a crash
    let records: Vec<VerificationRecord> = match load_or_default(&args.system) {
        Ok((name, sys)) => {
            use rayon::prelude::*;
            // suites are independent; run them in parallel but assemble in
            // the deterministic declaration order
            let mut per_suite: Vec<(usize, Vec<VerificationRecord>)> = suites
                .par_iter()
                .enumerate()
                .map(|(idx, s)| (idx, run_suite(s, &name, &sys, &settings)))
                .collect();
            per_suite.sort_by_key(|(idx, _)| *idx);
            per_suite.into_iter().flat_map(|(_, r)| r).collect()
        }
        Err(e) => vec![VerificationRecord::error("system.validate", &format!("{e:#}"))],
    };

    std::fs::create_dir_all(&args.out)?;
    write_records(&args.out, &records)?;
    print!("{}", summarize(&records));
    Ok(all_pass(&records))
}

fn write_records(dir: &Path, records: &[VerificationRecord]) -> Result<()> {
    let json = serde_json::to_string_pretty(records)?;
    std::fs::write(dir.join("records.json"), json + "\n")?;
    std::fs::write(dir.join("summary.txt"), summarize(records))?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let (_, sys) = load_or_default(&args.system)?;
    std::fs::create_dir_all(&args.out)?;
    match args.subject {
        Subject::Bounds => {
            let sq = spectral_quantities(&sys, args.eta_p / args.p.max(1.0), args.p)?;
            let extra = BoundExtra { p: args.p, c_theta: 1.0, delta_ij: true };
            let mut rows = String::from("t,c1,c2,c3,c4,c5,c6\n");
            for k in 0..args.t_count {
                let t = args.t_min
                    * (args.t_max / args.t_min).powf(k as f64 / (args.t_count - 1).max(1) as f64);
                let mut fields = vec![format!("{t:.10e}")];
                for level in 1..=6usize {
                    fields.push(format!("{:.10e}", bound_c(level, &sq, t, &extra)?));
                }
                rows.push_str(&fields.join(","));
                rows.push('\n');
            }
            std::fs::write(args.out.join("bounds.csv"), rows)?;
        }
        Subject::Kernel => {
            // slice along the first axis: psi = (r, 0, ..., 0)
            let d = sys.dim();
            let points: Vec<Vec<f64>> = (0..args.count)
                .map(|k| {
                    let mut p = vec![0.0; d];
                    p[0] = -args.r_max
                        + 2.0 * args.r_max * k as f64 / (args.count - 1).max(1) as f64;
                    p
                })
                .collect();
            let file = std::fs::File::create(args.out.join("kernel_slice.csv"))?;
            kernel_slice_csv(std::io::BufWriter::new(file), &sys, args.t, &points)?;
        }
        Subject::Semigroup => {
            let d = sys.dim();
            let spec = match &args.grid {
                Some(g) => parse_grid(g, d)?,
                None => GridSpec::uniform(d, -5.0, 5.0, 41)?,
            };
            let n = sys.size();
            let data = AnalyticField::new(d, n, move |x: &[f64], out: &mut [Complex64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let bump = (-r2 / 2.0).exp();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = Complex64::new(bump / (k + 1) as f64, 0.0);
                }
            })
            .with_support(vec![(-8.0, 8.0); d]);
            let result =
                apply_semigroup(&sys, &data, args.t, &spec, &QuadSettings::default())?;
            result.field.save(&args.out.join("semigroup"))?;
        }
        Subject::Resolvent => {
            let d = sys.dim();
            let spec = match &args.grid {
                Some(g) => parse_grid(g, d)?,
                None => GridSpec::uniform(d, -4.0, 4.0, 17)?,
            };
            let n = sys.size();
            let sq = spectral_quantities(&sys, 0.0, 1.0)?;
            let growth: GrowthBound = omega_bound(&sq, OmegaMode::CbUnweighted, 1.0, 1.0, 0.1)?;
            let lambda = Complex64::new(growth.omega + args.margin, args.lambda_im);
            let g = AnalyticField::new(d, n, move |_x: &[f64], out: &mut [Complex64]| {
                for o in out.iter_mut() {
                    *o = Complex64::new(1.0, 0.0);
                }
            });
            let sol =
                apply_resolvent(&sys, &g, lambda, growth, &spec, &QuadSettings::default())?;
            sol.v.save(&args.out.join("resolvent"))?;
        }
    }
    Ok(())
}
