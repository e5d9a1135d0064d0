//! `qsos`: generate quartic instances, fit sum-of-squares certificates, check them, and time the solver.
//!
//! Exit codes: 0 success or certified, 1 error or rejected certificate,
//! 2 solve budget exhausted without a certificate (inconclusive).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use quartic_sos::bench::{run_bench, write_bench_csv};
use quartic_sos::certificate::{verify, CertificateError};
use quartic_sos::format::{self, InstanceMeta, PayloadEncoding};
use quartic_sos::instances::{Family, InstanceSpec, SosStatus};
use quartic_sos::optimizer::{solve, AdamConfig, SolveError, TargetScaling};
use quartic_sos::{AMode, Certificate, SolveConfig, Verdict};

const THREADS_ENV: &str = "QSOS_THREADS";
const EXIT_INCONCLUSIVE: u8 = 2;

#[derive(Parser)]
#[command(name = "qsos", version, about = "Numerical sum-of-squares certificates for quartic forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance to a coefficient file.
    Gen(GenArgs),
    /// Fit a certificate to a coefficient file.
    Solve(SolveArgs),
    /// Check a certificate against a coefficient file.
    Verify(VerifyArgs),
    /// Time the solver over a grid of sizes and seeds on uniform instances.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    UniformSos,
    Spiked,
    PerturbedDiag,
    FineStructure,
    NonSosControl,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::UniformSos => Family::UniformSos,
            FamilyArg::Spiked => Family::Spiked,
            FamilyArg::PerturbedDiag => Family::PerturbedDiag,
            FamilyArg::FineStructure => Family::FineStructure,
            FamilyArg::NonSosControl => Family::NonSosControl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Auto,
    Inline,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum AModeArg {
    Identity,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    UnitNorm,
    UnitRms,
    None,
}

#[derive(Args)]
struct GenArgs {
    family: FamilyArg,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spiked: value of the overwritten `x_i^4` coefficient.
    #[arg(long)]
    spike: Option<f64>,
    /// Perturbed-diag: lower end of the increment range.
    #[arg(long)]
    perturb_lo: Option<f64>,
    /// Perturbed-diag: upper end of the increment range.
    #[arg(long)]
    perturb_hi: Option<f64>,
    /// Fine-structure: scale of the `(sum x_i^2)^2` base.
    #[arg(long, allow_negative_numbers = true)]
    base: Option<f64>,
    /// Fine-structure: half-width of the uniform noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, value_enum, default_value_t = EncodingArg::Auto)]
    encoding: EncodingArg,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Number of squares (default C(n+1,2)).
    #[arg(long)]
    rank_k: Option<usize>,
    #[arg(long, value_enum, default_value_t = AModeArg::General)]
    a_mode: AModeArg,
    /// Rows of the first layer (default n).
    #[arg(long)]
    a_rows: Option<usize>,
    #[arg(long, value_enum, default_value_t = ScalingArg::UnitNorm)]
    scaling: ScalingArg,
    /// Keep the raw random initial scale instead of matching the target norm.
    #[arg(long)]
    no_init_match: bool,
    #[arg(long, default_value_t = AdamConfig::default().learning_rate)]
    lr: f64,
    #[arg(long, default_value_t = AdamConfig::default().beta1)]
    beta1: f64,
    #[arg(long, default_value_t = AdamConfig::default().beta2)]
    beta2: f64,
    #[arg(long, default_value_t = AdamConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = SolveConfig::default().max_iters)]
    max_iters: usize,
    /// Relative coefficient error that counts as converged.
    #[arg(long, default_value_t = SolveConfig::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SolveConfig::default().trace_stride)]
    trace_stride: usize,
}

impl ConfigArgs {
    fn to_config(&self, seed: u64) -> SolveConfig {
        SolveConfig {
            scaling: match self.scaling {
                ScalingArg::UnitNorm => TargetScaling::UnitNorm,
                ScalingArg::UnitRms => TargetScaling::UnitRms,
                ScalingArg::None => TargetScaling::None,
            },
            match_init_scale: !self.no_init_match,
            rank_k: self.rank_k,
            a_rows: self.a_rows,
            a_mode: match self.a_mode {
                AModeArg::Identity => AMode::Identity,
                AModeArg::General => AMode::General,
            },
            adam: AdamConfig {
                learning_rate: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                epsilon: self.epsilon,
            },
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            trace_stride: self.trace_stride,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    input: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Seed for the network initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cert_out: Option<PathBuf>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    cert: PathBuf,
    target: PathBuf,
    #[arg(long, default_value_t = SolveConfig::default().tol)]
    tol: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated sizes, e.g. `10,15,20`.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Comma-separated seeds or a half-open range `a..b`.
    #[arg(long, default_value = "0..3")]
    seeds: String,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, short)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let mut spec = InstanceSpec::new(args.family.into(), args.n, args.seed);
    if args.spike.is_some() {
        spec.spike = args.spike;
    }
    if args.perturb_lo.is_some() || args.perturb_hi.is_some() {
        let (lo, hi) = spec.perturb_range.unwrap_or_default();
        spec.perturb_range = Some((args.perturb_lo.unwrap_or(lo), args.perturb_hi.unwrap_or(hi)));
    }
    if args.base.is_some() {
        spec.base = args.base;
    }
    if args.noise.is_some() {
        spec.noise = args.noise;
    }
    let (form, status) = spec.generate::<f64>()?;
    let encoding = match args.encoding {
        EncodingArg::Auto => PayloadEncoding::Auto,
        EncodingArg::Inline => PayloadEncoding::Inline,
        EncodingArg::Binary => PayloadEncoding::Binary,
    };
    let meta = InstanceMeta { spec, status };
    let sidecar = format::write_coefficients(&args.out, &form, Some(meta), encoding)?;
    println!("coefficients: {}", form.len());
    if let Some(bin) = sidecar {
        println!("payload: {}", bin.display());
    }
    match status {
        SosStatus::SosByConstruction => println!("sos-by-construction"),
        SosStatus::NotSos => println!("not-sos"),
        SosStatus::Unknown => println!("sos-status-unknown"),
    }
    Ok(0)
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let file = format::read_coefficients(&args.input)?;
    let target = file.form;
    let config = args.config.to_config(args.seed);
    let report = match solve(&target, &config) {
        Ok(r) => r,
        Err(SolveError::Diverged { iteration, .. }) => bail!("solver diverged at iteration {iteration}"),
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.trace_out {
        format::write_trace_file(path, &report.trace)?;
    }
    let cert = Certificate::from_params(&report.best_params, &target, report.best_relative_error)?;
    let verdict = verify(&cert, &target, config.tol)?;

    println!("n: {}", target.n());
    println!("squares: {}", cert.k());
    println!("iterations: {}", report.iterations);
    println!("best_iteration: {}", report.best_iteration);
    println!("wall_time_s: {:.3}", report.wall_time_s);
    println!("residual: {:e}", verdict.residual());

    if verdict.is_certified() {
        if let Some(path) = &args.cert_out {
            let mut cert = cert;
            cert.residual = verdict.residual();
            format::write_certificate(path, &cert)?;
        }
        println!("certified");
        Ok(0)
    } else {
        println!("inconclusive: no certificate within tolerance {:e} after {} iterations", config.tol, report.iterations);
        println!("this is not evidence that the form is not a sum of squares");
        Ok(EXIT_INCONCLUSIVE)
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let cert = format::read_certificate(&args.cert)?;
    let target = format::read_coefficients(&args.target)?.form;
    match verify(&cert, &target, args.tol) {
        Ok(Verdict::Certified { residual }) => {
            println!("residual: {residual:e}");
            println!("certified");
            Ok(0)
        }
        Ok(Verdict::Rejected { residual }) => {
            println!("residual: {residual:e}");
            println!("rejected: residual exceeds tolerance {:e}", args.tol);
            Ok(1)
        }
        Err(CertificateError::WrongTarget { expected, got }) => {
            println!("wrong-target: certificate digest {expected} does not match target digest {got}");
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().context("seed range start")?;
        let b: u64 = b.trim().parse().context("seed range end")?;
        if a >= b {
            bail!("empty seed range {s:?}");
        }
        return Ok((a..b).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad seed {t:?}")))
        .collect()
}

fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let t: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?}"))?;
            Ok(t.max(1))
        }
        _ => Ok(1),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let seeds = parse_seeds(&args.seeds)?;
    let config = args.config.to_config(0);
    let result = run_bench(&args.n_list, &seeds, &config, threads_from_env()?);
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_bench_csv(&mut out, &result)?;
    out.flush()?;
    for a in &result.aggregates {
        println!(
            "n={} runs={} converged={} mean_wall_time_s={:.3} mean_iterations={:.1}",
            a.n, a.runs, a.converged, a.mean_wall_time_s, a.mean_iterations
        );
    }
    match result.exponent {
        Some(e) => println!("scaling_exponent: {e:.2}"),
        None => println!("scaling_exponent: n/a"),
    }
    Ok(0)
}
