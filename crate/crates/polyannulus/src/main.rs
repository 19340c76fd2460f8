use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use polyannulus::io;
use polyannulus::pipeline::{
    cmd_analyze, cmd_generate, cmd_split, restrict_module_window, run_pipeline, PipelineConfig,
};
use polyannulus::sigma_nabla::SigmaNablaModule;
use polyannulus::Result;

/// Slope-gap experiments over truncated p-adic Laurent-series rings:
/// generate graded Frobenius modules, scan fiber Newton polygons, split
/// off unit roots with decay certificates, and run the full pipeline.
#[derive(Parser)]
#[command(name = "polyannulus", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance and emit it as JSON.
    Generate(GenerateArgs),
    /// Scan the fiber Newton polygons of a module over degree-one points.
    Analyze(AnalyzeArgs),
    /// Run the unit-root splitting ladder with all certificates.
    Split(SplitArgs),
    /// End-to-end: analyze, reduce, split, regularize, extend.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// Base prime (odd, at least 5 for experiments).
    #[arg(long, default_value_t = 5)]
    p: u64,
    /// Working precision: coefficients certified mod p^N.
    #[arg(long = "N", default_value_t = 12)]
    prec: i64,
    /// Frobenius power (σ^f).
    #[arg(long, default_value_t = 1)]
    f: u32,
    /// Torus variables.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Affine (disk) variables.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Module rank.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// Prescribed slope gap; 0 asks for a Newton-jumping specimen.
    #[arg(long, default_value_t = 2)]
    gap: i64,
    /// Generator seed; equal seeds give byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget for the degree-one point sample.
    #[arg(long, default_value_t = 256)]
    points: usize,
}

impl ShapeArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            p: self.p,
            prec: self.prec,
            f: self.f,
            n: self.n,
            m: self.m,
            rank: self.rank,
            gap: self.gap,
            seed: self.seed,
            points: self.points,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Write the module here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LoadArgs {
    /// Module JSON produced by `generate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Re-certify all entries on the symmetric window of this radius.
    #[arg(long = "max-window")]
    max_window: Option<i64>,
}

impl LoadArgs {
    fn load(&self) -> Result<SigmaNablaModule> {
        let module = io::read_module(&self.input)?;
        match self.max_window {
            Some(w) => restrict_module_window(&module, w),
            None => Ok(module),
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    load: LoadArgs,
    #[arg(long, default_value_t = 256)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    load: LoadArgs,
    /// Ladder iterations; defaults to the precision horizon N/v_p(ω).
    #[arg(long = "K")]
    k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Run on this module instead of generating one.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long = "max-window")]
    max_window: Option<i64>,
    #[arg(long = "K")]
    k: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Canonical JSON to `--out` (summary on stdout) or to stdout (summary
/// on stderr).
fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>, summary: String) -> Result<()> {
    let text = io::to_json_string(value)?;
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            println!("{summary} -> {}", path.display());
        }
        None => {
            print!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn run() -> Result<i32> {
    match Cli::parse().command {
        Command::Generate(args) => {
            let cfg = args.shape.config();
            let module = cmd_generate(&cfg)?;
            emit(
                &io::ModuleRepr::from(&module),
                &args.out,
                format!(
                    "generated rank-{} module, p = {}, N = {}, gap = {}, seed = {}",
                    module.rank(),
                    cfg.p,
                    cfg.prec,
                    cfg.gap,
                    cfg.seed
                ),
            )?;
            Ok(0)
        }
        Command::Analyze(args) => {
            let module = args.load.load()?;
            let report = cmd_analyze(&module, args.points, args.seed)?;
            let summary = if report.constant {
                format!(
                    "polygon constant across {} points, slopes {:?}",
                    report.points_checked, report.polygon.slopes
                )
            } else {
                format!(
                    "polygon jumps at {:?} after {} points",
                    report.witness_point.as_ref().unwrap(),
                    report.points_checked
                )
            };
            let code = if report.constant { 0 } else { 3 };
            emit(&report, &args.out, summary)?;
            Ok(code)
        }
        Command::Split(args) => {
            let module = args.load.load()?;
            let report = cmd_split(&module, args.k)?;
            let ok = report.all_ok();
            let summary = format!(
                "K = {} ladder: ω-order {}, {}, checks {}/{} ok",
                report.k,
                report.omega_order_achieved,
                report.witness.kind,
                report.checks.iter().filter(|c| c.ok).count(),
                report.checks.len()
            );
            emit(&report, &args.out, summary)?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Pipeline(args) => {
            let cfg = args.shape.config();
            let report = match &args.input {
                Some(path) => {
                    let module = io::read_module(path)?;
                    let module = match args.max_window {
                        Some(w) => restrict_module_window(&module, w)?,
                        None => module,
                    };
                    run_pipeline(&module, args.k, cfg.points, cfg.seed)?
                }
                None => {
                    let module = cmd_generate(&cfg)?;
                    run_pipeline(&module, args.k, cfg.points, cfg.seed)?
                }
            };
            let code = report.exit_code();
            let summary = format!(
                "verdict: {} ({}/{} checks ok)",
                report.verdict,
                report.checks.iter().filter(|c| c.ok).count(),
                report.checks.len()
            );
            emit(&report, &args.out, summary)?;
            Ok(code)
        }
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
