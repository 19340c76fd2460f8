//! The whole chain on three kinds of input: a slope-gap instance that
//! earns a "witnessed" verdict, a gap-1 instance where the method makes
//! no claim, and a specimen whose fiber polygons jump, which aborts the
//! run at the analysis stage with the offending point.
//!
//! Run with: cargo run --example full_pipeline

use polyannulus::io::to_json_string;
use polyannulus::pipeline::{cmd_pipeline, PipelineConfig};
use polyannulus::Result;

fn config(gap: i64, seed: u64) -> PipelineConfig {
    PipelineConfig {
        p: 5,
        prec: 12,
        f: 1,
        n: 1,
        m: 0,
        rank: 2,
        gap,
        seed,
        points: 256,
    }
}

fn main() -> Result<()> {
    // Slopes {0, 2}: the gap supports a rate-1/2 certificate.
    let report = cmd_pipeline(&config(2, 101), None)?;
    println!("gap-2 instance: verdict = {}, exit code {}", report.verdict, report.exit_code());
    for check in &report.checks {
        println!("  [{}] {} — {}", if check.ok { "ok" } else { "XX" }, check.name, check.detail);
    }
    if let Some(split) = &report.split {
        println!("  ladder reached ω-order {}", split.omega_order_achieved);
    }
    if let Some(reg) = &report.regularization {
        println!("  regularization τ = {}", reg.tau);
    }
    if let Some(ext) = &report.extension {
        println!(
            "  extension: tensor order {}, integer exponents {:?}, pole-free = {}",
            ext.tensor_order, ext.integer_exponents, ext.pole_free
        );
    }

    // Slopes {0, 1}: in range for analysis, out of range for the method.
    let report = cmd_pipeline(&config(1, 55), None)?;
    println!("\ngap-1 instance: verdict = {}, exit code {}", report.verdict, report.exit_code());

    // A fiberwise jump: the pipeline refuses to go past analysis and
    // reports where constancy fails.
    let report = cmd_pipeline(&config(0, 7), None)?;
    println!("\njumping instance: verdict = {}, exit code {}", report.verdict, report.exit_code());
    if let Some(point) = &report.analyze.witness_point {
        println!("  polygon differs at {point:?}");
    }

    // Every report serializes to canonical JSON; identical seeds give
    // byte-identical documents.
    let a = to_json_string(&cmd_pipeline(&config(2, 101), None)?)?;
    let b = to_json_string(&cmd_pipeline(&config(2, 101), None)?)?;
    println!("\nreports are byte-deterministic: {}", a == b);
    println!("report size: {} bytes of JSON", a.len());

    Ok(())
}
