//! Fiber Newton polygons: specialize a Frobenius matrix at Teichmüller
//! points of the polyannulus, take the certified lower hull of the
//! characteristic-polynomial valuations, and scan for constancy across a
//! deterministic point sample.
//!
//! Run with: cargo run --example newton_scan

use polyannulus::gen::{np_jumping_instance, split_instance, SplitInstanceSpec};
use polyannulus::newton::{newton_constancy_scan, newton_polygon_at_point, sample_points};
use polyannulus::{GlobalParams, PointSpec, Result, VarSpec};

fn main() -> Result<()> {
    let params = GlobalParams::new(5, 10, 1, 2)?;
    let vars = VarSpec::new(1, 0);

    // A rank-2 module built to have slopes {0, 2} in every fiber.
    let spec = SplitInstanceSpec {
        params,
        rank: 2,
        vars,
        degree: 2,
        terms_per_entry: 2,
        constant_coefficients: false,
        slope_shift: 0,
    };
    let module = split_instance(&spec, 2024)?;

    let at_one = newton_polygon_at_point(&module.a, module.f, &PointSpec { torus: vec![1], affine: vec![] })?;
    println!("polygon at T = teich(1):");
    println!("  vertices: {:?}", at_one.vertices);
    println!("  slopes:   {:?}", at_one.slopes.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    println!("  first break at x = {:?}, gap = {:?}", at_one.first_break(), at_one.gap().map(|g| g.to_string()));

    // The sample covers all (p−1)^n·p^m degree-one points when that count
    // fits the budget, otherwise a seeded draw.
    let points = sample_points(params.p, vars, 64, 9);
    println!("\nscanning {} points…", points.len());
    let scan = newton_constancy_scan(&module.a, module.f, &points)?;
    if scan.constant {
        println!(
            "constant polygon across {} points, slopes {:?}",
            scan.points_checked,
            scan.base.slopes.iter().map(|s| s.to_string()).collect::<Vec<_>>()
        );
    } else if let Some((point, polygon)) = &scan.counterexample {
        println!("jump at {:?}: {:?} vs base {:?}", point, polygon.slopes, scan.base.slopes);
    }

    // A module whose polygon genuinely jumps at one point: the trace
    // T + (p − a) loses its unit term exactly where T specializes to a.
    let jumping = np_jumping_instance(params, 3, 1)?;
    println!("\njumping specimen (special point at teich(3)):");
    for t in 1..5 {
        let poly = newton_polygon_at_point(&jumping.a, jumping.f, &PointSpec { torus: vec![t], affine: vec![] })?;
        println!(
            "  at teich({t}): slopes {:?}",
            poly.slopes.iter().map(|s| s.to_string()).collect::<Vec<_>>()
        );
    }
    let all = sample_points(params.p, vars, 64, 0);
    let scan = newton_constancy_scan(&jumping.a, jumping.f, &all)?;
    if let Some((point, _)) = &scan.counterexample {
        println!("  scan reports the jump at {point:?}");
    }

    Ok(())
}
