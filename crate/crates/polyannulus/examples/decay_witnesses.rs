//! Logarithmic-decay certificates: a series passes the witness (r, c)
//! when its coefficients at p-adic level j stay within T-degree c·p^(r·j)
//! of the origin. The example builds a series that decays by design,
//! checks it, and follows the constant through Frobenius and through
//! multiplication and division by ω = p².
//!
//! Run with: cargo run --example decay_witnesses

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyannulus::gen::{decay_depth_bound, decaying_series};
use polyannulus::witness::{
    constant_after_omega_div, constant_after_omega_mul, constant_after_sigma,
};
use polyannulus::{DecayWitness, PadicScalar, Rat, Result, VarSpec};

fn main() -> Result<()> {
    let p = 5;
    let prec = 10;
    let vars = VarSpec::new(1, 0);
    let r = Rat::new(1, 2);
    let c = 2;

    // How deep may a level-j coefficient reach under (r, c)?
    println!("depth budget c·p^(r·j) for r = 1/2, c = {c}:");
    for j in [0, 2, 4, 6, 8] {
        println!("  level {j}: |degree| ≤ {}", decay_depth_bound(p, r, c, j));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = decaying_series(p, vars, prec, r, c, 2, &mut rng);
    println!("\nx = {x}");

    let witness = DecayWitness::log_decay(r, Rat::from_integer(c), (0, prec - 1))?;
    let report = witness.check(&x, 0);
    println!("x passes {}: {}", witness.describe(), report.passes);

    // Frobenius stretches degrees by p and so multiplies the constant by p.
    let xs = x.frobenius(1)?;
    let cs = constant_after_sigma(Rat::from_integer(c), p, 1);
    let ws = DecayWitness::log_decay(r, cs, (0, prec - 1))?;
    println!(
        "\nx^σ passes the transformed witness (r, {}·c): {}",
        p,
        ws.check(&xs, 0).passes
    );

    // Multiplying by ω = p² shifts every level up by 2, which shrinks the
    // constant to c/p^(r·2) = c/p. Division undoes it.
    let omega_vp = 2;
    let omega = PadicScalar::p_power(p, omega_vp, prec + omega_vp);
    let xo = x.scalar_mul(&omega);
    let co = constant_after_omega_mul(Rat::from_integer(c), p, r, omega_vp)?;
    let wo = DecayWitness::log_decay(r, co, (0, prec + omega_vp - 1))?;
    println!("ω·x passes (r, c/p = {co}): {}", wo.check(&xo, 0).passes);

    let back = xo.scalar_mul(&PadicScalar::p_power(p, -omega_vp, prec + omega_vp));
    let cb = constant_after_omega_div(co, p, r, omega_vp)?;
    let wb = DecayWitness::log_decay(r, cb, (0, prec - 1))?;
    println!(
        "ω⁻¹·(ω·x) passes (r, {cb}) again: {}",
        wb.check(&back, 0).passes
    );

    // A sharp witness additionally pins the level-0 slice to degree ≥ 0;
    // the splitting ladder's certificates are of this kind.
    let sharp = DecayWitness::sharp(r, Rat::from_integer(c), (0, prec - 1))?;
    println!(
        "\nsharp variant on x: {}",
        if sharp.check(&x, 0).passes {
            "passes"
        } else {
            "fails (x has negative degrees at level 0)"
        }
    );

    // The smallest constant a family admits is computable directly.
    let min_c = polyannulus::witness::minimal_log_constant(&[&x], r, (0, prec - 1), false)?;
    println!("minimal integer constant for x at rate 1/2: {min_c}");

    Ok(())
}
