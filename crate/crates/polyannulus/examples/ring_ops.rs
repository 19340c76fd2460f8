//! Tour of the windowed Laurent-series ring: arithmetic with certified
//! precision, the three-way degree split around each torus variable, and
//! the derivative/primitive pair.
//!
//! Run with: cargo run --example ring_ops

use polyannulus::{Result, Series, VarSpec, Window};

fn main() -> Result<()> {
    let p = 5;
    let prec = 10;
    // Two circle variables T1, T2 (invertible) and one disk variable T3.
    let vars = VarSpec::new(2, 1);

    // x = 7·T1⁻³ + 2·T1⁻¹ + 3 + T1·T2² + 5·T3
    let x = Series::from_int_terms(
        p,
        vars,
        prec,
        &[
            (vec![-3, 0, 0], 7),
            (vec![-1, 0, 0], 2),
            (vec![0, 0, 0], 3),
            (vec![1, 2, 0], 1),
            (vec![0, 0, 1], 5),
        ],
    );
    // A unit: one dominant monomial, everything else strictly deeper p-adically.
    let y = Series::from_int_terms(p, vars, prec, &[(vec![1, 0, 0], 5), (vec![0, 0, 0], 4)]);

    println!("x = {x}");
    println!("y = {y}");
    println!("x + y = {}", x.add(&y)?);
    println!("x · y = {}", x.mul(&y)?);
    println!("Gauss valuation of x: {}", x.gauss_valuation()?);

    // Every element splits along each circle direction into a deep part
    // (degrees ≤ −2), a residue term (the degree −1 slice), and a
    // non-negative part. The three pieces recombine exactly.
    let deep = x.truncate_below(0);
    let res = x.residue_term(0);
    let high = x.truncate_at_least(0);
    println!("\nsplit along T1:");
    println!("  deep      = {deep}");
    println!("  residue   = {res}");
    println!("  at least  = {high}");
    let back = deep.add(&res)?.add(&high)?;
    println!("  recombines to x exactly: {}", back.sub(&x)?.is_zero());

    // The deep part has a primitive: term a·T1^d ↦ a·T1^(d+1)/(d+1).
    // Differentiating it recovers the deep part (the division is undone),
    // which is why the degree −1 slice had to be split off first.
    let h = deep.primitive(0)?;
    println!("\n∫ deep dT1 = {h}");
    println!(
        "∂/∂T1 of that equals deep: {}",
        h.partial_derivative(0).sub(&deep)?.is_zero()
    );

    // θ_i = T_i·∂_i is the natural derivation on the circle directions.
    println!("θ_1(x) = {}", x.theta(0));

    // Frobenius substitutes T_i ↦ T_i^p and is a ring map.
    let frob = x.frobenius(1)?;
    println!("\nx^σ = {frob}");
    let both = x.mul(&y)?.frobenius(1)?;
    let apart = x.frobenius(1)?.mul(&y.frobenius(1)?)?;
    println!("(xy)^σ = x^σ·y^σ: {}", both.sub(&apart)?.is_zero());

    // Units invert by geometric series on a requested window.
    let window = Window::from_bounds(vars, vec![(-8, 8), (-8, 8), (0, 8)])?;
    let inv = y.invert_unit(&window)?;
    let check = y.mul(&inv)?;
    println!("\ny⁻¹ on window ±8 = {inv}");
    println!(
        "y·y⁻¹ = 1 there: {}",
        check
            .sub(&Series::from_int_terms(p, vars, prec, &[(vec![0, 0, 0], 1)]))?
            .is_zero()
    );

    // Evaluation at Teichmüller-lifted points is a ring map to Z_p.
    let at = x.evaluate(&[2, 3], &[1])?;
    println!("\nx(teich(2), teich(3), teich(1)) = {at}");

    Ok(())
}
