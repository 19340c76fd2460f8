//! Newton polygons of Frobenius matrices at degree-one points.
//!
//! A point assigns a Teichmüller coordinate to every variable (nonzero
//! residue on torus variables, arbitrary residue on affine ones). The
//! polygon at a point is the valuation Newton polygon of the
//! characteristic polynomial of the evaluated matrix, with slopes
//! normalized by 1/f so that multiplication by q = p^f shifts slopes
//! by exactly one.

use std::collections::BTreeSet;

use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::scalar::{safe_rel_prec, PadicScalar};
use crate::series::VarSpec;
use crate::witness::Rat;

/// Teichmüller residues per variable: `torus[i]` in 1..p, `affine[j]` in 0..p.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointSpec {
    pub torus: Vec<u64>,
    pub affine: Vec<u64>,
}

impl PointSpec {
    pub fn validate(&self, p: u64, vars: VarSpec) -> Result<()> {
        if self.torus.len() != vars.torus || self.affine.len() != vars.affine {
            return Err(KernelError::BadInput {
                context: format!(
                    "point has {}+{} coordinates, ring has {}+{}",
                    self.torus.len(),
                    self.affine.len(),
                    vars.torus,
                    vars.affine
                ),
            });
        }
        if self.torus.iter().any(|&t| t == 0 || t >= p) {
            return Err(KernelError::BadInput {
                context: "torus coordinates must be nonzero residues".into(),
            });
        }
        if self.affine.iter().any(|&t| t >= p) {
            return Err(KernelError::BadInput {
                context: "affine coordinates must be residues mod p".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    /// Frobenius power used for slope normalization.
    pub f: u32,
    /// Breakpoints (i, v_p) of the lower hull, endpoints included.
    pub vertices: Vec<(i64, i64)>,
    /// All d slopes in ascending order, v_p-of-eigenvalue divided by f.
    pub slopes: Vec<Rat>,
}

impl NewtonPolygon {
    /// Smallest i ≥ 1 with slope_i < slope_{i+1} (1-based), if any.
    pub fn first_break(&self) -> Option<usize> {
        (1..self.slopes.len()).find(|&i| self.slopes[i - 1] < self.slopes[i])
    }

    /// Slope jump across the first break.
    pub fn gap(&self) -> Option<Rat> {
        self.first_break().map(|i| self.slopes[i] - self.slopes[i - 1])
    }
}

/// One characteristic-polynomial coefficient as a hull point: either a
/// known valuation or only a lower bound (the value vanished at its
/// working precision).
#[derive(Debug, Clone, Copy)]
pub enum HullPoint {
    Known { x: i64, y: i64 },
    Floor { x: i64, y_min: i64 },
}

/// Lower convex hull of the known points, certified against the floors:
/// every only-bounded point must sit on or above the hull, otherwise the
/// hull cannot be trusted at the working precision.
pub fn certified_lower_hull(points: &[HullPoint]) -> Result<Vec<(i64, i64)>> {
    let mut known: Vec<(i64, i64)> = Vec::new();
    for pt in points {
        if let HullPoint::Known { x, y } = *pt {
            known.push((x, y));
        }
    }
    if known.len() < 2 {
        return Err(KernelError::PrecisionExhausted {
            context: "too few certified characteristic coefficients for a hull".into(),
        });
    }
    known.sort_unstable();
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &known {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b.0 - a.0) as i128 * (pt.1 - a.1) as i128
                - (b.1 - a.1) as i128 * (pt.0 - a.0) as i128;
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    for pt in points {
        if let HullPoint::Floor { x, y_min } = *pt {
            if hull_exceeds(&hull, x, y_min) {
                return Err(KernelError::PrecisionExhausted {
                    context: format!(
                        "coefficient {x} vanishes mod p^{y_min} but the hull needs more"
                    ),
                });
            }
        }
    }
    Ok(hull)
}

/// True when the hull at abscissa x lies strictly above height y.
fn hull_exceeds(hull: &[(i64, i64)], x: i64, y: i64) -> bool {
    for w in hull.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x0 <= x && x <= x1 {
            // hull(x) > y  ⇔  y0(x1−x0) + (y1−y0)(x−x0) > y(x1−x0)
            let lhs = y0 as i128 * (x1 - x0) as i128 + (y1 - y0) as i128 * (x - x0) as i128;
            return lhs > y as i128 * (x1 - x0) as i128;
        }
    }
    false
}

type ScalarPoly = Vec<PadicScalar>;

fn poly_add(a: &ScalarPoly, b: &ScalarPoly, p: u64, cap: i64) -> ScalarPoly {
    let n = a.len().max(b.len());
    let zero = PadicScalar::zero(p, cap);
    (0..n)
        .map(|k| {
            let x = a.get(k).unwrap_or(&zero);
            let y = b.get(k).unwrap_or(&zero);
            x.add(y)
        })
        .collect()
}

fn poly_mul(a: &ScalarPoly, b: &ScalarPoly, p: u64, cap: i64) -> ScalarPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![PadicScalar::zero(p, cap); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

fn poly_det(m: &[Vec<ScalarPoly>], p: u64, cap: i64) -> ScalarPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc: ScalarPoly = Vec::new();
    for j in 0..n {
        let minor: Vec<Vec<ScalarPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let mut term = poly_mul(&m[0][j], &poly_det(&minor, p, cap), p, cap);
        if j % 2 == 1 {
            for c in &mut term {
                *c = c.neg();
            }
        }
        acc = poly_add(&acc, &term, p, cap);
    }
    acc
}

/// det(X·I − M) as coefficients c[k] of X^k, c[d] = 1.
fn char_poly(m: &[Vec<PadicScalar>], p: u64) -> ScalarPoly {
    let d = m.len();
    let cap = safe_rel_prec(p);
    let entries: Vec<Vec<ScalarPoly>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        vec![m[i][j].neg(), PadicScalar::one(p, cap)]
                    } else {
                        vec![m[i][j].neg()]
                    }
                })
                .collect()
        })
        .collect();
    poly_det(&entries, p, cap)
}

pub fn newton_polygon_at_point(a: &SeriesMatrix, f: u32, x: &PointSpec) -> Result<NewtonPolygon> {
    x.validate(a.p(), a.vars())?;
    let m = a.evaluate(&x.torus, &x.affine)?;
    let c = char_poly(&m, a.p());
    let d = a.rows as i64;
    let mut points = Vec::with_capacity(c.len());
    for i in 0..=d {
        let coeff = &c[(d - i) as usize];
        if coeff.is_zero() {
            if i == d {
                return Err(KernelError::ZeroDeterminantAtPrecision);
            }
            points.push(HullPoint::Floor {
                x: i,
                y_min: coeff.abs_prec(),
            });
        } else {
            points.push(HullPoint::Known { x: i, y: coeff.v });
        }
    }
    let vertices = certified_lower_hull(&points)?;
    let mut slopes = Vec::with_capacity(d as usize);
    for w in vertices.windows(2) {
        let run = w[1].0 - w[0].0;
        let rise = w[1].1 - w[0].1;
        let s = Ratio::new(rise, run * f as i64);
        for _ in 0..run {
            slopes.push(s);
        }
    }
    Ok(NewtonPolygon {
        f,
        vertices,
        slopes,
    })
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub constant: bool,
    /// Polygon at the first sampled point.
    pub base: NewtonPolygon,
    /// First point whose polygon differs, with its polygon.
    pub counterexample: Option<(PointSpec, NewtonPolygon)>,
    pub points_checked: usize,
}

pub fn newton_constancy_scan(
    a: &SeriesMatrix,
    f: u32,
    points: &[PointSpec],
) -> Result<ScanOutcome> {
    let Some(first) = points.first() else {
        return Err(KernelError::BadInput {
            context: "constancy scan needs at least one point".into(),
        });
    };
    let base = newton_polygon_at_point(a, f, first)?;
    let mut counterexample = None;
    let mut checked = 1;
    for x in &points[1..] {
        let np = newton_polygon_at_point(a, f, x)?;
        checked += 1;
        if np != base {
            counterexample = Some((x.clone(), np));
            break;
        }
    }
    Ok(ScanOutcome {
        constant: counterexample.is_none(),
        base,
        counterexample,
        points_checked: checked,
    })
}

/// Deterministic point sample: full enumeration when the point count fits
/// the budget, otherwise a seeded draw of `budget` distinct points.
pub fn sample_points(p: u64, vars: VarSpec, budget: usize, seed: u64) -> Vec<PointSpec> {
    let total: u128 = (p as u128 - 1)
        .checked_pow(vars.torus as u32)
        .and_then(|t| t.checked_mul((p as u128).pow(vars.affine as u32)))
        .unwrap_or(u128::MAX);
    if total <= budget as u128 {
        let mut out = Vec::with_capacity(total as usize);
        let mut coords = vec![0u64; vars.total()];
        enumerate(p, vars, 0, &mut coords, &mut out);
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = BTreeSet::new();
    while set.len() < budget {
        let torus: Vec<u64> = (0..vars.torus).map(|_| rng.gen_range(1..p)).collect();
        let affine: Vec<u64> = (0..vars.affine).map(|_| rng.gen_range(0..p)).collect();
        set.insert(PointSpec { torus, affine });
    }
    set.into_iter().collect()
}

fn enumerate(p: u64, vars: VarSpec, i: usize, coords: &mut Vec<u64>, out: &mut Vec<PointSpec>) {
    if i == vars.total() {
        out.push(PointSpec {
            torus: coords[..vars.torus].to_vec(),
            affine: coords[vars.torus..].to_vec(),
        });
        return;
    }
    let range = if vars.is_torus(i) { 1..p } else { 0..p };
    for t in range {
        coords[i] = t;
        enumerate(p, vars, i + 1, coords, out);
    }
}
