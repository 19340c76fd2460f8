//! Finite-range decay certificates for Laurent series.
//!
//! For a series x and a torus variable i, the level-j partial valuation
//! w_j is the most negative T_i-degree whose coefficient is visible at
//! p-adic level j. A witness asserts a lower bound on the whole profile
//! over a checked range of levels:
//!
//! * overconvergent: w_j >= -c·j
//! * log-decay:      w_j >= -c·p^{r·j}
//! * sharp:          w_0 >= 0 and w_j >= -c·p^{r·j} for j >= 1
//!
//! All comparisons are exact integer arithmetic on big integers; r and c
//! are positive rationals. Certificates speak about stored coefficients
//! over the stated range only.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{KernelError, Result};
use crate::series::Series;

pub type Rat = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayKind {
    Overconvergent { c: Rat },
    LogDecay { r: Rat, c: Rat },
    Sharp { r: Rat, c: Rat },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecayWitness {
    pub kind: DecayKind,
    /// Inclusive range of p-adic levels checked.
    pub j_range: (i64, i64),
}

/// One failed level: the observed partial valuation and the bound it broke.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub var: usize,
    pub j: i64,
    pub w: i64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub passes: bool,
    pub violations: Vec<Violation>,
}

fn validate_pos(x: Rat, what: &str) -> Result<()> {
    if x.is_positive() {
        Ok(())
    } else {
        Err(KernelError::BadInput {
            context: format!("{what} must be positive, got {x}"),
        })
    }
}

/// Exact check of W <= c · p^{r j} for W = -w > 0.
fn within_log_bound(p: u64, w: i64, r: Rat, c: Rat, j: i64) -> bool {
    if w >= 0 {
        return true;
    }
    debug_assert!(j >= 0);
    let cap = (-w) as u128 * (*c.denom()) as u128;
    let rd = *r.denom() as u32;
    let lhs = BigUint::from(cap).pow(rd);
    let rhs = BigUint::from(*c.numer() as u64).pow(rd)
        * BigUint::from(p).pow((*r.numer() as u32) * (j as u32));
    lhs <= rhs
}

impl DecayWitness {
    pub fn overconvergent(c: Rat, j_range: (i64, i64)) -> Result<Self> {
        validate_pos(c, "witness constant c")?;
        Ok(DecayWitness {
            kind: DecayKind::Overconvergent { c },
            j_range,
        })
    }

    pub fn log_decay(r: Rat, c: Rat, j_range: (i64, i64)) -> Result<Self> {
        validate_pos(r, "decay rate r")?;
        validate_pos(c, "witness constant c")?;
        Ok(DecayWitness {
            kind: DecayKind::LogDecay { r, c },
            j_range,
        })
    }

    pub fn sharp(r: Rat, c: Rat, j_range: (i64, i64)) -> Result<Self> {
        validate_pos(r, "decay rate r")?;
        validate_pos(c, "witness constant c")?;
        Ok(DecayWitness {
            kind: DecayKind::Sharp { r, c },
            j_range,
        })
    }

    pub fn rate(&self) -> Option<Rat> {
        match self.kind {
            DecayKind::Overconvergent { .. } => None,
            DecayKind::LogDecay { r, .. } | DecayKind::Sharp { r, .. } => Some(r),
        }
    }

    pub fn constant(&self) -> Rat {
        match self.kind {
            DecayKind::Overconvergent { c }
            | DecayKind::LogDecay { r: _, c }
            | DecayKind::Sharp { r: _, c } => c,
        }
    }

    /// Does level j of the profile satisfy the bound?
    fn level_ok(&self, p: u64, j: i64, w: i64) -> bool {
        match self.kind {
            DecayKind::Overconvergent { c } => {
                w >= 0 || (-w) as i128 * *c.denom() as i128 <= *c.numer() as i128 * j as i128
            }
            DecayKind::LogDecay { r, c } => within_log_bound(p, w, r, c, j),
            DecayKind::Sharp { r, c } => {
                if j == 0 {
                    w >= 0
                } else {
                    within_log_bound(p, w, r, c, j)
                }
            }
        }
    }

    /// Check the profile of x in variable `var` over the witness range.
    pub fn check(&self, x: &Series, var: usize) -> WitnessReport {
        let mut violations = Vec::new();
        for j in self.j_range.0..=self.j_range.1 {
            if let Some(w) = x.partial_valuation(var, j) {
                if !self.level_ok(x.p, j, w) {
                    violations.push(Violation { var, j, w });
                }
            }
        }
        WitnessReport {
            passes: violations.is_empty(),
            violations,
        }
    }

    /// Check every torus variable; error on the first violation.
    pub fn require(&self, x: &Series, context: &str) -> Result<()> {
        for i in 0..x.vars.torus {
            let report = self.check(x, i);
            if let Some(v) = report.violations.first() {
                return Err(KernelError::DecayTooSlow {
                    var: v.var,
                    level: v.j,
                    w: v.w,
                    bound: format!("{context}: {}", self.describe()),
                });
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self.kind {
            DecayKind::Overconvergent { c } => format!("w_j >= -{c}·j"),
            DecayKind::LogDecay { r, c } => format!("w_j >= -{c}·p^({r}·j)"),
            DecayKind::Sharp { r, c } => format!("w_0 >= 0, w_j >= -{c}·p^({r}·j)"),
        }
    }
}

/// Smallest nonnegative integer c for which the (r, c) log-decay bound
/// holds across all torus variables of every given series, in sharp form
/// when `sharp` is set (then w_0 >= 0 is required, else WitnessFailure).
pub fn minimal_log_constant(
    xs: &[&Series],
    r: Rat,
    j_range: (i64, i64),
    sharp: bool,
) -> Result<i64> {
    validate_pos(r, "decay rate r")?;
    let rd = *r.denom() as u32;
    let rn = *r.numer() as u32;
    let mut best: i64 = 0;
    for x in xs {
        for var in 0..x.vars.torus {
            for j in j_range.0..=j_range.1 {
                let w = match x.partial_valuation(var, j) {
                    Some(w) if w < 0 => w,
                    _ => continue,
                };
                if sharp && j == 0 {
                    return Err(KernelError::WitnessFailure {
                        context: format!("w_0 = {w} < 0 in variable {var}: no sharp witness exists"),
                    });
                }
                // minimal c with c^rd · p^{rn·j} >= W^rd
                let target = BigUint::from((-w) as u64).pow(rd);
                let scale = BigUint::from(x.p).pow(rn * j as u32);
                let mut c = (target.clone() / &scale).nth_root(rd);
                while c.pow(rd) * &scale < target {
                    c += BigUint::one();
                }
                let c: i64 = c.try_into().map_err(|_| KernelError::WitnessFailure {
                    context: "witness constant exceeds i64".into(),
                })?;
                best = best.max(c);
            }
        }
    }
    Ok(best)
}

/// σ^f worsens a log-decay constant: degrees scale by q = p^f while
/// valuations stay put, so (r, c) becomes (r, p^f·c).
pub fn constant_after_sigma(c: Rat, p: u64, f: u32) -> Rat {
    c * Rat::from_integer((p as i64).pow(f))
}

/// Multiplying by ω = p^e improves the constant: the profile shifts e
/// levels right, so (r, c) becomes (r, c / p^{r·e}). The scale must be an
/// integral power of p.
pub fn constant_after_omega_mul(c: Rat, p: u64, r: Rat, omega_vp: i64) -> Result<Rat> {
    let t = r * Rat::from_integer(omega_vp);
    if !t.is_integer() {
        return Err(KernelError::BadInput {
            context: format!("r·v_p(ω) = {t} is not an integer; constant not expressible"),
        });
    }
    Ok(c / Rat::from_integer((p as i64).pow(t.to_integer() as u32)))
}

/// If ω·x passes (r, c) then x passes (r, p^{r·e}·c): dividing by ω shifts
/// the profile e levels left.
pub fn constant_after_omega_div(c: Rat, p: u64, r: Rat, omega_vp: i64) -> Result<Rat> {
    let t = r * Rat::from_integer(omega_vp);
    if !t.is_integer() {
        return Err(KernelError::BadInput {
            context: format!("r·v_p(ω) = {t} is not an integer; constant not expressible"),
        });
    }
    Ok(c * Rat::from_integer((p as i64).pow(t.to_integer() as u32)))
}

/// Wire form of a witness: rationals as [numerator, denominator] pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct WitnessRepr {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<[i64; 2]>,
    pub c: [i64; 2],
    pub j_range: [i64; 2],
}

impl From<&DecayWitness> for WitnessRepr {
    fn from(w: &DecayWitness) -> Self {
        let (kind, r, c) = match w.kind {
            DecayKind::Overconvergent { c } => ("overconvergent", None, c),
            DecayKind::LogDecay { r, c } => ("log-decay", Some(r), c),
            DecayKind::Sharp { r, c } => ("sharp", Some(r), c),
        };
        WitnessRepr {
            kind: kind.into(),
            r: r.map(|r| [*r.numer(), *r.denom()]),
            c: [*c.numer(), *c.denom()],
            j_range: [w.j_range.0, w.j_range.1],
        }
    }
}

impl TryFrom<&WitnessRepr> for DecayWitness {
    type Error = KernelError;

    fn try_from(w: &WitnessRepr) -> Result<Self> {
        let c = Ratio::new(w.c[0], w.c[1]);
        let j_range = (w.j_range[0], w.j_range[1]);
        let r = w.r.map(|r| Ratio::new(r[0], r[1]));
        match (w.kind.as_str(), r) {
            ("overconvergent", _) => DecayWitness::overconvergent(c, j_range),
            ("log-decay", Some(r)) => DecayWitness::log_decay(r, c, j_range),
            ("sharp", Some(r)) => DecayWitness::sharp(r, c, j_range),
            _ => Err(KernelError::BadInput {
                context: format!("unknown witness kind {:?}", w.kind),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Exponent, Series, VarSpec};

    fn series_1d(p: u64, prec: i64, entries: &[(i64, i128)]) -> Series {
        let e: Vec<(Exponent, i128)> = entries.iter().map(|&(d, c)| (vec![d], c)).collect();
        Series::from_int_terms(p, VarSpec::new(1, 0), prec, &e)
    }

    #[test]
    fn polynomials_pass_every_witness() {
        let x = series_1d(5, 10, &[(0, 7), (3, 25), (9, 1)]);
        let witnesses = [
            DecayWitness::overconvergent(Rat::new(1, 7), (0, 9)).unwrap(),
            DecayWitness::log_decay(Rat::new(1, 3), Rat::new(1, 100), (0, 9)).unwrap(),
            DecayWitness::sharp(Rat::new(1, 2), Rat::new(1, 50), (0, 9)).unwrap(),
        ];
        for w in &witnesses {
            assert!(w.check(&x, 0).passes, "{}", w.describe());
        }
    }

    #[test]
    fn doubling_poles_match_rate_log5_of_2() {
        // x = sum_{j=1..4} p^j T^(-2^j), p = 5
        let p = 5u64;
        let x = series_1d(
            p,
            10,
            &[(-2, 5), (-4, 25), (-8, 125), (-16, 625)],
        );
        // independent scan: the profile must be exactly w_j = -2^j
        for j in 1..=4i64 {
            assert_eq!(x.partial_valuation(0, j), Some(-(1i64 << j)));
        }
        assert_eq!(x.partial_valuation(0, 0), None);

        // r slightly below log_5(2) ~ 0.43067: 5^{0.431 j} >= 2^j for j <= 4
        let tight = DecayWitness::log_decay(Rat::new(431, 1000), Rat::one(), (0, 4)).unwrap();
        assert!(tight.check(&x, 0).passes);

        // r = 2/5 is too slow: 5^{1.6} < 16 at level 4
        let slow = DecayWitness::log_decay(Rat::new(2, 5), Rat::one(), (0, 4)).unwrap();
        let report = slow.check(&x, 0);
        assert!(!report.passes);
        assert_eq!(report.violations.last().unwrap().j, 4);
    }

    #[test]
    fn minimal_constant_matches_hand_scan() {
        let p = 5u64;
        // w_1 = -11, w_2 = -40 at r = 1/2:
        //   level 1: c >= 11/sqrt(5)  -> minimal integer 5 (5^2·5=125 >= 121)
        //   level 2: c >= 40/5 = 8    -> minimal integer 8
        let x = series_1d(p, 10, &[(-11, 5), (-40, 25)]);
        let c = minimal_log_constant(&[&x], Rat::new(1, 2), (0, 9), true).unwrap();
        assert_eq!(c, 8);
        let w = DecayWitness::sharp(Rat::new(1, 2), Rat::from_integer(8), (0, 9)).unwrap();
        assert!(w.check(&x, 0).passes);
        let w7 = DecayWitness::sharp(Rat::new(1, 2), Rat::from_integer(7), (0, 9)).unwrap();
        assert!(!w7.check(&x, 0).passes);
    }

    #[test]
    fn sharp_witness_requires_integral_level_zero() {
        let x = series_1d(5, 10, &[(-3, 1)]);
        let w = DecayWitness::sharp(Rat::new(1, 2), Rat::from_integer(100), (0, 9)).unwrap();
        assert!(!w.check(&x, 0).passes);
        assert!(minimal_log_constant(&[&x], Rat::new(1, 2), (0, 9), true).is_err());
    }

    #[test]
    fn sigma_transform_scales_the_constant() {
        let p = 5u64;
        let f = 1u32;
        // profile w_j = -ceil(c·p^{j/2}) for c = 2
        let x = series_1d(p, 10, &[(-5, 5), (-10, 25), (-23, 125)]);
        let c = Rat::from_integer(3);
        let w = DecayWitness::log_decay(Rat::new(1, 2), c, (0, 9)).unwrap();
        assert!(w.check(&x, 0).passes);
        let xs = x.frobenius(f).unwrap();
        let cs = constant_after_sigma(c, p, f);
        assert_eq!(cs, Rat::from_integer(15));
        let ws = DecayWitness::log_decay(Rat::new(1, 2), cs, (0, 9)).unwrap();
        assert!(ws.check(&xs, 0).passes);
    }

    #[test]
    fn omega_transforms_shift_the_profile() {
        let p = 5u64;
        let r = Rat::new(1, 2);
        let omega_vp = 2i64; // ω = p^2, r·v_p(ω) = 1
        let x = series_1d(p, 12, &[(-5, 5), (-10, 25), (-23, 125)]);
        let c = Rat::from_integer(3);
        assert!(DecayWitness::log_decay(r, c, (0, 9)).unwrap().check(&x, 0).passes);

        // multiplication by ω improves the constant to c/p
        let oc = constant_after_omega_mul(c, p, r, omega_vp).unwrap();
        assert_eq!(oc, Rat::new(3, 5));
        let ox = x.int_mul(25);
        assert!(DecayWitness::log_decay(r, oc, (0, 9))
            .unwrap()
            .check(&ox, 0)
            .passes);

        // converse: from a bound on ω·x one recovers c·p for x
        let back = constant_after_omega_div(oc, p, r, omega_vp).unwrap();
        assert_eq!(back, c);
        let non_integral = constant_after_omega_mul(c, p, Rat::new(1, 3), 2);
        assert!(non_integral.is_err());
    }
}
