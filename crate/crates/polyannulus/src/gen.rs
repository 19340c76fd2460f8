//! Seeded instance generators: random Laurent polynomials, log-decaying
//! series, ω-graded splitting instances built by unipotent conjugation,
//! rank-one connections with prescribed decay, regular-singular rank-one
//! modules, and Newton-polygon jumping specimens.
//!
//! Every generator is a pure function of its seed (ChaCha stream), so a
//! fixed seed reproduces the same instance byte for byte.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::newton::{newton_constancy_scan, sample_points};
use crate::regularize::RankOneConnection;
use crate::scalar::{GlobalParams, PadicScalar};
use crate::series::{Exponent, Series, VarSpec, Window};
use crate::sigma_nabla::SigmaNablaModule;
use crate::split::SplitInput;
use crate::witness::Rat;

/// Largest depth W ≥ 0 with W^{r_den} ≤ c^{r_den}·p^{r_num·j}: the deepest
/// pole an (r, c)-decaying series may show at p-adic level j.
pub fn decay_depth_bound(p: u64, r: Rat, c: i64, j: i64) -> i64 {
    assert!(c > 0 && j >= 0 && *r.numer() > 0 && *r.denom() > 0);
    let rd = *r.denom() as u32;
    let mut bound = (c as u128).saturating_pow(rd);
    for _ in 0..(*r.numer() as i64 * j) {
        bound = bound.saturating_mul(p as u128);
    }
    nth_root_floor(bound, rd) as i64
}

fn nth_root_floor(x: u128, n: u32) -> u128 {
    let (mut lo, mut hi) = (0u128, 1u128 << (128 / n.max(1)).min(63));
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if mid.checked_pow(n).map_or(false, |m| m <= x) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// A unit residue mod p², i.e. an integer in 1..p² prime to p.
fn random_unit(rng: &mut ChaCha8Rng, p: u64) -> i128 {
    loop {
        let u = rng.gen_range(1..(p * p) as i128);
        if u % p as i128 != 0 {
            return u;
        }
    }
}

fn int_pow(p: u64, e: i64) -> i128 {
    let mut acc = 1i128;
    for _ in 0..e {
        acc *= p as i128;
    }
    acc
}

/// Random Laurent polynomial with `terms` distinct exponents drawn inside
/// `window` (which must be finite) and coefficients u·p^v at all levels.
pub fn random_laurent(
    p: u64,
    vars: VarSpec,
    prec: i64,
    window: &Window,
    terms: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Series> {
    let mut used = BTreeSet::new();
    let mut entries = Vec::with_capacity(terms);
    for _ in 0..terms {
        for _ in 0..64 {
            let e: Exponent = (0..vars.total())
                .map(|i| rng.gen_range(window.lo(i)..=window.hi(i)))
                .collect();
            if used.insert(e.clone()) {
                let v = rng.gen_range(0..prec);
                entries.push((e, random_unit(rng, p) * int_pow(p, v)));
                break;
            }
        }
    }
    Series::from_int_terms(p, vars, prec, &entries).restrict_window(window.clone())
}

/// Random series passing the (r, c) log-decay witness by construction:
/// at every p-adic level j the exponents stay within the permitted depth,
/// and exponents are distinct across levels so no coefficient collision
/// can pull a deep term down to a tighter level.
pub fn decaying_series(
    p: u64,
    vars: VarSpec,
    prec: i64,
    r: Rat,
    c: i64,
    per_level: usize,
    rng: &mut ChaCha8Rng,
) -> Series {
    let mut used = BTreeSet::new();
    let mut entries = Vec::new();
    for j in 0..prec {
        let w = decay_depth_bound(p, r, c, j);
        for _ in 0..per_level {
            for _ in 0..64 {
                let e: Exponent = (0..vars.total())
                    .map(|i| {
                        if vars.is_torus(i) {
                            rng.gen_range(-w..=w)
                        } else {
                            rng.gen_range(0..=w.min(4))
                        }
                    })
                    .collect();
                if used.insert(e.clone()) {
                    entries.push((e, random_unit(rng, p) * int_pow(p, j)));
                    break;
                }
            }
        }
    }
    Series::from_int_terms(p, vars, prec, &entries)
}

/// Random polynomial entry: torus degrees in [−degree, degree], affine
/// degrees in [0, degree], coefficient levels in [0, max_level].
fn random_entry(
    p: u64,
    vars: VarSpec,
    prec: i64,
    degree: i64,
    terms: usize,
    max_level: i64,
    rng: &mut ChaCha8Rng,
) -> Series {
    let mut used = BTreeSet::new();
    let mut entries = Vec::with_capacity(terms);
    for _ in 0..terms {
        for _ in 0..64 {
            let e: Exponent = (0..vars.total())
                .map(|i| {
                    if vars.is_torus(i) {
                        rng.gen_range(-degree..=degree)
                    } else {
                        rng.gen_range(0..=degree)
                    }
                })
                .collect();
            if used.insert(e.clone()) {
                let v = rng.gen_range(0..=max_level.max(0));
                entries.push((e, random_unit(rng, p) * int_pow(p, v)));
                break;
            }
        }
    }
    Series::from_int_terms(p, vars, prec, &entries)
}

/// Recipe for a splitting instance with prescribed constant Newton
/// polygon: slopes (t, t+s, …, t+s) where t is the uniform shift and
/// s = v_p(ω)/f the slope gap.
#[derive(Debug, Clone)]
pub struct SplitInstanceSpec {
    pub params: GlobalParams,
    pub rank: usize,
    pub vars: VarSpec,
    /// Degree bound for the unipotent conjugator's perturbation.
    pub degree: i64,
    pub terms_per_entry: usize,
    /// Restrict the perturbation to constants (oracle-friendly instances).
    pub constant_coefficients: bool,
    /// Uniform integer slope added to the whole Frobenius.
    pub slope_shift: i64,
}

impl SplitInstanceSpec {
    /// The slope multiset every fiber polygon must reproduce.
    pub fn prescribed_slopes(&self) -> Vec<Rat> {
        let t = Rat::from_integer(self.slope_shift);
        let s = Rat::new(self.params.omega_vp, self.params.f as i64);
        let mut slopes = vec![t];
        slopes.extend(std::iter::repeat(t + s).take(self.rank - 1));
        slopes
    }
}

/// Conjugate a split diagonal Frobenius by a random unipotent B = 1 + ωE
/// and keep the result only if every structural invariant checks out:
/// integrability, compatibility, ω-grading of the off-corner blocks, and
/// the prescribed Newton polygon at every sampled degree-one point.
pub fn split_instance(spec: &SplitInstanceSpec, seed: u64) -> Result<SigmaNablaModule> {
    let mut last = String::new();
    for attempt in 0..8u64 {
        let sub = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        match try_split_instance(spec, sub) {
            Ok(m) => return Ok(m),
            Err(e) => last = e.to_string(),
        }
    }
    Err(KernelError::GenerationFailed {
        context: format!("no valid splitting instance after 8 attempts: {last}"),
    })
}

fn try_split_instance(spec: &SplitInstanceSpec, seed: u64) -> Result<SigmaNablaModule> {
    let params = spec.params;
    let (p, prec, ov, f) = (params.p, params.prec, params.omega_vp, params.f);
    let vars = spec.vars;
    let d = spec.rank;
    if d < 2 {
        return Err(KernelError::BadInput {
            context: "splitting instances need rank at least 2".into(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = params.omega();

    // diagonal seed: unit corner, one ω-slope per remaining line
    let unit = |rng: &mut ChaCha8Rng| {
        PadicScalar::from_int(p, random_unit(rng, p), prec)
    };
    let mut a0 = SeriesMatrix::zero(d, d, p, vars, prec);
    *a0.at_mut(0, 0) = Series::constant(p, vars, prec, unit(&mut rng));
    for k in 1..d {
        *a0.at_mut(k, k) = Series::constant(p, vars, prec, unit(&mut rng)).scalar_mul(&omega);
    }
    if spec.slope_shift != 0 {
        let e = f as i64 * spec.slope_shift;
        a0 = a0.scalar_mul(&PadicScalar::p_power(p, e, prec + e));
    }
    let g0 = vec![SeriesMatrix::zero(d, d, p, vars, prec); vars.total()];
    let base = SigmaNablaModule::new(params, f, a0, g0)?;

    let mut e = SeriesMatrix::zero(d, d, p, vars, prec);
    for i in 0..d {
        for j in 0..d {
            *e.at_mut(i, j) = if spec.constant_coefficients {
                Series::constant(p, vars, prec, unit(&mut rng))
            } else {
                random_entry(p, vars, prec, spec.degree, spec.terms_per_entry, 1, &mut rng)
            };
        }
    }
    let omega_e = e.scalar_mul(&omega);
    let b = SeriesMatrix::identity(d, p, vars, prec).add(&omega_e)?;
    // geometric inverse Σ(−ωE)^k, exact once ω^k vanishes at precision
    let mut b_inv = SeriesMatrix::identity(d, p, vars, prec);
    let neg = omega_e.neg();
    let mut pow = neg.clone();
    let mut guard = 0;
    while !pow.is_zero() {
        b_inv = b_inv.add(&pow)?;
        // working precision only: products would otherwise carry their
        // extra certified digits forever and never prune the tail
        pow = pow.mul(&neg)?.truncate_prec(prec);
        guard += 1;
        if guard > 2 * prec {
            return Err(KernelError::GenerationFailed {
                context: "unipotent inverse failed to terminate".into(),
            });
        }
    }
    if !b.mul(&b_inv)?.sub(&SeriesMatrix::identity(d, p, vars, prec))?.is_zero() {
        return Err(KernelError::GenerationFailed {
            context: "conjugator inverse is not exact at precision".into(),
        });
    }

    let module = base.change_basis_with_inverse(&b, &b_inv)?;
    if !module.check_integrability()?.ok {
        return Err(KernelError::GenerationFailed {
            context: "conjugated connection lost integrability".into(),
        });
    }
    if !module.check_compatibility()?.ok {
        return Err(KernelError::GenerationFailed {
            context: "conjugated pair lost Frobenius compatibility".into(),
        });
    }
    if spec.slope_shift == 0 {
        SplitInput::new(module.clone())?;
    }
    let points = sample_points(p, vars, 256, seed);
    let scan = newton_constancy_scan(&module.a, f, &points)?;
    if !scan.constant || scan.base.slopes != spec.prescribed_slopes() {
        return Err(KernelError::GenerationFailed {
            context: format!(
                "fiber polygons {:?} differ from the prescribed slopes",
                scan.base.slopes
            ),
        });
    }
    // conjugation must not disturb the grading: ov·(d−1) on the diagonal
    if ov * (d as i64 - 1) + d as i64 * f as i64 * spec.slope_shift
        != module.a.det()?.gauss_valuation()?
    {
        return Err(KernelError::GenerationFailed {
            context: "determinant valuation departs from the slope grading".into(),
        });
    }
    Ok(module)
}

/// Integrable rank-one connection g_i = c_i + θ_i(z) whose gauge
/// potential z splits into a polynomial head and a deep tail shaped so
/// every dT_i/T_i-coefficient passes the (r, c) log-decay witness with
/// one full depth unit to spare.
pub fn rank_one_connection_instance(
    params: GlobalParams,
    vars: VarSpec,
    r: Rat,
    c: i64,
    seed: u64,
) -> Result<RankOneConnection> {
    let (p, prec) = (params.p, params.prec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = BTreeSet::new();
    let mut entries = Vec::new();
    // regular head: nonnegative exponents at arbitrary levels
    for _ in 0..6 {
        for _ in 0..64 {
            let e: Exponent = (0..vars.total()).map(|_| rng.gen_range(0..=3)).collect();
            if used.insert(e.clone()) {
                let v = rng.gen_range(0..prec);
                entries.push((e, random_unit(&mut rng, p) * int_pow(p, v)));
                break;
            }
        }
    }
    // deep tail: at level j poles stay one unit shy of the permitted
    // depth, leaving room for the dT/T-form's extra shift
    for j in 1..prec {
        let w = decay_depth_bound(p, r, c, j) - 1;
        if w < 1 {
            continue;
        }
        for _ in 0..2 {
            for _ in 0..64 {
                let mut e: Exponent = (0..vars.total())
                    .map(|i| {
                        if vars.is_torus(i) {
                            rng.gen_range(-w..=w)
                        } else {
                            rng.gen_range(0..=2)
                        }
                    })
                    .collect();
                if e[..vars.torus].iter().all(|&d| d >= 0) {
                    e[rng.gen_range(0..vars.torus)] = -rng.gen_range(1..=w);
                }
                if used.insert(e.clone()) {
                    entries.push((e, random_unit(&mut rng, p) * int_pow(p, j)));
                    break;
                }
            }
        }
    }
    let z = Series::from_int_terms(p, vars, prec, &entries);
    let mut g = Vec::with_capacity(vars.total());
    for i in 0..vars.total() {
        let ti = z.theta(i);
        g.push(if vars.is_torus(i) {
            let ci = PadicScalar::from_int(p, rng.gen_range(1..(p * p) as i128), prec);
            Series::constant(p, vars, prec, ci).add(&ti)?
        } else {
            ti
        });
    }
    RankOneConnection::new(params, g)
}

/// Compatible regular-singular rank-one module over one torus variable:
/// Frobenius a = T^k·(1 + p·w) with w supported in positive degrees, and
/// the unique integral solution g = −Σ_j q^j·(θa/a)^{σ^j} of the
/// compatibility equation, so the exponent is exactly k/(q−1).
pub fn regular_singular_instance(
    params: GlobalParams,
    lead_degree: i64,
    corrupt: bool,
    seed: u64,
) -> Result<SigmaNablaModule> {
    let (p, prec, f) = (params.p, params.prec, params.f);
    let vars = VarSpec::new(1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = vec![(vec![0], 1i128)];
    let mut used: BTreeSet<i64> = BTreeSet::new();
    for _ in 0..3 {
        for _ in 0..16 {
            let d = rng.gen_range(1..=3i64);
            if used.insert(d) {
                let v = 1 + rng.gen_range(0..prec - 1);
                entries.push((vec![d], random_unit(&mut rng, p) * int_pow(p, v)));
                break;
            }
        }
    }
    let unit_part = Series::from_int_terms(p, vars, prec, &entries);
    let a = unit_part.shift_monomial(0, lead_degree)?;

    let x = a.theta(0).mul(&a.invert_unit(&a.window)?)?;
    let mut g = Series::zero(p, vars, prec);
    let mut j = 0u32;
    while (f as i64) * (j as i64) < prec {
        let term = x
            .frobenius(f * j)?
            .int_mul(int_pow(p, (f * j) as i64))
            .truncate_prec(prec);
        if term.is_zero() {
            break;
        }
        g = g.sub(&term)?;
        j += 1;
    }
    if corrupt {
        let delta = PadicScalar::p_power(p, -1, prec).mul_int(rng.gen_range(1..p as i128));
        g = g.add(&Series::constant(p, vars, prec, delta))?;
    }
    SigmaNablaModule::new(
        params,
        f,
        SeriesMatrix::from_rows(vec![vec![a]]),
        vec![SeriesMatrix::from_rows(vec![vec![g]])],
    )
}

/// Rank-2 companion Frobenius whose fiber polygon jumps at exactly one
/// degree-one point: trace T − a + p and determinant p^{2k} give slopes
/// (k, k) over the point lifting a and (0, 2k) everywhere else.
pub fn np_jumping_instance(
    params: GlobalParams,
    special_point: u64,
    det_halfslope: i64,
) -> Result<SigmaNablaModule> {
    let (p, prec, f) = (params.p, params.prec, params.f);
    if special_point == 0 || special_point >= p {
        return Err(KernelError::BadInput {
            context: "the jumping point must be a nonzero residue".into(),
        });
    }
    let vars = VarSpec::new(1, 0);
    let s = |entries: &[(Exponent, i128)]| Series::from_int_terms(p, vars, prec, entries);
    let det = int_pow(p, 2 * det_halfslope);
    let trace = s(&[(vec![1], 1), (vec![0], p as i128 - special_point as i128)]);
    let a = SeriesMatrix::from_rows(vec![
        vec![s(&[]), s(&[(vec![0], -det)])],
        vec![s(&[(vec![0], 1)]), trace],
    ]);
    let g = vec![SeriesMatrix::zero(2, 2, p, vars, prec)];
    SigmaNablaModule::new(params, f, a, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{newton_polygon_at_point, PointSpec};
    use crate::regularize::regularize_rank_one;
    use crate::witness::DecayWitness;

    #[test]
    fn depth_bound_matches_hand_values() {
        // r = 1/2: W² ≤ c²·5^j
        assert_eq!(decay_depth_bound(5, Rat::new(1, 2), 2, 0), 2);
        assert_eq!(decay_depth_bound(5, Rat::new(1, 2), 2, 4), 50);
        assert_eq!(decay_depth_bound(5, Rat::new(1, 2), 1, 9), 1397);
        // r = 2/3: W³ ≤ 5^{2j}
        let r = Rat::new(2, 3);
        assert_eq!(
            (0..5).map(|j| decay_depth_bound(5, r, 1, j)).collect::<Vec<_>>(),
            vec![1, 2, 8, 25, 73]
        );
    }

    #[test]
    fn decaying_series_passes_its_witness_and_transforms() {
        let vars = VarSpec::new(2, 0);
        let r = Rat::new(1, 2);
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = decaying_series(5, vars, 10, r, 2, 2, &mut rng);
            let w = DecayWitness::log_decay(r, Rat::from_integer(2), (0, 9)).unwrap();
            w.require(&x, "generated").unwrap();
        }
    }

    #[test]
    fn split_instance_has_prescribed_structure() {
        let params = GlobalParams::new(5, 10, 1, 2).unwrap();
        let spec = SplitInstanceSpec {
            params,
            rank: 2,
            vars: VarSpec::new(1, 0),
            degree: 2,
            terms_per_entry: 3,
            constant_coefficients: false,
            slope_shift: 0,
        };
        let m = split_instance(&spec, 7).unwrap();
        assert!(m.check_integrability().unwrap().ok);
        assert!(m.check_compatibility().unwrap().ok);
        let input = SplitInput::new(m.clone()).unwrap();
        assert_eq!(input.omega_vp(), 2);
        let np = newton_polygon_at_point(&m.a, 1, &PointSpec {
            torus: vec![2],
            affine: vec![],
        })
        .unwrap();
        assert_eq!(np.slopes, vec![Rat::from_integer(0), Rat::from_integer(2)]);
        assert_eq!(np.first_break(), Some(1));
        assert_eq!(np.gap(), Some(Rat::from_integer(2)));
    }

    #[test]
    fn shifted_split_instance_moves_every_slope() {
        let params = GlobalParams::new(5, 10, 1, 2).unwrap();
        let spec = SplitInstanceSpec {
            params,
            rank: 2,
            vars: VarSpec::new(1, 0),
            degree: 1,
            terms_per_entry: 2,
            constant_coefficients: false,
            slope_shift: 1,
        };
        let m = split_instance(&spec, 3).unwrap();
        let np = newton_polygon_at_point(&m.a, 1, &PointSpec {
            torus: vec![1],
            affine: vec![],
        })
        .unwrap();
        assert_eq!(np.slopes, vec![Rat::from_integer(1), Rat::from_integer(3)]);
        assert_eq!(np.gap(), Some(Rat::from_integer(2)));
    }

    #[test]
    fn connection_instance_regularizes_in_one_scale_step() {
        let params = GlobalParams::new(5, 12, 1, 2).unwrap();
        let vars = VarSpec::new(2, 0);
        let r = Rat::new(2, 3);
        let conn = rank_one_connection_instance(params, vars, r, 1, 11).unwrap();
        conn.require_integrable().unwrap();
        let w = DecayWitness::log_decay(r, Rat::from_integer(1), (0, 11)).unwrap();
        let reg = regularize_rank_one(&conn, &w).unwrap();
        assert_eq!(reg.tau, 1);
        assert!(reg.exactness_ok && reg.step_witness_ok && reg.gauge_ok);
        for (i, gi) in reg.connection_out.g.iter().enumerate() {
            assert!(
                !gi.terms().keys().any(|e| e[i] <= -1),
                "output keeps a pole in variable {i}"
            );
        }
    }

    #[test]
    fn regular_singular_exponent_is_the_lead_degree() {
        let params = GlobalParams::new(5, 10, 1, 1).unwrap();
        for k in [0i64, 2, 3] {
            let m = regular_singular_instance(params, k, false, 21 + k as u64).unwrap();
            assert!(m.check_compatibility().unwrap().ok);
            let ext = crate::regularize::exponents_and_extension(&m).unwrap();
            assert_eq!(ext.integer_exponents, vec![k]);
            assert!(ext.pole_free);
            assert!(ext.compatibility_ok);
            // (q−1)·c equals k exactly at precision
            let t = ext.exponents[0].mul_int(4);
            assert!(t.sub(&PadicScalar::from_int(5, k as i128, t.abs_prec())).is_zero());
        }
    }

    #[test]
    fn corrupted_regular_singular_raises_non_integral_exponent() {
        let params = GlobalParams::new(5, 10, 1, 1).unwrap();
        let m = regular_singular_instance(params, 2, true, 5).unwrap();
        match crate::regularize::exponents_and_extension(&m) {
            Err(KernelError::NonIntegralExponent { var: 0, valuation }) => {
                assert_eq!(valuation, -1)
            }
            other => panic!("expected a non-integral exponent, got {other:?}"),
        }
    }

    #[test]
    fn jumping_instance_jumps_exactly_at_its_point() {
        let params = GlobalParams::new(5, 10, 1, 2).unwrap();
        for a in 1..5u64 {
            let m = np_jumping_instance(params, a, 1).unwrap();
            for t in 1..5u64 {
                let np = newton_polygon_at_point(&m.a, 1, &PointSpec {
                    torus: vec![t],
                    affine: vec![],
                })
                .unwrap();
                if t == a {
                    assert_eq!(np.slopes, vec![Rat::from_integer(1); 2], "slopes at T = {t}");
                } else {
                    assert_eq!(
                        np.slopes,
                        vec![Rat::from_integer(0), Rat::from_integer(2)],
                        "slopes at T = {t}"
                    );
                }
            }
            let points = sample_points(5, VarSpec::new(1, 0), 256, 0);
            let scan = newton_constancy_scan(&m.a, 1, &points).unwrap();
            assert!(!scan.constant);
            assert_eq!(scan.counterexample.as_ref().unwrap().0.torus[0] == a, a != 1);
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let params = GlobalParams::new(5, 10, 1, 2).unwrap();
        let spec = SplitInstanceSpec {
            params,
            rank: 3,
            vars: VarSpec::new(1, 1),
            degree: 2,
            terms_per_entry: 2,
            constant_coefficients: false,
            slope_shift: 0,
        };
        let m1 = split_instance(&spec, 42).unwrap();
        let m2 = split_instance(&spec, 42).unwrap();
        let w1 = crate::io::to_json_string(&crate::io::ModuleRepr::from(&m1)).unwrap();
        let w2 = crate::io::to_json_string(&crate::io::ModuleRepr::from(&m2)).unwrap();
        assert_eq!(w1, w2);
        let m3 = split_instance(&spec, 43).unwrap();
        let w3 = crate::io::to_json_string(&crate::io::ModuleRepr::from(&m3)).unwrap();
        assert_ne!(w1, w3);
    }
}
