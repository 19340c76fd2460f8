//! Rank-one connection regularization and polydisk extension.
//!
//! A rank-one log-connection ∇e = Σ f_i dT_i ⊗ e is stored through its
//! dlog coefficients g_i = T_i·f_i. Deep torus poles (T_i-degrees ≤ −2
//! of f_i) are removed by passing to the p^τ-th tensor power and gauging
//! by exp(−p^τ·Σ_j h_j) with h_j a primitive of the deep-pole part; the
//! residues that remain are constants, and after a further (q−1)-st
//! tensor power a monomial twist clears them entirely, extending the
//! module to the polydisk.

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::scalar::{GlobalParams, PadicScalar};
use crate::series::{Series, VarSpec};
use crate::sigma_nabla::SigmaNablaModule;
use crate::witness::DecayWitness;

#[derive(Debug, Clone)]
pub struct RankOneConnection {
    pub params: GlobalParams,
    /// dlog coefficients g_i = T_i·f_i, one per variable.
    pub g: Vec<Series>,
}

/// Residue-constancy verdict plus the flatness and pole-propagation
/// side conditions it depends on.
#[derive(Debug, Clone)]
pub struct ResidueReport {
    pub integrable: bool,
    /// Res_i(f_i) constant parts, one per torus variable.
    pub residues: Vec<PadicScalar>,
    pub constant: bool,
    /// Torus variables whose residue retains T-dependence at precision.
    pub offending: Vec<usize>,
    /// "No deep pole in T_i of f_i" propagates to every other entry.
    pub propagation_ok: bool,
}

#[derive(Debug, Clone)]
pub struct RegularizationResult {
    pub tau: i64,
    /// Gauge primitives, one per torus variable.
    pub h: Vec<Series>,
    pub connection_out: RankOneConnection,
    /// Residues of the output connection.
    pub exponents: Vec<PadicScalar>,
    /// ∂_j h_j reproduced the deep-pole part it integrated, each step.
    pub exactness_ok: bool,
    /// Every series handed to a primitive obeyed the (r, p^τ·c) bound.
    pub step_witness_ok: bool,
    /// exp(−p^τ Σh) intertwines the scaled input with the output.
    pub gauge_ok: bool,
}

#[derive(Debug, Clone)]
pub struct ExtensionResult {
    /// Exponents c_i = n_i/(q−1), one per torus variable.
    pub exponents: Vec<PadicScalar>,
    pub integer_exponents: Vec<i64>,
    /// The (q−1)-st tensor power in the ΠT_i^{−n_i} basis.
    pub extended: SigmaNablaModule,
    /// Frobenius and connection entries certified free of poles.
    pub pole_free: bool,
    pub compatibility_ok: bool,
}

#[derive(Debug, Clone)]
pub struct OverconvergenceReport {
    pub tau: i64,
    pub regularization: RegularizationResult,
    /// Tensor order of the extension step (q − 1).
    pub tensor_order: i64,
    pub extension: ExtensionResult,
}

impl RankOneConnection {
    pub fn new(params: GlobalParams, g: Vec<Series>) -> Result<Self> {
        let Some(first) = g.first() else {
            return Err(KernelError::BadInput {
                context: "connection needs at least one variable".into(),
            });
        };
        let vars = first.vars;
        if g.len() != vars.total() {
            return Err(KernelError::BadInput {
                context: format!("{} dlog coefficients for {} variables", g.len(), vars.total()),
            });
        }
        for (i, gi) in g.iter().enumerate() {
            if gi.p != params.p {
                return Err(KernelError::ParamMismatch {
                    context: "series prime differs from params.p".into(),
                });
            }
            if !vars.is_torus(i) && gi.terms().keys().any(|e| e[i] == 0) {
                return Err(KernelError::BadInput {
                    context: format!("dlog coefficient {i} has a pole at the affine origin"),
                });
            }
        }
        Ok(RankOneConnection { params, g })
    }

    pub fn vars(&self) -> VarSpec {
        self.g[0].vars
    }

    /// The dT_i-coefficient f_i = g_i/T_i of a torus variable.
    pub fn f_form(&self, i: usize) -> Result<Series> {
        self.g[i].shift_monomial(i, -1)
    }

    /// Flatness defects θ_i(g_j) − θ_j(g_i); None means integrable.
    pub fn integrability_defect(&self) -> Result<Option<(usize, usize, Vec<i64>)>> {
        let n = self.g.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let defect = self.g[j].theta(i).sub(&self.g[i].theta(j))?;
                if let Some((e, _)) = defect.terms().iter().next() {
                    return Ok(Some((i, j, e.clone())));
                }
            }
        }
        Ok(None)
    }

    pub fn require_integrable(&self) -> Result<()> {
        match self.integrability_defect()? {
            None => Ok(()),
            Some((i, j, exponent)) => Err(KernelError::NotIntegrable { i, j, exponent }),
        }
    }

    /// Res_i(f_i) as a series in the other variables: the T_i^0-slice
    /// of g_i.
    fn residue_slice(&self, i: usize) -> Result<Series> {
        Ok(self.f_form(i)?.residue(i))
    }

    pub fn check_residue_constancy(&self) -> Result<ResidueReport> {
        let vars = self.vars();
        let integrable = self.integrability_defect()?.is_none();
        let mut residues = Vec::with_capacity(vars.torus);
        let mut offending = Vec::new();
        for i in 0..vars.torus {
            let slice = self.residue_slice(i)?;
            let (constant, rest_zero) = split_constant(&slice);
            residues.push(constant);
            if !rest_zero {
                offending.push(i);
            }
        }
        // deep-pole propagation: if f_i has no T_i-degree ≤ −2 part then
        // neither does any other coefficient
        let mut propagation_ok = true;
        for i in 0..vars.torus {
            let own_deep = self.g[i].terms().keys().any(|e| e[i] <= -1);
            if own_deep {
                continue;
            }
            for (j, gj) in self.g.iter().enumerate() {
                if j != i && gj.terms().keys().any(|e| e[i] <= -2) {
                    propagation_ok = false;
                }
            }
        }
        Ok(ResidueReport {
            integrable,
            constant: offending.is_empty(),
            residues,
            offending,
            propagation_ok,
        })
    }
}

/// The constant part of a series plus whether the rest vanishes at
/// precision.
fn split_constant(s: &Series) -> (PadicScalar, bool) {
    let zero_e = vec![0i64; s.vars.total()];
    let constant = s
        .terms()
        .get(&zero_e)
        .copied()
        .unwrap_or_else(|| PadicScalar::zero(s.p, s.prec));
    let rest_zero = s.terms().keys().all(|e| *e == zero_e);
    (constant, rest_zero)
}

/// exp(z) = Σ z^k/k! for v(z) ≥ 1 (p ≥ 3; v(z) ≥ 2 when p = 2).
pub fn exp_series(z: &Series) -> Result<Series> {
    let one = Series::constant(z.p, z.vars, z.prec, PadicScalar::one(z.p, z.prec));
    if z.is_zero() {
        return Ok(one);
    }
    let min_v = if z.p == 2 { 2 } else { 1 };
    if z.val_floor() < min_v {
        return Err(KernelError::BadInput {
            context: format!(
                "exp needs coefficient valuations ≥ {min_v}, found {}",
                z.val_floor()
            ),
        });
    }
    let mut acc = one.clone();
    let mut term = one;
    for k in 1..=(4 * z.prec.max(1)) {
        term = term.mul(z)?.div_int(k as i128)?;
        // a term entirely above the accumulator's precision ends the sum,
        // and so does every later one (valuations only climb)
        if term.is_zero() || term.val_floor() >= acc.prec {
            return Ok(acc);
        }
        acc = acc.add(&term)?;
    }
    Err(KernelError::PrecisionExhausted {
        context: "exponential series failed to terminate".into(),
    })
}

/// Scale the witness constant by p^τ (tensor powers multiply profiles).
fn scaled_witness(w: &DecayWitness, p: u64, tau: i64) -> Result<DecayWitness> {
    let mut scale = num_rational::Ratio::from_integer(1i64);
    for _ in 0..tau {
        scale *= p as i64;
    }
    let c = w.constant() * scale;
    match (w.rate(), &w.kind) {
        (None, _) => DecayWitness::overconvergent(c, w.j_range),
        (Some(r), crate::witness::DecayKind::Sharp { .. }) => DecayWitness::sharp(r, c, w.j_range),
        (Some(r), _) => DecayWitness::log_decay(r, c, w.j_range),
    }
}

pub fn regularize_rank_one(
    conn: &RankOneConnection,
    witness: &DecayWitness,
) -> Result<RegularizationResult> {
    let vars = conn.vars();
    let p = conn.params.p;
    if let Some(r) = witness.rate() {
        if r >= num_rational::Ratio::from_integer(1) {
            return Err(KernelError::DecayTooSlow {
                var: 0,
                level: 0,
                w: 0,
                bound: format!("regularization needs rate < 1, witness has r = {r}"),
            });
        }
    }
    conn.require_integrable()?;
    // input must decay as witnessed: check f-form per torus variable,
    // dlog form elsewhere (torus profiles agree between the two forms)
    for i in 0..vars.total() {
        let coeff = if vars.is_torus(i) {
            conn.f_form(i)?
        } else {
            conn.g[i].clone()
        };
        witness.require(&coeff, "regularization input")?;
    }

    let mut running: Vec<Series> = conn.g.clone();
    let mut h = Vec::with_capacity(vars.torus);
    let mut handed = Vec::with_capacity(vars.torus);
    let mut tau = 0i64;
    let min_v = if p == 2 { 2 } else { 1 };
    let mut exactness_ok = true;

    for j in 0..vars.torus {
        let fjj = running[j].shift_monomial(j, -1)?;
        let deep = fjj.truncate_below(j);
        handed.push(deep.clone());
        if deep.is_zero() {
            h.push(Series::zero(p, vars, deep.prec));
            continue;
        }
        let hj = deep.primitive(j)?;
        tau = tau.max(1).max(min_v - hj.val_floor());
        // the primitive must differentiate back to what it integrated
        if !hj.partial_derivative(j).sub(&deep)?.is_zero() {
            exactness_ok = false;
        }
        for (i, gi) in running.iter_mut().enumerate() {
            *gi = gi.sub(&hj.theta(i))?;
        }
        h.push(hj);
    }

    let scale = PadicScalar::p_power(p, tau, tau + running.iter().map(|s| s.prec).min().unwrap());
    let g_out: Vec<Series> = running.iter().map(|s| s.scalar_mul(&scale)).collect();
    let connection_out = RankOneConnection::new(conn.params, g_out)?;

    // every deep-pole part handed to a primitive obeys the scaled bound
    let scaled = scaled_witness(witness, p, tau)?;
    let step_witness_ok = handed
        .iter()
        .all(|s| (0..vars.torus).all(|i| scaled.check(s, i).passes));

    // composite gauge check: with E = exp(−p^τ Σ h_j),
    // g_out,i·E = θ_i(E) + p^τ·g_in,i·E for every variable
    let mut gauge_ok = true;
    let mut z = Series::zero(p, vars, conn.g[0].prec);
    for hj in &h {
        z = z.add(hj)?;
    }
    let e = exp_series(&z.scalar_mul(&scale).neg())?;
    for i in 0..vars.total() {
        let lhs = connection_out.g[i].mul(&e)?;
        let rhs = e.theta(i).add(&conn.g[i].scalar_mul(&scale).mul(&e)?)?;
        if !lhs.sub(&rhs)?.is_zero() {
            gauge_ok = false;
        }
    }

    let mut exponents = Vec::with_capacity(vars.torus);
    for i in 0..vars.torus {
        let (c, _) = split_constant(&connection_out.residue_slice(i)?);
        exponents.push(c);
    }

    Ok(RegularizationResult {
        tau,
        h,
        connection_out,
        exponents,
        exactness_ok,
        step_witness_ok,
        gauge_ok,
    })
}

/// Balanced integer representative of a p-adically integral scalar,
/// taken modulo as much of the known precision as fits an i64.
fn balanced_integer(c: &PadicScalar) -> i64 {
    if c.is_zero() {
        return 0;
    }
    debug_assert!(c.v >= 0);
    let bits = (128 - (c.p as u128).leading_zeros()) as i64;
    let e = c.abs_prec().min(62 / bits).max(1);
    let m = (c.p as u128).pow(e as u32);
    let shift = (c.p as u128).pow(c.v.min(e) as u32);
    let x = (c.u % m * (shift % m) % m) as i128;
    let m = m as i128;
    (if x > m / 2 { x - m } else { x }) as i64
}

pub fn exponents_and_extension(module: &SigmaNablaModule) -> Result<ExtensionResult> {
    if module.rank() != 1 {
        return Err(KernelError::BadInput {
            context: format!("extension works on rank one, got rank {}", module.rank()),
        });
    }
    let vars = module.vars();
    let p = module.params.p;
    let q = module.q();
    let q1 = (q - 1) as i64;

    let mut exponents = Vec::with_capacity(vars.torus);
    let mut integers = Vec::with_capacity(vars.torus);
    for i in 0..vars.torus {
        let gi = module.g[i].at(0, 0);
        // regular-singular gate: no deep dlog poles, constant residue
        if gi.terms().keys().any(|e| e[i] <= -1) {
            return Err(KernelError::NotRegularSingular { var: i });
        }
        let slice = gi.shift_monomial(i, -1)?.residue(i);
        let (c, rest_zero) = split_constant(&slice);
        if !rest_zero {
            return Err(KernelError::NotRegularSingular { var: i });
        }
        let t = c.mul_int(q1 as i128);
        if !t.is_zero() && t.v < 0 {
            return Err(KernelError::NonIntegralExponent {
                var: i,
                valuation: t.v,
            });
        }
        exponents.push(c);
        integers.push(balanced_integer(&t));
    }
    // affine dlog coefficients must already be divisible by their variable
    for i in vars.torus..vars.total() {
        if module.g[i].at(0, 0).terms().keys().any(|e| e[i] <= 0) {
            return Err(KernelError::NotRegularSingular { var: i });
        }
    }

    // ã = a^{q−1}·ΠT_i^{−(q−1)n_i}, g̃_i = (q−1)g_i − n_i
    let a = module.a.at(0, 0);
    let mut a_ext = series_pow(a, q1 as u32)?;
    for (i, &n) in integers.iter().enumerate() {
        a_ext = a_ext.shift_monomial(i, -q1 * n)?;
    }
    let mut g_ext = Vec::with_capacity(vars.total());
    for (i, gi) in module.g.iter().enumerate() {
        let mut s = gi.at(0, 0).int_mul(q1 as i128);
        if i < vars.torus && integers[i] != 0 {
            let c = PadicScalar::from_int(p, integers[i] as i128, s.prec);
            s = s.sub(&Series::constant(p, vars, s.prec, c))?;
        }
        g_ext.push(s);
    }

    // the dlog coefficient of a polydisk connection must be divisible by
    // its own variable, so no term may sit at T_i-degree zero
    let pole_free = is_pole_free(&a_ext)
        && g_ext.iter().enumerate().all(|(i, s)| {
            is_pole_free(s) && (i >= vars.torus || s.terms().keys().all(|e| e[i] != 0))
        });

    let extended = SigmaNablaModule::new(
        module.params,
        module.f,
        SeriesMatrix::from_rows(vec![vec![a_ext]]),
        g_ext
            .into_iter()
            .map(|s| SeriesMatrix::from_rows(vec![vec![s]]))
            .collect(),
    )?;
    let compatibility_ok = extended.check_compatibility()?.ok;

    Ok(ExtensionResult {
        exponents,
        integer_exponents: integers,
        extended,
        pole_free,
        compatibility_ok,
    })
}

/// All certified coefficients live at nonnegative exponents and nothing
/// uncertified can hide below: either the stored support is exact or the
/// tail is invisible at the working precision.
fn is_pole_free(s: &Series) -> bool {
    s.terms().keys().all(|e| e.iter().all(|&d| d >= 0)) && s.tail_eff() >= s.prec
}

fn series_pow(base: &Series, e: u32) -> Result<Series> {
    if e == 0 {
        return Ok(Series::constant(
            base.p,
            base.vars,
            base.prec,
            PadicScalar::one(base.p, base.prec),
        ));
    }
    let mut acc = base.clone();
    for _ in 1..e {
        acc = acc.mul(base)?;
    }
    Ok(acc)
}

/// Regularize, carry the Frobenius through the gauge, and extend: the
/// full computable witness that a tensor power of the module lives on
/// the polydisk.
pub fn overconvergence_witness(
    module: &SigmaNablaModule,
    witness: &DecayWitness,
) -> Result<OverconvergenceReport> {
    if module.rank() != 1 {
        return Err(KernelError::BadInput {
            context: format!("witness pipeline works on rank one, got {}", module.rank()),
        });
    }
    let conn = RankOneConnection::new(
        module.params,
        module.g.iter().map(|m| m.at(0, 0).clone()).collect(),
    )?;
    let reg = regularize_rank_one(&conn, witness)?;

    // Frobenius through the gauge: e' = exp(−p^τ Σh)·e^{⊗p^τ} gives
    // a' = a^{p^τ}·exp(−p^τ(Σh^σ − Σh))
    let p = module.params.p;
    let vars = module.vars();
    let k = p_int_pow(p, reg.tau);
    let a = module.a.at(0, 0);
    let a_pow = series_pow(a, k as u32)?;
    let mut z = Series::zero(p, vars, a.prec);
    for hj in &reg.h {
        z = z.add(&hj.frobenius(module.f)?.sub(hj)?)?;
    }
    let scale = PadicScalar::p_power(p, reg.tau, reg.tau + a.prec);
    let a_out = a_pow.mul(&exp_series(&z.scalar_mul(&scale).neg())?)?;

    let regularized = SigmaNablaModule::new(
        module.params,
        module.f,
        SeriesMatrix::from_rows(vec![vec![a_out]]),
        reg.connection_out
            .g
            .iter()
            .map(|s| SeriesMatrix::from_rows(vec![vec![s.clone()]]))
            .collect(),
    )?;
    let extension = exponents_and_extension(&regularized)?;
    let q1 = (module.q() - 1) as i64;

    Ok(OverconvergenceReport {
        tau: reg.tau,
        regularization: reg,
        tensor_order: q1,
        extension,
    })
}

fn p_int_pow(p: u64, e: i64) -> i128 {
    let mut acc = 1i128;
    for _ in 0..e {
        acc *= p as i128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Exponent;
    use crate::witness::Rat;
    use num_rational::Ratio;

    fn params() -> GlobalParams {
        GlobalParams::new(5, 10, 1, 1).unwrap()
    }

    fn s(vars: VarSpec, entries: &[(Vec<i64>, i128)]) -> Series {
        let e: Vec<(Exponent, i128)> = entries.to_vec();
        Series::from_int_terms(5, vars, 10, &e)
    }

    fn log_witness(rn: i64, rd: i64, c: i64) -> DecayWitness {
        DecayWitness::log_decay(Ratio::new(rn, rd), Ratio::from_integer(c), (0, 9)).unwrap()
    }

    #[test]
    fn single_pole_becomes_regular_in_one_step() {
        let vars = VarSpec::new(1, 0);
        // f = p·T⁻³ + 2·T⁻¹, i.e. g = p·T⁻² + 2
        let conn = RankOneConnection::new(
            params(),
            vec![s(vars, &[(vec![-2], 5), (vec![0], 2)])],
        )
        .unwrap();
        let reg = regularize_rank_one(&conn, &log_witness(1, 2, 2)).unwrap();
        assert_eq!(reg.tau, 1);
        // h₁ = ∫ p·T⁻³ dT = −(p/2)·T⁻²
        let expected_h = s(vars, &[(vec![-2], 5)])
            .scalar_mul(&PadicScalar::from_ratio(5, -1, 2, 9).unwrap());
        assert!(reg.h[0].sub(&expected_h).unwrap().is_zero());
        // output is p^τ·(residue part): g_out = 5·2 = 10, no poles left
        let out = &reg.connection_out.g[0];
        assert!(out.terms().keys().all(|e| e[0] >= 0));
        let (c, constant) = split_constant(out);
        assert!(constant);
        assert_eq!(c, PadicScalar::from_int(5, 10, c.abs_prec()));
        assert!(reg.exactness_ok);
        assert!(reg.step_witness_ok);
        assert!(reg.gauge_ok);
        assert_eq!(reg.exponents[0], PadicScalar::from_int(5, 10, reg.exponents[0].abs_prec()));
    }

    #[test]
    fn already_regular_input_is_returned_unscaled() {
        let vars = VarSpec::new(1, 0);
        let conn =
            RankOneConnection::new(params(), vec![s(vars, &[(vec![0], 3), (vec![1], 1)])]).unwrap();
        let reg = regularize_rank_one(&conn, &log_witness(1, 2, 1)).unwrap();
        assert_eq!(reg.tau, 0);
        assert!(reg.connection_out.g[0].sub(&conn.g[0]).unwrap().is_zero());
        assert!(reg.h.iter().all(|h| h.is_zero()));
        assert!(reg.gauge_ok);
    }

    #[test]
    fn cross_variable_pole_clears_in_both_variables() {
        let vars = VarSpec::new(2, 0);
        // exact differential: g_i = θ_i(z) for z = p·T₁⁻¹T₂⁻¹, plus a
        // residue 3·dT₁/T₁
        let z = s(vars, &[(vec![-1, -1], 5)]);
        let g1 = z.theta(0).add(&s(vars, &[(vec![0, 0], 3)])).unwrap();
        let g2 = z.theta(1);
        let conn = RankOneConnection::new(params(), vec![g1, g2]).unwrap();
        let report = conn.check_residue_constancy().unwrap();
        assert!(report.integrable);
        assert!(report.constant);
        assert!(report.propagation_ok);

        let reg = regularize_rank_one(&conn, &log_witness(1, 2, 2)).unwrap();
        assert_eq!(reg.tau, 1);
        for (i, out) in reg.connection_out.g.iter().enumerate() {
            for e in out.terms().keys() {
                assert!(e[i] >= 0, "variable {i} kept a pole: {e:?}");
                assert!(e[1 - i] >= 0, "cross pole survived in {i}: {e:?}");
            }
        }
        let (c0, _) = split_constant(&reg.connection_out.g[0]);
        assert_eq!(c0, PadicScalar::from_int(5, 15, c0.abs_prec()));
        assert!(reg.connection_out.g[1].is_zero());
        assert!(reg.exactness_ok && reg.step_witness_ok && reg.gauge_ok);
    }

    #[test]
    fn residue_with_t_dependence_is_flagged_together_with_flatness() {
        let vars = VarSpec::new(2, 0);
        // g₁ = T₂: residue Res₁(f₁) = T₂ is not constant, and the pair
        // (g₁, 0) is not flat either
        let conn = RankOneConnection::new(
            params(),
            vec![s(vars, &[(vec![0, 1], 1)]), Series::zero(5, vars, 10)],
        )
        .unwrap();
        let report = conn.check_residue_constancy().unwrap();
        assert!(!report.integrable);
        assert!(!report.constant);
        assert_eq!(report.offending, vec![0]);
        // the strict gate refuses to regularize it
        assert!(matches!(
            regularize_rank_one(&conn, &log_witness(1, 2, 1)),
            Err(KernelError::NotIntegrable { .. })
        ));
    }

    #[test]
    fn too_slow_decay_is_rejected_upfront_and_on_profiles() {
        let vars = VarSpec::new(1, 0);
        let conn =
            RankOneConnection::new(params(), vec![s(vars, &[(vec![-2], 5)])]).unwrap();
        // rate 1 is never enough
        let w = DecayWitness::log_decay(Ratio::from_integer(1), Ratio::from_integer(1), (0, 9))
            .unwrap();
        assert!(matches!(
            regularize_rank_one(&conn, &w),
            Err(KernelError::DecayTooSlow { .. })
        ));
        // profile w₁ = −9 breaks (r, c) = (1/2, 2): 9 > 2·√5
        let bad = RankOneConnection::new(params(), vec![s(vars, &[(vec![-8], 5)])]).unwrap();
        assert!(matches!(
            regularize_rank_one(&bad, &log_witness(1, 2, 2)),
            Err(KernelError::DecayTooSlow { .. })
        ));
    }

    #[test]
    fn monomial_frobenius_exponent_and_extension() {
        let vars = VarSpec::new(1, 0);
        // a = T², g = 1/2, q = 5: c = 1/2, n = 2, ã = T⁸·T⁻⁸ = 1
        let half = PadicScalar::from_ratio(5, 1, 2, 10).unwrap();
        let m = SigmaNablaModule::new(
            params(),
            1,
            SeriesMatrix::from_rows(vec![vec![s(vars, &[(vec![2], 1)])]]),
            vec![SeriesMatrix::from_rows(vec![vec![Series::constant(
                5, vars, 10, half,
            )]])],
        )
        .unwrap();
        assert!(m.check_compatibility().unwrap().ok);
        let ext = exponents_and_extension(&m).unwrap();
        assert_eq!(ext.integer_exponents, vec![2]);
        assert_eq!(ext.exponents[0], half);
        assert!(ext.pole_free);
        assert!(ext.compatibility_ok);
        let a = ext.extended.a.at(0, 0);
        let (c, constant) = split_constant(a);
        assert!(constant);
        assert_eq!(c, PadicScalar::one(5, c.abs_prec()));
        assert!(ext.extended.g[0].at(0, 0).is_zero());
    }

    #[test]
    fn unit_times_monomial_frobenius_extends_after_twist() {
        let vars = VarSpec::new(1, 0);
        let q = 5i128;
        // a = (1 + pT)·T³; the compatible g solves g = q·g^σ − θ(a)/a,
        // i.e. g = −Σ_k q^k·x^{σ^k} with x = θ(a)/a
        let u = s(vars, &[(vec![0], 1), (vec![1], 5)]);
        let a = u.shift_monomial(0, 3).unwrap();
        let x = a
            .theta(0)
            .mul(&a.invert_unit(&crate::series::Window::full(vars)).unwrap())
            .unwrap();
        let mut g = Series::zero(5, vars, 10);
        let mut qpow = 1i128;
        for k in 0..10u32 {
            g = g.sub(&x.frobenius(k).unwrap().int_mul(qpow)).unwrap();
            qpow *= q;
        }
        let m = SigmaNablaModule::new(
            params(),
            1,
            SeriesMatrix::from_rows(vec![vec![a]]),
            vec![SeriesMatrix::from_rows(vec![vec![g]])],
        )
        .unwrap();
        assert!(m.check_compatibility().unwrap().ok, "constructed module is compatible");
        let ext = exponents_and_extension(&m).unwrap();
        assert_eq!(ext.integer_exponents, vec![3]);
        // c = 3/(q−1) = 3/4
        let expect = PadicScalar::from_ratio(5, 3, 4, ext.exponents[0].abs_prec()).unwrap();
        assert_eq!(ext.exponents[0], expect);
        assert!(ext.pole_free);
        assert!(ext.compatibility_ok);
    }

    #[test]
    fn non_integral_exponent_is_raised() {
        let vars = VarSpec::new(1, 0);
        // g = 1/(2p) has (q−1)·c = 2/p of valuation −1
        let c = PadicScalar::from_ratio(5, 1, 2, 10).unwrap().div_int(5).unwrap();
        let m = SigmaNablaModule::new(
            params(),
            1,
            SeriesMatrix::from_rows(vec![vec![s(vars, &[(vec![0], 1)])]]),
            vec![SeriesMatrix::from_rows(vec![vec![Series::constant(
                5, vars, 9, c,
            )]])],
        )
        .unwrap();
        let err = exponents_and_extension(&m).unwrap_err();
        assert!(matches!(
            err,
            KernelError::NonIntegralExponent { var: 0, valuation: -1 }
        ));
    }

    #[test]
    fn deep_pole_input_is_not_regular_singular() {
        let vars = VarSpec::new(1, 0);
        let m = SigmaNablaModule::new(
            params(),
            1,
            SeriesMatrix::from_rows(vec![vec![s(vars, &[(vec![0], 1)])]]),
            vec![SeriesMatrix::from_rows(vec![vec![s(vars, &[(vec![-1], 5)])]])],
        )
        .unwrap();
        assert!(matches!(
            exponents_and_extension(&m).unwrap_err(),
            KernelError::NotRegularSingular { var: 0 }
        ));
    }

    /// Full composed run against a hand-built instance: a = T⁸·exp(w)
    /// with w = h^σ − h for the gauge primitive h = −(p/2)T⁻², so the
    /// regularized Frobenius collapses to exactly T⁴⁰.
    #[test]
    fn composed_witness_pipeline_oracle() {
        let vars = VarSpec::new(1, 0);
        let p = 5u64;
        // g = p·T⁻² + 2
        let g = s(vars, &[(vec![-2], 5), (vec![0], 2)]);
        // w = −(p/2)T⁻¹⁰ + (p/2)T⁻²
        let half_p = PadicScalar::from_ratio(p, 5, 2, 11).unwrap();
        let w = s(vars, &[(vec![-10], -1)])
            .add(&s(vars, &[(vec![-2], 1)]))
            .unwrap()
            .scalar_mul(&half_p);
        let a = exp_series(&w).unwrap().shift_monomial(0, 8).unwrap();
        let m = SigmaNablaModule::new(
            params(),
            1,
            SeriesMatrix::from_rows(vec![vec![a]]),
            vec![SeriesMatrix::from_rows(vec![vec![g]])],
        )
        .unwrap();
        assert!(m.check_compatibility().unwrap().ok, "hand-built module is compatible");

        let report = overconvergence_witness(&m, &log_witness(1, 2, 2)).unwrap();
        assert_eq!(report.tau, 1);
        assert_eq!(report.tensor_order, 4);
        assert_eq!(report.extension.integer_exponents, vec![40]);
        assert!(report.extension.pole_free);
        assert!(report.extension.compatibility_ok);
        // ã = (a')⁴·T⁻¹⁶⁰ where a' = a⁵·exp(−5(h^σ−h)) = T⁴⁰ exactly
        let a_ext = report.extension.extended.a.at(0, 0);
        let (c, constant) = split_constant(a_ext);
        assert!(constant, "extended Frobenius is the constant 1: {a_ext}");
        assert_eq!(c, PadicScalar::one(p, c.abs_prec()));
        assert!(report.regularization.gauge_ok);
        assert!(report.regularization.step_witness_ok);
    }

    #[test]
    fn exp_series_matches_scalar_exponential() {
        let vars = VarSpec::new(1, 0);
        // exp(p) as a constant series vs. the scalar sum Σ p^k/k! mod 5^8
        let z = Series::constant(5, vars, 10, PadicScalar::from_int(5, 5, 10));
        let e = exp_series(&z).unwrap();
        let (c, constant) = split_constant(&e);
        assert!(constant);
        // independent route: sum 1 + 5 + 25/2 + 125/6 + … in bare scalars
        let mut acc = PadicScalar::one(5, 10);
        let mut term = PadicScalar::one(5, 10);
        for k in 1..20 {
            term = term.mul(&PadicScalar::from_int(5, 5, 10)).div_int(k).unwrap();
            if term.is_zero() {
                break;
            }
            acc = acc.add(&term);
        }
        let d = c.sub(&acc);
        assert!(d.is_zero() && d.v >= 8, "kernel vs scalar sum differ: {d:?}");
        // and the functional equation exp(z)·exp(−z) = 1
        let back = e.mul(&exp_series(&z.neg()).unwrap()).unwrap();
        let (b, bc) = split_constant(&back);
        assert!(bc);
        assert_eq!(b, PadicScalar::one(5, b.abs_prec()));
    }
}
