//! Unit-root splitting of a Frobenius structure with one slope-zero line.
//!
//! Input: a module whose Frobenius matrix has the block shape
//! A = [[A₁₁, ωA₁₂], [ωA₂₁, ωA₂₂]] with A₁₁ a 1×1 unit and ω = p^(f·s)
//! marking the smallest nonzero slope s. One elementary conjugation per
//! step kills the lower-left column to one more power of ω:
//!
//!   Lₖ = [[1, 0], [Xₖ, 1]],  Xₖ = −A₁₁ₖ⁻¹ · (lower-left of Aₖ),
//!   Aₖ₊₁ = Lₖ·Aₖ·(Lₖ^{σᶠ})⁻¹,  Nₖ = Lₖ·Nₖ₋₁.
//!
//! Since the lower-left of Aₖ is divisible by ω^k, so is Xₖ, giving the
//! congruence ladder Nₖ ≡ Nₖ₋₁ mod ω^k and, after K steps, a lower-left
//! block divisible by ω^(K+1). The limit N conjugates the module into
//! block-triangular form whose (1,1) corner, together with the (1,1)
//! corners of the transformed connection, is the unit-root part. All
//! produced entries carry sharp (r, c) decay certificates with r = 1/s.

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::scalar::{safe_rel_prec, PadicScalar};
use crate::series::{Series, VarSpec, WIN_INF};
use crate::sigma_nabla::SigmaNablaModule;
use crate::witness::{minimal_log_constant, DecayWitness, Rat};

/// A module validated to have the split block shape: every entry integral,
/// every entry outside (0,0) divisible by ω, and the (0,0) entry a unit.
#[derive(Debug, Clone)]
pub struct SplitInput {
    pub module: SigmaNablaModule,
}

impl SplitInput {
    pub fn new(module: SigmaNablaModule) -> Result<Self> {
        let d = module.rank();
        if d < 2 {
            return Err(KernelError::BadInput {
                context: format!("splitting needs rank >= 2, have rank {d}"),
            });
        }
        let params = module.params;
        if params.omega_vp % params.f as i64 != 0 {
            return Err(KernelError::BadInput {
                context: format!(
                    "v_p(ω) = {} is not a multiple of f = {}: slope is not integral",
                    params.omega_vp, params.f
                ),
            });
        }
        let (gv, _, _) = module.a.at(0, 0).unit_lead()?;
        if gv != 0 {
            return Err(KernelError::NotAUnit {
                context: format!("corner entry has leading valuation {gv}, need 0"),
            });
        }
        for r in 0..d {
            for c in 0..d {
                let entry = module.a.at(r, c);
                if entry.val_floor() < 0 {
                    return Err(KernelError::BadInput {
                        context: format!(
                            "entry ({r},{c}) has valuation {} < 0: not integral",
                            entry.val_floor()
                        ),
                    });
                }
                if (r, c) != (0, 0) && !entry.is_zero_mod(params.omega_vp) {
                    return Err(KernelError::BadInput {
                        context: format!(
                            "entry ({r},{c}) is not divisible by ω = p^{}",
                            params.omega_vp
                        ),
                    });
                }
            }
        }
        Ok(SplitInput { module })
    }

    /// v_p(ω) = f·s.
    pub fn omega_vp(&self) -> i64 {
        self.module.params.omega_vp
    }

    /// Decay rate r = 1/s = f/v_p(ω) certified for the produced entries.
    pub fn decay_rate(&self) -> Rat {
        Rat::new(self.module.f as i64, self.omega_vp())
    }

    /// Largest iteration count whose ω-power is visible at precision N.
    pub fn max_iterations(&self) -> u32 {
        (self.module.params.prec / self.omega_vp()) as u32
    }
}

/// An exact diagonal matrix diag(T_var^first, T_var^rest, …, T_var^rest).
fn monomial_diag(
    p: u64,
    vars: VarSpec,
    d: usize,
    var: usize,
    first: i64,
    rest: i64,
) -> SeriesMatrix {
    let mut m = SeriesMatrix::zero(d, d, p, vars, WIN_INF);
    for idx in 0..d {
        let k = if idx == 0 { first } else { rest };
        let mut e = vec![0i64; vars.total()];
        e[var] = k;
        let c = PadicScalar::one(p, safe_rel_prec(p));
        *m.at_mut(idx, idx) = Series::monomial(p, vars, WIN_INF, e, c);
    }
    m
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(a >= 0 && b >= 1);
    (a + b - 1) / b
}

/// Most negative T_var-degree visible at p-adic level `level` across a
/// rectangular block; None when that slice of the block is empty.
fn block_w0(
    a: &SeriesMatrix,
    var: usize,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    level: i64,
) -> Option<i64> {
    let mut w: Option<i64> = None;
    for r in rows {
        for c in cols.clone() {
            if let Some(x) = a.at(r, c).partial_valuation(var, level) {
                w = Some(w.map_or(x, |cur: i64| cur.min(x)));
            }
        }
    }
    w
}

/// Conjugate by torus-monomial diagonal matrices until, in every torus
/// variable, the unit corner carries no positive level-0 degree (so its
/// inverse has none negative) and the ω-divided (1,2)/(2,2) blocks have
/// no negative leading degree. The lower-left column is left free: the
/// splitting iteration absorbs its poles into the decay certificates.
pub fn normalize_entry_growth(input: &SplitInput) -> Result<SigmaNablaModule> {
    let m = &input.module;
    let d = m.rank();
    let vars = m.vars();
    let p = m.params.p;
    let q = i64::try_from(m.q()).expect("q below the arithmetic cap");
    let ov = input.omega_vp();
    let mut cur = m.clone();
    for i in 0..vars.torus {
        if let Some(w) = cur.a.at(0, 0).partial_valuation(i, 0) {
            if w > 0 {
                // diag(T_i^k, 1, …): corner gains T_i^{k(1−q)}
                let k = ceil_div(w, q - 1);
                let b = monomial_diag(p, vars, d, i, k, 0);
                let b_inv = monomial_diag(p, vars, d, i, -k, 0);
                cur = cur.change_basis_with_inverse(&b, &b_inv)?;
            }
        }
    }
    for i in 0..vars.torus {
        let w12 = block_w0(&cur.a, i, 0..1, 1..d, ov);
        let w22 = block_w0(&cur.a, i, 1..d, 1..d, ov);
        let mut k = 0i64;
        if let Some(w) = w12 {
            if w < 0 {
                k = k.max(ceil_div(-w, q));
            }
        }
        if let Some(w) = w22 {
            if w < 0 {
                k = k.max(ceil_div(-w, q - 1));
            }
        }
        if k > 0 {
            // diag(1, T_i^{−k}·1): row one gains T_i^{kq}, the lower-right
            // block T_i^{k(q−1)}, and the corner is untouched
            let b = monomial_diag(p, vars, d, i, 0, -k);
            let b_inv = monomial_diag(p, vars, d, i, 0, k);
            cur = cur.change_basis_with_inverse(&b, &b_inv)?;
        }
    }
    Ok(cur)
}

/// Outcome of the splitting iteration, with every recorded check.
#[derive(Debug, Clone)]
pub struct SplitResult {
    /// The input after entry-growth normalization; every invariant below
    /// speaks about this module's basis.
    pub normalized: SigmaNablaModule,
    /// Accumulated unipotent basis change N = L_K·…·L_1.
    pub n: SeriesMatrix,
    /// Exact inverse of N.
    pub n_inv: SeriesMatrix,
    /// N·A·(N^{σᶠ})⁻¹, upper-triangular modulo ω^(K+1).
    pub a_prime: SeriesMatrix,
    /// Iterations performed.
    pub k: u32,
    /// N₀ = 1, N₁, …, N_K.
    pub iterates: Vec<SeriesMatrix>,
    /// Per step k: Nₖ ≡ Nₖ₋₁ mod ω^k.
    pub iterate_congruences: Vec<bool>,
    /// The independently recomputed product N·A·(N^{σᶠ})⁻¹ matches the
    /// iteratively built A′ at full precision.
    pub multiply_back_ok: bool,
    /// Largest j with the recomputed lower-left column ≡ 0 mod ω^j,
    /// capped at the precision horizon floor(N / v_p(ω)).
    pub omega_order_achieved: i64,
    /// Sharp decay certificate passed by every lower-left entry of N.
    pub witness: DecayWitness,
    /// Smallest integer constant for that certificate.
    pub n21_constant: i64,
}

impl SplitResult {
    /// The lower-left column of N (the only nontrivial entries).
    pub fn n21(&self) -> Vec<&Series> {
        (1..self.n.rows).map(|r| self.n.at(r, 0)).collect()
    }
}

/// Run the elementary-conjugation ladder for `k_target` steps.
pub fn unit_root_split(input: &SplitInput, k_target: u32) -> Result<SplitResult> {
    let params = input.module.params;
    let ov = input.omega_vp();
    if k_target == 0 {
        return Err(KernelError::BadInput {
            context: "iteration count K must be positive".into(),
        });
    }
    if k_target as i64 * ov > params.prec {
        return Err(KernelError::BadInput {
            context: format!(
                "K = {k_target} steps need {} digits to observe ω^K, but N = {}",
                k_target as i64 * ov,
                params.prec
            ),
        });
    }
    let normalized = normalize_entry_growth(input)?;
    let d = normalized.rank();
    let p = params.p;
    let vars = normalized.vars();
    let f = normalized.f;

    let mut a_cur = normalized.a.clone();
    let mut n_acc = SeriesMatrix::identity(d, p, vars, params.prec);
    let mut iterates = vec![n_acc.clone()];
    for _ in 1..=k_target {
        let a00 = a_cur.at(0, 0);
        let a00_inv = a00.invert_unit(&a00.window)?;
        let mut l = SeriesMatrix::identity(d, p, vars, params.prec);
        let mut l_sigma_inv = l.clone();
        for r in 1..d {
            let x = a_cur.at(r, 0).mul(&a00_inv)?.neg();
            *l_sigma_inv.at_mut(r, 0) = x.frobenius(f)?.neg();
            *l.at_mut(r, 0) = x;
        }
        a_cur = l.mul(&a_cur)?.mul(&l_sigma_inv)?;
        n_acc = l.mul(&n_acc)?;
        iterates.push(n_acc.clone());
    }

    let n_inv = n_acc.inverse_unipotent()?;
    // Recompute the conjugation in one stroke: same value, different
    // association order, so agreement cross-checks the ladder.
    let fresh = n_acc.mul(&normalized.a)?.mul(&n_inv.frobenius(f)?)?;
    let mut multiply_back_ok = fresh.sub(&a_cur)?.is_zero();

    let cap = params.prec / ov;
    let mut omega_order_achieved = cap;
    for r in 1..d {
        let entry = fresh.at(r, 0);
        let mut j = 0;
        while j < omega_order_achieved && entry.is_zero_mod((j + 1) * ov) {
            j += 1;
        }
        omega_order_achieved = omega_order_achieved.min(j);
    }
    multiply_back_ok &= omega_order_achieved >= (k_target as i64).min(cap);

    let iterate_congruences = (1..=k_target as usize)
        .map(|k| {
            Ok(iterates[k]
                .sub(&iterates[k - 1])?
                .is_zero_mod(k as i64 * ov))
        })
        .collect::<Result<Vec<bool>>>()?;

    let r = input.decay_rate();
    let j_range = (0, params.prec - 1);
    let n21: Vec<&Series> = (1..d).map(|row| n_acc.at(row, 0)).collect();
    let n21_constant = minimal_log_constant(&n21, r, j_range, true)?;
    let witness = DecayWitness::sharp(r, Rat::from_integer(n21_constant.max(1)), j_range)?;
    for (row, x) in n21.iter().enumerate() {
        for var in 0..vars.torus {
            let report = witness.check(x, var);
            if !report.passes {
                return Err(KernelError::WitnessFailure {
                    context: format!(
                        "entry ({}, 0) of N violates {} in variable {var}",
                        row + 1,
                        witness.describe()
                    ),
                });
            }
        }
    }

    Ok(SplitResult {
        normalized,
        n: n_acc,
        n_inv,
        a_prime: a_cur,
        k: k_target,
        iterates,
        iterate_congruences,
        multiply_back_ok,
        omega_order_achieved,
        witness,
        n21_constant,
    })
}

/// The rank-one unit-root module cut out by a finished split, plus the
/// certification order of the checks that justify it.
#[derive(Debug, Clone)]
pub struct UnitRootExtraction {
    /// (A′₁₁, R_i): the slope-zero line with its induced connection.
    pub module: SigmaNablaModule,
    /// K′: the transformed connection's lower-left column vanishes mod
    /// ω^K′ (capped at the precision horizon).
    pub u_order: i64,
    /// Frobenius/connection compatibility of the extracted line, verified
    /// modulo ω^K′.
    pub compatibility_ok: bool,
    /// Sharp decay certificate passed by every R_i.
    pub witness: DecayWitness,
    /// Smallest integer constant for that certificate.
    pub connection_constant: i64,
}

/// Transform the connection through the split basis change and read off
/// the unit-root line. The transformed connection splits as
/// [[R_i, S_i], [U_i, V_i]]; the identity U_i·A′₁₁ = q·A′₂₂·U_i^{σᶠ}
/// forces U_i = 0 in the limit, certified here modulo ω^K′.
pub fn extract_unit_root(split: &SplitResult) -> Result<UnitRootExtraction> {
    let params = split.normalized.params;
    let ov = params.omega_vp;
    let f = split.normalized.f;
    let d = split.normalized.rank();
    let transformed = split
        .normalized
        .change_basis_with_inverse(&split.n, &split.n_inv)?;

    let cap = params.prec / ov;
    let mut u_order = cap;
    for gi in &transformed.g {
        for r in 1..d {
            let u = gi.at(r, 0);
            let mut j = 0;
            while j < u_order && u.is_zero_mod((j + 1) * ov) {
                j += 1;
            }
            u_order = u_order.min(j);
        }
    }

    let a = split.a_prime.at(0, 0).clone();
    let rs: Vec<Series> = transformed.g.iter().map(|gi| gi.at(0, 0).clone()).collect();
    let q = i128::from(params.p).pow(f);
    for (i, ri) in rs.iter().enumerate() {
        let lhs = a.theta(i).add(&ri.mul(&a)?)?;
        let rhs = a.mul(&ri.frobenius(f)?)?.int_mul(q);
        let defect = lhs.sub(&rhs)?;
        if !defect.is_zero_mod(u_order * ov) {
            return Err(KernelError::CompatibilityDefect {
                var: i,
                defect_valuation: defect.val_floor(),
                required: u_order * ov,
            });
        }
    }

    let r = Rat::new(f as i64, ov);
    let j_range = (0, params.prec - 1);
    let refs: Vec<&Series> = rs.iter().collect();
    let connection_constant = minimal_log_constant(&refs, r, j_range, true)?;
    let witness = DecayWitness::sharp(
        r,
        Rat::from_integer(connection_constant.max(1)),
        j_range,
    )?;

    let module = SigmaNablaModule::new(
        params,
        f,
        SeriesMatrix::from_rows(vec![vec![a]]),
        rs.into_iter()
            .map(|x| SeriesMatrix::from_rows(vec![vec![x]]))
            .collect(),
    )?;
    Ok(UnitRootExtraction {
        module,
        u_order,
        compatibility_ok: true,
        witness,
        connection_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newton::{newton_polygon_at_point, PointSpec};
    use crate::scalar::GlobalParams;
    use crate::series::Exponent;

    fn params(omega_vp: i64) -> GlobalParams {
        GlobalParams::new(5, 10, 1, omega_vp).unwrap()
    }

    fn s(vars: VarSpec, entries: &[(Vec<i64>, i128)]) -> Series {
        let e: Vec<(Exponent, i128)> = entries.to_vec();
        Series::from_int_terms(5, vars, 10, &e)
    }

    fn module2(
        omega_vp: i64,
        vars: VarSpec,
        rows: Vec<Vec<Series>>,
        g: Vec<SeriesMatrix>,
    ) -> SigmaNablaModule {
        SigmaNablaModule::new(params(omega_vp), 1, SeriesMatrix::from_rows(rows), g).unwrap()
    }

    fn zero_g(d: usize, vars: VarSpec) -> Vec<SeriesMatrix> {
        (0..vars.total())
            .map(|_| SeriesMatrix::zero(d, d, 5, vars, 10))
            .collect()
    }

    #[test]
    fn shape_validation_rejects_bad_corners_and_blocks() {
        let vars = VarSpec::new(1, 0);
        // corner divisible by p is not a unit
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![0], 5)])],
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![0], 5)])],
            ],
            zero_g(2, vars),
        );
        assert!(matches!(
            SplitInput::new(m),
            Err(KernelError::NotAUnit { .. })
        ));

        // off-corner entry not divisible by ω
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![0], 1)])],
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![0], 5)])],
            ],
            zero_g(2, vars),
        );
        assert!(matches!(
            SplitInput::new(m),
            Err(KernelError::BadInput { .. })
        ));

        // entries below valuation 0 are rejected as non-integral
        let fifth = PadicScalar::p_power(5, -1, 10);
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![0], 5)])],
                vec![
                    Series::constant(5, vars, 10, fifth),
                    s(vars, &[(vec![0], 5)]),
                ],
            ],
            zero_g(2, vars),
        );
        assert!(matches!(
            SplitInput::new(m),
            Err(KernelError::BadInput { .. })
        ));
    }

    #[test]
    fn already_triangular_input_needs_no_work() {
        let vars = VarSpec::new(1, 0);
        // ω = 25: A = [[1, 25T], [0, 25]]
        let m = module2(
            2,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![1], 25)])],
                vec![Series::zero(5, vars, 10), s(vars, &[(vec![0], 25)])],
            ],
            zero_g(2, vars),
        );
        let input = SplitInput::new(m).unwrap();
        assert_eq!(input.decay_rate(), Rat::new(1, 2));
        assert_eq!(input.max_iterations(), 5);

        let split = unit_root_split(&input, 5).unwrap();
        assert!(split.n.sub(&split.iterates[0]).unwrap().is_zero());
        assert!(split.multiply_back_ok);
        assert_eq!(split.omega_order_achieved, 5);
        assert!(split.iterate_congruences.iter().all(|&ok| ok));
        assert_eq!(split.n21_constant, 0);

        let ext = extract_unit_root(&split).unwrap();
        assert_eq!(ext.u_order, 5);
        assert!(ext.compatibility_ok);
        assert!(ext
            .module
            .a
            .at(0, 0)
            .sub(&s(vars, &[(vec![0], 1)]))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn constant_matrix_agrees_with_scalar_fixed_point() {
        let vars = VarSpec::new(1, 0);
        // ω = 5: A = [[1, 5], [5, 5]], iterated to K = 6
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![0], 5)])],
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![0], 5)])],
            ],
            zero_g(2, vars),
        );
        let input = SplitInput::new(m).unwrap();
        let split = unit_root_split(&input, 6).unwrap();
        assert!(split.multiply_back_ok);
        assert!(split.iterate_congruences.iter().all(|&ok| ok));
        assert!(split.omega_order_achieved >= 6);

        // Independent route: the lower-left zero condition for constant
        // entries reads x·a + c = (x·b + d)·x, solved by plain modular
        // fixed-point iteration from x = 0.
        let md: u128 = 5u128.pow(10);
        let (a, b, c, dd) = (1u128, 5u128, 5u128, 5u128);
        let mut x = 0u128;
        for _ in 0..64 {
            // x ← ((x·b + d)·x − c)·a⁻¹ mod 5^10, with a = 1
            let rhs = ((x * b + dd) % md * x + md - c) % md;
            x = rhs % md * a % md;
        }
        // the recorded N agrees with the limit modulo ω^K
        let got = split.n.at(1, 0).terms()[&vec![0]].residue(6).unwrap();
        assert_eq!(got, x % 5u128.pow(6));

        // the connection is zero, so the transformed one is exactly zero
        let ext = extract_unit_root(&split).unwrap();
        assert_eq!(ext.u_order, 10);
        assert_eq!(ext.connection_constant, 0);
        assert!(ext.module.g[0].at(0, 0).is_zero());
        // the unit-root corner stays congruent to the input corner mod ω
        assert!(split
            .a_prime
            .at(0, 0)
            .sub(&s(vars, &[(vec![0], 1)]))
            .unwrap()
            .is_zero_mod(1));
    }

    #[test]
    fn toral_matrix_multiplies_back_with_certificates() {
        let vars = VarSpec::new(1, 0);
        // ω = 5: A = [[1, 5T], [5T⁻¹, 5]], run to K = 4
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![1], 5)])],
                vec![s(vars, &[(vec![-1], 5)]), s(vars, &[(vec![0], 5)])],
            ],
            zero_g(2, vars),
        );
        let input = SplitInput::new(m).unwrap();
        assert_eq!(input.decay_rate(), Rat::new(1, 1));
        let split = unit_root_split(&input, 4).unwrap();
        assert!(split.multiply_back_ok);
        assert!(split.omega_order_achieved >= 4);
        assert!(split.iterate_congruences.iter().all(|&ok| ok));
        // a genuine basis change happened and its entries carry poles
        let n21 = split.n.at(1, 0);
        assert!(!n21.is_zero());
        assert!(n21.terms().keys().any(|e| e[0] < 0));
        assert!(split.n21_constant >= 1);
        // first step: X₁ = −5T⁻¹, so N₁ ≡ 1 + that in the corner
        assert!(split.iterates[1]
            .at(1, 0)
            .sub(&s(vars, &[(vec![-1], -5)]))
            .unwrap()
            .is_zero_mod(2));
        // the corner survives modulo ω
        assert!(split
            .a_prime
            .at(0, 0)
            .sub(&s(vars, &[(vec![0], 1)]))
            .unwrap()
            .is_zero_mod(1));
    }

    #[test]
    fn conjugated_block_diagonal_recovers_the_twist() {
        let vars = VarSpec::new(1, 0);
        // ω = 25. Seed: A₀ = diag(1, ω) with zero connection; conjugate by
        // B = [[1, 0], [ωT, 1]]. Then A = [[1, 0], [ω(T − ωT⁵), ω]] and
        // G = −θ(B)·B⁻¹ = [[0, 0], [−ωT, 0]]; the splitting must undo the
        // conjugation exactly: N₂₁ → −ωT.
        let omega = 25i128;
        let a = vec![
            vec![s(vars, &[(vec![0], 1)]), Series::zero(5, vars, 10)],
            vec![
                s(vars, &[(vec![1], omega), (vec![5], -omega * omega)]),
                s(vars, &[(vec![0], omega)]),
            ],
        ];
        let mut g0 = SeriesMatrix::zero(2, 2, 5, vars, 10);
        *g0.at_mut(1, 0) = s(vars, &[(vec![1], -omega)]);
        let m = module2(2, vars, a, vec![g0]);
        assert!(m.check_compatibility().unwrap().ok);

        let input = SplitInput::new(m).unwrap();
        let split = unit_root_split(&input, 5).unwrap();
        assert!(split.multiply_back_ok);
        assert_eq!(split.omega_order_achieved, 5);
        // N₂₁ = −ωT on the nose at working precision
        assert!(split
            .n
            .at(1, 0)
            .sub(&s(vars, &[(vec![1], -omega)]))
            .unwrap()
            .is_zero());
        // A′ returns to the diagonal seed
        assert!(split
            .a_prime
            .at(0, 0)
            .sub(&s(vars, &[(vec![0], 1)]))
            .unwrap()
            .is_zero());
        assert!(split
            .a_prime
            .at(1, 1)
            .sub(&s(vars, &[(vec![0], omega)]))
            .unwrap()
            .is_zero());

        let ext = extract_unit_root(&split).unwrap();
        assert_eq!(ext.u_order, 5);
        assert!(ext.module.g[0].at(0, 0).is_zero());
        assert_eq!(ext.connection_constant, 0);
        // the extracted line has slope zero at every rational point
        for t in 1..5 {
            let np = newton_polygon_at_point(
                &ext.module.a,
                1,
                &PointSpec {
                    torus: vec![t],
                    affine: vec![],
                },
            )
            .unwrap();
            assert_eq!(np.slopes, vec![Rat::new(0, 1)]);
        }
    }

    #[test]
    fn normalization_tames_positive_corner_degree() {
        let vars = VarSpec::new(1, 0);
        // corner T has level-0 degree +1; diag(T, 1) brings it to T⁻³
        let m = module2(
            1,
            vars,
            vec![
                vec![s(vars, &[(vec![1], 1)]), s(vars, &[(vec![0], 5)])],
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![0], 5)])],
            ],
            zero_g(2, vars),
        );
        let pt = PointSpec {
            torus: vec![2],
            affine: vec![],
        };
        let before = newton_polygon_at_point(&m.a, 1, &pt).unwrap();
        let input = SplitInput::new(m).unwrap();
        let norm = normalize_entry_growth(&input).unwrap();
        assert_eq!(norm.a.at(0, 0).partial_valuation(0, 0), Some(-3));
        assert!(block_w0(&norm.a, 0, 0..1, 1..2, 1).unwrap_or(0) >= 0);
        assert!(block_w0(&norm.a, 0, 1..2, 1..2, 1).unwrap_or(0) >= 0);
        // a point polygon is blind to the basis change
        let after = newton_polygon_at_point(&norm.a, 1, &pt).unwrap();
        assert_eq!(before.vertices, after.vertices);
    }

    #[test]
    fn normalization_lifts_negative_block_degrees() {
        let vars = VarSpec::new(1, 0);
        // A₂₂/ω = T⁻¹ needs the second conjugation; the corner must not move
        let corner = s(vars, &[(vec![0], 1), (vec![1], 5)]);
        let m = module2(
            1,
            vars,
            vec![
                vec![corner.clone(), s(vars, &[(vec![0], 5)])],
                vec![s(vars, &[(vec![0], 5)]), s(vars, &[(vec![-1], 5)])],
            ],
            zero_g(2, vars),
        );
        let input = SplitInput::new(m).unwrap();
        let norm = normalize_entry_growth(&input).unwrap();
        assert!(norm.a.at(0, 0).sub(&corner).unwrap().is_zero());
        assert!(block_w0(&norm.a, 0, 1..2, 1..2, 1).unwrap() >= 0);
        assert!(block_w0(&norm.a, 0, 0..1, 1..2, 1).unwrap_or(0) >= 0);
    }

    #[test]
    fn iteration_cap_is_enforced() {
        let vars = VarSpec::new(1, 0);
        let m = module2(
            2,
            vars,
            vec![
                vec![s(vars, &[(vec![0], 1)]), s(vars, &[(vec![0], 25)])],
                vec![s(vars, &[(vec![0], 25)]), s(vars, &[(vec![0], 25)])],
            ],
            zero_g(2, vars),
        );
        let input = SplitInput::new(m).unwrap();
        // 6·v_p(ω) = 12 > N = 10
        assert!(matches!(
            unit_root_split(&input, 6),
            Err(KernelError::BadInput { .. })
        ));
        assert!(unit_root_split(&input, 5).is_ok());
    }
}
