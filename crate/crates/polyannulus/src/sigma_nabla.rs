//! Twisted difference/differential modules over the polyannulus ring.
//!
//! A module of rank d is stored as a Frobenius matrix A (φ acts on
//! coordinate columns by x ↦ A·σᶠ(x)) together with log-connection
//! matrices G_i, one per variable, for ∇ = Σ G_i ⊗ dT_i/T_i. Base change
//! by B sends A to B·A·(B^{σᶠ})⁻¹ and G_i to B·G_i·B⁻¹ − θ_i(B)·B⁻¹; the
//! sign on the θ term is forced by preservation of the compatibility
//! identity θ_i(A) + G_i·A = q·A·G_i^{σᶠ} under the stated A-rule.

use num_rational::Ratio;

use crate::error::{KernelError, Result};
use crate::matrix::SeriesMatrix;
use crate::scalar::{GlobalParams, PadicScalar};
use crate::series::{Series, VarSpec, Window, WIN_INF};
use crate::witness::Rat;

#[derive(Debug, Clone)]
pub struct SigmaNablaModule {
    pub params: GlobalParams,
    /// Frobenius power: this module's twist is σ^f with q = p^f.
    pub f: u32,
    pub a: SeriesMatrix,
    /// One log-connection matrix per variable (torus first, then affine).
    pub g: Vec<SeriesMatrix>,
}

/// Outcome of a matrix-identity check: `ok` plus the worst (lowest)
/// valuation at which a violation is visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefectReport {
    pub ok: bool,
    pub defect_valuation: Option<i64>,
}

impl DefectReport {
    fn from_defects<'a>(defects: impl Iterator<Item = &'a SeriesMatrix>) -> Self {
        let mut worst: Option<i64> = None;
        for m in defects {
            for s in m.entries() {
                for c in s.terms().values() {
                    if c.v < s.prec {
                        worst = Some(worst.map_or(c.v, |w: i64| w.min(c.v)));
                    }
                }
            }
        }
        DefectReport {
            ok: worst.is_none(),
            defect_valuation: worst,
        }
    }
}

impl SigmaNablaModule {
    pub fn new(
        params: GlobalParams,
        f: u32,
        a: SeriesMatrix,
        g: Vec<SeriesMatrix>,
    ) -> Result<Self> {
        let d = a.rows;
        if a.cols != d {
            return Err(KernelError::BadInput {
                context: "Frobenius matrix must be square".into(),
            });
        }
        let vars = a.vars();
        if g.len() != vars.total() {
            return Err(KernelError::BadInput {
                context: format!(
                    "expected {} connection matrices, found {}",
                    vars.total(),
                    g.len()
                ),
            });
        }
        if a.p() != params.p {
            return Err(KernelError::ParamMismatch {
                context: "series prime differs from params.p".into(),
            });
        }
        for (i, gi) in g.iter().enumerate() {
            if gi.rows != d || gi.cols != d {
                return Err(KernelError::BadInput {
                    context: format!("connection matrix {i} is not {d}x{d}"),
                });
            }
            if !vars.is_torus(i) {
                // affine log-connection entries must vanish at T_i = 0
                for s in gi.entries() {
                    if s.terms().keys().any(|e| e[i] == 0) {
                        return Err(KernelError::BadInput {
                            context: format!(
                                "connection matrix {i} has a dT_i/T_i pole at an affine variable"
                            ),
                        });
                    }
                }
            }
        }
        Ok(SigmaNablaModule { params, f, a, g })
    }

    pub fn rank(&self) -> usize {
        self.a.rows
    }

    pub fn vars(&self) -> VarSpec {
        self.a.vars()
    }

    pub fn q(&self) -> i128 {
        (self.params.p as i128).pow(self.f)
    }

    /// det(A) must be a unit of 𝒜 (p-power × monomial × principal unit).
    pub fn check_unit_determinant(&self) -> Result<i64> {
        let det = self.a.det()?;
        if det.is_zero() {
            return Err(KernelError::ZeroDeterminantAtPrecision);
        }
        let (gv, _, _) = det.unit_lead()?;
        Ok(gv)
    }

    /// Curvature θ_i(G_j) − θ_j(G_i) + [G_i, G_j] must vanish.
    pub fn check_integrability(&self) -> Result<DefectReport> {
        let n = self.g.len();
        let mut defects = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let curv = self.g[j]
                    .theta(i)
                    .sub(&self.g[i].theta(j))?
                    .add(&self.g[i].mul(&self.g[j])?)?
                    .sub(&self.g[j].mul(&self.g[i])?)?;
                defects.push(curv);
            }
        }
        Ok(DefectReport::from_defects(defects.iter()))
    }

    /// θ_i(A) + G_i·A − q·A·G_i^{σᶠ} must vanish for every variable.
    pub fn check_compatibility(&self) -> Result<DefectReport> {
        let mut defects = Vec::new();
        for (i, gi) in self.g.iter().enumerate() {
            let lhs = self.a.theta(i).add(&gi.mul(&self.a)?)?;
            let rhs = self.a.mul(&gi.frobenius(self.f)?)?.int_mul(self.q());
            defects.push(lhs.sub(&rhs)?);
        }
        Ok(DefectReport::from_defects(defects.iter()))
    }

    /// Base change by B with a caller-supplied exact inverse:
    /// A ↦ B·A·(B^{σᶠ})⁻¹, G_i ↦ B·G_i·B⁻¹ − θ_i(B)·B⁻¹.
    pub fn change_basis_with_inverse(
        &self,
        b: &SeriesMatrix,
        b_inv: &SeriesMatrix,
    ) -> Result<Self> {
        let a = b.mul(&self.a)?.mul(&b_inv.frobenius(self.f)?)?;
        let g = self
            .g
            .iter()
            .enumerate()
            .map(|(i, gi)| {
                b.mul(gi)?
                    .mul(b_inv)?
                    .sub(&b.theta(i).mul(b_inv)?)
            })
            .collect::<Result<Vec<_>>>()?;
        SigmaNablaModule::new(self.params, self.f, a, g)
    }

    /// Base change computing B⁻¹ through the adjugate, certified on
    /// `target_window`.
    pub fn change_basis(&self, b: &SeriesMatrix, target_window: &Window) -> Result<Self> {
        let b_inv = b.inverse(target_window)?;
        self.change_basis_with_inverse(b, &b_inv)
    }

    /// k-th tensor power of a rank-one module: A ↦ A^k, G_i ↦ k·G_i.
    pub fn rank_one_tensor_power(&self, k: u32) -> Result<Self> {
        if self.rank() != 1 {
            return Err(KernelError::BadInput {
                context: format!("tensor power needs rank 1, have rank {}", self.rank()),
            });
        }
        if k == 0 {
            return Err(KernelError::BadInput {
                context: "tensor power must be positive".into(),
            });
        }
        let base = self.a.at(0, 0);
        let mut a = base.clone();
        for _ in 1..k {
            a = a.mul(base)?;
        }
        let g = self.g.iter().map(|gi| gi.int_mul(k as i128)).collect();
        SigmaNablaModule::new(
            self.params,
            self.f,
            SeriesMatrix::from_rows(vec![vec![a]]),
            g,
        )
    }

    /// Rank-one determinant module: A ↦ det A, G_i ↦ trace G_i.
    pub fn determinant(&self) -> Result<Self> {
        let a = self.a.det()?;
        let p = self.a.p();
        let vars = self.vars();
        let g = self
            .g
            .iter()
            .map(|gi| {
                let mut tr = Series::zero(p, vars, WIN_INF);
                for i in 0..gi.rows {
                    tr = tr.add(gi.at(i, i))?;
                }
                Ok(SeriesMatrix::from_rows(vec![vec![tr]]))
            })
            .collect::<Result<Vec<_>>>()?;
        SigmaNablaModule::new(self.params, self.f, SeriesMatrix::from_rows(vec![vec![a]]), g)
    }

    /// Slope shift by −t: A ↦ p^{−f·t}·A. Requires f·t ∈ Z.
    pub fn twist(&self, t: Rat) -> Result<Self> {
        let ft = t * Ratio::from_integer(self.f as i64);
        if !ft.is_integer() {
            return Err(KernelError::NonIntegralTwist {
                num: *t.numer(),
                den: *t.denom(),
                f: self.f,
            });
        }
        let scale = PadicScalar::p_power(self.params.p, -ft.to_integer(), self.a.min_prec());
        SigmaNablaModule::new(self.params, self.f, self.a.scalar_mul(&scale), self.g.clone())
    }

    /// Determinant followed by a twist (slope-gap reduction helper).
    pub fn det_and_twist(&self, t: Rat) -> Result<Self> {
        self.determinant()?.twist(t)
    }

    /// ε_{f'}: iterate Frobenius to a multiple of f:
    /// A ↦ A^{σ^{f'−f}}·…·A^{σᶠ}·A with the same connection.
    pub fn iterate_frobenius(&self, f_new: u32) -> Result<Self> {
        if f_new == 0 || f_new % self.f != 0 {
            return Err(KernelError::IncompatiblePower {
                from: self.f,
                to: f_new,
            });
        }
        let steps = f_new / self.f;
        let mut acc = self.a.clone();
        for j in 1..steps {
            acc = self.a.frobenius(self.f * j)?.mul(&acc)?;
        }
        let mut params = self.params;
        params.omega_vp = self.params.omega_vp * steps as i64;
        SigmaNablaModule::new(params, f_new, acc, self.g.clone())
    }

    /// k-th exterior power on the lexicographic basis of k-subsets;
    /// entries of Λ^k A are the k×k minors det A[S,T].
    pub fn exterior_power(&self, k: usize) -> Result<Self> {
        let d = self.rank();
        if k == 0 || k > d || d > 6 {
            return Err(KernelError::BadInput {
                context: format!("exterior power {k} of rank {d} is out of range"),
            });
        }
        let subsets = k_subsets(d, k);
        let p = self.a.p();
        let vars = self.vars();
        let prec = self.a.min_prec();
        let dim = subsets.len();
        let mut a = SeriesMatrix::zero(dim, dim, p, vars, prec);
        for (si, s) in subsets.iter().enumerate() {
            for (ti, t) in subsets.iter().enumerate() {
                *a.at_mut(si, ti) = self.a.sub_det(s, t)?;
            }
        }
        let mut g_out = Vec::with_capacity(self.g.len());
        for gi in &self.g {
            let mut m = SeriesMatrix::zero(dim, dim, p, vars, prec);
            for (si, s) in subsets.iter().enumerate() {
                for (ti, t) in subsets.iter().enumerate() {
                    *m.at_mut(si, ti) = exterior_connection_entry(gi, s, t)?;
                }
            }
            g_out.push(m);
        }
        SigmaNablaModule::new(self.params, self.f, a, g_out)
    }
}

fn k_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// Derivation action on k-vectors: diagonal entries sum the diagonal of G
/// over the subset; off-diagonal entries require |S∆T| = 2 and pick up the
/// reordering sign.
fn exterior_connection_entry(g: &SeriesMatrix, s: &[usize], t: &[usize]) -> Result<Series> {
    let p = g.p();
    let vars = g.vars();
    if s == t {
        let mut acc = Series::zero(p, vars, WIN_INF);
        for &i in s {
            acc = acc.add(g.at(i, i))?;
        }
        return Ok(acc);
    }
    let extra_s: Vec<usize> = s.iter().copied().filter(|i| !t.contains(i)).collect();
    let extra_t: Vec<usize> = t.iter().copied().filter(|i| !s.contains(i)).collect();
    if extra_s.len() != 1 || extra_t.len() != 1 {
        return Ok(Series::zero(p, vars, g.min_prec()));
    }
    let (row, col) = (extra_s[0], extra_t[0]);
    let pos_s = s.iter().position(|&i| i == row).unwrap();
    let pos_t = t.iter().position(|&i| i == col).unwrap();
    let entry = g.at(row, col).clone();
    Ok(if (pos_s + pos_t) % 2 == 0 { entry } else { entry.neg() })
}
