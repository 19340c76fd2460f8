//! Sparse Laurent series over a polyannulus with certified coefficient
//! windows.
//!
//! A series tracks, per variable, an interval of exponents ("window") on
//! which its stored coefficients agree with the represented element modulo
//! p^prec. The first `torus` variables range over units (negative exponents
//! allowed); the remaining `affine` variables are restricted to nonnegative
//! exponents. Outside its window a series asserts only that the true
//! coefficients have valuation >= `tail_val` (+inf for exactly supported
//! data such as Laurent polynomials); every operation propagates windows,
//! precision, and tail bounds conservatively.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{KernelError, Result};
use crate::scalar::{int_valuation, PadicScalar};

/// Sentinel for an unbounded window side / exact tail.
pub const WIN_INF: i64 = i64::MAX / 4;

fn sat_add(a: i64, b: i64) -> i64 {
    if a >= WIN_INF || b >= WIN_INF {
        if a <= -WIN_INF || b <= -WIN_INF {
            panic!("inf - inf in window arithmetic");
        }
        return WIN_INF;
    }
    if a <= -WIN_INF || b <= -WIN_INF {
        return -WIN_INF;
    }
    (a + b).clamp(-WIN_INF, WIN_INF)
}

fn sat_mul(a: i64, k: i64) -> i64 {
    debug_assert!(k > 0);
    if a >= WIN_INF {
        WIN_INF
    } else if a <= -WIN_INF {
        -WIN_INF
    } else {
        (a * k).clamp(-WIN_INF, WIN_INF)
    }
}

/// Number of torus and affine variables of the ambient ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarSpec {
    pub torus: usize,
    pub affine: usize,
}

impl VarSpec {
    pub fn new(torus: usize, affine: usize) -> Self {
        VarSpec { torus, affine }
    }

    pub fn total(&self) -> usize {
        self.torus + self.affine
    }

    pub fn is_torus(&self, i: usize) -> bool {
        i < self.torus
    }
}

/// Multidegree; ordered lexicographically (the BTreeMap key order).
pub type Exponent = Vec<i64>;

/// Per-variable guaranteed exponent intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    bounds: Vec<(i64, i64)>,
}

impl Window {
    pub fn full(vars: VarSpec) -> Self {
        let bounds = (0..vars.total())
            .map(|i| {
                if vars.is_torus(i) {
                    (-WIN_INF, WIN_INF)
                } else {
                    (0, WIN_INF)
                }
            })
            .collect();
        Window { bounds }
    }

    pub fn from_bounds(vars: VarSpec, bounds: Vec<(i64, i64)>) -> Result<Self> {
        if bounds.len() != vars.total() {
            return Err(KernelError::BadInput {
                context: format!(
                    "window has {} intervals for {} variables",
                    bounds.len(),
                    vars.total()
                ),
            });
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if vars.is_torus(i) {
                if lo > 0 || hi < 0 {
                    return Err(KernelError::BadInput {
                        context: format!("torus window {i} = [{lo}, {hi}] must straddle 0"),
                    });
                }
            } else if lo != 0 || hi < 0 {
                return Err(KernelError::BadInput {
                    context: format!("affine window {i} = [{lo}, {hi}] must start at 0"),
                });
            }
        }
        Ok(Window { bounds })
    }

    pub fn bounds(&self) -> &[(i64, i64)] {
        &self.bounds
    }

    pub fn lo(&self, i: usize) -> i64 {
        self.bounds[i].0
    }

    pub fn hi(&self, i: usize) -> i64 {
        self.bounds[i].1
    }

    pub fn set(&mut self, i: usize, lo: i64, hi: i64) {
        self.bounds[i] = (lo, hi);
    }

    pub fn is_full(&self, vars: VarSpec) -> bool {
        self.bounds.iter().enumerate().all(|(i, &(lo, hi))| {
            hi >= WIN_INF && (lo <= -WIN_INF || (!vars.is_torus(i) && lo <= 0))
        })
    }

    pub fn contains(&self, e: &Exponent) -> bool {
        e.iter()
            .zip(&self.bounds)
            .all(|(&d, &(lo, hi))| d >= lo && d <= hi)
    }

    pub fn intersect(&self, other: &Window) -> Window {
        let bounds = self
            .bounds
            .iter()
            .zip(&other.bounds)
            .map(|(&(a, b), &(c, d))| (a.max(c), b.min(d)))
            .collect();
        Window { bounds }
    }

    /// True if some variable's interval is empty.
    pub fn empty_var(&self) -> Option<usize> {
        self.bounds.iter().position(|&(lo, hi)| lo > hi)
    }

    pub fn covers(&self, other: &Window) -> bool {
        self.bounds
            .iter()
            .zip(&other.bounds)
            .all(|(&(a, b), &(c, d))| a <= c && b >= d)
    }

    fn scale(&self, k: i64) -> Window {
        Window {
            bounds: self
                .bounds
                .iter()
                .map(|&(lo, hi)| (sat_mul(lo, k), sat_mul(hi, k)))
                .collect(),
        }
    }
}

/// A window-correct truncated series over the polyannulus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    pub p: u64,
    pub vars: VarSpec,
    /// Coefficients are certified modulo p^prec inside the window.
    pub prec: i64,
    pub window: Window,
    /// Valuation lower bound for content outside the window
    /// (WIN_INF: the stored support is exact).
    pub tail_val: i64,
    terms: BTreeMap<Exponent, PadicScalar>,
}

impl Series {
    pub fn zero(p: u64, vars: VarSpec, prec: i64) -> Self {
        Series {
            p,
            vars,
            prec,
            window: Window::full(vars),
            tail_val: WIN_INF,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(p: u64, vars: VarSpec, prec: i64, c: PadicScalar) -> Self {
        Self::monomial(p, vars, prec, vec![0; vars.total()], c)
    }

    pub fn monomial(p: u64, vars: VarSpec, prec: i64, e: Exponent, c: PadicScalar) -> Self {
        assert_eq!(e.len(), vars.total());
        assert_eq!(c.p, p);
        let mut terms = BTreeMap::new();
        if !c.is_zero() && c.v < prec {
            terms.insert(e, c);
        }
        Series {
            p,
            vars,
            prec,
            window: Window::full(vars),
            tail_val: WIN_INF,
            terms,
        }
    }

    /// Exact Laurent polynomial from integer coefficients.
    pub fn from_int_terms(p: u64, vars: VarSpec, prec: i64, entries: &[(Exponent, i128)]) -> Self {
        let mut s = Self::zero(p, vars, prec);
        for (e, n) in entries {
            let t = Self::monomial(p, vars, prec, e.clone(), PadicScalar::from_int(p, *n, prec));
            s = s.add(&t).expect("same ring");
        }
        s
    }

    /// Assemble a series from raw parts (wire deserialization).
    pub(crate) fn from_parts(
        p: u64,
        vars: VarSpec,
        prec: i64,
        window: Window,
        tail_val: i64,
        terms: BTreeMap<Exponent, PadicScalar>,
    ) -> Result<Self> {
        Self::rebuild(p, vars, prec, window, tail_val, terms)
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, PadicScalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All stored coefficients vanish modulo p^k (requires the series
    /// precision to reach k so absence of a term is meaningful).
    pub fn is_zero_mod(&self, k: i64) -> bool {
        self.prec >= k && self.terms.values().all(|c| c.v >= k)
    }

    /// Minimum stored valuation, or the precision when nothing is stored.
    pub fn val_floor(&self) -> i64 {
        self.terms.values().map(|c| c.v).min().unwrap_or(self.prec)
    }

    /// Gauss valuation; an error when the series is zero at precision.
    pub fn gauss_valuation(&self) -> Result<i64> {
        if self.is_zero() {
            return Err(KernelError::ZeroAtPrecision {
                abs_prec: self.prec,
            });
        }
        Ok(self.val_floor())
    }

    /// Stored support bounds in variable i.
    pub fn support(&self, i: usize) -> Option<(i64, i64)> {
        let mut r: Option<(i64, i64)> = None;
        for e in self.terms.keys() {
            let d = e[i];
            r = Some(match r {
                None => (d, d),
                Some((lo, hi)) => (lo.min(d), hi.max(d)),
            });
        }
        r
    }

    /// Valuation floor for everything outside the window; infinite when
    /// the window is full (all content is stored).
    pub fn tail_eff(&self) -> i64 {
        if self.window.is_full(self.vars) {
            WIN_INF
        } else {
            self.tail_val
        }
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.p != other.p || self.vars != other.vars {
            return Err(KernelError::ParamMismatch {
                context: format!(
                    "series over (p={}, n={}, m={}) vs (p={}, n={}, m={})",
                    self.p, self.vars.torus, self.vars.affine, other.p, other.vars.torus, other.vars.affine
                ),
            });
        }
        Ok(())
    }

    fn rebuild(
        p: u64,
        vars: VarSpec,
        prec: i64,
        window: Window,
        mut tail_val: i64,
        terms: BTreeMap<Exponent, PadicScalar>,
    ) -> Result<Self> {
        if let Some(i) = window.empty_var() {
            return Err(KernelError::WindowExhausted {
                var: i,
                context: "guaranteed window became empty".into(),
            });
        }
        let mut kept = BTreeMap::new();
        for (e, c) in terms {
            if c.is_zero() || c.v >= prec {
                continue;
            }
            if window.contains(&e) {
                kept.insert(e, c);
            } else {
                tail_val = tail_val.min(c.v);
            }
        }
        Ok(Series {
            p,
            vars,
            prec,
            window,
            tail_val,
            terms: kept,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let prec = self.prec.min(other.prec);
        let window = self.window.intersect(&other.window);
        let tail = self.tail_eff().min(other.tail_eff());
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms
                .entry(e.clone())
                .or_insert_with(|| PadicScalar::zero(self.p, c.abs_prec()));
            *entry = entry.add(c);
        }
        Self::rebuild(self.p, self.vars, prec, window, tail, terms)
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect();
        Series {
            terms,
            window: self.window.clone(),
            ..*self
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scalar_mul(&self, c: &PadicScalar) -> Self {
        assert_eq!(c.p, self.p);
        if c.is_zero() {
            return Series::zero(self.p, self.vars, sat_add(c.v, self.val_floor().min(self.prec)));
        }
        let prec = sat_add(self.prec, c.v).min(sat_add(c.abs_prec(), self.val_floor()));
        let tail = sat_add(self.tail_eff(), c.v);
        let terms = self
            .terms
            .iter()
            .map(|(e, x)| (e.clone(), x.mul(c)))
            .collect();
        Self::rebuild(self.p, self.vars, prec, self.window.clone(), tail, terms)
            .expect("window unchanged")
    }

    /// Multiply by the integer n (exact).
    pub fn int_mul(&self, n: i128) -> Self {
        if n == 0 {
            return Series::zero(self.p, self.vars, self.prec);
        }
        // Coefficient digits are capped at safe_rel_prec; requesting more
        // (an exact series has prec = WIN_INF) would overflow p_pow.
        let digits = self.prec.min(crate::scalar::safe_rel_prec(self.p));
        let c = PadicScalar::from_int(self.p, n, int_valuation(self.p, n) + digits);
        self.scalar_mul(&c)
    }

    /// Divide exactly by the integer n; the certified precision falls by
    /// v_p(n) with the coefficient valuations.
    pub fn div_int(&self, n: i128) -> Result<Self> {
        if n == 0 {
            return Err(KernelError::ZeroInput {
                context: "series division by zero",
            });
        }
        let vp = int_valuation(self.p, n);
        let prec = sat_add(self.prec, -vp);
        if prec <= 0 {
            return Err(KernelError::PrecisionExhausted {
                context: format!("division by p^{vp}·unit consumes the last digits"),
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| Ok((e.clone(), c.div_int(n)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Self::rebuild(
            self.p,
            self.vars,
            prec,
            self.window.clone(),
            sat_add(self.tail_eff(), -vp),
            terms,
        )
    }

    /// Multiply by the exact monomial T_i^k (shifts degrees and windows).
    pub fn shift_monomial(&self, i: usize, k: i64) -> Result<Self> {
        let mut e = vec![0i64; self.vars.total()];
        e[i] = k;
        let r = sat_add(self.prec, -self.val_floor().min(0))
            .clamp(1, crate::scalar::safe_rel_prec(self.p));
        let m = Series::monomial(self.p, self.vars, WIN_INF, e, PadicScalar::one(self.p, r));
        self.mul(&m)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let vx = self.val_floor().min(self.prec);
        let vy = other.val_floor().min(other.prec);
        // Saturating: precision past WIN_INF means "exact" and must compare
        // equal to, not above, an exact tail.
        let prec = sat_add(self.prec, vy).min(sat_add(other.prec, vx));
        let tx = self.tail_eff();
        let ty = other.tail_eff();

        // Cross terms of the two unknown tails reach every degree.
        if sat_add(tx, ty) < prec {
            return Err(KernelError::WindowExhausted {
                var: 0,
                context: "product of two series with uncertain tails certifies nothing".into(),
            });
        }

        let mut window = Window::full(self.vars);
        for i in 0..self.vars.total() {
            let mut lo = if self.vars.is_torus(i) { -WIN_INF } else { 0 };
            let mut hi = WIN_INF;
            // stored(self) x tail(other)
            if sat_add(vx, ty) < prec {
                if let Some((smin, smax)) = self.support(i) {
                    lo = lo.max(sat_add(other.window.lo(i), smax));
                    hi = hi.min(sat_add(other.window.hi(i), smin));
                }
            }
            // stored(other) x tail(self)
            if sat_add(vy, tx) < prec {
                if let Some((smin, smax)) = other.support(i) {
                    lo = lo.max(sat_add(self.window.lo(i), smax));
                    hi = hi.min(sat_add(self.window.hi(i), smin));
                }
            }
            if !self.vars.is_torus(i) {
                lo = lo.max(0);
            }
            window.set(i, lo, hi);
        }

        let tail = sat_add(tx, ty).min(sat_add(vx, ty)).min(sat_add(vy, tx));
        let mut terms: BTreeMap<Exponent, PadicScalar> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                if c1.v + c2.v >= prec {
                    continue;
                }
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                if !window.contains(&e) {
                    continue;
                }
                let prod = c1.mul(c2);
                let entry = terms
                    .entry(e)
                    .or_insert_with(|| PadicScalar::zero(self.p, prod.abs_prec()));
                *entry = entry.add(&prod);
            }
        }
        Self::rebuild(self.p, self.vars, prec, window, tail, terms)
    }

    /// Keep only T_i-degrees < -1 (the deep pole part).
    pub fn truncate_below(&self, i: usize) -> Self {
        assert!(self.vars.is_torus(i), "pole truncation needs a torus variable");
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] <= -2)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        let mut window = self.window.clone();
        // degrees >= -1 of the result are exactly zero
        window.set(i, window.lo(i), WIN_INF);
        Series {
            terms,
            window,
            ..self.clone()
        }
    }

    /// Keep only T_i-degrees >= 0.
    pub fn truncate_at_least(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] >= 0)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        let mut window = self.window.clone();
        window.set(
            i,
            if self.vars.is_torus(i) { -WIN_INF } else { 0 },
            window.hi(i),
        );
        Series {
            terms,
            window,
            ..self.clone()
        }
    }

    /// Coefficient of T_i^{-1}, as an element of the subring without T_i
    /// (returned with exponent 0 in variable i).
    pub fn residue(&self, i: usize) -> Self {
        assert!(self.vars.is_torus(i));
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] == -1)
            .map(|(e, c)| {
                let mut e = e.clone();
                e[i] = 0;
                (e, *c)
            })
            .collect();
        let mut window = self.window.clone();
        window.set(i, -WIN_INF, WIN_INF);
        Series {
            terms,
            window,
            ..self.clone()
        }
    }

    /// The summand Res_i(x)·T_i^{-1} of the three-way splitting.
    pub fn residue_term(&self, i: usize) -> Self {
        let mut e = vec![0; self.vars.total()];
        e[i] = -1;
        let t = Series::monomial(
            self.p,
            self.vars,
            self.prec,
            e,
            PadicScalar::one(self.p, self.prec),
        );
        self.residue(i).mul(&t).expect("monomial shift")
    }

    /// w^(i)_j: the least T_i-degree whose coefficient has valuation <= j,
    /// scanning stored terms. `None` encodes +infinity.
    pub fn partial_valuation(&self, i: usize, j: i64) -> Option<i64> {
        self.terms
            .iter()
            .filter(|(_, c)| c.v <= j)
            .map(|(e, _)| e[i])
            .min()
    }

    /// T_i-adic primitive of a deep pole part: a_d T^d maps to
    /// a_d T^{d+1}/(d+1). Requires every stored T_i-degree <= -2.
    pub fn primitive(&self, i: usize) -> Result<Self> {
        assert!(self.vars.is_torus(i));
        if self.terms.keys().any(|e| e[i] > -2) {
            return Err(KernelError::BadInput {
                context: format!("primitive in variable {i} needs degrees < -1"),
            });
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let dmin = self.support(i).map(|(lo, _)| lo).unwrap();
        // Precision loss: v_p(d+1) over the certified output range.
        let floor = self.window.lo(i).max(dmin);
        let mut loss = 0;
        if self.tail_eff() < WIN_INF || !self.window.is_full(self.vars) {
            let bound = (floor + 1).unsigned_abs();
            let mut pe = self.p as u128;
            while pe <= bound as u128 {
                loss += 1;
                pe *= self.p as u128;
            }
        } else {
            // exact support: only stored degrees can lose digits
            for e in self.terms.keys() {
                loss = loss.max(int_valuation(self.p, (e[i] + 1) as i128));
            }
        }
        let prec = self.prec - loss;
        if prec <= 0 {
            return Err(KernelError::PrecisionExhausted {
                context: format!("primitive in variable {i} loses {loss} digits of {}", self.prec),
            });
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e[i];
            let nc = c.div_int((d + 1) as i128)?;
            if !nc.is_zero() && nc.r <= 0 {
                return Err(KernelError::PrecisionExhausted {
                    context: format!("coefficient at degree {d} lost all digits"),
                });
            }
            let mut ne = e.clone();
            ne[i] = d + 1;
            terms.insert(ne, nc);
        }
        let mut window = self.window.clone();
        let exact = self.tail_eff() >= WIN_INF && self.window.is_full(self.vars);
        if exact {
            window.set(i, -WIN_INF, WIN_INF);
        } else {
            window.set(i, floor + 1, WIN_INF);
        }
        Self::rebuild(self.p, self.vars, prec, window, self.tail_eff(), terms)
    }

    /// d/dT_i: a_d T^d maps to d·a_d T^{d-1}.
    pub fn partial_derivative(&self, i: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let d = e[i];
            if d == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] = d - 1;
            terms.insert(ne, c.mul_int(d as i128));
        }
        let mut window = self.window.clone();
        let (lo, hi) = (window.lo(i), window.hi(i));
        let nlo = if self.vars.is_torus(i) {
            sat_add(lo, -1)
        } else {
            sat_add(lo, -1).max(0)
        };
        window.set(i, nlo, sat_add(hi, -1).max(-1));
        Self::rebuild(self.p, self.vars, self.prec, window, self.tail_eff(), terms)
            .expect("derivative window never empties")
    }

    /// θ_i = T_i d/dT_i: multiplies each coefficient by its T_i-degree.
    pub fn theta(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[i] != 0)
            .map(|(e, c)| (e.clone(), c.mul_int(e[i] as i128)))
            .collect();
        Series {
            terms,
            window: self.window.clone(),
            ..self.clone()
        }
    }

    /// x^{σ^f}: scales every exponent by q = p^f (scalars are fixed).
    pub fn frobenius(&self, f: u32) -> Result<Self> {
        let mut q: i64 = 1;
        for _ in 0..f {
            q = q.checked_mul(self.p as i64).ok_or(KernelError::WindowExhausted {
                var: 0,
                context: "Frobenius exponent scale overflow".into(),
            })?;
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let ne: Exponent = e
                .iter()
                .map(|&d| {
                    d.checked_mul(q)
                        .filter(|x| x.abs() < WIN_INF)
                        .ok_or(KernelError::WindowExhausted {
                            var: 0,
                            context: "scaled exponent exceeds configured bounds".into(),
                        })
                })
                .collect::<Result<_>>()?;
            terms.insert(ne, *c);
        }
        Ok(Series {
            terms,
            window: self.window.scale(q),
            ..self.clone()
        })
    }

    /// Leading data of a unit of 𝒜: Gauss valuation, the exponent of the
    /// single dominant monomial, and its coefficient. A series is a unit
    /// exactly when its minimal-valuation slice is one monomial with no
    /// affine variables.
    pub fn unit_lead(&self) -> Result<(i64, Exponent, PadicScalar)> {
        let gv = self.gauss_valuation().map_err(|_| KernelError::NotAUnit {
            context: format!("zero at precision p^{}", self.prec),
        })?;
        let slice: Vec<&Exponent> = self
            .terms
            .iter()
            .filter(|(_, c)| c.v == gv)
            .map(|(e, _)| e)
            .collect();
        if slice.len() != 1 {
            return Err(KernelError::NotAUnit {
                context: format!("dominant slice has {} monomials", slice.len()),
            });
        }
        let e0 = slice[0].clone();
        if e0[self.vars.torus..].iter().any(|&d| d != 0) {
            return Err(KernelError::NotAUnit {
                context: "dominant monomial involves an affine variable".into(),
            });
        }
        let c0 = self.terms[&e0];
        Ok((gv, e0, c0))
    }

    /// Inverse of a unit of 𝒜 (p-power × monomial × principal unit),
    /// certified on `target_window`.
    pub fn invert_unit(&self, target_window: &Window) -> Result<Self> {
        let (gv, e0, c0) = self.unit_lead()?;
        let lead_prec = (self.prec - 2 * gv).min(c0.abs_prec() - 2 * gv);
        if lead_prec <= 0 {
            return Err(KernelError::PrecisionExhausted {
                context: format!(
                    "inverting a unit of valuation {gv} leaves no digits at precision {}",
                    self.prec
                ),
            });
        }
        let c0_inv = c0.invert()?;
        let e0_neg: Exponent = e0.iter().map(|d| -d).collect();
        let lead_inv = Series::monomial(self.p, self.vars, lead_prec, e0_neg, c0_inv);
        // y = x · lead_inv - 1 has Gauss valuation >= 1
        let one = Series::constant(
            self.p,
            self.vars,
            self.prec,
            PadicScalar::one(self.p, self.prec),
        );
        let y = self.mul(&lead_inv)?.sub(&one)?;
        debug_assert!(y.is_zero() || y.val_floor() >= 1);
        // (1+y)^{-1} = sum (-y)^k, truncated once p^prec is reached
        let mut acc = one.clone();
        let mut power = one.clone();
        let mut k = 1;
        loop {
            if k * y.val_floor().max(1) >= y.prec || y.is_zero() {
                break;
            }
            power = power.mul(&y)?.neg();
            if power.is_zero() {
                break;
            }
            acc = acc.add(&power)?;
            k += 1;
        }
        let inv = acc.mul(&lead_inv)?;
        if !inv.window.covers(target_window) {
            let i = (0..self.vars.total())
                .find(|&i| {
                    inv.window.lo(i) > target_window.lo(i) || inv.window.hi(i) < target_window.hi(i)
                })
                .unwrap_or(0);
            return Err(KernelError::WindowExhausted {
                var: i,
                context: "inverse window does not cover the requested target".into(),
            });
        }
        Ok(inv)
    }

    /// Evaluate at a degree-one point given by Teichmüller coordinates:
    /// torus values in F_p^x, affine values in F_p. Requires a full window.
    pub fn evaluate(&self, torus: &[u64], affine: &[u64]) -> Result<PadicScalar> {
        if !self.window.is_full(self.vars) {
            return Err(KernelError::WindowExhausted {
                var: self.window.empty_var().unwrap_or(0),
                context: "evaluation needs every coefficient certified (full window)".into(),
            });
        }
        assert_eq!(torus.len(), self.vars.torus);
        assert_eq!(affine.len(), self.vars.affine);
        let mut coords = Vec::with_capacity(self.vars.total());
        for &t in torus {
            if t % self.p == 0 {
                return Err(KernelError::BadInput {
                    context: "torus coordinate reduces to 0".into(),
                });
            }
            coords.push(PadicScalar::teichmuller(self.p, t, self.prec));
        }
        for &t in affine {
            coords.push(PadicScalar::teichmuller(self.p, t, self.prec));
        }
        let mut acc = PadicScalar::zero(self.p, self.prec);
        for (e, c) in &self.terms {
            let mut term = *c;
            for (i, &d) in e.iter().enumerate() {
                if d == 0 {
                    continue;
                }
                if coords[i].is_zero() {
                    term = PadicScalar::zero(self.p, self.prec + term.v.max(0));
                    break;
                }
                term = term.mul(&coords[i].pow(d)?);
            }
            acc = acc.add(&term);
        }
        Ok(acc.truncate(self.prec))
    }

    /// Lower the certified precision.
    pub fn truncate_prec(&self, prec: i64) -> Self {
        let prec = prec.min(self.prec);
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.v < prec)
            .map(|(e, c)| (e.clone(), c.truncate(prec)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        Series {
            prec,
            terms,
            window: self.window.clone(),
            ..self.clone()
        }
    }

    /// Restrict the window (coefficients outside move into the tail bound).
    pub fn restrict_window(&self, window: Window) -> Result<Self> {
        Self::rebuild(
            self.p,
            self.vars,
            self.prec,
            self.window.intersect(&window),
            self.tail_eff(),
            self.terms.clone(),
        )
    }
}

impl fmt::Display for Series {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "O(p^{})", self.prec);
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: String = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &d)| d != 0)
                    .map(|(i, d)| format!("T{}^{}", i + 1, d))
                    .collect::<Vec<_>>()
                    .join("·");
                let coeff = if c.v == 0 {
                    format!("{}", c.u)
                } else {
                    format!("{}·p^{}", c.u, c.v)
                };
                if mono.is_empty() {
                    coeff
                } else {
                    format!("{coeff}·{mono}")
                }
            })
            .collect();
        write!(out, "{} + O(p^{})", parts.join(" + "), self.prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> (u64, VarSpec, i64) {
        (5, VarSpec::new(1, 0), 10)
    }

    fn s(entries: &[(i64, i128)]) -> Series {
        let (p, vars, prec) = ring();
        let e: Vec<(Exponent, i128)> = entries.iter().map(|&(d, c)| (vec![d], c)).collect();
        Series::from_int_terms(p, vars, prec, &e)
    }

    #[test]
    fn partial_valuation_profile() {
        // p^2 T^-7 + p T^-3 + T^-1
        let x = s(&[(-7, 25), (-3, 5), (-1, 1)]);
        assert_eq!(x.partial_valuation(0, 0), Some(-1));
        assert_eq!(x.partial_valuation(0, 1), Some(-3));
        assert_eq!(x.partial_valuation(0, 2), Some(-7));
        assert_eq!(Series::zero(5, VarSpec::new(1, 0), 10).partial_valuation(0, 3), None);
    }

    #[test]
    fn three_way_partition_is_exact() {
        let x = s(&[(-4, 7), (-2, 3), (-1, 11), (0, 2), (3, -6)]);
        let rebuilt = x
            .truncate_below(0)
            .add(&x.residue_term(0))
            .unwrap()
            .add(&x.truncate_at_least(0))
            .unwrap();
        let d = x.sub(&rebuilt).unwrap();
        assert!(d.is_zero(), "partition failed: {d}");
    }

    #[test]
    fn truncations_commute_across_variables() {
        let p = 5;
        let vars = VarSpec::new(2, 0);
        let x = Series::from_int_terms(
            p,
            vars,
            10,
            &[
                (vec![-3, -2], 2),
                (vec![-3, 1], 7),
                (vec![0, -5], 1),
                (vec![2, 2], 9),
                (vec![-1, -1], 4),
            ],
        );
        let a = x.truncate_below(0).truncate_at_least(1);
        let b = x.truncate_at_least(1).truncate_below(0);
        assert!(a.sub(&b).unwrap().is_zero());
    }

    #[test]
    fn primitive_then_derivative_is_identity() {
        // f = p T^-3: primitive is -p/2 T^-2
        let f = s(&[(-3, 5)]);
        let h = f.primitive(0).unwrap();
        let (e, c) = h.terms().iter().next().unwrap();
        assert_eq!(e[0], -2);
        // -5/2 = -5 * inv(2): 5·313 mod 5^10... value check via round trip
        assert_eq!(c.v, 1);
        let back = h.partial_derivative(0);
        assert!(back.sub(&f).unwrap().is_zero());

        // deeper pole with p | d+1 loses a digit but stays exact termwise
        let g = s(&[(-6, 1), (-26, 125)]);
        let h = g.primitive(0).unwrap();
        assert_eq!(h.prec, 10 - 2); // d = -26: v_p(25) = 2
        let back = h.partial_derivative(0);
        assert!(back.sub(&g).unwrap().is_zero());
    }

    #[test]
    fn leibniz_rule_exact() {
        let x = s(&[(-2, 3), (0, 1), (1, 4)]);
        let y = s(&[(-1, 2), (2, 5)]);
        let lhs = x.mul(&y).unwrap().partial_derivative(0);
        let rhs = x
            .partial_derivative(0)
            .mul(&y)
            .unwrap()
            .add(&x.mul(&y.partial_derivative(0)).unwrap())
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn theta_is_degree_scaling() {
        let x = s(&[(-2, 3), (0, 7), (4, 1)]);
        let t = x.theta(0);
        assert_eq!(t.terms()[&vec![-2]].u, {
            // -2·3 = -6 mod 5^10
            let m = 9_765_625u128;
            m - 6
        });
        assert!(t.terms().get(&vec![0]).is_none());
    }

    #[test]
    fn frobenius_scales_exponents() {
        let x = s(&[(-2, 3), (1, 4)]);
        let y = x.frobenius(1).unwrap();
        assert!(y.terms().contains_key(&vec![-10]));
        assert!(y.terms().contains_key(&vec![5]));
        // sigma is a ring map: (xy)^σ = x^σ y^σ
        let z = s(&[(0, 1), (3, 2)]);
        let lhs = x.mul(&z).unwrap().frobenius(1).unwrap();
        let rhs = y.mul(&z.frobenius(1).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn invert_unit_multiplies_back_to_one() {
        let (p, vars, prec) = ring();
        // 1 - p T
        let x = s(&[(0, 1), (1, -5)]);
        let target = Window::from_bounds(vars, vec![(-8, 8)]).unwrap();
        let inv = x.invert_unit(&target).unwrap();
        let one = Series::constant(p, vars, prec, PadicScalar::one(p, prec));
        let back = x.mul(&inv).unwrap();
        assert!(back.sub(&one).unwrap().is_zero_mod(prec));

        // unit with a monomial lead: 3 T^-2 (1 + p T)
        let u = s(&[(-2, 3), (-1, 15)]);
        let inv = u.invert_unit(&target).unwrap();
        let back = u.mul(&inv).unwrap();
        assert!(back.sub(&one).unwrap().is_zero_mod(prec));

        // p-scaled unit: p^2·(1 + p T) inverts with valuation -2
        let w = s(&[(0, 25), (1, 125)]);
        let inv = w.invert_unit(&target).unwrap();
        assert_eq!(inv.val_floor(), -2);
        let back = w.mul(&inv).unwrap();
        assert!(back.sub(&one).unwrap().is_zero_mod(prec - 2));

        // 1 - T reduces to a binomial: not a unit
        let bad = s(&[(0, 1), (1, -1)]);
        assert!(matches!(
            bad.invert_unit(&target),
            Err(KernelError::NotAUnit { .. })
        ));
    }

    #[test]
    fn window_shrinks_by_opposing_support() {
        let (p, vars, prec) = ring();
        let mut x = s(&[(-1, 2), (0, 1), (1, 3)]);
        x.window = Window::from_bounds(vars, vec![(-10, 10)]).unwrap();
        x.tail_val = 0;
        // exact factor supported on [0, 2]
        let y = s(&[(0, 1), (2, 4)]);
        let z = x.mul(&y).unwrap();
        assert_eq!(z.window.lo(0), -8);
        assert_eq!(z.window.hi(0), 10);

        // two uncertain tails certify nothing
        let mut w = y.clone();
        w.window = Window::from_bounds(vars, vec![(-3, 3)]).unwrap();
        w.tail_val = 0;
        assert!(matches!(
            x.mul(&w),
            Err(KernelError::WindowExhausted { .. })
        ));
        let _ = p;
        let _ = prec;
    }

    #[test]
    fn evaluation_at_teichmuller_points() {
        let (p, vars, prec) = ring();
        // x = T + T^{-1} at T = teich(2): value = z + z^{-1}
        let x = s(&[(1, 1), (-1, 1)]);
        let v = x.evaluate(&[2], &[]).unwrap();
        let z = PadicScalar::teichmuller(p, 2, prec);
        let expect = z.add(&z.invert().unwrap());
        assert!(v.congruent_mod(&expect, prec));
        let _ = vars;
    }

    #[test]
    fn affine_variables_reject_negative_exponents() {
        let vars = VarSpec::new(1, 1);
        assert!(Window::from_bounds(vars, vec![(-3, 3), (-1, 5)]).is_err());
        let w = Window::from_bounds(vars, vec![(-3, 3), (0, 5)]).unwrap();
        assert_eq!(w.lo(1), 0);
    }

    #[test]
    fn add_intersects_windows_and_tracks_tail() {
        let (p, vars, prec) = ring();
        let mut x = s(&[(-6, 1), (0, 1)]);
        x.window = Window::from_bounds(vars, vec![(-4, 4)]).unwrap();
        x.tail_val = 0;
        // the out-of-window term is dropped and recorded in the tail
        let x = x.restrict_window(Window::from_bounds(vars, vec![(-4, 4)]).unwrap()).unwrap();
        assert!(x.terms().get(&vec![-6]).is_none());
        assert_eq!(x.tail_val, 0);
        let _ = (p, prec);
    }
}
