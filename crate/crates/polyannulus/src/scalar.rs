//! Truncated p-adic scalars with explicit precision bookkeeping.
//!
//! A scalar is `u · p^v` where the unit part `u` is known modulo `p^R`.
//! The represented value is therefore known modulo `p^(v+R)` ("absolute
//! precision"). Zero is carried as an explicit zero-at-precision marker.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{KernelError, Result};

/// Global arithmetic parameters shared by a whole computation.
///
/// `omega_vp` is the p-adic valuation of the slope normalizer ω = p^(f·s),
/// so the slope boundary is s = omega_vp / f in the v_p/f normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub p: u64,
    #[serde(rename = "N")]
    pub prec: i64,
    pub f: u32,
    pub omega_vp: i64,
}

impl GlobalParams {
    pub fn new(p: u64, prec: i64, f: u32, omega_vp: i64) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(KernelError::BadInput {
                context: format!("p = {p} must be an odd prime >= 3"),
            });
        }
        if prec < 4 {
            return Err(KernelError::BadInput {
                context: format!("absolute precision N = {prec} must be >= 4"),
            });
        }
        if f < 1 {
            return Err(KernelError::BadInput {
                context: "Frobenius power f must be >= 1".into(),
            });
        }
        if omega_vp < 1 {
            return Err(KernelError::BadInput {
                context: format!("omega valuation {omega_vp} must be >= 1"),
            });
        }
        // All unit parts live below p^N; keep p^N within u64 so that u128
        // products never overflow.
        if checked_pow(p, prec as u32).is_none() {
            return Err(KernelError::BadInput {
                context: format!("p^N = {p}^{prec} exceeds the 2^63 arithmetic cap"),
            });
        }
        Ok(GlobalParams {
            p,
            prec,
            f,
            omega_vp,
        })
    }

    /// q = p^f, the exponent scale of one Frobenius application.
    pub fn q(&self) -> u64 {
        checked_pow(self.p, self.f).expect("q below cap by construction")
    }

    /// ω = p^(f·s) as a scalar at full precision.
    pub fn omega(&self) -> PadicScalar {
        PadicScalar::p_power(self.p, self.omega_vp, self.prec)
    }

    /// Slope boundary s = v_p(ω)/f as (numerator, denominator).
    pub fn slope(&self) -> (i64, i64) {
        (self.omega_vp, self.f as i64)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn checked_pow(p: u64, e: u32) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(p)?;
    }
    if acc > (1u64 << 63) {
        None
    } else {
        Some(acc)
    }
}

/// p^e as u128; callers keep e small enough that this cannot overflow
/// because p^N fits in 63 bits and all exponents used are <= N.
pub(crate) fn p_pow(p: u64, e: i64) -> u128 {
    debug_assert!(e >= 0);
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc *= p as u128;
    }
    acc
}

/// Largest relative precision whose unit parts are safe in u128
/// arithmetic; generous next to the p^N ≤ 2^63 working cap.
pub(crate) fn safe_rel_prec(p: u64) -> i64 {
    let bits = (128 - (p as u128).leading_zeros()) as i64;
    (120 / bits).max(4)
}

/// v_p of a nonzero integer.
pub fn int_valuation(p: u64, n: i128) -> i64 {
    debug_assert!(n != 0);
    let mut n = n.unsigned_abs();
    let mut v = 0;
    while n % p as u128 == 0 {
        n /= p as u128;
        v += 1;
    }
    v
}

/// Modular inverse of `a` modulo `m` (m a p-power, gcd(a, m) = 1),
/// by the extended Euclidean algorithm.
pub(crate) fn mod_inverse(a: u128, m: u128) -> u128 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert!(r0 == 1, "inverse of a non-unit requested");
    t0.rem_euclid(m as i128) as u128
}

/// A truncated p-adic number: `u · p^v` with `u` a unit known mod `p^r`,
/// or the zero marker (`u = 0, r = 0`) meaning "0 mod p^v".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadicScalar {
    pub p: u64,
    pub v: i64,
    pub u: u128,
    pub r: i64,
}

impl PadicScalar {
    /// Zero known modulo p^abs_prec.
    pub fn zero(p: u64, abs_prec: i64) -> Self {
        PadicScalar {
            p,
            v: abs_prec,
            u: 0,
            r: 0,
        }
    }

    pub fn one(p: u64, rel_prec: i64) -> Self {
        PadicScalar {
            p,
            v: 0,
            u: 1,
            r: rel_prec,
        }
    }

    /// p^e at the given absolute precision.
    pub fn p_power(p: u64, e: i64, abs_prec: i64) -> Self {
        if e >= abs_prec {
            return Self::zero(p, abs_prec);
        }
        PadicScalar {
            p,
            v: e,
            u: 1,
            r: abs_prec - e,
        }
    }

    /// An integer reduced to absolute precision `abs_prec`.
    pub fn from_int(p: u64, n: i128, abs_prec: i64) -> Self {
        if n == 0 {
            return Self::zero(p, abs_prec);
        }
        let v = int_valuation(p, n);
        if v >= abs_prec {
            return Self::zero(p, abs_prec);
        }
        let r = abs_prec - v;
        let m = p_pow(p, r);
        let unit_mag = n.unsigned_abs() / p_pow(p, v);
        let mut u = unit_mag % m;
        if n < 0 {
            u = (m - u) % m;
        }
        debug_assert!(u % p as u128 != 0);
        PadicScalar { p, v, u, r }
    }

    /// The rational n/d (d prime to p) at absolute precision `abs_prec`.
    pub fn from_ratio(p: u64, n: i128, d: i128, abs_prec: i64) -> Result<Self> {
        if d == 0 {
            return Err(KernelError::ZeroInput {
                context: "ratio denominator",
            });
        }
        if int_valuation(p, d) != 0 {
            return Err(KernelError::BadInput {
                context: format!("denominator {d} is divisible by p = {p}"),
            });
        }
        let num = Self::from_int(p, n, abs_prec);
        let den = Self::from_int(p, d, abs_prec);
        Ok(num.mul(&den.invert()?))
    }

    pub fn is_zero(&self) -> bool {
        self.u == 0
    }

    /// Absolute precision: the value is known modulo p^abs_prec.
    pub fn abs_prec(&self) -> i64 {
        self.v + self.r
    }

    fn assert_same_p(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixed primes in scalar arithmetic");
    }

    fn normalized(p: u64, v: i64, raw: u128, abs_prec: i64) -> Self {
        if abs_prec <= v {
            return Self::zero(p, abs_prec.max(v.min(abs_prec)));
        }
        let m = p_pow(p, abs_prec - v);
        let mut x = raw % m;
        if x == 0 {
            return Self::zero(p, abs_prec);
        }
        let mut v = v;
        while x % p as u128 == 0 {
            x /= p as u128;
            v += 1;
        }
        if v >= abs_prec {
            return Self::zero(p, abs_prec);
        }
        PadicScalar {
            p,
            v,
            u: x,
            r: abs_prec - v,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_p(other);
        let abs = self.abs_prec().min(other.abs_prec());
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::zero(self.p, abs),
            (true, false) => Self::normalized(self.p, other.v, other.u, abs),
            (false, true) => Self::normalized(self.p, self.v, self.u, abs),
            (false, false) => {
                let vmin = self.v.min(other.v);
                if abs <= vmin {
                    return Self::zero(self.p, abs);
                }
                let m = p_pow(self.p, abs - vmin);
                let a = (self.u % m) * (p_pow(self.p, self.v - vmin) % m) % m;
                let b = (other.u % m) * (p_pow(self.p, other.v - vmin) % m) % m;
                Self::normalized(self.p, vmin, (a + b) % m, abs)
            }
        }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let m = p_pow(self.p, self.r);
        PadicScalar {
            u: (m - self.u % m) % m,
            ..*self
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_p(other);
        if self.is_zero() || other.is_zero() {
            // p^v1 ε · u p^v2 vanishes mod p^(v1+v2) at least.
            return Self::zero(self.p, self.v + other.v);
        }
        let r = self.r.min(other.r);
        let m = p_pow(self.p, r);
        PadicScalar {
            p: self.p,
            v: self.v + other.v,
            u: (self.u % m) * (other.u % m) % m,
            r,
        }
    }

    /// Multiply by a plain integer (exact scaling).
    pub fn mul_int(&self, n: i128) -> Self {
        if n == 0 {
            return Self::zero(self.p, self.abs_prec());
        }
        self.mul(&Self::from_int(self.p, n, int_valuation(self.p, n) + self.r.max(1)))
    }

    pub fn invert(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(KernelError::ZeroAtPrecision {
                abs_prec: self.abs_prec(),
            });
        }
        let m = p_pow(self.p, self.r);
        Ok(PadicScalar {
            p: self.p,
            v: -self.v,
            u: mod_inverse(self.u, m),
            r: self.r,
        })
    }

    /// Exact division by a nonzero integer: costs v_p(n) digits of valuation,
    /// none of relative precision.
    pub fn div_int(&self, n: i128) -> Result<Self> {
        if n == 0 {
            return Err(KernelError::ZeroInput {
                context: "integer divisor",
            });
        }
        if self.is_zero() {
            return Ok(Self::zero(self.p, self.v - int_valuation(self.p, n)));
        }
        let vn = int_valuation(self.p, n);
        let m = p_pow(self.p, self.r);
        let unit_mag = (n.unsigned_abs() / p_pow(self.p, vn)) % m;
        let mut u = self.u * mod_inverse(unit_mag, m) % m;
        if n < 0 {
            u = (m - u) % m;
        }
        Ok(PadicScalar {
            p: self.p,
            v: self.v - vn,
            u,
            r: self.r,
        })
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.invert()?.pow(-e);
        }
        let mut acc = PadicScalar::one(self.p, if self.is_zero() { 1 } else { self.r });
        let mut base = *self;
        let mut e = e as u64;
        if e == 0 {
            return Ok(acc);
        }
        loop {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        Ok(acc)
    }

    /// Truncate to a (not larger) absolute precision.
    pub fn truncate(&self, abs_prec: i64) -> Self {
        if self.is_zero() {
            return Self::zero(self.p, self.abs_prec().min(abs_prec));
        }
        Self::normalized(self.p, self.v, self.u, self.abs_prec().min(abs_prec))
    }

    /// Do the two scalars agree modulo p^k?
    pub fn congruent_mod(&self, other: &Self, k: i64) -> bool {
        let d = self.sub(other);
        d.is_zero() && d.abs_prec() >= k || !d.is_zero() && d.v >= k
    }

    /// Canonical residue in [0, p^k) of a scalar with v >= 0.
    pub fn residue(&self, k: i64) -> Result<u128> {
        if self.is_zero() {
            return Ok(0);
        }
        if self.v < 0 {
            return Err(KernelError::BadInput {
                context: format!("residue of a scalar with negative valuation {}", self.v),
            });
        }
        if self.abs_prec() < k {
            return Err(KernelError::PrecisionExhausted {
                context: format!("residue mod p^{k} needs abs prec >= {k}, have {}", self.abs_prec()),
            });
        }
        let m = p_pow(self.p, k);
        Ok(self.u % p_pow(self.p, k - self.v.min(k)) * p_pow(self.p, self.v.min(k)) % m)
    }

    /// Centered integer representative in (-p^k/2, p^k/2] of the value mod p^k.
    pub fn balanced_residue(&self, k: i64) -> Result<i128> {
        let m = p_pow(self.p, k) as i128;
        let x = self.residue(k)? as i128;
        Ok(if 2 * x > m { x - m } else { x })
    }

    /// Teichmüller lift of t mod p at absolute precision `abs_prec`:
    /// the fixed point of x -> x^p congruent to t mod p.
    pub fn teichmuller(p: u64, t: u64, abs_prec: i64) -> Self {
        let t = t % p;
        if t == 0 {
            return Self::zero(p, abs_prec);
        }
        let m = p_pow(p, abs_prec);
        let mut x = t as u128 % m;
        loop {
            let mut y = x;
            for _ in 1..p {
                y = y * x % m;
            }
            if y == x {
                break;
            }
            x = y;
        }
        PadicScalar {
            p,
            v: 0,
            u: x,
            r: abs_prec,
        }
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(out, "O({}^{})", self.p, self.abs_prec());
        }
        if self.v == 0 {
            write!(out, "{} + O({}^{})", self.u, self.p, self.r)
        } else {
            write!(out, "{}·{}^{} + O({}^{})", self.u, self.p, self.v, self.p, self.abs_prec())
        }
    }
}
