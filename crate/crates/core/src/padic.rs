//! Fixed-precision residues mod p^N and floating p-adic numbers.
//!
//! [`PadicScalar`] is a canonical representative in `[0, p^N)` tagged with
//! its ring parameters; two scalars interoperate only when they agree on
//! `(p, N)`. A representative of 0 only certifies "valuation >= N", which
//! [`Valuation`] keeps distinct from an exact value.
//!
//! [`PadicNumber`] extends this with a signed power of p and a relative
//! precision, for the power-series engine where coefficients like a_p/p
//! have negative valuation. The group-ring side of the crate is integral
//! throughout and never touches it.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::Result;

/// p-adic valuation of a residue class mod p^N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    /// Exactly p^k divides the class, p^{k+1} does not.
    Exact(u32),
    /// The representative is 0: the class valuation is >= N and cannot be
    /// resolved at this precision.
    AtLeast(u32),
}

impl Valuation {
    pub fn exact(self) -> Option<u32> {
        match self {
            Valuation::Exact(k) => Some(k),
            Valuation::AtLeast(_) => None,
        }
    }

    /// Lower bound valid in either case.
    pub fn lower_bound(self) -> u32 {
        match self {
            Valuation::Exact(k) | Valuation::AtLeast(k) => k,
        }
    }

    pub fn is_zero_at_precision(self) -> bool {
        matches!(self, Valuation::AtLeast(_))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Exact(k) => write!(f, "{k}"),
            Valuation::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

pub(crate) fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.checked_mul(d).is_some_and(|sq| sq <= p) {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn check_ring_params(p: u64, prec: u32) -> Result<()> {
    if !is_odd_prime(p) {
        return Err(Error::InvalidPrime(p));
    }
    if prec == 0 {
        return Err(Error::InvalidPrecision);
    }
    Ok(())
}

pub(crate) fn modulus_big(p: u64, prec: u32) -> BigUint {
    BigUint::from(p).pow(prec)
}

/// Valuation of a canonical representative, capped by the precision.
pub(crate) fn val_of_big(p: u64, prec: u32, v: &BigUint) -> Valuation {
    if v.is_zero() {
        return Valuation::AtLeast(prec);
    }
    let p_big = BigUint::from(p);
    let mut k = 0u32;
    let mut rest = v.clone();
    loop {
        let (q, r) = rest.div_rem(&p_big);
        if !r.is_zero() {
            return Valuation::Exact(k);
        }
        rest = q;
        k += 1;
    }
}

/// An element of Z/p^N viewed as an approximation of a p-adic integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    p: u64,
    prec: u32,
    value: BigUint,
}

impl PadicScalar {
    pub fn new(p: u64, prec: u32, value: BigUint) -> Result<Self> {
        check_ring_params(p, prec)?;
        let value = value % modulus_big(p, prec);
        Ok(PadicScalar { p, prec, value })
    }

    /// Build from a signed integer, reducing into `[0, p^N)`.
    pub fn from_i64(p: u64, prec: u32, value: i64) -> Result<Self> {
        check_ring_params(p, prec)?;
        let m = BigInt::from(modulus_big(p, prec));
        let v = BigInt::from(value).mod_floor(&m);
        Ok(PadicScalar {
            p,
            prec,
            value: v.to_biguint().expect("mod_floor is nonnegative"),
        })
    }

    pub(crate) fn from_reduced(p: u64, prec: u32, value: BigUint) -> Self {
        debug_assert!(value < modulus_big(p, prec));
        PadicScalar { p, prec, value }
    }

    pub fn zero(p: u64, prec: u32) -> Result<Self> {
        Self::new(p, prec, BigUint::zero())
    }

    pub fn one(p: u64, prec: u32) -> Result<Self> {
        Self::new(p, prec, BigUint::one())
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> BigUint {
        modulus_big(self.p, self.prec)
    }

    fn check_same_ring(&self, rhs: &Self) -> Result<()> {
        if self.p != rhs.p || self.prec != rhs.prec {
            return Err(Error::PrecisionMismatch {
                p_lhs: self.p,
                prec_lhs: self.prec,
                p_rhs: rhs.p,
                prec_rhs: rhs.prec,
            });
        }
        Ok(())
    }

    /// Largest k <= N with p^k dividing the class, or `AtLeast(N)`.
    pub fn valuation(&self) -> Valuation {
        val_of_big(self.p, self.prec, &self.value)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_unit(&self) -> bool {
        !(&self.value % self.p).is_zero()
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_ring(rhs)?;
        let m = self.modulus();
        Ok(Self::from_reduced(
            self.p,
            self.prec,
            (&self.value + &rhs.value) % m,
        ))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_ring(rhs)?;
        let m = self.modulus();
        let v = (&m + &self.value - &rhs.value) % &m;
        Ok(Self::from_reduced(self.p, self.prec, v))
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_ring(rhs)?;
        let m = self.modulus();
        Ok(Self::from_reduced(
            self.p,
            self.prec,
            (&self.value * &rhs.value) % m,
        ))
    }

    pub fn neg(&self) -> Self {
        if self.value.is_zero() {
            return self.clone();
        }
        let m = self.modulus();
        Self::from_reduced(self.p, self.prec, m - &self.value)
    }

    /// Multiplicative inverse of a unit: `self * inv == 1 mod p^N`.
    pub fn unit_inverse(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let m = BigInt::from(self.modulus());
        let a = BigInt::from(self.value.clone());
        let ext = a.extended_gcd(&m);
        debug_assert!(ext.gcd.is_one());
        let inv = ext.x.mod_floor(&m);
        Ok(Self::from_reduced(
            self.p,
            self.prec,
            inv.to_biguint().expect("mod_floor is nonnegative"),
        ))
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}^{}", self.value, self.p, self.prec)
    }
}

/// Absolute-precision bound used for exact zeros, far above anything a
/// finite computation reaches but safe under saturating arithmetic.
const EXACT_ZERO_PREC: i64 = i64::MAX / 4;

/// A p-adic number p^shift * unit with a per-value precision ledger.
///
/// The unit part is known mod p^rel, so the number itself is known mod
/// p^(shift+rel). Additions track cancellation: when leading digits
/// cancel, the lost digits are charged against the relative precision.
/// A value that cancels entirely within its window degrades to
/// "zero mod p^abs" and keeps only the absolute bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicNumber {
    p: u64,
    shift: i64,
    unit: BigUint,
    rel: u32,
}

impl PadicNumber {
    /// Zero to absolute precision p^abs.
    pub fn zero_at(p: u64, abs: i64) -> Self {
        PadicNumber {
            p,
            shift: abs,
            unit: BigUint::zero(),
            rel: 0,
        }
    }

    pub fn exact_zero(p: u64) -> Self {
        Self::zero_at(p, EXACT_ZERO_PREC)
    }

    /// An exact integer (or p-power denominator) value `num / p^den_pow`,
    /// with the unit part retained mod p^rel.
    pub fn from_ratio(p: u64, num: &BigInt, den_pow: u32, rel: u32) -> Self {
        assert!(rel > 0, "relative precision must be positive");
        if num.is_zero() {
            return Self::exact_zero(p);
        }
        let p_big = BigInt::from(p);
        let mut v = num.abs();
        let mut val = 0i64;
        loop {
            let (q, r) = v.div_rem(&p_big);
            if !r.is_zero() {
                break;
            }
            v = q;
            val += 1;
        }
        let m = BigInt::from(modulus_big(p, rel));
        let mut u = v.mod_floor(&m);
        if num.is_negative() {
            u = (m.clone() - u).mod_floor(&m);
        }
        PadicNumber {
            p,
            shift: val - den_pow as i64,
            unit: u.to_biguint().expect("mod_floor is nonnegative"),
            rel,
        }
    }

    pub fn from_bigint(p: u64, num: &BigInt, rel: u32) -> Self {
        Self::from_ratio(p, num, 0, rel)
    }

    pub fn one(p: u64, rel: u32) -> Self {
        Self::from_bigint(p, &BigInt::one(), rel)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.unit.is_zero()
    }

    /// A structural zero, as opposed to one only known mod some p^A.
    pub fn is_exact_zero(&self) -> bool {
        self.unit.is_zero() && self.shift >= EXACT_ZERO_PREC / 2
    }

    /// Exact valuation, or `None` for a value indistinguishable from 0.
    pub fn valuation(&self) -> Option<i64> {
        if self.unit.is_zero() {
            None
        } else {
            Some(self.shift)
        }
    }

    /// Lower bound on the valuation, valid in either case.
    pub fn valuation_bound(&self) -> i64 {
        self.shift
    }

    pub fn unit_part(&self) -> &BigUint {
        &self.unit
    }

    pub fn rel_prec(&self) -> u32 {
        self.rel
    }

    /// The number is known mod p^abs.
    pub fn abs_prec(&self) -> i64 {
        self.shift.saturating_add(self.rel as i64)
    }

    fn contribution(&self, s: i64, window: u32, m: &BigUint) -> BigUint {
        if self.unit.is_zero() {
            return BigUint::zero();
        }
        let k = (self.shift - s) as u32;
        if k >= window {
            return BigUint::zero();
        }
        (&self.unit * BigUint::from(self.p).pow(k)) % m
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.p, rhs.p, "mixed primes");
        let p = self.p;
        let abs = self.abs_prec().min(rhs.abs_prec());
        if self.unit.is_zero() && rhs.unit.is_zero() {
            return Self::zero_at(p, abs);
        }
        let mut s = i64::MAX;
        if !self.unit.is_zero() {
            s = s.min(self.shift);
        }
        if !rhs.unit.is_zero() {
            s = s.min(rhs.shift);
        }
        if s >= abs {
            return Self::zero_at(p, abs);
        }
        let window = (abs - s) as u32;
        let m = modulus_big(p, window);
        let v = (self.contribution(s, window, &m) + rhs.contribution(s, window, &m)) % &m;
        match val_of_big(p, window, &v) {
            Valuation::AtLeast(_) => Self::zero_at(p, abs),
            Valuation::Exact(w) => PadicNumber {
                p,
                shift: s + w as i64,
                unit: v / BigUint::from(p).pow(w),
                rel: window - w,
            },
        }
    }

    pub fn neg(&self) -> Self {
        if self.unit.is_zero() {
            return self.clone();
        }
        let m = modulus_big(self.p, self.rel);
        PadicNumber {
            p: self.p,
            shift: self.shift,
            unit: m - &self.unit,
            rel: self.rel,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.p, rhs.p, "mixed primes");
        let p = self.p;
        if self.unit.is_zero() || rhs.unit.is_zero() {
            return Self::zero_at(p, self.shift.saturating_add(rhs.shift));
        }
        let rel = self.rel.min(rhs.rel);
        let m = modulus_big(p, rel);
        PadicNumber {
            p,
            shift: self.shift + rhs.shift,
            unit: (&self.unit * &rhs.unit) % m,
            rel,
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.unit.is_zero() {
            return Err(Error::PrecisionExhausted { prec: self.rel });
        }
        let s = PadicScalar::new(self.p, self.rel, self.unit.clone())?;
        Ok(PadicNumber {
            p: self.p,
            shift: -self.shift,
            unit: s.unit_inverse()?.value,
            rel: self.rel,
        })
    }

    pub fn div(&self, rhs: &Self) -> Result<Self> {
        Ok(self.mul(&rhs.inverse()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.p, self.rel.max(1));
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Congruence at the joint absolute precision.
    pub fn congruent(&self, rhs: &Self) -> bool {
        self.sub(rhs).is_zero_at_precision()
    }

    /// Convert an integral value (valuation >= 0) to a scalar mod p^prec.
    /// Fails when the value is not known to be integral at that precision.
    pub fn to_scalar(&self, prec: u32) -> Result<PadicScalar> {
        if self.abs_prec() < prec as i64 {
            return Err(Error::PrecisionExhausted { prec });
        }
        if self.unit.is_zero() {
            return PadicScalar::zero(self.p, prec);
        }
        if self.shift < 0 {
            return Err(Error::IntegralityViolation {
                monomial: "scalar".into(),
                val: self.shift,
            });
        }
        let m = modulus_big(self.p, prec);
        let v = (&self.unit * BigUint::from(self.p).pow(self.shift as u32)) % m;
        PadicScalar::new(self.p, prec, v)
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit.is_zero() {
            write!(f, "O({}^{})", self.p, self.shift)
        } else {
            write!(
                f,
                "{}^{} * {} + O({}^{})",
                self.p,
                self.shift,
                self.unit,
                self.p,
                self.abs_prec()
            )
        }
    }
}

/// Arithmetic kernel shared by the group-ring and matrix code.
///
/// Bulk loops (cyclic convolution, row reduction) run over one of two
/// interchangeable backends: a fixed-width Montgomery ring when p^N fits
/// comfortably in a u128, and a BigUint ring otherwise. Montgomery
/// representatives keep the p-valuation of the class (R is a unit), so
/// valuations and exact division by p^k act directly on representatives.
pub(crate) mod lane {
    use super::*;

    #[allow(clippy::wrong_self_convention)] // ring-context style: elements are raw, the ring converts
    pub(crate) trait ZpRing {
        type El: Clone + PartialEq + std::fmt::Debug;

        fn from_big(&self, v: &BigUint) -> Self::El;
        fn to_big(&self, v: &Self::El) -> BigUint;
        fn zero(&self) -> Self::El;
        fn one(&self) -> Self::El;
        fn is_zero(&self, a: &Self::El) -> bool;
        fn add(&self, a: &Self::El, b: &Self::El) -> Self::El;
        fn sub(&self, a: &Self::El, b: &Self::El) -> Self::El;
        fn mul(&self, a: &Self::El, b: &Self::El) -> Self::El;
        /// `None` when the representative is 0 (valuation >= N).
        fn val(&self, a: &Self::El) -> Option<u32>;
        /// Inverse of a unit (valuation 0).
        fn inv_unit(&self, a: &Self::El) -> Self::El;
        /// Exact division of the representative by p^k; requires val >= k.
        /// The result is only trusted mod p^(N-k), which is all the
        /// reduction algorithms rely on.
        fn div_pow_p(&self, a: &Self::El, k: u32) -> Self::El;
    }

    #[inline]
    fn mul_wide(a: u128, b: u128) -> (u128, u128) {
        const MASK: u128 = (1u128 << 64) - 1;
        let (a1, a0) = (a >> 64, a & MASK);
        let (b1, b0) = (b >> 64, b & MASK);
        let p00 = a0 * b0;
        let p01 = a0 * b1;
        let p10 = a1 * b0;
        let p11 = a1 * b1;
        let mid = (p00 >> 64) + (p01 & MASK) + (p10 & MASK);
        let lo = (p00 & MASK) | (mid << 64);
        let hi = p11 + (mid >> 64) + (p01 >> 64) + (p10 >> 64);
        (hi, lo)
    }

    /// -m^{-1} mod 2^64 by Hensel lifting (m odd).
    fn neg_inv_u64(m: u64) -> u64 {
        let mut x: u64 = 1;
        for _ in 0..6 {
            x = x.wrapping_mul(2u64.wrapping_sub(m.wrapping_mul(x)));
        }
        x.wrapping_neg()
    }

    /// Montgomery ring for odd modulus m = p^N < 2^127, R = 2^128.
    pub(crate) struct MontRing {
        p: u64,
        m: u128,
        minv: u64,
        r2: u128,
        phi: u128,
    }

    impl MontRing {
        pub(crate) fn try_new(p: u64, prec: u32) -> Option<Self> {
            let m_big = modulus_big(p, prec);
            if m_big.bits() > 127 {
                return None;
            }
            let digits = m_big.to_u64_digits();
            let mut m: u128 = 0;
            for (i, d) in digits.iter().enumerate() {
                m |= (*d as u128) << (64 * i);
            }
            let r2_big = (BigUint::one() << 256u32) % &m_big;
            let digits = r2_big.to_u64_digits();
            let mut r2: u128 = 0;
            for (i, d) in digits.iter().enumerate() {
                r2 |= (*d as u128) << (64 * i);
            }
            let phi = m / p as u128 * (p as u128 - 1);
            Some(MontRing {
                p,
                m,
                minv: neg_inv_u64(m as u64),
                r2,
                phi,
            })
        }

        #[inline]
        fn redc(&self, hi: u128, lo: u128) -> u128 {
            let mut t = [lo as u64, (lo >> 64) as u64, hi as u64, (hi >> 64) as u64];
            let m0 = self.m as u64;
            let m1 = (self.m >> 64) as u64;
            let mut overflow = 0u64;
            for i in 0..2 {
                let u = t[i].wrapping_mul(self.minv);
                let x = (u as u128) * (m0 as u128) + t[i] as u128;
                let mut c = x >> 64;
                let x = (u as u128) * (m1 as u128) + t[i + 1] as u128 + c;
                t[i + 1] = x as u64;
                c = x >> 64;
                if i == 0 {
                    let x = t[2] as u128 + c;
                    t[2] = x as u64;
                    c = x >> 64;
                    let x = t[3] as u128 + c;
                    t[3] = x as u64;
                    overflow = (x >> 64) as u64;
                } else {
                    let x = t[3] as u128 + c;
                    t[3] = x as u64;
                    overflow += (x >> 64) as u64;
                }
            }
            let res = (t[2] as u128) | ((t[3] as u128) << 64);
            if overflow != 0 {
                // true value is res + 2^128 < 2m, so one subtraction lands in range
                res.wrapping_sub(self.m)
            } else if res >= self.m {
                res - self.m
            } else {
                res
            }
        }

        #[inline]
        fn mont_mul(&self, a: u128, b: u128) -> u128 {
            let (hi, lo) = mul_wide(a, b);
            self.redc(hi, lo)
        }

        fn mont_pow(&self, a: u128, mut e: u128) -> u128 {
            let mut base = a;
            let mut acc = self.redc(0, self.r2); // 1 in Montgomery form
            while e > 0 {
                if e & 1 == 1 {
                    acc = self.mont_mul(acc, base);
                }
                e >>= 1;
                if e > 0 {
                    base = self.mont_mul(base, base);
                }
            }
            acc
        }
    }

    impl ZpRing for MontRing {
        type El = u128;

        fn from_big(&self, v: &BigUint) -> u128 {
            let digits = v.to_u64_digits();
            let mut x: u128 = 0;
            for (i, d) in digits.iter().enumerate().take(2) {
                x |= (*d as u128) << (64 * i);
            }
            debug_assert!(digits.len() <= 2 && x < self.m);
            self.mont_mul(x, self.r2)
        }

        fn to_big(&self, v: &u128) -> BigUint {
            let x = self.redc(0, *v);
            let mut out = BigUint::from((x >> 64) as u64);
            out <<= 64u32;
            out |= BigUint::from(x as u64);
            out
        }

        fn zero(&self) -> u128 {
            0
        }

        fn one(&self) -> u128 {
            self.redc(0, self.r2)
        }

        fn is_zero(&self, a: &u128) -> bool {
            *a == 0
        }

        #[inline]
        fn add(&self, a: &u128, b: &u128) -> u128 {
            let s = a + b;
            if s >= self.m {
                s - self.m
            } else {
                s
            }
        }

        #[inline]
        fn sub(&self, a: &u128, b: &u128) -> u128 {
            if a >= b {
                a - b
            } else {
                a + self.m - b
            }
        }

        #[inline]
        fn mul(&self, a: &u128, b: &u128) -> u128 {
            self.mont_mul(*a, *b)
        }

        fn val(&self, a: &u128) -> Option<u32> {
            // R = 2^128 is a unit mod p^N, so the representative has the
            // valuation of the underlying class.
            if *a == 0 {
                return None;
            }
            let p = self.p as u128;
            let mut x = *a;
            let mut k = 0;
            while x.is_multiple_of(p) {
                x /= p;
                k += 1;
            }
            Some(k)
        }

        fn inv_unit(&self, a: &u128) -> u128 {
            debug_assert_eq!(self.val(a), Some(0));
            self.mont_pow(*a, self.phi - 1)
        }

        fn div_pow_p(&self, a: &u128, k: u32) -> u128 {
            let d = (self.p as u128).pow(k);
            debug_assert_eq!(a % d, 0);
            a / d
        }
    }

    /// BigUint fallback for precisions beyond the word lane.
    pub(crate) struct BigRing {
        p: u64,
        prec: u32,
        m: BigUint,
        phi: BigUint,
    }

    impl BigRing {
        pub(crate) fn new(p: u64, prec: u32) -> Self {
            let m = modulus_big(p, prec);
            let phi = &m / p * (p - 1);
            BigRing { p, prec, m, phi }
        }
    }

    impl ZpRing for BigRing {
        type El = BigUint;

        fn from_big(&self, v: &BigUint) -> BigUint {
            debug_assert!(*v < self.m);
            v.clone()
        }

        fn to_big(&self, v: &BigUint) -> BigUint {
            v.clone()
        }

        fn zero(&self) -> BigUint {
            BigUint::zero()
        }

        fn one(&self) -> BigUint {
            BigUint::one()
        }

        fn is_zero(&self, a: &BigUint) -> bool {
            a.is_zero()
        }

        fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
            let s = a + b;
            if s >= self.m {
                s - &self.m
            } else {
                s
            }
        }

        fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
            if a >= b {
                a - b
            } else {
                a + &self.m - b
            }
        }

        fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
            (a * b) % &self.m
        }

        fn val(&self, a: &BigUint) -> Option<u32> {
            val_of_big(self.p, self.prec, a).exact()
        }

        fn inv_unit(&self, a: &BigUint) -> BigUint {
            a.modpow(&(&self.phi - 1u32), &self.m)
        }

        fn div_pow_p(&self, a: &BigUint, k: u32) -> BigUint {
            let d = BigUint::from(self.p).pow(k);
            debug_assert!((a % &d).is_zero());
            a / d
        }
    }

    pub(crate) enum Lane {
        Word(MontRing),
        Big(BigRing),
    }

    impl Lane {
        pub(crate) fn new(p: u64, prec: u32) -> Lane {
            match MontRing::try_new(p, prec) {
                Some(r) => Lane::Word(r),
                None => Lane::Big(BigRing::new(p, prec)),
            }
        }
    }

    /// Run a kernel on whichever backend fits the modulus.
    macro_rules! with_lane {
        ($p:expr, $prec:expr, |$ring:ident| $body:expr) => {
            match crate::padic::lane::Lane::new($p, $prec) {
                crate::padic::lane::Lane::Word($ring) => $body,
                crate::padic::lane::Lane::Big($ring) => $body,
            }
        };
    }
    pub(crate) use with_lane;
}

#[cfg(test)]
mod tests {
    use super::lane::{BigRing, MontRing, ZpRing};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn valuation_examples() {
        let a = PadicScalar::from_i64(3, 6, 18).unwrap();
        assert_eq!(a.valuation(), Valuation::Exact(2));
        let b = PadicScalar::from_i64(3, 6, 1).unwrap();
        assert_eq!(b.valuation(), Valuation::Exact(0));
        let c = PadicScalar::from_i64(3, 6, 0).unwrap();
        assert_eq!(c.valuation(), Valuation::AtLeast(6));
        assert!(c.valuation().is_zero_at_precision());
    }

    #[test]
    fn unit_inverse_examples() {
        let a = PadicScalar::from_i64(3, 4, 2).unwrap();
        let inv = a.unit_inverse().unwrap();
        assert_eq!(inv.value(), &BigUint::from(41u32));
        assert!(a.mul(&inv).unwrap().value().is_one());

        let one = PadicScalar::from_i64(5, 2, 1).unwrap();
        assert_eq!(one.unit_inverse().unwrap(), one);

        let three = PadicScalar::from_i64(3, 4, 3).unwrap();
        assert_eq!(three.unit_inverse(), Err(Error::NotAUnit));
    }

    #[test]
    fn ring_op_examples() {
        let m81 = |v| PadicScalar::from_i64(3, 4, v).unwrap();
        assert_eq!(m81(80).add(&m81(2)).unwrap(), m81(1));
        assert_eq!(m81(9).mul(&m81(9)).unwrap(), m81(0));
        assert_eq!(m81(0).sub(&m81(1)).unwrap(), m81(80));
    }

    #[test]
    fn mixing_rings_is_an_error() {
        let a = PadicScalar::from_i64(3, 4, 1).unwrap();
        let b = PadicScalar::from_i64(3, 5, 1).unwrap();
        assert!(matches!(a.add(&b), Err(Error::PrecisionMismatch { .. })));
        let c = PadicScalar::from_i64(5, 4, 1).unwrap();
        assert!(matches!(a.mul(&c), Err(Error::PrecisionMismatch { .. })));
    }

    #[test]
    fn rejects_bad_ring_params() {
        assert!(PadicScalar::from_i64(2, 4, 1).is_err());
        assert!(PadicScalar::from_i64(9, 4, 1).is_err());
        assert!(PadicScalar::from_i64(3, 0, 1).is_err());
    }

    #[test]
    fn padic_number_tracks_cancellation() {
        // (1 + p^3 u) - 1 must come out as a valuation-3 value with the
        // relative precision reduced by 3.
        let p = 3;
        let a = PadicNumber::from_bigint(p, &BigInt::from(28), 10); // 1 + 3^3
        let b = PadicNumber::one(p, 10);
        let d = a.sub(&b);
        assert_eq!(d.valuation(), Some(3));
        assert_eq!(d.rel_prec(), 7);
        assert_eq!(d.unit_part(), &BigUint::one());
    }

    #[test]
    fn padic_number_negative_valuation() {
        let p = 3;
        let x = PadicNumber::from_ratio(p, &BigInt::from(-1), 1, 8); // -1/3
        assert_eq!(x.valuation(), Some(-1));
        let y = x.mul(&PadicNumber::from_bigint(p, &BigInt::from(3), 8));
        assert_eq!(y.valuation(), Some(0));
        assert_eq!(y.unit_part(), &(modulus_big(3, 8) - 1u32));
        // adding the exact negation cancels to a zero-at-precision
        let z = y.add(&PadicNumber::one(p, 8));
        assert!(z.is_zero_at_precision());
        assert!(z.valuation().is_none());
        assert_eq!(z.valuation_bound(), 8);
    }

    #[test]
    fn padic_number_pow() {
        let x = PadicNumber::from_ratio(3, &BigInt::from(2), 1, 10); // 2/3
        let y = x.pow(3); // 8/27
        assert_eq!(y.valuation(), Some(-3));
        let cleared = y.mul(&PadicNumber::from_bigint(3, &BigInt::from(27), 10));
        assert!(cleared.congruent(&PadicNumber::from_bigint(3, &BigInt::from(8), 10)));
        assert_eq!(x.pow(0).valuation(), Some(0));
    }

    #[test]
    fn padic_number_division() {
        let p = 5;
        let a = PadicNumber::from_bigint(p, &BigInt::from(7), 6);
        let b = PadicNumber::from_bigint(p, &BigInt::from(3), 6);
        let q = a.div(&b).unwrap();
        assert!(q.mul(&b).congruent(&a));
        let z = PadicNumber::zero_at(p, 4);
        assert!(z.inverse().is_err());
    }

    fn arb_prime() -> impl Strategy<Value = u64> {
        prop::sample::select(vec![3u64, 5, 7, 11, 13])
    }

    proptest! {
        // Montgomery kernel agrees with the BigUint kernel on all ops.
        #[test]
        fn lanes_agree(p in arb_prime(), prec in 1u32..40, a in any::<u128>(), b in any::<u128>()) {
            let m = modulus_big(p, prec);
            if m.bits() > 127 { return Ok(()); }
            let mont = MontRing::try_new(p, prec).unwrap();
            let big = BigRing::new(p, prec);
            let ab = BigUint::from(a) % &m;
            let bb = BigUint::from(b) % &m;
            let (am, bm) = (mont.from_big(&ab), mont.from_big(&bb));
            prop_assert_eq!(mont.to_big(&mont.mul(&am, &bm)), big.mul(&ab, &bb));
            prop_assert_eq!(mont.to_big(&mont.add(&am, &bm)), big.add(&ab, &bb));
            prop_assert_eq!(mont.to_big(&mont.sub(&am, &bm)), big.sub(&ab, &bb));
            prop_assert_eq!(mont.val(&am), big.val(&ab));
            if mont.val(&am) == Some(0) {
                prop_assert_eq!(mont.to_big(&mont.inv_unit(&am)), big.inv_unit(&ab));
            }
            if let Some(v) = mont.val(&am) {
                let k = v.min(3);
                // representative division: compare mod p^(N-k)
                let mk = modulus_big(p, prec - k);
                prop_assert_eq!(
                    mont.to_big(&mont.div_pow_p(&am, k)) % &mk,
                    big.div_pow_p(&ab, k) % &mk
                );
            }
        }

        // ring axioms mod p^N
        #[test]
        fn scalar_ring_axioms(p in arb_prime(), prec in 1u32..12,
                              a in any::<i64>(), b in any::<i64>(), c in any::<i64>()) {
            let s = |v| PadicScalar::from_i64(p, prec, v).unwrap();
            let (a, b, c) = (s(a), s(b), s(c));
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
            prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
            prop_assert_eq!(
                a.mul(&b.add(&c).unwrap()).unwrap(),
                a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
            );
        }

        // val(a*b) = val(a) + val(b) below the precision
        #[test]
        fn valuation_additive(p in arb_prime(), prec in 2u32..14, a in any::<i64>(), b in any::<i64>()) {
            let x = PadicScalar::from_i64(p, prec, a).unwrap();
            let y = PadicScalar::from_i64(p, prec, b).unwrap();
            if let (Valuation::Exact(va), Valuation::Exact(vb)) = (x.valuation(), y.valuation()) {
                if va + vb < prec {
                    prop_assert_eq!(x.mul(&y).unwrap().valuation(), Valuation::Exact(va + vb));
                }
            }
        }

        // inverse is an involution on units
        #[test]
        fn inverse_involution(p in arb_prime(), prec in 1u32..14, a in any::<i64>()) {
            let x = PadicScalar::from_i64(p, prec, a).unwrap();
            if x.is_unit() {
                prop_assert_eq!(x.unit_inverse().unwrap().unit_inverse().unwrap(), x);
            }
        }
    }
}
