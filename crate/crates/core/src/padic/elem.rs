//! Truncated elements of a quadratic extension `K = Q_p(ω)`.
//!
//! An element is stored as `p^shift · (a + b·ω)` where `a, b` are integers
//! reduced modulo `p^prec`, so the element is known modulo `p^(shift+prec)·O_K`.
//! After normalization at least one of `a, b` is prime to `p` unless `prec = 0`,
//! in which case the element is indistinguishable from zero.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Arithmetic data of `O_K = Z_p[ω]` with `ω² = trace·ω − norm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ring {
    pub p: i64,
    pub gen_trace: i64,
    pub gen_norm: i64,
    /// `true` when `ω` is a uniformizer of a ramified `K`.
    pub ramified: bool,
    /// Maximal number of `p`-adic digits carried per coordinate.
    pub cap: u32,
}

/// Largest `k` with `p^k < 2^61`.
pub fn precision_cap(p: i64) -> u32 {
    let mut k = 0u32;
    let mut acc: i128 = 1;
    while acc * (p as i128) < (1i128 << 61) {
        acc *= p as i128;
        k += 1;
    }
    k
}

pub(crate) fn ipow(p: i64, k: u32) -> i128 {
    (p as i128).pow(k)
}

fn rem(x: i128, m: i128) -> i128 {
    x.rem_euclid(m)
}

/// Inverse of `x` modulo `m`, assuming `gcd(x, m) = 1`.
pub fn inv_mod(x: i128, m: i128) -> Option<i128> {
    let (mut old_r, mut r) = (rem(x, m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return if m == 1 { Some(0) } else { None };
    }
    Some(rem(old_s, m))
}

impl Ring {
    pub fn new(p: i64, gen_trace: i64, gen_norm: i64, ramified: bool) -> Ring {
        Ring {
            p,
            gen_trace,
            gen_norm,
            ramified,
            cap: precision_cap(p),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KElem {
    ring: Ring,
    shift: i64,
    a: i128,
    b: i128,
    prec: u32,
}

impl KElem {
    fn raw(ring: Ring, shift: i64, a: i128, b: i128, prec: u32) -> KElem {
        let m = ipow(ring.p, prec);
        KElem {
            ring,
            shift,
            a: rem(a, m),
            b: rem(b, m),
            prec,
        }
        .normalized()
    }

    fn normalized(mut self) -> KElem {
        let p = self.ring.p as i128;
        while self.prec > 0 && self.a % p == 0 && self.b % p == 0 {
            self.a /= p;
            self.b /= p;
            self.shift += 1;
            self.prec -= 1;
        }
        if self.prec == 0 {
            self.a = 0;
            self.b = 0;
        }
        self
    }

    /// Zero known modulo `p^abs`.
    pub fn zero(ring: Ring, abs: i64) -> KElem {
        KElem {
            ring,
            shift: abs,
            a: 0,
            b: 0,
            prec: 0,
        }
    }

    /// `a + b·ω` with integer coordinates, carried at full precision.
    pub fn from_coords(ring: Ring, a: i64, b: i64) -> KElem {
        if a == 0 && b == 0 {
            return KElem::zero(ring, ring.cap as i64);
        }
        KElem::raw(ring, 0, a as i128, b as i128, ring.cap)
    }

    pub fn from_int(ring: Ring, a: i64) -> KElem {
        KElem::from_coords(ring, a, 0)
    }

    pub fn one(ring: Ring) -> KElem {
        KElem::from_int(ring, 1)
    }

    /// The generator `ω` of `O_K` over `Z_p`.
    pub fn gen(ring: Ring) -> KElem {
        KElem::from_coords(ring, 0, 1)
    }

    /// The rational number `num/den` of `Q_p` (with `den ≠ 0`).
    pub fn from_rational(ring: Ring, num: i64, den: i64) -> Result<KElem> {
        if den == 0 {
            return Err(Error::ZeroValuation);
        }
        KElem::from_int(ring, num).div(&KElem::from_int(ring, den))
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    /// The element `p^shift·(a + bω)` in raw, normalized form.
    pub fn parts(&self) -> (i64, i128, i128, u32) {
        (self.shift, self.a, self.b, self.prec)
    }

    /// Absolute precision in base-field digits: the element is known modulo `p^abs·O_K`.
    pub fn abs_precision(&self) -> i64 {
        self.shift + self.prec as i64
    }

    /// Absolute precision in `v_K` units.
    pub fn abs_precision_k(&self) -> i64 {
        let e = if self.ring.ramified { 2 } else { 1 };
        e * self.abs_precision()
    }

    pub fn is_zero(&self) -> bool {
        self.prec == 0
    }

    /// `v_K` of the element.
    pub fn valuation(&self) -> Result<i64> {
        if self.is_zero() {
            return Err(Error::ZeroValuation);
        }
        if self.ring.ramified {
            let extra = if self.a % self.ring.p as i128 == 0 { 1 } else { 0 };
            Ok(2 * self.shift + extra)
        } else {
            Ok(self.shift)
        }
    }

    /// Whether the element lies in `Q_p` to its working precision.
    pub fn is_base(&self) -> bool {
        self.b == 0
    }

    pub fn neg(&self) -> KElem {
        KElem::raw(self.ring, self.shift, -self.a, -self.b, self.prec)
    }

    fn lift_coords(&self, s: i64, prec: u32) -> (i128, i128) {
        let m = ipow(self.ring.p, prec);
        let delta = (self.shift - s) as u32;
        let scale = if delta >= prec {
            0
        } else {
            ipow(self.ring.p, delta)
        };
        (
            rem(rem(self.a, m) * scale, m),
            rem(rem(self.b, m) * scale, m),
        )
    }

    pub fn add(&self, o: &KElem) -> KElem {
        debug_assert_eq!(self.ring, o.ring);
        let abs = self.abs_precision().min(o.abs_precision());
        let s = self.shift.min(o.shift);
        if abs <= s {
            return KElem::zero(self.ring, abs);
        }
        let prec = (abs - s) as u32;
        let (a1, b1) = self.lift_coords(s, prec);
        let (a2, b2) = o.lift_coords(s, prec);
        KElem::raw(self.ring, s, a1 + a2, b1 + b2, prec)
    }

    pub fn sub(&self, o: &KElem) -> KElem {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &KElem) -> KElem {
        debug_assert_eq!(self.ring, o.ring);
        let shift = self.shift + o.shift;
        let prec = self.prec.min(o.prec);
        if prec == 0 {
            return KElem::zero(self.ring, shift);
        }
        let m = ipow(self.ring.p, prec);
        let (a1, b1) = (rem(self.a, m), rem(self.b, m));
        let (a2, b2) = (rem(o.a, m), rem(o.b, m));
        let bb = rem(b1 * b2, m);
        let t = self.ring.gen_trace as i128;
        let n = self.ring.gen_norm as i128;
        let a = rem(a1 * a2, m) - rem(n * bb, m);
        let b = rem(a1 * b2, m) + rem(a2 * b1, m) + rem(t * bb, m);
        KElem::raw(self.ring, shift, a, b, prec)
    }

    pub fn conj(&self) -> KElem {
        let t = self.ring.gen_trace as i128;
        let m = ipow(self.ring.p, self.prec);
        KElem::raw(
            self.ring,
            self.shift,
            self.a + rem(self.b * t, m.max(1)),
            -self.b,
            self.prec,
        )
    }

    pub fn trace(&self) -> KElem {
        self.add(&self.conj())
    }

    pub fn norm(&self) -> KElem {
        self.mul(&self.conj())
    }

    /// Multiplicative inverse of a nonzero element.
    pub fn inverse(&self) -> Result<KElem> {
        if self.is_zero() {
            return Err(Error::ZeroValuation);
        }
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::PrecisionExhausted("norm vanished".into()));
        }
        debug_assert!(n.is_base());
        let m = ipow(self.ring.p, n.prec);
        let inv = inv_mod(n.a, m)
            .ok_or_else(|| Error::Invariant("norm coordinate not a unit".into()))?;
        let n_inv = KElem::raw(self.ring, -n.shift, inv, 0, n.prec);
        Ok(self.conj().mul(&n_inv))
    }

    /// Inverse of an element of valuation zero.
    pub fn invert_unit(&self) -> Result<KElem> {
        let v = self.valuation()?;
        if v != 0 {
            return Err(Error::NotUnit(v));
        }
        self.inverse()
    }

    pub fn div(&self, o: &KElem) -> Result<KElem> {
        Ok(self.mul(&o.inverse()?))
    }

    pub fn pow(&self, e: i64) -> Result<KElem> {
        let base = if e < 0 { self.inverse()? } else { *self };
        let mut acc = KElem::one(self.ring);
        let mut sq = base;
        let mut k = e.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            k >>= 1;
        }
        Ok(acc)
    }

    /// Equality up to the smaller of the two absolute precisions.
    pub fn eq_to_precision(&self, o: &KElem) -> bool {
        self.sub(o).is_zero()
    }

    /// Coordinates `(x, y)` with `self ≡ x + y·ω` modulo `p^digits`, for integral elements.
    pub fn integral_coords(&self, digits: u32) -> Result<(i128, i128)> {
        if self.abs_precision() < digits as i64 {
            return Err(Error::InsufficientPrecision(format!(
                "need {} digits, have {}",
                digits,
                self.abs_precision()
            )));
        }
        if self.is_zero() {
            return Ok((0, 0));
        }
        if self.shift < 0 {
            return Err(Error::Hypothesis("element is not integral".into()));
        }
        let m = ipow(self.ring.p, digits);
        let scale = if self.shift as u32 >= digits {
            0
        } else {
            ipow(self.ring.p, self.shift as u32)
        };
        Ok((
            rem(rem(self.a, m) * scale, m),
            rem(rem(self.b, m) * scale, m),
        ))
    }

    /// Base-`p` digits of both coordinates, least significant first.
    pub fn digits(&self) -> (Vec<u8>, Vec<u8>) {
        let p = self.ring.p as i128;
        let expand = |mut x: i128| {
            let mut out = Vec::with_capacity(self.prec as usize);
            for _ in 0..self.prec {
                out.push((x % p) as u8);
                x /= p;
            }
            out
        };
        (expand(self.a), expand(self.b))
    }
}

impl fmt::Debug for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "O(p^{})", self.shift);
        }
        write!(
            f,
            "{}^{}*({} + {}w) + O(p^{})",
            self.ring.p,
            self.shift,
            self.a,
            self.b,
            self.abs_precision()
        )
    }
}
