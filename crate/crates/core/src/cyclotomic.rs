//! Exact arithmetic in `Z[ζ_M]`, values of the form `c·q^{k/2}`, and
//! certified extraction of the sign of a normalized Gauss sum.

use crate::error::{Error, Result};
use crate::phase::Phase;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 2;
    while k * k <= n {
        if n.is_multiple_of(k) {
            out.push(k);
            while n.is_multiple_of(k) {
                n /= k;
            }
        }
        k += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    prime_factors(n)
        .into_iter()
        .fold(n, |acc, p| acc / p * (p - 1))
}

/// Integer coefficients of the `n`-th cyclotomic polynomial, constant term first.
pub fn cyclotomic_poly(n: u64) -> Vec<i64> {
    // Φ_n = (x^n − 1) / Π_{d | n, d < n} Φ_d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let lead = *den.last().unwrap();
    let nq = rem.len() - dd;
    let mut q = vec![0i64; nq];
    for i in (0..nq).rev() {
        let c = rem[i + dd] / lead;
        q[i] = c;
        for (j, &dj) in den.iter().enumerate() {
            rem[i + j] -= c * dj;
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0));
    q
}

/// Reduction data for `Q(ζ_M)`: `Φ_M(x) = Φ_r(x^s)` with `r` the radical of `M`.
#[derive(Debug)]
pub struct CycContext {
    pub order: u64,
    pub degree: usize,
    pub rad: u64,
    s: u64,
    /// `y^m mod Φ_r(y)` for `0 ≤ m < r`.
    powers: Vec<Vec<i64>>,
}

static CONTEXTS: OnceLock<Mutex<HashMap<u64, Arc<CycContext>>>> = OnceLock::new();

impl CycContext {
    pub fn get(order: u64) -> Arc<CycContext> {
        assert!(order >= 1);
        let map = CONTEXTS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = map.lock().expect("context cache poisoned");
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(CycContext::build(order)))
            .clone()
    }

    fn build(order: u64) -> CycContext {
        let rad: u64 = prime_factors(order).into_iter().product();
        let s = order / rad;
        let phi_r = cyclotomic_poly(rad);
        let dr = phi_r.len() - 1;
        let mut powers = Vec::with_capacity(rad as usize);
        let mut cur = vec![0i64; dr];
        cur[0] = 1;
        for _ in 0..rad {
            powers.push(cur.clone());
            // multiply by y and reduce with the monic Φ_r
            let top = cur[dr - 1];
            for i in (1..dr).rev() {
                cur[i] = cur[i - 1] - top * phi_r[i];
            }
            cur[0] = -top * phi_r[0];
        }
        CycContext {
            order,
            degree: dr * s as usize,
            rad,
            s,
            powers,
        }
    }

    /// Canonical coefficients of `Σ counts[k]·ζ^k` for `k < M`.
    pub fn reduce_i64(&self, counts: &[i64]) -> Vec<BigInt> {
        self.reduce_i64_exact(counts)
            .into_iter()
            .map(BigInt::from)
            .collect()
    }

    /// As [`reduce_i64`](Self::reduce_i64) with machine-word output; every step is overflow-checked.
    pub fn reduce_i64_exact(&self, counts: &[i64]) -> Vec<i128> {
        let mut acc = vec![0i128; self.degree];
        for (k, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let k = k as u64 % self.order;
            let j = (k % self.s) as usize;
            let m = (k / self.s) as usize;
            for (i, &r) in self.powers[m].iter().enumerate() {
                if r != 0 {
                    let idx = j + self.s as usize * i;
                    acc[idx] = acc[idx]
                        .checked_add((c as i128).checked_mul(r as i128).expect("overflow"))
                        .expect("coefficient overflow");
                }
            }
        }
        acc
    }

    pub fn reduce_big(&self, counts: &[BigInt]) -> Vec<BigInt> {
        let mut acc = vec![BigInt::zero(); self.degree];
        for (k, c) in counts.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = k as u64 % self.order;
            let j = (k % self.s) as usize;
            let m = (k / self.s) as usize;
            for (i, &r) in self.powers[m].iter().enumerate() {
                if r != 0 {
                    acc[j + self.s as usize * i] += c * r;
                }
            }
        }
        acc
    }
}

/// An element of `Z[ζ_M]` in canonical form modulo `Φ_M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycInt {
    pub order: u64,
    pub coeffs: Vec<BigInt>,
}

impl CycInt {
    pub fn zero(order: u64) -> CycInt {
        let ctx = CycContext::get(order);
        CycInt {
            order,
            coeffs: vec![BigInt::zero(); ctx.degree],
        }
    }

    pub fn from_int(order: u64, v: impl Into<BigInt>) -> CycInt {
        let mut z = CycInt::zero(order);
        z.coeffs[0] = v.into();
        z
    }

    pub fn one(order: u64) -> CycInt {
        CycInt::from_int(order, 1)
    }

    /// `ζ_M^k`.
    pub fn zeta_pow(order: u64, k: u64) -> CycInt {
        let mut counts = vec![0i64; order as usize];
        counts[(k % order) as usize] = 1;
        CycInt::from_counts(order, &counts)
    }

    /// `e^{2πi·e}` for a phase whose denominator divides `M`.
    pub fn from_exponent(e: Phase, order: u64) -> Result<CycInt> {
        Ok(CycInt::zeta_pow(order, e.in_units(order)?))
    }

    /// `Σ counts[k]·ζ_M^k`.
    pub fn from_counts(order: u64, counts: &[i64]) -> CycInt {
        let ctx = CycContext::get(order);
        CycInt {
            order,
            coeffs: ctx.reduce_i64(counts),
        }
    }

    fn from_big_counts(order: u64, counts: &[BigInt]) -> CycInt {
        let ctx = CycContext::get(order);
        CycInt {
            order,
            coeffs: ctx.reduce_big(counts),
        }
    }

    fn check(&self, o: &CycInt) -> Result<()> {
        if self.order != o.order {
            return Err(Error::MismatchedOrder(self.order, o.order));
        }
        Ok(())
    }

    pub fn add(&self, o: &CycInt) -> Result<CycInt> {
        self.check(o)?;
        Ok(CycInt {
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, o: &CycInt) -> Result<CycInt> {
        self.add(&o.scalar(&BigInt::from(-1)))
    }

    pub fn scalar(&self, k: &BigInt) -> CycInt {
        CycInt {
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
        }
    }

    pub fn mul(&self, o: &CycInt) -> Result<CycInt> {
        self.check(o)?;
        let m = self.order as usize;
        let mut acc = vec![BigInt::zero(); m];
        let lhs: Vec<(usize, &BigInt)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        for (j, b) in o.coeffs.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for &(i, a) in &lhs {
                acc[(i + j) % m] += a * b;
            }
        }
        Ok(CycInt::from_big_counts(self.order, &acc))
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> CycInt {
        let m = self.order as usize;
        let mut acc = vec![BigInt::zero(); m];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc[(m - i) % m] += c;
            }
        }
        CycInt::from_big_counts(self.order, &acc)
    }

    /// The same number viewed in `Z[ζ_N]` for a multiple `N` of `M`.
    pub fn lift(&self, order: u64) -> Result<CycInt> {
        if !order.is_multiple_of(self.order) {
            return Err(Error::MismatchedOrder(self.order, order));
        }
        let f = (order / self.order) as usize;
        let mut acc = vec![BigInt::zero(); order as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc[i * f] += c;
            }
        }
        Ok(CycInt::from_big_counts(order, &acc))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The rational integer this equals, if any.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    pub fn pow(&self, e: u32) -> CycInt {
        let mut acc = CycInt::one(self.order);
        for _ in 0..e {
            acc = acc.mul(self).expect("same order");
        }
        acc
    }

    /// Whether every coefficient is divisible by `k`.
    pub fn divisible_by(&self, k: &BigInt) -> bool {
        self.coeffs.iter().all(|c| c.is_multiple_of(k))
    }

    fn exact_div(&self, k: &BigInt) -> CycInt {
        CycInt {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c / k).collect(),
        }
    }

    /// Numerical value under `ζ ↦ e^{2πi/M}` with a bound on the absolute error.
    pub fn to_complex(&self) -> (f64, f64, f64) {
        let m = self.order as f64;
        let (mut re, mut im, mut l1) = (0.0f64, 0.0f64, 0.0f64);
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cf = c.to_f64().unwrap_or(f64::INFINITY);
            let ang = std::f64::consts::TAU * k as f64 / m;
            re += cf * ang.cos();
            im += cf * ang.sin();
            l1 += cf.abs();
        }
        let terms = self.coeffs.len() as f64;
        let bound = l1 * (terms + 8.0) * 4.0 * f64::EPSILON;
        (re, im, bound)
    }
}

/// The value `cyc · q^{halfpow/2}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QHalfScaled {
    pub cyc: CycInt,
    pub q: u64,
    pub halfpow: i32,
}

/// `√q` as an element of `Z[ζ_N]` for the smallest admissible `N`, taking the positive root.
pub fn sqrt_q(q: u64) -> CycInt {
    if q == 2 {
        let mut counts = vec![0i64; 8];
        counts[1] = 1;
        counts[7] = 1;
        return CycInt::from_counts(8, &counts);
    }
    let order = 4 * q;
    let f = 4usize;
    let mut counts = vec![0i64; order as usize];
    // Gauss sum g = Σ (a/q) ζ_q^a; g = √q if q ≡ 1 (4), g = i√q if q ≡ 3 (4).
    let shift = if q % 4 == 1 { 0 } else { 3 * q as usize };
    for a in 1..q {
        let l = legendre_symbol(a, q);
        let idx = (a as usize * f + shift) % order as usize;
        counts[idx] += l;
    }
    CycInt::from_counts(order, &counts)
}

fn legendre_symbol(a: u64, q: u64) -> i64 {
    let mut r = 1u64;
    let mut b = a % q;
    let mut e = (q - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a.lcm(&b)
}

impl QHalfScaled {
    pub fn new(cyc: CycInt, q: u64, halfpow: i32) -> QHalfScaled {
        QHalfScaled { cyc, q, halfpow }.normalized()
    }

    pub fn from_cyc(cyc: CycInt, q: u64) -> QHalfScaled {
        QHalfScaled::new(cyc, q, 0)
    }

    /// Fold integer powers of `q` into the cyclotomic part.
    pub fn normalized(mut self) -> QHalfScaled {
        let qb = BigInt::from(self.q);
        if self.cyc.is_zero() {
            self.halfpow = 0;
            return self;
        }
        while self.halfpow >= 2 {
            self.cyc = self.cyc.scalar(&qb);
            self.halfpow -= 2;
        }
        while self.halfpow <= -2 && self.cyc.divisible_by(&qb) {
            self.cyc = self.cyc.exact_div(&qb);
            self.halfpow += 2;
        }
        self
    }

    pub fn mul(&self, o: &QHalfScaled) -> Result<QHalfScaled> {
        if self.q != o.q {
            return Err(Error::Config("mismatched q".into()));
        }
        let order = lcm(self.cyc.order, o.cyc.order);
        let c = self.cyc.lift(order)?.mul(&o.cyc.lift(order)?)?;
        Ok(QHalfScaled::new(c, self.q, self.halfpow + o.halfpow))
    }

    pub fn conj(&self) -> QHalfScaled {
        QHalfScaled {
            cyc: self.cyc.conj(),
            q: self.q,
            halfpow: self.halfpow,
        }
    }

    pub fn scale_int(&self, k: i64) -> QHalfScaled {
        QHalfScaled::new(self.cyc.scalar(&BigInt::from(k)), self.q, self.halfpow)
    }

    /// Write the value inside `Z[ζ_N]` with no residual power of `q`, after
    /// multiplying by `q^{extra/2}` for the given nonnegative `extra`.
    fn embed(&self, extra: i32, order: u64) -> Result<CycInt> {
        let k = self.halfpow + extra;
        debug_assert!(k >= 0);
        let mut c = self.cyc.lift(order)?;
        let whole = BigInt::from(self.q).pow((k / 2) as u32);
        c = c.scalar(&whole);
        if k % 2 == 1 {
            c = c.mul(&sqrt_q(self.q).lift(order)?)?;
        }
        Ok(c)
    }

    /// Exact equality of the represented complex numbers.
    pub fn value_eq(&self, o: &QHalfScaled) -> Result<bool> {
        if self.q != o.q {
            return Err(Error::Config("mismatched q".into()));
        }
        let a = self.clone().normalized();
        let b = o.clone().normalized();
        if a.cyc.is_zero() || b.cyc.is_zero() {
            return Ok(a.cyc.is_zero() && b.cyc.is_zero());
        }
        let base = -a.halfpow.min(b.halfpow);
        let mut order = lcm(a.cyc.order, b.cyc.order);
        if (a.halfpow - b.halfpow) % 2 != 0 {
            order = lcm(order, sqrt_q(self.q).order);
        }
        let ea = a.embed(base, order)?;
        let eb = b.embed(base, order)?;
        Ok(ea == eb)
    }

    /// Numerical value with an error bound.
    pub fn to_complex(&self) -> (f64, f64, f64) {
        let (re, im, err) = self.cyc.to_complex();
        let s = (self.q as f64).powf(self.halfpow as f64 / 2.0);
        (re * s, im * s, err * s * (1.0 + 8.0 * f64::EPSILON) + (re.abs() + im.abs()) * s * 8.0 * f64::EPSILON)
    }

    pub fn is_unimodular(&self) -> Result<bool> {
        let prod = self.mul(&self.conj())?;
        Ok(prod.halfpow == 0 && prod.cyc.as_integer() == Some(BigInt::one()))
    }
}

/// A normalized ε-factor. When the value is `±1` only `sign` is kept; otherwise the
/// exact value is kept in `raw`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonValue {
    pub sign: Option<i8>,
    pub raw: Option<QHalfScaled>,
}

impl EpsilonValue {
    pub fn resolved(&self) -> bool {
        self.sign.is_some()
    }

    pub fn from_sign(s: i8) -> EpsilonValue {
        EpsilonValue {
            sign: Some(s),
            raw: None,
        }
    }

    pub fn require_sign(&self) -> Result<i8> {
        self.sign.ok_or(Error::NotPlusMinusOne)
    }

    /// The exact value, materialized in `Z[ζ_order]` when only the sign is stored.
    pub fn value(&self, order: u64, q: u64) -> QHalfScaled {
        match (&self.raw, self.sign) {
            (Some(r), _) => r.clone(),
            (None, Some(s)) => QHalfScaled::new(CycInt::from_int(order, s as i64), q, 0),
            (None, None) => unreachable!("epsilon value without data"),
        }
    }
}

/// The sign of a value known to be real, after exact checks of `v·v̄ = 1` and `v² = 1`.
pub fn certified_sign(v: &QHalfScaled) -> Result<i8> {
    if !v.is_unimodular()? {
        return Err(Error::NotUnimodular);
    }
    let sq = v.mul(v)?;
    match (sq.halfpow, sq.cyc.as_integer()) {
        (0, Some(k)) if k == BigInt::one() => {}
        _ => return Err(Error::NotPlusMinusOne),
    }
    if let Some(k) = v.cyc.as_integer() {
        if v.halfpow == 0 {
            return Ok(if k.is_negative() { -1 } else { 1 });
        }
    }
    let (re, _, err) = v.to_complex();
    if err >= 0.5 {
        return Err(Error::Unseparated(err));
    }
    if (re - 1.0).abs() < 0.1 {
        Ok(1)
    } else if (re + 1.0).abs() < 0.1 {
        Ok(-1)
    } else {
        Err(Error::Unseparated(err))
    }
}

/// `ε = q^{-a/2}·V` for `V = χ(c)·G`; resolves the sign when `ε = ±1`.
pub fn epsilon_from_scaled(v: CycInt, a: u32, q: u64) -> Result<EpsilonValue> {
    if a.is_multiple_of(2) {
        let target = BigInt::from(q).pow(a / 2);
        if let Some(k) = v.as_integer() {
            if k == target {
                return Ok(EpsilonValue::from_sign(1));
            }
            if k == -target {
                return Ok(EpsilonValue::from_sign(-1));
            }
        }
    }
    let raw = QHalfScaled::new(v, q, -(a as i32));
    if !raw.is_unimodular()? {
        return Err(Error::ModulusMismatch);
    }
    let sq = raw.mul(&raw)?;
    let real = sq.halfpow == 0 && sq.cyc.as_integer() == Some(BigInt::one());
    if real {
        Ok(EpsilonValue::from_sign(certified_sign(&raw)?))
    } else {
        Ok(EpsilonValue {
            sign: None,
            raw: Some(raw),
        })
    }
}

pub fn epsilon_normalize(g: &CycInt, chi_c: &CycInt, a: u32, q: u64) -> Result<EpsilonValue> {
    epsilon_from_scaled(chi_c.mul(g)?, a, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3(k: u64) -> CycInt {
        CycInt::zeta_pow(3, k)
    }

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        assert_eq!(euler_phi(36), 12);
    }

    #[test]
    fn zeta3_relation() {
        assert_eq!(z3(1).add(&z3(2)).unwrap(), CycInt::from_int(3, -1));
    }

    #[test]
    fn root_times_inverse() {
        for m in [4u64, 9, 12, 24, 5832] {
            let a = CycInt::zeta_pow(m, 1);
            let b = CycInt::zeta_pow(m, m - 1);
            assert_eq!(a.mul(&b).unwrap(), CycInt::one(m));
        }
    }

    #[test]
    fn quadratic_gauss_sum_norm() {
        let g = z3(1).sub(&z3(2)).unwrap();
        assert_eq!(g.mul(&g.conj()).unwrap(), CycInt::from_int(3, 3));
    }

    #[test]
    fn mismatched_orders() {
        assert!(matches!(
            z3(1).add(&CycInt::one(4)),
            Err(Error::MismatchedOrder(3, 4))
        ));
    }

    #[test]
    fn exponents() {
        assert_eq!(CycInt::from_exponent(Phase::ZERO, 7).unwrap(), CycInt::one(7));
        assert_eq!(CycInt::from_exponent(Phase::new(1, 3), 3).unwrap(), z3(1));
        assert_eq!(
            CycInt::from_exponent(Phase::new(7, 9), 9).unwrap(),
            CycInt::zeta_pow(9, 7)
        );
        assert!(CycInt::from_exponent(Phase::new(1, 2), 9).is_err());
    }

    #[test]
    fn sqrt_embeddings_square_to_q() {
        for q in [2u64, 3, 5, 7] {
            let r = sqrt_q(q);
            assert_eq!(r.mul(&r).unwrap().as_integer(), Some(BigInt::from(q)));
            let (re, im, _) = r.to_complex();
            assert!((re - (q as f64).sqrt()).abs() < 1e-9 && im.abs() < 1e-9);
        }
    }

    #[test]
    fn signs() {
        let one = QHalfScaled::from_cyc(CycInt::one(4), 3);
        assert_eq!(certified_sign(&one).unwrap(), 1);
        assert_eq!(certified_sign(&one.scale_int(-1)).unwrap(), -1);
        let g = QHalfScaled::new(z3(1).sub(&z3(2)).unwrap(), 3, -1);
        assert!(matches!(certified_sign(&g), Err(Error::NotPlusMinusOne)));
        let two = QHalfScaled::from_cyc(CycInt::from_int(4, 2), 3);
        assert!(matches!(certified_sign(&two), Err(Error::NotUnimodular)));
    }

    #[test]
    fn odd_power_sign_through_square_root() {
        // i·(ζ_3 − ζ_3²) = −√3, so i·g·3^{-1/2} = −1.
        let m = 12;
        let g = CycInt::zeta_pow(m, 4).sub(&CycInt::zeta_pow(m, 8)).unwrap();
        let v = CycInt::zeta_pow(m, 3).mul(&g).unwrap();
        let e = epsilon_from_scaled(v, 1, 3).unwrap();
        assert_eq!(e.sign, Some(-1));
    }

    #[test]
    fn value_equality_across_parities() {
        let three = QHalfScaled::from_cyc(CycInt::from_int(12, 3), 3);
        let root = QHalfScaled::new(sqrt_q(3), 3, 1);
        assert!(three.value_eq(&root).unwrap());
        let neg = QHalfScaled::new(sqrt_q(3).scalar(&BigInt::from(-1)), 3, 1);
        assert!(!three.value_eq(&neg).unwrap());
    }

    #[test]
    fn normalize_even_power() {
        let v = CycInt::from_int(8, 9);
        let e = epsilon_normalize(&v, &CycInt::from_int(8, -1), 4, 3).unwrap();
        assert_eq!(e.sign, Some(-1));
        let bad = epsilon_normalize(&CycInt::from_int(8, 2), &CycInt::one(8), 2, 3);
        assert!(matches!(bad, Err(Error::ModulusMismatch)));
    }
}
