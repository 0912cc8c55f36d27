//! The catalog of quadratic extensions of `Q_p` and their structure constants.

use super::additive::{conductor_by_scan, AdditiveKind};
use super::elem::{ipow, precision_cap, KElem, Ring};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `Q_p` together with the working precision of its elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeField {
    pub p: u64,
    pub default_precision: u32,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<PrimeField> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField {
            p,
            default_precision: precision_cap(p as i64),
        })
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= p {
        if p.is_multiple_of(k) {
            return false;
        }
        k += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtKind {
    Unramified,
    Ramified,
}

/// A quadratic extension `K/Q_p` with the normalizations used throughout the crate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadExt {
    pub base: PrimeField,
    /// Canonical catalog tag.
    pub tag: String,
    pub kind: ExtKind,
    /// Differential exponent.
    pub d: u32,
    /// `v_F(2)`.
    pub t: u32,
    /// Eisenstein exponent `s` and unit `u′` (only for even `d`).
    pub s: Option<u32>,
    pub u_prime: Option<i64>,
    pub ring: Ring,
    pub pi_k: KElem,
    pub pi_f: KElem,
    /// The integer representing `π_F`.
    pub pi_f_int: i64,
    pub x0: KElem,
    pub n_psi0: i32,
}

/// Smallest positive quadratic nonresidue modulo an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&a| legendre(a, p) == -1).expect("odd prime has a nonresidue")
}

fn legendre(a: u64, p: u64) -> i64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else if r == 0 {
        0
    } else {
        -1
    }
}

/// Square class of the integer `k` in `Q_p*`, written as a catalog tag.
fn square_class_tag(p: u64, k: i64) -> Result<String> {
    let bad = || Error::UnknownTag(format!("sqrt({k})"), p);
    if k == 0 {
        return Err(bad());
    }
    let mut v = 0;
    let mut u = k;
    while u % p as i64 == 0 {
        u /= p as i64;
        v += 1;
    }
    if p == 2 {
        let r = u.rem_euclid(8);
        let tag = match (v % 2, r) {
            (0, 1) => return Err(bad()),
            (0, 3) => "sqrt(3)",
            (0, 5) => "sqrt(5)",
            (0, 7) => "sqrt(-1)",
            (1, 1) => "sqrt(2)",
            (1, 3) => "sqrt(6)",
            (1, 5) => "sqrt(10)",
            (1, 7) => "sqrt(-2)",
            _ => unreachable!(),
        };
        Ok(tag.to_string())
    } else {
        let res = legendre(u.rem_euclid(p as i64) as u64, p) == 1;
        let tag = match (v % 2, res) {
            (0, true) => return Err(bad()),
            (0, false) => "unramified",
            (1, true) => "sqrt-pi",
            (1, false) => "sqrt-u-pi",
            _ => unreachable!(),
        };
        Ok(tag.to_string())
    }
}

fn canonical_tag(p: u64, tag: &str) -> Result<String> {
    let t = tag.trim();
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let k: i64 = inner
            .trim()
            .parse()
            .map_err(|_| Error::UnknownTag(tag.to_string(), p))?;
        return square_class_tag(p, k);
    }
    match (p, t) {
        (2, "unramified") => Ok("sqrt(5)".into()),
        (2, _) => Err(Error::UnknownTag(tag.to_string(), p)),
        (_, "unramified" | "sqrt-pi" | "sqrt-u-pi") => Ok(t.to_string()),
        _ => Err(Error::UnknownTag(tag.to_string(), p)),
    }
}

/// Every canonical tag available over `Q_p`.
pub fn catalog_tags(p: u64) -> Vec<&'static str> {
    if p == 2 {
        vec![
            "sqrt(-1)", "sqrt(3)", "sqrt(5)", "sqrt(2)", "sqrt(-2)", "sqrt(6)", "sqrt(10)",
        ]
    } else {
        vec!["unramified", "sqrt-pi", "sqrt-u-pi"]
    }
}

/// Build and validate a catalog extension.
pub fn make_extension(p: u64, tag: &str) -> Result<QuadExt> {
    let base = PrimeField::new(p)?;
    let tag = canonical_tag(p, tag)?;
    let pi = p as i64;
    let ext = if p == 2 {
        match tag.as_str() {
            "sqrt(5)" => {
                let ring = Ring::new(2, -1, 1, false);
                let rho = KElem::gen(ring);
                let two = KElem::from_int(ring, 2);
                QuadExt {
                    base,
                    tag,
                    kind: ExtKind::Unramified,
                    d: 0,
                    t: 1,
                    s: None,
                    u_prime: None,
                    ring,
                    pi_k: two,
                    pi_f: two,
                    pi_f_int: 2,
                    x0: KElem::one(ring).add(&two.mul(&rho)),
                    n_psi0: 0,
                }
            }
            "sqrt(-1)" | "sqrt(3)" => {
                // ω = π_K = 1 + √k is a root of X² − 2X + (1 − k).
                let k: i64 = if tag == "sqrt(-1)" { -1 } else { 3 };
                let ring = Ring::new(2, 2, 1 - k, true);
                let pi_k = KElem::gen(ring);
                let (pi_f_int, u_prime) = if k == -1 { (-2, -1) } else { (2, 1) };
                QuadExt {
                    base,
                    tag,
                    kind: ExtKind::Ramified,
                    d: 2,
                    t: 1,
                    s: Some(1),
                    u_prime: Some(u_prime),
                    ring,
                    pi_k,
                    pi_f: KElem::from_int(ring, pi_f_int),
                    pi_f_int,
                    x0: pi_k.sub(&KElem::one(ring)),
                    n_psi0: 0,
                }
            }
            _ => {
                let u0: i64 = match tag.as_str() {
                    "sqrt(2)" => 1,
                    "sqrt(-2)" => -1,
                    "sqrt(6)" => 3,
                    "sqrt(10)" => 5,
                    _ => unreachable!(),
                };
                let ring = Ring::new(2, 0, -2 * u0, true);
                let pi_k = KElem::gen(ring);
                QuadExt {
                    base,
                    tag,
                    kind: ExtKind::Ramified,
                    d: 3,
                    t: 1,
                    s: None,
                    u_prime: None,
                    ring,
                    pi_k,
                    pi_f: KElem::from_int(ring, 2 * u0),
                    pi_f_int: 2 * u0,
                    x0: pi_k,
                    n_psi0: 0,
                }
            }
        }
    } else {
        let nu = least_nonresidue(p) as i64;
        match tag.as_str() {
            "unramified" => {
                let ring = Ring::new(pi, 0, -nu, false);
                let pf = KElem::from_int(ring, pi);
                QuadExt {
                    base,
                    tag,
                    kind: ExtKind::Unramified,
                    d: 0,
                    t: 0,
                    s: None,
                    u_prime: None,
                    ring,
                    pi_k: pf,
                    pi_f: pf,
                    pi_f_int: pi,
                    x0: KElem::gen(ring),
                    n_psi0: 0,
                }
            }
            _ => {
                let pf_int = if tag == "sqrt-pi" { pi } else { nu * pi };
                let ring = Ring::new(pi, 0, -pf_int, true);
                let pi_k = KElem::gen(ring);
                QuadExt {
                    base,
                    tag,
                    kind: ExtKind::Ramified,
                    d: 1,
                    t: 0,
                    s: None,
                    u_prime: None,
                    ring,
                    pi_k,
                    pi_f: KElem::from_int(ring, pf_int),
                    pi_f_int: pf_int,
                    x0: pi_k,
                    n_psi0: 0,
                }
            }
        }
    };
    ext.finish()
}

impl QuadExt {
    pub fn p(&self) -> u64 {
        self.base.p
    }

    pub fn is_ramified(&self) -> bool {
        self.kind == ExtKind::Ramified
    }

    /// Ramification index.
    pub fn e(&self) -> u32 {
        if self.is_ramified() {
            2
        } else {
            1
        }
    }

    /// Residue size of `F`.
    pub fn q(&self) -> u64 {
        self.base.p
    }

    /// Residue size of `K`.
    pub fn q_k(&self) -> u64 {
        if self.is_ramified() {
            self.base.p
        } else {
            self.base.p * self.base.p
        }
    }

    pub fn elem(&self, a: i64, b: i64) -> KElem {
        KElem::from_coords(self.ring, a, b)
    }

    pub fn int(&self, a: i64) -> KElem {
        KElem::from_int(self.ring, a)
    }

    /// `π_K^k`.
    pub fn pi_pow(&self, k: i64) -> KElem {
        self.pi_k.pow(k).expect("uniformizer is invertible")
    }

    /// The same extension with `x₀` replaced by `c·x₀` for a nonzero `c ∈ Q_p`.
    pub fn with_x0_scaled(&self, c: i64) -> Result<QuadExt> {
        if c == 0 {
            return Err(Error::Config("x0 scale must be nonzero".into()));
        }
        let mut e = self.clone();
        e.x0 = self.x0.mul(&self.int(c));
        e.n_psi0 = conductor_by_scan(&e, AdditiveKind::Psi0);
        Ok(e)
    }

    fn finish(mut self) -> Result<QuadExt> {
        self.n_psi0 = conductor_by_scan(&self, AdditiveKind::Psi0);
        self.validate()?;
        Ok(self)
    }

    /// Check the structural identities satisfied by every catalog entry.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::Invariant(format!("{}: {}", self.tag, what)));
        let p2 = self.base.p == 2;
        if self.t != if p2 { 1 } else { 0 } {
            return fail("t differs from v(2)");
        }
        if !self.x0.trace().is_zero() {
            return fail("tr(x0) != 0");
        }
        if !self.x0.conj().eq_to_precision(&self.x0.neg()) {
            return fail("conj(x0) != -x0");
        }
        let d_scan = conductor_by_scan(self, AdditiveKind::PsiK);
        if d_scan != self.d as i32 {
            return fail("differential exponent disagrees with trace scan");
        }
        match self.kind {
            ExtKind::Unramified => {
                if !self.pi_k.eq_to_precision(&self.pi_f) {
                    return fail("pi_K != pi_F");
                }
                if self.pi_f.valuation()? != 1 {
                    return fail("pi_F is not a uniformizer");
                }
            }
            ExtKind::Ramified => {
                if self.pi_k.valuation()? != 1 || self.pi_f.valuation()? != 2 {
                    return fail("uniformizer valuations");
                }
                if !self.pi_k.norm().eq_to_precision(&self.pi_f.neg()) {
                    return fail("N(pi_K) != -pi_F");
                }
                let expected_n = if self.d % 2 == 1 {
                    if !self.pi_k.trace().is_zero() {
                        return fail("tr(pi_K) != 0");
                    }
                    if !self.pi_k.mul(&self.pi_k).eq_to_precision(&self.pi_f) {
                        return fail("pi_K^2 != pi_F");
                    }
                    2
                } else {
                    let s = self.s.ok_or_else(|| Error::Invariant("missing s".into()))?;
                    let u = self
                        .u_prime
                        .ok_or_else(|| Error::Invariant("missing u'".into()))?;
                    if s > self.t {
                        return fail("s > t");
                    }
                    let coeff = self.int(u).mul(&self.pi_f.pow(s as i64)?);
                    let x = self.pi_k;
                    let lhs = x.mul(&x).sub(&coeff.mul(&x)).sub(&self.pi_f);
                    if !lhs.is_zero() {
                        return fail("Eisenstein relation");
                    }
                    if self.x0.valuation()? != 0 {
                        return fail("x0 not a unit");
                    }
                    let half = coeff.div(&self.int(2))?;
                    let rebuilt = half.mul(&KElem::one(self.ring).add(&self.x0));
                    if !rebuilt.eq_to_precision(&self.pi_k) {
                        return fail("pi_K != (pi_F^s u'/2)(1+x0)");
                    }
                    2 * (s as i32 - self.t as i32)
                };
                if self.n_psi0 != expected_n {
                    return fail("conductor of psi0 disagrees with closed form");
                }
            }
        }
        if self.is_ramified() && self.n_psi0 % 2 != 0 {
            return fail("conductor of psi0 is odd");
        }
        Ok(())
    }

    /// `p^k` as an integer.
    pub fn p_pow(&self, k: u32) -> i128 {
        ipow(self.base.p as i64, k)
    }

    /// Fixed convention strings echoed into reports.
    pub fn conventions(&self) -> Conventions {
        Conventions {
            generator: {
                let (t, n) = (self.ring.gen_trace, -self.ring.gen_norm);
                match (t, n < 0) {
                    (0, _) => format!("w^2 = {n}"),
                    (_, false) => format!("w^2 = {t}*w + {n}"),
                    (_, true) => format!("w^2 = {t}*w - {}", -n),
                }
            },
            pi_k: format!("{}", self.pi_k),
            pi_f: self.pi_f_int,
            x0: format!("{}", self.x0),
            c_normalization: "c = pi_K^(a + n(psi0))".into(),
            s_convention: "S: eps(chi^-1, psi0) = +1".into(),
            n_psi0: self.n_psi0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub generator: String,
    pub pi_k: String,
    pub pi_f: i64,
    pub x0: String,
    pub c_normalization: String,
    pub s_convention: String,
    pub n_psi0: i32,
}
