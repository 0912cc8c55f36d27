//! The additive characters `ψ` of `Q_p`, `ψ_K = ψ∘tr` and `ψ₀(x) = ψ(tr(−x·x₀/2))`.
//!
//! Values are returned as exponents in `Q/Z` whose denominators are powers of `p`.

use super::elem::{ipow, KElem};
use super::ext::QuadExt;
use crate::error::{Error, Result};
use crate::phase::Phase;

/// Value `e^{2πi·exponent}` of an additive character.
pub type AdditiveCharValue = Phase;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdditiveKind {
    /// `ψ₀(x) = ψ(tr(−x·x₀/2))`.
    Psi0,
    /// `ψ_K(x) = ψ(tr(x))`.
    PsiK,
}

/// The fractional part `λ(x)` of a base-field element.
pub fn psi_frac(x: &KElem) -> Result<AdditiveCharValue> {
    if x.is_zero() {
        if x.abs_precision() < 0 {
            return Err(Error::InsufficientPrecision(
                "negative digits of zero unknown".into(),
            ));
        }
        return Ok(Phase::ZERO);
    }
    if !x.is_base() {
        return Err(Error::Hypothesis(format!("{x} is not in the base field")));
    }
    let (shift, a, _, _) = x.parts();
    if shift >= 0 {
        return Ok(Phase::ZERO);
    }
    if x.abs_precision() < 0 {
        return Err(Error::InsufficientPrecision(format!(
            "{x} lacks its negative-valuation digits"
        )));
    }
    let k = (-shift) as u32;
    let m = ipow(x.ring().p, k);
    Ok(Phase::new(a.rem_euclid(m), m as u64))
}

/// The multiplier `z` with `χ_add(x) = ψ(tr(x·z))`.
pub fn multiplier(ext: &QuadExt, kind: AdditiveKind) -> KElem {
    match kind {
        AdditiveKind::PsiK => ext.int(1),
        AdditiveKind::Psi0 => ext
            .x0
            .neg()
            .div(&ext.int(2))
            .expect("2 is invertible in K"),
    }
}

pub fn psi0_eval(ext: &QuadExt, x: &KElem) -> Result<AdditiveCharValue> {
    psi_frac(&x.mul(&multiplier(ext, AdditiveKind::Psi0)).trace())
}

pub fn psi_k_eval(_ext: &QuadExt, x: &KElem) -> Result<AdditiveCharValue> {
    psi_frac(&x.trace())
}

pub fn additive_eval(ext: &QuadExt, kind: AdditiveKind, x: &KElem) -> Result<AdditiveCharValue> {
    match kind {
        AdditiveKind::Psi0 => psi0_eval(ext, x),
        AdditiveKind::PsiK => psi_k_eval(ext, x),
    }
}

/// Largest `n` such that the additive character is trivial on `P_K^{-n}`,
/// found by testing the `Z_p`-generators `π_K^{-n}` and `π_K^{-n}·ω`.
pub fn conductor_by_scan(ext: &QuadExt, kind: AdditiveKind) -> i32 {
    let w = KElem::gen(ext.ring);
    let trivial_on = |n: i32| -> bool {
        let g = ext.pi_pow(-(n as i64));
        [g, g.mul(&w)].iter().all(|y| {
            additive_eval(ext, kind, y)
                .map(|v| v.is_zero())
                .unwrap_or(false)
        })
    };
    let mut n = -8;
    while !trivial_on(n) {
        n -= 8;
    }
    while trivial_on(n + 1) {
        n += 1;
        assert!(n < 64, "additive character trivial on too large an ideal");
    }
    n
}

pub fn psi0_conductor(ext: &QuadExt) -> i32 {
    conductor_by_scan(ext, AdditiveKind::Psi0)
}

/// The linear functional `a + bω ↦ λ(tr((a + bω)·z))` on `Z_p`-coordinates,
/// written as `(a·ca + b·cb mod p^D) / p^D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceForm {
    pub den_exp: u32,
    pub modulus: u64,
    pub ca: u64,
    pub cb: u64,
}

impl TraceForm {
    pub fn new(z: &KElem) -> Result<TraceForm> {
        let alpha = z.trace();
        let beta = z.mul(&KElem::gen(z.ring())).trace();
        let depth = |x: &KElem| -> i64 {
            if x.is_zero() {
                0
            } else {
                (-x.parts().0).max(0)
            }
        };
        let den_exp = depth(&alpha).max(depth(&beta)) as u32;
        let modulus = ipow(z.ring().p, den_exp);
        let coeff = |x: &KElem| -> Result<u64> {
            if x.abs_precision() < 0 {
                return Err(Error::InsufficientPrecision("trace form".into()));
            }
            if x.is_zero() {
                return Ok(0);
            }
            let (shift, a, _, _) = x.parts();
            let scaled = shift + den_exp as i64;
            if scaled >= den_exp as i64 {
                return Ok(0);
            }
            Ok(((a % modulus) * ipow(z.ring().p, scaled as u32) % modulus) as u64)
        };
        Ok(TraceForm {
            den_exp,
            modulus: modulus as u64,
            ca: coeff(&alpha)?,
            cb: coeff(&beta)?,
        })
    }

    /// Numerator of the phase at integer coordinates `(a, b)`.
    #[inline]
    pub fn numerator(&self, a: u64, b: u64) -> u64 {
        let m = self.modulus as u128;
        ((a as u128 * self.ca as u128 + b as u128 * self.cb as u128) % m) as u64
    }

    pub fn phase(&self, a: u64, b: u64) -> Phase {
        Phase::new(self.numerator(a, b) as i128, self.modulus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::make_extension;

    #[test]
    fn fractional_parts() {
        let e = make_extension(3, "sqrt-pi").unwrap();
        let x = KElem::from_rational(e.ring, 1, 3).unwrap();
        assert_eq!(psi_frac(&x).unwrap(), Phase::new(1, 3));
        assert_eq!(psi_frac(&e.int(7)).unwrap(), Phase::ZERO);
        let y = KElem::from_rational(e.ring, 1, 9)
            .unwrap()
            .add(&KElem::from_rational(e.ring, 2, 3).unwrap());
        assert_eq!(psi_frac(&y).unwrap(), Phase::new(7, 9));
    }

    #[test]
    fn psi0_examples_r3() {
        let e = make_extension(3, "sqrt-pi").unwrap();
        assert_eq!(psi0_eval(&e, &e.pi_pow(-3)).unwrap(), Phase::new(2, 3));
        assert_eq!(psi0_eval(&e, &e.pi_pow(-2)).unwrap(), Phase::ZERO);
        let c = KElem::from_rational(e.ring, 5, 27).unwrap();
        assert_eq!(psi0_eval(&e, &c).unwrap(), Phase::ZERO);
        assert_eq!(psi0_conductor(&e), 2);
    }

    #[test]
    fn psi0_conductors_p2() {
        assert_eq!(psi0_conductor(&make_extension(2, "sqrt(-1)").unwrap()), 0);
        assert_eq!(psi0_conductor(&make_extension(2, "sqrt(2)").unwrap()), 2);
        let u2 = make_extension(2, "unramified").unwrap();
        // x0 is a unit and 1/2 is not integral, so ψ₀ is already nontrivial on O_K.
        assert_eq!(psi0_conductor(&u2), -1);
    }

    #[test]
    fn trace_form_matches_direct_evaluation() {
        let e = make_extension(2, "sqrt(2)").unwrap();
        let z = multiplier(&e, AdditiveKind::Psi0).mul(&e.pi_pow(-7));
        let form = TraceForm::new(&z).unwrap();
        for a in 0..16i64 {
            for b in 0..16i64 {
                let y = e.elem(a, b);
                let direct = psi_frac(&y.mul(&z).trace()).unwrap();
                assert_eq!(form.phase(a as u64, b as u64), direct);
            }
        }
    }
}
