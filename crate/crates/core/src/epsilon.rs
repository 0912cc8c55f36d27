//! Gauss sums and local ε-factors of characters of `K*`, the ε-factor of `ω`, and
//! the independent cross-checks through Deligne's twisting formula.

use crate::characters::{CharSpace, MultChar};
use crate::cyclotomic::{epsilon_from_scaled, CycContext, CycInt, EpsilonValue, QHalfScaled};
use crate::error::{Error, Result};
use crate::groups::ResidueRing;
use crate::padic::{multiplier, AdditiveKind, KElem, QuadExt, TraceForm};
use crate::phase::Phase;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Unnormalized Gauss sum of one character together with its ε-factor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaussSumResult {
    pub chi: MultChar,
    /// `v_K(c)` for `c = π_K^{a(χ)+n}`.
    pub c_valuation: i64,
    /// `Σ χ^{-1}(y)·ψ(y/c)` over `U_K/U_K^{a(χ)}` (the value 1 when `a(χ) = 0`).
    pub raw: CycInt,
    pub eps: EpsilonValue,
}

fn residue_degree(ext: &QuadExt) -> u32 {
    if ext.is_ramified() {
        1
    } else {
        2
    }
}

fn additive_conductor(ext: &QuadExt, kind: AdditiveKind) -> i64 {
    match kind {
        AdditiveKind::Psi0 => ext.n_psi0 as i64,
        AdditiveKind::PsiK => ext.d as i64,
    }
}

/// Accumulated exponent counts for `χ^{-1}(y)ψ(y/c)` and `χ(y)ψ(y/c)`.
fn gauss_counts(space: &CharSpace, chi: &MultChar, form: &TraceForm) -> (Vec<i64>, Vec<i64>) {
    let m = space.root_order as usize;
    let mu = space.root_order;
    let add_scale = mu / form.modulus;
    let uw = space.unit_weights(&chi.unit);
    let rank = space.rank();
    let table = space.group.dlog_table();
    let full = &space.group.ring;
    let sub = ResidueRing::new(&space.ext, chi.conductor);
    let mut dir = vec![0i64; m];
    let mut inv = vec![0i64; m];
    for b0 in 0..sub.mod_b {
        for a0 in 0..sub.mod_a {
            let idx = (a0 + full.mod_a * b0) as usize;
            let cv = if rank == 0 {
                if !full.is_unit(idx as u64) {
                    continue;
                }
                0
            } else {
                let dl = &table[idx * rank..idx * rank + rank];
                if dl[0] == crate::groups::NOT_UNIT {
                    continue;
                }
                let mut acc = 0u64;
                for i in 0..rank {
                    acc += uw[i] * dl[i] as u64;
                }
                acc % mu
            };
            let av = form.numerator(a0, b0) * add_scale % mu;
            dir[((mu - cv + av) % mu) as usize] += 1;
            inv[((cv + av) % mu) as usize] += 1;
        }
    }
    (dir, inv)
}

fn rotate(counts: &[i64], by: u64) -> Vec<i64> {
    let m = counts.len();
    let mut out = vec![0i64; m];
    for (k, &c) in counts.iter().enumerate() {
        out[(k + by as usize) % m] = c;
    }
    out
}

/// ε from exponent counts of `Σ χ^{-1}(y)ψ(y/c)`, multiplied by `χ(c) = ζ^{shift}`.
fn eps_from_counts(space: &CharSpace, counts: &[i64], shift: u64, a: u32) -> Result<EpsilonValue> {
    let rotated = rotate(counts, shift);
    let ctx = CycContext::get(space.root_order);
    let exact = ctx.reduce_i64_exact(&rotated);
    // |V| = q^{a/2} is a rational integer when a is even or q is a square.
    let target = if space.ext.is_ramified() {
        a.is_multiple_of(2).then(|| (space.ext.p() as i128).pow(a / 2))
    } else {
        Some((space.ext.p() as i128).pow(a))
    };
    if let Some(t) = target {
        if exact[1..].iter().all(|&c| c == 0) {
            if exact[0] == t {
                return Ok(EpsilonValue::from_sign(1));
            }
            if exact[0] == -t {
                return Ok(EpsilonValue::from_sign(-1));
            }
        }
    }
    let v = CycInt {
        order: space.root_order,
        coeffs: exact.into_iter().map(BigInt::from).collect(),
    };
    // Exact values are always scaled by powers of sqrt(p); q_K = p^f.
    epsilon_from_scaled(v, a * residue_degree(&space.ext), space.ext.p())
}

/// ε-factors `(ε(χ,ψ), ε(χ^{-1},ψ))` computed from one pass over `U_K/U_K^{a(χ)}`.
pub fn epsilon_pair(
    space: &CharSpace,
    chi: &MultChar,
    kind: AdditiveKind,
) -> Result<(EpsilonValue, EpsilonValue)> {
    let ext = &space.ext;
    let a = chi.conductor;
    let n = additive_conductor(ext, kind);
    let v = a as i64 + n;
    let mu = space.root_order;
    let pi_units = chi.pi.in_units(mu)?;
    let shift_dir = (pi_units as i128 * v as i128).rem_euclid(mu as i128) as u64;
    let shift_inv = (mu - shift_dir) % mu;
    if a == 0 {
        let to_eps = |s: u64| -> EpsilonValue {
            match Phase::new(s as i128, mu).as_sign() {
                Some(sg) => EpsilonValue::from_sign(sg),
                None => EpsilonValue {
                    sign: None,
                    raw: Some(QHalfScaled::new(CycInt::zeta_pow(mu, s), ext.p(), 0)),
                },
            }
        };
        return Ok((to_eps(shift_dir), to_eps(shift_inv)));
    }
    if a > space.level() {
        return Err(Error::InsufficientPrecision(format!(
            "conductor {} exceeds space level {}",
            a,
            space.level()
        )));
    }
    let z = multiplier(ext, kind).mul(&ext.pi_pow(-v));
    let form = TraceForm::new(&z)?;
    if !mu.is_multiple_of(form.modulus) {
        return Err(Error::DenominatorMismatch {
            den: form.modulus,
            order: mu,
        });
    }
    let (dir, inv) = gauss_counts(space, chi, &form);
    Ok((
        eps_from_counts(space, &dir, shift_dir, a)?,
        eps_from_counts(space, &inv, shift_inv, a)?,
    ))
}

/// The Gauss sum of `χ` against `ψ₀` or `ψ_K`, with its normalized ε-factor.
pub fn gauss_sum(space: &CharSpace, chi: &MultChar, kind: AdditiveKind) -> Result<GaussSumResult> {
    let ext = &space.ext;
    let a = chi.conductor;
    let v = a as i64 + additive_conductor(ext, kind);
    let mu = space.root_order;
    let (eps, _) = epsilon_pair(space, chi, kind)?;
    let raw = if a == 0 {
        CycInt::one(mu)
    } else {
        let z = multiplier(ext, kind).mul(&ext.pi_pow(-v));
        let form = TraceForm::new(&z)?;
        let (dir, _) = gauss_counts(space, chi, &form);
        CycInt::from_counts(mu, &dir)
    };
    if a >= 1 {
        let norm = raw.mul(&raw.conj())?;
        let want = BigInt::from(ext.q_k()).pow(a);
        if norm.as_integer() != Some(want) {
            return Err(Error::ModulusMismatch);
        }
    }
    Ok(GaussSumResult {
        chi: chi.clone(),
        c_valuation: v,
        raw,
        eps,
    })
}

/// ε(χ, ψ₀) with `c` replaced by `c·u`, evaluated straight from the definition.
pub fn epsilon_with_unit(space: &CharSpace, chi: &MultChar, u: &KElem) -> Result<EpsilonValue> {
    let ext = &space.ext;
    let a = chi.conductor;
    let v = a as i64 + ext.n_psi0 as i64;
    let c = ext.pi_pow(v).mul(u);
    let mu = space.root_order;
    let cinv = c.inverse()?;
    let sub = ResidueRing::new(ext, a);
    let mut counts = vec![0i64; mu as usize];
    let inv_chi = space.inv(chi);
    if a == 0 {
        let s = space.eval(chi, &c)?.in_units(mu)?;
        return Ok(match Phase::new(s as i128, mu).as_sign() {
            Some(sg) => EpsilonValue::from_sign(sg),
            None => EpsilonValue {
                sign: None,
                raw: Some(QHalfScaled::new(CycInt::zeta_pow(mu, s), ext.p(), 0)),
            },
        });
    }
    for y_idx in sub.units() {
        let y = sub.to_kelem(ext, y_idx);
        let val = space
            .eval(&inv_chi, &y)?
            .add(&crate::padic::psi0_eval(ext, &y.mul(&cinv))?);
        counts[val.in_units(mu)? as usize] += 1;
    }
    let shift = space.eval(chi, &c)?.in_units(mu)?;
    eps_from_counts(space, &counts, shift, a)
}

/// ε-factors of every character in the restriction set, in canonical order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsTable {
    pub chars: Vec<MultChar>,
    /// `ε(χ, ψ₀)`.
    pub eps_chi: Vec<i8>,
    /// `ε(χ^{-1}, ψ₀)`.
    pub eps_inv: Vec<i8>,
    #[serde(skip)]
    index: HashMap<(Vec<u32>, Phase), usize>,
}

impl EpsTable {
    pub fn compute(space: &CharSpace) -> Result<EpsTable> {
        let chars = space.omega_set()?;
        let pairs: Vec<(i8, i8)> = chars
            .par_iter()
            .map(|chi| -> Result<(i8, i8)> {
                let (e, ei) = epsilon_pair(space, chi, AdditiveKind::Psi0)?;
                Ok((e.require_sign()?, ei.require_sign()?))
            })
            .collect::<Result<Vec<_>>>()?;
        let (eps_chi, eps_inv) = pairs.into_iter().unzip();
        Ok(EpsTable::from_parts(chars, eps_chi, eps_inv))
    }

    pub fn from_parts(chars: Vec<MultChar>, eps_chi: Vec<i8>, eps_inv: Vec<i8>) -> EpsTable {
        let index = chars
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.unit.clone(), c.pi), i))
            .collect();
        EpsTable {
            chars,
            eps_chi,
            eps_inv,
            index,
        }
    }

    pub fn rebuild_index(&mut self) {
        self.index = self
            .chars
            .iter()
            .enumerate()
            .map(|(i, c)| ((c.unit.clone(), c.pi), i))
            .collect();
    }

    pub fn position(&self, chi: &MultChar) -> Option<usize> {
        self.index.get(&(chi.unit.clone(), chi.pi)).copied()
    }

    /// The S-label sign `ε(χ^{-1}, ψ₀)`.
    pub fn sign_inv(&self, chi: &MultChar) -> Result<i8> {
        self.position(chi)
            .map(|i| self.eps_inv[i])
            .ok_or_else(|| Error::RestrictionViolated(chi.encode()))
    }

    pub fn sign_chi(&self, chi: &MultChar) -> Result<i8> {
        self.position(chi)
            .map(|i| self.eps_chi[i])
            .ok_or_else(|| Error::RestrictionViolated(chi.encode()))
    }

    /// Mutation hook for harness tests: flip one stored sign.
    pub fn flip_sign(&mut self, i: usize) {
        self.eps_inv[i] = -self.eps_inv[i];
    }
}

/// `ε(ω, ψ)` together with the square identities it is expected to satisfy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsOmega {
    pub value: QHalfScaled,
    pub unimodular: bool,
    /// `ε(ω,ψ)² = 1`.
    pub square_is_one: bool,
    /// `ω(−1)·ε(ω,ψ)² = 1`.
    pub twisted_square_is_one: bool,
    pub omega_minus_one: i8,
}

impl EpsOmega {
    /// The identity stated for the parity of `d`.
    pub fn expected_identity_holds(&self, d: u32) -> bool {
        if d % 2 == 1 {
            self.square_is_one
        } else {
            self.twisted_square_is_one
        }
    }
}

pub fn epsilon_omega(space: &CharSpace) -> Result<EpsOmega> {
    let ext = &space.ext;
    let omega = &space.omega;
    if !ext.is_ramified() {
        // a(ω) = n(ψ) = 0, so c = 1 and the sum is empty.
        return Ok(EpsOmega {
            value: QHalfScaled::new(CycInt::one(2), ext.p(), 0),
            unimodular: true,
            square_is_one: true,
            twisted_square_is_one: omega.at_minus_one == 1,
            omega_minus_one: omega.at_minus_one,
        });
    }
    let d = ext.d;
    let p = ext.p();
    let pd = p.pow(d);
    let mu = num_integer::lcm(2 * pd, 4);
    // ψ(y/π_F^d) with π_F = p·u_f, i.e. the phase (y·u_f^{-d} mod p^d)/p^d.
    let u_f = (ext.pi_f_int / p as i64).rem_euclid(pd as i64) as u64;
    let uinv = crate::padic::inv_mod(u_f as i128, pd as i128)
        .ok_or_else(|| Error::Invariant("pi_F / p is not a unit".into()))? as u64;
    let uinv_d = crate::groups::pow_mod(uinv, d as u64, pd);
    let mut counts = vec![0i64; mu as usize];
    for y in 1..pd {
        if y % p == 0 {
            continue;
        }
        let w = if omega.eval_unit(y as i128) == 1 { 0 } else { mu / 2 };
        let add = (y as u128 * uinv_d as u128 % pd as u128) as u64 * (mu / pd);
        counts[((w + add) % mu) as usize] += 1;
    }
    let sign_pi = if omega.at_pi_f == -1 && d % 2 == 1 { -1 } else { 1 };
    let g = CycInt::from_counts(mu, &counts).scalar(&BigInt::from(sign_pi));
    let value = QHalfScaled::new(g, p, -(d as i32));
    let unimodular = value.is_unimodular()?;
    let sq = value.mul(&value)?;
    let one = QHalfScaled::new(CycInt::one(mu), p, 0);
    let square_is_one = sq.value_eq(&one)?;
    let twisted = sq.scale_int(omega.at_minus_one as i64);
    let twisted_square_is_one = twisted.value_eq(&one)?;
    Ok(EpsOmega {
        value,
        unimodular,
        square_is_one,
        twisted_square_is_one,
        omega_minus_one: omega.at_minus_one,
    })
}

/// The element `y_α` with `α(1+x) = ψ(y_α x)` for `v(x) ≥ a(α)/2`.
#[derive(Clone, Debug)]
pub struct YAlpha {
    /// `v_K(y_α) = −a(α) − n(ψ)`.
    pub valuation: i64,
    /// `y_α·π_K^{-valuation}`, determined modulo `U_K^{⌊a/2⌋}`.
    pub unit: KElem,
}

impl YAlpha {
    pub fn elem(&self, ext: &QuadExt) -> KElem {
        self.unit.mul(&ext.pi_pow(self.valuation))
    }
}

pub fn find_y(space: &CharSpace, alpha: &MultChar, kind: AdditiveKind) -> Result<YAlpha> {
    let ext = &space.ext;
    let a = alpha.conductor;
    let n = additive_conductor(ext, kind);
    let valuation = -(a as i64) - n;
    if a == 0 {
        return Ok(YAlpha {
            valuation,
            unit: ext.int(1),
        });
    }
    let h = a.div_ceil(2);
    let pi_h = ext.pi_pow(h as i64);
    let w = KElem::gen(ext.ring);
    let gens = [pi_h, pi_h.mul(&w)];
    let mut targets = Vec::new();
    let mut forms = Vec::new();
    for x in &gens {
        let one_plus = ext.int(1).add(x);
        targets.push(space.eval(alpha, &one_plus)?);
        let z = multiplier(ext, kind).mul(&ext.pi_pow(valuation)).mul(x);
        forms.push(TraceForm::new(&z)?);
    }
    let sub = ResidueRing::new(ext, a - h);
    let candidates: Vec<u64> = if a - h == 0 {
        vec![0]
    } else {
        sub.units().collect()
    };
    let mut found: Vec<KElem> = Vec::new();
    for u in candidates {
        let (ua, ub) = if a - h == 0 { (1, 0) } else { sub.coords(u) };
        let ok = forms
            .iter()
            .zip(&targets)
            .all(|(f, t)| f.phase(ua, ub) == *t);
        if ok {
            found.push(ext.elem(ua as i64, ub as i64));
        }
    }
    match found.len() {
        1 => Ok(YAlpha {
            valuation,
            unit: found[0],
        }),
        k => Err(Error::Invariant(format!(
            "y_alpha search for {} found {} solutions",
            alpha.encode(),
            k
        ))),
    }
}

/// Outcome of one Deligne twisting comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeligneOutcome {
    pub alpha: String,
    pub beta: String,
    pub agree: bool,
}

/// `ε(αβ, ψ₀) = β^{-1}(y_α)·ε(α, ψ₀)` for `α` in the restriction set and `β`
/// trivial on `F*`, with both sides read from `table`.
pub fn deligne_check(
    space: &CharSpace,
    table: &EpsTable,
    alpha: &MultChar,
    y_alpha: &YAlpha,
    beta: &MultChar,
) -> Result<DeligneOutcome> {
    if alpha.conductor < 2 * beta.conductor {
        return Err(Error::Hypothesis(format!(
            "a(alpha) = {} < 2 a(beta) = {}",
            alpha.conductor,
            2 * beta.conductor
        )));
    }
    let ab = space.mul(alpha, beta);
    let lhs = Phase::from_sign(table.sign_chi(&ab)?);
    let b_inv_y = space
        .eval(beta, &y_alpha.unit)?
        .add(&beta.pi.scale(y_alpha.valuation))
        .neg();
    let rhs = b_inv_y.add(&Phase::from_sign(table.sign_chi(alpha)?));
    Ok(DeligneOutcome {
        alpha: alpha.encode(),
        beta: beta.encode(),
        agree: lhs == rhs,
    })
}

/// The same comparison for arbitrary `β`, with both ε-factors computed as exact values.
pub fn deligne_check_general(
    space: &CharSpace,
    alpha: &MultChar,
    eps_alpha: &EpsilonValue,
    y_alpha: &YAlpha,
    beta: &MultChar,
) -> Result<DeligneOutcome> {
    if alpha.conductor < 2 * beta.conductor {
        return Err(Error::Hypothesis("a(alpha) < 2 a(beta)".into()));
    }
    let mu = space.root_order;
    let q = space.ext.p();
    let ab = space.mul(alpha, beta);
    let (e_ab, _) = epsilon_pair(space, &ab, AdditiveKind::Psi0)?;
    let b_inv_y = space
        .eval(beta, &y_alpha.unit)?
        .add(&beta.pi.scale(y_alpha.valuation))
        .neg();
    let twist = QHalfScaled::new(CycInt::from_exponent(b_inv_y, mu)?, q, 0);
    let rhs = twist.mul(&eps_alpha.value(mu, q))?;
    Ok(DeligneOutcome {
        alpha: alpha.encode(),
        beta: beta.encode(),
        agree: e_ab.value(mu, q).value_eq(&rhs)?,
    })
}

/// Check `ε(χ,ψ₀) = ω̃(−x₀/2)·ω̃^{-1}(y)` where `(χω̃^{-1})(1+x) = ψ_K(yx)`.
pub fn eq1_check(
    space: &CharSpace,
    table: &EpsTable,
    chi: &MultChar,
    omega_tilde: &MultChar,
) -> Result<bool> {
    if chi.conductor < 2 * omega_tilde.conductor {
        return Err(Error::Hypothesis("a(chi) < 2 a(omega~)".into()));
    }
    let ext = &space.ext;
    let alpha = space.mul(chi, &space.inv(omega_tilde));
    let y = find_y(space, &alpha, AdditiveKind::PsiK)?;
    let minus_half_x0 = multiplier(ext, AdditiveKind::Psi0);
    let first = space.eval(omega_tilde, &minus_half_x0)?;
    let second = space
        .eval(omega_tilde, &y.unit)?
        .add(&omega_tilde.pi.scale(y.valuation))
        .neg();
    let rhs = first.add(&second);
    Ok(Phase::from_sign(table.sign_chi(chi)?) == rhs)
}
