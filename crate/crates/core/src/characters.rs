//! Characters of `K*/U_K^n`, the quadratic character `ω` of `F*`, and the
//! operations (conjugation, ratio `θ/θ̄`, conductors) used by the census.

use crate::cyclotomic::CycInt;
use crate::error::{Error, Result};
use crate::groups::{f_unit_generators, NormSubgroup, SubgroupImage, UnitQuotient};
use crate::padic::{multiplier, AdditiveKind, KElem, QuadExt, TraceForm};
use crate::phase::Phase;
use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A character of `K*` trivial on `U_K^level`.
///
/// `unit[i]` is the exponent `e_i` with `χ(g_i) = e^{2πi·e_i/ord_i}`, and `pi` is the
/// exponent of `χ(π_K)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultChar {
    pub level: u32,
    pub unit: Vec<u32>,
    pub pi: Phase,
    pub conductor: u32,
}

impl MultChar {
    /// Canonical text form `n<level>:u<e1>.<e2>...:pi<num>/<den>`.
    pub fn encode(&self) -> String {
        let u: Vec<String> = self.unit.iter().map(|e| e.to_string()).collect();
        format!("n{}:u{}:pi{}", self.level, u.join("."), self.pi)
    }

    /// Parse the canonical form (conductor is filled in by [`CharSpace::parse`]).
    pub fn decode(s: &str) -> Result<(u32, Vec<u32>, Phase)> {
        let bad = || Error::BadEncoding(s.to_string());
        let mut parts = s.trim().split(':');
        let lv = parts
            .next()
            .and_then(|x| x.strip_prefix('n'))
            .ok_or_else(bad)?;
        let u = parts
            .next()
            .and_then(|x| x.strip_prefix('u'))
            .ok_or_else(bad)?;
        let pi = parts
            .next()
            .and_then(|x| x.strip_prefix("pi"))
            .ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        let level: u32 = lv.parse().map_err(|_| bad())?;
        let unit = if u.is_empty() {
            Vec::new()
        } else {
            u.split('.')
                .map(|e| e.parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?
        };
        Ok((level, unit, pi.parse().map_err(|_| bad())?))
    }

    pub fn is_unit_trivial(&self) -> bool {
        self.unit.iter().all(|&e| e == 0)
    }

    pub fn is_trivial(&self) -> bool {
        self.is_unit_trivial() && self.pi.is_zero()
    }
}

impl fmt::Debug for MultChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[a={}]", self.encode(), self.conductor)
    }
}

impl fmt::Display for MultChar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// `ω`, the quadratic character of `F*` with kernel `N(K*)`, tabulated on `U_F/U_F^m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaChar {
    pub norms: NormSubgroup,
    pub conductor: u32,
    pub at_pi_f: i8,
    pub at_p: i8,
    pub at_minus_one: i8,
}

impl OmegaChar {
    pub fn build(ext: &QuadExt) -> Result<OmegaChar> {
        let m = ext.d + 1;
        let norms = NormSubgroup::build(ext, m)?;
        let want_index = if ext.is_ramified() { 2 } else { 1 };
        if norms.index() != want_index {
            return Err(Error::Invariant(format!(
                "norm subgroup has index {} in U_F/U_F^{}",
                norms.index(),
                m
            )));
        }
        let unit_sign = |u: i128| if norms.contains(u) { 1i8 } else { -1 };
        let at_minus_one = unit_sign(-1);
        let at_pi_f = if ext.is_ramified() {
            // π_F·N(π_K)^{-1} = −1
            let quot = ext.pi_f.div(&ext.pi_k.norm())?;
            let (a, _) = quot.integral_coords(m)?;
            unit_sign(a)
        } else {
            -1
        };
        let u_f = ext.pi_f_int / ext.p() as i64;
        let at_p = at_pi_f * unit_sign(u_f as i128);
        let gens = f_unit_generators(ext.p(), m + 1);
        let trivial_from = |j: u32| -> bool {
            let mut all = gens.iter().filter(|&&g| {
                if j == 0 {
                    true
                } else {
                    g > 1 && {
                        let mut v = 0;
                        let mut x = g - 1;
                        while x % ext.p() == 0 {
                            x /= ext.p();
                            v += 1;
                        }
                        v >= j
                    }
                }
            });
            all.all(|&g| unit_sign(g as i128) == 1)
        };
        let conductor = (0..=m).find(|&j| trivial_from(j)).unwrap_or(m);
        if conductor != ext.d {
            return Err(Error::Invariant(format!(
                "a(omega) = {} but d = {}",
                conductor, ext.d
            )));
        }
        Ok(OmegaChar {
            norms,
            conductor,
            at_pi_f,
            at_p,
            at_minus_one,
        })
    }

    pub fn eval_unit(&self, u: i128) -> i8 {
        if self.norms.contains(u) {
            1
        } else {
            -1
        }
    }

    /// `ω(x)` for a nonzero element of `F`.
    pub fn eval(&self, x: &KElem) -> Result<i8> {
        if !x.is_base() {
            return Err(Error::Hypothesis(format!("{x} is not in F")));
        }
        if x.is_zero() {
            return Err(Error::ZeroValuation);
        }
        let (shift, a, _, prec) = x.parts();
        if prec < self.norms.level {
            return Err(Error::InsufficientPrecision("omega argument".into()));
        }
        let pv = if shift.rem_euclid(2) == 1 { self.at_p } else { 1 };
        Ok(pv * self.eval_unit(a))
    }
}

/// The characters of `K*/U_K^level` together with the tables needed to evaluate them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CharSpace {
    pub ext: QuadExt,
    pub group: UnitQuotient,
    pub omega: OmegaChar,
    /// Order `M` of the roots of unity all values live in.
    pub root_order: u64,
    /// `M / ord_i`.
    pub weights: Vec<u64>,
    pub uf: SubgroupImage,
    uf_omega: Vec<u64>,
    omega_pi_f: Phase,
}

fn max_additive_depth(ext: &QuadExt, level: u32) -> Result<u32> {
    let mut depth = 0;
    for kind in [AdditiveKind::Psi0, AdditiveKind::PsiK] {
        let n_add = match kind {
            AdditiveKind::Psi0 => ext.n_psi0,
            AdditiveKind::PsiK => ext.d as i32,
        };
        let z = multiplier(ext, kind).mul(&ext.pi_pow(-(level as i64 + n_add as i64)));
        depth = depth.max(TraceForm::new(&z)?.den_exp);
    }
    Ok(depth)
}

impl CharSpace {
    pub fn new(ext: &QuadExt, level: u32) -> Result<CharSpace> {
        let group = UnitQuotient::build(ext, level)?;
        CharSpace::with_group(ext, group)
    }

    pub fn with_group(ext: &QuadExt, group: UnitQuotient) -> Result<CharSpace> {
        let level = group.level;
        let omega = OmegaChar::build(ext)?;
        let depth = max_additive_depth(ext, level)?;
        let pa = ext.p().pow(depth);
        let root_order = if ext.is_ramified() {
            4u64.lcm(&(2 * group.exponent)).lcm(&pa)
        } else {
            2u64.lcm(&group.exponent).lcm(&pa)
        };
        let weights = group.basis.iter().map(|b| root_order / b.order).collect();
        let uf = group.units_of_f(ext);
        let half = root_order / 2;
        let uf_omega = uf
            .gens
            .iter()
            .map(|&g| {
                let (a, _) = group.ring.coords(g);
                if omega.eval_unit(a as i128) == 1 {
                    0
                } else {
                    half
                }
            })
            .collect();
        let omega_pi_f = Phase::from_sign(omega.at_pi_f);
        Ok(CharSpace {
            ext: ext.clone(),
            group,
            omega,
            root_order,
            weights,
            uf,
            uf_omega,
            omega_pi_f,
        })
    }

    pub fn level(&self) -> u32 {
        self.group.level
    }

    pub fn rank(&self) -> usize {
        self.group.rank
    }

    /// `χ(u)` in units of `1/M`, given `dlog(u)`.
    #[inline]
    pub fn unit_value(&self, unit: &[u32], dl: &[u32]) -> u64 {
        let m = self.root_order;
        let mut acc = 0u64;
        for i in 0..unit.len() {
            acc = (acc + unit[i] as u64 * dl[i] as u64 % m * self.weights[i]) % m;
        }
        acc
    }

    /// Per-basis contributions `e_i·M/ord_i mod M`, for fast repeated evaluation.
    pub fn unit_weights(&self, unit: &[u32]) -> Vec<u64> {
        unit.iter()
            .zip(&self.weights)
            .map(|(&e, &w)| e as u64 * w % self.root_order)
            .collect()
    }

    fn phase_of_units(&self, v: u64) -> Phase {
        Phase::new(v as i128, self.root_order)
    }

    pub fn conductor_of(&self, unit: &[u32]) -> u32 {
        let mut a = 0;
        for (j, layer) in self.group.layers.iter().enumerate() {
            if layer.iter().any(|dl| self.unit_value(unit, dl) != 0) {
                a = j as u32 + 1;
            }
        }
        a
    }

    pub fn make(&self, unit: Vec<u32>, pi: Phase) -> Result<MultChar> {
        if unit.len() != self.rank() {
            return Err(Error::BadEncoding(format!(
                "expected {} unit exponents, got {}",
                self.rank(),
                unit.len()
            )));
        }
        for (e, b) in unit.iter().zip(&self.group.basis) {
            if *e as u64 >= b.order {
                return Err(Error::BadEncoding(format!("exponent {e} out of range")));
            }
        }
        pi.in_units(self.root_order)?;
        let conductor = self.conductor_of(&unit);
        Ok(MultChar {
            level: self.level(),
            unit,
            pi,
            conductor,
        })
    }

    pub fn parse(&self, s: &str) -> Result<MultChar> {
        let (level, unit, pi) = MultChar::decode(s)?;
        if level != self.level() {
            return Err(Error::BadEncoding(format!(
                "character level {} differs from space level {}",
                level,
                self.level()
            )));
        }
        self.make(unit, pi)
    }

    /// Unit exponents from values `χ(g_i)` given in units of `1/M`.
    fn exponents_of_values(&self, values: &[u64]) -> Vec<u32> {
        values
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| {
                debug_assert_eq!(v % w, 0);
                (v / w) as u32
            })
            .collect()
    }

    pub fn trivial(&self) -> MultChar {
        self.make(vec![0; self.rank()], Phase::ZERO).unwrap()
    }

    /// `μ = (−1)^{v_K}`.
    pub fn mu(&self) -> MultChar {
        self.make(vec![0; self.rank()], Phase::HALF).unwrap()
    }

    pub fn mul(&self, a: &MultChar, b: &MultChar) -> MultChar {
        let unit = self.group.add_exps(&a.unit, &b.unit);
        self.make(unit, a.pi.add(&b.pi)).unwrap()
    }

    pub fn inv(&self, a: &MultChar) -> MultChar {
        let unit = a
            .unit
            .iter()
            .zip(&self.group.basis)
            .map(|(&e, b)| ((b.order - e as u64) % b.order) as u32)
            .collect();
        MultChar {
            level: a.level,
            unit,
            pi: a.pi.neg(),
            conductor: a.conductor,
        }
    }

    /// `χ̄(y) = χ(ȳ)`.
    pub fn conj(&self, a: &MultChar) -> MultChar {
        let values: Vec<u64> = self
            .group
            .conj_images
            .iter()
            .map(|dl| self.unit_value(&a.unit, dl))
            .collect();
        let unit = self.exponents_of_values(&values);
        let shift = self.phase_of_units(self.unit_value(&a.unit, &self.group.pi_conj_ratio));
        self.make(unit, a.pi.add(&shift)).unwrap()
    }

    /// `θ/θ̄`; in the ramified case its conductor is checked to be even.
    pub fn ratio(&self, theta: &MultChar) -> Result<MultChar> {
        let r = self.mul(theta, &self.inv(&self.conj(theta)));
        if !self.restricts_trivially(&r) {
            return Err(Error::Invariant(format!(
                "ratio of {} is not trivial on F*",
                theta.encode()
            )));
        }
        if self.ext.is_ramified() && r.conductor % 2 == 1 {
            return Err(Error::Invariant(format!(
                "ratio of {} has odd conductor {}",
                theta.encode(),
                r.conductor
            )));
        }
        Ok(r)
    }

    pub fn is_regular(&self, theta: &MultChar) -> Result<bool> {
        Ok(!self.ratio(theta)?.is_trivial())
    }

    /// `χ(π_F)` as a phase.
    pub fn at_pi_f(&self, chi: &MultChar) -> Phase {
        match &self.group.pi_square_class {
            Some(w) => chi
                .pi
                .scale(2)
                .sub(&self.phase_of_units(self.unit_value(&chi.unit, w))),
            None => chi.pi,
        }
    }

    /// Whether `χ|_{F*} = ω`.
    pub fn restricts_to_omega(&self, chi: &MultChar) -> bool {
        self.uf
            .gen_exps
            .iter()
            .zip(&self.uf_omega)
            .all(|(dl, &w)| self.unit_value(&chi.unit, dl) == w)
            && self.at_pi_f(chi) == self.omega_pi_f
    }

    pub fn restricts_trivially(&self, chi: &MultChar) -> bool {
        self.uf
            .gen_exps
            .iter()
            .all(|dl| self.unit_value(&chi.unit, dl) == 0)
            && self.at_pi_f(chi).is_zero()
    }

    /// `χ(y)` as a phase.
    pub fn eval(&self, chi: &MultChar, y: &KElem) -> Result<Phase> {
        let v = y.valuation()?;
        let u = y.mul(&self.ext.pi_pow(-v));
        let dl = self.group.dlog(&u)?;
        Ok(self
            .phase_of_units(self.unit_value(&chi.unit, &dl))
            .add(&chi.pi.scale(v)))
    }

    pub fn eval_cyc(&self, chi: &MultChar, y: &KElem) -> Result<CycInt> {
        CycInt::from_exponent(self.eval(chi, y)?, self.root_order)
    }

    /// Number of unit parts, `|U_K/U_K^n|`.
    pub fn unit_char_count(&self) -> u64 {
        self.group.order
    }

    /// The unit part with mixed-radix index `k` (first coordinate most significant).
    pub fn unit_part(&self, mut k: u64) -> Vec<u32> {
        let mut out = vec![0u32; self.rank()];
        for i in (0..self.rank()).rev() {
            let o = self.group.basis[i].order;
            out[i] = (k % o) as u32;
            k /= o;
        }
        out
    }

    fn branches(&self, unit: &[u32], target: Phase) -> Vec<Phase> {
        match &self.group.pi_square_class {
            Some(w) => {
                let t = target.add(&self.phase_of_units(self.unit_value(unit, w)));
                let [h1, h2] = t.halves();
                let mut v = vec![h1, h2];
                v.sort();
                v
            }
            None => vec![target],
        }
    }

    fn filtered(&self, want: &[u64], target: Phase) -> Vec<MultChar> {
        let mut out = Vec::new();
        for k in 0..self.unit_char_count() {
            let unit = self.unit_part(k);
            let ok = self
                .uf
                .gen_exps
                .iter()
                .zip(want)
                .all(|(dl, &w)| self.unit_value(&unit, dl) == w);
            if ok {
                for pi in self.branches(&unit, target) {
                    out.push(self.make(unit.clone(), pi).unwrap());
                }
            }
        }
        out.sort();
        out
    }

    /// All `χ` of `K*/U_K^n` with `χ|_{F*} = ω`, sorted canonically.
    pub fn omega_set(&self) -> Result<Vec<MultChar>> {
        // ω has conductor d on F*, so every extension has conductor at least 2d−1.
        if self.ext.is_ramified() && self.level() < 2 * self.ext.d - 1 {
            return Err(Error::RestrictionUnsatisfiable(self.level()));
        }
        let set = self.filtered(&self.uf_omega, self.omega_pi_f);
        let uf_size = self.uf.members.len() as u64;
        let per_unit = if self.ext.is_ramified() { 2 } else { 1 };
        let expected = self.group.order / uf_size * per_unit;
        if set.len() as u64 != expected {
            return Err(Error::RestrictionUnsatisfiable(self.level()));
        }
        if self.ext.is_ramified() {
            let d = self.ext.d;
            for chi in &set {
                let a = chi.conductor;
                let ok = if a % 2 == 1 { a == 2 * d - 1 } else { a >= 2 * d };
                if !ok {
                    return Err(Error::Invariant(format!(
                        "{} has conductor {} outside the admissible spectrum",
                        chi.encode(),
                        a
                    )));
                }
            }
        }
        Ok(set)
    }

    /// All characters of `K*/U_K^n` trivial on `F*` (the possible ratios `θ/θ̄`).
    pub fn trivial_on_f_set(&self) -> Vec<MultChar> {
        let zeros = vec![0u64; self.uf.gens.len()];
        self.filtered(&zeros, Phase::ZERO)
    }

    /// Up to `count` regular characters `θ` with `a(θ/θ̄) = target`.
    ///
    /// All matches are used when there are at most `count`; otherwise a seeded
    /// sample is drawn. `θ(π_K)` is fixed to 1 since it does not affect the ratio.
    pub fn pick_thetas(&self, target: u32, count: usize, seed: u64) -> Result<Vec<MultChar>> {
        if target > self.level() {
            return Err(Error::Infeasible(format!(
                "ratio conductor {} exceeds level {}",
                target,
                self.level()
            )));
        }
        let mut found = self.thetas_by_ratio(&[target], count, seed)?;
        match found.remove(&target) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::Infeasible(format!(
                "no regular character has ratio conductor {} ({} ext)",
                target, self.ext.tag
            ))),
        }
    }

    /// One pass over all unit parts, bucketing regular `θ` by `a(θ/θ̄)`; targets
    /// with no match are absent from the result.
    pub fn thetas_by_ratio(
        &self,
        targets: &[u32],
        count: usize,
        seed: u64,
    ) -> Result<BTreeMap<u32, Vec<MultChar>>> {
        let mut hits: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for k in 0..self.unit_char_count() {
            let theta = self.make(self.unit_part(k), Phase::ZERO)?;
            let r = self.ratio(&theta)?;
            if targets.contains(&r.conductor) && !r.is_trivial() {
                hits.entry(r.conductor).or_default().push(k);
            }
        }
        let mut out = BTreeMap::new();
        for (target, mut ks) in hits {
            if ks.len() > count {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ target as u64);
                ks.shuffle(&mut rng);
                ks.truncate(count);
                ks.sort_unstable();
            }
            let thetas = ks
                .into_iter()
                .map(|k| self.make(self.unit_part(k), Phase::ZERO))
                .collect::<Result<Vec<_>>>()?;
            out.insert(target, thetas);
        }
        Ok(out)
    }
}
