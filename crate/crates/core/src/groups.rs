//! Finite quotients `U_K/U_K^n`, their decomposition into cyclic factors, discrete logs,
//! and the subgroups coming from `F`: the image of `U_F` and the norms `N(U_K)`.

use crate::error::{Error, Result};
use crate::padic::{KElem, QuadExt};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Marker in the dlog table for residues that are not units.
pub const NOT_UNIT: u32 = u32::MAX;
const MAX_RANK: usize = 8;

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

/// `O_K/P_K^n`, with residues packed as `a + A·b` for `x ≡ a + b·ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueRing {
    pub p: u64,
    pub gen_trace: i64,
    pub gen_norm: i64,
    pub level: u32,
    pub ramified: bool,
    pub mod_a: u64,
    pub mod_b: u64,
}

impl ResidueRing {
    pub fn new(ext: &QuadExt, level: u32) -> ResidueRing {
        let p = ext.p();
        let (ea, eb) = if ext.is_ramified() {
            (level.div_ceil(2), level / 2)
        } else {
            (level, level)
        };
        ResidueRing {
            p,
            gen_trace: ext.ring.gen_trace,
            gen_norm: ext.ring.gen_norm,
            level,
            ramified: ext.is_ramified(),
            mod_a: p.pow(ea),
            mod_b: p.pow(eb),
        }
    }

    pub fn size(&self) -> usize {
        (self.mod_a * self.mod_b) as usize
    }

    #[inline]
    pub fn idx(&self, a: i128, b: i128) -> u64 {
        let a = a.rem_euclid(self.mod_a as i128) as u64;
        let b = b.rem_euclid(self.mod_b as i128) as u64;
        a + self.mod_a * b
    }

    #[inline]
    pub fn coords(&self, x: u64) -> (u64, u64) {
        (x % self.mod_a, x / self.mod_a)
    }

    pub fn one(&self) -> u64 {
        self.idx(1, 0)
    }

    #[inline]
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        let (a1, b1) = self.coords(x);
        let (a2, b2) = self.coords(y);
        let m = self.mod_a as i128;
        let (a1, b1, a2, b2) = (a1 as i128, b1 as i128, a2 as i128, b2 as i128);
        let bb = b1 * b2 % m;
        let a = a1 * a2 - self.gen_norm as i128 * bb;
        let b = a1 * b2 + a2 * b1 + self.gen_trace as i128 * bb;
        self.idx(a, b)
    }

    pub fn add(&self, x: u64, y: u64) -> u64 {
        let (a1, b1) = self.coords(x);
        let (a2, b2) = self.coords(y);
        self.idx(a1 as i128 + a2 as i128, b1 as i128 + b2 as i128)
    }

    pub fn pow(&self, x: u64, mut e: u64) -> u64 {
        let mut acc = self.one();
        let mut sq = x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, sq);
            }
            sq = self.mul(sq, sq);
            e >>= 1;
        }
        acc
    }

    pub fn conj(&self, x: u64) -> u64 {
        let (a, b) = self.coords(x);
        self.idx(a as i128 + b as i128 * self.gen_trace as i128, -(b as i128))
    }

    pub fn is_unit(&self, x: u64) -> bool {
        let (a, b) = self.coords(x);
        if self.ramified {
            a % self.p != 0
        } else {
            a % self.p != 0 || b % self.p != 0
        }
    }

    /// Residue of an integral element.
    pub fn from_kelem(&self, x: &KElem) -> Result<u64> {
        let digits = if self.ramified {
            self.level.div_ceil(2)
        } else {
            self.level
        };
        let (a, b) = x.integral_coords(digits)?;
        Ok(self.idx(a, b))
    }

    pub fn to_kelem(&self, ext: &QuadExt, x: u64) -> KElem {
        let (a, b) = self.coords(x);
        ext.elem(a as i64, b as i64)
    }

    /// Residues of units, in increasing packed order.
    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.size() as u64).filter(move |&x| self.is_unit(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElem {
    pub idx: u64,
    pub order: u64,
}

/// `U_K/U_K^n` with a basis of cyclic factors and a full dlog table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitQuotient {
    pub level: u32,
    pub ring: ResidueRing,
    pub order: u64,
    pub basis: Vec<BasisElem>,
    pub rank: usize,
    pub exponent: u64,
    dlog: Vec<u32>,
    /// `layers[j]`: dlogs of generators of `U^j/U^{j+1}` (`j = 0` is the residue field).
    pub layers: Vec<Vec<Vec<u32>>>,
    /// dlogs of the conjugates of the basis elements.
    pub conj_images: Vec<Vec<u32>>,
    /// dlog of `π_K²/π_F` (ramified only).
    pub pi_square_class: Option<Vec<u32>>,
    /// dlog of `π̄_K/π_K`.
    pub pi_conj_ratio: Vec<u32>,
}

fn residue_generator(ext: &QuadExt) -> (i128, i128) {
    let r1 = ResidueRing::new(ext, 1);
    let qk = ext.q_k();
    let ps = prime_factors(qk - 1);
    let p = ext.p() as i128;
    for b in 0..p {
        for a in 0..p {
            if ext.is_ramified() && b > 0 {
                continue;
            }
            let x = r1.idx(a, b);
            if !r1.is_unit(x) {
                continue;
            }
            if ps.iter().all(|&l| r1.pow(x, (qk - 1) / l) != r1.one()) {
                return (a, b);
            }
        }
    }
    unreachable!("finite field has a primitive element")
}

impl UnitQuotient {
    pub fn build(ext: &QuadExt, level: u32) -> Result<UnitQuotient> {
        if level == 0 {
            return Err(Error::Config("unit quotient level must be at least 1".into()));
        }
        let ring = ResidueRing::new(ext, level);
        let qk = ext.q_k();
        let order = (qk - 1) * qk.pow(level - 1);

        let (ra, rb) = residue_generator(ext);
        let mut layer_gens: Vec<Vec<u64>> = vec![Vec::new(); level as usize];
        if qk > 2 {
            layer_gens[0].push(ring.idx(ra, rb));
        }
        let pi_res = if ext.is_ramified() {
            ring.idx(0, 1)
        } else {
            ring.idx(ext.p() as i128, 0)
        };
        for j in 1..level {
            let pj = ring.pow(pi_res, j as u64);
            layer_gens[j as usize].push(ring.add(ring.one(), pj));
            if !ext.is_ramified() {
                let wpj = ring.mul(pj, ring.idx(0, 1));
                layer_gens[j as usize].push(ring.add(ring.one(), wpj));
            }
        }
        let gens: Vec<u64> = layer_gens.iter().flatten().copied().collect();

        let size = ring.size();
        let mut table = vec![NOT_UNIT; size * MAX_RANK];
        let one = ring.one();
        for s in 0..MAX_RANK {
            table[one as usize * MAX_RANK + s] = 0;
        }
        let mut members: Vec<u64> = vec![one];
        let mut basis: Vec<BasisElem> = Vec::new();
        let member = |t: &Vec<u32>, x: u64| t[x as usize * MAX_RANK] != NOT_UNIT;

        for l in prime_factors(order) {
            let mut lv = 1u64;
            while order.is_multiple_of(lv * l) {
                lv *= l;
            }
            let cands: Vec<u64> = gens.iter().map(|&g| ring.pow(g, order / lv)).collect();
            loop {
                let quot_order = |t: &Vec<u32>, c: u64| -> u64 {
                    let mut x = c;
                    let mut o = 1u64;
                    while !member(t, x) {
                        x = ring.pow(x, l);
                        o *= l;
                    }
                    o
                };
                let mut best = None;
                let mut best_ord = 1u64;
                for &c in &cands {
                    let o = quot_order(&table, c);
                    if o > best_ord {
                        best_ord = o;
                        best = Some(c);
                    }
                }
                let Some(h) = best else { break };
                let target = ring.pow(h, best_ord);
                let coeffs: Vec<u32> =
                    table[target as usize * MAX_RANK..target as usize * MAX_RANK + basis.len()].to_vec();
                let mut hc = h;
                for (i, &c) in coeffs.iter().enumerate() {
                    if !(c as u64).is_multiple_of(best_ord) {
                        return Err(Error::Invariant(
                            "basis correction: coefficient not divisible".into(),
                        ));
                    }
                    let bi = basis[i];
                    let k = (bi.order - (c as u64 / best_ord) % bi.order) % bi.order;
                    hc = ring.mul(hc, ring.pow(bi.idx, k));
                }
                if ring.pow(hc, best_ord) != one {
                    return Err(Error::Invariant("corrected generator has wrong order".into()));
                }
                let r = basis.len();
                if r >= MAX_RANK {
                    return Err(Error::Invariant("unit quotient rank too large".into()));
                }
                let existing = members.clone();
                let mut power = one;
                for j in 1..best_ord {
                    power = ring.mul(power, hc);
                    for &x in &existing {
                        let y = ring.mul(x, power);
                        let ys = y as usize * MAX_RANK;
                        if table[ys] != NOT_UNIT {
                            return Err(Error::Invariant("decomposition is not direct".into()));
                        }
                        let xs = x as usize * MAX_RANK;
                        for s in 0..MAX_RANK {
                            table[ys + s] = table[xs + s];
                        }
                        table[ys + r] = j as u32;
                        members.push(y);
                    }
                }
                basis.push(BasisElem {
                    idx: hc,
                    order: best_ord,
                });
            }
        }

        if members.len() as u64 != order {
            return Err(Error::Invariant(format!(
                "unit quotient has {} elements, expected {}",
                members.len(),
                order
            )));
        }
        let rank = basis.len();
        let mut dlog = vec![NOT_UNIT; size * rank.max(1)];
        if rank == 0 {
            dlog[one as usize] = 0;
        }
        for x in 0..size {
            if table[x * MAX_RANK] != NOT_UNIT {
                for s in 0..rank {
                    dlog[x * rank + s] = table[x * MAX_RANK + s];
                }
            }
        }
        let exponent = basis
            .iter()
            .fold(1u64, |acc, b| num_integer::lcm(acc, b.order));
        let mut g = UnitQuotient {
            level,
            ring,
            order,
            basis,
            rank,
            exponent,
            dlog,
            layers: Vec::new(),
            conj_images: Vec::new(),
            pi_square_class: None,
            pi_conj_ratio: Vec::new(),
        };
        g.layers = layer_gens
            .iter()
            .map(|l| l.iter().map(|&x| g.dlog_idx(x).unwrap().to_vec()).collect())
            .collect();
        g.conj_images = g
            .basis
            .iter()
            .map(|b| g.dlog_idx(g.ring.conj(b.idx)).unwrap().to_vec())
            .collect();
        if ext.is_ramified() {
            let w = ext.pi_k.mul(&ext.pi_k).div(&ext.pi_f)?;
            g.pi_square_class = Some(g.dlog(&w)?);
        }
        let ratio = ext.pi_k.conj().div(&ext.pi_k)?;
        g.pi_conj_ratio = g.dlog(&ratio)?;
        Ok(g)
    }

    /// dlog of a packed residue, or `None` for non-units.
    #[inline]
    pub fn dlog_idx(&self, x: u64) -> Option<&[u32]> {
        if self.rank == 0 {
            return if self.ring.is_unit(x) { Some(&[]) } else { None };
        }
        let s = x as usize * self.rank;
        let v = &self.dlog[s..s + self.rank];
        if v[0] == NOT_UNIT {
            None
        } else {
            Some(v)
        }
    }

    /// The whole dlog table, `rank` entries per packed residue.
    pub fn dlog_table(&self) -> &[u32] {
        &self.dlog
    }

    pub fn dlog(&self, x: &KElem) -> Result<Vec<u32>> {
        let v = x.valuation()?;
        if v != 0 {
            return Err(Error::NotUnit(v));
        }
        let idx = self.ring.from_kelem(x)?;
        self.dlog_idx(idx)
            .map(|s| s.to_vec())
            .ok_or(Error::NotUnit(0))
    }

    /// `Π g_i^{e_i}`.
    pub fn element(&self, exps: &[u32]) -> u64 {
        let mut acc = self.ring.one();
        for (b, &e) in self.basis.iter().zip(exps) {
            acc = self.ring.mul(acc, self.ring.pow(b.idx, e as u64));
        }
        acc
    }

    /// Componentwise sum of exponent vectors modulo the basis orders.
    pub fn add_exps(&self, x: &[u32], y: &[u32]) -> Vec<u32> {
        x.iter()
            .zip(y)
            .zip(&self.basis)
            .map(|((&a, &b), g)| ((a as u64 + b as u64) % g.order) as u32)
            .collect()
    }

    /// Count of units congruent to 1 modulo `P_K^m`.
    pub fn filtration_order(&self, m: u32) -> u64 {
        let (ea, eb) = if self.ring.ramified {
            (m.div_ceil(2), m / 2)
        } else {
            (m, m)
        };
        let (pa, pb) = (self.ring.p.pow(ea), self.ring.p.pow(eb));
        self.ring
            .units()
            .filter(|&x| {
                let (a, b) = self.ring.coords(x);
                ((a + self.ring.mod_a - 1) % self.ring.mod_a).is_multiple_of(pa) && b % pb == 0
            })
            .count() as u64
    }

    /// Image of `U_F` in this quotient.
    pub fn units_of_f(&self, ext: &QuadExt) -> SubgroupImage {
        let gens: Vec<u64> = f_unit_generators(ext.p(), self.level)
            .into_iter()
            .map(|g| self.ring.idx(g as i128, 0))
            .collect();
        let members = closure(&gens, self.ring.one(), |x, y| self.ring.mul(x, y));
        SubgroupImage {
            gen_exps: gens
                .iter()
                .map(|&g| self.dlog_idx(g).expect("unit").to_vec())
                .collect(),
            gens,
            members,
        }
    }
}

/// Integers generating `U_F/U_F^m`: a primitive root modulo `p` and `1 + p^j`.
pub fn f_unit_generators(p: u64, m: u32) -> Vec<u64> {
    let mut out = Vec::new();
    if p > 2 {
        let ps = prime_factors(p - 1);
        let g = (2..p)
            .find(|&g| {
                ps.iter()
                    .all(|&l| crate::groups::pow_mod(g, (p - 1) / l, p) != 1)
            })
            .expect("primitive root");
        out.push(g);
    }
    for j in 1..m {
        out.push(1 + p.pow(j));
    }
    out
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    acc
}

fn closure(gens: &[u64], one: u64, mul: impl Fn(u64, u64) -> u64) -> Vec<u64> {
    let mut seen = std::collections::HashSet::new();
    seen.insert(one);
    let mut queue = VecDeque::from([one]);
    while let Some(x) = queue.pop_front() {
        for &g in gens {
            let y = mul(x, g);
            if seen.insert(y) {
                queue.push_back(y);
            }
        }
    }
    let mut v: Vec<u64> = seen.into_iter().collect();
    v.sort_unstable();
    v
}

/// A subgroup of a unit quotient given by generators and its sorted member list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupImage {
    pub gens: Vec<u64>,
    pub gen_exps: Vec<Vec<u32>>,
    pub members: Vec<u64>,
}

impl SubgroupImage {
    pub fn contains(&self, x: u64) -> bool {
        self.members.binary_search(&x).is_ok()
    }
}

/// `U_F/U_F^m` as integers modulo `p^m`, with the subgroup of norms from `U_K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormSubgroup {
    pub p: u64,
    pub level: u32,
    pub modulus: u64,
    pub order: u64,
    pub norms: Vec<u64>,
}

impl NormSubgroup {
    pub fn build(ext: &QuadExt, m: u32) -> Result<NormSubgroup> {
        let p = ext.p();
        let modulus = p.pow(m);
        let e = ext.e();
        // Generators of U_K modulo U_K^{e·m}; their norms generate N(U_K) mod U_F^m.
        let mut gens_k: Vec<KElem> = Vec::new();
        let (ra, rb) = residue_generator(ext);
        gens_k.push(ext.elem(ra as i64, rb as i64));
        for j in 1..(e * m).max(1) {
            let pj = if ext.is_ramified() {
                ext.pi_pow(j as i64)
            } else {
                ext.int(p as i64).pow(j as i64)?
            };
            gens_k.push(ext.int(1).add(&pj));
            if !ext.is_ramified() {
                gens_k.push(ext.int(1).add(&pj.mul(&KElem::gen(ext.ring))));
            }
        }
        let mut gens = Vec::new();
        for g in &gens_k {
            let n = g.norm();
            let (a, _) = n.integral_coords(m)?;
            gens.push((a.rem_euclid(modulus as i128)) as u64);
        }
        let norms = closure(&gens, 1 % modulus, |x, y| {
            (x as u128 * y as u128 % modulus as u128) as u64
        });
        let order = if m == 0 { 1 } else { (p - 1) * p.pow(m - 1) };
        Ok(NormSubgroup {
            p,
            level: m,
            modulus,
            order,
            norms,
        })
    }

    pub fn contains(&self, u: i128) -> bool {
        let r = u.rem_euclid(self.modulus as i128) as u64;
        self.norms.binary_search(&r).is_ok()
    }

    pub fn index(&self) -> u64 {
        self.order / self.norms.len() as u64
    }
}

/// Data needed to extend unit characters to `K*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PiRelation {
    /// dlog of the class of `π_K²/π_F`.
    Ramified(Vec<u32>),
    /// `π_K = π_F`.
    Unramified,
}

pub fn kstar_structure(ext: &QuadExt, n: u32) -> Result<(UnitQuotient, PiRelation)> {
    let g = UnitQuotient::build(ext, n)?;
    let rel = match &g.pi_square_class {
        Some(w) => PiRelation::Ramified(w.clone()),
        None => PiRelation::Unramified,
    };
    Ok((g, rel))
}
