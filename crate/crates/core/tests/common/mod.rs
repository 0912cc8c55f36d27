#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::{Duration, Instant};
use weiltwist::characters::{CharSpace, MultChar};
use weiltwist::epsilon::EpsTable;
use weiltwist::groups::ResidueRing;
use weiltwist::padic::{catalog_tags, make_extension, psi0_eval, QuadExt};

pub struct Built {
    pub space: CharSpace,
    pub table: EpsTable,
    pub elapsed: Duration,
}

type Key = (u64, String, u32);

fn store() -> &'static Mutex<HashMap<Key, Arc<Built>>> {
    static S: OnceLock<Mutex<HashMap<Key, Arc<Built>>>> = OnceLock::new();
    S.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Character space and ε table at level `n`, built once per test binary.
pub fn built(p: u64, tag: &str, n: u32) -> Arc<Built> {
    let key = (p, tag.to_string(), n);
    if let Some(b) = store().lock().unwrap().get(&key) {
        return b.clone();
    }
    let t0 = Instant::now();
    let ext = make_extension(p, tag).unwrap();
    let space = CharSpace::new(&ext, n).unwrap();
    let table = EpsTable::compute(&space).unwrap();
    let b = Arc::new(Built {
        space,
        table,
        elapsed: t0.elapsed(),
    });
    store().lock().unwrap().insert(key, b.clone());
    b
}

/// Every catalog extension for `p ∈ {2, 3, 5}` with the level used by the test suites.
pub fn desk_catalog() -> Vec<(u64, &'static str, u32)> {
    let mut out = Vec::new();
    for p in [2u64, 3, 5] {
        for tag in catalog_tags(p) {
            let ext = make_extension(p, tag).unwrap();
            out.push((p, tag, desk_level(&ext)));
        }
    }
    out
}

pub fn desk_level(ext: &QuadExt) -> u32 {
    match (ext.is_ramified(), ext.p(), ext.d) {
        (true, 2, 3) => 12,
        (true, 2, _) => 8,
        (true, _, _) => 6,
        (false, 5, _) => 4,
        (false, _, _) => 6,
    }
}

/// `ε(χ, ψ₀)` summed in floating point straight from the definition.
pub fn float_epsilon(space: &CharSpace, chi: &MultChar) -> (f64, f64) {
    let ext = &space.ext;
    let a = chi.conductor;
    let c = ext.pi_pow(a as i64 + ext.n_psi0 as i64);
    let pc = space.eval(chi, &c).unwrap().to_f64() * TAU;
    if a == 0 {
        return (pc.cos(), pc.sin());
    }
    let cinv = c.inverse().unwrap();
    let ring = ResidueRing::new(ext, a);
    let inv = space.inv(chi);
    let (mut re, mut im) = (0.0, 0.0);
    for y in ring.units() {
        let ye = ring.to_kelem(ext, y);
        let ph = space.eval(&inv, &ye).unwrap().to_f64()
            + psi0_eval(ext, &ye.mul(&cinv)).unwrap().to_f64();
        re += (TAU * ph).cos();
        im += (TAU * ph).sin();
    }
    let s = (ext.q_k() as f64).powf(-(a as f64) / 2.0);
    let (cr, ci) = (pc.cos(), pc.sin());
    ((re * cr - im * ci) * s, (re * ci + im * cr) * s)
}

/// One regular `θ` for every distinct ratio `θ/θ̄`, keyed by the ratio's encoding.
pub fn ratio_representatives(space: &CharSpace, n: u32) -> Vec<MultChar> {
    let targets: Vec<u32> = (0..=n).collect();
    let mut seen: BTreeMap<String, MultChar> = BTreeMap::new();
    for thetas in space.thetas_by_ratio(&targets, usize::MAX, 0).unwrap().into_values() {
        for t in thetas {
            let r = space.ratio(&t).unwrap();
            seen.entry(r.encode()).or_insert(t);
        }
    }
    seen.into_values().collect()
}

/// `(rplus, rminus, rdplus, rdminus)` for the twists `λθ`, `λ` of conductor `l`, with
/// the ratio `ρ = θ/θ̄`, read directly off the sign table.
pub fn recount(space: &CharSpace, table: &EpsTable, rho: &MultChar, l: u32) -> [u64; 4] {
    let mut c = [0u64; 4];
    for (i, lam) in table.chars.iter().enumerate() {
        if lam.conductor != l {
            continue;
        }
        let s1 = table.eps_inv[i];
        let s2 = table.sign_inv(&space.mul(lam, rho)).unwrap();
        let k = match (s1, s2) {
            (1, 1) => 0,
            (-1, -1) => 1,
            (1, -1) => 2,
            _ => 3,
        };
        c[k] += 1;
    }
    c
}

/// `(|S(l)|, |S′(l)|)` from the table.
pub fn stratum(table: &EpsTable, l: u32) -> (u64, u64) {
    let mut s = (0, 0);
    for (i, c) in table.chars.iter().enumerate() {
        if c.conductor == l {
            if table.eps_inv[i] == 1 {
                s.0 += 1;
            } else {
                s.1 += 1;
            }
        }
    }
    s
}
