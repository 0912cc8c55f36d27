//! On-disk cache of unit-quotient bases, dlog tables, character lists and ε-sign maps.
//!
//! Entries are JSON files keyed by `(p, tag, level, CACHE_VERSION)`. A loaded entry is
//! re-validated before use; anything that fails validation is discarded (with a
//! warning) and recomputed.

use crate::census::build_s_sets;
use crate::characters::CharSpace;
use crate::epsilon::{epsilon_pair, EpsTable};
use crate::error::{Error, Result};
use crate::padic::{AdditiveKind, QuadExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CACHE_VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "WEILTWIST_CACHE_DIR";

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    version: u32,
    p: u64,
    tag: String,
    level: u32,
    space: CharSpace,
    table: EpsTable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheEvent {
    Hit,
    Miss,
    /// An entry existed but failed validation.
    Rejected,
    Disabled,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u32,
    pub misses: u32,
    pub rejected: u32,
    pub disabled: u32,
}

impl CacheStats {
    pub fn record(&mut self, e: CacheEvent) {
        match e {
            CacheEvent::Hit => self.hits += 1,
            CacheEvent::Miss => self.misses += 1,
            CacheEvent::Rejected => self.rejected += 1,
            CacheEvent::Disabled => self.disabled += 1,
        }
    }
}

/// Where entries live; `None` disables caching.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

fn sanitize(tag: &str) -> String {
    tag.chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' => c,
            '-' => 'm',
            _ => '_',
        })
        .collect()
}

impl Cache {
    pub fn disabled() -> Cache {
        Cache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Cache {
        Cache {
            dir: Some(dir.into()),
        }
    }

    /// An explicit directory wins over the environment variable, which wins over
    /// the platform cache directory.
    pub fn resolve(explicit: Option<&Path>, disable: bool) -> Cache {
        if disable {
            return Cache::disabled();
        }
        match explicit {
            Some(d) => Cache::at(d),
            None => match std::env::var_os(CACHE_DIR_ENV) {
                Some(d) if !d.is_empty() => Cache::at(PathBuf::from(d)),
                _ => dirs::cache_dir()
                    .map(|d| Cache::at(d.join("weiltwist")))
                    .unwrap_or_else(Cache::disabled),
            },
        }
    }

    pub fn enabled(&self) -> bool {
        self.dir.is_some()
    }

    pub fn entry_path(&self, p: u64, tag: &str, level: u32) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| {
            d.join(format!(
                "p{p}-{}-n{level}-v{CACHE_VERSION}.json",
                sanitize(tag)
            ))
        })
    }

    /// Character space and ε table at `level`, from the cache when a valid entry exists.
    pub fn load_or_build(&self, ext: &QuadExt, level: u32) -> Result<(CharSpace, EpsTable, CacheEvent)> {
        let Some(path) = self.entry_path(ext.p(), &ext.tag, level) else {
            let (s, t) = build(ext, level)?;
            return Ok((s, t, CacheEvent::Disabled));
        };
        let mut event = CacheEvent::Miss;
        if path.exists() {
            match load(&path, ext, level) {
                Ok((s, t)) => return Ok((s, t, CacheEvent::Hit)),
                Err(e) => {
                    log::warn!("discarding cache entry {}: {e}", path.display());
                    event = CacheEvent::Rejected;
                }
            }
        }
        let (s, t) = build(ext, level)?;
        if let Err(e) = store(&path, &s, &t) {
            log::warn!("could not write cache entry {}: {e}", path.display());
        }
        Ok((s, t, event))
    }
}

fn build(ext: &QuadExt, level: u32) -> Result<(CharSpace, EpsTable)> {
    let space = CharSpace::new(ext, level)?;
    let table = EpsTable::compute(&space)?;
    Ok((space, table))
}

fn store(path: &Path, space: &CharSpace, table: &EpsTable) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let entry = CacheEntry {
        version: CACHE_VERSION,
        p: space.ext.p(),
        tag: space.ext.tag.clone(),
        level: space.level(),
        space: space.clone(),
        table: table.clone(),
    };
    // Write then rename so that a concurrent reader never sees a partial file.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, serde_json::to_vec(&entry)?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load(path: &Path, ext: &QuadExt, level: u32) -> Result<(CharSpace, EpsTable)> {
    let bytes = std::fs::read(path)?;
    let entry: CacheEntry = serde_json::from_slice(&bytes)?;
    if entry.version != CACHE_VERSION {
        return Err(Error::Invariant(format!("cache version {}", entry.version)));
    }
    if entry.p != ext.p() || entry.tag != ext.tag || entry.level != level {
        return Err(Error::Invariant("cache key mismatch".into()));
    }
    if serde_json::to_value(&entry.space.ext)? != serde_json::to_value(ext)? {
        return Err(Error::Invariant("extension data differs".into()));
    }
    let mut table = entry.table;
    table.rebuild_index();
    validate(&entry.space, &table)?;
    Ok((entry.space, table))
}

/// Structural checks on a deserialized entry.
pub(crate) fn validate(space: &CharSpace, table: &EpsTable) -> Result<()> {
    let g = &space.group;
    let bad = |m: &str| Err(Error::Invariant(m.to_string()));
    if g.level != space.level() || g.basis.len() != g.rank {
        return bad("basis shape");
    }
    let prod: u64 = g.basis.iter().map(|b| b.order).product();
    if prod != g.order {
        return bad("basis order product differs from group order");
    }
    let units: Vec<u64> = g.ring.units().collect();
    if units.len() as u64 != g.order {
        return bad("group order differs from unit count");
    }
    if g.dlog_table().len() != g.ring.size() * g.rank {
        return bad("dlog table size");
    }
    for (i, b) in g.basis.iter().enumerate() {
        let want: Vec<u32> = (0..g.rank).map(|j| u32::from(i == j)).collect();
        if g.dlog_idx(b.idx) != Some(&want[..]) || g.ring.pow(b.idx, b.order) != g.ring.one() {
            return bad("basis element dlog");
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..64 {
        let x = units[rng.gen_range(0..units.len())];
        let y = units[rng.gen_range(0..units.len())];
        let (Some(dx), Some(dy), Some(dxy)) =
            (g.dlog_idx(x), g.dlog_idx(y), g.dlog_idx(g.ring.mul(x, y)))
        else {
            return bad("dlog undefined on a unit");
        };
        for k in 0..g.rank {
            let o = g.basis[k].order;
            if (dx[k] as u64 + dy[k] as u64) % o != dxy[k] as u64 % o {
                return bad("dlog is not a homomorphism");
            }
        }
    }
    if table.chars != space.omega_set()? {
        return bad("character list differs from the restriction set");
    }
    let n = table.chars.len();
    if table.eps_chi.len() != n || table.eps_inv.len() != n {
        return bad("sign map length");
    }
    if table.eps_chi.iter().chain(&table.eps_inv).any(|&s| s != 1 && s != -1) {
        return bad("sign map value");
    }
    if space.ext.is_ramified() {
        for st in build_s_sets(table, space.level()).values() {
            if st.s.len() != st.s_prime.len() {
                return bad("|S(l)| differs from |S'(l)|");
            }
        }
    }
    // Spot-recompute a few signs so that consistent edits are still caught sometimes.
    for _ in 0..n.min(8) {
        let i = rng.gen_range(0..n);
        let (e, ei) = epsilon_pair(space, &table.chars[i], AdditiveKind::Psi0)?;
        if e.require_sign()? != table.eps_chi[i] || ei.require_sign()? != table.eps_inv[i] {
            return bad("stored sign differs from recomputation");
        }
    }
    Ok(())
}
