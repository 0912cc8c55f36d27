//! Per-extension driver: level policy, table loading, and the named check lines
//! that make up a report.

use crate::cache::{Cache, CacheEvent};
use crate::census::{
    build_s_sets, expected_stratum_size, feasible_levels, reachable_ratio_conductors,
    verify_suite, CensusReport, Clause, Verdict,
};
use crate::characters::{CharSpace, MultChar};
use crate::epsilon::{epsilon_omega, gauss_sum, EpsOmega, EpsTable};
use crate::error::{Error, Result};
use crate::identities::{
    check_sumclass, deligne_suite, main_identity_suite, sumclass_cells,
};
use crate::padic::{AdditiveKind, QuadExt};
use crate::report::{CharacterRow, CheckLine, EpsOmegaRow, IdentityAppendix, StratumRow};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Largest level accepted for an extension.
pub fn policy_bound(ext: &QuadExt) -> u32 {
    match (ext.is_ramified(), ext.p()) {
        (true, 2) => 12,
        (true, 3) => 8,
        (true, 5) => 6,
        (true, _) => 4,
        (false, 2) => 8,
        (false, 3) => 6,
        (false, 5) => 4,
        (false, _) => 2,
    }
}

/// Level used when none is given: large enough to reach every census clause.
pub fn default_n_max(ext: &QuadExt) -> u32 {
    match (ext.is_ramified(), ext.p()) {
        (true, 2) if ext.d == 3 => 12,
        (true, 2) => 8,
        (true, 3) | (true, 5) => 6,
        (true, _) => 4,
        (false, 2) | (false, 3) => 6,
        (false, 5) => 4,
        (false, _) => 2,
    }
}

pub fn resolve_n_max(ext: &QuadExt, requested: Option<u32>) -> Result<u32> {
    let n = requested.unwrap_or_else(|| default_n_max(ext));
    let bound = policy_bound(ext);
    if n == 0 {
        return Err(Error::Config("--nmax must be at least 1".into()));
    }
    if n > bound {
        return Err(Error::LevelExceedsPolicy { level: n, bound });
    }
    Ok(n)
}

/// General `β` are enumerated only up to this many unit characters.
const GENERAL_DELIGNE_LIMIT: u64 = 4096;

pub struct Engine {
    pub ext: QuadExt,
    pub space: CharSpace,
    pub table: EpsTable,
    pub n_max: u32,
    pub cache_event: CacheEvent,
}

fn line(name: &str, verdict: Verdict, detail: impl Into<String>) -> CheckLine {
    CheckLine {
        name: name.to_string(),
        verdict,
        detail: detail.into(),
    }
}

fn pass_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

impl Engine {
    pub fn load(ext: QuadExt, n_max: u32, cache: &Cache) -> Result<Engine> {
        let (space, table, cache_event) = cache.load_or_build(&ext, n_max)?;
        Ok(Engine {
            ext,
            space,
            table,
            n_max,
            cache_event,
        })
    }

    pub fn strata_rows(&self) -> Vec<StratumRow> {
        let strata = build_s_sets(&self.table, self.n_max);
        feasible_levels(&self.ext, self.n_max)
            .into_iter()
            .map(|l| {
                let (s, sp) = strata
                    .get(&l)
                    .map(|st| (st.s.len() as u64, st.s_prime.len() as u64))
                    .unwrap_or((0, 0));
                StratumRow {
                    conductor: l,
                    s,
                    s_prime: sp,
                    expected: expected_stratum_size(&self.ext, l),
                }
            })
            .collect()
    }

    pub fn character_rows(&self) -> Vec<CharacterRow> {
        self.table
            .chars
            .iter()
            .enumerate()
            .map(|(i, c)| CharacterRow {
                encoding: c.encode(),
                conductor: c.conductor,
                eps: self.table.eps_chi[i],
                eps_inverse: self.table.eps_inv[i],
            })
            .collect()
    }

    pub fn epsilon_omega(&self) -> Result<(EpsOmega, EpsOmegaRow)> {
        let w = epsilon_omega(&self.space)?;
        let row = EpsOmegaRow {
            value: (&w.value).into(),
            omega_minus_one: w.omega_minus_one,
            square_is_one: w.square_is_one,
            twisted_square_is_one: w.twisted_square_is_one,
        };
        Ok((w, row))
    }

    /// Seeded `θ` for each requested ratio conductor (every reachable one when empty).
    ///
    /// Explicitly requested conductors must each produce at least one `θ`.
    pub fn thetas(&self, ratio_conductors: &[u32], count: usize, seed: u64) -> Result<Vec<MultChar>> {
        let reachable = reachable_ratio_conductors(&self.ext, self.n_max);
        let targets: Vec<u32> = if ratio_conductors.is_empty() {
            reachable
        } else {
            for a in ratio_conductors {
                if !reachable.contains(a) {
                    return Err(Error::Infeasible(format!(
                        "ratio conductor {a} is not reachable at level {}",
                        self.n_max
                    )));
                }
            }
            ratio_conductors.to_vec()
        };
        let found = self.space.thetas_by_ratio(&targets, count, seed)?;
        if !ratio_conductors.is_empty() {
            if let Some(a) = targets.iter().find(|a| !found.contains_key(a)) {
                return Err(Error::Infeasible(format!("no regular θ with ratio conductor {a}")));
            }
        }
        Ok(found.into_values().flatten().collect())
    }

    pub fn census(&self, thetas: &[MultChar]) -> Result<Vec<CensusReport>> {
        verify_suite(&self.space, &self.table, thetas, self.n_max)
    }

    pub fn identities(&self, samples: usize, seed: u64) -> Result<IdentityAppendix> {
        let mut sumclass = Vec::new();
        if self.ext.is_ramified() {
            let second = if self.ext.p() == 2 { 5 } else { 2 };
            for (r, m) in sumclass_cells(&self.ext, self.n_max) {
                for xp in [1, second] {
                    sumclass.push(check_sumclass(&self.space, &self.table, r, m, xp)?);
                }
            }
        }
        let main_identity =
            main_identity_suite(&self.space, &self.table, samples, samples * 4, seed)?;
        let general = self.space.unit_char_count() <= GENERAL_DELIGNE_LIMIT;
        let deligne = Some(deligne_suite(&self.space, &self.table, general)?);
        Ok(IdentityAppendix {
            sumclass,
            main_identity,
            deligne,
        })
    }

    /// Checks that need only the tables.
    pub fn table_checks(&self, strata: &[StratumRow]) -> Vec<CheckLine> {
        let mut out = Vec::new();
        let ext = &self.ext;
        if ext.is_ramified() {
            let bad: Vec<String> = strata
                .iter()
                .filter(|r| r.expected != Some(r.s) || r.expected != Some(r.s_prime))
                .map(|r| format!("l={} |S|={} |S'|={} want {:?}", r.conductor, r.s, r.s_prime, r.expected))
                .collect();
            out.push(line(
                "stratum-sizes",
                pass_fail(bad.is_empty()),
                if bad.is_empty() {
                    format!("{} strata match the closed form", strata.len())
                } else {
                    bad.join("; ")
                },
            ));
            let unpaired: Vec<u32> = strata
                .iter()
                .filter(|r| r.s != r.s_prime)
                .map(|r| r.conductor)
                .collect();
            out.push(line(
                "pairing",
                pass_fail(unpaired.is_empty()),
                format!("unpaired conductors {unpaired:?}"),
            ));
        } else {
            let sizes: Vec<String> = strata
                .iter()
                .map(|r| format!("l={}: {}/{}", r.conductor, r.s, r.s_prime))
                .collect();
            out.push(line(
                "pairing",
                Verdict::Info,
                format!("unramified strata (|S|/|S'|): {}", sizes.join(", ")),
            ));
        }
        let feas = feasible_levels(ext, self.n_max);
        let stray: Vec<String> = self
            .table
            .chars
            .iter()
            .filter(|c| !feas.contains(&c.conductor))
            .map(|c| c.encode())
            .collect();
        out.push(line(
            "conductor-spectrum",
            pass_fail(stray.is_empty()),
            match stray.first() {
                None => format!("conductors within {feas:?}"),
                Some(c) => format!("{} stray characters, first {c}", stray.len()),
            },
        ));
        let w = self.space.omega.at_minus_one;
        let first = (0..self.table.chars.len())
            .find(|&i| self.table.eps_inv[i] != w * self.table.eps_chi[i]);
        out.push(line(
            "inverse-sign-relation",
            pass_fail(first.is_none()),
            match first {
                None => format!("eps(chi^-1) = {w} * eps(chi) on {} characters", self.table.chars.len()),
                Some(i) => format!("counterexample {}", self.table.chars[i].encode()),
            },
        ));
        if !ext.is_ramified() {
            let t = ext.t as i64;
            let first = (0..self.table.chars.len()).find(|&i| {
                let a = self.table.chars[i].conductor as i64;
                let want = if (a + t) % 2 == 0 { 1 } else { -1 };
                self.table.eps_inv[i] != want
            });
            out.push(line(
                "unramified-sign-formula",
                pass_fail(first.is_none()),
                match first {
                    None => format!("eps(chi^-1) = (-1)^(a+{t}) on every character"),
                    Some(i) => format!("counterexample {}", self.table.chars[i].encode()),
                },
            ));
        }
        out
    }

    /// Exact `|G|² = q_K^a` for every character in the table.
    pub fn gauss_modulus_check(&self) -> Result<CheckLine> {
        let res: Vec<Option<String>> = self
            .table
            .chars
            .par_iter()
            .map(|c| match gauss_sum(&self.space, c, AdditiveKind::Psi0) {
                Ok(_) => Ok(None),
                Err(Error::ModulusMismatch) => Ok(Some(c.encode())),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        let bad: Vec<&String> = res.iter().flatten().collect();
        Ok(line(
            "gauss-sum-modulus",
            pass_fail(bad.is_empty()),
            match bad.first() {
                None => format!("raw*conj(raw) = q_K^a on {} characters", res.len()),
                Some(c) => format!("{} failures, first {c}", bad.len()),
            },
        ))
    }
}

/// The identity the census relies on is `ω(−1)·ε(ω,ψ)² = 1`; the plain square is
/// reported alongside it.
pub fn epsilon_omega_check(ext: &QuadExt, w: &EpsOmega) -> CheckLine {
    line(
        "epsilon-omega-square",
        pass_fail(w.unimodular && w.twisted_square_is_one),
        format!(
            "omega(-1) = {}, omega(-1)*eps^2 = 1: {}, eps^2 = 1: {}, d = {}",
            w.omega_minus_one, w.twisted_square_is_one, w.square_is_one, ext.d
        ),
    )
}

fn clause_name(c: Clause) -> String {
    let s = format!("{c:?}");
    let mut out = String::from("census:");
    for (i, ch) in s.chars().enumerate() {
        if ch.is_ascii_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.push(ch.to_ascii_lowercase());
        } else {
            out.push(ch);
        }
    }
    out
}

/// One line per clause that occurred in the census.
pub fn census_checks(reports: &[CensusReport]) -> Vec<CheckLine> {
    let mut by: BTreeMap<String, (u32, u32, u32, Option<String>, usize)> = BTreeMap::new();
    for rep in reports {
        for r in &rep.rows {
            let e = by.entry(clause_name(r.prediction.clause)).or_default();
            e.0 += 1;
            match r.verdict {
                Verdict::Fail => {
                    e.1 += 1;
                    if e.3.is_none() {
                        e.3 = Some(format!(
                            "theta {} l={} counterexample {}",
                            rep.theta,
                            r.conductor,
                            r.counterexample.clone().unwrap_or_default()
                        ));
                    }
                }
                Verdict::Info | Verdict::Indeterminate => e.2 += 1,
                Verdict::Pass => {}
            }
            e.4 += r.literal_counterexamples.len();
        }
    }
    by.into_iter()
        .map(|(name, (rows, fails, info, cx, literal))| {
            let verdict = if fails > 0 {
                Verdict::Fail
            } else if info == rows {
                Verdict::Info
            } else {
                Verdict::Pass
            };
            let mut detail = format!("{rows} rows, {fails} failed");
            if let Some(cx) = cx {
                detail.push_str(&format!("; first: {cx}"));
            }
            if literal > 0 {
                detail.push_str(&format!(
                    "; {literal} characters contradict the unconditional-occurrence wording"
                ));
            }
            line(&name, verdict, detail)
        })
        .collect()
}

pub fn identity_checks(ext: &QuadExt, app: &IdentityAppendix, samples: usize) -> Vec<CheckLine> {
    let mut out = Vec::new();
    if ext.is_ramified() {
        let fails = app.sumclass.iter().filter(|o| o.verdict == Verdict::Fail).count();
        let combined = app
            .sumclass
            .iter()
            .filter(|o| o.ambiguous && o.s_matches.iter().any(|m| m == "m=0 plus m=d-1"))
            .count();
        out.push(line(
            "sum-over-strata",
            pass_fail(fails == 0 && !app.sumclass.is_empty()),
            format!(
                "{} cells, {fails} failed, {combined} ambiguous cells match the sum of both branches",
                app.sumclass.len()
            ),
        ));
    }
    let stable: Vec<_> = app.main_identity.iter().filter(|o| o.cutoff.is_some()).collect();
    let direct_fail = stable.iter().filter(|o| o.verdict_direct == Verdict::Fail).count();
    let inverse_fail = stable.iter().filter(|o| o.verdict_inverse == Verdict::Fail).count();
    let verdict = if direct_fail > 0 {
        Verdict::Fail
    } else if stable.len() < samples {
        Verdict::Indeterminate
    } else {
        Verdict::Pass
    };
    out.push(line(
        "main-identity",
        verdict,
        format!(
            "{} stabilized of {} sampled, {direct_fail} failed with S chosen by eps(chi) = 1",
            stable.len(),
            app.main_identity.len()
        ),
    ));
    out.push(line(
        "main-identity-inverse-labels",
        Verdict::Info,
        format!("{inverse_fail} of {} fail with S chosen by eps(chi^-1) = 1", stable.len()),
    ));
    if let Some(d) = &app.deligne {
        out.push(line(
            "deligne-twisting",
            pass_fail(d.failures.is_empty()),
            format!(
                "{} table pairs, {} general pairs, {} failed",
                d.table_pairs,
                d.general_pairs,
                d.failures.len()
            ),
        ));
        out.push(line(
            "omega-tilde-twist",
            pass_fail(d.eq1_failures.is_empty()),
            format!("{} pairs, {} failed", d.eq1_pairs, d.eq1_failures.len()),
        ));
    }
    out
}
