//! Strata `S(l)`, `S′(l)`, classification of twists `λθ` by their sign pair,
//! per-conductor occurrence counts and the predicted counts they are checked against.

use crate::characters::{CharSpace, MultChar};
use crate::epsilon::EpsTable;
use crate::error::{Error, Result};
use crate::padic::QuadExt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Indices (into [`EpsTable::chars`]) of the characters of one conductor, split by
/// the sign of `ε(χ^{-1}, ψ₀)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub conductor: u32,
    pub s: Vec<usize>,
    pub s_prime: Vec<usize>,
}

impl Stratum {
    pub fn total(&self) -> usize {
        self.s.len() + self.s_prime.len()
    }
}

/// The conductors `l ≤ n_max` at which `χ|_{F*} = ω` is possible.
pub fn feasible_levels(ext: &QuadExt, n_max: u32) -> Vec<u32> {
    if ext.is_ramified() {
        let d = ext.d;
        std::iter::once(2 * d - 1)
            .chain((d..).map(|f| 2 * f))
            .take_while(|&l| l <= n_max)
            .collect()
    } else {
        (0..=n_max).collect()
    }
}

pub fn build_s_sets(table: &EpsTable, n_max: u32) -> BTreeMap<u32, Stratum> {
    let mut out: BTreeMap<u32, Stratum> = BTreeMap::new();
    for (i, chi) in table.chars.iter().enumerate() {
        if chi.conductor > n_max {
            continue;
        }
        let st = out.entry(chi.conductor).or_insert_with(|| Stratum {
            conductor: chi.conductor,
            ..Stratum::default()
        });
        if table.eps_inv[i] == 1 {
            st.s.push(i);
        } else {
            st.s_prime.push(i);
        }
    }
    out
}

/// `(|S(2d−1)|, |S(2f+2d)|)`-type closed forms: the expected size of `S(l)` (and of
/// `S′(l)`) in the ramified case.
pub fn expected_stratum_size(ext: &QuadExt, l: u32) -> Option<u64> {
    if !ext.is_ramified() {
        return None;
    }
    let q = ext.q();
    let d = ext.d;
    if l == 2 * d - 1 {
        Some(q.pow(d - 1))
    } else if l.is_multiple_of(2) && l >= 2 * d {
        let f = l / 2 - d;
        Some((q - 1) * q.pow(f + d - 1))
    } else {
        Some(0)
    }
}

/// Number of characters of conductor `l` extending `ω` in the unramified case.
fn unramified_stratum_total(q: u64, l: u32) -> u64 {
    match l {
        0 => 1,
        1 => q,
        _ => (q + 1) * (q - 1) * q.pow(l - 2),
    }
}

/// `(ε(λ^{-1},ψ₀), ε(λ^{-1}·θ̄/θ,ψ₀))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignPair {
    pub s1: i8,
    pub s2: i8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OccurrenceClass {
    Rplus,
    Rminus,
    RDplus,
    RDminus,
}

impl OccurrenceClass {
    pub fn from_pair(p: SignPair) -> OccurrenceClass {
        match (p.s1, p.s2) {
            (1, 1) => OccurrenceClass::Rplus,
            (-1, -1) => OccurrenceClass::Rminus,
            (1, _) => OccurrenceClass::RDplus,
            _ => OccurrenceClass::RDminus,
        }
    }

    /// Whether `λθ` occurs in `r_θ` itself.
    pub fn occurs(self) -> bool {
        matches!(self, OccurrenceClass::Rplus | OccurrenceClass::Rminus)
    }
}

/// Checks `θ` is regular and returns `ρ = θ/θ̄`.
pub fn regular_ratio(space: &CharSpace, theta: &MultChar) -> Result<MultChar> {
    let r = space.ratio(theta)?;
    if r.is_trivial() {
        return Err(Error::NotRegular);
    }
    Ok(r)
}

/// Class of `λθ` given the precomputed ratio `ρ = θ/θ̄`.
pub fn classify_with_ratio(
    space: &CharSpace,
    table: &EpsTable,
    lambda: &MultChar,
    rho: &MultChar,
) -> Result<(SignPair, OccurrenceClass)> {
    let s1 = table.sign_inv(lambda)?;
    let s2 = table.sign_inv(&space.mul(lambda, rho))?;
    let pair = SignPair { s1, s2 };
    Ok((pair, OccurrenceClass::from_pair(pair)))
}

pub fn classify_occurrence(
    space: &CharSpace,
    table: &EpsTable,
    lambda: &MultChar,
    theta: &MultChar,
) -> Result<(SignPair, OccurrenceClass)> {
    let rho = regular_ratio(space, theta)?;
    if !space.restricts_to_omega(lambda) {
        return Err(Error::RestrictionViolated(lambda.encode()));
    }
    classify_with_ratio(space, table, lambda, &rho)
}

/// The statement that applies to a `(a(θ/θ̄), l)` cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Clause {
    /// Ratio `μ`, odd stratum: no twist occurs.
    NoOddTwist,
    /// `0 < a(ρ) < 2d−1`, odd stratum: half of `S`, half of `S′`.
    HalfOddTwists,
    /// `a(ρ) > 2d−1`, odd stratum: `|S_l|/2` in total.
    OddBelowRatio,
    /// `a(ρ) ≤ 2f`, stratum `2f+2d`: everything occurs.
    AllEvenTwists,
    /// `a(ρ) = 2f+2 < l`: `(q−2)/2·q^{f+d−1}` in each of `r_θ±`.
    QMinusTwoHalf,
    /// `2f+2 < a(ρ) < l`: half of `S`, half of `S′`.
    HalfEvenTwists,
    /// `a(ρ) = l`: at least `q^{f+d−1}`, with equality when `q = 2`.
    EqualConductorBound,
    /// `l < a(ρ) < l+2d`: `|S_l|/2` in total.
    MidRangeHalf,
    /// `a(ρ) ≥ l+2d`: all of `S` or all of `S′`, not both.
    AllOrNothing,
    /// Unramified, `a(ρ) < l`.
    UnramifiedAbove,
    /// Unramified, `l < a(ρ)`.
    UnramifiedBelow,
    /// Unramified, `l = a(ρ)`.
    UnramifiedEqual,
    Unspecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expected {
    /// Exact counts in `r_θ+` (from `S`) and `r_θ−` (from `S′`).
    Exact { rplus: u64, rminus: u64 },
    /// Exact total number of occurrences.
    Total { total: u64 },
    AllOrNothing { s: u64, s_prime: u64 },
    LowerBound { bound: u64 },
    /// Per-character rule `a(λρ) ≡ a(λ) (mod 2)`.
    ParityRule,
    Unspecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub clause: Clause,
    pub expected: Expected,
}

/// Selects the applicable statement for ratio conductor `a_ratio` (0 meaning the
/// ratio `μ`) and stratum `l`.
pub fn predict_count(ext: &QuadExt, a_ratio: u32, l: u32) -> Result<Prediction> {
    let q = ext.q();
    let d = ext.d;
    let pred = |clause, expected| Ok(Prediction { clause, expected });
    if !ext.is_ramified() {
        if a_ratio == 0 {
            return Err(Error::Infeasible("unramified ratio must be ramified".into()));
        }
        let t = if ext.p() == 2 { 1 } else { 0 };
        let total = unramified_stratum_total(q, l);
        let all = if (l + t).is_multiple_of(2) {
            Expected::Exact {
                rplus: total,
                rminus: 0,
            }
        } else {
            Expected::Exact {
                rplus: 0,
                rminus: total,
            }
        };
        return if a_ratio < l {
            pred(Clause::UnramifiedAbove, all)
        } else if l < a_ratio {
            if (l + a_ratio).is_multiple_of(2) {
                pred(Clause::UnramifiedBelow, all)
            } else {
                pred(
                    Clause::UnramifiedBelow,
                    Expected::Exact {
                        rplus: 0,
                        rminus: 0,
                    },
                )
            }
        } else {
            pred(Clause::UnramifiedEqual, Expected::ParityRule)
        };
    }
    if a_ratio % 2 == 1 {
        return Err(Error::Infeasible(format!("odd ratio conductor {a_ratio}")));
    }
    let size = expected_stratum_size(ext, l).unwrap_or(0);
    if l == 2 * d - 1 {
        return if a_ratio == 0 {
            pred(
                Clause::NoOddTwist,
                Expected::Exact {
                    rplus: 0,
                    rminus: 0,
                },
            )
        } else if a_ratio < l {
            pred(
                Clause::HalfOddTwists,
                Expected::Exact {
                    rplus: size / 2,
                    rminus: size / 2,
                },
            )
        } else {
            pred(Clause::OddBelowRatio, Expected::Total { total: size })
        };
    }
    if l % 2 == 1 || l < 2 * d {
        return Err(Error::Infeasible(format!("stratum {l} is empty for d = {d}")));
    }
    let f = l / 2 - d;
    let base = q.pow(f + d - 1);
    if a_ratio <= 2 * f {
        pred(
            Clause::AllEvenTwists,
            Expected::Exact {
                rplus: size,
                rminus: size,
            },
        )
    } else if a_ratio == l {
        if q == 2 {
            pred(
                Clause::EqualConductorBound,
                Expected::Total { total: base },
            )
        } else {
            pred(
                Clause::EqualConductorBound,
                Expected::LowerBound { bound: base },
            )
        }
    } else if a_ratio == 2 * f + 2 && d >= 2 {
        let k = (q - 2) / 2 * base;
        pred(Clause::QMinusTwoHalf, Expected::Exact { rplus: k, rminus: k })
    } else if a_ratio < l && d >= 2 {
        pred(
            Clause::HalfEvenTwists,
            Expected::Exact {
                rplus: size / 2,
                rminus: size / 2,
            },
        )
    } else if a_ratio > l && a_ratio < l + 2 * d {
        pred(Clause::MidRangeHalf, Expected::Total { total: size })
    } else if a_ratio >= l + 2 * d {
        pred(
            Clause::AllOrNothing,
            Expected::AllOrNothing {
                s: size,
                s_prime: size,
            },
        )
    } else {
        pred(Clause::Unspecified, Expected::Unspecified)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
    Info,
}

/// Counts for one `(θ, l)` cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusRow {
    pub conductor: u32,
    pub s_size: u64,
    pub s_prime_size: u64,
    pub rplus: u64,
    pub rminus: u64,
    pub rdplus: u64,
    pub rdminus: u64,
    pub prediction: Prediction,
    pub verdict: Verdict,
    /// For a failed row, the first character whose class contradicts the prediction.
    pub counterexample: Option<String>,
    /// Unramified equal-conductor cells: characters where the first subcase's
    /// literal wording (occurrence whenever `a(λρ) < a(λ)`) is contradicted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub literal_counterexamples: Vec<String>,
}

impl CensusRow {
    pub fn occurrences(&self) -> u64 {
        self.rplus + self.rminus
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub p: u64,
    pub ext: String,
    pub theta: String,
    pub theta_conductor: u32,
    pub ratio: String,
    pub ratio_conductor: u32,
    pub rows: Vec<CensusRow>,
}

impl CensusReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

struct Classified<'a> {
    chi: &'a MultChar,
    in_s: bool,
    class: OccurrenceClass,
    ratio_twist_conductor: u32,
}

fn judge(ext: &QuadExt, row: &mut CensusRow, items: &[Classified]) {
    let first = |pred: &dyn Fn(&Classified) -> bool| -> Option<String> {
        items.iter().find(|c| pred(c)).map(|c| c.chi.encode())
    };
    let (ok, cx) = match row.prediction.expected {
        Expected::Exact { rplus, rminus } => {
            let ok = row.rplus == rplus && row.rminus == rminus;
            let cx = if row.rplus > rplus {
                first(&|c| c.class == OccurrenceClass::Rplus)
            } else if row.rplus < rplus {
                first(&|c| c.in_s && c.class != OccurrenceClass::Rplus)
            } else if row.rminus > rminus {
                first(&|c| c.class == OccurrenceClass::Rminus)
            } else {
                first(&|c| !c.in_s && c.class != OccurrenceClass::Rminus)
            };
            (ok, cx)
        }
        Expected::Total { total } => {
            let n = row.occurrences();
            let cx = if n > total {
                first(&|c| c.class.occurs())
            } else {
                first(&|c| !c.class.occurs())
            };
            (n == total, cx)
        }
        Expected::LowerBound { bound } => (
            row.occurrences() >= bound,
            first(&|c| !c.class.occurs()),
        ),
        Expected::AllOrNothing { s, s_prime } => {
            let a = row.rplus == s && row.rminus == 0;
            let b = row.rplus == 0 && row.rminus == s_prime;
            let cx = if row.rplus > 0 {
                first(&|c| c.in_s && !c.class.occurs())
            } else {
                first(&|c| !c.in_s && !c.class.occurs())
            };
            (a || b, cx)
        }
        Expected::ParityRule => {
            let bad = |c: &Classified| {
                c.class.occurs() != (c.ratio_twist_conductor % 2 == c.chi.conductor % 2)
            };
            row.literal_counterexamples = items
                .iter()
                .filter(|c| c.ratio_twist_conductor < c.chi.conductor && !c.class.occurs())
                .map(|c| c.chi.encode())
                .collect();
            (!items.iter().any(bad), first(&bad))
        }
        Expected::Unspecified => {
            row.verdict = Verdict::Info;
            return;
        }
    };
    // The closed-form stratum sizes are part of every ramified prediction.
    let size_ok = match expected_stratum_size(ext, row.conductor) {
        Some(k) => row.s_size == k && row.s_prime_size == k,
        None => true,
    };
    if ok && size_ok {
        row.verdict = Verdict::Pass;
    } else {
        row.verdict = Verdict::Fail;
        row.counterexample = cx.or_else(|| items.first().map(|c| c.chi.encode()));
    }
}

/// Occurrence counts of `λθ`, for `λ` of every feasible conductor `≤ n_max`.
pub fn census(
    space: &CharSpace,
    table: &EpsTable,
    strata: &BTreeMap<u32, Stratum>,
    theta: &MultChar,
    n_max: u32,
) -> Result<CensusReport> {
    let ext = &space.ext;
    let rho = regular_ratio(space, theta)?;
    let mut rows = Vec::new();
    for l in feasible_levels(ext, n_max) {
        let empty = Stratum {
            conductor: l,
            ..Stratum::default()
        };
        let st = strata.get(&l).unwrap_or(&empty);
        let mut items = Vec::with_capacity(st.total());
        for (group, in_s) in [(&st.s, true), (&st.s_prime, false)] {
            for &i in group {
                let chi = &table.chars[i];
                let twisted = space.mul(chi, &rho);
                let s2 = table.sign_inv(&twisted)?;
                let class = OccurrenceClass::from_pair(SignPair {
                    s1: table.eps_inv[i],
                    s2,
                });
                items.push(Classified {
                    chi,
                    in_s,
                    class,
                    ratio_twist_conductor: twisted.conductor,
                });
            }
        }
        let count = |k: OccurrenceClass| items.iter().filter(|c| c.class == k).count() as u64;
        let mut row = CensusRow {
            conductor: l,
            s_size: st.s.len() as u64,
            s_prime_size: st.s_prime.len() as u64,
            rplus: count(OccurrenceClass::Rplus),
            rminus: count(OccurrenceClass::Rminus),
            rdplus: count(OccurrenceClass::RDplus),
            rdminus: count(OccurrenceClass::RDminus),
            prediction: predict_count(ext, rho.conductor, l)?,
            verdict: Verdict::Info,
            counterexample: None,
            literal_counterexamples: Vec::new(),
        };
        if row.rplus + row.rdplus != row.s_size || row.rminus + row.rdminus != row.s_prime_size {
            return Err(Error::Invariant(format!("partition identity fails at l = {l}")));
        }
        judge(ext, &mut row, &items);
        rows.push(row);
    }
    Ok(CensusReport {
        p: ext.p(),
        ext: ext.tag.clone(),
        theta: theta.encode(),
        theta_conductor: theta.conductor,
        ratio: rho.encode(),
        ratio_conductor: rho.conductor,
        rows,
    })
}

/// The ratio conductors a regular `θ` can have at level `n`.
pub fn reachable_ratio_conductors(ext: &QuadExt, n: u32) -> Vec<u32> {
    if ext.is_ramified() {
        (0..=n).step_by(2).collect()
    } else {
        (1..=n).collect()
    }
}

/// Runs [`census`] for several `θ` and collects every row.
pub fn verify_suite(
    space: &CharSpace,
    table: &EpsTable,
    thetas: &[MultChar],
    n_max: u32,
) -> Result<Vec<CensusReport>> {
    use rayon::prelude::*;
    let strata = build_s_sets(table, n_max);
    thetas
        .par_iter()
        .map(|t| census(space, table, &strata, t, n_max))
        .collect()
}
