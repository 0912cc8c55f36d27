//! Report documents and their JSON and CSV forms.

use crate::census::{CensusReport, Verdict};
use crate::cyclotomic::QHalfScaled;
use crate::error::Result;
use crate::identities::{DeligneSummary, MainIdentityOutcome, SumClassOutcome};
use crate::padic::Conventions;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to re-run a command; echoed verbatim into the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub p: u64,
    pub extensions: Vec<String>,
    /// Explicit cutoff; `None` means the per-extension default.
    pub n_max: Option<u32>,
    /// Ratio conductors to sample `θ` for; empty means every reachable one.
    pub ratio_conductors: Vec<u32>,
    pub theta_count: usize,
    pub seed: u64,
    /// Number of stabilized sample points wanted for the main identity.
    pub identity_samples: usize,
    pub character: Option<String>,
}

/// An element `q^{halfpow/2}·Σ c_k ζ_M^k` with decimal coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawValue {
    pub root_order: u64,
    pub coeffs: Vec<String>,
    pub q: u64,
    pub halfpow: i32,
}

impl From<&QHalfScaled> for RawValue {
    fn from(v: &QHalfScaled) -> RawValue {
        RawValue {
            root_order: v.cyc.order,
            coeffs: v.cyc.coeffs.iter().map(|c| c.to_string()).collect(),
            q: v.q,
            halfpow: v.halfpow,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumRow {
    pub conductor: u32,
    pub s: u64,
    pub s_prime: u64,
    /// Closed-form size of each of `S(l)` and `S′(l)` (ramified only).
    pub expected: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterRow {
    pub encoding: String,
    pub conductor: u32,
    pub eps: i8,
    pub eps_inverse: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsOmegaRow {
    pub value: RawValue,
    pub omega_minus_one: i8,
    pub square_is_one: bool,
    pub twisted_square_is_one: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityAppendix {
    pub sumclass: Vec<SumClassOutcome>,
    pub main_identity: Vec<MainIdentityOutcome>,
    pub deligne: Option<DeligneSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsilonQuery {
    pub character: String,
    pub conductor: u32,
    pub c_valuation: i64,
    pub sign: Option<i8>,
    /// The unnormalized Gauss sum.
    pub gauss_sum: RawValue,
    /// The normalized factor, when it is not `±1`.
    pub value: Option<RawValue>,
    pub inverse_sign: Option<i8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub p: u64,
    pub tag: String,
    pub kind: String,
    pub d: u32,
    pub n_max: u32,
    pub conventions: Conventions,
    pub strata: Vec<StratumRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub characters: Vec<CharacterRow>,
    pub epsilon_omega: Option<EpsOmegaRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub census: Vec<CensusReport>,
    pub identities: Option<IdentityAppendix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_query: Option<EpsilonQuery>,
    pub checks: Vec<CheckLine>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub tool_version: String,
    pub config: RunConfig,
    pub extensions: Vec<ExtensionReport>,
}

impl ReportDocument {
    pub fn new(config: RunConfig) -> ReportDocument {
        ReportDocument {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            extensions: Vec::new(),
        }
    }

    /// Whether any census row or check failed.
    pub fn any_fail(&self) -> bool {
        self.extensions.iter().any(|e| {
            e.checks.iter().any(|c| c.verdict == Verdict::Fail)
                || e.census.iter().any(|c| !c.passed())
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "p",
    "ext",
    "theta",
    "ratio_conductor",
    "conductor",
    "s",
    "s_prime",
    "rplus",
    "rminus",
    "rdplus",
    "rdminus",
    "clause",
    "predicted",
    "verdict",
    "counterexample",
];

fn predicted_text(e: &crate::census::Expected) -> String {
    use crate::census::Expected::*;
    match e {
        Exact { rplus, rminus } => format!("exact {rplus}/{rminus}"),
        Total { total } => format!("total {total}"),
        AllOrNothing { s, s_prime } => format!("all-or-nothing {s}|{s_prime}"),
        LowerBound { bound } => format!("at-least {bound}"),
        ParityRule => "parity-rule".into(),
        Unspecified => "unspecified".into(),
    }
}

/// JSON with struct-declaration key order and a trailing newline.
pub fn to_json(doc: &ReportDocument) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<ReportDocument> {
    Ok(serde_json::from_str(s)?)
}

/// One row per `(θ, conductor)` across every extension in the document.
pub fn to_csv(doc: &ReportDocument) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for ext in &doc.extensions {
        for c in &ext.census {
            for r in &c.rows {
                w.write_record([
                    ext.p.to_string(),
                    ext.tag.clone(),
                    c.theta.clone(),
                    c.ratio_conductor.to_string(),
                    r.conductor.to_string(),
                    r.s_size.to_string(),
                    r.s_prime_size.to_string(),
                    r.rplus.to_string(),
                    r.rminus.to_string(),
                    r.rdplus.to_string(),
                    r.rdminus.to_string(),
                    format!("{:?}", r.prediction.clause),
                    predicted_text(&r.prediction.expected),
                    format!("{:?}", r.verdict).to_uppercase(),
                    r.counterexample.clone().unwrap_or_default(),
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render(doc: &ReportDocument, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(doc),
        Format::Csv => to_csv(doc),
    }
}

pub fn emit_report(doc: &ReportDocument, format: Format, out: &mut dyn Write) -> Result<()> {
    out.write_all(render(doc, format)?.as_bytes())?;
    Ok(())
}
