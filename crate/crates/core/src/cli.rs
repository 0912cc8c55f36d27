//! Command-line front end.
//!
//! Exit status: `0` when no check or census row failed, `1` when one did (or the
//! computation itself hit an internal inconsistency), `2` for usage and
//! configuration errors.

use crate::cache::{Cache, CacheStats};
use crate::census::Verdict;
use crate::characters::{CharSpace, MultChar};
use crate::engine::{
    census_checks, epsilon_omega_check, identity_checks, resolve_n_max, Engine,
};
use crate::epsilon::{epsilon_pair, gauss_sum};
use crate::error::{Error, Result};
use crate::padic::{catalog_tags, make_extension, AdditiveKind, ExtKind, PrimeField, QuadExt};
use crate::report::{
    render, CheckLine, EpsilonQuery, ExtensionReport, Format, ReportDocument, RunConfig,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "weiltwist", version, about = "Exact epsilon factors and twist counts for quadratic extensions of Q_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Characters restricting to omega, their epsilon signs, and the S/S' strata.
    Enumerate(Common),
    /// Epsilon factor of a single character.
    Epsilon(EpsilonArgs),
    /// Twist census for seeded theta.
    Census(CensusArgs),
    /// Every table check, the census and the identity suites.
    Verify(CensusArgs),
    /// Sum-over-strata, main identity and Deligne twisting checks.
    Identities(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Residue characteristic.
    #[arg(long)]
    p: u64,
    /// Extension tag (repeatable); `all` selects the whole catalog for `p`.
    #[arg(long = "ext", required = true)]
    ext: Vec<String>,
    /// Conductor cutoff; defaults per extension.
    #[arg(long)]
    nmax: Option<u32>,
    /// Seed for θ subsampling and identity sample points.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stabilized sample points wanted for the main identity.
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Report format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timing and cache statistics path; defaults to `<out>.timing.json`.
    #[arg(long)]
    timing: Option<PathBuf>,
    /// Cache directory (overrides the WEILTWIST_CACHE_DIR variable).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Neither read nor write the cache.
    #[arg(long)]
    no_cache: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Debug)]
struct CensusArgs {
    #[command(flatten)]
    common: Common,
    /// Ratio conductors a(θ/θ̄) to sample (repeatable or comma separated).
    #[arg(long = "ratio-conductor", value_delimiter = ',')]
    ratio_conductor: Vec<u32>,
    /// θ per ratio conductor.
    #[arg(long, default_value_t = 3)]
    count: usize,
}

#[derive(Args, Debug)]
struct EpsilonArgs {
    #[command(flatten)]
    common: Common,
    /// Canonical character encoding `n<level>:u<e1>.<e2>...:pi<num>/<den>`.
    #[arg(long = "char")]
    character: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Serialize)]
struct ExtTiming {
    tag: String,
    millis: u128,
    cache: CacheStats,
}

#[derive(Serialize)]
struct Timing {
    total_millis: u128,
    extensions: Vec<ExtTiming>,
    cache: CacheStats,
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownTag(..)
            | Error::NotPrime(_)
            | Error::LevelExceedsPolicy { .. }
            | Error::RestrictionUnsatisfiable(_)
            | Error::Infeasible(_)
            | Error::BadEncoding(_)
            | Error::Config(_)
            | Error::NotRegular
    )
}

/// Parses `argv` (including the program name), runs the command and returns the exit status.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(doc) => i32::from(doc.any_fail()),
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn resolve_tags(p: u64, tags: &[String]) -> Result<Vec<String>> {
    PrimeField::new(p)?;
    let mut out = Vec::new();
    for t in tags {
        if t == "all" {
            out.extend(catalog_tags(p).iter().map(|s| s.to_string()));
        } else {
            // Normalize aliases to the canonical tag.
            out.push(make_extension(p, t)?.tag);
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|t| seen.insert(t.clone()));
    Ok(out)
}

fn base_report(ext: &QuadExt, n_max: u32) -> ExtensionReport {
    ExtensionReport {
        p: ext.p(),
        tag: ext.tag.clone(),
        kind: match ext.kind {
            ExtKind::Ramified => "ramified".into(),
            ExtKind::Unramified => "unramified".into(),
        },
        d: ext.d,
        n_max,
        conventions: ext.conventions(),
        strata: Vec::new(),
        characters: Vec::new(),
        epsilon_omega: None,
        census: Vec::new(),
        identities: None,
        epsilon_query: None,
        checks: Vec::new(),
    }
}

fn execute(cli: Cli) -> Result<ReportDocument> {
    let started = Instant::now();
    let (name, common, census_args, character) = match &cli.command {
        Command::Enumerate(c) => ("enumerate", c, None, None),
        Command::Epsilon(a) => ("epsilon", &a.common, None, Some(a.character.clone())),
        Command::Census(a) => ("census", &a.common, Some(a), None),
        Command::Verify(a) => ("verify", &a.common, Some(a), None),
        Command::Identities(c) => ("identities", c, None, None),
    };
    if common.threads > 0 {
        // Fails only if a pool already exists (repeated in-process runs); harmless.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global();
    }
    let tags = resolve_tags(common.p, &common.ext)?;
    let (ratio_conductors, theta_count) = match census_args {
        Some(a) => (a.ratio_conductor.clone(), a.count),
        None => (Vec::new(), 0),
    };
    if census_args.is_some() && theta_count == 0 {
        return Err(Error::Config("--count must be positive".into()));
    }
    let config = RunConfig {
        command: name.to_string(),
        p: common.p,
        extensions: tags.clone(),
        n_max: common.nmax,
        ratio_conductors,
        theta_count,
        seed: common.seed,
        identity_samples: common.samples,
        character,
    };
    let cache = Cache::resolve(common.cache_dir.as_deref(), common.no_cache);
    let exts: Vec<QuadExt> = tags
        .iter()
        .map(|t| make_extension(common.p, t))
        .collect::<Result<_>>()?;
    let levels: Vec<u32> = exts
        .iter()
        .map(|e| resolve_n_max(e, common.nmax))
        .collect::<Result<_>>()?;

    let mut doc = ReportDocument::new(config.clone());
    let mut timings = Vec::new();
    let mut total_stats = CacheStats::default();
    for (ext, n) in exts.into_iter().zip(levels) {
        let t0 = Instant::now();
        let mut stats = CacheStats::default();
        let rep = match name {
            "epsilon" => epsilon_report(&ext, config.character.as_deref().unwrap_or(""))?,
            _ => {
                let engine = Engine::load(ext, n, &cache)?;
                stats.record(engine.cache_event);
                extension_report(&engine, &config)?
            }
        };
        total_stats.hits += stats.hits;
        total_stats.misses += stats.misses;
        total_stats.rejected += stats.rejected;
        total_stats.disabled += stats.disabled;
        timings.push(ExtTiming {
            tag: rep.tag.clone(),
            millis: t0.elapsed().as_millis(),
            cache: stats,
        });
        doc.extensions.push(rep);
    }

    let format = match common.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    let text = render(&doc, format)?;
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    let timing = Timing {
        total_millis: started.elapsed().as_millis(),
        extensions: timings,
        cache: total_stats,
    };
    let timing_path = common
        .timing
        .clone()
        .or_else(|| common.out.as_ref().map(|o| sidecar(o)));
    match timing_path {
        Some(p) => std::fs::write(p, serde_json::to_string_pretty(&timing)? + "\n")?,
        None => log::info!("timing: {}", serde_json::to_string(&timing)?),
    }
    for e in &doc.extensions {
        for c in e.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
            eprintln!("FAIL {} {}: {}", e.tag, c.name, c.detail);
        }
    }
    Ok(doc)
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".timing.json");
    PathBuf::from(s)
}

fn extension_report(engine: &Engine, cfg: &RunConfig) -> Result<ExtensionReport> {
    let mut rep = base_report(&engine.ext, engine.n_max);
    rep.strata = engine.strata_rows();
    let (w, wrow) = engine.epsilon_omega()?;
    rep.epsilon_omega = Some(wrow);
    let mut checks: Vec<CheckLine> = Vec::new();
    match cfg.command.as_str() {
        "enumerate" => {
            rep.characters = engine.character_rows();
            checks.extend(engine.table_checks(&rep.strata));
        }
        "census" => {
            let thetas = engine.thetas(&cfg.ratio_conductors, cfg.theta_count, cfg.seed)?;
            rep.census = engine.census(&thetas)?;
            checks.extend(census_checks(&rep.census));
        }
        "identities" => {
            let app = engine.identities(cfg.identity_samples, cfg.seed)?;
            checks.push(epsilon_omega_check(&engine.ext, &w));
            checks.extend(identity_checks(&engine.ext, &app, cfg.identity_samples));
            rep.identities = Some(app);
        }
        "verify" => {
            checks.extend(engine.table_checks(&rep.strata));
            checks.push(engine.gauss_modulus_check()?);
            checks.push(epsilon_omega_check(&engine.ext, &w));
            let thetas = engine.thetas(&cfg.ratio_conductors, cfg.theta_count, cfg.seed)?;
            rep.census = engine.census(&thetas)?;
            checks.extend(census_checks(&rep.census));
            let app = engine.identities(cfg.identity_samples, cfg.seed)?;
            checks.extend(identity_checks(&engine.ext, &app, cfg.identity_samples));
            rep.identities = Some(app);
        }
        other => return Err(Error::Config(format!("unknown command {other}"))),
    }
    rep.checks = checks;
    Ok(rep)
}

/// The level is taken from the encoding itself.
fn epsilon_report(ext: &QuadExt, encoding: &str) -> Result<ExtensionReport> {
    let (level, _, _) = MultChar::decode(encoding)?;
    if level == 0 {
        return Err(Error::BadEncoding(encoding.to_string()));
    }
    resolve_n_max(ext, Some(level))?;
    let space = CharSpace::new(ext, level)?;
    let chi = space.parse(encoding)?;
    let g = gauss_sum(&space, &chi, AdditiveKind::Psi0);
    let mut rep = base_report(ext, level);
    let g = match g {
        Ok(g) => g,
        Err(Error::ModulusMismatch) => {
            rep.checks.push(CheckLine {
                name: "gauss-sum-modulus".into(),
                verdict: Verdict::Fail,
                detail: format!("counterexample {encoding}"),
            });
            return Ok(rep);
        }
        Err(e) => return Err(e),
    };
    let (_, inv) = epsilon_pair(&space, &chi, AdditiveKind::Psi0)?;
    let q = ext.p();
    rep.epsilon_query = Some(EpsilonQuery {
        character: chi.encode(),
        conductor: chi.conductor,
        c_valuation: g.c_valuation,
        sign: g.eps.sign,
        gauss_sum: (&crate::cyclotomic::QHalfScaled::new(g.raw.clone(), q, 0)).into(),
        value: g.eps.raw.as_ref().map(|v| v.into()),
        inverse_sign: inv.sign,
    });
    rep.checks.push(CheckLine {
        name: "gauss-sum-modulus".into(),
        verdict: Verdict::Pass,
        detail: format!("raw*conj(raw) = {}^{}", ext.q_k(), chi.conductor),
    });
    Ok(rep)
}
