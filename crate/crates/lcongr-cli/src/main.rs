mod cache;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lcongr::matgrp::{self, DensityProfile, Tables};
use lcongr::{checks, density, kn, lseries, modsym, Curve, Dataset, DirichletCharacter};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use cache::Cache;

/// Largest accepted sweep bound.
const MAX_LIMIT: u64 = 10_000_000;
const SIG_DIGITS: usize = 12;
const PRECISION_RANGE: (f64, f64) = (1e-12, 1e-4);

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] lcongr::Error),
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use lcongr::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Lib(
                E::UnknownLabel(_)
                | E::ParseError { .. }
                | E::ValidationError { .. }
                | E::Invalid(_)
                | E::NoSuchCharacter { .. },
            ) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "lcongr", version, about = "Twisted L-values of elliptic curves and their residues")]
struct Cli {
    /// JSON-lines curve file to use instead of the bundled corpus.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Coefficient cache directory; overrides LCONGR_CACHE_DIR.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Required accuracy of analytic values (series tail and functional-equation gap).
    #[arg(long, global = true, default_value_t = 1e-8)]
    precision: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Args, Clone)]
struct CurveArg {
    #[arg(long)]
    curve: String,
}

#[derive(Subcommand)]
enum Command {
    /// L(E, 1), the real period and the recognized ratio.
    Lvalue(CurveArg),
    /// Algebraic twisted L-value for a character "p:q:chi(a)=zE".
    Twist {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long = "char")]
        character: String,
    },
    /// Modular symbols: one cusp, a Hecke identity, or a Birch sum.
    Modsym {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, requires = "m")]
        a: Option<i64>,
        #[arg(long)]
        m: Option<i64>,
        #[arg(long)]
        hecke: Option<u64>,
        #[arg(long = "birch")]
        birch: Option<String>,
    },
    /// Residue of the twisted value against -L(E) #E(F_p).
    Congruence {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long = "char")]
        character: String,
    },
    /// Run a verification suite.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Regenerate the Galois-image tables.
    VerifyTables {
        /// 1 or 2; both when omitted.
        #[arg(long)]
        which: Option<u8>,
    },
    /// Residual density sweep over prime conductors.
    Density {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 3)]
        q: u64,
        #[arg(long, default_value_t = 50_000)]
        limit: u64,
        /// "table1:GL3", "table2:27.648.18.1" or a bare row label.
        #[arg(long)]
        predict: Option<String>,
        /// Also write per-prime residues as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Number of seeded spot checks against full twisted L-values.
        #[arg(long, default_value_t = 0)]
        spot: usize,
    },
    /// Residue histogram of the normalized cubic values and the limiting profile.
    Kn {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 50_000)]
        limit: u64,
        /// Also compare full L-values with the prediction for p up to this bound.
        #[arg(long, default_value_t = 0)]
        verify: u64,
    },
    /// Empirical gcd of the norms of L^+ over the first conductors.
    KnGcd {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = kn::DEFAULT_SAMPLE)]
        sample: usize,
        #[arg(long, default_value_t = 3)]
        q: u64,
    },
    /// Fill the coefficient cache.
    CacheWarm {
        #[arg(long, required_unless_present = "all", conflicts_with = "all")]
        curve: Option<String>,
        /// Every corpus curve.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = 10_000)]
        nmax: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Section3,
    Section5,
    Valuation,
}

struct Outcome {
    report: Value,
    passed: bool,
    summary: String,
}

fn outcome<T: Serialize>(report: &T, passed: bool, summary: String) -> Result<Outcome, CliError> {
    let report = serde_json::to_value(report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome { report, passed, summary })
}

/// Rounds every float to SIG_DIGITS significant digits so reports are byte-stable.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, x)| (k, round_floats(x))).collect()),
        other => other,
    }
}

fn csv_cell(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// Arrays of objects become one row per element; a single object becomes key,value rows.
fn to_csv(v: &Value) -> String {
    let mut out = String::new();
    match v {
        Value::Array(rows) if rows.iter().all(Value::is_object) && !rows.is_empty() => {
            let keys: Vec<&String> = rows[0].as_object().map(|m| m.keys().collect()).unwrap_or_default();
            out.push_str(&keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","));
            out.push('\n');
            for r in rows {
                let cells: Vec<String> = keys.iter().map(|k| csv_cell(&r[k.as_str()])).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Value::Object(m) => {
            out.push_str("key,value\n");
            for (k, x) in m {
                out.push_str(&format!("{},{}\n", csv_cell(&Value::String(k.clone())), csv_cell(x)));
            }
        }
        other => {
            out.push_str(&csv_cell(other));
            out.push('\n');
        }
    }
    out
}

struct Context {
    data: Dataset,
    cache: Option<Cache>,
    precision: f64,
}

impl Context {
    fn curve(&self, label: &str) -> Result<Curve, CliError> {
        let d = self.data.data(label)?;
        Ok(match &self.cache {
            Some(c) => c.curve(d),
            None => Curve::new(d.clone()),
        })
    }

    fn persist(&self, curve: &Curve) -> Result<(), CliError> {
        match &self.cache {
            Some(c) => c.persist(curve),
            None => Ok(()),
        }
    }
}

#[derive(Serialize)]
struct UntwistedReport {
    curve: String,
    root_number: i8,
    analytic: f64,
    period: f64,
    lratio: String,
    expected_lratio: Option<String>,
    matches: Option<bool>,
}

fn cmd_lvalue(ctx: &Context, label: &str) -> Result<Outcome, CliError> {
    let e = ctx.curve(label)?;
    let w = lseries::root_number(&e)?;
    let analytic = if w == 1 { lseries::lvalue_untwisted::<f64>(&e)? } else { 0.0 };
    let lratio = lseries::algebraic_lvalue(&e)?;
    let expected = e.data.lratio.clone();
    let matches = expected.as_ref().map(|x| *x == lratio);
    let r = UntwistedReport {
        curve: label.to_string(),
        root_number: w,
        analytic,
        period: lseries::real_period(&e.data),
        lratio: lratio.to_string(),
        expected_lratio: expected.map(|x| x.to_string()),
        matches,
    };
    ctx.persist(&e)?;
    outcome(&r, matches != Some(false), format!("{label}: L(E,1)/Omega = {lratio}"))
}

fn cmd_twist(ctx: &Context, label: &str, spec: &str) -> Result<Outcome, CliError> {
    let e = ctx.curve(label)?;
    let chi = DirichletCharacter::parse(spec)?;
    let out = if chi.coprime_to(e.conductor()) {
        let r = lseries::algebraic_twisted_lvalue(&e, &chi)?;
        let accurate = r.tail_bound <= ctx.precision && r.consistency <= ctx.precision;
        let s = format!("{label} twisted by {}: {}", r.character, r.algebraic);
        outcome(&r, accurate, s)
    } else {
        let r = lseries::twisted_lvalue_clash(&e, &chi)?;
        let s = format!("{label} twisted by {}: {} (integral: {})", r.character, r.algebraic, r.integral);
        outcome(&r, r.integral, s)
    };
    ctx.persist(&e)?;
    out
}

fn cmd_modsym(
    ctx: &Context,
    label: &str,
    a: Option<i64>,
    m: Option<i64>,
    hecke: Option<u64>,
    birch: Option<&str>,
) -> Result<Outcome, CliError> {
    let e = ctx.curve(label)?;
    let out = match (a.zip(m), hecke, birch) {
        (Some((a, m)), None, None) => {
            let r = modsym::mu_plus(&e, a, m)?;
            let s = format!("mu+({a}/{m}) = {}", r.plus);
            outcome(&r, true, s)
        }
        (None, Some(n), None) => {
            let r = modsym::hecke_identity(&e, n)?;
            let s = format!("Hecke identity n = {n}: {} vs {} ({})", r.lhs, r.rhs, r.holds);
            outcome(&r, r.holds, s)
        }
        (None, None, Some(spec)) => {
            let chi = DirichletCharacter::parse(spec)?;
            let sum = modsym::birch_sum(&e, &chi)?;
            let series = lseries::algebraic_twisted_lvalue(&e, &chi)?.algebraic;
            let c0 = lcongr::arith::rat_int(e.data.c0 as i64);
            let expected = series.scale(&c0);
            let holds = sum == expected;
            let r = serde_json::json!({
                "curve": label,
                "character": chi.id(),
                "birch_sum": sum.to_string(),
                "c0_times_series": expected.to_string(),
                "holds": holds,
            });
            outcome(&r, holds, format!("Birch sum {sum} vs series {expected}"))
        }
        _ => return Err(CliError::Usage("give exactly one of --a/--m, --hecke, --birch".into())),
    };
    ctx.persist(&e)?;
    out
}

fn cmd_congruence(ctx: &Context, label: &str, spec: &str) -> Result<Outcome, CliError> {
    let e = ctx.curve(label)?;
    let chi = DirichletCharacter::parse(spec)?;
    let r = modsym::congruence_check(&e, &chi)?;
    ctx.persist(&e)?;
    let s = format!("{label} {}: {} = {} mod (1 - z): {}", r.character, r.lhs_residue, r.rhs_residue, r.matches);
    outcome(&r, r.matches, s)
}

fn cmd_check(ctx: &Context, suite: Suite) -> Result<Outcome, CliError> {
    match suite {
        Suite::Section3 => {
            let r = checks::symbol_suite(&ctx.data)?;
            let failed = r.iter().filter(|c| !c.holds).count();
            outcome(&r, failed == 0, format!("section3: {} checks, {failed} failed", r.len()))
        }
        Suite::Section5 => {
            let r = checks::worked_examples_suite(&ctx.data)?;
            let failed = r.iter().filter(|c| !c.holds).count();
            outcome(&r, failed == 0, format!("section5: {} examples, {failed} failed", r.len()))
        }
        Suite::Valuation => {
            let r = checks::valuation_suite(&ctx.data, &[3, 5, 7])?;
            let failed = r.iter().filter(|c| !c.bound_satisfied).count();
            outcome(&r, failed == 0, format!("valuation: {} checks, {failed} failed", r.len()))
        }
    }
}

fn cmd_verify_tables(which: Option<u8>) -> Result<Outcome, CliError> {
    let tables = Tables::bundled();
    let which: Vec<u8> = match which {
        Some(w @ (1 | 2)) => vec![w],
        Some(w) => return Err(CliError::Usage(format!("no table {w}"))),
        None => vec![1, 2],
    };
    let mut rows = Vec::new();
    for w in which {
        rows.extend(matgrp::verify_table(w, &tables)?);
    }
    let failed = rows.iter().filter(|r| !r.holds).count();
    outcome(&rows, failed == 0, format!("{} rows, {failed} failed", rows.len()))
}

fn parse_prediction(e: &Curve, spec: &str) -> Result<DensityProfile, CliError> {
    let label = match spec.split_once(':') {
        Some(("table1" | "table2", l)) => l,
        Some((t, _)) => return Err(CliError::Usage(format!("unknown table '{t}' in --predict"))),
        None => spec,
    };
    Ok(density::predict(e, Some(label), &Tables::bundled())?.profile)
}

fn check_limit(limit: u64) -> Result<(), CliError> {
    if limit > MAX_LIMIT {
        return Err(CliError::Usage(format!("limit {limit} exceeds {MAX_LIMIT}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct DensityReport {
    sweep: density::SweepResult,
    spot_checks: Option<density::SpotReport>,
}

fn cmd_density(
    ctx: &Context,
    label: &str,
    q: u64,
    limit: u64,
    predict: Option<&str>,
    csv: Option<&PathBuf>,
    spot: usize,
) -> Result<Outcome, CliError> {
    check_limit(limit)?;
    let e = ctx.curve(label)?;
    let sweep = match predict {
        Some(spec) => density::sweep_against(&e, q, limit, parse_prediction(&e, spec)?)?,
        None => density::sweep(&e, q, limit)?,
    };
    if let Some(path) = csv {
        let mut text = String::from("p,residue\n");
        for (p, r) in density::residues(&e, q, limit)? {
            text.push_str(&format!("{p},{r}\n"));
        }
        std::fs::write(path, text).map_err(|err| CliError::Io(format!("{}: {err}", path.display())))?;
    }
    let spot_checks = if spot > 0 { Some(density::spot_check(&e, q, spot, density::SPOT_SEED)?) } else { None };
    ctx.persist(&e)?;
    let passed = spot_checks.as_ref().is_none_or(|s| s.holds);
    let summary = format!(
        "{label} q = {q}, X = {limit}: {} over {} primes; predicted {}",
        sweep.empirical,
        sweep.eligible_primes,
        sweep.predicted.as_ref().map_or("none".to_string(), |p| p.to_string())
    );
    outcome(&DensityReport { sweep, spot_checks }, passed, summary)
}

#[derive(Serialize)]
struct KnReport {
    delta_prime: kn::DeltaPrime,
    records: Option<Vec<kn::KnRecord>>,
}

fn cmd_kn(ctx: &Context, label: &str, limit: u64, verify: u64) -> Result<Outcome, CliError> {
    check_limit(limit)?;
    let e = ctx.curve(label)?;
    if e.data.kn_out_of_method {
        return Err(CliError::Lib(lcongr::Error::HypothesisFailed(format!(
            "{label} is unsupported: 3 divides its gcd"
        ))));
    }
    let delta_prime = kn::delta_prime(&e, limit)?;
    let records = if verify > 0 {
        let g = kn::estimate_gcd(&e, 3, &kn::default_conductors(&e, 3, kn::DEFAULT_SAMPLE))?;
        Some(kn::verify_residues(&e, g.gcd, verify)?)
    } else {
        None
    };
    ctx.persist(&e)?;
    let passed = records.as_ref().is_none_or(|rs| rs.iter().all(|r| r.holds));
    let summary = format!(
        "{label}: {} over {} primes (target {}), max deviation {:.4}",
        delta_prime.empirical, delta_prime.eligible_primes, delta_prime.target, delta_prime.max_abs_deviation
    );
    outcome(&KnReport { delta_prime, records }, passed, summary)
}

fn cmd_kn_gcd(ctx: &Context, label: &str, sample: usize, q: u64) -> Result<Outcome, CliError> {
    let e = ctx.curve(label)?;
    let r = kn::estimate_gcd(&e, q, &kn::default_conductors(&e, q, sample))?;
    ctx.persist(&e)?;
    let s = format!("{label}: gcd {} (least-period normalization {}), stable {}", r.gcd, r.gcd_least_period, r.stable);
    outcome(&r, r.stable, s)
}

fn cmd_cache_warm(ctx: &Context, label: Option<&str>, nmax: usize) -> Result<Outcome, CliError> {
    let cache = ctx
        .cache
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("set {} to use the cache", cache::ENV_VAR)))?;
    let labels: Vec<String> = match label {
        Some(l) => vec![ctx.data.data(l)?.label.clone()],
        None => ctx.data.labels().map(str::to_string).collect(),
    };
    let mut warmed = Vec::new();
    for l in &labels {
        let e = ctx.curve(l)?;
        e.coefficients(nmax);
        cache.persist(&e)?;
        warmed.push(serde_json::json!({ "curve": l, "nmax": e.coefficients(0).nmax() }));
    }
    outcome(&warmed, true, format!("warmed {} tables to n = {nmax}", labels.len()))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let data = match &cli.dataset {
        Some(p) => Dataset::load(p)?,
        None => Dataset::bundled(),
    };
    let (lo, hi) = PRECISION_RANGE;
    if !(lo..=hi).contains(&cli.precision) {
        return Err(CliError::Usage(format!("precision {} outside [{lo:e}, {hi:e}]", cli.precision)));
    }
    let cache = cli.cache.clone().map(Cache::new).or_else(Cache::from_env);
    let ctx = Context { data, cache, precision: cli.precision };
    match &cli.command {
        Command::Lvalue(c) => cmd_lvalue(&ctx, &c.curve),
        Command::Twist { curve, character } => cmd_twist(&ctx, &curve.curve, character),
        Command::Modsym { curve, a, m, hecke, birch } => cmd_modsym(&ctx, &curve.curve, *a, *m, *hecke, birch.as_deref()),
        Command::Congruence { curve, character } => cmd_congruence(&ctx, &curve.curve, character),
        Command::Check { suite } => cmd_check(&ctx, *suite),
        Command::VerifyTables { which } => cmd_verify_tables(*which),
        Command::Density { curve, q, limit, predict, csv, spot } => {
            cmd_density(&ctx, &curve.curve, *q, *limit, predict.as_deref(), csv.as_ref(), *spot)
        }
        Command::Kn { curve, limit, verify } => cmd_kn(&ctx, &curve.curve, *limit, *verify),
        Command::KnGcd { curve, sample, q } => cmd_kn_gcd(&ctx, &curve.curve, *sample, *q),
        Command::CacheWarm { curve, nmax, .. } => cmd_cache_warm(&ctx, curve.as_deref(), *nmax),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            let body = round_floats(o.report);
            match cli.format {
                Format::Text => println!("{}", o.summary),
                Format::Csv => print!("{}", to_csv(&body)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&body).unwrap_or_default()),
            }
            eprintln!("{} {}", if o.passed { "PASS" } else { "FAIL" }, o.summary);
            ExitCode::from(if o.passed { 0 } else { 1 })
        }
        Err(e) => {
            let code = e.exit_code();
            let err = serde_json::json!({ "error": e.to_string(), "exit_code": code });
            println!("{}", serde_json::to_string_pretty(&err).unwrap_or_default());
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
