//! `qrank`: command-line front end for the rank-growth verification
//! library. Subcommands wrap one library module each and emit a canonical
//! JSON report on stdout: fixed key order, exact integers as decimal
//! strings, floating-point values tagged with their working precision.
//!
//! Exit codes: 0 = all checks passed, 1 = a mathematical check failed or a
//! search was exhausted, 2 = input/IO/configuration error.

use clap::{Args, Parser, Subcommand};
use qrank_core::classfield::{quad_order, verify_inert_step, verify_tower_p, ClassFieldError};
use qrank_core::heegner::{
    heegner_trace_to_rational, verify_norm_inert, verify_norm_tower, HeegnerError,
};
use qrank_core::primesearch::{find_q, verify_conditions, PrimeSearchError};
use qrank_core::recurrence::{first_nonintegral, generate, valuation_profile, NonIntegralOutcome};
use qrank_core::witness::{independence_certificate, scan_family, WitnessError};
use qrank_core::{ApTable, Catalog, QuadField, Rat};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const BUNDLED_CATALOG: &str = include_str!("../assets/catalog.jsonl");

#[derive(Parser)]
#[command(
    name = "qrank",
    version,
    about = "desk verification of rank growth over fixed fields"
)]
struct Cli {
    /// Path to a JSON-lines curve catalog (defaults to the bundled one).
    #[arg(long, global = true)]
    catalog: Option<String>,
    /// Also write the report bytes to this file.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate a_p for good primes up to a bound, with a CSV cache.
    Ap(ApArgs),
    /// Produce a family of independent quadratic witness points.
    Witness(WitnessArgs),
    /// Verify ring-class degree formulas by form enumeration.
    Classfield(ClassfieldArgs),
    /// Heegner point computation and norm-relation verification.
    Heegner(HeegnerArgs),
    /// Find the auxiliary prime q for an inert prime p.
    Primesearch(PrimesearchArgs),
    /// Run the p c_{n+1} = a_p c_n - c_{n-1} integrality recurrence.
    Recurrence(RecurrenceArgs),
}

#[derive(Args)]
struct ApArgs {
    /// Curve label in the catalog.
    curve: String,
    #[arg(long, default_value_t = 100)]
    max_prime: u64,
    /// CSV cache path (`p,ap` rows); merged before counting, rewritten after.
    #[arg(long)]
    cache: Option<String>,
}

#[derive(Args)]
struct WitnessArgs {
    curve: String,
    /// Number of family members to certify.
    #[arg(long, default_value_t = 5)]
    count: usize,
    /// Candidate budget for the downward scan.
    #[arg(long, default_value_t = 10_000)]
    bound: u64,
}

#[derive(Args)]
struct ClassfieldArgs {
    /// Fundamental discriminant of the imaginary quadratic field.
    #[arg(long, allow_hyphen_values = true)]
    fund_disc: i64,
    /// Base conductor c (tower mode).
    #[arg(long, default_value_t = 1)]
    conductor: u64,
    /// Tower prime p (tower mode).
    #[arg(long)]
    prime: Option<u64>,
    /// Number of tower steps.
    #[arg(long, default_value_t = 3)]
    nmax: u32,
    /// Inert-step mode: squarefree all-inert conductor k.
    #[arg(long)]
    inert_step: Option<u64>,
    /// Inert-step mode: the prime p_j | k whose step degree is checked.
    #[arg(long)]
    inert_prime: Option<u64>,
}

#[derive(Args)]
struct HeegnerArgs {
    curve: String,
    #[arg(long, allow_hyphen_values = true)]
    fund_disc: i64,
    /// Verify the inert norm relation at this prime instead of tracing.
    #[arg(long)]
    verify_inert: Option<u64>,
    /// Verify the tower norm relation at this prime instead of tracing.
    #[arg(long)]
    verify_tower: Option<u64>,
    /// Working precision in decimal digits.
    #[arg(long, default_value_t = 30)]
    precision: u32,
}

#[derive(Args)]
struct PrimesearchArgs {
    curve: String,
    #[arg(long, allow_hyphen_values = true)]
    fund_disc: i64,
    /// The inert prime p with p | q + 1.
    #[arg(long)]
    p: u64,
    /// Search bound on q.
    #[arg(long, default_value_t = 1_000_000)]
    bound: u64,
}

#[derive(Args)]
struct RecurrenceArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, allow_hyphen_values = true)]
    ap: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1)]
    c0: i64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    c1: i64,
    #[arg(long, default_value_t = 40)]
    steps: usize,
}

/// Report outcome: payload plus whether every mathematical check passed.
struct Outcome {
    results: Value,
    ok: bool,
}

/// Errors that indicate bad input or IO rather than a failed check.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// A failed mathematical check or exhausted search (exit 1), described in
/// the report rather than on stderr.
struct CheckFailure(String);

enum CmdError {
    Config(ConfigError),
    Check(CheckFailure),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let catalog_text = match &cli.catalog {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("qrank: cannot read catalog {path}: {e}");
                return ExitCode::from(2);
            }
        },
        None => BUNDLED_CATALOG.to_string(),
    };
    let catalog = match Catalog::parse(&catalog_text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qrank: bad catalog: {e}");
            return ExitCode::from(2);
        }
    };

    let (name, inputs, run): (&str, Value, Result<Outcome, CmdError>) = match &cli.command {
        Command::Ap(a) => (
            "ap",
            json!({ "curve": a.curve, "max_prime": a.max_prime.to_string(),
                    "cache": a.cache.clone().unwrap_or_default() }),
            cmd_ap(&catalog, a),
        ),
        Command::Witness(a) => (
            "witness",
            json!({ "curve": a.curve, "count": a.count.to_string(),
                    "bound": a.bound.to_string() }),
            cmd_witness(&catalog, a),
        ),
        Command::Classfield(a) => (
            "classfield",
            json!({ "fund_disc": a.fund_disc.to_string(), "conductor": a.conductor.to_string(),
                    "prime": a.prime.map(|p| p.to_string()).unwrap_or_default(),
                    "nmax": a.nmax.to_string(),
                    "inert_step": a.inert_step.map(|k| k.to_string()).unwrap_or_default(),
                    "inert_prime": a.inert_prime.map(|p| p.to_string()).unwrap_or_default() }),
            cmd_classfield(a),
        ),
        Command::Heegner(a) => (
            "heegner",
            json!({ "curve": a.curve, "fund_disc": a.fund_disc.to_string(),
                    "verify_inert": a.verify_inert.map(|l| l.to_string()).unwrap_or_default(),
                    "verify_tower": a.verify_tower.map(|p| p.to_string()).unwrap_or_default(),
                    "precision": a.precision.to_string() }),
            cmd_heegner(&catalog, a),
        ),
        Command::Primesearch(a) => (
            "primesearch",
            json!({ "curve": a.curve, "fund_disc": a.fund_disc.to_string(),
                    "p": a.p.to_string(), "bound": a.bound.to_string() }),
            cmd_primesearch(&catalog, a),
        ),
        Command::Recurrence(a) => (
            "recurrence",
            json!({ "p": a.p.to_string(), "ap": a.ap.to_string(),
                    "c0": a.c0.to_string(), "c1": a.c1.to_string(),
                    "steps": a.steps.to_string() }),
            cmd_recurrence(a),
        ),
    };

    let (results, status, code) = match run {
        Ok(o) => {
            let code = if o.ok { 0 } else { 1 };
            let status = if o.ok { "ok" } else { "failed" };
            (o.results, status, code)
        }
        Err(CmdError::Check(CheckFailure(msg))) => (json!({ "error": msg }), "failed", 1),
        Err(CmdError::Config(e)) => {
            eprintln!("qrank: {e}");
            return ExitCode::from(2);
        }
    };

    let mut report = Map::new();
    report.insert("command".into(), json!(name));
    report.insert("inputs".into(), inputs);
    report.insert("results".into(), results);
    report.insert("status".into(), json!(status));
    report.insert("version".into(), json!(VERSION));
    let mut bytes = serde_json::to_string_pretty(&Value::Object(report)).unwrap();
    bytes.push('\n');
    print!("{bytes}");
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &bytes) {
            eprintln!("qrank: cannot write {path}: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}

fn table_for(catalog: &Catalog, label: &str) -> Result<ApTable, ConfigError> {
    let entry = catalog.get(label).map_err(|e| ConfigError(e.to_string()))?;
    entry.ap_table().map_err(|e| ConfigError(e.to_string()))
}

fn field_for(fund_disc: i64) -> Result<QuadField, ConfigError> {
    let d = if fund_disc % 4 == 0 {
        fund_disc / 4
    } else {
        fund_disc
    };
    let field = QuadField::from_i64(d).map_err(|e| ConfigError(e.to_string()))?;
    if field.fund_disc().to_i64() != Some(fund_disc) {
        return Err(ConfigError(format!(
            "{fund_disc} is not a fundamental discriminant"
        )));
    }
    Ok(field)
}

/// Exact rational as a canonical decimal string (lowest terms, `p/q`).
fn rat_str(r: &Rat) -> String {
    r.to_string()
}

/// Precision-tagged float: value printed with enough digits to round-trip.
fn tagged_float(x: f64, digits: u32) -> Value {
    json!({ "value": format!("{x:.17e}"), "digits": digits.to_string() })
}

fn cmd_ap(catalog: &Catalog, a: &ApArgs) -> Result<Outcome, CmdError> {
    let mut table = table_for(catalog, &a.curve)?;
    table
        .extend_to(a.max_prime)
        .map_err(|e| ConfigError(e.to_string()))?;
    if let Some(path) = &a.cache {
        // merging after recomputation turns any conflicting cache row into
        // a hard diagnostic instead of silently trusting stale data
        if let Ok(existing) = std::fs::read_to_string(path) {
            table
                .merge_csv(&existing)
                .map_err(|e| ConfigError(format!("cache {path}: {e}")))?;
        }
        std::fs::write(path, table.to_csv())
            .map_err(|e| ConfigError(format!("cache {path}: {e}")))?;
    }
    let mut rows = Map::new();
    let mut hasse_ok = true;
    for (p, ap) in table.overrides().iter().chain(table.counted().iter()) {
        rows.insert(p.to_string(), json!(ap.to_string()));
        if (*ap as i128) * (*ap as i128) >= 4 * *p as i128 {
            hasse_ok = false;
        }
    }
    Ok(Outcome {
        results: json!({
            "a_p": Value::Object(rows),
            "hasse_bound_all": hasse_ok,
            "cached_primes": table.counted().len().to_string(),
        }),
        ok: hasse_ok,
    })
}

fn cmd_witness(catalog: &Catalog, a: &WitnessArgs) -> Result<Outcome, CmdError> {
    if a.count < 1 {
        return Err(ConfigError("--count must be at least 1".into()).into());
    }
    let table = table_for(catalog, &a.curve)?;
    let family = match scan_family(&table.curve, a.count, a.bound) {
        Ok(f) => f,
        Err(WitnessError::SearchExhausted(budget, found)) => {
            return Err(CmdError::Check(CheckFailure(format!(
                "search exhausted after {budget} candidates with {found} members"
            ))))
        }
        Err(e) => return Err(ConfigError(e.to_string()).into()),
    };
    let report = independence_certificate(&family)
        .map_err(|e| CmdError::Check(CheckFailure(e.to_string())))?;
    let members: Vec<Value> = family
        .members
        .iter()
        .map(|w| {
            let (x, y) = w.point.coords.as_ref().unwrap();
            json!({
                "m": w.m.to_string(),
                "f_m": w.f_m.to_string(),
                "s": w.s.to_string(),
                "d": w.d.to_string(),
                "x": rat_str(x.rational_part()),
                "y_coeff": rat_str(y.surd_part()),
                "nontorsion": {
                    "multiples_checked": w.certificate.multiples_checked.to_string(),
                    "basis": w.certificate.basis,
                },
                "split_checks": qrank_core::witness::check_split(&family.config.curve, &w.field),
            })
        })
        .collect();
    Ok(Outcome {
        results: json!({
            "modulus": family.config.m_mod.to_string(),
            "members": members,
            "skipped": family.skipped.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "rank_lower_bound": report.rank_lower_bound.to_string(),
            "kernels": report.kernels.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            "statement": report.statement,
        }),
        ok: true,
    })
}

fn cmd_classfield(a: &ClassfieldArgs) -> Result<Outcome, CmdError> {
    let field = field_for(a.fund_disc)?;
    match (a.inert_step, a.prime) {
        (Some(k), _) => {
            let pj = a
                .inert_prime
                .ok_or_else(|| ConfigError("--inert-step requires --inert-prime".into()))?;
            let degree = verify_inert_step(&field, k, pj).map_err(classfield_failure)?;
            Ok(Outcome {
                results: json!({
                    "mode": "inert_step",
                    "k": k.to_string(),
                    "p_j": pj.to_string(),
                    "step_degree": degree.to_string(),
                    "expected": (pj + 1).to_string(),
                }),
                ok: degree == pj + 1,
            })
        }
        (None, Some(p)) => {
            let report =
                verify_tower_p(&field, a.conductor, p, a.nmax).map_err(classfield_failure)?;
            let base = quad_order(&field, a.conductor).map_err(classfield_failure)?;
            Ok(Outcome {
                results: json!({
                    "mode": "tower",
                    "h_base": base.h.to_string(),
                    "first_step_degree": report.first_step_degree.to_string(),
                    "steps": report.steps.iter().map(|s| json!({
                        "n": s.n.to_string(),
                        "h": s.h.to_string(),
                        "ratio": s.ratio.map(|r| r.to_string()).unwrap_or_default(),
                    })).collect::<Vec<_>>(),
                }),
                ok: report
                    .steps
                    .iter()
                    .all(|s| s.ratio.is_none() || s.ratio == Some(p)),
            })
        }
        (None, None) => {
            Err(ConfigError("provide --prime (tower) or --inert-step (step mode)".into()).into())
        }
    }
}

/// RatioMismatch and ClassNumberMismatch are failed checks (exit 1); all
/// other class-field errors are bad input.
fn classfield_failure(e: ClassFieldError) -> CmdError {
    match e {
        ClassFieldError::RatioMismatch(..) | ClassFieldError::ClassNumberMismatch(..) => {
            CmdError::Check(CheckFailure(e.to_string()))
        }
        other => CmdError::Config(ConfigError(other.to_string())),
    }
}

fn cmd_heegner(catalog: &Catalog, a: &HeegnerArgs) -> Result<Outcome, CmdError> {
    let mut table = table_for(catalog, &a.curve)?;
    field_for(a.fund_disc)?;
    if a.verify_inert.is_some() && a.verify_tower.is_some() {
        return Err(ConfigError("--verify-inert and --verify-tower are exclusive".into()).into());
    }
    if let Some(ell) = a.verify_inert {
        let rep = verify_norm_inert(&mut table, a.fund_disc, ell, a.precision, 0)
            .map_err(heegner_failure)?;
        let tol = 1e-8;
        return Ok(Outcome {
            ok: rep.residual < tol,
            results: json!({
                "mode": "norm_inert",
                "ell": ell.to_string(),
                "residual": tagged_float(rep.residual, rep.digits),
                "tolerance": tagged_float(tol, rep.digits),
                "trace_size": rep.trace_size.to_string(),
            }),
        });
    }
    if let Some(p) = a.verify_tower {
        let rep =
            verify_norm_tower(&mut table, a.fund_disc, p, a.precision).map_err(heegner_failure)?;
        let tol = 1e-6;
        return Ok(Outcome {
            ok: rep.residual < tol && rep.class_ratio == p,
            results: json!({
                "mode": "norm_tower",
                "p": p.to_string(),
                "residual": tagged_float(rep.residual, rep.digits),
                "tolerance": tagged_float(tol, rep.digits),
                "fiber_size": rep.fiber_size.to_string(),
                "class_ratio": rep.class_ratio.to_string(),
            }),
        });
    }
    let tp =
        heegner_trace_to_rational(&mut table, a.fund_disc, a.precision).map_err(heegner_failure)?;
    Ok(Outcome {
        results: json!({
            "mode": "trace",
            "x": rat_str(&tp.x),
            "y": rat_str(&tp.y),
            "imaginary_residual": tagged_float(tp.residual, tp.digits),
            "on_curve_exact": true,
        }),
        ok: true,
    })
}

/// Residual/recognition problems are failed checks; precondition and
/// precision problems are configuration errors.
fn heegner_failure(e: HeegnerError) -> CmdError {
    match e {
        HeegnerError::RecognitionFailed(_)
        | HeegnerError::SearchExhausted(..)
        | HeegnerError::PrecisionUnreachable(_) => CmdError::Check(CheckFailure(e.to_string())),
        other => CmdError::Config(ConfigError(other.to_string())),
    }
}

fn cmd_primesearch(catalog: &Catalog, a: &PrimesearchArgs) -> Result<Outcome, CmdError> {
    let table = table_for(catalog, &a.curve)?;
    let field = field_for(a.fund_disc)?;
    let result = match find_q(&table.curve, &field, a.p, a.bound) {
        Ok(r) => r,
        Err(PrimeSearchError::SearchExhausted(bound)) => {
            return Err(CmdError::Check(CheckFailure(format!(
                "no admissible q below {bound}"
            ))))
        }
        Err(e) => return Err(ConfigError(e.to_string()).into()),
    };
    // independent re-verification through a fresh table
    let mut fresh = table_for(catalog, &a.curve)?;
    let recheck = verify_conditions(&mut fresh, &field, a.p, result.q)
        .map_err(|e| ConfigError(e.to_string()))?;
    Ok(Outcome {
        ok: result.checks.all_pass() && recheck.all_pass(),
        results: json!({
            "q": result.q.to_string(),
            "inert": result.checks.inert,
            "p_divides_q_plus_1": result.checks.p_divides_q_plus_1,
            "p_coprime_a_q": result.checks.p_coprime_a_q,
            "a_q": result.checks.a_q.to_string(),
            "reverified": recheck.all_pass(),
        }),
    })
}

fn cmd_recurrence(a: &RecurrenceArgs) -> Result<Outcome, CmdError> {
    let state = generate(a.c0, a.c1, a.ap, a.p, a.steps).map_err(|e| ConfigError(e.to_string()))?;
    let outcome = first_nonintegral(a.c0, a.c1, a.ap, a.p, a.steps)
        .map_err(|e| ConfigError(e.to_string()))?;
    let vals = valuation_profile(&state);
    let mut table = BTreeMap::new();
    table.insert(
        "valuations",
        vals.iter()
            .map(|v| match v {
                Some(x) => x.to_string(),
                None => "inf".to_string(),
            })
            .collect::<Vec<_>>(),
    );
    let (outcome_str, ok) = match &outcome {
        NonIntegralOutcome::Index(i) => (format!("nonintegral_at:{i}"), true),
        NonIntegralOutcome::AllZeroTail(i) => (format!("all_zero_tail:{i}"), true),
        NonIntegralOutcome::BoundExhausted => ("bound_exhausted".to_string(), false),
    };
    Ok(Outcome {
        results: json!({
            "sequence": state.seq.iter().map(rat_str).collect::<Vec<_>>(),
            "valuations": table["valuations"],
            "outcome": outcome_str,
        }),
        ok,
    })
}
