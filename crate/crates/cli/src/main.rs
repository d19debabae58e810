//! Batch command-line front end over the exact-arithmetic library:
//! closed-form growth tables, seeded verification campaigns, and
//! formal-group construction reports, with machine-readable output.
//!
//! Exit codes: 0 every check passed, 1 a check failed, 2 usage error,
//! 3 precision exhaustion.

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;

use iwasawa_core::cyclo::RamifiedValuation;
use iwasawa_core::engine::{self, run_campaign, SimConfig, StructureChecks};
use iwasawa_core::formal::formal_group_report;
use iwasawa_core::Error;

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PRECISION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "iwasawa",
    version,
    about = "Exact verification of growth laws in cyclotomic group-ring towers",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form growth table (q_n, e_n) up to a level
    Table(TableArgs),
    /// Run seeded verification trials on simulated admissible sequences
    Verify(VerifyArgs),
    /// Build the formal group of type t^2 - a_p t + p and report checks
    Fg(FgArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TableArgs {
    /// Odd prime p
    #[arg(long)]
    p: u64,
    /// Largest level n to tabulate
    #[arg(long)]
    nmax: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Odd prime p
    #[arg(long)]
    p: u64,
    /// Trace coefficient a_p (decimal, must be divisible by p)
    #[arg(long)]
    ap: u64,
    /// Deepest level to verify
    #[arg(long)]
    nmax: u32,
    /// Number of independent seeded trials
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Campaign seed; trial t draws from stream t of this seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the automatic working precision p^N
    #[arg(long)]
    precision: Option<u32>,
    /// Worker threads (records are identical for any value)
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct FgArgs {
    /// Odd prime p
    #[arg(long)]
    p: u64,
    /// Trace coefficient a_p (decimal, must be divisible by p)
    #[arg(long)]
    ap: u64,
    /// Total-degree cap for the group law
    #[arg(long, default_value_t = 20)]
    deg: u32,
    /// Certified digits for the epsilon residual and series checks
    #[arg(long, default_value_t = 10)]
    target: u32,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Serialize)]
struct Timing {
    wall_ms: u128,
}

#[derive(Serialize)]
struct TableRow {
    n: u32,
    q_n: u64,
    e_n: u64,
    e_prev_plus_q: u64,
}

#[derive(Serialize)]
struct TableOutput {
    command: &'static str,
    p: u64,
    nmax: u32,
    rows: Vec<TableRow>,
    consistent: bool,
    timing: Timing,
}

#[derive(Serialize)]
struct VerifyRecord {
    p: u64,
    a_p: String,
    n: u32,
    seed: u64,
    trial: u32,
    mu: u32,
    lambda: u64,
    q_n: u64,
    order_exponent: u64,
    e_n: u64,
    chi_valuation: Option<RamifiedValuation>,
    invariants_ok: bool,
    order_ok: bool,
    exact_sequence_ok: bool,
    structure_checks: Option<StructureChecks>,
    passed: bool,
}

#[derive(Serialize)]
struct VerifySummary {
    trials: u32,
    records: usize,
    failures: usize,
    all_passed: bool,
}

#[derive(Serialize)]
struct VerifyOutput {
    command: &'static str,
    config: SimConfig,
    jobs: usize,
    records: Vec<VerifyRecord>,
    summary: VerifySummary,
    timing: Timing,
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    eprintln!("run with --help for usage");
    ExitCode::from(EXIT_USAGE)
}

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3u64;
    while d.checked_mul(d).is_some_and(|sq| sq <= p) {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The closed forms stay inside u64 while 2 p^(n-1) does.
fn growth_exponent_fits(p: u64, nmax: u32) -> bool {
    nmax <= 1
        || (p as i128)
            .checked_pow(nmax - 1)
            .is_some_and(|v| 2 * v < u64::MAX as i128)
}

fn cmd_table(args: &TableArgs) -> ExitCode {
    if !is_odd_prime(args.p) {
        return usage_error(&format!("p must be an odd prime >= 3, got {}", args.p));
    }
    if !growth_exponent_fits(args.p, args.nmax) {
        return usage_error(&format!(
            "growth exponents overflow 64 bits at p = {}, nmax = {}",
            args.p, args.nmax
        ));
    }
    let start = Instant::now();
    let mut rows = Vec::with_capacity(args.nmax as usize + 1);
    let mut consistent = true;
    for n in 0..=args.nmax {
        let q = engine::q_n(args.p, n);
        let e = engine::e_n(args.p, n);
        let check = if n == 0 { 0 } else { engine::e_n(args.p, n - 1) + q };
        consistent &= check == e;
        rows.push(TableRow {
            n,
            q_n: q,
            e_n: e,
            e_prev_plus_q: check,
        });
    }
    let out = TableOutput {
        command: "table",
        p: args.p,
        nmax: args.nmax,
        rows,
        consistent,
        timing: Timing {
            wall_ms: start.elapsed().as_millis(),
        },
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).expect("serializable")),
        Format::Csv => {
            println!("n,q_n,e_n,e_prev_plus_q");
            for r in &out.rows {
                println!("{},{},{},{}", r.n, r.q_n, r.e_n, r.e_prev_plus_q);
            }
        }
    }
    if out.consistent {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILURE)
    }
}

fn canonical_ap(p: u64, prec: u32, ap: u64) -> String {
    (BigUint::from(ap) % BigUint::from(p).pow(prec)).to_string()
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    if !is_odd_prime(args.p) {
        return usage_error(&format!("p must be an odd prime >= 3, got {}", args.p));
    }
    if !args.ap.is_multiple_of(args.p) {
        return usage_error(&format!(
            "a_p must be divisible by p (supersingular shape), got a_p = {}",
            args.ap
        ));
    }
    if args.trials == 0 {
        return usage_error("at least one trial is required");
    }
    if !growth_exponent_fits(args.p, args.nmax)
        || engine::e_n(args.p, args.nmax) + 8 > u32::MAX as u64
    {
        return usage_error(&format!(
            "the automatic precision overflows at p = {}, nmax = {}",
            args.p, args.nmax
        ));
    }
    if (args.p as u128).checked_pow(args.nmax).is_none_or(|g| g > 1_000_000) {
        return usage_error(&format!(
            "dense level-{} group rings over p = {} are beyond this tool; keep p^nmax <= 10^6",
            args.nmax, args.p
        ));
    }
    if let Some(prec) = args.precision {
        if prec == 0 {
            return usage_error("precision must be >= 1");
        }
    }
    let mut config = match SimConfig::new(args.p, args.ap, args.nmax, args.seed, args.trials) {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Some(prec) = args.precision {
        config = config.with_precision(prec);
    }
    eprintln!(
        "verify: p={} a_p={} nmax={} trials={} seed={} precision={} jobs={}",
        config.p, config.a_p, config.n_max, config.trials, config.seed, config.prec, args.jobs
    );

    let start = Instant::now();
    let campaign = match run_campaign(&config, args.jobs) {
        Ok(c) => c,
        Err(Error::PrecisionExhausted { prec }) => {
            eprintln!("error: computation exhausted precision p^{prec}; rerun with --precision");
            return ExitCode::from(EXIT_PRECISION);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CHECK_FAILURE);
        }
    };
    let elapsed = start.elapsed();

    let mut records = Vec::new();
    let mut failures = 0usize;
    for trial in &campaign.trials {
        let a_p = canonical_ap(config.p, trial.precision, config.a_p);
        for level in &trial.levels {
            if !level.passed {
                failures += 1;
            }
            records.push(VerifyRecord {
                p: config.p,
                a_p: a_p.clone(),
                n: level.n,
                seed: config.seed,
                trial: trial.trial,
                mu: level.mu,
                lambda: level.lambda,
                q_n: level.q_n,
                order_exponent: level.order_exponent,
                e_n: level.e_n,
                chi_valuation: level.chi_valuation,
                invariants_ok: level.invariants_ok,
                order_ok: level.order_ok,
                exact_sequence_ok: level.exact_sequence_ok,
                structure_checks: level.structure_checks,
                passed: level.passed,
            });
        }
        eprintln!(
            "trial {}/{}: {}",
            trial.trial + 1,
            config.trials,
            if trial.passed { "ok" } else { "FAILED" }
        );
    }
    let out = VerifyOutput {
        command: "verify",
        config: config.clone(),
        jobs: args.jobs,
        summary: VerifySummary {
            trials: config.trials,
            records: records.len(),
            failures,
            all_passed: campaign.passed,
        },
        records,
        timing: Timing {
            wall_ms: elapsed.as_millis(),
        },
    };
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&out).expect("serializable")),
        Format::Csv => {
            println!(
                "p,a_p,n,seed,trial,mu,lambda,q_n,order_exponent,e_n,chi_valuation,invariants_ok,order_ok,exact_sequence_ok,vanishing,membership,profile_match,passed"
            );
            for r in &out.records {
                let chi = r
                    .chi_valuation
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let (va, me, pr) = match r.structure_checks {
                    Some(s) => (
                        s.vanishing.to_string(),
                        s.membership.to_string(),
                        s.profile_match.to_string(),
                    ),
                    None => (String::new(), String::new(), String::new()),
                };
                println!(
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.p,
                    r.a_p,
                    r.n,
                    r.seed,
                    r.trial,
                    r.mu,
                    r.lambda,
                    r.q_n,
                    r.order_exponent,
                    r.e_n,
                    chi,
                    r.invariants_ok,
                    r.order_ok,
                    r.exact_sequence_ok,
                    va,
                    me,
                    pr,
                    r.passed
                );
            }
        }
    }
    if campaign.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILURE)
    }
}

#[derive(Serialize)]
struct FgOutput {
    command: &'static str,
    report: iwasawa_core::formal::FormalGroupReport,
    passed: bool,
    timing: Timing,
}

fn cmd_fg(args: &FgArgs) -> ExitCode {
    if !is_odd_prime(args.p) {
        return usage_error(&format!("p must be an odd prime >= 3, got {}", args.p));
    }
    if !args.ap.is_multiple_of(args.p) {
        return usage_error(&format!(
            "a_p must be divisible by p (supersingular shape), got a_p = {}",
            args.ap
        ));
    }
    if args.deg < 1 || args.target < 1 {
        return usage_error("deg and target must be >= 1");
    }
    if args.format == Format::Csv {
        return usage_error("csv output is not available for fg; use --format json");
    }
    let start = Instant::now();
    let report = match formal_group_report(args.p, args.ap, args.deg, args.target) {
        Ok(r) => r,
        Err(Error::IntegralityViolation { monomial, val }) => {
            eprintln!(
                "error: group-law coefficient at {monomial} has negative valuation {val}; \
                 the construction is refuted at this input, which indicates an arithmetic bug"
            );
            return ExitCode::from(EXIT_CHECK_FAILURE);
        }
        Err(Error::PrecisionExhausted { prec }) => {
            eprintln!("error: precision exhausted (rel {prec}); raise --target headroom");
            return ExitCode::from(EXIT_PRECISION);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CHECK_FAILURE);
        }
    };
    let passed = report.passed();
    let out = FgOutput {
        command: "fg",
        report,
        passed,
        timing: Timing {
            wall_ms: start.elapsed().as_millis(),
        },
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match cli.command {
        Command::Table(args) => cmd_table(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Fg(args) => cmd_fg(&args),
    }
}
