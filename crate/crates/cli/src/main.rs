//! `verikit` command-line runner.
//!
//! Exit codes: 0 success, 1 test failure, 2 coverage below `--fail-under`,
//! 64 bad arguments, 65 unreadable coverage database.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use verikit::crv::stable_hash;
use verikit::fcov::{format_percent, read_coverage_db, write_coverage_db, CoverageDb};
use verikit::tb::registry;
use verikit::uvm::{Level, RunOptions, TestRegistry};

const EXIT_FAIL: u8 = 1;
const EXIT_COVERAGE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

/// Environment variable overriding the default log level.
const LOG_ENV: &str = "VERIKIT_LOG";

#[derive(Parser)]
#[command(
    name = "verikit",
    version,
    about = "Run the ALU, ADC and ECC verification testbenches"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered tests.
    List,
    /// Run one test or all of them and write the merged coverage.
    Run {
        /// Test name, or `all`.
        #[arg(long, default_value = "all")]
        test: String,
        /// Base seed, decimal or 0x-prefixed hex.
        #[arg(long, default_value = "1", value_parser = parse_seed)]
        seed: u64,
        /// Override each test's default transaction count.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        transactions: Option<u64>,
        /// Coverage XML output path.
        #[arg(long)]
        cov_out: Option<PathBuf>,
        /// Level name (DEBUG, INFO, ...) or number. Defaults to $VERIKIT_LOG, then INFO.
        #[arg(long)]
        log_level: Option<Level>,
        /// Minimum overall coverage percentage.
        #[arg(long)]
        fail_under: Option<f64>,
    },
    /// Print a coverage database.
    Report {
        path: PathBuf,
        #[arg(long)]
        fail_under: Option<f64>,
    },
    /// Time alu.base and ecc.base at several transaction counts.
    Bench {
        /// Comma-separated transaction counts.
        #[arg(long, value_delimiter = ',', default_value = "10000,20000,30000",
              value_parser = clap::value_parser!(u64).range(1..))]
        transactions: Vec<u64>,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value = "1", value_parser = parse_seed)]
        seed: u64,
    },
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed `{s}`: {e}"))
}

/// Seed used for one test of a run, independent of the run order.
fn test_seed(seed: u64, name: &str) -> u64 {
    seed ^ stable_hash(name)
}

fn meets(db: &CoverageDb, fail_under: Option<f64>) -> bool {
    let shown: f64 = format_percent(db.coverage()).parse().expect("formatted percentage");
    fail_under.is_none_or(|min| shown >= min)
}

/// Exit code of a `run`: test failures take precedence over coverage shortfall.
fn run_outcome(all_passed: bool, coverage_ok: bool) -> u8 {
    match (all_passed, coverage_ok) {
        (false, _) => EXIT_FAIL,
        (true, false) => EXIT_COVERAGE,
        (true, true) => 0,
    }
}

fn log_level(flag: Option<Level>) -> Result<Level, String> {
    if let Some(l) = flag {
        return Ok(l);
    }
    match std::env::var(LOG_ENV) {
        Ok(v) if !v.is_empty() => v.parse().map_err(|e| format!("{LOG_ENV}: {e}")),
        _ => Ok(Level::INFO),
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn cmd_list(reg: &TestRegistry) -> ExitCode {
    for name in reg.names() {
        println!("{name}");
    }
    ExitCode::SUCCESS
}

struct RunArgs {
    test: String,
    seed: u64,
    transactions: Option<u64>,
    cov_out: Option<PathBuf>,
    log_level: Option<Level>,
    fail_under: Option<f64>,
}

fn cmd_run(reg: &TestRegistry, args: RunArgs) -> ExitCode {
    let names = if args.test == "all" {
        reg.names()
    } else if reg.contains(&args.test) {
        vec![args.test.clone()]
    } else {
        return usage(&format!(
            "unknown test `{}` (registered: {})",
            args.test,
            reg.names().join(", ")
        ));
    };
    let level = match log_level(args.log_level) {
        Ok(l) => l,
        Err(e) => return usage(&e),
    };

    let mut merged = CoverageDb::default();
    let mut all_passed = true;
    for name in &names {
        let opts = RunOptions {
            seed: test_seed(args.seed, name),
            transactions: args.transactions,
            log_level: level,
            echo: true,
            ..RunOptions::default()
        };
        let start = Instant::now();
        let res = match reg.run(name, &opts) {
            Ok(r) => r,
            Err(e) => return usage(&e.to_string()),
        };
        println!(
            "{} {} seed={:#x} transactions={} coverage={}% sim_ns={} wall={:.2}s",
            if res.passed { "PASS" } else { "FAIL" },
            name,
            res.seed,
            res.transactions,
            format_percent(res.coverage.coverage()),
            res.sim_time,
            start.elapsed().as_secs_f64()
        );
        for f in &res.failures {
            println!("    {f}");
        }
        all_passed &= res.passed;
        merged = match merged.merge(&res.coverage) {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_FAIL);
            }
        };
    }

    print!("\n{}", merged.report());
    if let Some(path) = &args.cov_out {
        if let Err(e) = std::fs::write(path, write_coverage_db(&merged)) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(EXIT_FAIL);
        }
    }
    let coverage_ok = meets(&merged, args.fail_under);
    if all_passed && !coverage_ok {
        eprintln!(
            "coverage {}% is below --fail-under {}",
            format_percent(merged.coverage()),
            args.fail_under.unwrap_or_default()
        );
    }
    ExitCode::from(run_outcome(all_passed, coverage_ok))
}

fn cmd_report(path: &Path, fail_under: Option<f64>) -> ExitCode {
    let db = match read_coverage_db(path) {
        Ok(db) => db,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(EXIT_DATA);
        }
    };
    println!(
        "test: {}  seed: {}  transactions: {}",
        db.test, db.seed, db.transactions
    );
    print!("{}", db.report());
    if meets(&db, fail_under) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_COVERAGE)
    }
}

fn cmd_bench(reg: &TestRegistry, counts: &[u64], csv_path: Option<&PathBuf>, seed: u64) -> ExitCode {
    let sink: Box<dyn Write> = match csv_path {
        Some(p) => match std::fs::File::create(p) {
            Ok(f) => Box::new(f),
            Err(e) => return usage(&format!("{}: {e}", p.display())),
        },
        None => Box::new(std::io::stdout()),
    };
    let mut out = csv::Writer::from_writer(sink);
    let mut ok = out
        .write_record(["test", "transactions", "wall_seconds", "sim_ns"])
        .is_ok();
    let mut all_passed = true;
    for &n in counts {
        for name in ["alu.base", "ecc.base"] {
            let opts = RunOptions {
                seed: test_seed(seed, name),
                transactions: Some(n),
                log_level: Level::WARNING,
                ..RunOptions::default()
            };
            let start = Instant::now();
            let res = match reg.run(name, &opts) {
                Ok(r) => r,
                Err(e) => return usage(&e.to_string()),
            };
            let wall = start.elapsed().as_secs_f64();
            all_passed &= res.passed;
            ok &= out
                .write_record([
                    name.to_string(),
                    n.to_string(),
                    format!("{wall:.6}"),
                    res.sim_time.to_string(),
                ])
                .is_ok();
            ok &= out.flush().is_ok();
        }
    }
    if !ok {
        eprintln!("error: writing benchmark CSV failed");
        return ExitCode::from(EXIT_FAIL);
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let reg = match registry() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAIL);
        }
    };
    match cli.command {
        Command::List => cmd_list(&reg),
        Command::Run {
            test,
            seed,
            transactions,
            cov_out,
            log_level,
            fail_under,
        } => cmd_run(
            &reg,
            RunArgs {
                test,
                seed,
                transactions,
                cov_out,
                log_level,
                fail_under,
            },
        ),
        Command::Report { path, fail_under } => cmd_report(&path, fail_under),
        Command::Bench {
            transactions,
            csv,
            seed,
        } => cmd_bench(&reg, &transactions, csv.as_ref(), seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("42"), Ok(42));
        assert_eq!(parse_seed("0x2A"), Ok(42));
        assert!(parse_seed("0xZZ").is_err());
        assert!(parse_seed("-1").is_err());
        assert_ne!(test_seed(7, "alu.base"), test_seed(7, "ecc.base"));
    }

    #[test]
    fn fail_under_uses_displayed_percentage() {
        let db = CoverageDb::default();
        assert!(meets(&db, None));
        assert!(meets(&db, Some(0.0)));
        assert!(!meets(&db, Some(0.01)));
    }

    #[test]
    fn outcome_precedence() {
        assert_eq!(run_outcome(true, true), 0);
        assert_eq!(run_outcome(true, false), EXIT_COVERAGE);
        assert_eq!(run_outcome(false, true), EXIT_FAIL);
        assert_eq!(run_outcome(false, false), EXIT_FAIL);
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
