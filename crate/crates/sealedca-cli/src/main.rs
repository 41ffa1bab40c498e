//! Operator entry point: run auction instances in plaintext, encrypted, or
//! compare mode; generate random instances; drive fault drills; and produce
//! the scaling benchmark sweeps.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sealedca::harness::{self, bench, FaultKind};
use sealedca::instance::{self, InstanceFile};
use sealedca::mechanism::{self, AuctionInstance, AuctionOutcome, CandidateResolution};
use sealedca::protocol::{GuessStrategy, ProtocolConfig};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_UNDETECTED_FAULT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sealedca",
    about = "Privacy-preserving, truthful, verifiable combinatorial auctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an instance file in plaintext, encrypted, or compare mode.
    Run(RunArgs),
    /// Generate a random instance file.
    Gen(GenArgs),
    /// Run adversarial fault drills against an instance.
    Faultdrill(FaultdrillArgs),
    /// Scaling sweeps with fitted growth exponents.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Plaintext,
    Encrypted,
    Compare,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CandidateModeArg {
    ResidualAllocation,
    LehmannRerun,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GuessStrategyArg {
    DescendingScan,
    BinarySearchEquality,
}

impl From<GuessStrategyArg> for GuessStrategy {
    fn from(value: GuessStrategyArg) -> Self {
        match value {
            GuessStrategyArg::DescendingScan => GuessStrategy::DescendingScan,
            GuessStrategyArg::BinarySearchEquality => GuessStrategy::BinarySearchEquality,
        }
    }
}

#[derive(Args)]
struct ConfigOverrides {
    /// Override the instance's candidate mode.
    #[arg(long, value_enum)]
    candidate_mode: Option<CandidateModeArg>,
    /// Override the instance's guess strategy.
    #[arg(long, value_enum)]
    guess_strategy: Option<GuessStrategyArg>,
    /// Override the Paillier key size.
    #[arg(long)]
    key_bits: Option<u64>,
    /// Override the fixed-point exponent.
    #[arg(long)]
    exponent: Option<u32>,
}

impl ConfigOverrides {
    fn apply(&self, file: &mut InstanceFile) {
        if let Some(mode) = self.candidate_mode {
            file.config.candidate_mode = match mode {
                CandidateModeArg::ResidualAllocation => mechanism::CandidateMode::ResidualAllocation,
                CandidateModeArg::LehmannRerun => mechanism::CandidateMode::LehmannRerun,
            };
        }
        if let Some(strategy) = self.guess_strategy {
            file.config.guess_strategy = strategy.into();
        }
        if let Some(bits) = self.key_bits {
            file.config.paillier_bits = bits;
        }
        if let Some(exponent) = self.exponent {
            file.config.exponent = exponent;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (TOML).
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "compare")]
    mode: Mode,
    /// Override the instance seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the protocol transcript (JSON lines) here.
    #[arg(long)]
    transcript: Option<PathBuf>,
    /// Write a machine-readable run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    bidders: usize,
    #[arg(long)]
    goods: usize,
    #[arg(long, default_value_t = 1)]
    bid_min: u64,
    #[arg(long, default_value_t = 10)]
    bid_max: u64,
    /// Probability that each good joins a bundle.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    exponent: u32,
    /// Norm guess domain upper bound (raw fixed-point units).
    #[arg(long)]
    norm_domain_max: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FaultdrillArgs {
    instance: PathBuf,
    /// Comma separated drill kinds; defaults to all of them.
    #[arg(long, value_delimiter = ',')]
    kinds: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct BenchArgs {
    /// Swept variable.
    #[arg(long, value_enum, default_value = "goods")]
    sweep: BenchVariable,
    /// Sweep points (at least four).
    #[arg(long, value_delimiter = ',')]
    points: Vec<u64>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value = "descending-scan")]
    guess_strategy: GuessStrategyArg,
    #[arg(long, default_value_t = 512)]
    key_bits: u64,
    /// Write the machine-readable sweep report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchVariable {
    Goods,
    Bidders,
    MaxNorm,
}

impl From<BenchVariable> for bench::SweepVariable {
    fn from(value: BenchVariable) -> Self {
        match value {
            BenchVariable::Goods => bench::SweepVariable::Goods,
            BenchVariable::Bidders => bench::SweepVariable::Bidders,
            BenchVariable::MaxNorm => bench::SweepVariable::MaxNorm,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Faultdrill(args) => cmd_faultdrill(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load(path: &PathBuf, overrides: &ConfigOverrides) -> Result<(AuctionInstance, ProtocolConfig, u64)> {
    let mut file = InstanceFile::load(path).with_context(|| format!("loading {}", path.display()))?;
    overrides.apply(&mut file);
    let seed = file.config.seed;
    let (instance, config) = file.resolve()?;
    Ok((instance, config, seed))
}

#[derive(Serialize)]
struct PaymentJson {
    raw: String,
    value: String,
}

#[derive(Serialize)]
struct OutcomeJson {
    winners: Vec<usize>,
    allocation: Vec<u8>,
    payments: BTreeMap<usize, PaymentJson>,
    candidates: BTreeMap<usize, String>,
}

fn outcome_json(outcome: &AuctionOutcome) -> OutcomeJson {
    OutcomeJson {
        winners: outcome.winners.clone(),
        allocation: outcome.allocation.bits().iter().map(|&b| b as u8).collect(),
        payments: outcome
            .payments
            .iter()
            .map(|(&w, p)| {
                (
                    w,
                    PaymentJson {
                        raw: p.raw().to_string(),
                        value: instance::format_rational(&p.decode()),
                    },
                )
            })
            .collect(),
        candidates: outcome
            .candidates
            .iter()
            .map(|(&w, c)| {
                (
                    w,
                    match c {
                        CandidateResolution::Candidate(j) => format!("bidder {j}"),
                        CandidateResolution::Reserve => "reserve".to_string(),
                    },
                )
            })
            .collect(),
    }
}

fn print_outcome(label: &str, outcome: &AuctionOutcome) {
    println!("{label}:");
    println!("  winners: {:?}", outcome.winners);
    let allocation: String = outcome
        .allocation
        .bits()
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect();
    println!("  allocation: {allocation}");
    for (w, p) in &outcome.payments {
        let candidate = match outcome.candidates.get(w) {
            Some(CandidateResolution::Candidate(j)) => format!("candidate bidder {j}"),
            Some(CandidateResolution::Reserve) => "reserve price".to_string(),
            None => "unresolved".to_string(),
        };
        println!(
            "  bidder {w} pays {} (raw {}, {candidate})",
            instance::format_rational(&p.decode()),
            p.raw()
        );
    }
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let (instance, config, file_seed) = load(&args.instance, &args.overrides)?;
    let seed = args.seed.unwrap_or(file_seed);

    #[derive(Serialize)]
    struct RunJson {
        mode: &'static str,
        outcome: OutcomeJson,
        verdicts: BTreeMap<usize, bool>,
        equivalent: Option<bool>,
        diffs: Vec<String>,
        audit_passed: Option<bool>,
        audit_violations: usize,
    }

    let (exit, json) = match args.mode {
        Mode::Plaintext => {
            let outcome = mechanism::run_mechanism(&instance, &config.mechanism_config());
            print_outcome("plaintext outcome", &outcome);
            (
                EXIT_OK,
                RunJson {
                    mode: "plaintext",
                    outcome: outcome_json(&outcome),
                    verdicts: BTreeMap::new(),
                    equivalent: None,
                    diffs: vec![],
                    audit_passed: None,
                    audit_violations: 0,
                },
            )
        }
        Mode::Encrypted => {
            let report = harness::run_auction(&instance, &config, seed);
            if let Some(failure) = &report.failure {
                bail!("protocol run failed: {failure}");
            }
            print_outcome("encrypted outcome", &report.outcome);
            for (w, ok) in &report.verdicts {
                println!("  bidder {w} payment verification: {}", if *ok { "accept" } else { "REJECT" });
            }
            let audit = report.audit(&instance);
            println!(
                "audit: {} ({} messages checked)",
                if audit.passed() { "pass" } else { "FAIL" },
                audit.messages_checked
            );
            if let Some(path) = &args.transcript {
                std::fs::write(path, report.transcript.export_lines())?;
                println!("transcript written to {}", path.display());
            }
            let exit = if audit.passed() { EXIT_OK } else { EXIT_MISMATCH };
            (
                exit,
                RunJson {
                    mode: "encrypted",
                    outcome: outcome_json(&report.outcome),
                    verdicts: report.verdicts.clone(),
                    equivalent: None,
                    diffs: vec![],
                    audit_passed: Some(audit.passed()),
                    audit_violations: audit.violations.len(),
                },
            )
        }
        Mode::Compare => {
            let comparison = harness::compare_with_oracle(&instance, &config, seed);
            let audit = comparison.protocol.audit(&instance);
            print_outcome("oracle outcome", &comparison.oracle);
            print_outcome("protocol outcome", &comparison.protocol.outcome);
            if let Some(path) = &args.transcript {
                std::fs::write(path, comparison.protocol.transcript.export_lines())?;
                println!("transcript written to {}", path.display());
            }
            let ok = comparison.equivalent && audit.passed();
            if comparison.equivalent {
                println!("EQUIVALENT");
            } else {
                println!("DIFFERS:");
                for diff in &comparison.diffs {
                    println!("  {diff}");
                }
            }
            if !audit.passed() {
                println!("audit FAILED: {} violations", audit.violations.len());
            }
            (
                if ok { EXIT_OK } else { EXIT_MISMATCH },
                RunJson {
                    mode: "compare",
                    outcome: outcome_json(&comparison.protocol.outcome),
                    verdicts: comparison.protocol.verdicts.clone(),
                    equivalent: Some(comparison.equivalent),
                    diffs: comparison.diffs.clone(),
                    audit_passed: Some(audit.passed()),
                    audit_violations: audit.violations.len(),
                },
            )
        }
    };

    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
        println!("report written to {}", path.display());
    }
    Ok(exit)
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    if args.bid_min > args.bid_max {
        bail!("bid-min must not exceed bid-max");
    }
    if !(args.density > 0.0 && args.density <= 1.0) {
        bail!("density must lie in (0, 1]");
    }
    // Worst-case norm is the max bid on a singleton bundle.
    let norm_domain_max = args
        .norm_domain_max
        .unwrap_or(args.bid_max << args.exponent);
    let config = {
        let mut c = instance::desk_config(args.exponent, norm_domain_max, args.seed);
        c.seed = args.seed;
        c
    };
    let file = instance::generate(
        args.bidders,
        args.goods,
        args.bid_min,
        args.bid_max,
        args.density,
        args.seed,
        config,
    );
    let text = file.to_toml();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text)?;
            println!("instance written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn parse_kinds(raw: &[String]) -> Result<Vec<FaultKind>> {
    if raw.is_empty() {
        return Ok(vec![
            FaultKind::InflatePayment,
            FaultKind::ForgeSignature,
            FaultKind::FakeReveal,
            FaultKind::LeakPlaintext,
            FaultKind::SubstituteSignature,
        ]);
    }
    raw.iter()
        .map(|k| match k.as_str() {
            "inflate-payment" => Ok(FaultKind::InflatePayment),
            "forge-signature" => Ok(FaultKind::ForgeSignature),
            "fake-reveal" => Ok(FaultKind::FakeReveal),
            "leak-plaintext" => Ok(FaultKind::LeakPlaintext),
            "substitute-signature" => Ok(FaultKind::SubstituteSignature),
            other => bail!("unknown fault kind {other:?}"),
        })
        .collect()
}

fn cmd_faultdrill(args: FaultdrillArgs) -> Result<u8> {
    let (instance, config, file_seed) = load(&args.instance, &args.overrides)?;
    let seed = args.seed.unwrap_or(file_seed);
    let kinds = parse_kinds(&args.kinds)?;

    #[derive(Serialize)]
    struct DrillJson {
        kind: FaultKind,
        verdict: String,
        defense: String,
    }

    let mut results = Vec::new();
    let mut undetected = false;
    for kind in kinds {
        let drill = harness::inject_fault(kind, &instance, &config, seed);
        let verdict = if drill.expected_pass_through && !drill.detected {
            "EXPECTED-PASS-THROUGH".to_string()
        } else if drill.detected {
            "DETECTED".to_string()
        } else {
            undetected = true;
            "UNDETECTED".to_string()
        };
        println!("{kind:?}: {verdict} ({})", drill.defense);
        results.push(DrillJson {
            kind,
            verdict,
            defense: drill.defense,
        });
    }
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&results)?)?;
    }
    Ok(if undetected { EXIT_UNDETECTED_FAULT } else { EXIT_OK })
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let variable: bench::SweepVariable = args.sweep.into();
    let points = if args.points.is_empty() {
        match variable {
            bench::SweepVariable::Goods => vec![4, 8, 14, 20],
            bench::SweepVariable::Bidders => vec![5, 15, 30, 50],
            bench::SweepVariable::MaxNorm => vec![8, 16, 32, 64],
        }
    } else {
        args.points.clone()
    };
    if points.len() < 4 {
        bail!("sweeps need at least 4 points");
    }
    let spec = bench::SweepSpec {
        variable,
        points,
        reps: args.reps,
        seed: args.seed,
        guess_strategy: args.guess_strategy.into(),
        paillier_bits: args.key_bits,
    };
    eprintln!(
        "sweeping {:?} over {:?} ({} reps, {} bit keys, {:?})",
        spec.variable, spec.points, spec.reps, spec.paillier_bits, spec.guess_strategy
    );
    let report = bench::run_sweep(&spec);

    println!(
        "{:>8} {:>14} {:>14} {:>14} {:>14} {:>10} {:>9}",
        "x", "auc wd (ms)", "bidder wd", "auc pd (ms)", "bidder pd", "probes", "guesses"
    );
    for p in &report.points {
        println!(
            "{:>8} {:>14.2} {:>14.3} {:>14.2} {:>14.3} {:>10} {:>9}",
            p.x,
            p.winner_det.auctioneer_ms,
            p.winner_det.mean_bidder_ms,
            p.payment_det.auctioneer_ms,
            p.payment_det.mean_bidder_ms,
            p.probes,
            p.guesses
        );
    }
    println!(
        "fitted log-log exponents (winner determination): auctioneer {:.3}, mean bidder {:.3}",
        report.fit_auctioneer_wd, report.fit_mean_bidder_wd
    );
    println!(
        "fitted log-log exponents (payment determination): auctioneer {:.3}, mean bidder {:.3}",
        report.fit_auctioneer_pd, report.fit_mean_bidder_pd
    );
    println!(
        "fitted log-log exponents (counts): probes {:.3}, guesses {:.3}",
        report.fit_probes, report.fit_guesses
    );
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
        println!("report written to {}", path.display());
    }
    Ok(EXIT_OK)
}
