//! `depcast`: simulate, generate, verify and benchmark broadcast schedules.

mod bench;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use depcast_core::broadcast_sim::{
    simulate_b_equiset, simulate_b_equiset_edf, simulate_ignore_deps, Baseline, InnerPolicy, SimError,
};
use depcast_core::checks::{self, CheckParams, Property, Verdict};
use depcast_core::instance::validate_instance;
use depcast_core::oracle::{
    brute_force_bopt, default_horizon, default_slot, OracleError, SearchLimits, DEFAULT_BUDGET,
};
use depcast_core::workloads::{
    gen_fact1_adversarial, gen_fact1_randomized, gen_figure1, gen_oracle_scale, gen_random_correlated, read_instance,
    RandomParams,
};
use depcast_core::{BroadcastInstance, BroadcastTrace, Rational};

#[derive(Parser)]
#[command(name = "depcast", version, about = "Broadcast scheduling with request dependencies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulator on an instance and print its flow time.
    Simulate(SimulateArgs),
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run randomized property checks.
    Verify(VerifyArgs),
    /// Compute the discrete-class optimum (an upper bound on the 1-speed optimum).
    Oracle(OracleArgs),
    /// Run algorithms over instances and write a CSV report.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Algo {
    BEquiset,
    BEquisetEdf,
    IgnoreDeps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum Inner {
    Equi,
    Minidx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum BaselineKind {
    /// Equal split over alive items.
    Equi,
    /// Cycle through alive items in index order.
    Rr,
}

#[derive(Args, Clone)]
pub(crate) struct AlgoArgs {
    #[arg(long, value_enum, default_value = "b-equiset")]
    pub algo: Algo,
    #[arg(long, value_enum, default_value = "equi")]
    pub inner: Inner,
    #[arg(long, value_enum, default_value = "equi")]
    pub baseline: BaselineKind,
    /// Round-robin quantum (work per turn).
    #[arg(long, default_value = "1")]
    pub quantum: Rational,
    #[arg(long, default_value = "1")]
    pub speed: Rational,
    #[arg(long, default_value = "1")]
    pub eps: Rational,
    #[arg(long, default_value = "1")]
    pub delta: Rational,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    algo: AlgoArgs,
    /// Trace output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    /// Size for the adversarial and randomized constructions (a perfect square).
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value = "1")]
    speed: Rational,
    #[arg(long, value_enum, default_value = "equi")]
    baseline: BaselineKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    items: usize,
    #[arg(long, default_value_t = 6)]
    requests: usize,
    #[arg(long, default_value_t = 3)]
    max_set: usize,
    #[arg(long, default_value = "1")]
    theta: Rational,
    #[arg(long, default_value = "4")]
    horizon: Rational,
    /// Instance output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GenKind {
    Figure1,
    Adversarial,
    Randomized,
    Random,
    OracleScale,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_parser = parse_property)]
    which: Property,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1")]
    eps: Rational,
    #[arg(long, default_value = "1")]
    delta: Rational,
    /// Speed for the broadcast chains; defaults to (4+eps)(1+delta).
    #[arg(long)]
    speed: Option<Rational>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Report output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Slot width; defaults to the gcd of lengths and arrivals.
    #[arg(long)]
    slot: Option<Rational>,
    /// Horizon in slots.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Witness trace output path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse()
}

/// A failed command with its exit code.
pub(crate) enum Failure {
    Property(String),
    Input(anyhow::Error),
    Infeasible(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Property(_) => 1,
            Failure::Input(_) => 2,
            Failure::Infeasible(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

pub(crate) fn load_instance(path: &Path) -> Result<BroadcastInstance, Failure> {
    let inst = read_instance(path).map_err(|e| Failure::Input(e.into()))?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(Failure::Input(anyhow!("{}: {report}", path.display())));
    }
    Ok(inst)
}

pub(crate) fn baseline_of(kind: BaselineKind, quantum: &Rational) -> Baseline {
    match kind {
        BaselineKind::Equi => Baseline::EquiPerItem,
        BaselineKind::Rr => Baseline::RoundRobin { quantum: quantum.clone() },
    }
}

/// Output of one simulator run.
pub(crate) struct Run {
    pub trace: BroadcastTrace,
    pub speed: Rational,
    pub extra: Option<String>,
}

pub(crate) fn run_algo(inst: &BroadcastInstance, a: &AlgoArgs) -> Result<Run, Failure> {
    let sim = |e: SimError| match e {
        SimError::Stalled(_) => Failure::Infeasible(e.to_string()),
        e => Failure::Input(e.into()),
    };
    match a.algo {
        Algo::BEquiset => {
            let policy = match a.inner {
                Inner::Equi => InnerPolicy::EquiWithin,
                Inner::Minidx => InnerPolicy::MinIdx,
            };
            let trace = simulate_b_equiset(inst, &a.speed, &policy).map_err(sim)?;
            Ok(Run { trace, speed: a.speed.clone(), extra: None })
        }
        Algo::IgnoreDeps => {
            let trace = simulate_ignore_deps(inst, &a.speed, &baseline_of(a.baseline, &a.quantum)).map_err(sim)?;
            Ok(Run { trace, speed: a.speed.clone(), extra: None })
        }
        Algo::BEquisetEdf => {
            let out = simulate_b_equiset_edf(inst, &a.eps, &a.delta).map_err(sim)?;
            let extra = format!(
                "preemptions={} fill_interruptions={} releases={} deadline_misses={}",
                out.preemptions,
                out.fill_interruptions,
                out.releases.len(),
                out.deadline_misses.len()
            );
            let speed = out.trace.schedule.speed.clone();
            Ok(Run { trace: out.trace, speed, extra: Some(extra) })
        }
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::Input)
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let run = run_algo(&inst, &args.algo)?;
    if let Some(path) = &args.out {
        write_out(path, &(run.trace.to_json() + "\n"))?;
    }
    let Some(flow) = &run.trace.flow else {
        let n = run.trace.completions.iter().filter(|c| c.is_none()).count();
        return Err(Failure::Infeasible(format!("{n} requests unserved")));
    };
    println!("flow={flow} requests={} speed={}", inst.requests.len(), run.speed);
    if let Some(extra) = run.extra {
        println!("{extra}");
    }
    Ok(())
}

fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn cmd_gen(args: GenArgs) -> CmdResult {
    let bad = |e: depcast_core::workloads::WorkloadError| Failure::Input(e.into());
    let inst = match args.kind {
        GenKind::Figure1 => gen_figure1(),
        GenKind::Adversarial => {
            let quantum = Rational::one();
            gen_fact1_adversarial(args.n, &args.speed, &baseline_of(args.baseline, &quantum)).map_err(bad)?.instance
        }
        GenKind::Randomized => gen_fact1_randomized(args.n, args.seed).map_err(bad)?,
        GenKind::Random => {
            let p = RandomParams {
                n_items: args.items,
                n_requests: args.requests,
                zipf_theta: args.theta,
                max_set: args.max_set,
                horizon: args.horizon,
                seed: args.seed,
                ..RandomParams::default()
            };
            gen_random_correlated(&p).map_err(bad)?
        }
        GenKind::OracleScale => gen_oracle_scale(args.items.min(3), args.requests.min(4), args.seed),
    };
    let report = validate_instance(&inst);
    let text = inst.to_json() + "\n";
    let line =
        format!("sha256={} items={} requests={} {}", digest(&text), inst.items.len(), inst.requests.len(), report);
    match &args.out {
        Some(path) => {
            write_out(path, &text)?;
            println!("{line}");
        }
        None => {
            print!("{text}");
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> CmdResult {
    if args.trials == 0 {
        return Err(Failure::Input(anyhow!("--trials must be >= 1")));
    }
    for (name, v) in [("eps", &args.eps), ("delta", &args.delta)] {
        if !v.is_positive() {
            return Err(Failure::Input(anyhow!("--{name} must be > 0")));
        }
    }
    if args.speed.as_ref().is_some_and(|s| !s.is_positive()) {
        return Err(Failure::Input(anyhow!("--speed must be > 0")));
    }
    let params = CheckParams { eps: args.eps, delta: args.delta, speed: args.speed, budget: args.budget };
    let verdicts: Vec<(u64, Verdict)> = (0..args.trials)
        .into_par_iter()
        .map(|k| {
            let seed = args.seed.wrapping_add(k);
            (seed, checks::run_check(args.which, seed, &params))
        })
        .collect();
    let mut out = String::new();
    if args.which == Property::Theorem1 {
        let _ = writeln!(
            out,
            "# reference: discrete-class optimum, an upper bound on the 1-speed optimum; a ratio above the bound is a failure"
        );
    }
    let (mut pass, mut fail, mut skip) = (0, 0, 0);
    for (k, (seed, v)) in verdicts.iter().enumerate() {
        match v {
            Verdict::Pass(_) => pass += 1,
            Verdict::Fail(_) => fail += 1,
            Verdict::Skipped(_) => skip += 1,
        }
        let _ = writeln!(out, "trial {k} seed {seed}: {v}");
    }
    let _ = writeln!(out, "{}: {} trials, {pass} passed, {fail} failed, {skip} skipped", args.which, args.trials);
    match &args.out {
        Some(path) => {
            write_out(path, &out)?;
            print!("{}", out.lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
        }
        None => print!("{out}"),
    }
    if fail > 0 {
        return Err(Failure::Property(format!("{fail} of {} trials failed", args.trials)));
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let slot = args.slot.unwrap_or_else(|| default_slot(&inst));
    let oracle = |e: OracleError| match e {
        OracleError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
        e => Failure::Input(e.into()),
    };
    let horizon = match args.horizon {
        Some(h) => h,
        None => default_horizon(&inst, &slot).map_err(oracle)?,
    };
    let res = brute_force_bopt(&inst, &slot, horizon, SearchLimits { budget: args.budget }).map_err(oracle)?;
    if let Some(path) = &args.out {
        let trace = res.schedule.to_trace(&inst).map_err(|e| Failure::Input(e.into()))?;
        write_out(path, &(trace.to_json() + "\n"))?;
    }
    println!("bopt_upper_bound={} slot={slot} horizon_slots={horizon} nodes={}", res.flow, res.nodes);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Bench(a) => bench::cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Property(m) => eprintln!("property failure: {m}"),
                Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::Infeasible(m) => eprintln!("infeasible: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
