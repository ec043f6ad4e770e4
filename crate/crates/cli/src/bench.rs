//! `depcast bench`: flow of each algorithm on each instance against an
//! oracle reference, as CSV.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use rayon::prelude::*;

use depcast_core::oracle::{
    brute_force_bopt, default_horizon, default_slot, greedy_upper_bound, OracleError, SearchLimits,
};
use depcast_core::workloads::gen_fact1_adversarial;
use depcast_core::{BroadcastInstance, Rational};

use crate::{baseline_of, load_instance, run_algo, Algo, AlgoArgs, BaselineKind, CmdResult, Failure, Inner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum OracleKind {
    /// Branch-and-bound discrete optimum; the row errors beyond the budget.
    Exact,
    /// Greedy schedule flow.
    Greedy,
    /// Exact when within the budget, greedy otherwise.
    Auto,
    None,
}

#[derive(Args)]
pub(crate) struct BenchArgs {
    /// Instance files (repeatable).
    #[arg(long)]
    instance: Vec<PathBuf>,
    /// Adversarial instances for these sizes, built against the selected baseline at speed 1.
    #[arg(long, value_delimiter = ',')]
    fact1: Vec<usize>,
    /// Algorithms to run (repeatable).
    #[arg(long, value_enum, default_values_t = [Algo::BEquiset])]
    algo: Vec<Algo>,
    #[arg(long, value_enum, default_value = "equi")]
    inner: Inner,
    #[arg(long, value_enum, default_value = "equi")]
    baseline: BaselineKind,
    #[arg(long, default_value = "1")]
    quantum: Rational,
    #[arg(long, default_value = "1")]
    speed: Rational,
    #[arg(long, default_value = "1")]
    eps: Rational,
    #[arg(long, default_value = "1")]
    delta: Rational,
    #[arg(long, value_enum, default_value = "auto")]
    oracle: OracleKind,
    #[arg(long)]
    slot: Option<Rational>,
    #[arg(long, default_value_t = 2_000_000)]
    budget: u64,
    /// CSV output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report wall_ms as 0 so that reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

struct Reference {
    flow: Rational,
    kind: &'static str,
}

fn reference(inst: &BroadcastInstance, args: &BenchArgs) -> Result<Option<Reference>, String> {
    let greedy = || {
        greedy_upper_bound(inst).map(|r| Some(Reference { flow: r.flow, kind: "greedy" })).map_err(|e| e.to_string())
    };
    #[allow(clippy::result_large_err)]
    let exact = || {
        let slot = args.slot.clone().unwrap_or_else(|| default_slot(inst));
        let h = default_horizon(inst, &slot)?;
        brute_force_bopt(inst, &slot, h, SearchLimits { budget: args.budget })
    };
    match args.oracle {
        OracleKind::None => Ok(None),
        OracleKind::Greedy => greedy(),
        OracleKind::Exact => {
            exact().map(|r| Some(Reference { flow: r.flow, kind: "exact" })).map_err(|e| e.to_string())
        }
        OracleKind::Auto => match exact() {
            Ok(r) => Ok(Some(Reference { flow: r.flow, kind: "exact" })),
            Err(OracleError::Scale(_)) => greedy(),
            Err(e) => Err(e.to_string()),
        },
    }
}

fn algo_label(a: &AlgoArgs) -> String {
    match a.algo {
        Algo::BEquiset => format!("b-equiset/{}", if a.inner == Inner::Equi { "equi" } else { "minidx" }),
        Algo::BEquisetEdf => format!("b-equiset-edf/eps={}/delta={}", a.eps, a.delta),
        Algo::IgnoreDeps => match a.baseline {
            BaselineKind::Equi => "ignore-deps/equi".into(),
            BaselineKind::Rr => format!("ignore-deps/rr={}", a.quantum),
        },
    }
}

struct Row {
    fields: [String; 10],
    failed: bool,
}

const HEADER: [&str; 10] = [
    "instance",
    "algorithm",
    "speed",
    "flow",
    "oracle_bound",
    "ratio",
    "wall_ms",
    "ratio_exact",
    "oracle_kind",
    "error",
];

fn bench_row(
    name: &str,
    inst: &BroadcastInstance,
    a: &AlgoArgs,
    reference: &Result<Option<Reference>, String>,
    deterministic: bool,
) -> Row {
    let start = Instant::now();
    let run = run_algo(inst, a);
    let wall = if deterministic { 0 } else { start.elapsed().as_millis() };
    let mut fields: [String; 10] = Default::default();
    fields[0] = name.to_string();
    fields[1] = algo_label(a);
    fields[6] = wall.to_string();
    let mut errors = Vec::new();
    match &run {
        Ok(r) => {
            fields[2] = r.speed.to_string();
            match &r.trace.flow {
                Some(f) => fields[3] = f.to_string(),
                None => errors.push("unserved requests".to_string()),
            }
        }
        Err(Failure::Input(e)) => errors.push(format!("{e:#}")),
        Err(Failure::Infeasible(m) | Failure::Property(m)) => errors.push(m.clone()),
    }
    match reference {
        Ok(Some(refr)) => {
            fields[4] = refr.flow.to_string();
            fields[8] = refr.kind.to_string();
            if let Ok(Some(f)) = run.as_ref().map(|r| r.trace.flow.as_ref()) {
                if refr.flow.is_positive() {
                    let ratio = f / &refr.flow;
                    fields[5] = ratio.to_decimal(6);
                    fields[7] = ratio.to_string();
                }
            }
        }
        Ok(None) => fields[8] = "none".into(),
        Err(e) => errors.push(format!("oracle: {e}")),
    }
    let failed = !errors.is_empty();
    fields[9] = errors.join("; ");
    Row { fields, failed }
}

pub(crate) fn cmd_bench(args: BenchArgs) -> CmdResult {
    let mut instances: Vec<(String, BroadcastInstance)> = Vec::new();
    for path in &args.instance {
        let name =
            path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
        instances.push((name, load_instance(path)?));
    }
    for &n in &args.fact1 {
        let rep = gen_fact1_adversarial(n, &Rational::one(), &baseline_of(args.baseline, &args.quantum))
            .map_err(|e| Failure::Input(e.into()))?;
        instances.push((format!("fact1-n{n}"), rep.instance));
    }
    if instances.is_empty() {
        return Err(Failure::Input(anyhow!("no instances: pass --instance or --fact1")));
    }
    let algos: Vec<AlgoArgs> = args
        .algo
        .iter()
        .map(|&algo| AlgoArgs {
            algo,
            inner: args.inner,
            baseline: args.baseline,
            quantum: args.quantum.clone(),
            speed: args.speed.clone(),
            eps: args.eps.clone(),
            delta: args.delta.clone(),
        })
        .collect();
    let refs: Vec<_> = instances.par_iter().map(|(_, inst)| reference(inst, &args)).collect();
    let cells: Vec<(usize, usize)> = (0..instances.len()).flat_map(|i| (0..algos.len()).map(move |k| (i, k))).collect();
    let rows: Vec<Row> = cells
        .par_iter()
        .map(|&(i, k)| bench_row(&instances[i].0, &instances[i].1, &algos[k], &refs[i], args.deterministic))
        .collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Input(e.into());
    w.write_record(HEADER).map_err(io)?;
    for r in &rows {
        w.write_record(&r.fields).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(anyhow!("{e}")))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| Failure::Input(anyhow!("writing {}: {e}", path.display())))?
        }
        None => print!("{text}"),
    }
    let failed = rows.iter().filter(|r| r.failed).count();
    if failed > 0 {
        return Err(Failure::Property(format!("{failed} of {} rows errored", rows.len())));
    }
    Ok(())
}
