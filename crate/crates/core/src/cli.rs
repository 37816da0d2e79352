//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    bound_table_csv, cor23_min_q, induction_gap, iterate_recursion, RecursionMode, RecursionParams, Verdict,
};
use crate::config::{ExperimentConfig, LatticeSpec};
use crate::engine::{estimate_error, Automaton, SimPlan};
use crate::infobound::{unroll_circuit, InfoBoundReport};
use crate::lattice::{light_cone, Lattice};
use crate::treeify::{budget_violations, treeify, verify_directed_tree, TreeRuleSet};

#[derive(Debug, Parser)]
#[command(name = "faultmem", version, about = "Bit memory in faulty majority-vote cellular automata")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding the config's.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the config with every default filled in.
    Config(ConfigArg),
    /// Write the configured lattice to `<prefix>.lattice`.
    Generate(ConfigArg),
    /// Reduce the lattice to a tree; writes the tree and a deletion report.
    Treeify(ConfigArg),
    /// Monte Carlo error frequencies with a JSON metadata sidecar.
    Simulate(ConfigArg),
    /// Iterate the per-cell error recursion on a tree.
    Recurse(RecurseArgs),
    /// Degree bounds for a list of margins.
    Bounds(BoundsArgs),
    /// Information-theoretic bound for a fan-in, or for a configured cell.
    InfoBound(InfoBoundArgs),
    /// Tree tolerance verdicts over a grid of degrees and margins.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    PaperBound,
    ChernoffBound,
    ExactGreedy,
    ExactPure,
}

#[derive(Debug, Args)]
pub struct RecurseArgs {
    #[arg(long)]
    pub d: u32,
    /// Threshold; defaults to majority `(d + 1) / 2`.
    #[arg(long)]
    pub h: Option<u32>,
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long)]
    pub xi: f64,
    #[arg(long, value_enum, default_value = "paper-bound")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 10_000)]
    pub t_max: u32,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Comma-separated margins.
    #[arg(long, value_delimiter = ',', required = true)]
    pub xi: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct InfoBoundArgs {
    #[arg(long, required_unless_present = "config")]
    pub d: Option<u32>,
    #[arg(long)]
    pub xi: f64,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Horizon; defaults to the exclusion horizon, or 1.
    #[arg(long)]
    pub t: Option<u32>,
    /// Unroll the configured automaton around its root instead.
    #[arg(long, conflicts_with = "d")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<u32>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub xi: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub t_max: u32,
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ExperimentConfig::parse(&text)?)
}

fn out_dir(cli_out: &Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> anyhow::Result<PathBuf> {
    let dir = match (cli_out, cfg) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => PathBuf::from(&c.output.dir),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The lattice and automaton a config describes, ready to simulate.
pub struct Experiment {
    pub lattice: Lattice,
    pub tree: Option<TreeRuleSet>,
    pub automaton: Automaton,
}

pub fn build_experiment(cfg: &ExperimentConfig) -> crate::Result<Experiment> {
    let full = cfg.lattice.build()?;
    let (lattice, keys) = if cfg.plan.light_cone {
        let cone = light_cone(&full, 0, cfg.plan.horizon)?;
        let keys = cone.origin.iter().map(|&v| v as u64).collect();
        (cone.lattice, Some(keys))
    } else {
        (full, None)
    };
    let (automaton, tree) = if cfg.treeify {
        let rules = treeify(&lattice, 0)?;
        (Automaton::from_tree(&rules, cfg.faults.remembered_bit == 1)?, Some(rules))
    } else {
        (Automaton::uniform(&lattice, &cfg.rule.to_spec()?)?, None)
    };
    let automaton = match keys {
        Some(k) => automaton.with_vertex_keys(k)?,
        None => automaton,
    };
    Ok(Experiment {
        lattice,
        tree,
        automaton,
    })
}

fn mode(arg: ModeArg, m: u32) -> RecursionMode {
    match arg {
        ModeArg::PaperBound => RecursionMode::PaperBound,
        ModeArg::ChernoffBound => RecursionMode::ChernoffBound { m },
        ModeArg::ExactGreedy => RecursionMode::ExactGreedy,
        ModeArg::ExactPure => RecursionMode::ExactPure,
    }
}

fn verdict_name(v: Verdict) -> String {
    match v {
        Verdict::Tolerant => "tolerant".into(),
        Verdict::Violated { t } => format!("violated@{t}"),
    }
}

pub const SWEEP_HEADER: &str =
    "q,xi,epsilon,d,h,m,cor23_min_q,induction_gap,verdict,paper_bound,chernoff_bound,exact_greedy,exact_pure";

/// One sweep row: a `q`-regular tree with full majority voting.
///
/// `verdict` is the analytic certificate (`tolerant` when the induction
/// step closes for the reduced tree, else `uncertified`); the last four
/// columns iterate each recursion with the unreduced `d = q` (`q + 1` for
/// even `q`) and majority threshold.
pub fn sweep_row(q: u32, xi: f64, t_max: u32) -> crate::Result<String> {
    let even = q.is_multiple_of(2);
    let (d, r) = if even { (q + 1, 2) } else { (q, 1) };
    let h = d.div_ceil(2);
    let m = 2 * r - 1;
    let bounds = cor23_min_q(xi)?;
    let min_q = if even { bounds.even_q } else { bounds.odd_q };
    let gap = if d - r > m { induction_gap(xi, m, d - r)? } else { f64::NEG_INFINITY };
    let mut row = format!(
        "{q},{xi},{},{d},{h},{m},{min_q},{gap},{}",
        crate::config::tidy(0.5 - xi),
        if gap >= 0.0 { "tolerant" } else { "uncertified" }
    );
    for mode in [
        RecursionMode::PaperBound,
        RecursionMode::ChernoffBound { m },
        RecursionMode::ExactGreedy,
        RecursionMode::ExactPure,
    ] {
        let tr = iterate_recursion(RecursionParams::new(d, h, m, xi), mode, t_max)?;
        row.push(',');
        row.push_str(&verdict_name(tr.verdict));
    }
    Ok(row)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Config(a) => {
            println!("{}", load_config(&a.config)?.canonical_json());
        }
        Command::Generate(a) => {
            let cfg = load_config(&a.config)?;
            let lattice = cfg.lattice.build()?;
            let path = out_dir(&cli.out, Some(&cfg))?.join(format!("{}.lattice", cfg.output.prefix));
            write(&path, &lattice.to_text())?;
            eprintln!("{} vertices, {} edges -> {}", lattice.vertex_count(), lattice.edge_count(), path.display());
        }
        Command::Treeify(a) => {
            let cfg = load_config(&a.config)?;
            let lattice = cfg.lattice.build()?;
            let rules = treeify(&lattice, 0)?;
            let check = verify_directed_tree(&rules);
            let dir = out_dir(&cli.out, Some(&cfg))?;
            write(&dir.join(format!("{}.tree.lattice", cfg.output.prefix)), &rules.tree.to_text())?;
            write(&dir.join(format!("{}.deletions.csv", cfg.output.prefix)), &rules.deletion_report_csv())?;
            let violations = budget_violations(&rules);
            for v in &violations {
                eprintln!("budget: {v}");
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "max_deletions": rules.max_deletions,
                    "tree_ok": check.ok,
                    "diagnostics": check.diagnostics,
                    "budget_violations": violations.len(),
                }))?
            );
            if !check.ok {
                bail!("retained edges do not form a tree");
            }
        }
        Command::Simulate(a) => {
            let cfg = load_config(&a.config)?;
            simulate(&cfg, &cli.out)?;
        }
        Command::Recurse(a) => {
            let h = a.h.unwrap_or(a.d.div_ceil(2));
            let trace = iterate_recursion(RecursionParams::new(a.d, h, a.m, a.xi), mode(a.mode, a.m), a.t_max)?;
            emit(&cli.out, "recursion.csv", &trace.to_csv())?;
            eprintln!("{} after {} steps", verdict_name(trace.verdict), trace.sequence.len() - 1);
        }
        Command::Bounds(a) => {
            emit(&cli.out, "bounds.csv", &bound_table_csv(&a.xi)?)?;
        }
        Command::InfoBound(a) => {
            let report = match &a.config {
                Some(path) => {
                    let cfg = load_config(path)?;
                    let exp = build_experiment(&cfg)?;
                    let t = a.t.unwrap_or(cfg.plan.horizon).max(1);
                    let circuit = unroll_circuit(&exp.automaton, exp.automaton.root(), t)?;
                    InfoBoundReport::for_circuit(&circuit, a.xi, a.delta)?
                }
                None => {
                    let d = a.d.expect("clap requires d");
                    let t = match a.t {
                        Some(t) => t,
                        None => match crate::infobound::tolerance_feasible(d, a.xi, a.delta)? {
                            crate::infobound::Feasibility::ExcludedAt(t) => t,
                            crate::infobound::Feasibility::NotExcluded => 1,
                        },
                    };
                    InfoBoundReport::uniform(d, a.xi, a.delta, t)?
                }
            };
            emit(&cli.out, "info_bound.json", &(report.to_json() + "\n"))?;
        }
        Command::Sweep(a) => {
            let mut out = String::from(SWEEP_HEADER);
            out.push('\n');
            for &q in &a.q {
                for &xi in &a.xi {
                    out.push_str(&sweep_row(q, xi, a.t_max)?);
                    out.push('\n');
                }
            }
            emit(&cli.out, "sweep.csv", &out)?;
        }
    }
    Ok(())
}

/// Prints to stdout, or writes `name` under `--out` when given.
fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> anyhow::Result<()> {
    match out {
        Some(_) => {
            let path = out_dir(out, None)?.join(name);
            write(&path, text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(cfg: &ExperimentConfig, cli_out: &Option<PathBuf>) -> anyhow::Result<()> {
    let spec = cfg.fault_spec()?;
    let exp = build_experiment(cfg)?;
    let plan = SimPlan::new(
        Arc::new(exp.automaton),
        spec,
        cfg.plan.horizon,
        cfg.plan.replicates,
        cfg.plan.observed.to_observed(),
        cfg.seed,
        cfg.plan.boundary_policy.into(),
    )?;
    let est = estimate_error(&plan);
    let dir = out_dir(cli_out, Some(cfg))?;
    let prefix = &cfg.output.prefix;
    write(&dir.join(format!("{prefix}.csv")), &est.to_csv())?;
    let lattice_name = match &cfg.lattice {
        LatticeSpec::File { path } => path.clone(),
        other => serde_json::to_string(other)?,
    };
    let sidecar = json!({
        "seed": cfg.seed,
        "spec": {
            "alpha": spec.alpha(),
            "beta": spec.beta(),
            "epsilon": cfg.faults.epsilon,
            "model": spec.model().name(),
            "remembered_bit": u8::from(spec.remembered()),
        },
        "lattice": lattice_name,
        "lattice_kind": exp.lattice.kind().to_string(),
        "lattice_hash": exp.lattice.content_hash(),
        "treeified": cfg.treeify,
        "horizon": cfg.plan.horizon,
        "replicates": cfg.plan.replicates,
        "observed_cells": plan.observed.len(),
        "boundary_policy": plan.boundary_policy.name(),
        "observation": "finite lattice: boundary cells are clamped and only the listed interior cells are observed",
        "mean_freq_at_horizon": est.mean_freq(cfg.plan.horizon),
        "config": serde_json::from_str::<serde_json::Value>(&cfg.canonical_json())?,
    });
    write(&dir.join(format!("{prefix}.json")), &(serde_json::to_string_pretty(&sidecar)? + "\n"))?;
    eprintln!(
        "mean error frequency at t={}: {:.6} over {} replicates",
        cfg.plan.horizon,
        est.mean_freq(cfg.plan.horizon),
        cfg.plan.replicates
    );
    Ok(())
}
