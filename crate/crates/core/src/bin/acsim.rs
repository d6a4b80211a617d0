//! Command-line interface: topology analysis, single simulations, Monte
//! Carlo ensembles, and one-shot reproduction of the two bundled examples.

use acsim::analysis::{analyze, discrepancy_report};
use acsim::fixtures;
use acsim::output::{
    ensemble_summary_json, write_consensus_csv, write_json, write_norms_csv, write_sync_norms_csv,
    write_trajectory_csv,
};
use acsim::sim::{monte_carlo, run_async, run_sync, DelayKind, DelayModel, Trajectory};
use acsim::stochastic::RowStochasticMatrix;
use acsim::topology::{row_normalize, DirectedTopology};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::error::Error;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "acsim",
    version,
    about = "Asynchronous consensus simulator and analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural and spectral analysis of a topology
    Analyze(RunArgs),
    /// Single synchronous or asynchronous run
    Simulate(RunArgs),
    /// Seeded Monte Carlo ensemble of asynchronous runs
    Montecarlo(RunArgs),
    /// Re-run one of the bundled examples with its published parameters
    Reproduce {
        /// Which example to reproduce
        #[arg(value_enum)]
        example: Example,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Example1,
    Example2,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum DelayKindArg {
    None,
    Uniform,
    Fixed,
    Shared,
}

impl From<DelayKindArg> for DelayKind {
    fn from(k: DelayKindArg) -> Self {
        match k {
            DelayKindArg::None => DelayKind::None,
            DelayKindArg::Uniform => DelayKind::Uniform,
            DelayKindArg::Fixed => DelayKind::Fixed,
            DelayKindArg::Shared => DelayKind::Shared,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand; unset values fall back to the config
/// file (if given) and then to built-in defaults.
#[derive(Args)]
struct RunArgs {
    /// Topology file (plain text matrix or JSON)
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Initial condition as a comma-separated list, e.g. 3,2,1,3,5
    #[arg(long)]
    x0: Option<String>,
    /// Maximum communication delay
    #[arg(long = "tau-d")]
    tau_d: Option<u32>,
    /// Delay distribution
    #[arg(long = "delay-kind", value_enum)]
    delay_kind: Option<DelayKindArg>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample count
    #[arg(long)]
    samples: Option<usize>,
    /// Number of iteration steps
    #[arg(long)]
    steps: Option<usize>,
    /// Consensus detection tolerance on the max-min spread
    #[arg(long)]
    ctol: Option<f64>,
    /// Output directory (default: $ACSIM_OUT_DIR or the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data artifact encoding
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON config file mirroring these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

/// JSON mirror of the command-line flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    topology: Option<PathBuf>,
    x0: Option<Vec<f64>>,
    tau_d: Option<u32>,
    delay_kind: Option<DelayKind>,
    seed: Option<u64>,
    samples: Option<usize>,
    steps: Option<usize>,
    ctol: Option<f64>,
    out: Option<PathBuf>,
}

/// Fully resolved experiment parameters.
struct Experiment {
    f: RowStochasticMatrix,
    topology: DirectedTopology,
    x0: Option<Vec<f64>>,
    delay: DelayModel,
    samples: usize,
    steps: usize,
    ctol: f64,
    out: PathBuf,
    format: Format,
}

fn parse_x0(text: &str) -> Result<Vec<f64>, Box<dyn Error>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("invalid x0 entry {t:?}: {e}").into())
        })
        .collect()
}

fn resolve(
    args: &RunArgs,
    default_kind: DelayKind,
    topology_override: Option<DirectedTopology>,
) -> Result<Experiment, Box<dyn Error>> {
    let cfg: FileConfig = match &args.config {
        Some(path) => serde_json::from_str(
            &std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?,
        )
        .map_err(|e| format!("invalid config {}: {e}", path.display()))?,
        None => FileConfig::default(),
    };

    let topology = match topology_override {
        Some(t) => t,
        None => {
            let path = args
                .topology
                .clone()
                .or(cfg.topology)
                .ok_or("missing --topology (or \"topology\" in the config file)")?;
            DirectedTopology::load(&path)?
        }
    };
    let f = row_normalize(&topology);

    let x0 = match (&args.x0, cfg.x0) {
        (Some(text), _) => Some(parse_x0(text)?),
        (None, Some(v)) => Some(v),
        (None, None) => None,
    };
    if let Some(x0) = &x0 {
        if x0.len() != f.dim() {
            return Err(format!("x0 has {} entries, topology has {}", x0.len(), f.dim()).into());
        }
    }

    let kind = args
        .delay_kind
        .map(DelayKind::from)
        .or(cfg.delay_kind)
        .unwrap_or(default_kind);
    let delay = DelayModel {
        kind,
        tau_d: args.tau_d.or(cfg.tau_d).unwrap_or(fixtures::EXAMPLE_TAU_D),
        seed: args.seed.or(cfg.seed).unwrap_or(42),
    };
    let samples = args
        .samples
        .or(cfg.samples)
        .unwrap_or(fixtures::EXAMPLE_SAMPLES);
    if samples < 1 {
        return Err("samples must be at least 1".into());
    }
    let steps = args.steps.or(cfg.steps).unwrap_or(1500);
    if steps < 1 {
        return Err("steps must be at least 1".into());
    }
    let ctol = args.ctol.or(cfg.ctol).unwrap_or(acsim::sim::CONSENSUS_TOL);

    let out = args
        .out
        .clone()
        .or(cfg.out)
        .or_else(|| std::env::var_os("ACSIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| format!("cannot create output directory {}: {e}", out.display()))?;

    Ok(Experiment {
        f,
        topology,
        x0,
        delay,
        samples,
        steps,
        ctol,
        out,
        format: args.format.unwrap_or(Format::Csv),
    })
}

fn csv_writer(path: &Path) -> Result<BufWriter<File>, Box<dyn Error>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        format!("cannot write {}: {e}", path.display())
    })?))
}

fn trajectory_json(t: &Trajectory) -> serde_json::Value {
    serde_json::json!({
        "states": t.states,
        "norm_track": t.norm_track,
        "consensus": t.consensus,
    })
}

fn cmd_analyze(args: &RunArgs) -> Result<(), Box<dyn Error>> {
    let exp = resolve(args, DelayKind::Uniform, None)?;
    let report = analyze(&exp.f, exp.x0.as_deref());
    let path = exp.out.join("report.json");
    write_json(&path, &serde_json::to_value(&report)?)?;

    println!("agents:                 {}", report.n);
    println!(
        "leaders:                {:?} (m = {})",
        report.leaders, report.m
    );
    println!("has spanning tree:      {}", report.has_spanning_tree);
    println!("m-rooted leader form:   {}", report.is_m_rooted_leader_form);
    match report.rho_margin {
        Some(rho) => println!("rho(|F - F*|):          {rho:.6}"),
        None => println!("rho(|F - F*|):          unavailable"),
    }
    println!("async reachable:        {}", report.async_reachable);
    println!("delay-invariant value:  {}", report.theorem1_applies);
    if let Some(v) = report.predicted_sync_value {
        println!("predicted sync value:   {v:.10}");
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("report written to {}", path.display());
    Ok(())
}

fn cmd_simulate(args: &RunArgs) -> Result<(), Box<dyn Error>> {
    let exp = resolve(args, DelayKind::None, None)?;
    let x0 = exp.x0.as_deref().ok_or("simulate requires --x0")?;
    let t = if exp.delay.kind == DelayKind::None {
        run_sync(&exp.f, x0, exp.steps, exp.ctol)
    } else {
        run_async(&exp.f, x0, &exp.delay, exp.steps, exp.ctol)?
    };
    match exp.format {
        Format::Csv => {
            let path = exp.out.join("trajectory.csv");
            write_trajectory_csv(csv_writer(&path)?, &t)?;
            println!("trajectory written to {}", path.display());
        }
        Format::Json => {
            let path = exp.out.join("trajectory.json");
            write_json(&path, &trajectory_json(&t))?;
            println!("trajectory written to {}", path.display());
        }
    }
    match t.consensus {
        Some(c) => println!(
            "consensus at step {} with value {:.10} (spread {:.3e})",
            c.step, c.value, c.spread
        ),
        None => println!("no consensus within {} steps", exp.steps),
    }
    Ok(())
}

fn run_ensemble(exp: &Experiment, write_topology: bool) -> Result<(), Box<dyn Error>> {
    let x0 = exp.x0.as_deref().ok_or("missing --x0")?;
    let sync = run_sync(&exp.f, x0, exp.steps, exp.ctol);
    let ensemble = monte_carlo(&exp.f, x0, &exp.delay, exp.samples, exp.steps, exp.ctol)?;
    let report = analyze(&exp.f, Some(x0));
    let discrepancy = sync
        .consensus
        .map(|c| discrepancy_report(c.value, &ensemble));

    if write_topology {
        std::fs::write(exp.out.join("topology.csv"), exp.topology.to_text())?;
    }
    match exp.format {
        Format::Csv => {
            write_sync_norms_csv(csv_writer(&exp.out.join("sync.csv"))?, &sync)?;
            write_norms_csv(csv_writer(&exp.out.join("norms.csv"))?, &ensemble.samples)?;
            write_consensus_csv(
                csv_writer(&exp.out.join("consensus.csv"))?,
                &ensemble.samples,
            )?;
        }
        Format::Json => {
            let tracks: Vec<_> = ensemble
                .samples
                .iter()
                .map(|s| serde_json::json!({"sample_id": s.sample_id, "norm_track": s.norm_track}))
                .collect();
            write_json(
                &exp.out.join("norms.json"),
                &serde_json::json!({"sync": sync.norm_track, "samples": tracks}),
            )?;
        }
    }
    let summary = ensemble_summary_json(&ensemble, discrepancy.as_ref(), Some(&report));
    write_json(&exp.out.join("summary.json"), &summary)?;

    match (sync.consensus, ensemble.mean) {
        (Some(sc), Some(mean)) => {
            println!("sync consensus value:    {:.10}", sc.value);
            println!("ensemble mean:           {mean:.10}");
            println!(
                "ensemble std:            {:.3e}",
                ensemble.std.unwrap_or(0.0)
            );
        }
        _ => println!("ensemble ran; see summary.json"),
    }
    println!(
        "{} of {} samples converged; artifacts in {}",
        exp.samples - ensemble.non_converged,
        exp.samples,
        exp.out.display()
    );
    Ok(())
}

fn cmd_montecarlo(args: &RunArgs) -> Result<(), Box<dyn Error>> {
    let exp = resolve(args, DelayKind::Uniform, None)?;
    run_ensemble(&exp, false)
}

fn cmd_reproduce(example: Example, args: &RunArgs) -> Result<(), Box<dyn Error>> {
    let topology = match example {
        Example::Example1 => fixtures::example1_topology(),
        Example::Example2 => fixtures::example2_topology(),
    };
    let mut exp = resolve(args, DelayKind::Uniform, Some(topology))?;
    if exp.x0.is_none() {
        exp.x0 = Some(fixtures::EXAMPLE_X0.to_vec());
    }
    run_ensemble(&exp, true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Reproduce { example, args } => cmd_reproduce(*example, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
