use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use wsn_aco::config::{seed_list, ExperimentSpec};
use wsn_aco::{load_config, run_experiments, NetworkConfig, ProtocolKind, SimConfig, Sweep};

/// Run wireless sensor network routing experiments and write CSV results.
#[derive(Parser, Debug)]
#[command(name = "simulate", version)]
struct Args {
    /// Experiment config file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Routing protocol; overrides the config's protocol list.
    #[arg(long)]
    protocol: Option<ProtocolKind>,
    /// Scenario preset 1, 2 or 3; replaces the network settings.
    #[arg(long)]
    scenario: Option<u8>,
    /// Seed, or a list/range such as `1,2,3` or `1..5`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    ttl: Option<u32>,
    /// Parameter sweep, e.g. `ttl=5,10,15,20` or `rho=0.5,0.75,1`.
    #[arg(long)]
    sweep: Option<Sweep>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-packet trace files.
    #[arg(long)]
    trace: bool,
}

fn resolve(args: &Args) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(index) = args.scenario {
        let Some(scenario) = NetworkConfig::preset(index) else {
            bail!("unknown scenario {index}, expected 1, 2 or 3");
        };
        let base = &spec.base;
        let ttl = base.ttl;
        let ttl_was_default = ttl == wsn_aco::sim::default_ttl(&base.scenario);
        let mut scenario = scenario;
        scenario.super_sensors = base.scenario.super_sensors;
        scenario.super_radius = base.scenario.super_radius;
        spec.base = SimConfig {
            scenario,
            ..base.clone()
        };
        if ttl_was_default {
            spec.base.ttl = wsn_aco::sim::default_ttl(&spec.base.scenario);
        }
        spec.scenario_name = format!("scenario{index}");
    }
    if let Some(p) = args.protocol {
        spec.protocols = vec![p];
    }
    if let Some(s) = &args.seed {
        spec.seeds = seed_list(s).map_err(anyhow::Error::msg)?;
    }
    if let Some(r) = args.rounds {
        spec.base.rounds = r;
    }
    if let Some(t) = args.ttl {
        spec.base.ttl = t;
    }
    if let Some(s) = &args.sweep {
        spec.sweep = s.clone();
    }
    if let Some(o) = &args.out {
        spec.out_dir = o.clone();
    }
    if args.trace {
        spec.base.trace = true;
    }
    spec.validate()?;
    Ok(spec)
}

fn run(args: Args) -> Result<()> {
    let spec = resolve(&args)?;
    eprintln!(
        "{}: {} run(s), {} rounds each, output in {}",
        spec.scenario_name,
        spec.run_count(),
        spec.base.rounds,
        spec.out_dir.display()
    );
    let report = run_experiments(&spec).context("experiment failed")?;
    let swept = report.sweep_axis != "none";
    let sweep_col = |v: String| {
        if swept {
            format!("{v:>6} ")
        } else {
            String::new()
        }
    };
    println!(
        "{:<14} {}{:>4}  {:>17}  {:>17}  {:>7}  {:>7}",
        "protocol",
        sweep_col(report.sweep_axis.to_string()),
        "runs",
        "success",
        "energy_j",
        "fnd",
        "hnd"
    );
    for r in &report.rows {
        println!(
            "{:<14} {}{:>4}  {:>8.4} ±{:<7.4}  {:>8.4} ±{:<7.4}  {:>7.1}  {:>7.1}",
            r.protocol,
            sweep_col(r.sweep_value.map(|v| v.to_string()).unwrap_or_default()),
            r.runs,
            r.success_ratio.mean,
            r.success_ratio.std,
            r.total_energy.mean,
            r.total_energy.std,
            r.fnd.mean,
            r.hnd.mean,
        );
    }
    eprintln!("wrote {} files", report.files.len());
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
