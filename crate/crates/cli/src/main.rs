mod exact_cmd;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use percodyn_core::dyn_sim::{monte_carlo, simulate_timeline, SimConfig};
use percodyn_core::experiments::acceptance::run_acceptance;
use percodyn_core::experiments::{run_experiment, ExperimentConfig, Report};
use percodyn_core::gadget::{build_gadget, connect_estimate, persistence_estimate};
use percodyn_core::io::{read_profile, write_json, write_profile, GraphFile, Table};
use percodyn_core::tree_model::{regime_label, DEFAULT_DEGREE_CAP};
use percodyn_core::{build_profile, ProfileKind, ProfileSpec, TargetFn};
use serde_json::json;

#[derive(Parser)]
#[command(name = "percodyn", version, about = "Dynamical percolation on spherically symmetric trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a tree profile and write it as JSON.
    Profile(ProfileArgs),
    /// Evaluate an exact recursion on a profile and write a CSV table.
    Exact(exact_cmd::ExactArgs),
    /// Monte Carlo of the refresh dynamics on a truncated profile.
    Sim(SimArgs),
    /// Static and dynamical estimates on a bridge gadget.
    Gadget(GadgetArgs),
    /// Run one experiment config and write its report.
    Run(RunArgs),
    /// Run the acceptance suite.
    Accept(AcceptArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Homogeneous,
    LogPower,
    Power,
    Geometric,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    depth: usize,
    /// Degree of a homogeneous profile.
    #[arg(long, default_value_t = 2)]
    degree: u32,
    /// Edge probability of a homogeneous profile.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Normalizing constant of the target growth law.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.3)]
    p_lo: f64,
    #[arg(long, default_value_t = 0.7)]
    p_hi: f64,
    #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
    degree_cap: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    profile: PathBuf,
    /// Target level; defaults to the profile depth.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 10_000)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the switch events of replica k as CSV.
    #[arg(long, value_name = "K")]
    dump_timeline: Option<u64>,
    /// Destination of the timeline CSV (stdout when absent).
    #[arg(long, requires = "dump_timeline")]
    timeline_out: Option<PathBuf>,
}

#[derive(Args)]
struct GadgetArgs {
    #[arg(long)]
    j: u32,
    #[arg(long)]
    m: u32,
    #[arg(long)]
    radius: u32,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the graph (edge list and terminals) as JSON.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct RunSource {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a named experiment with its acceptance parameters.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: RunSource,
    /// Output directory; falls back to the config's `out_dir`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AcceptArgs {
    #[arg(long)]
    all: bool,
    /// Also write every preset report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Profile(a) => profile(a).map(|_| true),
        Command::Exact(a) => exact_cmd::run(a).map(|_| true),
        Command::Sim(a) => sim(a).map(|_| true),
        Command::Gadget(a) => gadget(a).map(|_| true),
        Command::Run(a) => run(a),
        Command::Accept(a) => accept(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn profile(a: ProfileArgs) -> Result<()> {
    let need = |v: Option<f64>, flag: &str| v.with_context(|| format!("--{flag} is required for this kind"));
    let kind = match a.kind {
        Kind::Homogeneous => ProfileKind::Homogeneous { degree: a.degree, p: a.p },
        Kind::LogPower => target(TargetFn::LogPower { c: a.c, alpha: need(a.alpha, "alpha")? }, a.degree_cap),
        Kind::Power => target(TargetFn::Power { c: a.c, theta: need(a.theta, "theta")? }, a.degree_cap),
        Kind::Geometric => target(TargetFn::Geometric { c: a.c, gamma: need(a.gamma, "gamma")? }, a.degree_cap),
    };
    let p_bounds = match a.kind {
        Kind::Homogeneous => (a.p.min(a.p_lo), a.p.max(a.p_hi)),
        _ => (a.p_lo, a.p_hi),
    };
    let spec = ProfileSpec { kind, depth: a.depth, p_bounds };
    let built = build_profile(&spec)?;
    let label = if built.profile.depth() >= 100 { Some(regime_label(&built.profile)) } else { None };
    let meta = json!({
        "spec": spec,
        "max_rel_deviation": built.max_rel_deviation,
        "regime": label,
        "version": percodyn_core::VERSION,
    });
    write_profile(&a.out, &built.profile, meta)?;
    if let Some(dev) = built.max_rel_deviation {
        eprintln!("max relative deviation from target: {dev:.3e}");
    }
    Ok(())
}

fn target(target: TargetFn, degree_cap: u32) -> ProfileKind {
    ProfileKind::TargetGrowth { target, degree_cap }
}

fn load_profile(path: &Path) -> Result<percodyn_core::TreeProfile> {
    let (profile, _) = read_profile(path).with_context(|| format!("reading profile {}", path.display()))?;
    Ok(profile)
}

fn sim(a: SimArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let depth = a.depth.unwrap_or(profile.depth());
    let config = SimConfig { horizon: a.horizon, ..SimConfig::new(depth, a.replicas, a.seed) };
    let stats = monte_carlo(&profile, &config)?;
    let out = json!({
        "config": stats.config,
        "edge_count": stats.edge_count,
        "flips": stats.flips,
        "opening_flips": stats.opening_flips,
        "closing_flips": stats.closing_flips,
        "switches": stats.switches,
        "components": stats.components,
        "boundary": stats.boundary,
        "full_interval": stats.full_interval,
        "occupied_fraction": stats.occupied_fraction,
        "root_count_min": stats.root_count_min,
        "root_count_max": stats.root_count_max,
    });
    write_json(&a.out, &out)?;

    if let Some(k) = a.dump_timeline {
        if k >= a.replicas as u64 {
            bail!("--dump-timeline {k} is outside 0..{}", a.replicas);
        }
        let tl = simulate_timeline(&profile, &SimConfig { record_events: true, ..config }, k)?;
        let mut table = Table::new("timeline", &["time", "edge", "old", "new", "pivotal"]);
        for e in &tl.events {
            table.push(vec![
                e.time.into(),
                e.edge.into(),
                (e.old_state as u32).into(),
                (e.new_state as u32).into(),
                (e.pivotal as u32).into(),
            ])?;
        }
        match &a.timeline_out {
            Some(path) => table.write_csv(path)?,
            None => print!("{}", table.to_csv()?),
        }
    }
    Ok(())
}

fn gadget(a: GadgetArgs) -> Result<()> {
    let g = build_gadget(a.j, a.m, a.radius)?;
    let connect = connect_estimate(&g.network, a.p, a.replicas, a.seed)?;
    let persistence = persistence_estimate(&g.network, a.p, a.epsilon, a.replicas, a.seed)?;
    let out = json!({
        "j": a.j,
        "m": a.m,
        "radius": a.radius,
        "p": a.p,
        "epsilon": a.epsilon,
        "seed": a.seed,
        "bridges": g.bridge_count,
        "vertices": g.network.vertex_count,
        "edges": g.network.edge_count(),
        "connect": connect,
        "persistence": persistence,
    });
    write_json(&a.out, &out)?;
    if let Some(path) = &a.graph_out {
        let meta = json!({"j": a.j, "m": a.m, "radius": a.radius, "bridges": g.bridge_count});
        write_json(path, &GraphFile::new(&g.network, meta))?;
    }
    Ok(())
}

fn print_report(report: &Report) {
    for a in &report.assertions {
        let verdict = if a.passed { "pass" } else { "FAIL" };
        println!("{verdict}  {:<48} {:>14.6e}  {}", a.name, a.measured, a.bound);
    }
    println!("{}: {}", report.experiment, if report.passed { "passed" } else { "failed" });
}

fn run(a: RunArgs) -> Result<bool> {
    let mut config = match (&a.source.config, &a.source.preset) {
        (Some(path), _) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let out = a.out.clone().or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let report = run_experiment(&config, &out)?;
    print_report(&report);
    Ok(report.passed)
}

fn accept(a: AcceptArgs) -> Result<bool> {
    if !a.all {
        bail!("nothing selected: pass --all");
    }
    let outcomes = run_acceptance(a.out.as_deref(), |name, run| {
        eprintln!("ran {name} in {:.1}s", run.elapsed.as_secs_f64());
    })?;
    for o in &outcomes {
        println!("{o}");
    }
    Ok(outcomes.iter().all(|o| o.passed))
}
