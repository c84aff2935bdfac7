//! `netscape` subcommands.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use netscape_core::bench::{
    degree_samples_to_csv, degree_sweep, parse_bench_csv, render_report_table, report_file_stem, report_to_json,
    rows_to_reports, run_suite, to_bench_csv, BenchConfig, BenchReport, FrameTimer, SweepParams, WallClock,
    WorkModelClock,
};
use netscape_core::layout::{parse_positions, positions_to_csv};
use netscape_core::{generate_synthetic, parse_network, EdgeMode, Execution, ForceLayout, LayoutParams, Network, SceneState, Vec3};

const DEFAULT_SEED: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "netscape", version, about = "Explore and benchmark large co-expression networks in 3D")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic modular network.
    Gen(GenArgs),
    /// Compute a force-directed 3D layout.
    Layout(LayoutArgs),
    /// Sample an induced subnetwork.
    Subset(SubsetArgs),
    /// Run the interaction benchmark suite.
    Bench(BenchArgs),
    /// Serve exploration sessions over WebSocket.
    Serve(ServeArgs),
    /// Print the summary table for a finished benchmark.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2693)]
    pub nodes: usize,
    #[arg(long, default_value_t = 89120)]
    pub edges: usize,
    #[arg(long, default_value_t = 10)]
    pub modules: usize,
    #[arg(long, env = "NETSCAPE_SEED", default_value = DEFAULT_SEED)]
    pub seed: u64,
    /// Directory receiving nodes.csv and edges.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NetworkFiles {
    /// Nodes CSV.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Edges CSV.
    #[arg(long)]
    pub edges: PathBuf,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub input: NetworkFiles,
    #[arg(long, default_value_t = 100.0)]
    pub side: f64,
    #[arg(long, default_value_t = 500)]
    pub iters: u32,
    #[arg(long, env = "NETSCAPE_SEED", default_value = DEFAULT_SEED)]
    pub seed: u64,
    /// Drop edges with weight at or below this value first.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
    /// Positions CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    #[command(flatten)]
    pub input: NetworkFiles,
    /// Positions CSV to carry over to the kept genes.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Share of nodes to keep, as a decimal or a ratio such as `1/3`.
    #[arg(long, value_parser = parse_fraction)]
    pub fraction: f64,
    #[arg(long, env = "NETSCAPE_SEED", default_value = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Eager,
    Amortized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    /// Measured wall-clock time.
    Wall,
    /// Cost computed from the geometry each tick produces; reproducible.
    Model,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Nodes CSV; without it a 2693-node, 89120-edge network is generated.
    #[arg(long, requires = "edges")]
    pub nodes: Option<PathBuf>,
    #[arg(long, requires = "nodes")]
    pub edges: Option<PathBuf>,
    /// Positions CSV; computed when absent.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Eager)]
    pub mode: ModeArg,
    /// New edge segments per frame in amortized mode.
    #[arg(long, default_value_t = 32)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = ClockArg::Wall)]
    pub clock: ClockArg,
    #[arg(long, default_value_t = 500)]
    pub warmup: usize,
    #[arg(long, default_value_t = 700)]
    pub frames: usize,
    /// Nodes in the degree/cost sweep; 0 skips it.
    #[arg(long, default_value_t = 200)]
    pub sweep: usize,
    /// Timed repetitions per sweep node.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, env = "NETSCAPE_SEED", default_value = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory for bench.csv, per-row reports and degree_cost.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// bench.csv, or the directory holding it.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 13.9)]
    pub budget_ms: f64,
}

pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            num / den
        }
        None => s.trim().parse().map_err(|_| format!("{s:?} is not a number"))?,
    };
    if value > 0.0 && value <= 1.0 {
        Ok(value)
    } else {
        Err(format!("fraction {s:?} must lie in (0, 1]"))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_network(files: &NetworkFiles) -> Result<Network> {
    parse_network(&read(&files.nodes)?, &read(&files.edges)?)
        .with_context(|| format!("parsing {} / {}", files.nodes.display(), files.edges.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => gen(&a),
        Command::Layout(a) => layout(&a),
        Command::Subset(a) => subset(&a),
        Command::Bench(a) => bench(&a),
        Command::Serve(a) => serve(&a),
        Command::Report(a) => report(&a),
    }
}

fn gen(a: &GenArgs) -> Result<()> {
    let net = generate_synthetic(a.nodes, a.edges, a.modules, a.seed)?;
    write(&a.out.join("nodes.csv"), &net.to_nodes_csv())?;
    write(&a.out.join("edges.csv"), &net.to_edges_csv())?;
    println!(
        "wrote {} nodes, {} edges, {} modules to {}",
        net.node_count(),
        net.edge_count(),
        net.module_count(),
        a.out.display()
    );
    Ok(())
}

fn layout(a: &LayoutArgs) -> Result<()> {
    let net = load_network(&a.input)?.apply_edge_threshold(a.threshold)?;
    let params = LayoutParams {
        side: a.side,
        iterations: a.iters,
        execution: if a.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
        ..LayoutParams::default()
    };
    let positions = ForceLayout::new(&net, params)?.run(a.seed).positions;
    write(&a.out, &positions_to_csv(&net, &positions))?;
    println!("laid out {} nodes in {} steps -> {}", net.node_count(), a.iters, a.out.display());
    Ok(())
}

fn subset(a: &SubsetArgs) -> Result<()> {
    let net = load_network(&a.input)?;
    let sub = net.subset(a.fraction, a.seed)?;
    write(&a.out.join("nodes.csv"), &sub.to_nodes_csv())?;
    write(&a.out.join("edges.csv"), &sub.to_edges_csv())?;
    if let Some(path) = &a.layout {
        let full = parse_positions(&net, &read(path)?)?;
        let kept: Vec<Vec3> = sub
            .nodes()
            .iter()
            .map(|n| full[net.lookup(&n.name).expect("subset keeps names").index()])
            .collect();
        write(&a.out.join("positions.csv"), &positions_to_csv(&sub, &kept))?;
    }
    println!(
        "kept {} of {} nodes and {} of {} edges -> {}",
        sub.node_count(),
        net.node_count(),
        sub.edge_count(),
        net.edge_count(),
        a.out.display()
    );
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let edge_mode = match a.mode {
        ModeArg::Eager => EdgeMode::Eager,
        ModeArg::Amortized => EdgeMode::Amortized(a.budget),
    };
    let config = BenchConfig {
        warmup_frames: a.warmup,
        measured_frames: a.frames,
        edge_mode,
        ..BenchConfig::default()
    };
    config.validate()?;
    let net = match (&a.nodes, &a.edges) {
        (Some(nodes), Some(edges)) => load_network(&NetworkFiles {
            nodes: nodes.clone(),
            edges: edges.clone(),
        })?,
        _ => generate_synthetic(2693, 89120, 10, a.seed)?,
    };
    let positions = match &a.layout {
        Some(path) => parse_positions(&net, &read(path)?)?,
        None => ForceLayout::new(&net, LayoutParams::default())?.run(a.seed).positions,
    };
    let net = Arc::new(net);
    let positions = Arc::new(positions);
    let clock = a.clock;
    let mut make_timer = move || -> Box<dyn FrameTimer> {
        match clock {
            ClockArg::Wall => Box::new(WallClock),
            ClockArg::Model => Box::new(WorkModelClock::default()),
        }
    };
    let reports = run_suite(&net, &positions, &config, a.seed, &mut make_timer)?;
    write_reports(&a.out, &reports)?;

    if a.sweep > 0 {
        let scene = SceneState::single(net.clone(), positions.clone())?;
        let sweep = SweepParams {
            nodes: a.sweep,
            repeats: a.repeats,
        };
        let samples = degree_sweep(&scene, &config, &sweep, a.seed, make_timer().as_mut())?;
        write(&a.out.join("degree_cost.csv"), &degree_samples_to_csv(&samples))?;
    }
    print!("{}", render_report_table(&reports));
    Ok(())
}

pub fn write_reports(dir: &Path, reports: &[BenchReport]) -> Result<()> {
    write(&dir.join("bench.csv"), &to_bench_csv(reports))?;
    for r in reports {
        let path = dir.join(format!("{}.report.json", report_file_stem(&r.label)));
        write(&path, &report_to_json(r))?;
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let path = if a.input.is_dir() {
        a.input.join("bench.csv")
    } else {
        a.input.clone()
    };
    let rows = parse_bench_csv(&read(&path)?)?;
    if rows.is_empty() {
        bail!("{} has no benchmark rows", path.display());
    }
    print!("{}", render_report_table(&rows_to_reports(&rows, a.budget_ms)));
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<()> {
    let addr = SocketAddr::new(a.host, a.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(crate::server::serve(addr, EdgeMode::Eager))?;
    Ok(())
}
