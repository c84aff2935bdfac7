//! Frame-budget benchmark harness.
//!
//! Scripted interactions drive a [`SceneState`] one tick at a time; each
//! tick applies the interaction and builds the frame's geometry, and the
//! cost of that tick is recorded through a pluggable [`FrameTimer`]. Only
//! ticks after the warmup window are kept, each clamped to the frame cap.

mod report;
mod script;
mod stats;
mod timer;

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Network};
use crate::layout::Vec3;
use crate::scene::{EdgeMode, FrameBuilder, SceneError, SceneState};

pub use report::{
    format_ms, parse_bench_csv, render_report_table, report_file_stem, report_to_json, rows_to_reports,
    to_bench_csv, BenchRow, BENCH_CSV_HEADER, ONE_PERCENT, QUARTER_PERCENT,
};
pub use script::{InteractionKind, InteractionScript, ScriptStep, SELECTION_CADENCE};
pub use stats::{spearman, summarize, tail_count, BenchReport, ReportMeta, TailStat};
pub use timer::{FrameTimer, ScriptedClock, TickWork, WallClock, WorkModelClock};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("script has {got} steps, the run needs {needed}")]
    ScriptTooShort { needed: usize, got: usize },
    #[error("no frame samples to summarize")]
    NoSamples,
    #[error("bench.csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub warmup_frames: usize,
    pub measured_frames: usize,
    /// Longest a frame may count for.
    pub frame_cap_ms: f64,
    /// Mean frame budget for a pass (72 FPS).
    pub budget_ms: f64,
    pub tail_fractions: Vec<f64>,
    pub edge_mode: EdgeMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            warmup_frames: 500,
            measured_frames: 700,
            frame_cap_ms: 100.0,
            budget_ms: 13.9,
            tail_fractions: vec![ONE_PERCENT, QUARTER_PERCENT],
            edge_mode: EdgeMode::Eager,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.measured_frames == 0 {
            return Err(BenchError::InvalidConfig("measured_frames must be positive"));
        }
        if !(self.budget_ms > 0.0 && self.frame_cap_ms > self.budget_ms && self.frame_cap_ms.is_finite()) {
            return Err(BenchError::InvalidConfig("need frame cap > budget > 0"));
        }
        if self.tail_fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(BenchError::InvalidConfig("tail fractions must lie in (0, 1)"));
        }
        if self.edge_mode == EdgeMode::Amortized(0) {
            return Err(BenchError::InvalidConfig("amortized budget must be positive"));
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.warmup_frames + self.measured_frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSample {
    /// Tick index counted from the start of the run, warmup included.
    pub frame: usize,
    pub cost_ms: f64,
}

fn apply(scene: &SceneState, step: &ScriptStep) -> SceneState {
    let next = match step {
        ScriptStep::Idle => return scene.clone(),
        ScriptStep::Translate(d) => scene.translate(d),
        ScriptStep::TwoHand { l0, r0, l1, r1 } => scene.two_hand_transform(l0, r0, l1, r1),
        ScriptStep::Select(name) => scene.select(name.as_deref()),
    };
    // A scripted step the scene rejects (e.g. selecting a hidden gene) is a no-op.
    next.unwrap_or_else(|_| scene.clone())
}

/// Runs `warmup + measured` ticks of `script` against `scene` and returns
/// the measured window.
pub fn run_benchmark(
    scene: &SceneState,
    script: &InteractionScript,
    config: &BenchConfig,
    timer: &mut dyn FrameTimer,
) -> Result<Vec<FrameSample>, BenchError> {
    config.validate()?;
    let total = config.total_frames();
    if script.len() < total {
        return Err(BenchError::ScriptTooShort {
            needed: total,
            got: script.len(),
        });
    }
    let mut builder = FrameBuilder::new(config.edge_mode)?;
    let mut state = scene.clone();
    let mut samples = Vec::with_capacity(config.measured_frames);
    for (tick, step) in script.steps[..total].iter().enumerate() {
        let mut work = || {
            state = apply(&state, step);
            let frame = builder.build(&state);
            let work = TickWork {
                node_instances: frame.node_instances.len(),
                new_segments: frame.new_segments,
                total_segments: frame.edge_segments.len(),
            };
            std::hint::black_box(frame);
            work
        };
        let cost = timer.time(tick, &mut work);
        if tick >= config.warmup_frames {
            samples.push(FrameSample {
                frame: tick,
                cost_ms: cost.clamp(0.0, config.frame_cap_ms),
            });
        }
    }
    Ok(samples)
}

/// Cost of the frame in which one node becomes selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSample {
    pub node: String,
    pub degree: usize,
    pub cost_ms: f64,
    /// Segments emitted in the selection frame.
    pub new_segments: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Nodes to profile, spread across the degree range.
    pub nodes: usize,
    /// Timed repetitions per node; the median is reported.
    pub repeats: usize,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { nodes: 200, repeats: 5 }
    }
}

/// Profiles selection cost against node degree.
///
/// Visible nodes of the active network are ordered by degree (seeded
/// tie-break) and `sweep.nodes` of them are taken at evenly spaced ranks.
/// For each, the frame that changes the selection from none to that node is
/// timed with a fresh frame builder; the median over `sweep.repeats` is kept.
/// Samples are returned in ascending degree order.
pub fn degree_sweep(
    scene: &SceneState,
    config: &BenchConfig,
    sweep: &SweepParams,
    seed: u64,
    timer: &mut dyn FrameTimer,
) -> Result<Vec<DegreeSample>, BenchError> {
    config.validate()?;
    let side = scene.active_side();
    let net = scene.pair().network(side).clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(usize, u64, usize)> = net
        .nodes()
        .iter()
        .filter(|n| scene.is_visible(scene.pair().display_index(side, n.id)))
        .map(|n| (net.degree(n.id), rng.random::<u64>(), n.id.index()))
        .collect();
    candidates.sort_unstable();
    let picked: Vec<usize> = if candidates.len() <= sweep.nodes || sweep.nodes < 2 {
        candidates.iter().take(sweep.nodes.max(1)).map(|c| c.2).collect()
    } else {
        let step = (candidates.len() - 1) as f64 / (sweep.nodes - 1) as f64;
        (0..sweep.nodes)
            .map(|j| candidates[((j as f64) * step).round() as usize].2)
            .collect()
    };

    let base = scene.select(None)?;
    let selected: Vec<SceneState> = picked
        .iter()
        .map(|&id| base.select(Some(net.nodes()[id].name.as_str())))
        .collect::<Result<_, _>>()?;
    // Visit nodes in a shuffled order, one repeat of every node per round,
    // so slow drift over the run cannot line up with degree.
    let mut order: Vec<usize> = (0..picked.len()).collect();
    order.shuffle(&mut rng);
    let repeats = sweep.repeats.max(1);
    let mut costs = vec![Vec::with_capacity(repeats); picked.len()];
    let mut new_segments = vec![0; picked.len()];
    let mut tick = 0;
    for round in 0..=repeats {
        for &j in &order {
            let mut builder = FrameBuilder::new(config.edge_mode)?;
            std::hint::black_box(builder.build(&base));
            let mut work = || {
                let frame = builder.build(&selected[j]);
                new_segments[j] = frame.new_segments;
                let work = TickWork {
                    node_instances: frame.node_instances.len(),
                    new_segments: frame.new_segments,
                    total_segments: frame.edge_segments.len(),
                };
                std::hint::black_box(frame);
                work
            };
            if round == 0 {
                // Untimed warmup round.
                work();
                continue;
            }
            let cost = timer.time(tick, &mut work);
            tick += 1;
            costs[j].push(cost.clamp(0.0, config.frame_cap_ms));
        }
    }
    let out = picked
        .iter()
        .enumerate()
        .map(|(j, &id)| {
            let c = &mut costs[j];
            c.sort_by(f64::total_cmp);
            DegreeSample {
                node: net.nodes()[id].name.clone(),
                degree: net.degree(net.nodes()[id].id),
                cost_ms: c[c.len() / 2],
                new_segments: new_segments[j],
            }
        })
        .collect();
    Ok(out)
}

/// `degree_cost.csv` text.
pub fn degree_samples_to_csv(samples: &[DegreeSample]) -> String {
    let mut out = String::from("node,degree,cost_ms\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.node, s.degree, s.cost_ms));
    }
    out
}

/// Network sizes the suite runs at, with their label suffixes.
pub const SUITE_SCALES: [(&str, f64); 3] = [("full", 1.0), ("2/3rd", 2.0 / 3.0), ("1/3rd", 1.0 / 3.0)];

pub fn platform_string() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{} ({threads} threads)", std::env::consts::OS, std::env::consts::ARCH)
}

/// Every interaction at every suite scale: nine reports, interaction-major.
///
/// Subsets are nested induced subgraphs of `network` that keep their
/// genes' positions from `positions`. `make_timer` supplies a fresh timer
/// per run.
pub fn run_suite(
    network: &Arc<Network>,
    positions: &Arc<Vec<Vec3>>,
    config: &BenchConfig,
    seed: u64,
    make_timer: &mut dyn FnMut() -> Box<dyn FrameTimer>,
) -> Result<Vec<BenchReport>, BenchError> {
    config.validate()?;
    let mut scenes = Vec::with_capacity(SUITE_SCALES.len());
    for (suffix, fraction) in SUITE_SCALES {
        let (net, pos) = if fraction == 1.0 {
            (network.clone(), positions.clone())
        } else {
            let sub = network.subset(fraction, seed)?;
            let pos = sub
                .nodes()
                .iter()
                .map(|n| positions[network.lookup(&n.name).expect("subset keeps names").index()])
                .collect();
            (Arc::new(sub), Arc::new(pos))
        };
        let scene = SceneState::single(net.clone(), pos)?;
        scenes.push((suffix, net, scene));
    }
    let mut reports = Vec::with_capacity(9);
    for kind in InteractionKind::ALL {
        for (suffix, net, scene) in &scenes {
            let script = InteractionScript::generate(kind, net, config.total_frames(), seed);
            let mut timer = make_timer();
            let samples = run_benchmark(scene, &script, config, timer.as_mut())?;
            let label = format!("{} {suffix}", kind.label());
            let report = summarize(&samples, config, &label)?.with_meta(ReportMeta {
                nodes: net.node_count(),
                edges: net.edge_count(),
                mode: config.edge_mode.label().to_owned(),
                seed,
                platform: platform_string(),
            });
            reports.push(report);
        }
    }
    Ok(reports)
}
