//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use netscape_core::bench::{
    degree_sweep, parse_bench_csv, run_benchmark, spearman, summarize, BenchConfig, FrameSample, FrameTimer,
    InteractionScript, SweepParams, TickWork, WorkModelClock,
};
use netscape_core::layout::{run as run_layout, ForceLayout, LayoutParams};
use netscape_core::{
    generate_synthetic, parse_network, EdgeMode, Network, NetworkPair, NodeSpec, Ray, SceneError, SceneState,
    SceneTransform, SnapDirection, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn netscape(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_netscape"))
        .args(args)
        .env_remove("NETSCAPE_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("netscape {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Generated 2693/89120 network files shared by several checks.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Result<Self, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let root = dir.path().to_path_buf();
        netscape(&["gen", "--nodes", "2693", "--edges", "89120", "--modules", "10", "--out", p(&root.join("net"))])?;
        Ok(Fixture { _dir: dir, root })
    }

    fn nodes(&self) -> PathBuf {
        self.root.join("net/nodes.csv")
    }

    fn edges(&self) -> PathBuf {
        self.root.join("net/edges.csv")
    }
}

// --- statistics ---------------------------------------------------------

fn statistics_oracle() -> Check {
    let start = Instant::now();
    let config = BenchConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total = 0usize;
    for series in 0..10_000 {
        let n = rng.random_range(1..=10_000);
        total += n;
        let samples: Vec<FrameSample> = (0..n)
            .map(|frame| FrameSample {
                frame,
                cost_ms: rng.random_range(0.0..100.0),
            })
            .collect();
        let report = summarize(&samples, &config, "s").map_err(|e| e.to_string())?;

        let mut sorted: Vec<f64> = samples.iter().map(|s| s.cost_ms).collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite costs"));
        let mean = |k: usize| sorted[..k].iter().sum::<f64>() / k as f64;
        ensure(report.avg_all_ms == mean(n), || format!("series {series}: avg all differs"))?;
        // ceil(n / 100) and ceil(n / 400) in integers.
        for (fraction, k) in [(0.01, n.div_ceil(100)), (0.0025, n.div_ceil(400))] {
            let tail = report.avg_slowest.iter().find(|t| t.fraction == fraction).ok_or("missing tail")?;
            ensure(tail.frames == k && tail.avg_ms == mean(k), || {
                format!("series {series} (n={n}): {fraction} tail {} over {} frames, oracle {} over {k}", tail.avg_ms, tail.frames, mean(k))
            })?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:.1?}"))?;
    Ok(format!("10000 series, {total} samples, exact match in {took:.1?}"))
}

// --- Table 1 shape -----------------------------------------------------------

fn table_shape(fx: &Fixture) -> Check {
    let start = Instant::now();
    let out = fx.root.join("bench-wall");
    let table = netscape(&["bench", "--nodes", p(&fx.nodes()), "--edges", p(&fx.edges()), "--out", p(&out)])?;
    let took = start.elapsed();
    let header = table.lines().next().unwrap_or_default();
    let cols: Vec<&str> = header.split('|').map(str::trim).collect();
    ensure(cols == ["Interaction", "Avg. of 0.25% slowest", "Avg. of 1% slowest", "Avg. of all"], || {
        format!("header {header:?}")
    })?;
    let rows = parse_bench_csv(&std::fs::read_to_string(out.join("bench.csv")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    let expected = [
        "Translation full",
        "Translation 2/3rd",
        "Translation 1/3rd",
        "Scaling full",
        "Scaling 2/3rd",
        "Scaling 1/3rd",
        "Select full",
        "Select 2/3rd",
        "Select 1/3rd",
    ];
    ensure(labels == expected, || format!("rows {labels:?}"))?;
    ensure(table.lines().count() == 11, || "table should have 9 data rows".into())?;
    for r in &rows {
        let one = r.avg_1pct_ms.ok_or("missing 1% column")?;
        let quarter = r.avg_025pct_ms.ok_or("missing 0.25% column")?;
        ensure(r.avg_ms <= one && one <= quarter && quarter <= 100.0, || {
            format!("{}: {} / {one} / {quarter} out of order", r.label, r.avg_ms)
        })?;
    }
    ensure(rows[0].nodes == 2693 && rows[0].edges == 89120, || "full row has wrong size".into())?;
    ensure(rows[2].nodes == 897, || format!("1/3rd row has {} nodes", rows[2].nodes))?;
    ensure(took < Duration::from_secs(300), || format!("took {took:.1?}"))?;
    Ok(format!("9 rows in table order, tails ordered, {took:.1?}"))
}

// --- degree/cost ---------------------------------------------------------

struct Spy {
    max_new: usize,
    frames_with_edges: usize,
}

impl FrameTimer for Spy {
    fn time(&mut self, _tick: usize, work: &mut dyn FnMut() -> TickWork) -> f64 {
        let w = work();
        self.max_new = self.max_new.max(w.new_segments);
        self.frames_with_edges += (w.new_segments > 0) as usize;
        1.0
    }
}

fn degree_cost(fx: &Fixture) -> Check {
    // Wall-clock sweep written by the Table 1 run.
    let text = std::fs::read_to_string(fx.root.join("bench-wall/degree_cost.csv")).map_err(|e| e.to_string())?;
    let mut degree = Vec::new();
    let mut cost = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        degree.push(f[1].parse::<f64>().map_err(|e| e.to_string())?);
        cost.push(f[2].parse::<f64>().map_err(|e| e.to_string())?);
    }
    ensure(degree.len() == 200, || format!("{} sweep rows", degree.len()))?;
    let rho = spearman(&degree, &cost).ok_or("degenerate sweep")?;
    ensure(rho > 0.5, || format!("eager Spearman {rho:.3}"))?;

    let net = Arc::new(generate_synthetic(2693, 89120, 10, 1).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pos: Vec<Vec3> = (0..2693).map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 100.0).collect();
    let scene = SceneState::single(net.clone(), Arc::new(pos)).map_err(|e| e.to_string())?;
    for budget in [1, 8, 32] {
        let config = BenchConfig {
            warmup_frames: 0,
            measured_frames: 3000,
            edge_mode: EdgeMode::Amortized(budget),
            ..BenchConfig::default()
        };
        let script = InteractionScript::selection(&net, 3000, budget as u64);
        let mut spy = Spy {
            max_new: 0,
            frames_with_edges: 0,
        };
        run_benchmark(&scene, &script, &config, &mut spy).map_err(|e| e.to_string())?;
        ensure(spy.max_new <= budget && spy.frames_with_edges > 0, || {
            format!("budget {budget}: a frame emitted {} segments", spy.max_new)
        })?;
        let sweep = degree_sweep(&scene, &config, &SweepParams { nodes: 200, repeats: 1 }, 3, &mut WorkModelClock::default())
            .map_err(|e| e.to_string())?;
        ensure(sweep.iter().all(|s| s.new_segments <= budget), || format!("sweep exceeded budget {budget}"))?;
    }
    Ok(format!("eager Spearman {rho:.3}; amortized budgets 1/8/32 never exceeded"))
}

// --- layout ----------------------------------------------------------------

fn layout_equilibrium() -> Check {
    let params = LayoutParams::default();
    // The attraction/repulsion balance sits at exactly k only without gravity.
    let free = LayoutParams { gravity: 0.0, ..params };
    let net = parse_network("a,0\nb,0", "a,b,1").map_err(|e| e.to_string())?;
    let k = params.spacing * (params.side.powi(3) / 2.0).cbrt();
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let pos = run_layout(&net, &free, seed).map_err(|e| e.to_string())?;
        let err = ((pos[0] - pos[1]).norm() - k).abs() / k;
        worst = worst.max(err);
        ensure(err < 0.02, || format!("seed {seed}: separation off by {:.2}%", 100.0 * err))?;
    }

    let single = parse_network("solo,0", "").map_err(|e| e.to_string())?;
    let layout = ForceLayout::new(&single, params).map_err(|e| e.to_string())?;
    let mut state = layout.init(5);
    let start = state.positions.clone();
    for _ in 0..params.iterations {
        layout.step(&mut state);
    }
    ensure(state.positions == start, || "single node moved".into())?;

    let mut sym: f64 = 0.0;
    for seed in 0..10 {
        let net = generate_synthetic(300, 1500, 5, seed).map_err(|e| e.to_string())?;
        let layout = ForceLayout::new(&net, params).map_err(|e| e.to_string())?;
        let mut s = layout.init(seed);
        for step in 0..20 {
            let mut r = s.clone();
            r.positions.iter_mut().for_each(|p| *p = -*p);
            layout.step(&mut s);
            layout.step(&mut r);
            let err = s.positions.iter().zip(&r.positions).map(|(a, b)| (a + b).amax()).fold(0.0, f64::max);
            sym = sym.max(err);
            ensure(err <= 1e-12, || format!("seed {seed} step {step}: asymmetry {err:e}"))?;
        }
    }
    Ok(format!("worst separation error {:.3}%, fixed point exact, asymmetry {sym:e}", 100.0 * worst))
}

fn module_cohesion() -> Check {
    let mut ratios = Vec::new();
    for seed in 0..10 {
        let net = generate_synthetic(1000, 10_000, 10, seed).map_err(|e| e.to_string())?;
        let pos = run_layout(&net, &LayoutParams::default(), seed).map_err(|e| e.to_string())?;
        let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0u64, 0.0, 0u64);
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                let d = (pos[i] - pos[j]).norm();
                if net.nodes()[i].module_id == net.nodes()[j].module_id {
                    intra += d;
                    ni += 1;
                } else {
                    inter += d;
                    nx += 1;
                }
            }
        }
        let (intra, inter) = (intra / ni as f64, inter / nx as f64);
        ensure(intra < inter, || format!("seed {seed}: intra {intra:.2} >= inter {inter:.2}"))?;
        ratios.push(intra / inter);
    }
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!("10/10 seeds, worst intra/inter ratio {worst:.3}"))
}

// --- picking -----------------------------------------------------------------

fn brute_force_pick(scene: &SceneState, ray: &Ray) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..scene.display_len() {
        if !scene.is_visible(i) {
            continue;
        }
        let (lo, hi) = scene.node_box(i);
        let mut t_min = f64::INFINITY;
        for axis in 0..3 {
            if ray.direction[axis] == 0.0 {
                continue;
            }
            for plane in [lo[axis], hi[axis]] {
                let t = (plane - ray.origin[axis]) / ray.direction[axis];
                if t <= 0.0 {
                    continue;
                }
                let hit = ray.at(t);
                let on_face = (0..3).filter(|&b| b != axis).all(|b| {
                    let slack = 1e-12 * (hi[b] - lo[b]);
                    hit[b] >= lo[b] - slack && hit[b] <= hi[b] + slack
                });
                if on_face {
                    t_min = t_min.min(t);
                }
            }
        }
        if t_min.is_finite() && best.is_none_or(|(_, bt)| t_min < bt) {
            best = Some((i, t_min));
        }
    }
    best
}

fn random_vec(rng: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half))
}

fn pick_oracle() -> Check {
    let n = 2693;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    // Every 20th node duplicates its predecessor's position: coincident boxes.
    let specs: Vec<NodeSpec> = (0..n).map(|i| NodeSpec::new(format!("G{i:04}"), (i % 10) as u32)).collect();
    let net = Arc::new(Network::new(specs, vec![]).map_err(|e| e.to_string())?);
    let mut pos: Vec<Vec3> = (0..n).map(|_| random_vec(&mut rng, 50.0)).collect();
    for i in (20..n).step_by(20) {
        pos[i] = pos[i - 1];
    }
    let transform = SceneTransform::default()
        .two_hand(&Vec3::new(-0.2, 1.0, 0.0), &Vec3::new(0.2, 1.0, 0.0), &Vec3::new(-0.5, 1.2, 0.3), &Vec3::new(0.1, 0.9, 0.0))
        .and_then(|t| t.translate(&Vec3::new(0.3, -2.0, 1.0)))
        .map(|t| t.snap(SnapDirection::Right))
        .map_err(|e| e.to_string())?;
    let scene = SceneState::single(net, Arc::new(pos))
        .and_then(|s| s.with_node_size(1.5))
        .and_then(|s| s.with_transform(transform))
        .map_err(|e| e.to_string())?;

    let (mut hits, mut ties) = (0, 0);
    for r in 0..1000 {
        let target_index = if r % 5 == 0 { 20 * rng.random_range(1..n / 20) } else { rng.random_range(0..n) };
        let target = scene.world_position(target_index) + random_vec(&mut rng, 0.5 * transform.scale);
        let origin = target + random_vec(&mut rng, 60.0 * transform.scale);
        let ray = Ray::towards(origin, target - origin).map_err(|e| e.to_string())?;
        let got = scene.pick_hit(&ray).map(|h| (h.index, h.t));
        let want = brute_force_pick(&scene, &ray);
        ensure(got == want, || format!("ray {r}: pick {got:?}, oracle {want:?}"))?;
        if let Some((i, _)) = got {
            hits += 1;
            if i % 20 == 19 && scene.node_box(i) == scene.node_box(i + 1) {
                ties += 1;
            }
        }
    }
    ensure(ties > 0, || "no tie cases were exercised".into())?;
    Ok(format!("1000/1000 rays agree ({hits} hits, {ties} coincident-box ties)"))
}

// --- morph ---------------------------------------------------------------

fn morph_exactness() -> Check {
    let a = Arc::new(generate_synthetic(2693, 20_000, 10, 1).map_err(|e| e.to_string())?);
    // B keeps 2000 of A's genes and adds 500 of its own.
    let specs: Vec<NodeSpec> = (0..2500)
        .map(|i| {
            let name = if i < 2000 { format!("G{i:04}") } else { format!("X{i:04}") };
            NodeSpec::new(name, (i % 7) as u32)
        })
        .collect();
    let b = Arc::new(Network::new(specs, vec![(0, 1, 1.0)]).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pa: Vec<Vec3> = (0..2693).map(|_| random_vec(&mut rng, 50.0)).collect();
    let pb: Vec<Vec3> = (0..2500).map(|_| random_vec(&mut rng, 50.0)).collect();
    let pair = NetworkPair::new(a, Arc::new(pa.clone()), b, Arc::new(pb.clone())).map_err(|e| e.to_string())?;
    let scene = SceneState::new(pair);
    let at = |t: f64| scene.set_morph(t).map_err(|e| e.to_string());
    let (s0, s1, mid) = (at(0.0)?, at(1.0)?, at(0.5)?);
    let mut worst_ulps = 0u64;
    for i in 0..scene.display_len() {
        let node = &scene.pair().display()[i];
        if let Some(ia) = node.a {
            ensure(s0.displayed_position(i) == pa[ia.index()], || format!("t=0 differs at {i}"))?;
        }
        if let Some(ib) = node.b {
            ensure(s1.displayed_position(i) == pb[ib.index()], || format!("t=1 differs at {i}"))?;
        }
        if let (Some(ia), Some(ib)) = (node.a, node.b) {
            let got = mid.displayed_position(i);
            for c in 0..3 {
                let want = (pa[ia.index()][c] + pb[ib.index()][c]) / 2.0;
                let ulps = (got[c].to_bits() as i64).abs_diff(want.to_bits() as i64);
                let ulps = if got[c].signum() == want.signum() { ulps } else if got[c] == want { 0 } else { u64::MAX };
                worst_ulps = worst_ulps.max(ulps);
            }
        }
    }
    ensure(worst_ulps <= 1, || format!("midpoint off by {worst_ulps} ulp"))?;
    let err = mid.select(Some("G0001")).err();
    ensure(err == Some(SceneError::SelectDuringMorph(0.5)), || format!("selection at t=0.5 gave {err:?}"))?;
    ensure(s0.select(Some("G0001")).is_ok() && s1.select(Some("X2100")).is_ok(), || "endpoint selection failed".into())?;
    Ok(format!("endpoints bitwise, midpoints within {worst_ulps} ulp, mid-morph selection rejected"))
}

// --- subsets ---------------------------------------------------------------

fn names(net: &Network) -> BTreeSet<String> {
    net.nodes().iter().map(|n| n.name.clone()).collect()
}

fn edge_names(net: &Network) -> BTreeSet<(String, String)> {
    net.edges()
        .iter()
        .map(|e| (net.nodes()[e.a.index()].name.clone(), net.nodes()[e.b.index()].name.clone()))
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect()
}

fn subset_arithmetic(fx: &Fixture) -> Check {
    let out = fx.root.join("third");
    netscape(&["subset", "--nodes", p(&fx.nodes()), "--edges", p(&fx.edges()), "--fraction", "1/3", "--out", p(&out)])?;
    let rows = std::fs::read_to_string(out.join("nodes.csv")).map_err(|e| e.to_string())?.lines().count() - 1;
    ensure(rows == 897, || format!("CLI subset wrote {rows} nodes"))?;

    let net = generate_synthetic(2693, 89120, 10, 1).map_err(|e| e.to_string())?;
    for seed in 0..10 {
        let third = net.subset(1.0 / 3.0, seed).map_err(|e| e.to_string())?;
        let two = net.subset(2.0 / 3.0, seed).map_err(|e| e.to_string())?;
        ensure(third.node_count() == 897, || format!("seed {seed}: {} nodes", third.node_count()))?;
        ensure(names(&third).is_subset(&names(&two)), || format!("seed {seed}: 1/3 not inside 2/3"))?;
        let full = net.subset(1.0, seed).map_err(|e| e.to_string())?;
        ensure(names(&full) == names(&net) && edge_names(&full) == edge_names(&net), || {
            format!("seed {seed}: fraction 1 changed the network")
        })?;
    }
    Ok("897 nodes at 1/3; 1/3 within 2/3 for 10 seeds; fraction 1 is identity".into())
}

// --- determinism -------------------------------------------------------------

fn same_files(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = std::fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.map(|e| e.file_name()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    names.sort();
    let other = std::fs::read_dir(b).map_err(|e| e.to_string())?.count();
    ensure(names.len() == other, || format!("{} vs {other} files", names.len()))?;
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| e.to_string())?;
        ensure(x == y, || format!("{} differs between runs", name.to_string_lossy()))?;
    }
    Ok(names.len())
}

fn determinism(fx: &Fixture) -> Check {
    let r = &fx.root;
    let mut files = 0;
    for run in ["d1", "d2"] {
        let dir = r.join(run);
        netscape(&["gen", "--seed", "9", "--out", p(&dir.join("gen"))])?;
        netscape(&[
            "layout", "--nodes", p(&fx.nodes()), "--edges", p(&fx.edges()), "--seed", "9", "--out", p(&dir.join("layout/positions.csv")),
        ])?;
        netscape(&[
            "subset", "--nodes", p(&fx.nodes()), "--edges", p(&fx.edges()), "--layout", p(&dir.join("layout/positions.csv")),
            "--fraction", "2/3", "--seed", "9", "--out", p(&dir.join("subset")),
        ])?;
        netscape(&[
            "bench", "--nodes", p(&fx.nodes()), "--edges", p(&fx.edges()), "--layout", p(&dir.join("layout/positions.csv")),
            "--clock", "model", "--seed", "9", "--out", p(&dir.join("bench")),
        ])?;
    }
    for sub in ["gen", "layout", "subset", "bench"] {
        files += same_files(&r.join("d1").join(sub), &r.join("d2").join(sub))?;
    }
    Ok(format!("{files} output files byte-identical across two runs"))
}

fn main() {
    let fixture = Fixture::new();
    let fx = || fixture.as_ref().map_err(|e| format!("fixture: {e}"));
    let checks: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("statistics oracle", Box::new(statistics_oracle)),
        ("table 1 shape", Box::new(|| table_shape(fx()?))),
        ("degree vs selection cost", Box::new(|| degree_cost(fx()?))),
        ("layout equilibrium", Box::new(layout_equilibrium)),
        ("module cohesion", Box::new(module_cohesion)),
        ("pick oracle", Box::new(pick_oracle)),
        ("morph exactness", Box::new(morph_exactness)),
        ("subset arithmetic", Box::new(|| subset_arithmetic(fx()?))),
        ("determinism", Box::new(|| determinism(fx()?))),
    ];
    let mut failed = 0;
    for (name, check) in &checks {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("{} of {} acceptance criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
