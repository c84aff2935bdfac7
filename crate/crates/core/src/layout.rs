//! Deterministic 3D force-directed placement with module cohesion.
//!
//! Forces follow Fruchterman–Reingold in three dimensions, with the
//! spacing constant `k = C * (side^3 / n)^(1/3)`:
//!
//! * every pair repels with magnitude `k^2 / d`,
//! * every edge of weight `w` attracts with magnitude `(d^2 / k) * w^alpha`,
//! * every node is pulled toward its module's centroid with magnitude
//!   `gravity * d_c`.
//!
//! The summed displacement is clamped to the current temperature, positions
//! are clamped to the bounding cube, and the temperature decays
//! geometrically. Each node's displacement is accumulated independently in
//! a fixed order, so sequential and parallel execution agree bit for bit.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::graph::{Network, NodeId};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutParams {
    /// Edge length of the bounding cube centred on the origin.
    pub side: f64,
    /// Spacing constant `C`.
    pub spacing: f64,
    /// Pull toward the module centroid, per unit distance.
    pub gravity: f64,
    pub iterations: u32,
    /// Initial temperature as a fraction of `side`.
    pub initial_temperature: f64,
    /// Multiplicative temperature decay per step, in `(0, 1)`.
    pub cooling: f64,
    /// Exponent applied to edge weights in the attraction term.
    pub weight_exponent: f64,
    /// Largest node count for which repulsion is summed over all pairs.
    pub exact_repulsion_limit: usize,
    pub execution: Execution,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            side: 100.0,
            spacing: 1.0,
            gravity: 0.05,
            iterations: 500,
            initial_temperature: 0.1,
            cooling: 0.995,
            weight_exponent: 1.0,
            exact_repulsion_limit: 3000,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("invalid layout parameter: {0}")]
    InvalidParams(&'static str),
    #[error("layout line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("layout has no position for gene {0:?}")]
    MissingNode(String),
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), LayoutError> {
        if !(self.side > 0.0 && self.side.is_finite()) {
            return Err(LayoutError::InvalidParams("side must be positive"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(LayoutError::InvalidParams("spacing must be positive"));
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return Err(LayoutError::InvalidParams("gravity must be non-negative"));
        }
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(LayoutError::InvalidParams("initial temperature must be positive"));
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(LayoutError::InvalidParams("cooling must lie in (0, 1)"));
        }
        if !self.weight_exponent.is_finite() {
            return Err(LayoutError::InvalidParams("weight exponent must be finite"));
        }
        Ok(())
    }

    /// The spacing distance `k` for `n` nodes.
    pub fn spacing_distance(&self, n: usize) -> f64 {
        self.spacing * self.side / (n.max(1) as f64).cbrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutState {
    pub positions: Vec<Vec3>,
    /// Current cap on per-step displacement.
    pub temperature: f64,
    pub iteration: u64,
    seed: u64,
}

impl LayoutState {
    /// A state with caller-supplied positions.
    pub fn from_positions(positions: Vec<Vec3>, temperature: f64, seed: u64) -> Self {
        LayoutState {
            positions,
            temperature,
            iteration: 0,
            seed,
        }
    }
}

/// Force layout bound to one network: caches module membership and
/// exponentiated edge weights across steps.
#[derive(Debug, Clone)]
pub struct ForceLayout<'a> {
    network: &'a Network,
    params: LayoutParams,
    adjacency: Vec<Vec<(u32, f64)>>,
    module_of: Vec<u32>,
}

impl<'a> ForceLayout<'a> {
    pub fn new(network: &'a Network, params: LayoutParams) -> Result<Self, LayoutError> {
        params.validate()?;
        let alpha = params.weight_exponent;
        let adjacency = (0..network.node_count())
            .map(|i| {
                network
                    .neighbors(NodeId::from(i))
                    .unwrap_or(&[])
                    .iter()
                    .map(|&(j, w)| (j.0, if alpha == 1.0 { w } else { w.powf(alpha) }))
                    .collect()
            })
            .collect();
        let module_of = network.nodes().iter().map(|n| n.module_id).collect();
        Ok(ForceLayout {
            network,
            params,
            adjacency,
            module_of,
        })
    }

    pub fn params(&self) -> &LayoutParams {
        &self.params
    }

    /// Uniform random positions in the cube.
    pub fn init(&self, seed: u64) -> LayoutState {
        let half = self.params.side / 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..self.network.node_count())
            .map(|_| {
                Vec3::new(
                    rng.random_range(-half..=half),
                    rng.random_range(-half..=half),
                    rng.random_range(-half..=half),
                )
            })
            .collect();
        LayoutState::from_positions(positions, self.params.initial_temperature * self.params.side, seed)
    }

    fn centroids(&self, positions: &[Vec3]) -> Vec<Vec3> {
        let mut sums = vec![Vec3::zeros(); self.network.module_count()];
        let mut counts = vec![0usize; sums.len()];
        for (p, &m) in positions.iter().zip(&self.module_of) {
            sums[m as usize] += p;
            counts[m as usize] += 1;
        }
        sums.iter()
            .zip(counts)
            .map(|(s, c)| if c == 0 { Vec3::zeros() } else { s / c as f64 })
            .collect()
    }

    /// Net (unclamped) displacement of every node for the current state.
    pub fn displacements(&self, state: &LayoutState) -> Vec<Vec3> {
        let positions = &state.positions;
        let n = positions.len();
        let k = self.params.spacing_distance(n);
        let repulsion = if n <= self.params.exact_repulsion_limit {
            exact_repulsion(positions, k, self.jitter(state), self.params.execution)
        } else {
            grid_repulsion(positions, k, self.params.side, self.jitter(state), self.params.execution)
        };
        let centroids = self.centroids(positions);
        let gravity = self.params.gravity;
        self.params.execution.map_indexed(n, |i| {
            let p = positions[i];
            let mut disp = repulsion[i];
            for &(j, w) in &self.adjacency[i] {
                let delta = p - positions[j as usize];
                let d = delta.norm();
                disp -= delta * (d / k * w);
            }
            disp + (centroids[self.module_of[i] as usize] - p) * gravity
        })
    }

    fn jitter(&self, state: &LayoutState) -> Jitter {
        Jitter {
            seed: state.seed,
            iteration: state.iteration,
            magnitude: 1e-6 * self.params.side,
        }
    }

    /// One annealing step.
    pub fn step(&self, state: &mut LayoutState) {
        let disp = self.displacements(state);
        let half = self.params.side / 2.0;
        let temperature = state.temperature;
        for (p, mut d) in state.positions.iter_mut().zip(disp) {
            let len = d.norm();
            if len > temperature {
                d *= temperature / len;
            }
            *p += d;
            for c in p.iter_mut() {
                *c = c.clamp(-half, half);
            }
        }
        state.temperature *= self.params.cooling;
        state.iteration += 1;
    }

    /// Initial placement followed by the configured number of steps.
    pub fn run(&self, seed: u64) -> LayoutState {
        let mut state = self.init(seed);
        for _ in 0..self.params.iterations {
            self.step(&mut state);
        }
        state
    }
}

/// Deterministic stand-in direction for coincident pairs.
#[derive(Debug, Clone, Copy)]
struct Jitter {
    seed: u64,
    iteration: u64,
    magnitude: f64,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl Jitter {
    /// Offset of `i` from `j` when both sit at `at`; antisymmetric in
    /// `(i, j)` and odd in `at`.
    fn offset(&self, i: usize, j: usize, at: &Vec3) -> Vec3 {
        let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
        let mut h = splitmix(self.seed ^ splitmix(self.iteration ^ splitmix(lo ^ (hi << 32))));
        let mut coord = || {
            h = splitmix(h);
            (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut v = Vec3::new(coord(), coord(), coord());
        if v.norm() == 0.0 {
            v = Vec3::x();
        }
        let mut v = v.normalize() * self.magnitude;
        if v.dot(at) < 0.0 {
            v = -v;
        }
        if i < j {
            v
        } else {
            -v
        }
    }
}

#[inline]
fn pair_repulsion(delta: Vec3, k2: f64) -> Vec3 {
    // delta / d * k^2 / d
    delta * (k2 / delta.norm_squared())
}

fn exact_repulsion(positions: &[Vec3], k: f64, jitter: Jitter, exec: Execution) -> Vec<Vec3> {
    let k2 = k * k;
    exec.map_indexed(positions.len(), |i| {
        let p = positions[i];
        let mut acc = Vec3::zeros();
        for (j, q) in positions.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut delta = p - q;
            if delta.norm_squared() == 0.0 {
                delta = jitter.offset(i, j, &p);
            }
            acc += pair_repulsion(delta, k2);
        }
        acc
    })
}

/// Uniform grid over the bounding cube, cell size about `k`, with a coarse
/// level of `block^3` cells for the far field.
struct Grid {
    cells: usize,
    block: usize,
    coarse: usize,
    half: f64,
    cell_size: f64,
    /// `order[start[c]..start[c + 1]]` are the nodes in fine cell `c`.
    start: Vec<usize>,
    order: Vec<usize>,
    fine_mass: Vec<(Vec3, f64)>,
    coarse_mass: Vec<(Vec3, f64)>,
}

impl Grid {
    const MAX_CELLS_PER_AXIS: usize = 128;

    fn build(positions: &[Vec3], k: f64, side: f64) -> Grid {
        let fine = ((side / k).ceil() as usize).clamp(1, Self::MAX_CELLS_PER_AXIS);
        let block = ((fine as f64).sqrt().round() as usize).max(1);
        // Whole blocks only, so the partition is symmetric about the origin.
        let coarse = fine.div_ceil(block);
        let cells = coarse * block;
        let half = side / 2.0;
        let cell_size = side / cells as f64;
        let mut grid = Grid {
            cells,
            block,
            coarse,
            half,
            cell_size,
            start: Vec::new(),
            order: Vec::new(),
            fine_mass: Vec::new(),
            coarse_mass: Vec::new(),
        };
        let total = cells * cells * cells;
        let cell_of: Vec<usize> = positions.iter().map(|p| grid.fine_index(grid.coords(p))).collect();
        let mut start = vec![0usize; total + 1];
        for &c in &cell_of {
            start[c + 1] += 1;
        }
        for c in 0..total {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut order = vec![0; positions.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        let mut fine_sum = vec![(Vec3::zeros(), 0.0); total];
        let mut coarse_sum = vec![(Vec3::zeros(), 0.0); coarse * coarse * coarse];
        for c in 0..total {
            for &i in &order[start[c]..start[c + 1]] {
                fine_sum[c].0 += positions[i];
                fine_sum[c].1 += 1.0;
            }
            let [x, y, z] = grid.fine_coords(c);
            let cc = grid.coarse_index([x / block, y / block, z / block]);
            coarse_sum[cc].0 += fine_sum[c].0;
            coarse_sum[cc].1 += fine_sum[c].1;
        }
        let to_centroid = |(s, m): (Vec3, f64)| if m > 0.0 { (s / m, m) } else { (s, 0.0) };
        grid.fine_mass = fine_sum.into_iter().map(to_centroid).collect();
        grid.coarse_mass = coarse_sum.into_iter().map(to_centroid).collect();
        grid.start = start;
        grid.order = order;
        grid
    }

    fn coords(&self, p: &Vec3) -> [usize; 3] {
        let f = |v: f64| (((v + self.half) / self.cell_size).floor().max(0.0) as usize).min(self.cells - 1);
        [f(p.x), f(p.y), f(p.z)]
    }

    fn fine_index(&self, [x, y, z]: [usize; 3]) -> usize {
        (x * self.cells + y) * self.cells + z
    }

    fn fine_coords(&self, c: usize) -> [usize; 3] {
        [c / (self.cells * self.cells), (c / self.cells) % self.cells, c % self.cells]
    }

    fn coarse_index(&self, [x, y, z]: [usize; 3]) -> usize {
        (x * self.coarse + y) * self.coarse + z
    }

    fn repulsion_on(&self, i: usize, positions: &[Vec3], k2: f64, jitter: Jitter) -> Vec3 {
        let p = positions[i];
        let c = self.coords(&p);
        let lo = c.map(|v| v.saturating_sub(1));
        let hi = c.map(|v| (v + 1).min(self.cells - 1));
        let near = |f: [usize; 3]| (0..3).all(|a| f[a] >= lo[a] && f[a] <= hi[a]);
        let mut acc = Vec3::zeros();

        // Near field: exact over the 27-cell neighbourhood.
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let cell = self.fine_index([x, y, z]);
                    for &j in &self.order[self.start[cell]..self.start[cell + 1]] {
                        if j == i {
                            continue;
                        }
                        let mut delta = p - positions[j];
                        if delta.norm_squared() == 0.0 {
                            delta = jitter.offset(i, j, &p);
                        }
                        acc += pair_repulsion(delta, k2);
                    }
                }
            }
        }

        // Far field: coarse cells clear of the neighbourhood act through their
        // centroid; coarse cells touching it are resolved per fine cell.
        let b = self.block;
        for cx in 0..self.coarse {
            for cy in 0..self.coarse {
                for cz in 0..self.coarse {
                    let (centroid, mass) = self.coarse_mass[self.coarse_index([cx, cy, cz])];
                    if mass == 0.0 {
                        continue;
                    }
                    let span = |cv: usize| (cv * b, ((cv + 1) * b).min(self.cells) - 1);
                    let spans = [span(cx), span(cy), span(cz)];
                    let touches = (0..3).all(|a| spans[a].0 <= hi[a] && spans[a].1 >= lo[a]);
                    if !touches {
                        let delta = p - centroid;
                        if delta.norm_squared() > 0.0 {
                            acc += pair_repulsion(delta, k2) * mass;
                        }
                        continue;
                    }
                    for x in spans[0].0..=spans[0].1 {
                        for y in spans[1].0..=spans[1].1 {
                            for z in spans[2].0..=spans[2].1 {
                                if near([x, y, z]) {
                                    continue;
                                }
                                let (centroid, mass) = self.fine_mass[self.fine_index([x, y, z])];
                                if mass == 0.0 {
                                    continue;
                                }
                                let delta = p - centroid;
                                if delta.norm_squared() > 0.0 {
                                    acc += pair_repulsion(delta, k2) * mass;
                                }
                            }
                        }
                    }
                }
            }
        }
        acc
    }
}

fn grid_repulsion(positions: &[Vec3], k: f64, side: f64, jitter: Jitter, exec: Execution) -> Vec<Vec3> {
    let grid = Grid::build(positions, k, side);
    let k2 = k * k;
    exec.map_indexed(positions.len(), |i| grid.repulsion_on(i, positions, k2, jitter))
}

/// Uniform initial placement; temperature `t0 * side`, iteration 0.
pub fn init_positions(network: &Network, params: &LayoutParams, seed: u64) -> Result<LayoutState, LayoutError> {
    Ok(ForceLayout::new(network, *params)?.init(seed))
}

/// One annealing step applied to `state`.
pub fn step(state: &mut LayoutState, network: &Network, params: &LayoutParams) -> Result<(), LayoutError> {
    ForceLayout::new(network, *params)?.step(state);
    Ok(())
}

/// Final positions after `params.iterations` steps from a seeded start.
pub fn run(network: &Network, params: &LayoutParams, seed: u64) -> Result<Vec<Vec3>, LayoutError> {
    Ok(ForceLayout::new(network, *params)?.run(seed).positions)
}

/// `name,x,y,z` rows in node-id order.
pub fn positions_to_csv(network: &Network, positions: &[Vec3]) -> String {
    let mut out = String::with_capacity(positions.len() * 48);
    out.push_str("name,x,y,z\n");
    for (node, p) in network.nodes().iter().zip(positions) {
        let _ = writeln!(out, "{},{},{},{}", node.name, p.x, p.y, p.z);
    }
    out
}

/// Reads a positions CSV, matching rows to `network` by gene name.
///
/// Every node must receive exactly one position; rows naming genes that
/// are not in the network are rejected.
pub fn parse_positions(network: &Network, text: &str) -> Result<Vec<Vec3>, LayoutError> {
    let mut out: Vec<Option<Vec3>> = vec![None; network.node_count()];
    for (i, raw) in text.split('\n').enumerate() {
        let line = i + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(LayoutError::Parse {
                line,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        if fields[0].eq_ignore_ascii_case("name") && fields[1].eq_ignore_ascii_case("x") {
            continue;
        }
        let id = network.lookup(fields[0]).ok_or_else(|| LayoutError::Parse {
            line,
            msg: format!("unknown gene {:?}", fields[0]),
        })?;
        let mut xyz = [0.0; 3];
        for (slot, f) in xyz.iter_mut().zip(&fields[1..]) {
            *slot = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| LayoutError::Parse {
                line,
                msg: format!("coordinate {f:?} is not a finite number"),
            })?;
        }
        let slot = &mut out[id.index()];
        if slot.is_some() {
            return Err(LayoutError::Parse {
                line,
                msg: format!("duplicate position for {:?}", fields[0]),
            });
        }
        *slot = Some(Vec3::from(xyz));
    }
    out.into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| LayoutError::MissingNode(network.nodes()[i].name.clone())))
        .collect()
}
