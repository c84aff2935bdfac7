//! Co-expression network model: genes keyed by name, weighted undirected
//! edges, module labels, and the CSV formats the tools exchange.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Linear RGB, each channel in `[0, 1]`.
pub type Rgb = [f64; 3];

/// Dense node index, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub name: String,
    pub module_id: u32,
    pub color: Rgb,
}

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleInfo {
    pub module_id: u32,
    pub label: String,
    pub color: Rgb,
}

const PALETTE: [Rgb; 16] = [
    [0.122, 0.467, 0.706],
    [1.000, 0.498, 0.055],
    [0.173, 0.627, 0.173],
    [0.839, 0.153, 0.157],
    [0.580, 0.404, 0.741],
    [0.549, 0.337, 0.294],
    [0.890, 0.467, 0.761],
    [0.498, 0.498, 0.498],
    [0.737, 0.741, 0.133],
    [0.090, 0.745, 0.812],
    [0.682, 0.780, 0.910],
    [1.000, 0.733, 0.471],
    [0.596, 0.875, 0.541],
    [1.000, 0.596, 0.588],
    [0.773, 0.690, 0.835],
    [0.969, 0.714, 0.824],
];

/// Default color for a module: the 16-entry palette, darkened once per
/// full cycle so that colors stay distinct past 16 modules.
pub fn module_color(module_id: u32) -> Rgb {
    let base = PALETTE[(module_id % 16) as usize];
    let shade = 0.85f64.powi((module_id / 16) as i32);
    [base[0] * shade, base[1] * shade, base[2] * shade]
}

/// Which input file a parse error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFile {
    Nodes,
    Edges,
}

impl fmt::Display for CsvFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CsvFile::Nodes => f.write_str("nodes"),
            CsvFile::Edges => f.write_str("edges"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("duplicate gene name {0:?}")]
    DuplicateName(String),
    #[error("unknown gene {0:?}")]
    UnknownGene(String),
    #[error("edge weight {0:?} is not a positive number")]
    NonPositiveWeight(String),
    #[error("self-loop on {0:?}")]
    SelfLoop(String),
    #[error("duplicate edge {0:?} -- {1:?}")]
    DuplicateEdge(String, String),
    #[error("invalid UTF-8")]
    InvalidUtf8,
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("{file} line {line}: {kind}")]
    Parse {
        file: CsvFile,
        line: usize,
        kind: ParseErrorKind,
    },
    #[error("node id {id} out of range for a network of {len} nodes")]
    NodeOutOfRange { id: NodeId, len: usize },
    #[error("subset fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("edge threshold {0} must be a non-negative number")]
    InvalidThreshold(f64),
    #[error("cannot place {edges} edges among {nodes} nodes (at most {max})")]
    InfeasibleEdgeCount { nodes: usize, edges: usize, max: u64 },
    #[error("module count must be at least 1")]
    NoModules,
    #[error("invalid network: {0}")]
    Invalid(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// An immutable co-expression network.
///
/// Names are unique and indexed; `adjacency[i]` lists every edge incident to
/// node `i` exactly once, in edge-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
    modules: Vec<ModuleInfo>,
    name_index: HashMap<String, NodeId>,
    adjacency: Vec<Vec<(NodeId, f64)>>,
}

/// A node as supplied by a caller, before ids are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub name: String,
    pub module_id: u32,
    pub color: Option<Rgb>,
}

impl NodeSpec {
    pub fn new(name: impl Into<String>, module_id: u32) -> Self {
        NodeSpec {
            name: name.into(),
            module_id,
            color: None,
        }
    }
}

impl Network {
    /// Validates and assembles a network. Edges are `(a, b, weight)` by index.
    pub fn new(nodes: Vec<NodeSpec>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let module_count = nodes.iter().map(|n| n.module_id as usize + 1).max().unwrap_or(0);
        Self::with_module_count(nodes, edges, module_count)
    }

    /// Like [`Network::new`] but with an explicit module count, which may
    /// exceed the largest label in use (empty modules are allowed).
    pub fn with_module_count(
        nodes: Vec<NodeSpec>,
        edges: Vec<(usize, usize, f64)>,
        module_count: usize,
    ) -> Result<Self> {
        let mut names = HashMap::with_capacity(nodes.len());
        let mut records = Vec::with_capacity(nodes.len());
        for (i, spec) in nodes.into_iter().enumerate() {
            if spec.module_id as usize >= module_count {
                return Err(GraphError::Invalid(format!(
                    "module {} of {:?} is not below module count {module_count}",
                    spec.module_id, spec.name
                )));
            }
            if names.insert(spec.name.clone(), NodeId::from(i)).is_some() {
                return Err(GraphError::Invalid(format!("duplicate gene name {:?}", spec.name)));
            }
            records.push(NodeRecord {
                id: NodeId::from(i),
                color: spec.color.unwrap_or_else(|| module_color(spec.module_id)),
                name: spec.name,
                module_id: spec.module_id,
            });
        }
        let n = records.len();
        let mut seen = HashMap::with_capacity(edges.len());
        let mut edge_records = Vec::with_capacity(edges.len());
        for (a, b, weight) in edges {
            if a >= n || b >= n {
                return Err(GraphError::NodeOutOfRange {
                    id: NodeId::from(a.max(b)),
                    len: n,
                });
            }
            if a == b {
                return Err(GraphError::Invalid(format!("self-loop on node {a}")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(GraphError::Invalid(format!("edge weight {weight} is not positive")));
            }
            let (a, b) = (a.min(b), a.max(b));
            if seen.insert((a, b), ()).is_some() {
                return Err(GraphError::Invalid(format!("duplicate edge {a} -- {b}")));
            }
            edge_records.push(EdgeRecord {
                a: NodeId::from(a),
                b: NodeId::from(b),
                weight,
            });
        }
        Ok(Self::assemble(records, edge_records, module_count, names))
    }

    fn assemble(
        nodes: Vec<NodeRecord>,
        edges: Vec<EdgeRecord>,
        module_count: usize,
        name_index: HashMap<String, NodeId>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            adjacency[e.a.index()].push((e.b, e.weight));
            adjacency[e.b.index()].push((e.a, e.weight));
        }
        let modules = (0..module_count as u32)
            .map(|m| ModuleInfo {
                module_id: m,
                label: format!("module {m}"),
                color: module_color(m),
            })
            .collect();
        Network {
            nodes,
            edges,
            modules,
            name_index,
            adjacency,
        }
    }

    pub fn empty() -> Self {
        Self::assemble(Vec::new(), Vec::new(), 0, HashMap::new())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn module_count(&self) -> usize {
        self.modules.len()
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn modules(&self) -> &[ModuleInfo] {
        &self.modules
    }

    pub fn node(&self, id: NodeId) -> Result<&NodeRecord> {
        self.nodes.get(id.index()).ok_or(GraphError::NodeOutOfRange {
            id,
            len: self.nodes.len(),
        })
    }

    /// Node id for a gene name.
    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.name_index.get(name).copied()
    }

    /// Incident edges of `id` as `(neighbor, weight)`, each edge once.
    pub fn neighbors(&self, id: NodeId) -> Result<&[(NodeId, f64)]> {
        self.adjacency
            .get(id.index())
            .map(Vec::as_slice)
            .ok_or(GraphError::NodeOutOfRange {
                id,
                len: self.nodes.len(),
            })
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.adjacency.get(id.index()).map_or(0, Vec::len)
    }

    /// Node count per module label.
    pub fn module_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.module_count()];
        for n in &self.nodes {
            sizes[n.module_id as usize] += 1;
        }
        sizes
    }

    /// Keeps only edges strictly heavier than `threshold`.
    pub fn apply_edge_threshold(&self, threshold: f64) -> Result<Network> {
        if !(threshold >= 0.0) {
            return Err(GraphError::InvalidThreshold(threshold));
        }
        let edges = self.edges.iter().filter(|e| e.weight > threshold).copied().collect();
        Ok(Self::assemble(
            self.nodes.clone(),
            edges,
            self.module_count(),
            self.name_index.clone(),
        ))
    }

    /// Induced subgraph on `floor(fraction * n)` nodes drawn uniformly
    /// without replacement.
    ///
    /// The draw is a prefix of one seeded permutation, so for a fixed seed a
    /// smaller fraction always selects a subset of a larger one. Kept nodes
    /// retain their relative order and names; ids are re-densified. The
    /// module count is preserved even if some modules end up empty.
    pub fn subset(&self, fraction: f64, seed: u64) -> Result<Network> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(GraphError::InvalidFraction(fraction));
        }
        let n = self.nodes.len();
        let keep = (fraction * n as f64).floor() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut chosen = order[..keep].to_vec();
        chosen.sort_unstable();

        let mut remap = vec![u32::MAX; n];
        let mut nodes = Vec::with_capacity(keep);
        let mut name_index = HashMap::with_capacity(keep);
        for (new, &old) in chosen.iter().enumerate() {
            remap[old] = new as u32;
            let mut rec = self.nodes[old].clone();
            rec.id = NodeId::from(new);
            name_index.insert(rec.name.clone(), rec.id);
            nodes.push(rec);
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                let (a, b) = (remap[e.a.index()], remap[e.b.index()]);
                (a != u32::MAX && b != u32::MAX).then_some(EdgeRecord {
                    a: NodeId(a),
                    b: NodeId(b),
                    weight: e.weight,
                })
            })
            .collect();
        Ok(Self::assemble(nodes, edges, self.module_count(), name_index))
    }

    /// Nodes CSV. Colors are written only when some node deviates from its
    /// module's default color.
    pub fn to_nodes_csv(&self) -> String {
        let custom = self.nodes.iter().any(|n| n.color != module_color(n.module_id));
        let mut out = String::with_capacity(self.nodes.len() * 16);
        out.push_str(if custom { "name,module,r,g,b\n" } else { "name,module\n" });
        for n in &self.nodes {
            if custom {
                let [r, g, b] = n.color;
                let _ = writeln!(out, "{},{},{r},{g},{b}", n.name, n.module_id);
            } else {
                let _ = writeln!(out, "{},{}", n.name, n.module_id);
            }
        }
        out
    }

    pub fn to_edges_csv(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 24);
        out.push_str("source,target,weight\n");
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.nodes[e.a.index()].name,
                self.nodes[e.b.index()].name,
                e.weight
            );
        }
        out
    }
}

/// Yields `(1-based line number, trimmed fields)` for every non-blank line.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.split('\n').enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            None
        } else {
            Some((i + 1, line.split(',').map(str::trim).collect()))
        }
    })
}

fn parse_err(file: CsvFile, line: usize, kind: ParseErrorKind) -> GraphError {
    GraphError::Parse { file, line, kind }
}

fn malformed(file: CsvFile, line: usize, msg: impl Into<String>) -> GraphError {
    parse_err(file, line, ParseErrorKind::Malformed(msg.into()))
}

fn parse_unit(file: CsvFile, line: usize, field: &str) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(malformed(file, line, format!("color channel {field:?} not in [0, 1]"))),
    }
}

/// Parses the nodes and edges CSV texts into a validated network.
///
/// Headers (`name,module[,r,g,b]` and `source,target,weight`) are optional.
/// Blank lines are skipped but still counted for error line numbers.
pub fn parse_network(nodes_text: &str, edges_text: &str) -> Result<Network> {
    let f = CsvFile::Nodes;
    let mut specs: Vec<(usize, NodeSpec)> = Vec::new();
    let mut expect_colors: Option<bool> = None;
    for (idx, (line, fields)) in rows(nodes_text).enumerate() {
        if idx == 0 && fields[0].eq_ignore_ascii_case("name") {
            match fields.len() {
                2 => expect_colors = Some(false),
                5 => expect_colors = Some(true),
                _ => return Err(malformed(f, line, "header must be name,module[,r,g,b]")),
            }
            continue;
        }
        let with_colors = match (fields.len(), expect_colors) {
            (2, None | Some(false)) => false,
            (5, None | Some(true)) => true,
            (k, _) => return Err(malformed(f, line, format!("expected 2 or 5 fields, found {k}"))),
        };
        let name = fields[0];
        if name.is_empty() {
            return Err(malformed(f, line, "empty gene name"));
        }
        let module_id = fields[1]
            .parse::<u32>()
            .map_err(|_| malformed(f, line, format!("module {:?} is not a non-negative integer", fields[1])))?;
        let color = if with_colors {
            Some([
                parse_unit(f, line, fields[2])?,
                parse_unit(f, line, fields[3])?,
                parse_unit(f, line, fields[4])?,
            ])
        } else {
            None
        };
        specs.push((
            line,
            NodeSpec {
                name: name.to_owned(),
                module_id,
                color,
            },
        ));
    }

    let mut name_index = HashMap::with_capacity(specs.len());
    for (i, (line, spec)) in specs.iter().enumerate() {
        if name_index.insert(spec.name.clone(), NodeId::from(i)).is_some() {
            return Err(parse_err(f, *line, ParseErrorKind::DuplicateName(spec.name.clone())));
        }
    }

    let f = CsvFile::Edges;
    let mut seen: HashMap<(u32, u32), ()> = HashMap::new();
    let mut edges = Vec::new();
    for (idx, (line, fields)) in rows(edges_text).enumerate() {
        if idx == 0 && fields[0].eq_ignore_ascii_case("source") {
            if fields.len() != 3 {
                return Err(malformed(f, line, "header must be source,target,weight"));
            }
            continue;
        }
        if fields.len() != 3 {
            return Err(malformed(f, line, format!("expected 3 fields, found {}", fields.len())));
        }
        let resolve = |name: &str| {
            name_index
                .get(name)
                .copied()
                .ok_or_else(|| parse_err(f, line, ParseErrorKind::UnknownGene(name.to_owned())))
        };
        let (a, b) = (resolve(fields[0])?, resolve(fields[1])?);
        let weight = match fields[2].parse::<f64>() {
            Ok(w) if w > 0.0 && w.is_finite() => w,
            _ => {
                return Err(parse_err(
                    f,
                    line,
                    ParseErrorKind::NonPositiveWeight(fields[2].to_owned()),
                ))
            }
        };
        if a == b {
            return Err(parse_err(f, line, ParseErrorKind::SelfLoop(fields[0].to_owned())));
        }
        let (a, b) = (a.min(b), a.max(b));
        if seen.insert((a.0, b.0), ()).is_some() {
            return Err(parse_err(
                f,
                line,
                ParseErrorKind::DuplicateEdge(fields[0].to_owned(), fields[1].to_owned()),
            ));
        }
        edges.push(EdgeRecord { a, b, weight });
    }

    let module_count = specs
        .iter()
        .map(|(_, s)| s.module_id as usize + 1)
        .max()
        .unwrap_or(0);
    let nodes = specs
        .into_iter()
        .enumerate()
        .map(|(i, (_, s))| NodeRecord {
            id: NodeId::from(i),
            color: s.color.unwrap_or_else(|| module_color(s.module_id)),
            name: s.name,
            module_id: s.module_id,
        })
        .collect();
    Ok(Network::assemble(nodes, edges, module_count, name_index))
}

fn utf8(bytes: &[u8], file: CsvFile) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        parse_err(file, line, ParseErrorKind::InvalidUtf8)
    })
}

/// [`parse_network`] over raw bytes; invalid UTF-8 is a line-numbered error.
pub fn parse_network_bytes(nodes: &[u8], edges: &[u8]) -> Result<Network> {
    parse_network(utf8(nodes, CsvFile::Nodes)?, utf8(edges, CsvFile::Edges)?)
}
