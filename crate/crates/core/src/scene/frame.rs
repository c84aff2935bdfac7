use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SceneError, SceneState, SceneTransform, Side};
use crate::graph::{NodeId, Rgb};
use crate::layout::Vec3;

/// Sides of the prism each edge segment is tessellated into.
pub const EDGE_MESH_SIDES: usize = 8;

/// Tube radius at full thickness, as a fraction of node size.
const EDGE_RADIUS_FRACTION: f64 = 0.2;

/// How selection edges are turned into geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "budget")]
pub enum EdgeMode {
    /// Every incident segment in the frame where the selection changes.
    Eager,
    /// At most `budget` new segments per frame until the set is complete.
    Amortized(usize),
}

impl EdgeMode {
    pub fn label(&self) -> &'static str {
        match self {
            EdgeMode::Eager => "eager",
            EdgeMode::Amortized(_) => "amortized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeInstance {
    /// Display index.
    pub node: u32,
    /// Model-space centre; the frame's transform maps it to world space.
    pub position: Vec3,
    pub color: Rgb,
    /// Box edge length in model units.
    pub scale: f64,
}

/// Vertex rings of a prism around a segment, model space.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgeMesh {
    /// `EDGE_MESH_SIDES` vertices around `from`, then as many around `to`.
    pub vertices: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
    /// Triangle list over `vertices`.
    pub indices: Vec<u32>,
}

impl EdgeMesh {
    fn tube(from: &Vec3, to: &Vec3, radius: f64) -> Self {
        let axis = to - from;
        let len = axis.norm();
        let dir = if len > 0.0 { axis / len } else { Vec3::x() };
        let helper = if dir.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let u = dir.cross(&helper).normalize();
        let v = dir.cross(&u);
        let sides = EDGE_MESH_SIDES;
        let mut vertices = Vec::with_capacity(2 * sides);
        let mut normals = Vec::with_capacity(2 * sides);
        for end in [from, to] {
            for s in 0..sides {
                let theta = std::f64::consts::TAU * s as f64 / sides as f64;
                let n = u * theta.cos() + v * theta.sin();
                let p = end + n * radius;
                vertices.push([p.x as f32, p.y as f32, p.z as f32]);
                normals.push([n.x as f32, n.y as f32, n.z as f32]);
            }
        }
        let mut indices = Vec::with_capacity(6 * sides);
        for s in 0..sides as u32 {
            let next = (s + 1) % sides as u32;
            let (a0, a1, b0, b1) = (s, next, s + sides as u32, next + sides as u32);
            indices.extend_from_slice(&[a0, b0, a1, a1, b0, b1]);
        }
        EdgeMesh {
            vertices,
            normals,
            indices,
        }
    }
}

/// A selection edge drawn from the selected node to one neighbour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSegment {
    /// Display index of the neighbour.
    pub neighbor_index: u32,
    /// Neighbour gene name, shown at the far endpoint.
    pub neighbor: Arc<str>,
    pub from: Vec3,
    pub to: Vec3,
    pub color: Rgb,
    pub weight: f64,
    /// Weight relative to the heaviest edge incident to the selection, `(0, 1]`.
    pub thickness: f64,
    pub mesh: EdgeMesh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub text: Arc<str>,
    /// Model-space anchor.
    pub anchor: Vec3,
}

/// Render-ready snapshot of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFrame {
    pub transform: SceneTransform,
    pub morph_t: f64,
    pub node_instances: Vec<NodeInstance>,
    /// All segments emitted so far for the current selection.
    pub edge_segments: Vec<Arc<EdgeSegment>>,
    /// Segments first emitted in this frame.
    pub new_segments: usize,
    /// Visible incident edges of the selection (0 without one).
    pub target_segments: usize,
    pub labels: Vec<Label>,
}

impl GeometryFrame {
    pub fn is_complete(&self) -> bool {
        self.edge_segments.len() == self.target_segments
    }
}

#[derive(Debug, Clone, PartialEq)]
struct EmitKey {
    selection: Arc<str>,
    side: Side,
    mask: Vec<bool>,
}

/// Turns scene states into frames, keeping edge geometry across frames.
///
/// The segment set is rebuilt whenever the selection, the active network
/// or the filter changes. Segments to hidden neighbours are suppressed.
#[derive(Debug, Clone)]
pub struct FrameBuilder {
    mode: EdgeMode,
    key: Option<EmitKey>,
    selected: Option<(Vec3, Rgb, f64)>,
    pending: Vec<(NodeId, f64)>,
    emitted: Vec<Arc<EdgeSegment>>,
}

impl FrameBuilder {
    pub fn new(mode: EdgeMode) -> Result<Self, SceneError> {
        if mode == EdgeMode::Amortized(0) {
            return Err(SceneError::ZeroBudget);
        }
        Ok(FrameBuilder {
            mode,
            key: None,
            selected: None,
            pending: Vec::new(),
            emitted: Vec::new(),
        })
    }

    pub fn mode(&self) -> EdgeMode {
        self.mode
    }

    fn sync_selection(&mut self, scene: &SceneState) {
        let key = scene.selected_node().map(|(side, _, _)| EmitKey {
            selection: scene.selection.clone().expect("selected node implies a selection"),
            side,
            mask: scene.visible_modules.clone(),
        });
        if key == self.key {
            return;
        }
        self.key = key;
        self.emitted.clear();
        self.pending.clear();
        self.selected = None;
        let Some((side, id, index)) = scene.selected_node() else {
            return;
        };
        let net = scene.pair.network(side);
        let incident = net.neighbors(id).unwrap_or(&[]);
        let max_weight = incident.iter().fold(0.0f64, |m, &(_, w)| m.max(w));
        self.selected = Some((scene.displayed_position(index), scene.displayed_color(index), max_weight));
        self.pending = incident
            .iter()
            .rev()
            .filter(|&&(j, _)| scene.is_visible(scene.pair.display_index(side, j)))
            .copied()
            .collect();
    }

    fn emit(&mut self, scene: &SceneState, count: usize) -> usize {
        let Some((from, color, max_weight)) = self.selected else {
            return 0;
        };
        let side = self.key.as_ref().map_or(Side::A, |k| k.side);
        let mut made = 0;
        while made < count {
            let Some((j, weight)) = self.pending.pop() else {
                break;
            };
            let index = scene.pair.display_index(side, j);
            let to = scene.displayed_position(index);
            let thickness = weight / max_weight;
            let mesh = EdgeMesh::tube(&from, &to, scene.node_size * EDGE_RADIUS_FRACTION * thickness);
            self.emitted.push(Arc::new(EdgeSegment {
                neighbor_index: index as u32,
                neighbor: scene.pair.display[index].name.clone(),
                from,
                to,
                color,
                weight,
                thickness,
                mesh,
            }));
            made += 1;
        }
        made
    }

    /// Builds the frame for `scene`, advancing edge emission by one frame.
    pub fn build(&mut self, scene: &SceneState) -> GeometryFrame {
        self.sync_selection(scene);
        let budget = match self.mode {
            EdgeMode::Eager => usize::MAX,
            EdgeMode::Amortized(b) => b,
        };
        let new_segments = self.emit(scene, budget);

        let mut node_instances = Vec::with_capacity(scene.display_len());
        for i in 0..scene.display_len() {
            if !scene.is_visible(i) {
                continue;
            }
            node_instances.push(NodeInstance {
                node: i as u32,
                position: scene.displayed_position(i),
                color: scene.displayed_color(i),
                scale: scene.node_size * scene.presence(i),
            });
        }
        let labels = match (scene.selected_node(), &self.selected) {
            (Some((_, _, index)), Some((anchor, _, _))) => vec![Label {
                text: scene.pair.display[index].name.clone(),
                anchor: *anchor,
            }],
            _ => Vec::new(),
        };
        GeometryFrame {
            transform: scene.transform,
            morph_t: scene.morph_t,
            node_instances,
            target_segments: self.emitted.len() + self.pending.len(),
            edge_segments: self.emitted.clone(),
            new_segments,
            labels,
        }
    }
}

/// One-shot frame with eager edge generation.
pub fn build_frame(scene: &SceneState) -> GeometryFrame {
    FrameBuilder::new(EdgeMode::Eager)
        .expect("eager mode has no budget")
        .build(scene)
}
