//! Interaction state machine over a pair of laid-out networks.
//!
//! A [`SceneState`] is a value: every operation takes the current state and
//! returns the next one, or an error that leaves the input untouched.
//! Displayed positions are recomputed from the morph parameter on demand,
//! never accumulated, so the endpoints reproduce the source layouts exactly.

mod frame;
mod pick;
mod transform;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::graph::{Network, NodeId, Rgb};
use crate::layout::Vec3;

pub use frame::{
    build_frame, EdgeMesh, EdgeMode, EdgeSegment, FrameBuilder, GeometryFrame, Label, NodeInstance,
    EDGE_MESH_SIDES,
};
pub use pick::{ray_box_entry, PickHit, Ray};
pub use transform::{rotation_between, SceneTransform, SnapDirection, SNAP_ANGLE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("initial hand positions coincide")]
    CoincidentHands,
    #[error("transform would collapse the scene to zero scale")]
    DegenerateScale,
    #[error("morph parameter {0} outside [0, 1]")]
    MorphOutOfRange(f64),
    #[error("cannot select while morphing (t = {0})")]
    SelectDuringMorph(f64),
    #[error("unknown gene {0:?}")]
    UnknownNode(String),
    #[error("gene {0:?} is hidden by the current filter")]
    NodeHidden(String),
    #[error("filter has {got} entries, expected {expected}")]
    FilterLength { expected: usize, got: usize },
    #[error("ray direction must be a unit vector")]
    InvalidRay,
    #[error("node size must be positive")]
    InvalidNodeSize,
    #[error("amortized edge budget must be positive")]
    ZeroBudget,
    #[error("layout has {got} positions for a network of {expected} nodes")]
    LayoutMismatch { expected: usize, got: usize },
}

/// Which network of the pair a node or selection belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// One gene of the morph union, matched across the pair by name.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplayNode {
    pub name: Arc<str>,
    pub a: Option<NodeId>,
    pub b: Option<NodeId>,
}

/// The two networks and their layouts, shared between scene values.
#[derive(Debug)]
pub struct NetworkPair {
    pub a: Arc<Network>,
    pub b: Arc<Network>,
    pub positions_a: Arc<Vec<Vec3>>,
    pub positions_b: Arc<Vec<Vec3>>,
    display: Vec<DisplayNode>,
    /// Display index of each node of A (and of B).
    index_a: Vec<u32>,
    index_b: Vec<u32>,
    layout_side: f64,
}

fn check_layout(net: &Network, positions: &[Vec3]) -> Result<(), SceneError> {
    if positions.len() != net.node_count() {
        return Err(SceneError::LayoutMismatch {
            expected: net.node_count(),
            got: positions.len(),
        });
    }
    if positions.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(SceneError::NonFinite("layout position"));
    }
    Ok(())
}

impl NetworkPair {
    /// Matches genes by name: A's nodes in id order, then B-only nodes.
    pub fn new(
        a: Arc<Network>,
        positions_a: Arc<Vec<Vec3>>,
        b: Arc<Network>,
        positions_b: Arc<Vec<Vec3>>,
    ) -> Result<Self, SceneError> {
        check_layout(&a, &positions_a)?;
        check_layout(&b, &positions_b)?;
        let mut display: Vec<DisplayNode> = a
            .nodes()
            .iter()
            .map(|n| DisplayNode {
                name: Arc::from(n.name.as_str()),
                a: Some(n.id),
                b: b.lookup(&n.name),
            })
            .collect();
        let index_a = (0..a.node_count() as u32).collect();
        let mut index_b = vec![0u32; b.node_count()];
        for n in b.nodes() {
            index_b[n.id.index()] = match a.lookup(&n.name) {
                Some(id) => id.0,
                None => {
                    display.push(DisplayNode {
                        name: Arc::from(n.name.as_str()),
                        a: None,
                        b: Some(n.id),
                    });
                    (display.len() - 1) as u32
                }
            };
        }
        let extent = positions_a
            .iter()
            .chain(positions_b.iter())
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        Ok(NetworkPair {
            a,
            b,
            positions_a,
            positions_b,
            display,
            index_a,
            index_b,
            layout_side: 2.0 * extent,
        })
    }

    pub fn display(&self) -> &[DisplayNode] {
        &self.display
    }

    pub fn network(&self, side: Side) -> &Arc<Network> {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    pub fn positions(&self, side: Side) -> &Arc<Vec<Vec3>> {
        match side {
            Side::A => &self.positions_a,
            Side::B => &self.positions_b,
        }
    }

    /// Display index of a node of one side.
    pub fn display_index(&self, side: Side, id: NodeId) -> usize {
        match side {
            Side::A => self.index_a[id.index()] as usize,
            Side::B => self.index_b[id.index()] as usize,
        }
    }

    fn module_count(&self) -> usize {
        self.a.module_count().max(self.b.module_count())
    }
}

#[derive(Debug, Clone)]
pub struct SceneState {
    pair: Arc<NetworkPair>,
    morph_t: f64,
    transform: SceneTransform,
    selection: Option<Arc<str>>,
    visible_modules: Vec<bool>,
    node_size: f64,
    execution: Execution,
}

/// States are equal when they view the same loaded pair (by identity) with
/// equal interaction state.
impl PartialEq for SceneState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.pair, &other.pair)
            && self.morph_t == other.morph_t
            && self.transform == other.transform
            && self.selection == other.selection
            && self.visible_modules == other.visible_modules
            && self.node_size == other.node_size
            && self.execution == other.execution
    }
}

/// Default node box edge as a fraction of the layout extent.
pub const NODE_SIZE_FRACTION: f64 = 0.005;

impl SceneState {
    pub fn new(pair: NetworkPair) -> Self {
        let size = pair.layout_side * NODE_SIZE_FRACTION;
        SceneState {
            visible_modules: vec![true; pair.module_count()],
            pair: Arc::new(pair),
            morph_t: 0.0,
            transform: SceneTransform::default(),
            selection: None,
            node_size: if size > 0.0 { size } else { NODE_SIZE_FRACTION },
            execution: Execution::default(),
        }
    }

    /// A scene whose two sides are the same network, for single-network use.
    pub fn single(network: Arc<Network>, positions: Arc<Vec<Vec3>>) -> Result<Self, SceneError> {
        Ok(Self::new(NetworkPair::new(
            network.clone(),
            positions.clone(),
            network,
            positions,
        )?))
    }

    pub fn pair(&self) -> &Arc<NetworkPair> {
        &self.pair
    }

    pub fn morph_t(&self) -> f64 {
        self.morph_t
    }

    pub fn transform(&self) -> &SceneTransform {
        &self.transform
    }

    pub fn selection(&self) -> Option<&str> {
        self.selection.as_deref()
    }

    pub fn visible_modules(&self) -> &[bool] {
        &self.visible_modules
    }

    pub fn node_size(&self) -> f64 {
        self.node_size
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_node_size(mut self, size: f64) -> Result<Self, SceneError> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(SceneError::InvalidNodeSize);
        }
        self.node_size = size;
        Ok(self)
    }

    /// The network whose modules and edges are authoritative at the current
    /// morph parameter: the nearer endpoint, A on a tie.
    pub fn active_side(&self) -> Side {
        if self.morph_t > 0.5 {
            Side::B
        } else {
            Side::A
        }
    }

    /// True when the morph sits exactly on one of the two networks.
    pub fn at_endpoint(&self) -> bool {
        self.morph_t == 0.0 || self.morph_t == 1.0
    }

    pub fn display_len(&self) -> usize {
        self.pair.display.len()
    }

    /// Instance scale factor from morphing: 1 for shared genes, shrinking
    /// linearly to 0 toward the network a gene is absent from.
    pub fn presence(&self, index: usize) -> f64 {
        let node = &self.pair.display[index];
        match (node.a, node.b) {
            (Some(_), Some(_)) => 1.0,
            (Some(_), None) => 1.0 - self.morph_t,
            (None, Some(_)) => self.morph_t,
            (None, None) => 0.0,
        }
    }

    /// Model-space position at the current morph parameter.
    pub fn displayed_position(&self, index: usize) -> Vec3 {
        let node = &self.pair.display[index];
        let t = self.morph_t;
        match (node.a, node.b) {
            (Some(a), Some(b)) => {
                let pa = self.pair.positions_a[a.index()];
                let pb = self.pair.positions_b[b.index()];
                if t == 0.0 {
                    pa
                } else if t == 1.0 {
                    pb
                } else {
                    pa * (1.0 - t) + pb * t
                }
            }
            (Some(a), None) => self.pair.positions_a[a.index()],
            (None, Some(b)) => self.pair.positions_b[b.index()],
            (None, None) => Vec3::zeros(),
        }
    }

    pub fn displayed_positions(&self) -> Vec<Vec3> {
        (0..self.display_len()).map(|i| self.displayed_position(i)).collect()
    }

    pub fn displayed_color(&self, index: usize) -> Rgb {
        let node = &self.pair.display[index];
        let t = self.morph_t;
        let ca = node.a.map(|id| self.pair.a.nodes()[id.index()].color);
        let cb = node.b.map(|id| self.pair.b.nodes()[id.index()].color);
        match (ca, cb) {
            (Some(ca), Some(cb)) => {
                if t == 0.0 {
                    ca
                } else if t == 1.0 {
                    cb
                } else {
                    std::array::from_fn(|c| ca[c] * (1.0 - t) + cb[c] * t)
                }
            }
            (Some(c), None) | (None, Some(c)) => c,
            (None, None) => [0.0; 3],
        }
    }

    /// World-space position of a displayed node.
    pub fn world_position(&self, index: usize) -> Vec3 {
        self.transform.apply(&self.displayed_position(index))
    }

    /// Module label governing the node's visibility: its module in the
    /// active network, or in the only network that contains it.
    pub fn module_of(&self, index: usize) -> u32 {
        let node = &self.pair.display[index];
        let a = node.a.map(|id| self.pair.a.nodes()[id.index()].module_id);
        let b = node.b.map(|id| self.pair.b.nodes()[id.index()].module_id);
        match self.active_side() {
            Side::A => a.or(b),
            Side::B => b.or(a),
        }
        .unwrap_or(0)
    }

    /// Visible iff present at this morph parameter and its module is shown.
    pub fn is_visible(&self, index: usize) -> bool {
        self.presence(index) > 0.0 && self.visible_modules[self.module_of(index) as usize]
    }

    pub fn visible_count(&self) -> usize {
        (0..self.display_len()).filter(|&i| self.is_visible(i)).count()
    }

    /// Display index of a gene by name, if it is in either network.
    pub fn find(&self, name: &str) -> Option<usize> {
        let pair = &self.pair;
        pair.a
            .lookup(name)
            .map(|id| pair.index_a[id.index()] as usize)
            .or_else(|| pair.b.lookup(name).map(|id| pair.index_b[id.index()] as usize))
    }

    /// The selected node as `(side, id, display index)`.
    pub fn selected_node(&self) -> Option<(Side, NodeId, usize)> {
        let name = self.selection.as_deref()?;
        let side = self.active_side();
        let id = self.pair.network(side).lookup(name)?;
        Some((side, id, self.pair.display_index(side, id)))
    }

    pub fn translate(&self, delta: &Vec3) -> Result<Self, SceneError> {
        Ok(SceneState {
            transform: self.transform.translate(delta)?,
            ..self.clone()
        })
    }

    pub fn two_hand_transform(&self, l0: &Vec3, r0: &Vec3, l1: &Vec3, r1: &Vec3) -> Result<Self, SceneError> {
        Ok(SceneState {
            transform: self.transform.two_hand(l0, r0, l1, r1)?,
            ..self.clone()
        })
    }

    pub fn snap_rotate(&self, direction: SnapDirection) -> Self {
        SceneState {
            transform: self.transform.snap(direction),
            ..self.clone()
        }
    }

    /// Replaces the whole transform.
    pub fn with_transform(&self, transform: SceneTransform) -> Result<Self, SceneError> {
        if !(transform.scale > 0.0 && transform.scale.is_finite()) {
            return Err(SceneError::DegenerateScale);
        }
        Ok(SceneState {
            transform,
            ..self.clone()
        })
    }

    /// Sets or clears the selection.
    ///
    /// Selection is only possible with the morph resting on a network, and
    /// only for a gene of that network that the filter shows.
    pub fn select(&self, name: Option<&str>) -> Result<Self, SceneError> {
        let Some(name) = name else {
            return Ok(SceneState {
                selection: None,
                ..self.clone()
            });
        };
        if !self.at_endpoint() {
            return Err(SceneError::SelectDuringMorph(self.morph_t));
        }
        let side = self.active_side();
        let id = self
            .pair
            .network(side)
            .lookup(name)
            .ok_or_else(|| SceneError::UnknownNode(name.to_owned()))?;
        if !self.is_visible(self.pair.display_index(side, id)) {
            return Err(SceneError::NodeHidden(name.to_owned()));
        }
        Ok(SceneState {
            selection: Some(Arc::from(name)),
            ..self.clone()
        })
    }

    /// Replaces the module visibility mask; drops a selection it hides.
    pub fn set_filter(&self, visible: &[bool]) -> Result<Self, SceneError> {
        if visible.len() != self.visible_modules.len() {
            return Err(SceneError::FilterLength {
                expected: self.visible_modules.len(),
                got: visible.len(),
            });
        }
        let mut next = SceneState {
            visible_modules: visible.to_vec(),
            ..self.clone()
        };
        next.revalidate_selection();
        Ok(next)
    }

    /// Moves the morph parameter; leaving an endpoint clears the selection.
    pub fn set_morph(&self, t: f64) -> Result<Self, SceneError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(SceneError::MorphOutOfRange(t));
        }
        let mut next = SceneState {
            morph_t: t,
            ..self.clone()
        };
        next.revalidate_selection();
        Ok(next)
    }

    fn revalidate_selection(&mut self) {
        if self.selection.is_none() {
            return;
        }
        let keep = self.at_endpoint() && self.selected_node().is_some_and(|(_, _, i)| self.is_visible(i));
        if !keep {
            self.selection = None;
        }
    }

    /// Count of visible nodes per module label, for filter bookkeeping.
    pub fn visible_per_module(&self) -> HashMap<u32, usize> {
        let mut counts = HashMap::new();
        for i in 0..self.display_len() {
            if self.is_visible(i) {
                *counts.entry(self.module_of(i)).or_insert(0) += 1;
            }
        }
        counts
    }
}
