//! Wire format shared with the browser client.
//!
//! Every message is one JSON text frame with a `type` tag. Client requests
//! carry a `seq` that must increase within a session; the server answers
//! each with exactly one `reply` or `error` bearing the same `seq`, and
//! pushes `frame-delta` messages on the `geometry` channel after every
//! accepted scene change.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use netscape_core::SnapDirection;
use serde::{Deserialize, Serialize};

/// Channel tag carried by server-initiated geometry updates.
pub const GEOMETRY_CHANNEL: &str = "geometry";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub request: Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoadPayload {
    pub nodes_a: String,
    pub edges_a: String,
    pub layout_a: String,
    /// Second network for morphing; omitted to explore a single network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges_b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_b: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Request {
    Load(LoadPayload),
    Snapshot,
    Pick {
        origin: [f64; 3],
        direction: [f64; 3],
    },
    Select {
        #[serde(default)]
        name: Option<String>,
    },
    Filter {
        mask: Vec<bool>,
    },
    Morph {
        t: f64,
    },
    Translate {
        delta: [f64; 3],
    },
    Twohand {
        l0: [f64; 3],
        r0: [f64; 3],
        l1: [f64; 3],
        r1: [f64; 3],
    },
    Snap {
        direction: SnapDirection,
    },
}

impl Request {
    pub const TAGS: [&'static str; 9] = [
        "load", "snapshot", "pick", "select", "filter", "morph", "translate", "twohand", "snap",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Request::Load(_) => "load",
            Request::Snapshot => "snapshot",
            Request::Pick { .. } => "pick",
            Request::Select { .. } => "select",
            Request::Filter { .. } => "filter",
            Request::Morph { .. } => "morph",
            Request::Translate { .. } => "translate",
            Request::Twohand { .. } => "twohand",
            Request::Snap { .. } => "snap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ServerMessage {
    Reply { seq: u64, result: ReplyBody },
    Error(ErrorReply),
    FrameDelta(FrameDelta),
}

impl ServerMessage {
    /// Sequence number of the request this answers (frame deltas name the
    /// request that caused them).
    pub fn seq(&self) -> Option<u64> {
        match self {
            ServerMessage::Reply { seq, .. } => Some(*seq),
            ServerMessage::Error(e) => e.seq,
            ServerMessage::FrameDelta(d) => Some(d.seq),
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    /// Absent when the request was too malformed to carry one.
    pub seq: Option<u64>,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReplyBody {
    Loaded {
        nodes_a: usize,
        edges_a: usize,
        nodes_b: usize,
        edges_b: usize,
        /// Gene names in display order: positions and scales follow it.
        names: Vec<String>,
        /// Length of the filter mask.
        modules: usize,
    },
    Snapshot {
        state: StateSummary,
        frame: FrameDelta,
    },
    Picked {
        hit: Option<WireHit>,
    },
    State(StateSummary),
    /// A morph replaced by a later one in the same burst.
    Superseded {
        by: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireHit {
    pub name: String,
    pub index: usize,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub morph_t: f64,
    pub active: String,
    pub selection: Option<String>,
    pub visible_modules: Vec<bool>,
    pub visible_count: usize,
    /// Column-major model-to-world matrix.
    pub transform: [f64; 16],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSegment {
    pub neighbor: String,
    pub neighbor_index: u32,
    pub from: [f64; 3],
    pub to: [f64; 3],
    pub color: [f64; 3],
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireLabel {
    pub text: String,
    pub anchor: [f64; 3],
}

/// Geometry changes since the previous delta.
///
/// Bulk arrays are base64 of little-endian `f32`, in display order, and
/// are present only when they changed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDelta {
    pub channel: String,
    /// Counts deltas within the session.
    pub frame: u64,
    pub seq: u64,
    pub transform: [f64; 16],
    pub morph_t: f64,
    /// Model-space `x, y, z` per node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<String>,
    /// Box edge per node; 0 for hidden nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<String>,
    /// `r, g, b` per node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<String>,
    /// The edge set was discarded before `new_edges` were added.
    pub edges_reset: bool,
    pub new_edges: Vec<WireSegment>,
    pub edges_complete: bool,
    pub labels: Vec<WireLabel>,
    pub visible_count: usize,
}

pub fn encode_f32(values: &[f32]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

pub fn decode_f32(text: &str) -> Option<Vec<f32>> {
    let bytes = STANDARD.decode(text).ok()?;
    if bytes.len() % 4 != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    )
}
