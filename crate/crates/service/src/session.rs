//! Per-connection interaction state.

use std::sync::Arc;

use netscape_core::layout::parse_positions;
use netscape_core::{
    parse_network, EdgeMode, FrameBuilder, GeometryFrame, NetworkPair, Ray, SceneError, SceneState, Side, Vec3,
};
use serde_json::Value;

use crate::protocol::{
    encode_f32, ClientMessage, ErrorReply, FrameDelta, LoadPayload, ReplyBody, Request, ServerMessage,
    StateSummary, WireHit, WireLabel, WireSegment, GEOMETRY_CHANNEL,
};

fn v3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn scene_code(e: &SceneError) -> &'static str {
    match e {
        SceneError::NonFinite(_) => "non-finite",
        SceneError::CoincidentHands => "coincident-hands",
        SceneError::DegenerateScale => "degenerate-scale",
        SceneError::MorphOutOfRange(_) => "morph-out-of-range",
        SceneError::SelectDuringMorph(_) => "select-during-morph",
        SceneError::UnknownNode(_) => "unknown-node",
        SceneError::NodeHidden(_) => "node-hidden",
        SceneError::FilterLength { .. } => "filter-length",
        SceneError::InvalidRay => "invalid-ray",
        _ => "scene",
    }
}

struct Failure {
    code: &'static str,
    message: String,
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        Failure {
            code: scene_code(&e),
            message: e.to_string(),
        }
    }
}

fn failure(code: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// What the client last received, so deltas carry only changes.
#[derive(Default)]
struct Sent {
    positions: Vec<f32>,
    scales: Vec<f32>,
    colors: Vec<f32>,
    edges: usize,
}

struct Loaded {
    scene: SceneState,
    builder: FrameBuilder,
    sent: Sent,
}

/// One client's scene. Messages are applied strictly in order; a request
/// that fails leaves the scene exactly as it was.
pub struct Session {
    loaded: Option<Loaded>,
    last_seq: Option<u64>,
    frames: u64,
    edge_mode: EdgeMode,
}

impl Default for Session {
    fn default() -> Self {
        Self::new(EdgeMode::Eager)
    }
}

impl Session {
    pub fn new(edge_mode: EdgeMode) -> Self {
        Session {
            loaded: None,
            last_seq: None,
            frames: 0,
            edge_mode,
        }
    }

    pub fn scene(&self) -> Option<&SceneState> {
        self.loaded.as_ref().map(|l| &l.scene)
    }

    /// Handles a burst of text frames that arrived together.
    ///
    /// A morph immediately followed by another morph is not applied; it is
    /// answered with a `superseded` reply naming the later request.
    pub fn handle_batch<S: AsRef<str>>(&mut self, texts: &[S]) -> Vec<ServerMessage> {
        let parsed: Vec<Result<ClientMessage, ServerMessage>> = texts.iter().map(|t| parse(t.as_ref())).collect();
        let mut out = Vec::new();
        for (i, msg) in parsed.iter().enumerate() {
            match msg {
                Err(e) => out.push(e.clone()),
                Ok(m) => {
                    let next_morph = match parsed.get(i + 1) {
                        Some(Ok(ClientMessage {
                            seq,
                            request: Request::Morph { .. },
                        })) => Some(*seq),
                        _ => None,
                    };
                    match (&m.request, next_morph) {
                        (Request::Morph { .. }, Some(by)) if self.accept_seq(m.seq).is_ok() => {
                            out.push(ServerMessage::Reply {
                                seq: m.seq,
                                result: ReplyBody::Superseded { by },
                            });
                        }
                        _ => out.extend(self.handle(m.clone())),
                    }
                }
            }
        }
        out
    }

    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match parse(text) {
            Ok(m) => self.handle(m),
            Err(e) => vec![e],
        }
    }

    fn accept_seq(&mut self, seq: u64) -> Result<(), Failure> {
        if self.last_seq.is_some_and(|last| seq <= last) {
            return Err(failure(
                "out-of-order",
                format!("seq {seq} does not follow {}", self.last_seq.unwrap_or(0)),
            ));
        }
        self.last_seq = Some(seq);
        Ok(())
    }

    /// Applies one request: its reply (or error), then a frame delta if the
    /// scene changed.
    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let seq = msg.seq;
        match self.dispatch(msg) {
            Ok((result, delta)) => {
                let mut out = vec![ServerMessage::Reply { seq, result }];
                out.extend(delta.map(ServerMessage::FrameDelta));
                out
            }
            Err(f) => vec![ServerMessage::Error(ErrorReply {
                seq: Some(seq),
                code: f.code.to_owned(),
                message: f.message,
            })],
        }
    }

    fn dispatch(&mut self, msg: ClientMessage) -> Result<(ReplyBody, Option<FrameDelta>), Failure> {
        self.accept_seq(msg.seq)?;
        let seq = msg.seq;
        if let Request::Load(payload) = &msg.request {
            let loaded = load(payload, self.edge_mode)?;
            let scene = &loaded.scene;
            let pair = scene.pair();
            let body = ReplyBody::Loaded {
                nodes_a: pair.network(Side::A).node_count(),
                edges_a: pair.network(Side::A).edge_count(),
                nodes_b: pair.network(Side::B).node_count(),
                edges_b: pair.network(Side::B).edge_count(),
                names: pair.display().iter().map(|d| d.name.to_string()).collect(),
                modules: scene.visible_modules().len(),
            };
            self.loaded = Some(loaded);
            let delta = self.next_delta(seq);
            return Ok((body, Some(delta)));
        }
        let loaded = self
            .loaded
            .as_mut()
            .ok_or_else(|| failure("not-loaded", "no network loaded; send a load message first"))?;
        let scene = &loaded.scene;
        let next = match &msg.request {
            Request::Load(_) => unreachable!("handled above"),
            Request::Snapshot => {
                let mut builder = FrameBuilder::new(EdgeMode::Eager)?;
                let frame = builder.build(scene);
                let state = summary(scene);
                let delta = full_delta(scene, &frame, seq, self.frames);
                return Ok((ReplyBody::Snapshot { state, frame: delta }, None));
            }
            Request::Pick { origin, direction } => {
                let ray = Ray::towards(v3(origin), v3(direction))?;
                let hit = scene.pick_hit(&ray).map(|h| WireHit {
                    name: h.name,
                    index: h.index,
                    t: h.t,
                });
                return Ok((ReplyBody::Picked { hit }, None));
            }
            Request::Select { name } => scene.select(name.as_deref())?,
            Request::Filter { mask } => scene.set_filter(mask)?,
            Request::Morph { t } => scene.set_morph(*t)?,
            Request::Translate { delta } => scene.translate(&v3(delta))?,
            Request::Twohand { l0, r0, l1, r1 } => scene.two_hand_transform(&v3(l0), &v3(r0), &v3(l1), &v3(r1))?,
            Request::Snap { direction } => scene.snap_rotate(*direction),
        };
        loaded.scene = next;
        let body = ReplyBody::State(summary(&loaded.scene));
        Ok((body, Some(self.next_delta(seq))))
    }

    fn next_delta(&mut self, seq: u64) -> FrameDelta {
        let loaded = self.loaded.as_mut().expect("delta needs a loaded scene");
        let frame = loaded.builder.build(&loaded.scene);
        let (positions, scales, colors) = bulk(&loaded.scene);
        let sent = &mut loaded.sent;
        let changed = |new: &Vec<f32>, old: &mut Vec<f32>| {
            if new == old {
                None
            } else {
                *old = new.clone();
                Some(encode_f32(new))
            }
        };
        let positions = changed(&positions, &mut sent.positions);
        let scales = changed(&scales, &mut sent.scales);
        let colors = changed(&colors, &mut sent.colors);
        let total = frame.edge_segments.len();
        let edges_reset = total != sent.edges + frame.new_segments || (total > 0 && frame.new_segments == total);
        let fresh = if edges_reset { 0 } else { total - frame.new_segments };
        sent.edges = total;
        let delta = FrameDelta {
            channel: GEOMETRY_CHANNEL.to_owned(),
            frame: self.frames,
            seq,
            transform: matrix(&loaded.scene),
            morph_t: loaded.scene.morph_t(),
            positions,
            scales,
            colors,
            edges_reset,
            new_edges: segments(&frame, fresh),
            edges_complete: frame.is_complete(),
            labels: labels(&frame),
            visible_count: frame.node_instances.len(),
        };
        self.frames += 1;
        delta
    }
}

fn parse(text: &str) -> Result<ClientMessage, ServerMessage> {
    let err = |seq, code: &str, message: String| {
        ServerMessage::Error(ErrorReply {
            seq,
            code: code.to_owned(),
            message,
        })
    };
    let value: Value = serde_json::from_str(text).map_err(|e| err(None, "malformed", e.to_string()))?;
    let seq = value.get("seq").and_then(Value::as_u64);
    let Some(tag) = value.get("type").and_then(Value::as_str) else {
        return Err(err(seq, "malformed", "missing type tag".into()));
    };
    if !Request::TAGS.contains(&tag) {
        return Err(err(seq, "unknown-type", format!("unknown message type {tag:?}")));
    }
    serde_json::from_value(value).map_err(|e| err(seq, "malformed", e.to_string()))
}

fn load(p: &LoadPayload, edge_mode: EdgeMode) -> Result<Loaded, Failure> {
    let bad = |e: &dyn std::fmt::Display| failure("invalid-load", e.to_string());
    let a = Arc::new(parse_network(&p.nodes_a, &p.edges_a).map_err(|e| bad(&e))?);
    let pos_a = Arc::new(parse_positions(&a, &p.layout_a).map_err(|e| bad(&e))?);
    let pair = match (&p.nodes_b, &p.edges_b, &p.layout_b) {
        (None, None, None) => NetworkPair::new(a.clone(), pos_a.clone(), a, pos_a)?,
        (Some(nodes), Some(edges), Some(layout)) => {
            let b = Arc::new(parse_network(nodes, edges).map_err(|e| bad(&e))?);
            let pos_b = Arc::new(parse_positions(&b, layout).map_err(|e| bad(&e))?);
            NetworkPair::new(a, pos_a, b, pos_b)?
        }
        _ => return Err(failure("invalid-load", "network B needs nodesB, edgesB and layoutB together")),
    };
    Ok(Loaded {
        scene: SceneState::new(pair),
        builder: FrameBuilder::new(edge_mode)?,
        sent: Sent::default(),
    })
}

fn matrix(scene: &SceneState) -> [f64; 16] {
    let m = scene.transform().to_matrix();
    std::array::from_fn(|i| m[i])
}

fn summary(scene: &SceneState) -> StateSummary {
    StateSummary {
        morph_t: scene.morph_t(),
        active: match scene.active_side() {
            Side::A => "A".into(),
            Side::B => "B".into(),
        },
        selection: scene.selection().map(str::to_owned),
        visible_modules: scene.visible_modules().to_vec(),
        visible_count: scene.visible_count(),
        transform: matrix(scene),
    }
}

fn bulk(scene: &SceneState) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
    let n = scene.display_len();
    let mut positions = Vec::with_capacity(3 * n);
    let mut scales = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(3 * n);
    for i in 0..n {
        let p = scene.displayed_position(i);
        positions.extend([p.x as f32, p.y as f32, p.z as f32]);
        let visible = scene.is_visible(i);
        scales.push(if visible { (scene.node_size() * scene.presence(i)) as f32 } else { 0.0 });
        colors.extend(scene.displayed_color(i).map(|c| c as f32));
    }
    (positions, scales, colors)
}

fn segments(frame: &GeometryFrame, from: usize) -> Vec<WireSegment> {
    frame.edge_segments[from..]
        .iter()
        .map(|s| WireSegment {
            neighbor: s.neighbor.to_string(),
            neighbor_index: s.neighbor_index,
            from: arr(&s.from),
            to: arr(&s.to),
            color: s.color,
            thickness: s.thickness,
        })
        .collect()
}

fn labels(frame: &GeometryFrame) -> Vec<WireLabel> {
    frame
        .labels
        .iter()
        .map(|l| WireLabel {
            text: l.text.to_string(),
            anchor: arr(&l.anchor),
        })
        .collect()
}

fn full_delta(scene: &SceneState, frame: &GeometryFrame, seq: u64, counter: u64) -> FrameDelta {
    let (positions, scales, colors) = bulk(scene);
    FrameDelta {
        channel: GEOMETRY_CHANNEL.to_owned(),
        frame: counter,
        seq,
        transform: matrix(scene),
        morph_t: scene.morph_t(),
        positions: Some(encode_f32(&positions)),
        scales: Some(encode_f32(&scales)),
        colors: Some(encode_f32(&colors)),
        edges_reset: true,
        new_edges: segments(frame, 0),
        edges_complete: frame.is_complete(),
        labels: labels(frame),
        visible_count: frame.node_instances.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use netscape_core::layout::positions_to_csv;
    use netscape_core::{generate_synthetic, LayoutParams};

    pub(crate) fn load_message(seq: u64) -> String {
        let net = generate_synthetic(60, 200, 4, 1).unwrap();
        let params = LayoutParams {
            iterations: 20,
            ..LayoutParams::default()
        };
        let pos = netscape_core::layout::run(&net, &params, 1).unwrap();
        serde_json::json!({
            "type": "load",
            "seq": seq,
            "nodesA": net.to_nodes_csv(),
            "edgesA": net.to_edges_csv(),
            "layoutA": positions_to_csv(&net, &pos),
        })
        .to_string()
    }

    fn only_reply(out: &[ServerMessage]) -> &ReplyBody {
        match &out[0] {
            ServerMessage::Reply { result, .. } => result,
            other => panic!("expected reply, got {other:?}"),
        }
    }

    fn error_code(out: &[ServerMessage]) -> &str {
        match &out[0] {
            ServerMessage::Error(e) => &e.code,
            other => panic!("expected error, got {other:?}"),
        }
    }

    #[test]
    fn requests_before_load_are_rejected() {
        let mut s = Session::default();
        let out = s.handle_text(r#"{"type":"snapshot","seq":1}"#);
        assert_eq!(error_code(&out), "not-loaded");
    }

    #[test]
    fn load_then_select_emits_edges() {
        let mut s = Session::default();
        let out = s.handle_text(&load_message(1));
        assert!(matches!(only_reply(&out), ReplyBody::Loaded { nodes_a: 60, .. }));
        let ServerMessage::FrameDelta(d) = &out[1] else { panic!() };
        assert!(d.positions.is_some() && d.scales.is_some());
        assert_eq!(d.visible_count, 60);

        let name = s.scene().unwrap().pair().display()[0].name.to_string();
        let degree = s.scene().unwrap().pair().network(Side::A).degree(netscape_core::NodeId(0));
        let out = s.handle_text(&format!(r#"{{"type":"select","seq":2,"name":"{name}"}}"#));
        let ServerMessage::FrameDelta(d) = &out[1] else { panic!() };
        assert_eq!(d.new_edges.len(), degree);
        assert!(d.edges_reset && d.edges_complete);
        assert!(d.positions.is_none(), "positions unchanged");
        assert_eq!(d.labels[0].text, name);
    }

    #[test]
    fn errors_carry_codes_and_leave_state() {
        let mut s = Session::default();
        s.handle_text(&load_message(1));
        let before = s.scene().unwrap().clone();
        for (text, code) in [
            (r#"{"type":"morph","seq":2,"t":2}"#, "morph-out-of-range"),
            (r#"{"type":"filter","seq":3,"mask":[true]}"#, "filter-length"),
            (r#"{"type":"warp","seq":4}"#, "unknown-type"),
            (r#"{"type":"translate","seq":5,"delta":"x"}"#, "malformed"),
            (r#"not json"#, "malformed"),
            (r#"{"type":"select","seq":6,"name":"nope"}"#, "unknown-node"),
            (r#"{"type":"snap","seq":6,"direction":"left"}"#, "out-of-order"),
        ] {
            assert_eq!(error_code(&s.handle_text(text)), code, "{text}");
            assert_eq!(s.scene().unwrap(), &before);
        }
    }

    #[test]
    fn morph_bursts_coalesce() {
        let mut s = Session::default();
        s.handle_text(&load_message(1));
        let burst = [
            r#"{"type":"morph","seq":2,"t":0.1}"#,
            r#"{"type":"morph","seq":3,"t":0.2}"#,
            r#"{"type":"morph","seq":4,"t":0.3}"#,
            r#"{"type":"snap","seq":5,"direction":"right"}"#,
        ];
        let out = s.handle_batch(&burst);
        let replies: Vec<_> = out.iter().filter(|m| !matches!(m, ServerMessage::FrameDelta(_))).collect();
        assert_eq!(replies.len(), 4);
        assert!(matches!(replies[0], ServerMessage::Reply { seq: 2, result: ReplyBody::Superseded { by: 3 } }));
        assert!(matches!(replies[1], ServerMessage::Reply { seq: 3, result: ReplyBody::Superseded { by: 4 } }));
        assert_eq!(s.scene().unwrap().morph_t(), 0.3);
        assert_eq!(out.iter().filter(|m| matches!(m, ServerMessage::FrameDelta(_))).count(), 2);
    }

    #[test]
    fn pick_names_the_node_on_the_ray() {
        let mut s = Session::default();
        s.handle_text(&load_message(1));
        let scene = s.scene().unwrap();
        let target = scene.world_position(7);
        let origin = target + Vec3::new(0.0, 0.0, 500.0);
        let text = serde_json::json!({
            "type": "pick", "seq": 2,
            "origin": [origin.x, origin.y, origin.z],
            "direction": [0.0, 0.0, -1.0],
        })
        .to_string();
        let expected = scene.pick(&Ray::new(origin, -Vec3::z()).unwrap());
        let out = s.handle_text(&text);
        let ReplyBody::Picked { hit } = only_reply(&out) else { panic!() };
        assert_eq!(hit.as_ref().map(|h| h.name.clone()), expected);
        assert!(expected.is_some());
    }
}
