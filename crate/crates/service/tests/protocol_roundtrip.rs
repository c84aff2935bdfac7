use netscape_core::SnapDirection;
use netscape_service::protocol::{
    ClientMessage, ErrorReply, FrameDelta, LoadPayload, ReplyBody, Request, ServerMessage, StateSummary, WireHit,
    WireLabel, WireSegment,
};
use proptest::prelude::*;

fn num() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3]
}

fn v3() -> impl Strategy<Value = [f64; 3]> {
    [num(), num(), num()]
}

fn mat() -> impl Strategy<Value = [f64; 16]> {
    proptest::collection::vec(num(), 16).prop_map(|v| v.try_into().unwrap())
}

fn text() -> impl Strategy<Value = String> {
    "[ -~\n\u{e9}\u{3b1}]{0,40}"
}

fn request() -> impl Strategy<Value = Request> {
    prop_oneof![
        (text(), text(), text(), proptest::option::of((text(), text(), text()))).prop_map(|(n, e, l, b)| {
            Request::Load(LoadPayload {
                nodes_a: n,
                edges_a: e,
                layout_a: l,
                nodes_b: b.as_ref().map(|b| b.0.clone()),
                edges_b: b.as_ref().map(|b| b.1.clone()),
                layout_b: b.map(|b| b.2),
            })
        }),
        Just(Request::Snapshot),
        (v3(), v3()).prop_map(|(origin, direction)| Request::Pick { origin, direction }),
        proptest::option::of(text()).prop_map(|name| Request::Select { name }),
        proptest::collection::vec(any::<bool>(), 0..20).prop_map(|mask| Request::Filter { mask }),
        num().prop_map(|t| Request::Morph { t }),
        v3().prop_map(|delta| Request::Translate { delta }),
        (v3(), v3(), v3(), v3()).prop_map(|(l0, r0, l1, r1)| Request::Twohand { l0, r0, l1, r1 }),
        any::<bool>().prop_map(|l| Request::Snap {
            direction: if l { SnapDirection::Left } else { SnapDirection::Right }
        }),
    ]
}

fn summary() -> impl Strategy<Value = StateSummary> {
    (num(), any::<bool>(), proptest::option::of(text()), proptest::collection::vec(any::<bool>(), 0..12), 0usize..5000, mat())
        .prop_map(|(morph_t, a, selection, visible_modules, visible_count, transform)| StateSummary {
            morph_t,
            active: if a { "A".into() } else { "B".into() },
            selection,
            visible_modules,
            visible_count,
            transform,
        })
}

fn delta() -> impl Strategy<Value = FrameDelta> {
    let seg = (text(), any::<u32>(), v3(), v3(), v3(), num()).prop_map(|(neighbor, neighbor_index, from, to, color, thickness)| {
        WireSegment {
            neighbor,
            neighbor_index,
            from,
            to,
            color,
            thickness,
        }
    });
    (
        any::<u64>(),
        any::<u64>(),
        mat(),
        num(),
        proptest::option::of(text()),
        any::<bool>(),
        proptest::collection::vec(seg, 0..4),
        (text(), v3()),
        any::<bool>(),
    )
        .prop_map(|(frame, seq, transform, morph_t, blob, edges_reset, new_edges, label, complete)| FrameDelta {
            channel: "geometry".into(),
            frame,
            seq,
            transform,
            morph_t,
            positions: blob.clone(),
            scales: blob.clone(),
            colors: blob,
            edges_reset,
            new_edges,
            edges_complete: complete,
            labels: vec![WireLabel {
                text: label.0,
                anchor: label.1,
            }],
            visible_count: 3,
        })
}

fn server_message() -> impl Strategy<Value = ServerMessage> {
    let body = prop_oneof![
        (0usize..9, proptest::collection::vec(text(), 0..5)).prop_map(|(k, names)| ReplyBody::Loaded {
            nodes_a: k,
            edges_a: k * 2,
            nodes_b: k,
            edges_b: k,
            names,
            modules: k,
        }),
        (summary(), delta()).prop_map(|(state, frame)| ReplyBody::Snapshot { state, frame }),
        proptest::option::of((text(), 0usize..100, num())).prop_map(|h| ReplyBody::Picked {
            hit: h.map(|(name, index, t)| WireHit { name, index, t })
        }),
        summary().prop_map(ReplyBody::State),
        any::<u64>().prop_map(|by| ReplyBody::Superseded { by }),
    ];
    prop_oneof![
        (any::<u64>(), body).prop_map(|(seq, result)| ServerMessage::Reply { seq, result }),
        (proptest::option::of(any::<u64>()), text(), text())
            .prop_map(|(seq, code, message)| ServerMessage::Error(ErrorReply { seq, code, message })),
        delta().prop_map(ServerMessage::FrameDelta),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn client_messages_round_trip(seq in any::<u64>(), request in request()) {
        let msg = ClientMessage { seq, request };
        let text = serde_json::to_string(&msg).unwrap();
        prop_assert!(!text.contains('\n'), "one message per line");
        let back: ClientMessage = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, msg);
    }

    #[test]
    fn server_messages_round_trip(msg in server_message()) {
        let back: ServerMessage = serde_json::from_str(&msg.to_text()).unwrap();
        prop_assert_eq!(back, msg);
    }
}

#[test]
fn every_tag_is_covered() {
    let samples = [
        Request::Load(LoadPayload {
            nodes_a: String::new(),
            edges_a: String::new(),
            layout_a: String::new(),
            nodes_b: None,
            edges_b: None,
            layout_b: None,
        }),
        Request::Snapshot,
        Request::Pick {
            origin: [0.0; 3],
            direction: [1.0, 0.0, 0.0],
        },
        Request::Select { name: None },
        Request::Filter { mask: vec![] },
        Request::Morph { t: 0.5 },
        Request::Translate { delta: [0.0; 3] },
        Request::Twohand {
            l0: [0.0; 3],
            r0: [1.0; 3],
            l1: [0.0; 3],
            r1: [2.0; 3],
        },
        Request::Snap {
            direction: SnapDirection::Right,
        },
    ];
    let tags: Vec<&str> = samples.iter().map(Request::tag).collect();
    assert_eq!(tags, Request::TAGS);
    for (r, tag) in samples.iter().zip(Request::TAGS) {
        let v: serde_json::Value = serde_json::to_value(ClientMessage { seq: 0, request: r.clone() }).unwrap();
        assert_eq!(v["type"], tag);
    }
}
