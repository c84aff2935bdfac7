//! Engine for exploring large co-expression networks: network model and
//! CSV formats, deterministic 3D force layout, the interaction state
//! machine that produces per-frame geometry, and a frame-budget benchmark
//! harness with tail-latency statistics.
//!
//! Per-node inner loops (layout forces, picking) run on rayon when the
//! `parallel` feature is enabled and [`Execution::Parallel`] is selected;
//! results are bit-identical to the sequential path.

pub mod bench;
pub mod exec;
pub mod generate;
pub mod graph;
pub mod layout;
pub mod scene;

pub use bench::{BenchConfig, BenchError, BenchReport, FrameSample, FrameTimer, InteractionScript};
pub use exec::Execution;
pub use generate::generate_synthetic;
pub use graph::{
    module_color, parse_network, parse_network_bytes, EdgeRecord, GraphError, ModuleInfo, Network,
    NodeId, NodeRecord, NodeSpec, Rgb,
};
pub use layout::{ForceLayout, LayoutError, LayoutParams, LayoutState, Vec3};
pub use scene::{
    build_frame, EdgeMode, FrameBuilder, GeometryFrame, NetworkPair, Ray, SceneError, SceneState,
    SceneTransform, Side, SnapDirection,
};
