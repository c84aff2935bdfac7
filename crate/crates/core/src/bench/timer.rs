use std::time::Instant;

/// Work performed by one benchmark tick, reported to the timer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TickWork {
    pub node_instances: usize,
    pub new_segments: usize,
    pub total_segments: usize,
}

/// Measures the cost of one tick in milliseconds.
///
/// `tick` is the global tick index (warmup included). Implementations must
/// run `work` exactly once.
pub trait FrameTimer {
    fn time(&mut self, tick: usize, work: &mut dyn FnMut() -> TickWork) -> f64;
}

/// Monotonic wall clock around the tick.
#[derive(Debug, Clone, Copy, Default)]
pub struct WallClock;

impl FrameTimer for WallClock {
    fn time(&mut self, _tick: usize, work: &mut dyn FnMut() -> TickWork) -> f64 {
        let start = Instant::now();
        std::hint::black_box(work());
        start.elapsed().as_secs_f64() * 1e3
    }
}

/// Replays a fixed cost series: tick `i` costs `series[i]` ms.
#[derive(Debug, Clone)]
pub struct ScriptedClock {
    series: Vec<f64>,
}

impl ScriptedClock {
    pub fn new(series: Vec<f64>) -> Self {
        ScriptedClock { series }
    }

    /// Tick `i` costs `i` microseconds.
    pub fn linear_micros(ticks: usize) -> Self {
        Self::new((0..ticks).map(|i| i as f64 * 1e-3).collect())
    }
}

impl FrameTimer for ScriptedClock {
    fn time(&mut self, tick: usize, work: &mut dyn FnMut() -> TickWork) -> f64 {
        work();
        self.series.get(tick).copied().unwrap_or(0.0)
    }
}

/// Deterministic cost from the work a tick reports, for reproducible runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkModelClock {
    pub base_ms: f64,
    pub per_instance_ms: f64,
    pub per_new_segment_ms: f64,
    pub per_segment_ms: f64,
}

impl Default for WorkModelClock {
    fn default() -> Self {
        WorkModelClock {
            base_ms: 5.0,
            per_instance_ms: 5e-4,
            per_new_segment_ms: 0.2,
            per_segment_ms: 1e-3,
        }
    }
}

impl FrameTimer for WorkModelClock {
    fn time(&mut self, _tick: usize, work: &mut dyn FnMut() -> TickWork) -> f64 {
        let w = work();
        self.base_ms
            + self.per_instance_ms * w.node_instances as f64
            + self.per_new_segment_ms * w.new_segments as f64
            + self.per_segment_ms * w.total_segments as f64
    }
}
