use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Network;
use crate::layout::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    Translation,
    Scaling,
    Selection,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 3] = [
        InteractionKind::Translation,
        InteractionKind::Scaling,
        InteractionKind::Selection,
    ];

    /// Row label prefix in reports.
    pub fn label(self) -> &'static str {
        match self {
            InteractionKind::Translation => "Translation",
            InteractionKind::Scaling => "Scaling",
            InteractionKind::Selection => "Select",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScriptStep {
    Idle,
    Translate(Vec3),
    TwoHand { l0: Vec3, r0: Vec3, l1: Vec3, r1: Vec3 },
    Select(Option<String>),
}

/// One interaction per tick, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionScript {
    pub kind: InteractionKind,
    pub steps: Vec<ScriptStep>,
}

/// Ticks between selection changes in the selection script.
pub const SELECTION_CADENCE: usize = 10;

impl InteractionScript {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn generate(kind: InteractionKind, network: &Network, ticks: usize, seed: u64) -> Self {
        match kind {
            InteractionKind::Translation => Self::translation(ticks, seed),
            InteractionKind::Scaling => Self::scaling(ticks, seed),
            InteractionKind::Selection => Self::selection(network, ticks, seed),
        }
    }

    /// A grip drag: smoothly wandering per-tick deltas.
    pub fn translation(ticks: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..TAU));
        let period = 240.0;
        let amplitude = 0.05;
        let steps = (0..ticks)
            .map(|f| {
                let w = TAU * f as f64 / period;
                ScriptStep::Translate(Vec3::new(
                    (w + phase[0]).cos(),
                    0.5 * (w + phase[1]).sin(),
                    (0.5 * w + phase[2]).sin(),
                ) * amplitude)
            })
            .collect();
        InteractionScript {
            kind: InteractionKind::Translation,
            steps,
        }
    }

    /// Two hands pulling apart and together while the grip axis slowly turns.
    pub fn scaling(ticks: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phase = rng.random_range(0.0..TAU);
        let center = Vec3::new(0.0, 1.2, -0.5);
        let hands = |f: usize| {
            let w = TAU * f as f64 / 180.0;
            let separation = 0.5 * (1.0 + 0.4 * (w + phase).sin());
            let yaw = 0.3 * (0.5 * w).sin();
            let axis = Vec3::new(yaw.cos(), 0.0, yaw.sin());
            (center - axis * (separation / 2.0), center + axis * (separation / 2.0))
        };
        let steps = (0..ticks)
            .map(|f| {
                let (l0, r0) = hands(f);
                let (l1, r1) = hands(f + 1);
                ScriptStep::TwoHand { l0, r0, l1, r1 }
            })
            .collect();
        InteractionScript {
            kind: InteractionKind::Scaling,
            steps,
        }
    }

    /// Visits genes in a seeded shuffle, changing selection every
    /// [`SELECTION_CADENCE`] ticks.
    pub fn selection(network: &Network, ticks: usize, seed: u64) -> Self {
        let mut order: Vec<&str> = network.nodes().iter().map(|n| n.name.as_str()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let steps = (0..ticks)
            .map(|f| {
                if order.is_empty() || f % SELECTION_CADENCE != 0 {
                    ScriptStep::Idle
                } else {
                    let name = order[(f / SELECTION_CADENCE) % order.len()];
                    ScriptStep::Select(Some(name.to_owned()))
                }
            })
            .collect();
        InteractionScript {
            kind: InteractionKind::Selection,
            steps,
        }
    }
}
