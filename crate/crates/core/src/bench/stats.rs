use serde::{Deserialize, Serialize};

use super::{BenchConfig, BenchError, FrameSample};

/// Number of frames in the slowest `fraction` of `n`: `ceil(fraction * n)`,
/// at least 1. Products within a few ulps of an integer count as that
/// integer, so 1% of 700 is 7 frames.
pub fn tail_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let nearest = x.round();
    let k = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n.max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailStat {
    pub fraction: f64,
    pub frames: usize,
    pub avg_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub nodes: usize,
    pub edges: usize,
    pub mode: String,
    pub seed: u64,
    pub platform: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub label: String,
    pub samples: usize,
    pub avg_all_ms: f64,
    /// One entry per configured tail fraction, in configuration order.
    pub avg_slowest: Vec<TailStat>,
    pub budget_ms: f64,
    pub pass: bool,
    pub meta: ReportMeta,
}

impl BenchReport {
    pub fn tail(&self, fraction: f64) -> Option<f64> {
        self.avg_slowest
            .iter()
            .find(|t| t.fraction == fraction)
            .map(|t| t.avg_ms)
    }

    pub fn with_meta(mut self, meta: ReportMeta) -> Self {
        self.meta = meta;
        self
    }
}

/// Mean of all frame costs and of the slowest tails.
///
/// Costs are sorted descending and summed in that order, so the result does
/// not depend on the order of `samples`.
pub fn summarize(samples: &[FrameSample], config: &BenchConfig, label: &str) -> Result<BenchReport, BenchError> {
    if samples.is_empty() {
        return Err(BenchError::NoSamples);
    }
    let mut costs: Vec<f64> = samples.iter().map(|s| s.cost_ms).collect();
    costs.sort_unstable_by(|a, b| b.total_cmp(a));
    let n = costs.len();
    let prefix: Vec<f64> = costs
        .iter()
        .scan(0.0, |acc, &c| {
            *acc += c;
            Some(*acc)
        })
        .collect();
    let avg_all_ms = prefix[n - 1] / n as f64;
    let mut avg_slowest: Vec<TailStat> = config
        .tail_fractions
        .iter()
        .map(|&fraction| {
            let frames = tail_count(fraction, n);
            TailStat {
                fraction,
                frames,
                avg_ms: prefix[frames - 1] / frames as f64,
            }
        })
        .collect();
    // A smaller tail's mean is never below a larger one's. Division can break
    // that by an ulp when the means coincide (e.g. a constant series).
    let mut order: Vec<usize> = (0..avg_slowest.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(avg_slowest[i].frames));
    let mut floor = avg_all_ms;
    for i in order {
        let t = &mut avg_slowest[i];
        t.avg_ms = t.avg_ms.max(floor);
        floor = t.avg_ms;
    }
    Ok(BenchReport {
        label: label.to_owned(),
        samples: n,
        avg_all_ms,
        avg_slowest,
        budget_ms: config.budget_ms,
        pass: avg_all_ms <= config.budget_ms,
        meta: ReportMeta::default(),
    })
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Tied block i..=j shares the mean of ranks i+1..=j+1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with mid-ranks for ties; `None` when either
/// series is constant or the lengths differ or are below 2.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
