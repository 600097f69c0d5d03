//! Motion-forecasting metrics: minADE, miss rate and mAP at the 3 s, 5 s
//! and 8 s horizons.

mod report;
mod thresholds;

pub use report::{
    evaluate, EvalError, HorizonAverage, MetricCell, MetricsReport, ReferenceProblems, TABLE_HEADER,
};
pub use thresholds::{MatchThresholds, SpeedScaling};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scenario::{AgentState, AgentTrack, AgentType, Candidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Horizon {
    #[serde(rename = "3s")]
    S3,
    #[serde(rename = "5s")]
    S5,
    #[serde(rename = "8s")]
    S8,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::S3, Horizon::S5, Horizon::S8];

    /// Future steps covered, at 10 Hz.
    pub fn steps(self) -> usize {
        match self {
            Horizon::S3 => 30,
            Horizon::S5 => 50,
            Horizon::S8 => 80,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Horizon::S3 => "3s",
            Horizon::S5 => "5s",
            Horizon::S8 => "8s",
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One predicted agent paired with its ground truth.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub scenario_id: &'a str,
    pub track: &'a AgentTrack,
    pub candidates: &'a [Candidate],
}

impl<'a> Target<'a> {
    pub fn agent_type(&self) -> AgentType {
        self.track.agent_type
    }

    /// Ground truth at the horizon step, if valid.
    pub fn horizon_state(&self, h: Horizon) -> Option<&'a AgentState> {
        self.track.future().get(h.steps() - 1).filter(|s| s.valid)
    }

    fn key(&self) -> (&'a str, u64) {
        (self.scenario_id, self.track.agent_id)
    }

    /// Whether candidate `k` passes IsMatch at the horizon. False when the
    /// horizon step is invalid or `k` is out of range.
    pub fn candidate_matches(&self, k: usize, h: Horizon, thresholds: &MatchThresholds) -> bool {
        let (Some(gt), Some(c)) = (self.horizon_state(h), self.candidates.get(k)) else {
            return false;
        };
        is_match(
            c.waypoints[h.steps() - 1],
            gt.position(),
            gt.heading,
            h,
            self.track.current().speed(),
            thresholds,
        )
    }
}

/// Minimum over candidates of the mean displacement over the valid ground
/// truth steps among the first `steps` future steps. `None` if no such step
/// is valid or there are no candidates.
pub fn min_ade(candidates: &[Candidate], gt_future: &[AgentState], steps: usize) -> Option<f64> {
    let valid: Vec<usize> = (0..steps.min(gt_future.len()))
        .filter(|&t| gt_future[t].valid)
        .collect();
    if valid.is_empty() {
        return None;
    }
    candidates
        .iter()
        .map(|c| {
            let total: f64 = valid
                .iter()
                .map(|&t| {
                    let [px, py] = c.waypoints[t];
                    (px - gt_future[t].x).hypot(py - gt_future[t].y)
                })
                .sum();
            total / valid.len() as f64
        })
        .min_by(f64::total_cmp)
}

/// Splits `pred - gt` into components along and across `gt_heading` and
/// compares them with the speed-scaled thresholds for `horizon`.
pub fn is_match(
    pred: [f64; 2],
    gt: [f64; 2],
    gt_heading: f64,
    horizon: Horizon,
    initial_speed: f64,
    thresholds: &MatchThresholds,
) -> bool {
    let (dx, dy) = (pred[0] - gt[0], pred[1] - gt[1]);
    let (sin, cos) = gt_heading.sin_cos();
    let longitudinal = dx * cos + dy * sin;
    let lateral = -dx * sin + dy * cos;
    let scale = thresholds.speed_scaling.scale(initial_speed);
    longitudinal.abs() <= scale * thresholds.longitudinal(horizon)
        && lateral.abs() <= scale * thresholds.lateral(horizon)
}

/// Each target as its own evaluation unit.
pub fn marginal_units<'a>(targets: &[Target<'a>]) -> Vec<Vec<Target<'a>>> {
    targets.iter().map(|t| vec![*t]).collect()
}

/// Fraction of evaluation units that miss. Candidate `k` misses a unit if
/// any member's `k`-th candidate fails IsMatch; the unit misses if every
/// `k` does. Members with an invalid horizon step are left out and empty
/// units are skipped. `None` if no unit remains.
pub fn miss_rate(units: &[Vec<Target>], horizon: Horizon, thresholds: &MatchThresholds) -> Option<f64> {
    let mut counted = 0usize;
    let mut misses = 0usize;
    for unit in units {
        let members: Vec<&Target> = unit
            .iter()
            .filter(|t| t.horizon_state(horizon).is_some())
            .collect();
        if members.is_empty() {
            continue;
        }
        counted += 1;
        let k_max = members.iter().map(|t| t.candidates.len()).max().unwrap_or(0);
        let hit = (0..k_max).any(|k| {
            members
                .iter()
                .all(|t| t.candidate_matches(k, horizon, thresholds))
        });
        if !hit {
            misses += 1;
        }
    }
    (counted > 0).then(|| misses as f64 / counted as f64)
}

/// A scored detection: the agent's top confidence and whether it is a true
/// positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Detection<'a> {
    pub confidence: f64,
    pub true_positive: bool,
    pub key: (&'a str, u64),
}

/// The highest-confidence candidate is the detection. When several share
/// the top confidence it counts as a true positive if any of them matches,
/// which keeps the result independent of candidate order.
pub(crate) fn detection<'a>(
    target: &Target<'a>,
    horizon: Horizon,
    thresholds: &MatchThresholds,
) -> Option<Detection<'a>> {
    target.horizon_state(horizon)?;
    let top = target
        .candidates
        .iter()
        .map(|c| c.confidence)
        .max_by(f64::total_cmp)?;
    let true_positive = target
        .candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.confidence == top)
        .any(|(k, _)| target.candidate_matches(k, horizon, thresholds));
    Some(Detection {
        confidence: top,
        true_positive,
        key: target.key(),
    })
}

/// All-point interpolated AP. Detections are ranked by confidence, ties by
/// (scenario id, agent id); recall is relative to the number of detections.
pub(crate) fn ap_from_detections(mut dets: Vec<Detection>) -> Option<f64> {
    if dets.is_empty() {
        return None;
    }
    dets.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.key.cmp(&b.key))
    });
    let n = dets.len() as f64;
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(dets.len());
    for (i, d) in dets.iter().enumerate() {
        tp += d.true_positive as usize;
        precision.push(tp as f64 / (i + 1) as f64);
    }
    // Envelope: running max from the right.
    for i in (0..precision.len().saturating_sub(1)).rev() {
        if precision[i] < precision[i + 1] {
            precision[i] = precision[i + 1];
        }
    }
    let area: f64 = dets
        .iter()
        .zip(&precision)
        .filter(|(d, _)| d.true_positive)
        .map(|(_, p)| p)
        .sum();
    Some(area / n)
}

/// AP over `targets` treated as a single class. `None` if no target has a
/// valid horizon step.
pub fn average_precision(targets: &[Target], horizon: Horizon, thresholds: &MatchThresholds) -> Option<f64> {
    ap_from_detections(
        targets
            .iter()
            .filter_map(|t| detection(t, horizon, thresholds))
            .collect(),
    )
}

/// Mean of the per-agent-type APs over the types present.
pub fn mean_average_precision(
    targets: &[Target],
    horizon: Horizon,
    thresholds: &MatchThresholds,
) -> Option<f64> {
    let aps: Vec<f64> = AgentType::ALL
        .iter()
        .filter_map(|&ty| {
            let of_type: Vec<Target> = targets.iter().filter(|t| t.agent_type() == ty).copied().collect();
            average_precision(&of_type, horizon, thresholds)
        })
        .collect();
    (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64)
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}
