//! Randomized metric instances and brute-force reference implementations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wlkit::metrics::{Horizon, MatchThresholds};
use wlkit::scenario::{
    AgentPrediction, AgentState, AgentTrack, AgentType, Candidate, PredictionSet, Scenario, Split,
    CURRENT_INDEX, FUTURE_STEPS, NUM_CANDIDATES, TRACK_STEPS,
};

/// One scenario with 1..=`max_agents` targets. Candidates scatter around
/// the truth at mixed scales so that matches and misses both occur;
/// confidences are continuous, hence distinct.
pub fn random_instance(seed: u64, max_agents: usize, scenario_id: &str) -> (Scenario, PredictionSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_agents);
    let mut tracks = Vec::new();
    let mut agents = Vec::new();
    for j in 0..n {
        let agent_type = AgentType::ALL[rng.random_range(0..3)];
        let mut x: f64 = rng.random_range(-50.0..50.0);
        let mut y: f64 = rng.random_range(-50.0..50.0);
        let drop_p = [0.0, 0.05, 0.3][rng.random_range(0..3)];
        let states: Vec<AgentState> = (0..TRACK_STEPS)
            .map(|s| {
                x += rng.random_range(-1.0..1.5);
                y += rng.random_range(-1.0..1.0);
                let valid = s == CURRENT_INDEX || !rng.random_bool(drop_p);
                if !valid {
                    return AgentState::default();
                }
                AgentState {
                    x,
                    y,
                    heading: rng.random_range(-3.2..3.2),
                    velocity_x: rng.random_range(-2.0..2.0),
                    velocity_y: rng.random_range(-2.0..2.0),
                    valid,
                }
            })
            .collect();
        let track = AgentTrack {
            agent_id: 10 + j as u64,
            agent_type,
            states,
        };
        let candidates = (0..NUM_CANDIDATES)
            .map(|_| {
                let scale = [0.3, 1.5, 6.0][rng.random_range(0..3)];
                Candidate {
                    confidence: rng.random_range(0.0..1.0),
                    waypoints: (0..FUTURE_STEPS)
                        .map(|t| {
                            let g = &track.states[CURRENT_INDEX + 1 + t];
                            [
                                g.x + rng.random_range(-scale..scale),
                                g.y + rng.random_range(-scale..scale),
                            ]
                        })
                        .collect(),
                }
            })
            .collect();
        agents.push(AgentPrediction {
            agent_id: track.agent_id,
            candidates,
        });
        tracks.push(track);
    }
    let scenario = Scenario {
        scenario_id: scenario_id.to_string(),
        split: Split::Val,
        prediction_targets: tracks.iter().map(|t| t.agent_id).collect(),
        tracks,
    };
    let preds = PredictionSet {
        scenario_id: scenario_id.to_string(),
        agents,
    };
    (scenario, preds)
}

pub fn gt_future(track: &AgentTrack) -> &[AgentState] {
    &track.states[CURRENT_INDEX + 1..]
}

/// Enumerates every (k, t) pair.
pub fn oracle_min_ade(cands: &[Candidate], future: &[AgentState], steps: usize) -> Option<f64> {
    let mut best: Option<f64> = None;
    for c in cands {
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 0..steps {
            if future[t].valid {
                let dx = c.waypoints[t][0] - future[t].x;
                let dy = c.waypoints[t][1] - future[t].y;
                sum += (dx * dx + dy * dy).sqrt();
                count += 1;
            }
        }
        if count == 0 {
            return None;
        }
        let ade = sum / count as f64;
        best = Some(match best {
            Some(b) if b <= ade => b,
            _ => ade,
        });
    }
    best
}

/// Polar form: project the displacement's angle against the heading.
pub fn oracle_is_match(
    pred: [f64; 2],
    gt: &AgentState,
    horizon: Horizon,
    speed: f64,
    thr: &MatchThresholds,
) -> bool {
    let dx = pred[0] - gt.x;
    let dy = pred[1] - gt.y;
    let dist = (dx * dx + dy * dy).sqrt();
    let angle = dy.atan2(dx) - gt.heading;
    let lon = dist * angle.cos();
    let lat = dist * angle.sin();
    let s = &thr.speed_scaling;
    let scale = if speed >= s.low_speed {
        1.0
    } else {
        s.min_scale + (1.0 - s.min_scale) * (speed / s.low_speed)
    };
    let i = match horizon {
        Horizon::S3 => 0,
        Horizon::S5 => 1,
        Horizon::S8 => 2,
    };
    lon.abs() <= thr.longitudinal[i] * scale && lat.abs() <= thr.lateral[i] * scale
}

pub fn horizon_steps(h: Horizon) -> usize {
    match h {
        Horizon::S3 => 30,
        Horizon::S5 => 50,
        Horizon::S8 => 80,
    }
}

fn speed(track: &AgentTrack) -> f64 {
    let c = &track.states[CURRENT_INDEX];
    (c.velocity_x * c.velocity_x + c.velocity_y * c.velocity_y).sqrt()
}

/// Per-candidate IsMatch at the horizon, `None` if the horizon step is
/// invalid.
pub fn oracle_matches(
    track: &AgentTrack,
    cands: &[Candidate],
    h: Horizon,
    thr: &MatchThresholds,
) -> Option<Vec<bool>> {
    let t = horizon_steps(h) - 1;
    let gt = &gt_future(track)[t];
    if !gt.valid {
        return None;
    }
    Some(
        cands
            .iter()
            .map(|c| oracle_is_match(c.waypoints[t], gt, h, speed(track), thr))
            .collect(),
    )
}

/// Joint miss over one unit: brute force over k, then over agents.
pub fn oracle_unit_miss(members: &[(&AgentTrack, &[Candidate])], h: Horizon, thr: &MatchThresholds) -> Option<bool> {
    let rows: Vec<Vec<bool>> = members
        .iter()
        .filter_map(|(t, c)| oracle_matches(t, c, h, thr))
        .collect();
    if rows.is_empty() {
        return None;
    }
    let k = rows.iter().map(Vec::len).max().unwrap();
    let mut every_k_misses = true;
    for kk in 0..k {
        let mut any_agent_fails = false;
        for r in &rows {
            if !r.get(kk).copied().unwrap_or(false) {
                any_agent_fails = true;
            }
        }
        if !any_agent_fails {
            every_k_misses = false;
        }
    }
    Some(every_k_misses)
}

/// AP by sweeping every distinct confidence as a threshold. Needs distinct
/// confidences across detections.
pub fn oracle_ap(dets: &[(f64, bool)]) -> Option<f64> {
    if dets.is_empty() {
        return None;
    }
    let n = dets.len() as f64;
    let mut thresholds: Vec<f64> = dets.iter().map(|d| d.0).collect();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    // (recall, precision) at each threshold.
    let points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&c| {
            let above: Vec<&(f64, bool)> = dets.iter().filter(|d| d.0 >= c).collect();
            let tp = above.iter().filter(|d| d.1).count() as f64;
            (tp / n, tp / above.len() as f64)
        })
        .collect();
    let mut recalls: Vec<f64> = points.iter().map(|p| p.0).collect();
    recalls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    recalls.dedup();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for r in recalls {
        if r == 0.0 {
            continue;
        }
        let best = points
            .iter()
            .filter(|p| p.0 >= r)
            .map(|p| p.1)
            .fold(0.0, f64::max);
        ap += (r - prev) * best;
        prev = r;
    }
    Some(ap)
}

/// Top-confidence candidate per agent, one AP per type, mean over types.
pub fn oracle_map(agents: &[(&AgentTrack, &[Candidate])], h: Horizon, thr: &MatchThresholds) -> Option<f64> {
    let mut aps = Vec::new();
    for ty in AgentType::ALL {
        let mut dets = Vec::new();
        for (t, c) in agents.iter().filter(|(t, _)| t.agent_type == ty) {
            if let Some(m) = oracle_matches(t, c, h, thr) {
                let mut best = 0;
                for k in 1..c.len() {
                    if c[k].confidence > c[best].confidence {
                        best = k;
                    }
                }
                dets.push((c[best].confidence, m[best]));
            }
        }
        if let Some(ap) = oracle_ap(&dets) {
            aps.push(ap);
        }
    }
    if aps.is_empty() {
        None
    } else {
        Some(aps.iter().sum::<f64>() / aps.len() as f64)
    }
}

/// Marginal miss rate.
pub fn oracle_miss_rate(agents: &[(&AgentTrack, &[Candidate])], h: Horizon, thr: &MatchThresholds) -> Option<f64> {
    let misses: Vec<bool> = agents
        .iter()
        .filter_map(|m| oracle_unit_miss(std::slice::from_ref(m), h, thr))
        .collect();
    if misses.is_empty() {
        None
    } else {
        Some(misses.iter().filter(|m| **m).count() as f64 / misses.len() as f64)
    }
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= tol,
        (None, None) => true,
        _ => false,
    }
}
