//! Reference predictors for exercising the evaluator.

use super::{
    AgentPrediction, Candidate, PredictionSet, Scenario, FUTURE_STEPS, NUM_CANDIDATES,
    STEP_SECONDS,
};

/// Copies each target's ground-truth future into all six candidates with
/// confidence 1.
pub fn oracle_predictions(scenarios: &[Scenario]) -> Vec<PredictionSet> {
    scenarios
        .iter()
        .map(|s| PredictionSet {
            scenario_id: s.scenario_id.clone(),
            agents: s
                .prediction_targets
                .iter()
                .filter_map(|&id| s.track(id))
                .map(|t| AgentPrediction {
                    agent_id: t.agent_id,
                    candidates: vec![
                        Candidate {
                            confidence: 1.0,
                            waypoints: t.future().iter().map(|st| st.position()).collect(),
                        };
                        NUM_CANDIDATES
                    ],
                })
                .collect(),
        })
        .collect()
}

/// (speed scale, heading offset rad, confidence) per candidate.
const CV_VARIANTS: [(f64, f64, f64); NUM_CANDIDATES] = [
    (1.0, 0.0, 0.40),
    (0.8, 0.0, 0.15),
    (1.2, 0.0, 0.15),
    (1.0, 0.15, 0.12),
    (1.0, -0.15, 0.12),
    (0.4, 0.0, 0.06),
];

/// Extrapolates each target's current velocity in six speed/heading
/// variants.
pub fn constant_velocity_predictions(scenarios: &[Scenario]) -> Vec<PredictionSet> {
    scenarios
        .iter()
        .map(|s| PredictionSet {
            scenario_id: s.scenario_id.clone(),
            agents: s
                .prediction_targets
                .iter()
                .filter_map(|&id| s.track(id))
                .map(|t| {
                    let cur = t.current();
                    let heading = cur.velocity_y.atan2(cur.velocity_x);
                    let speed = cur.speed();
                    let candidates = CV_VARIANTS
                        .iter()
                        .map(|&(scale, offset, confidence)| {
                            let (sin, cos) = (heading + offset).sin_cos();
                            let v = speed * scale;
                            Candidate {
                                confidence,
                                waypoints: (1..=FUTURE_STEPS)
                                    .map(|i| {
                                        let dt = i as f64 * STEP_SECONDS;
                                        [cur.x + v * cos * dt, cur.y + v * sin * dt]
                                    })
                                    .collect(),
                            }
                        })
                        .collect();
                    AgentPrediction {
                        agent_id: t.agent_id,
                        candidates,
                    }
                })
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::gen_synthetic;

    #[test]
    fn baselines_are_well_formed() {
        let corpus = gen_synthetic(2, 10, 4);
        for preds in [oracle_predictions(&corpus), constant_velocity_predictions(&corpus)] {
            assert_eq!(preds.len(), 10);
            for (p, s) in preds.iter().zip(&corpus) {
                assert!(p.validate().is_ok());
                assert_eq!(p.agents.len(), s.prediction_targets.len());
            }
        }
    }
}
