//! Motion-forecasting scenario schema: typed agent tracks sampled at 10 Hz,
//! split into 11 history steps (10 past + current) and 80 future steps.

mod baseline;
mod io;
mod synthetic;

pub use baseline::{constant_velocity_predictions, oracle_predictions};
pub use io::{
    read_predictions, read_predictions_from, read_scenarios, read_scenarios_from,
    write_predictions, write_predictions_to, write_scenarios, write_scenarios_to, ScenarioIoError,
    PREDICTIONS_FORMAT, SCENARIOS_FORMAT, SCHEMA_VERSION,
};
pub use synthetic::{gen_synthetic, gen_synthetic_detailed, Motion};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub const STEP_SECONDS: f64 = 0.1;
pub const CURRENT_INDEX: usize = 10;
pub const HISTORY_STEPS: usize = CURRENT_INDEX + 1;
pub const FUTURE_STEPS: usize = 80;
pub const TRACK_STEPS: usize = HISTORY_STEPS + FUTURE_STEPS;
/// Candidate trajectories per target agent.
pub const NUM_CANDIDATES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Vehicle,
    Pedestrian,
    Cyclist,
}

impl AgentType {
    pub const ALL: [AgentType; 3] = [AgentType::Vehicle, AgentType::Pedestrian, AgentType::Cyclist];

    pub fn name(self) -> &'static str {
        match self {
            AgentType::Vehicle => "vehicle",
            AgentType::Pedestrian => "pedestrian",
            AgentType::Cyclist => "cyclist",
        }
    }
}

impl fmt::Display for AgentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    #[serde(rename = "vx")]
    pub velocity_x: f64,
    #[serde(rename = "vy")]
    pub velocity_y: f64,
    pub valid: bool,
}

impl AgentState {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn speed(&self) -> f64 {
        self.velocity_x.hypot(self.velocity_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentTrack {
    pub agent_id: u64,
    pub agent_type: AgentType,
    pub states: Vec<AgentState>,
}

impl AgentTrack {
    pub fn current(&self) -> &AgentState {
        &self.states[CURRENT_INDEX]
    }

    pub fn history(&self) -> &[AgentState] {
        &self.states[..HISTORY_STEPS]
    }

    /// The 80 future states; index `i` is `0.1 * (i + 1)` s after the
    /// current step.
    pub fn future(&self) -> &[AgentState] {
        &self.states[HISTORY_STEPS..]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub scenario_id: String,
    pub split: Split,
    pub tracks: Vec<AgentTrack>,
    pub prediction_targets: Vec<u64>,
}

/// A schema rule broken by a record, naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaViolation {
    pub field: String,
    pub message: String,
}

impl SchemaViolation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl Scenario {
    pub fn track(&self, agent_id: u64) -> Option<&AgentTrack> {
        self.tracks.iter().find(|t| t.agent_id == agent_id)
    }

    pub fn validate(&self) -> Result<(), SchemaViolation> {
        let mut ids = HashSet::new();
        for (i, t) in self.tracks.iter().enumerate() {
            if !ids.insert(t.agent_id) {
                return Err(SchemaViolation::new(
                    format!("tracks[{i}].agent_id"),
                    format!("duplicate agent id {}", t.agent_id),
                ));
            }
            if t.states.len() != TRACK_STEPS {
                return Err(SchemaViolation::new(
                    format!("tracks[{i}].states"),
                    format!("expected {TRACK_STEPS} timesteps, found {}", t.states.len()),
                ));
            }
            for (s, st) in t.states.iter().enumerate() {
                let values = [st.x, st.y, st.heading, st.velocity_x, st.velocity_y];
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(SchemaViolation::new(
                        format!("tracks[{i}].states[{s}]"),
                        "non-finite state value",
                    ));
                }
            }
        }
        let mut targets = HashSet::new();
        for (k, id) in self.prediction_targets.iter().enumerate() {
            let field = format!("prediction_targets[{k}]");
            if !targets.insert(*id) {
                return Err(SchemaViolation::new(field, format!("duplicate target {id}")));
            }
            match self.track(*id) {
                None => {
                    return Err(SchemaViolation::new(field, format!("unknown agent id {id}")));
                }
                Some(t) if !t.current().valid => {
                    return Err(SchemaViolation::new(
                        field,
                        format!("target {id} has no valid current state"),
                    ));
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub confidence: f64,
    /// Future (x, y) positions at 10 Hz, aligned with [`AgentTrack::future`].
    pub waypoints: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentPrediction {
    pub agent_id: u64,
    #[serde(rename = "trajectories")]
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionSet {
    pub scenario_id: String,
    pub agents: Vec<AgentPrediction>,
}

impl PredictionSet {
    /// File-level rules: exactly six candidates per agent, 80 finite
    /// waypoints each, confidences in [0, 1].
    pub fn validate(&self) -> Result<(), SchemaViolation> {
        for (a, agent) in self.agents.iter().enumerate() {
            if agent.candidates.len() != NUM_CANDIDATES {
                return Err(SchemaViolation::new(
                    format!("agents[{a}].trajectories"),
                    format!(
                        "expected {NUM_CANDIDATES} trajectories, found {}",
                        agent.candidates.len()
                    ),
                ));
            }
            for (k, c) in agent.candidates.iter().enumerate() {
                let field = format!("agents[{a}].trajectories[{k}]");
                if !(c.confidence.is_finite() && (0.0..=1.0).contains(&c.confidence)) {
                    return Err(SchemaViolation::new(
                        format!("{field}.confidence"),
                        format!("confidence {} outside [0, 1]", c.confidence),
                    ));
                }
                if c.waypoints.len() != FUTURE_STEPS {
                    return Err(SchemaViolation::new(
                        format!("{field}.waypoints"),
                        format!("expected {FUTURE_STEPS} waypoints, found {}", c.waypoints.len()),
                    ));
                }
                if c.waypoints.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(SchemaViolation::new(
                        format!("{field}.waypoints"),
                        "non-finite waypoint",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn track(id: u64) -> AgentTrack {
        AgentTrack {
            agent_id: id,
            agent_type: AgentType::Cyclist,
            states: vec![
                AgentState {
                    valid: true,
                    ..Default::default()
                };
                TRACK_STEPS
            ],
        }
    }

    fn scenario() -> Scenario {
        Scenario {
            scenario_id: "s".into(),
            split: Split::Val,
            tracks: vec![track(1), track(2)],
            prediction_targets: vec![2],
        }
    }

    #[test]
    fn layout_constants() {
        assert_eq!(TRACK_STEPS, 91);
        assert_eq!(HISTORY_STEPS, 11);
        let t = track(1);
        assert_eq!(t.history().len(), 11);
        assert_eq!(t.future().len(), 80);
    }

    #[test]
    fn scenario_rules() {
        assert!(scenario().validate().is_ok());

        let mut s = scenario();
        s.tracks[1].states.pop();
        assert_eq!(s.validate().unwrap_err().field, "tracks[1].states");

        let mut s = scenario();
        s.prediction_targets.push(7);
        assert_eq!(s.validate().unwrap_err().field, "prediction_targets[1]");

        let mut s = scenario();
        s.tracks[1].agent_id = 1;
        assert!(s.validate().unwrap_err().message.contains("duplicate"));

        let mut s = scenario();
        s.tracks[1].states[CURRENT_INDEX].valid = false;
        assert!(s.validate().is_err());
    }

    #[test]
    fn prediction_rules() {
        let c = Candidate {
            confidence: 0.5,
            waypoints: vec![[0.0, 0.0]; FUTURE_STEPS],
        };
        let mut p = PredictionSet {
            scenario_id: "s".into(),
            agents: vec![AgentPrediction {
                agent_id: 2,
                candidates: vec![c.clone(); NUM_CANDIDATES],
            }],
        };
        assert!(p.validate().is_ok());
        p.agents[0].candidates[3].confidence = 1.5;
        assert_eq!(p.validate().unwrap_err().field, "agents[0].trajectories[3].confidence");
        p.agents[0].candidates.truncate(5);
        assert!(p.validate().is_err());
    }
}
