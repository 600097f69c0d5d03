use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::{detection, ap_from_detections, mean, min_ade, Detection, Horizon, MatchThresholds, Target};
use crate::scenario::{AgentType, PredictionSet, Scenario};

/// Column header of [`MetricsReport::to_table`].
pub const TABLE_HEADER: &str = "agent_type\thorizon\tmetric\tvalue\tagents";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricCell {
    pub agent_type: AgentType,
    pub horizon: Horizon,
    /// Agents with a valid ground truth at the horizon step.
    pub agents: usize,
    pub min_ade: Option<f64>,
    pub miss_rate: Option<f64>,
    #[serde(rename = "map")]
    pub mean_ap: Option<f64>,
}

/// Means over the agent types that have data. `horizon` is `None` for the
/// mean over all three horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonAverage {
    pub horizon: Option<Horizon>,
    pub agents: usize,
    pub min_ade: Option<f64>,
    pub miss_rate: Option<f64>,
    #[serde(rename = "map")]
    pub mean_ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Agent type major, horizon minor.
    pub cells: Vec<MetricCell>,
    /// One per horizon followed by the overall mean.
    pub averages: Vec<HorizonAverage>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceProblems {
    pub unknown_scenarios: Vec<String>,
    pub duplicate_scenarios: Vec<String>,
    pub unknown_agents: Vec<(String, u64)>,
    pub duplicate_agents: Vec<(String, u64)>,
    pub missing_targets: Vec<(String, u64)>,
}

impl ReferenceProblems {
    fn is_empty(&self) -> bool {
        self.unknown_scenarios.is_empty()
            && self.duplicate_scenarios.is_empty()
            && self.unknown_agents.is_empty()
            && self.duplicate_agents.is_empty()
            && self.missing_targets.is_empty()
    }
}

fn join_agents(ids: &[(String, u64)]) -> String {
    ids.iter()
        .map(|(s, a)| format!("{s}/{a}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for ReferenceProblems {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.unknown_scenarios.is_empty() {
            parts.push(format!("unknown scenarios: {}", self.unknown_scenarios.join(", ")));
        }
        if !self.duplicate_scenarios.is_empty() {
            parts.push(format!(
                "duplicate scenario predictions: {}",
                self.duplicate_scenarios.join(", ")
            ));
        }
        if !self.unknown_agents.is_empty() {
            parts.push(format!("non-target agents: {}", join_agents(&self.unknown_agents)));
        }
        if !self.duplicate_agents.is_empty() {
            parts.push(format!("duplicate agent predictions: {}", join_agents(&self.duplicate_agents)));
        }
        if !self.missing_targets.is_empty() {
            parts.push(format!("targets without predictions: {}", join_agents(&self.missing_targets)));
        }
        f.write_str(&parts.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("duplicate scenario ids in corpus: {}", .0.join(", "))]
    DuplicateScenarios(Vec<String>),
    #[error("invalid scenario {scenario_id}: {field}: {message}")]
    InvalidScenario {
        scenario_id: String,
        field: String,
        message: String,
    },
    #[error("invalid predictions for scenario {scenario_id}: {field}: {message}")]
    InvalidPrediction {
        scenario_id: String,
        field: String,
        message: String,
    },
    #[error("bad prediction references: {0}")]
    References(ReferenceProblems),
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

/// Pairs every prediction target with its candidates, checking that each
/// reference resolves exactly once.
fn resolve<'a>(
    corpus: &'a [Scenario],
    predictions: &'a [PredictionSet],
) -> Result<Vec<Target<'a>>, EvalError> {
    let mut by_id: HashMap<&str, &Scenario> = HashMap::new();
    let mut dup_corpus = BTreeSet::new();
    for s in corpus {
        if by_id.insert(&s.scenario_id, s).is_some() {
            dup_corpus.insert(s.scenario_id.clone());
        }
        s.validate().map_err(|v| EvalError::InvalidScenario {
            scenario_id: s.scenario_id.clone(),
            field: v.field,
            message: v.message,
        })?;
    }
    if !dup_corpus.is_empty() {
        return Err(EvalError::DuplicateScenarios(dup_corpus.into_iter().collect()));
    }

    let mut problems = ReferenceProblems::default();
    let mut seen_sets = BTreeSet::new();
    let mut resolved: HashMap<(&str, u64), &[crate::scenario::Candidate]> = HashMap::new();
    for p in predictions {
        p.validate().map_err(|v| EvalError::InvalidPrediction {
            scenario_id: p.scenario_id.clone(),
            field: v.field,
            message: v.message,
        })?;
        let Some(s) = by_id.get(p.scenario_id.as_str()) else {
            problems.unknown_scenarios.push(p.scenario_id.clone());
            continue;
        };
        if !seen_sets.insert(p.scenario_id.as_str()) {
            problems.duplicate_scenarios.push(p.scenario_id.clone());
            continue;
        }
        for a in &p.agents {
            if !s.prediction_targets.contains(&a.agent_id) {
                problems.unknown_agents.push((p.scenario_id.clone(), a.agent_id));
            } else if resolved
                .insert((s.scenario_id.as_str(), a.agent_id), &a.candidates)
                .is_some()
            {
                problems.duplicate_agents.push((p.scenario_id.clone(), a.agent_id));
            }
        }
    }

    let mut targets = Vec::new();
    for s in corpus {
        for &id in &s.prediction_targets {
            match resolved.get(&(s.scenario_id.as_str(), id)) {
                Some(candidates) => targets.push(Target {
                    scenario_id: &s.scenario_id,
                    track: s.track(id).expect("validated target"),
                    candidates,
                }),
                None => problems.missing_targets.push((s.scenario_id.clone(), id)),
            }
        }
    }
    if problems.is_empty() {
        Ok(targets)
    } else {
        Err(EvalError::References(problems))
    }
}

struct AgentRecord<'a> {
    key: (&'a str, u64),
    agent_type: AgentType,
    /// Per horizon; `None` when the horizon step is invalid.
    horizons: [Option<(f64, bool, Detection<'a>)>; 3],
}

fn record<'a>(t: &Target<'a>, thresholds: &MatchThresholds) -> AgentRecord<'a> {
    AgentRecord {
        key: (t.scenario_id, t.track.agent_id),
        agent_type: t.agent_type(),
        horizons: Horizon::ALL.map(|h| {
            let det = detection(t, h, thresholds)?;
            let ade = min_ade(t.candidates, t.track.future(), h.steps())?;
            let hit = (0..t.candidates.len()).any(|k| t.candidate_matches(k, h, thresholds));
            Some((ade, !hit, det))
        }),
    }
}

/// Marginal minADE, miss rate and mAP for every agent type and horizon.
///
/// Per-agent work runs on the current rayon pool. Agents are reduced in
/// (scenario id, agent id) order, so the report does not depend on input
/// order or thread count.
pub fn evaluate(
    corpus: &[Scenario],
    predictions: &[PredictionSet],
    thresholds: &MatchThresholds,
) -> Result<MetricsReport, EvalError> {
    thresholds
        .validate()
        .map_err(|e| EvalError::Thresholds(e.to_string()))?;
    let targets = resolve(corpus, predictions)?;
    let mut records: Vec<AgentRecord> = targets.par_iter().map(|t| record(t, thresholds)).collect();
    records.sort_by(|a, b| a.key.cmp(&b.key));

    let mut cells = Vec::with_capacity(9);
    for ty in AgentType::ALL {
        for h in Horizon::ALL {
            let rows: Vec<_> = records
                .iter()
                .filter(|r| r.agent_type == ty)
                .filter_map(|r| r.horizons[h.index()])
                .collect();
            let n = rows.len();
            cells.push(MetricCell {
                agent_type: ty,
                horizon: h,
                agents: n,
                min_ade: mean(rows.iter().map(|r| r.0)),
                miss_rate: (n > 0).then(|| rows.iter().filter(|r| r.1).count() as f64 / n as f64),
                mean_ap: ap_from_detections(rows.iter().map(|r| r.2).collect()),
            });
        }
    }

    let mut averages: Vec<HorizonAverage> = Horizon::ALL
        .iter()
        .map(|&h| {
            let of_h: Vec<&MetricCell> = cells.iter().filter(|c| c.horizon == h).collect();
            HorizonAverage {
                horizon: Some(h),
                agents: of_h.iter().map(|c| c.agents).sum(),
                min_ade: mean(of_h.iter().filter_map(|c| c.min_ade)),
                miss_rate: mean(of_h.iter().filter_map(|c| c.miss_rate)),
                mean_ap: mean(of_h.iter().filter_map(|c| c.mean_ap)),
            }
        })
        .collect();
    averages.push(HorizonAverage {
        horizon: None,
        agents: averages.iter().map(|a| a.agents).sum(),
        min_ade: mean(averages.iter().filter_map(|a| a.min_ade)),
        miss_rate: mean(averages.iter().filter_map(|a| a.miss_rate)),
        mean_ap: mean(averages.iter().filter_map(|a| a.mean_ap)),
    });
    Ok(MetricsReport { cells, averages })
}

fn exact(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl MetricsReport {
    pub fn cell(&self, agent_type: AgentType, horizon: Horizon) -> &MetricCell {
        self.cells
            .iter()
            .find(|c| c.agent_type == agent_type && c.horizon == horizon)
            .expect("report covers every type and horizon")
    }

    pub fn average(&self, horizon: Option<Horizon>) -> &HorizonAverage {
        self.averages
            .iter()
            .find(|a| a.horizon == horizon)
            .expect("report covers every horizon")
    }

    /// Tab-separated, one row per agent type × horizon × metric, then the
    /// category averages (`average`) per horizon and over all horizons
    /// (`all`). Values print at full precision; `NA` marks empty cells.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(TABLE_HEADER);
        out.push('\n');
        let mut row = |ty: &str, h: &str, agents: usize, metrics: [Option<f64>; 3]| {
            for (name, v) in ["min_ade", "miss_rate", "map"].iter().zip(metrics) {
                let _ = writeln!(out, "{ty}\t{h}\t{name}\t{}\t{agents}", exact(v));
            }
        };
        for c in &self.cells {
            row(
                c.agent_type.name(),
                c.horizon.label(),
                c.agents,
                [c.min_ade, c.miss_rate, c.mean_ap],
            );
        }
        for a in &self.averages {
            row(
                "average",
                a.horizon.map_or("all", Horizon::label),
                a.agents,
                [a.min_ade, a.miss_rate, a.mean_ap],
            );
        }
        out
    }

    /// Aligned text: metric × agent type at 8 s for one model, followed by
    /// the cross-type averages per horizon.
    pub fn to_summary(&self, model: &str) -> String {
        let mut out = String::new();
        let model_w = model.len().max(5);
        let _ = writeln!(out, "Marginal metrics at 8s");
        let _ = write!(out, "{:model_w$}", "");
        for ty in AgentType::ALL {
            let _ = write!(out, " | {:<26}", capitalize(ty.name()));
        }
        out.push('\n');
        let _ = write!(out, "{:model_w$}", "Model");
        for _ in AgentType::ALL {
            let _ = write!(out, " | {:>8} {:>8} {:>8}", "minADE", "MR", "mAP");
        }
        out.push('\n');
        let _ = write!(out, "{model:model_w$}");
        for ty in AgentType::ALL {
            let c = self.cell(ty, Horizon::S8);
            let _ = write!(
                out,
                " | {:>8} {:>8} {:>8}",
                fixed(c.min_ade),
                fixed(c.miss_rate),
                fixed(c.mean_ap)
            );
        }
        out.push('\n');
        out.push('\n');
        let _ = writeln!(out, "Averaged over agent types");
        let _ = writeln!(
            out,
            "{:<8} {:>8} {:>8} {:>8} {:>8}",
            "horizon", "minADE", "MR", "mAP", "agents"
        );
        for a in &self.averages {
            let _ = writeln!(
                out,
                "{:<8} {:>8} {:>8} {:>8} {:>8}",
                a.horizon.map_or("mean", Horizon::label),
                fixed(a.min_ade),
                fixed(a.miss_rate),
                fixed(a.mean_ap),
                a.agents
            );
        }
        out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
    }

    /// Per-type agent counts at each horizon.
    pub fn agent_counts(&self) -> BTreeMap<(AgentType, Horizon), usize> {
        self.cells
            .iter()
            .map(|c| ((c.agent_type, c.horizon), c.agents))
            .collect()
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}
