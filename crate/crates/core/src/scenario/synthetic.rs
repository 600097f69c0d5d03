use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    AgentState, AgentTrack, AgentType, Scenario, Split, CURRENT_INDEX, HISTORY_STEPS, STEP_SECONDS,
    TRACK_STEPS,
};

const MAX_TARGETS: usize = 8;

/// Closed-form planar motion. `t` is seconds since the first track step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    ConstantVelocity {
        x0: f64,
        y0: f64,
        vx: f64,
        vy: f64,
    },
    ConstantTurnRate {
        x0: f64,
        y0: f64,
        speed: f64,
        heading0: f64,
        yaw_rate: f64,
    },
    /// Moves at `speed`, halts during `[stop_start, stop_end)`, then resumes.
    StopAndGo {
        x0: f64,
        y0: f64,
        heading: f64,
        speed: f64,
        stop_start: f64,
        stop_end: f64,
    },
}

impl Motion {
    pub fn state_at(&self, t: f64) -> AgentState {
        match *self {
            Motion::ConstantVelocity { x0, y0, vx, vy } => AgentState {
                x: x0 + vx * t,
                y: y0 + vy * t,
                heading: vy.atan2(vx),
                velocity_x: vx,
                velocity_y: vy,
                valid: true,
            },
            Motion::ConstantTurnRate {
                x0,
                y0,
                speed,
                heading0,
                yaw_rate,
            } => {
                let heading = heading0 + yaw_rate * t;
                let r = speed / yaw_rate;
                AgentState {
                    x: x0 + r * (heading.sin() - heading0.sin()),
                    y: y0 - r * (heading.cos() - heading0.cos()),
                    heading,
                    velocity_x: speed * heading.cos(),
                    velocity_y: speed * heading.sin(),
                    valid: true,
                }
            }
            Motion::StopAndGo {
                x0,
                y0,
                heading,
                speed,
                stop_start,
                stop_end,
            } => {
                let moving = t < stop_start || t >= stop_end;
                let travelled = speed * (t.min(stop_start) + (t - stop_end).max(0.0));
                let v = if moving { speed } else { 0.0 };
                AgentState {
                    x: x0 + travelled * heading.cos(),
                    y: y0 + travelled * heading.sin(),
                    heading,
                    velocity_x: v * heading.cos(),
                    velocity_y: v * heading.sin(),
                    valid: true,
                }
            }
        }
    }
}

fn speed_range(agent_type: AgentType) -> (f64, f64) {
    match agent_type {
        AgentType::Vehicle => (0.0, 15.0),
        AgentType::Pedestrian => (0.2, 2.0),
        AgentType::Cyclist => (1.5, 7.0),
    }
}

fn random_motion(rng: &mut ChaCha8Rng, agent_type: AgentType) -> Motion {
    let (lo, hi) = speed_range(agent_type);
    let speed = rng.random_range(lo..hi);
    let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let x0 = rng.random_range(-60.0..60.0);
    let y0 = rng.random_range(-60.0..60.0);
    match rng.random_range(0..3) {
        0 => Motion::ConstantVelocity {
            x0,
            y0,
            vx: speed * heading.cos(),
            vy: speed * heading.sin(),
        },
        1 => {
            let magnitude = rng.random_range(0.05..0.4);
            Motion::ConstantTurnRate {
                x0,
                y0,
                speed,
                heading0: heading,
                yaw_rate: if rng.random_bool(0.5) { magnitude } else { -magnitude },
            }
        }
        _ => {
            let stop_start = rng.random_range(0.5..6.0);
            Motion::StopAndGo {
                x0,
                y0,
                heading,
                speed,
                stop_start,
                stop_end: stop_start + rng.random_range(0.5..3.0),
            }
        }
    }
}

/// Closed-form states with occasional dropouts. The current step is always
/// valid.
fn synth_track(rng: &mut ChaCha8Rng, agent_id: u64, agent_type: AgentType, motion: &Motion) -> AgentTrack {
    let mut states: Vec<AgentState> = (0..TRACK_STEPS)
        .map(|s| motion.state_at(s as f64 * STEP_SECONDS))
        .collect();
    if rng.random_bool(0.15) {
        let start = rng.random_range(HISTORY_STEPS..TRACK_STEPS);
        let len = rng.random_range(1..=30);
        for st in states.iter_mut().skip(start).take(len) {
            *st = AgentState::default();
        }
    }
    if rng.random_bool(0.1) {
        let n = rng.random_range(1..CURRENT_INDEX);
        for st in states.iter_mut().take(n) {
            *st = AgentState::default();
        }
    }
    AgentTrack {
        agent_id,
        agent_type,
        states,
    }
}

/// Scenarios together with the motion model behind every track.
pub fn gen_synthetic_detailed(
    seed: u64,
    n_scenarios: usize,
    agents_per_scene: usize,
) -> Vec<(Scenario, Vec<Motion>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_val = n_scenarios * 15 / 100;
    let n_test = n_scenarios * 15 / 100;
    let mut splits: Vec<Split> = std::iter::repeat_n(Split::Val, n_val)
        .chain(std::iter::repeat_n(Split::Test, n_test))
        .chain(std::iter::repeat_n(Split::Train, n_scenarios - n_val - n_test))
        .collect();
    splits.shuffle(&mut rng);

    splits
        .into_iter()
        .enumerate()
        .map(|(i, split)| {
            let mut tracks = Vec::with_capacity(agents_per_scene);
            let mut motions = Vec::with_capacity(agents_per_scene);
            for j in 0..agents_per_scene {
                let agent_type = AgentType::ALL[rng.random_range(0..3)];
                let motion = random_motion(&mut rng, agent_type);
                tracks.push(synth_track(&mut rng, 100 + j as u64, agent_type, &motion));
                motions.push(motion);
            }
            let prediction_targets = tracks
                .iter()
                .take(MAX_TARGETS)
                .map(|t| t.agent_id)
                .collect();
            let scenario = Scenario {
                scenario_id: format!("syn-{seed}-{i:06}"),
                split,
                tracks,
                prediction_targets,
            };
            (scenario, motions)
        })
        .collect()
}

/// Deterministic corpus of constant-velocity, constant-turn-rate and
/// stop-and-go agents, split 70/15/15 into train/val/test.
pub fn gen_synthetic(seed: u64, n_scenarios: usize, agents_per_scene: usize) -> Vec<Scenario> {
    gen_synthetic_detailed(seed, n_scenarios, agents_per_scene)
        .into_iter()
        .map(|(s, _)| s)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(gen_synthetic(7, 20, 5), gen_synthetic(7, 20, 5));
        assert_ne!(gen_synthetic(7, 20, 5), gen_synthetic(8, 20, 5));
    }

    #[test]
    fn split_proportions() {
        let corpus = gen_synthetic(3, 1000, 1);
        let count = |s| corpus.iter().filter(|c| c.split == s).count();
        assert_eq!(
            (count(Split::Train), count(Split::Val), count(Split::Test)),
            (700, 150, 150)
        );
    }

    #[test]
    fn constant_velocity_closed_form() {
        let m = Motion::ConstantVelocity {
            x0: 1.0,
            y0: -3.0,
            vx: 2.0,
            vy: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let track = loop {
            let t = synth_track(&mut rng, 1, AgentType::Vehicle, &m);
            if t.states.iter().all(|s| s.valid) {
                break t;
            }
        };
        let x10 = track.current().x;
        for (i, s) in track.future().iter().enumerate() {
            assert!((s.x - (x10 + 2.0 * 0.1 * (i + 1) as f64)).abs() < 1e-9);
            assert_eq!(s.y, -3.0);
        }
    }

    #[test]
    fn futures_match_their_motion() {
        for (scenario, motions) in gen_synthetic_detailed(11, 50, 6) {
            assert!(scenario.validate().is_ok());
            for (track, motion) in scenario.tracks.iter().zip(&motions) {
                assert!(track.current().valid);
                for (s, st) in track.states.iter().enumerate().filter(|(_, st)| st.valid) {
                    let want = motion.state_at(s as f64 * STEP_SECONDS);
                    assert!((st.x - want.x).abs() < 1e-9);
                    assert!((st.y - want.y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn turn_rate_is_a_circle() {
        let m = Motion::ConstantTurnRate {
            x0: 0.0,
            y0: 0.0,
            speed: 5.0,
            heading0: 0.0,
            yaw_rate: 0.5,
        };
        // Radius 10 circle centered at (0, 10).
        for k in 0..20 {
            let s = m.state_at(k as f64 * 0.37);
            assert!(((s.x).hypot(s.y - 10.0) - 10.0).abs() < 1e-9);
            assert!((s.velocity_x.hypot(s.velocity_y) - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stop_and_go_halts() {
        let m = Motion::StopAndGo {
            x0: 0.0,
            y0: 0.0,
            heading: 0.0,
            speed: 2.0,
            stop_start: 1.0,
            stop_end: 2.0,
        };
        assert_eq!(m.state_at(1.5).x, 2.0);
        assert_eq!(m.state_at(1.5).velocity_x, 0.0);
        assert_eq!(m.state_at(3.0).x, 4.0);
    }
}
