mod common;

use common::*;
use proptest::prelude::*;
use wlkit::metrics::{evaluate, is_match, min_ade, Horizon, MatchThresholds};
use wlkit::scenario::{
    constant_velocity_predictions, gen_synthetic, AgentState, AgentTrack, AgentType, Candidate,
    CURRENT_INDEX,
};

/// Every report cell recomputed from the brute-force pieces.
#[test]
fn evaluate_matches_composed_oracles() {
    let corpus = gen_synthetic(31, 200, 6);
    let mut preds = constant_velocity_predictions(&corpus);
    // distinct confidences across agents so ranking needs no tie-break
    let mut n = 0u32;
    for a in preds.iter_mut().flat_map(|p| p.agents.iter_mut()) {
        n += 1;
        let scale = 1.0 / (1.0 + f64::from(n) * 1e-3);
        for c in &mut a.candidates {
            c.confidence *= scale;
        }
    }
    let thr = MatchThresholds::default();
    let report = evaluate(&corpus, &preds, &thr).unwrap();

    let agents: Vec<(&AgentTrack, &[Candidate])> = corpus
        .iter()
        .zip(&preds)
        .flat_map(|(s, p)| {
            p.agents
                .iter()
                .map(move |a| (s.track(a.agent_id).unwrap(), a.candidates.as_slice()))
        })
        .collect();
    for ty in AgentType::ALL {
        for h in Horizon::ALL {
            let of: Vec<(&AgentTrack, &[Candidate])> = agents
                .iter()
                .copied()
                .filter(|(t, _)| t.agent_type == ty)
                .filter(|(t, _)| gt_future(t)[horizon_steps(h) - 1].valid)
                .collect();
            let cell = report.cell(ty, h);
            assert_eq!(cell.agents, of.len());
            let ades: Vec<f64> = of
                .iter()
                .map(|(t, c)| oracle_min_ade(c, gt_future(t), horizon_steps(h)).unwrap())
                .collect();
            let mean_ade = ades.iter().sum::<f64>() / ades.len() as f64;
            assert!((cell.min_ade.unwrap() - mean_ade).abs() < 1e-9, "{ty} {h}");
            assert!(close(cell.miss_rate, oracle_miss_rate(&of, h, &thr), 1e-12), "{ty} {h}");
            assert!(close(cell.mean_ap, oracle_map(&of, h, &thr), 1e-12), "{ty} {h}");
        }
    }
    for h in Horizon::ALL {
        let avg = report.average(Some(h));
        let cells: Vec<_> = AgentType::ALL.iter().map(|&ty| report.cell(ty, h)).collect();
        let mr = cells.iter().map(|c| c.miss_rate.unwrap()).sum::<f64>() / 3.0;
        assert!((avg.miss_rate.unwrap() - mr).abs() < 1e-12);
    }
}

#[test]
fn min_ade_matches_enumeration_on_random_pairs() {
    for seed in 0..20 {
        let (s, p) = random_instance(1000 + seed, 1, "x");
        let t = &s.tracks[0];
        let c = &p.agents[0].candidates;
        for steps in [30, 50, 80] {
            assert!(close(
                min_ade(c, gt_future(t), steps),
                oracle_min_ade(c, gt_future(t), steps),
                1e-12
            ));
        }
    }
}

#[test]
fn constant_offsets_give_closed_form_ade() {
    let (s, _) = random_instance(5, 1, "x");
    let mut t = s.tracks[0].clone();
    for st in &mut t.states {
        st.valid = true;
    }
    let shifted = |d: f64| Candidate {
        confidence: 0.5,
        waypoints: t.states[CURRENT_INDEX + 1..].iter().map(|g| [g.x + d, g.y]).collect(),
    };
    let ade = min_ade(&[shifted(2.0), shifted(1.0)], gt_future(&t), 80).unwrap();
    assert!((ade - 1.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]
    #[test]
    fn is_match_agrees_with_polar_recheck(
        dx in -8.0f64..8.0,
        dy in -8.0f64..8.0,
        heading in -3.2f64..3.2,
        speed in 0.0f64..4.0,
        h in 0usize..3,
    ) {
        let thr = MatchThresholds::default();
        let gt = AgentState { x: 3.0, y: -2.0, heading, velocity_x: 0.0, velocity_y: 0.0, valid: true };
        let pred = [gt.x + dx, gt.y + dy];
        let horizon = Horizon::ALL[h];
        prop_assert_eq!(
            is_match(pred, [gt.x, gt.y], heading, horizon, speed, &thr),
            oracle_is_match(pred, &gt, horizon, speed, &thr)
        );
    }
}
