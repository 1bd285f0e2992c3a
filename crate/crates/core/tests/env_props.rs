use std::collections::BTreeSet;
use std::sync::Arc;

use deckscan::detect::OracleDetector;
use deckscan::env::{Action, BridgeEnv, DetectorKind, ScenarioConfig, R_CRACK, R_EPISODE_END, R_NEW_LOCATION};
use deckscan::rng::stream;
use proptest::prelude::*;
use rand::Rng;

fn env(cfg: ScenarioConfig, flip: f64) -> BridgeEnv {
    BridgeEnv::new(cfg, Arc::new(OracleDetector { flip })).unwrap()
}

fn scenario() -> impl Strategy<Value = ScenarioConfig> {
    (0usize..8, 0usize..3, 0usize..4, 1u32..6, 20u32..300, any::<u64>(), any::<bool>()).prop_map(
        |(n_cracks, n_false_cracks, n_cars, pause_limit, max_steps, seed, temporal_penalty_on_pause)| ScenarioConfig {
            n_cracks,
            n_false_cracks,
            n_cars,
            pause_limit,
            max_steps,
            seed,
            temporal_penalty_on_pause,
            detector: DetectorKind::Oracle,
            ..Default::default()
        },
    )
}

/// Plays one episode with uniformly random legal actions.
fn play(e: &mut BridgeEnv, seed: u64) -> Vec<(Action, deckscan::env::StepOutcome)> {
    let mut rng = stream(seed, &[]);
    let mut out = Vec::new();
    loop {
        let mask = e.action_mask();
        let legal: Vec<Action> = Action::ALL.into_iter().filter(|a| mask[a.index()]).collect();
        let a = legal[rng.random_range(0..legal.len())];
        let o = e.step(a).unwrap();
        let done = o.done;
        out.push((a, o));
        if done {
            return out;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episode_invariants(cfg in scenario(), flip in prop_oneof![Just(0.0), 0.0..0.3f64], policy_seed in any::<u64>()) {
        let mut e = env(cfg.clone(), flip);
        let mut seen = BTreeSet::new();
        let mut steps = 0u32;
        let mut pauses_in_row = 0u32;
        let trace = play(&mut e, policy_seed);
        for (i, (a, o)) in trace.iter().enumerate() {
            steps += 1;
            let s = e.state();
            let r = &o.reward;
            prop_assert_eq!(r.total, r.component_sum());
            for id in &o.info.new_cracks {
                prop_assert!(seen.insert(*id), "crack {} rewarded twice", id);
            }
            let fp = if o.info.false_positive { cfg.false_positive_penalty } else { 0 };
            prop_assert_eq!(r.r_c, R_CRACK * o.info.new_cracks.len() as i64 - fp);
            prop_assert!(r.r_nl == 0 || r.r_nl == R_NEW_LOCATION);
            prop_assert!(!o.info.scanned || !o.info.blocked);
            pauses_in_row = if *a == Action::Pause { pauses_in_row + 1 } else { 0 };
            prop_assert!(pauses_in_row <= cfg.pause_limit);
            let last = i + 1 == trace.len();
            prop_assert_eq!(o.done, last);
            prop_assert_eq!(r.r_e == R_EPISODE_END, last && s.fully_covered());
        }
        let s = e.state();
        prop_assert!(s.uav.x < e.world().cols && s.uav.y < e.world().rows);
        prop_assert!(s.fully_covered() || steps == cfg.max_steps);
        prop_assert!(steps <= cfg.max_steps);
        prop_assert_eq!(s.step, steps);
        prop_assert_eq!(&seen, &s.detected);
        prop_assert!(s.detected.len() <= cfg.n_cracks);
        prop_assert!(e.step(Action::Up).is_err());
    }

    #[test]
    fn trajectories_are_deterministic(cfg in scenario(), policy_seed in any::<u64>()) {
        let mut a = env(cfg.clone(), 0.1);
        let mut b = env(cfg, 0.1);
        prop_assert_eq!(play(&mut a, policy_seed), play(&mut b, policy_seed));
        prop_assert_eq!(a.state(), b.state());
        a.reset().unwrap();
        b.reset().unwrap();
        prop_assert_eq!(a.world().cracks.clone(), b.world().cracks.clone());
        prop_assert_eq!(play(&mut a, policy_seed ^ 1), play(&mut b, policy_seed ^ 1));
    }

    #[test]
    fn exact_oracle_finds_every_crack_on_full_coverage(seed in any::<u64>(), n_cracks in 0usize..10) {
        let cfg = ScenarioConfig { n_cracks, n_cars: 0, seed, detector: DetectorKind::Oracle, ..Default::default() };
        let mut e = env(cfg, 0.0);
        let (cols, rows) = (e.world().cols, e.world().rows);
        // Boustrophedon sweep: 47 moves cover the 8 x 6 grid without revisits.
        let mut total = 0i64;
        for y in 0..rows {
            for _ in 1..cols {
                total += e.step(if y % 2 == 0 { Action::Right } else { Action::Left }).unwrap().reward.total;
            }
            if y + 1 < rows {
                total += e.step(Action::Up).unwrap().reward.total;
            }
        }
        let s = e.state();
        prop_assert!(s.done && s.fully_covered());
        prop_assert_eq!(s.detected.len(), n_cracks);
        let moves = (cols * rows - 1) as i64;
        prop_assert_eq!(total, moves * (R_NEW_LOCATION - 1) + R_CRACK * n_cracks as i64 + R_EPISODE_END);
    }
}
