use super::*;
use crate::channel::{ArrayConfig, ScenarioParams};
use crate::evaluate::LinkBudget;
use proptest::prelude::*;

fn desk_geo() -> LpGeometry {
    LpGeometry::from_config(&ArrayConfig::desk(2.0), 2)
}

/// Report size on the desk array written out by hand: two line panels of
/// two ports, two beams, one panel co-phase.
fn desk_bits(c: [u32; 5]) -> u64 {
    let [lp, v, h, p, cph] = c.map(u64::from);
    2 * (v + h + 2 + 3 * (p + cph)) + lp
}

fn brute_states(budget: u32, min: [u32; 5]) -> Vec<BitAllocation> {
    let mut out = Vec::new();
    for lp in 0..=40 {
        for v in 0..=40 {
            for h in 0..=40 {
                for p in 0..=40 {
                    let c = [lp, v, h, p];
                    if desk_bits([lp, v, h, p, 0]) > budget as u64 || c.iter().zip(min).any(|(x, m)| *x < m) {
                        continue;
                    }
                    let best_c = (0..=40u32).rev().find(|&bc| desk_bits([lp, v, h, p, bc]) <= budget as u64);
                    if let Some(bc) = best_c.filter(|bc| *bc >= min[4]) {
                        out.push(BitAllocation::new(lp, v, h, p, bc));
                    }
                }
            }
        }
    }
    out.sort();
    out
}

#[test]
fn actions_are_indexed_in_order() {
    for (i, a) in Action::ALL.iter().enumerate() {
        assert_eq!(a.index(), i);
    }
    assert_eq!(Action::Stay.delta(), None);
    assert_eq!(Action::HDown.delta(), Some((2, -1)));
    assert_eq!(Action::PUp.label(), "B_p+");
}

#[test]
fn reward_cases() {
    assert_eq!(reward(5.0, 5.0, 5.0, 1.0, 1000.0).unwrap(), 2000.0);
    assert_eq!(reward(5.0, 5.0, 6.0, 1.0, 1000.0).unwrap(), 1000.0);
    assert_eq!(reward(2.5, 5.0, 6.0, 1.0, 1000.0).unwrap(), -1000.0);
    assert_eq!(reward(7.0, 5.0, 7.0, 0.5, 10.0).unwrap(), 10.0 * 0.5 * 5.0);
    // piecewise: just below the baseline falls into the log branch
    let below = reward(5.0 - 1e-9, 5.0, 6.0, 1.0, 1000.0).unwrap();
    assert!(below < 0.0 && below > -1e-3);
    assert!(reward(1.0, 0.0, 1.0, 1.0, 1.0).is_err());
    assert!(reward(1.0, 2.0, 3.0, 0.0, 1.0).is_err());
    assert!(reward(4.0, 2.0, 3.0, 1.0, 1.0).is_err());
}

#[test]
fn minimum_budget_has_one_state() {
    let env = AllocEnv::new(desk_geo(), 36, AllocBounds::standard()).unwrap();
    assert_eq!(env.minimum_budget(), 36);
    assert_eq!(env.states(), vec![BitAllocation::new(2, 0, 0, 3, 2)]);
    assert_eq!(env.initial_state(), BitAllocation::new(2, 0, 0, 3, 2));
    for a in Action::ALL {
        assert_eq!(env.step(env.initial_state(), a), env.initial_state());
    }
    let err = AllocEnv::new(desk_geo(), 35, AllocBounds::standard()).unwrap_err();
    assert!(err.to_string().contains("36"));
}

#[test]
fn states_match_brute_force() {
    for budget in [36, 38, 40, 44, 48] {
        let env = AllocEnv::new(desk_geo(), budget, AllocBounds::standard()).unwrap();
        assert!(env.states() == brute_states(budget, [2, 0, 0, 3, 2]), "budget {budget}");
        for s in env.states() {
            assert_eq!(s.lp_bits(&env.geo), desk_bits(s.components()));
        }
    }
    let env = AllocEnv::new(desk_geo(), 40, AllocBounds::standard()).unwrap();
    assert_eq!(env.states().len(), 14);
    for budget in [20, 30] {
        let env = AllocEnv::new(desk_geo(), budget, AllocBounds::reduced()).unwrap();
        assert!(env.states() == brute_states(budget, [0; 5]), "reduced budget {budget}");
    }
}

#[test]
fn step_examples() {
    let geo = desk_geo();
    let reduced = AllocEnv::new(geo, 40, AllocBounds::reduced()).unwrap();
    let s = reduced.initial_state();
    assert_eq!(s, BitAllocation::new(2, 0, 0, 3, 2));
    let next = env_step(s, Action::PUp, &reduced);
    let bc = (0..=40).rev().find(|&bc| desk_bits([2, 0, 0, 4, bc]) <= 40).unwrap();
    assert_eq!(next, BitAllocation::new(2, 0, 0, 4, bc));
    assert_eq!(bc, 1);
    assert_eq!(env_step(s, Action::Stay, &reduced), s);
    assert_eq!(env_step(s, Action::VDown, &reduced), s);

    // B_c may not drop below its standard minimum
    let standard = AllocEnv::new(geo, 40, AllocBounds::standard()).unwrap();
    assert_eq!(env_step(s, Action::PUp, &standard), s);
    assert_eq!(env_step(s, Action::LpDown, &standard), s);
    assert_eq!(env_step(s, Action::LpUp, &standard), BitAllocation::new(3, 0, 0, 3, 2));
}

#[test]
fn every_step_stays_feasible() {
    for bounds in [AllocBounds::standard(), AllocBounds::reduced()] {
        for budget in 36..=48 {
            let env = AllocEnv::new(desk_geo(), budget, bounds).unwrap();
            let states = env.states();
            for &s in &states {
                assert!(env.contains(s));
                for a in Action::ALL {
                    let n = env.step(s, a);
                    assert!(states.binary_search(&n).is_ok(), "{s:?} {a:?} -> {n:?}");
                    assert!(n.lp_bits(&env.geo) <= budget as u64);
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn random_walks_stay_feasible(budget in 36u32..64, actions in prop::collection::vec(0usize..ACTIONS, 0..60)) {
        let env = AllocEnv::new(desk_geo(), budget, AllocBounds::standard()).unwrap();
        let mut s = env.initial_state();
        for a in actions {
            s = env.step(s, Action::ALL[a]);
            prop_assert!(env.contains(s));
            prop_assert!(s.components().iter().zip(env.bounds.min.components()).all(|(v, m)| v >= &m));
        }
    }
}

fn transition(i: usize) -> Transition {
    Transition { state: [i as f64; 5], action: Action::Stay, reward: i as f64, next_state: [0.0; 5] }
}

#[test]
fn replay_is_fifo() {
    let mut mem = ReplayBuffer::new(3);
    for i in 0..5 {
        mem.push(transition(i));
        assert!(mem.len() <= 3);
    }
    let kept: Vec<f64> = mem.iter().map(|t| t.reward).collect();
    assert_eq!(kept, vec![2.0, 3.0, 4.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut got: Vec<f64> = mem.sample(10, &mut rng).iter().map(|t| t.reward).collect();
    got.sort_by(f64::total_cmp);
    assert_eq!(got, kept);
    assert_eq!(mem.sample(2, &mut rng).len(), 2);
}

/// Synthetic rate surface with its peak at `{4, 0, 1, 3, 2}`.
fn bowl(s: BitAllocation) -> Result<f64> {
    let d = |x: u32, c: f64| x as f64 - c;
    Ok(10.0 - 0.3 * d(s.b_lp, 4.0).powi(2) - 0.5 * s.b_v as f64 - 0.4 * d(s.b_h, 1.0).powi(2))
}

#[test]
fn agent_finds_the_peak() {
    let env = AllocEnv::new(desk_geo(), 40, AllocBounds::standard()).unwrap();
    let peak = env.states().into_iter().max_by(|a, b| bowl(*a).unwrap().total_cmp(&bowl(*b).unwrap())).unwrap();
    assert_eq!(peak, BitAllocation::new(4, 0, 1, 3, 2));
    let params = DqnParams::default();
    let run = run_algorithm1(&env, &mut bowl, &params, 11).unwrap();
    assert_eq!(run.best, peak);
    assert_eq!(run.best_rate, bowl(peak).unwrap());
    assert_eq!(run.initial, BitAllocation::new(2, 0, 0, 3, 2));
    assert_eq!(run.baseline_rate, bowl(run.initial).unwrap());
    assert!(run.g_max_trace.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(run.g_max_trace.len(), run.log.len());
    assert!(run.log.iter().all(|r| env.contains(BitAllocation::new(r.b_lp, r.b_v, r.b_h, r.b_p, r.b_c))));
    assert!(run.log.iter().all(|r| r.epsilon >= params.epsilon_min));
}

#[test]
fn training_is_deterministic() {
    let env = AllocEnv::new(desk_geo(), 40, AllocBounds::standard()).unwrap();
    let params = DqnParams { max_steps: 150, ..DqnParams::default() };
    let a = run_algorithm1(&env, &mut bowl, &params, 3).unwrap();
    let b = run_algorithm1(&env, &mut bowl, &params, 3).unwrap();
    assert_eq!(a, b);
    let c = run_algorithm1(&env, &mut bowl, &params, 4).unwrap();
    assert_ne!(a.log, c.log);
}

#[test]
fn patience_stops_training() {
    let env = AllocEnv::new(desk_geo(), 36, AllocBounds::standard()).unwrap();
    let params = DqnParams { patience: 25, ..DqnParams::default() };
    let run = run_algorithm1(&env, &mut |_| Ok(4.0), &params, 0).unwrap();
    assert_eq!(run.best, BitAllocation::new(2, 0, 0, 3, 2));
    assert_eq!(run.log.len(), 25);
    assert!(run.log.iter().all(|r| r.reward == 2000.0));
}

#[test]
fn bad_rates_abort() {
    let env = AllocEnv::new(desk_geo(), 40, AllocBounds::standard()).unwrap();
    let params = DqnParams { max_steps: 20, ..DqnParams::default() };
    assert!(run_algorithm1(&env, &mut |_| Ok(0.0), &params, 0).is_err());
    let mut calls = 0;
    let mut nan_later = |_| {
        calls += 1;
        Ok(if calls > 3 { f64::NAN } else { 1.0 })
    };
    assert!(matches!(run_algorithm1(&env, &mut nan_later, &params, 0), Err(Error::NonFinite(_))));
    let bad = DqnParams { gamma: 1.5, ..DqnParams::default() };
    assert!(run_algorithm1(&env, &mut bowl, &bad, 0).is_err());
}

#[test]
fn monte_carlo_oracle_caches() {
    let mc = MonteCarlo {
        config: ArrayConfig::desk(2.0),
        scenario: ScenarioParams::default(),
        link: LinkBudget::default(),
        trials: 4,
        seed: 9,
    };
    let mut oracle = LpSumRate::new(mc, CodebookOptions::default()).unwrap();
    let s = BitAllocation::new(2, 0, 0, 3, 2);
    let a = oracle.sum_rate(s).unwrap();
    let b = oracle.sum_rate(s).unwrap();
    assert_eq!(a, b);
    assert_eq!(oracle.evaluated(), 1);
    assert!(a > 0.0);
    assert_eq!(oracle.summary(s).unwrap().trials, 4);
}
