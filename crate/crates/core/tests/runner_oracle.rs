mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use gpscale::domains::{self, GeneratorInput};
use gpscale::oracle;
use gpscale::planning::{is_goal, successors};
use gpscale::policy::{oracle_greedy_policy, FirstSuccessorPolicy, RandomPolicy};
use gpscale::runner::{rollout_rng, run_policy, run_policy_with, RunOptions, Termination};

#[test]
fn value_table_agrees_with_bfs_plans() {
    for inst in [common::gripper(1, 1), common::gripper(2, 1), common::swap_two_blocks()] {
        let table = oracle::optimal_values(&inst).unwrap();
        let plan = oracle::optimal_plan(&inst, 100).unwrap().unwrap();
        assert_eq!(table.init_value(), plan.len() as f64);
        // values drop by exactly one along an optimal plan
        let states = oracle::plan_states(&inst, &plan);
        for (i, s) in states.iter().enumerate() {
            assert_eq!(table.get(s), Some((plan.len() - i) as f64));
        }
        // Bellman consistency over every reachable state
        let graph = oracle::explore(&inst, 100_000).unwrap();
        for s in &graph.states {
            let v = table.get(s).unwrap();
            if is_goal(&inst, s) {
                assert_eq!(v, 0.0);
                continue;
            }
            let best = successors(&inst, s)
                .iter()
                .map(|(_, t)| table.get(t).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(v, best + 1.0);
        }
    }
}

#[test]
fn oracle_greedy_is_optimal_on_small_instances() {
    for (id, input) in [
        ("ferry", GeneratorInput::default().with("cars", 2).with("locations", 3)),
        ("blocksworld", GeneratorInput::default().with("blocks", 4)),
        ("gripper", GeneratorInput::default().with("balls", 3)),
    ] {
        for seed in 0..4 {
            let inst = domains::generate_instance(id, &input, seed).unwrap();
            let opt = oracle::optimal_plan(&inst, 200).unwrap().unwrap().len();
            let mut p = oracle_greedy_policy();
            let run = run_policy(&mut p, &inst, 200, &mut rollout_rng(&inst, 0));
            assert!(run.solved, "{id} seed {seed}");
            assert_eq!(run.steps, opt, "{id} seed {seed}");
        }
    }
}

#[test]
fn bound_is_exact() {
    let inst = common::gripper(2, 1);
    let mut p = oracle_greedy_policy();
    let run = run_policy(&mut p, &inst, 5, &mut rollout_rng(&inst, 0));
    assert!(run.solved);
    let run = run_policy(&mut p, &inst, 4, &mut rollout_rng(&inst, 0));
    assert_eq!(run.termination, Termination::LengthBound);
    assert_eq!(run.steps, 4);
}

#[test]
fn goal_at_the_start_takes_zero_steps() {
    let doc = r#"{
        "domain": "blocksworld",
        "objects": [{"name": "b1", "type": "block"}, {"name": "b2", "type": "block"}],
        "init": [["on", "b1", "b2"], ["ontable", "b2"], ["clear", "b1"], ["handempty"]],
        "goal": [["on", "b1", "b2"]],
        "generator_input": {"blocks": 2},
        "seed": 0
    }"#;
    let inst = gpscale::planning::Instance::from_json(doc).unwrap();
    let run = run_policy(&mut FirstSuccessorPolicy, &inst, 0, &mut rollout_rng(&inst, 0));
    assert!(run.solved);
    assert_eq!(run.steps, 0);
}

#[test]
fn traces_record_plans_and_digests() {
    let inst = common::swap_two_blocks();
    let mut p = oracle_greedy_policy();
    let run = run_policy_with(&mut p, &inst, 10, &mut rollout_rng(&inst, 0), RunOptions { record_trace: true });
    let plan = run.plan.unwrap();
    assert_eq!(plan.len(), 4);
    assert_eq!(plan[0], "(unstack b1 b2)");
    assert_eq!(run.trace_digests.unwrap().len(), 5);
}

#[test]
fn same_salt_replays_the_same_random_rollout() {
    let inst = domains::generate_instance("ferry", &GeneratorInput::default().with("cars", 3).with("locations", 3), 7).unwrap();
    let go = |salt| {
        run_policy_with(&mut RandomPolicy, &inst, 40, &mut rollout_rng(&inst, salt), RunOptions { record_trace: true })
            .trace_digests
            .unwrap()
    };
    assert_eq!(go(1), go(1));
    assert!((2..20).any(|s| go(s) != go(1)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_rollouts_never_revisit_states(seed in any::<u64>(), salt in any::<u64>(), blocks in 2i64..6, bound in 0usize..60) {
        let inst = domains::generate_instance("blocksworld", &GeneratorInput::default().with("blocks", blocks), seed).unwrap();
        let run = run_policy_with(&mut RandomPolicy, &inst, bound, &mut rollout_rng(&inst, salt), RunOptions { record_trace: true });
        let trace = run.trace_digests.unwrap();
        let unique: HashSet<u64> = trace.iter().copied().collect();
        prop_assert_eq!(unique.len(), trace.len());
        prop_assert!(run.steps <= bound);
        prop_assert_eq!(run.solved, run.termination == Termination::Goal);
        match run.termination {
            Termination::LengthBound => prop_assert_eq!(run.steps, bound),
            Termination::Goal | Termination::NoChoice | Termination::DeadEnd => {}
            Termination::PolicyError => prop_assert!(false, "random policy errored"),
        }
    }
}
