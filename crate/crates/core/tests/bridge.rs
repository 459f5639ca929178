mod common;

use std::time::{Duration, Instant};

use gpscale::domains::{self, GeneratorInput};
use gpscale::policy::{BridgeCommand, BridgePolicy, FirstSuccessorPolicy, PolicySpec};
use gpscale::runner::{rollout_rng, run_policy, run_policy_with, RunOptions, Termination};

fn bridge(mode: &str) -> BridgePolicy {
    BridgePolicy::new(BridgeCommand::new(common::bridge_argv(mode)).with_timeout(Duration::from_secs(10)))
}

#[test]
fn first_mode_matches_first_successor_policy() {
    let mut remote = bridge("first");
    for (id, input) in [
        ("gripper", GeneratorInput::default().with("balls", 2)),
        ("blocksworld", GeneratorInput::default().with("blocks", 4)),
        ("ferry", GeneratorInput::default().with("cars", 2).with("locations", 3)),
    ] {
        for seed in 0..3 {
            let inst = domains::generate_instance(id, &input, seed).unwrap();
            let opts = RunOptions { record_trace: true };
            let a = run_policy_with(&mut remote, &inst, 30, &mut rollout_rng(&inst, 0), opts);
            let b = run_policy_with(&mut FirstSuccessorPolicy, &inst, 30, &mut rollout_rng(&inst, 0), opts);
            assert_eq!(a.trace_digests, b.trace_digests, "{id} seed {seed}");
            assert_eq!(a.termination, b.termination);
        }
    }
}

#[test]
fn heuristic_values_solve_gripper_one_ball() {
    let inst = common::gripper(1, 2);
    let mut remote = bridge("goal-count");
    let run = run_policy(&mut remote, &inst, 20, &mut rollout_rng(&inst, 0));
    assert!(run.solved, "{:?} {:?}", run.termination, run.error);
}

#[test]
fn null_index_means_no_choice() {
    let inst = common::gripper(1, 2);
    let run = run_policy(&mut bridge("null"), &inst, 20, &mut rollout_rng(&inst, 0));
    assert_eq!(run.termination, Termination::NoChoice);
    assert!(!run.solved);
}

#[test]
fn misbehaving_peers_become_policy_errors() {
    let inst = common::gripper(1, 2);
    for mode in ["out-of-range", "forbidden", "malformed", "crash"] {
        let run = run_policy(&mut bridge(mode), &inst, 20, &mut rollout_rng(&inst, 0));
        assert_eq!(run.termination, Termination::PolicyError, "{mode}");
        assert!(!run.solved);
        assert!(run.error.is_some(), "{mode}");
    }
}

#[test]
fn crash_reports_stderr() {
    let inst = common::gripper(1, 2);
    let run = run_policy(&mut bridge("crash"), &inst, 20, &mut rollout_rng(&inst, 0));
    assert!(run.error.unwrap().contains("fixture crashed on purpose"));
}

#[test]
fn slow_peer_times_out() {
    let inst = common::gripper(1, 2);
    let mut slow = BridgePolicy::new(BridgeCommand::new(common::bridge_argv("timeout")).with_timeout(Duration::from_millis(300)));
    let start = Instant::now();
    let run = run_policy(&mut slow, &inst, 20, &mut rollout_rng(&inst, 0));
    assert_eq!(run.termination, Termination::PolicyError);
    assert!(run.error.unwrap().contains("timed out"));
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_program_is_a_policy_error() {
    let inst = common::gripper(1, 2);
    let mut p = BridgePolicy::new(BridgeCommand::new(vec!["/nonexistent/peer".into()]));
    let run = run_policy(&mut p, &inst, 20, &mut rollout_rng(&inst, 0));
    assert_eq!(run.termination, Termination::PolicyError);
}

#[test]
fn session_is_reused_across_rollouts() {
    let inst = common::gripper(1, 2);
    let mut p = bridge("first");
    for _ in 0..3 {
        let run = run_policy(&mut p, &inst, 20, &mut rollout_rng(&inst, 0));
        assert_ne!(run.termination, Termination::PolicyError);
    }
}

#[test]
fn bridge_spec_builds_from_short_form() {
    let argv = common::bridge_argv("first").join(" ");
    let spec = PolicySpec::parse(&format!("bridge:{argv}")).unwrap();
    let mut p = spec.build().unwrap();
    let inst = common::gripper(1, 2);
    let run = run_policy(p.as_mut(), &inst, 20, &mut rollout_rng(&inst, 0));
    assert_ne!(run.termination, Termination::PolicyError);
}
