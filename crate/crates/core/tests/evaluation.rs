mod common;

use gpscale::eval::{evaluate_scaling, plan_length_curve, EvalParams, EvalStop};
use gpscale::policy::{bernoulli_policy, BernoulliSpec, PolicySpec};
use gpscale::selection::{
    dynamic_coverage_validation, fixed_loss_validation, label_states, select_policy, DynamicStop, LossKind, Method,
    MethodInputs, ValidationParams,
};
use gpscale::stats::{self, SequentialParams};

fn fast() -> EvalParams {
    EvalParams {
        sequential: SequentialParams {
            min_samples: 20,
            ..Default::default()
        },
        l0: 200,
        ..Default::default()
    }
}

#[test]
fn fails_counter_resets_on_recovery() {
    // below at 4, above at 5, below at 6 and 7: only the final pair stops it
    let spec = BernoulliSpec::new("pattern", |n| if n == 4 || n >= 6 { 0.0 } else { 1.0 });
    let curve = evaluate_scaling(&mut bernoulli_policy(spec), "blocksworld", &fast()).unwrap();
    let sizes: Vec<usize> = curve.points.iter().map(|p| p.size).collect();
    assert_eq!(sizes, vec![2, 3, 4, 5, 6, 7]);
    assert_eq!(curve.stopped, EvalStop::ConsecutiveFails);
    assert_eq!(stats::scale_metric(&curve.coverage(), 0.3, 2).unwrap(), 5);
}

#[test]
fn skipped_sizes_stay_out_of_the_curve() {
    let mut p = bernoulli_policy(BernoulliSpec::stepwise(9, vec![]));
    let curve = evaluate_scaling(&mut p, "childsnack", &fast()).unwrap();
    // the smallest childsnack composition has size 8
    assert_eq!(curve.skipped_sizes, (2..8).collect::<Vec<_>>());
    assert!(curve.points.iter().all(|pt| !curve.skipped_sizes.contains(&pt.size)));
    assert_eq!(curve.points.first().unwrap().size, 8);
}

#[test]
fn estimates_satisfy_the_stopping_rule_post_hoc() {
    let mut p = bernoulli_policy(BernoulliSpec::new("mixed", |n| if n < 5 { 0.6 } else { 0.05 }));
    let params = fast();
    let curve = evaluate_scaling(&mut p, "gripper", &params).unwrap();
    for pt in &curve.points {
        let xs: Vec<f64> = pt.outcomes.iter().map(|&b| b as u8 as f64).collect();
        assert_eq!(xs.len(), pt.estimate.samples);
        assert_eq!(pt.solved, pt.outcomes.iter().filter(|&&b| b).count());
        let h = stats::half_width(&xs, params.sequential.kappa).unwrap();
        assert!((h - pt.estimate.half_width).abs() < 1e-9);
        assert!(h <= params.sequential.epsilon);
        let before = stats::half_width(&xs[..xs.len() - 1], params.sequential.kappa).unwrap();
        assert!(before > params.sequential.epsilon || xs.len() == params.sequential.min_samples);
    }
}

#[test]
fn evaluation_is_deterministic_in_the_seed() {
    let go = |seed| {
        let mut p = bernoulli_policy(BernoulliSpec::constant(0.5));
        let params = EvalParams { seed, max_size: 8, ..fast() };
        evaluate_scaling(&mut p, "ferry", &params).unwrap()
    };
    assert_eq!(go(3), go(3));
    assert_ne!(go(3), go(4));
}

#[test]
fn plan_lengths_follow_the_solved_runs() {
    let mut p = bernoulli_policy(BernoulliSpec::stepwise(8, vec![]));
    let curve = evaluate_scaling(&mut p, "gripper", &fast()).unwrap();
    let lengths = plan_length_curve(&curve);
    // constructive gripper plans for 1 to 4 balls, all optimal
    assert_eq!(lengths, vec![(5, 3.0), (6, 5.0), (7, 9.0), (8, 11.0)]);
}

#[test]
fn dynamic_validation_honours_max_size_and_tau_zero() {
    let mut p = bernoulli_policy(BernoulliSpec::constant(1.0));
    let params = ValidationParams {
        n0: 5,
        bound: 200,
        tau: 0.0,
        max_size: Some(9),
        ..Default::default()
    };
    let r = dynamic_coverage_validation(&mut p, "gripper", &params).unwrap();
    assert_eq!(r.stopped, DynamicStop::MaxSize);
    assert_eq!(r.score, 4.0);
    let unbounded = ValidationParams { max_size: None, ..params };
    assert!(dynamic_coverage_validation(&mut p, "gripper", &unbounded).is_err());
}

#[test]
fn dynamic_validation_skips_invalid_sizes() {
    let mut p = bernoulli_policy(BernoulliSpec::stepwise(9, vec![]));
    let params = ValidationParams { n0: 2, bound: 200, ..Default::default() };
    let r = dynamic_coverage_validation(&mut p, "childsnack", &params).unwrap();
    assert_eq!(r.sizes_skipped, (3..8).collect::<Vec<_>>());
    assert_eq!(r.score, 2.0);
}

#[test]
fn loss_ranks_value_errors() {
    let instances = vec![common::gripper(1, 1), common::gripper(2, 1)];
    let labeled = label_states(&instances).unwrap();
    for e in [0.0, 0.5, 2.0] {
        let mut p = bernoulli_policy(BernoulliSpec::constant(1.0)).with_value_error(e);
        let loss = fixed_loss_validation(&mut p, &labeled, LossKind::default()).unwrap();
        assert!((loss - e * e).abs() < 1e-9, "error {e}: loss {loss}");
    }
}

#[test]
fn selection_ties_keep_the_earlier_checkpoint() {
    let inputs = MethodInputs {
        domain: "gripper".into(),
        fixed_instances: vec![common::gripper(1, 1), common::gripper(2, 1)],
        fixed_bound: 100,
        dynamic: ValidationParams { n0: 6, bound: 200, ..Default::default() },
        ..Default::default()
    };
    let specs: Vec<PolicySpec> = ["stepwise:7", "stepwise:12", "stepwise:9"]
        .iter()
        .map(|s| PolicySpec::parse(s).unwrap())
        .collect();
    let fixed = select_policy(&specs, Method::Coverage, &inputs).unwrap();
    assert_eq!(fixed.scores, vec![1.0, 1.0, 1.0]);
    assert_eq!(fixed.best_index, 0);
    let dynamic = select_policy(&specs, Method::Dynamic, &inputs).unwrap();
    assert_eq!(dynamic.scores, vec![1.0, 6.0, 3.0]);
    assert_eq!(dynamic.best_index, 1);
}
