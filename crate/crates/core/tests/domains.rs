use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gpscale::csp;
use gpscale::domains::{self, build_instance_set, constructive_plan, descriptor, domain_ids, GeneratorInput};
use gpscale::oracle;
use gpscale::planning::{is_goal, replay, Instance};

/// The first `count` valid sizes of a domain, with one sampled input each.
fn sampled_instances(id: &str, count: usize, seed: u64) -> Vec<Instance> {
    let desc = descriptor(id).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut n = 0;
    while out.len() < count {
        n += 1;
        let all = csp::solve_all(&desc.csp, n).unwrap();
        if all.is_empty() {
            continue;
        }
        let a = csp::sample_uniform(&all, &mut rng).unwrap();
        let input = desc.input_from(a, &mut rng);
        let inst = domains::generate_instance(id, &input, seed ^ n).unwrap();
        assert_eq!(inst.size() as u64, n, "{id}: object count");
        out.push(inst);
    }
    out
}

#[test]
fn generated_sizes_match_the_csp() {
    for id in domain_ids() {
        sampled_instances(id, 12, 3);
    }
}

#[test]
fn constructive_plans_reach_the_goal() {
    for id in domain_ids() {
        for inst in sampled_instances(id, 10, 8) {
            let plan = constructive_plan(&inst).unwrap();
            let end = replay(&inst, &plan).expect("plan is applicable");
            assert!(is_goal(&inst, &end), "{id} size {}", inst.size());
        }
    }
}

#[test]
fn small_instances_are_solvable_and_constructive_plans_are_no_shorter() {
    for id in domain_ids() {
        for inst in sampled_instances(id, 3, 21) {
            let opt = oracle::optimal_plan(&inst, 200).unwrap().expect("solvable");
            let cons = constructive_plan(&inst).unwrap();
            assert!(opt.len() <= cons.len(), "{id}: optimal {} > constructive {}", opt.len(), cons.len());
        }
    }
}

#[test]
fn generation_is_deterministic_in_seed() {
    for id in domain_ids() {
        let a = sampled_instances(id, 6, 5);
        let b = sampled_instances(id, 6, 5);
        let ja: Vec<String> = a.iter().map(Instance::to_json).collect();
        let jb: Vec<String> = b.iter().map(Instance::to_json).collect();
        assert_eq!(ja, jb, "{id}");
    }
}

#[test]
fn json_round_trip_preserves_instances() {
    for id in domain_ids() {
        for inst in sampled_instances(id, 4, 13) {
            let back = Instance::from_json(&inst.to_json()).unwrap();
            assert_eq!(back.to_json(), inst.to_json());
            assert_eq!(back.init().digest(), inst.init().digest());
        }
    }
}

#[test]
fn pddl_output_lists_every_object() {
    for id in domain_ids() {
        let inst = &sampled_instances(id, 2, 1)[1];
        let pddl = inst.to_pddl("p");
        assert!(pddl.starts_with("(define (problem p)"), "{id}");
        assert!(pddl.contains(&format!("(:domain {id})")), "{id}");
        for o in inst.objects() {
            assert!(pddl.contains(&o.name), "{id}: {} missing", o.name);
        }
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let no_balls = GeneratorInput::default().with("balls", 0);
    assert!(domains::generate_instance("gripper", &no_balls, 0).is_err());
    let unknown = GeneratorInput::default().with("balls", 2).with("rooms", 3);
    assert!(domains::generate_instance("gripper", &unknown, 0).is_err());
    assert!(domains::generate_instance("sokoban", &GeneratorInput::default(), 0).is_err());
    // childsnack needs at least as many sandwiches as children
    let bad = GeneratorInput::default()
        .with("children", 3)
        .with("trays", 1)
        .with("sandwiches", 2)
        .with("allergic_percent", 50);
    assert!(domains::generate_instance("childsnack", &bad, 0).is_err());
}

#[test]
fn instance_sets_skip_invalid_sizes_and_deduplicate() {
    let set = build_instance_set("gripper", &[3, 4, 5, 6], 10, 1).unwrap();
    assert_eq!(set.skipped_sizes, vec![3, 4]);
    // gripper has exactly one instance per size
    assert_eq!(set.instances.len(), 2);
    let set = build_instance_set("blocksworld", &[6], 20, 1).unwrap();
    assert!(set.instances.len() > 1);
    let keys: std::collections::HashSet<String> = set.instances.iter().map(Instance::structural_key).collect();
    assert_eq!(keys.len(), set.instances.len());
}
