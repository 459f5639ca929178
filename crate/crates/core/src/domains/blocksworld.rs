use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{act, checked, objects_of, tuples, Builder, DomainDescriptor, GeneratorInput};
use crate::csp::{CompositionCsp, CspVar};
use crate::error::Result;
use crate::planning::{DomainModel, GroundAction, Instance, ObjectId};

pub(super) fn model() -> DomainModel {
    DomainModel::new("blocksworld", &["block"])
        .predicate("on", &["block", "block"])
        .predicate("ontable", &["block"])
        .predicate("clear", &["block"])
        .predicate("handempty", &[])
        .predicate("holding", &["block"])
        .action(
            "pick-up",
            "?x - block",
            "(clear ?x) (ontable ?x) (handempty)",
            "(holding ?x)",
            "(ontable ?x) (clear ?x) (handempty)",
        )
        .action(
            "put-down",
            "?x - block",
            "(holding ?x)",
            "(clear ?x) (handempty) (ontable ?x)",
            "(holding ?x)",
        )
        .action(
            "stack",
            "?x ?y - block",
            "(holding ?x) (clear ?y)",
            "(clear ?x) (handempty) (on ?x ?y)",
            "(holding ?x) (clear ?y)",
        )
        .distinct("?x", "?y")
        .action(
            "unstack",
            "?x ?y - block",
            "(on ?x ?y) (clear ?x) (handempty)",
            "(holding ?x) (clear ?y)",
            "(on ?x ?y) (clear ?x) (handempty)",
        )
        .distinct("?x", "?y")
}

pub(super) fn descriptor() -> DomainDescriptor {
    let csp = CompositionCsp::new(
        vec![CspVar {
            name: "blocks".into(),
            coeff: 1,
            lo: 2,
            hi: None,
        }],
        0,
    )
    .expect("blocksworld csp");
    DomainDescriptor {
        id: "blocksworld",
        model: Arc::new(model()),
        csp,
        extra_params: Vec::new(),
        reference_bound: 120,
        default_training_sizes: (2, 5),
        generate,
        plan,
    }
}

/// Random tower configuration: each block, in random order, starts a new
/// tower or goes on top of an existing one, uniformly.
fn towers(blocks: &[ObjectId], rng: &mut ChaCha8Rng) -> Vec<Vec<ObjectId>> {
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut towers: Vec<Vec<ObjectId>> = Vec::new();
    for b in order {
        let k = rng.random_range(0..=towers.len());
        if k == towers.len() {
            towers.push(vec![b]);
        } else {
            towers[k].push(b);
        }
    }
    for t in &mut towers {
        t.shrink_to_fit();
    }
    towers.sort();
    towers
}

fn generate(
    desc: &DomainDescriptor,
    input: &GeneratorInput,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<Instance> {
    let mut b = Builder::new(&desc.model);
    let blocks = b.objects("b", input.count("blocks"), "block");
    let init = towers(&blocks, rng);
    let mut goal = towers(&blocks, rng);
    // n >= 2 always admits a different configuration.
    while goal == init {
        goal = towers(&blocks, rng);
    }
    for t in &init {
        b.init("ontable", &[t[0]]);
        for w in t.windows(2) {
            b.init("on", &[w[1], w[0]]);
        }
        b.init("clear", &[*t.last().unwrap()]);
    }
    b.init("handempty", &[]);
    for t in &goal {
        b.goal("ontable", &[t[0]]);
        for w in t.windows(2) {
            b.goal("on", &[w[1], w[0]]);
        }
    }
    b.finish(input, seed)
}

/// Unstack everything onto the table, then build the goal towers bottom-up.
fn plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let init = instance.init().atoms();
    let goal = instance.goal();
    let mut out = Vec::new();
    let held = tuples(instance, init, "holding");
    if let Some(h) = held.first() {
        out.push(act("put-down", h));
    }
    let on: Vec<(ObjectId, ObjectId)> =
        tuples(instance, init, "on").iter().map(|a| (a[0], a[1])).collect();
    let above = |below: ObjectId, rel: &[(ObjectId, ObjectId)]| {
        rel.iter().find(|&&(_, y)| y == below).map(|&(x, _)| x)
    };
    for base in tuples(instance, init, "ontable") {
        let mut tower = vec![base[0]];
        while let Some(x) = above(*tower.last().unwrap(), &on) {
            tower.push(x);
        }
        for w in tower.windows(2).rev() {
            out.push(act("unstack", &[w[1], w[0]]));
            out.push(act("put-down", &[w[1]]));
        }
    }
    let goal_on: Vec<(ObjectId, ObjectId)> =
        tuples(instance, goal, "on").iter().map(|a| (a[0], a[1])).collect();
    let has_below: Vec<ObjectId> = goal_on.iter().map(|&(x, _)| x).collect();
    for base in objects_of(instance, "block") {
        if has_below.contains(&base) {
            continue;
        }
        let mut cur = base;
        while let Some(x) = above(cur, &goal_on) {
            out.push(act("pick-up", &[x]));
            out.push(act("stack", &[x, cur]));
            cur = x;
        }
    }
    checked(instance, out)
}
