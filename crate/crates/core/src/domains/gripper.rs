use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{act, checked, objects_of, tuples, Builder, DomainDescriptor, GeneratorInput};
use crate::csp::{CompositionCsp, CspVar};
use crate::error::{Error, Result};
use crate::planning::{DomainModel, GroundAction, Instance, ObjectId};

pub(super) fn model() -> DomainModel {
    DomainModel::new("gripper", &["room", "ball", "gripper"])
        .predicate("at-robby", &["room"])
        .predicate("at", &["ball", "room"])
        .predicate("free", &["gripper"])
        .predicate("carry", &["ball", "gripper"])
        .action(
            "move",
            "?from ?to - room",
            "(at-robby ?from)",
            "(at-robby ?to)",
            "(at-robby ?from)",
        )
        .distinct("?from", "?to")
        .action(
            "pick",
            "?obj - ball ?room - room ?g - gripper",
            "(at ?obj ?room) (at-robby ?room) (free ?g)",
            "(carry ?obj ?g)",
            "(at ?obj ?room) (free ?g)",
        )
        .action(
            "drop",
            "?obj - ball ?room - room ?g - gripper",
            "(carry ?obj ?g) (at-robby ?room)",
            "(at ?obj ?room) (free ?g)",
            "(carry ?obj ?g)",
        )
}

/// Two rooms and two grippers always exist: n = balls + 4.
pub(super) fn descriptor() -> DomainDescriptor {
    let csp = CompositionCsp::new(
        vec![CspVar {
            name: "balls".into(),
            coeff: 1,
            lo: 1,
            hi: None,
        }],
        4,
    )
    .expect("gripper csp");
    DomainDescriptor {
        id: "gripper",
        model: Arc::new(model()),
        csp,
        extra_params: Vec::new(),
        reference_bound: 60,
        default_training_sizes: (5, 8),
        generate,
        plan,
    }
}

/// Fully determined by the ball count: robot and balls in `rooma`, every
/// ball wanted in `roomb`.
fn generate(
    desc: &DomainDescriptor,
    input: &GeneratorInput,
    _rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<Instance> {
    let mut b = Builder::new(&desc.model);
    let rooma = b.object("rooma".into(), "room");
    let roomb = b.object("roomb".into(), "room");
    let left = b.object("left".into(), "gripper");
    let right = b.object("right".into(), "gripper");
    let balls = b.objects("ball", input.count("balls"), "ball");
    b.init("at-robby", &[rooma]);
    b.init("free", &[left]);
    b.init("free", &[right]);
    for &ball in &balls {
        b.init("at", &[ball, rooma]);
        b.goal("at", &[ball, roomb]);
    }
    b.finish(input, seed)
}

fn plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let init = instance.init().atoms();
    let mut robby = tuples(instance, init, "at-robby")
        .first()
        .map(|a| a[0])
        .ok_or_else(|| Error::Domain("gripper: robot location unknown".into()))?;
    let mut out = Vec::new();
    let grippers = objects_of(instance, "gripper");
    // Drop anything already carried where it stands.
    for c in tuples(instance, init, "carry") {
        out.push(act("drop", &[c[0], robby, c[1]]));
    }
    let mut located: Vec<(ObjectId, ObjectId)> =
        tuples(instance, init, "at").iter().map(|a| (a[0], a[1])).collect();
    for c in tuples(instance, init, "carry") {
        located.push((c[0], robby));
    }
    let mut pending: Vec<(ObjectId, ObjectId, ObjectId)> = Vec::new();
    for g in tuples(instance, instance.goal(), "at") {
        let (ball, target) = (g[0], g[1]);
        let from = located
            .iter()
            .find(|(b, _)| *b == ball)
            .map(|&(_, r)| r)
            .ok_or_else(|| Error::Domain("gripper: ball location unknown".into()))?;
        if from != target {
            pending.push((ball, from, target));
        }
    }
    pending.sort_by_key(|&(b, f, t)| (f, t, b));
    let mut i = 0;
    while i < pending.len() {
        let (_, from, target) = pending[i];
        let mut batch = vec![pending[i].0];
        while batch.len() < grippers.len()
            && i + batch.len() < pending.len()
            && pending[i + batch.len()].1 == from
            && pending[i + batch.len()].2 == target
        {
            batch.push(pending[i + batch.len()].0);
        }
        if robby != from {
            out.push(act("move", &[robby, from]));
        }
        for (ball, g) in batch.iter().zip(&grippers) {
            out.push(act("pick", &[*ball, from, *g]));
        }
        out.push(act("move", &[from, target]));
        robby = target;
        for (ball, g) in batch.iter().zip(&grippers) {
            out.push(act("drop", &[*ball, target, *g]));
        }
        i += batch.len();
    }
    checked(instance, out)
}
