use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{act, checked, tuples, Builder, DomainDescriptor, GeneratorInput};
use crate::csp::{CompositionCsp, CspVar};
use crate::error::{Error, Result};
use crate::planning::{DomainModel, GroundAction, Instance};

pub(super) fn model() -> DomainModel {
    DomainModel::new("ferry", &["car", "location"])
        .predicate("at-ferry", &["location"])
        .predicate("at", &["car", "location"])
        .predicate("empty-ferry", &[])
        .predicate("on", &["car"])
        .action(
            "sail",
            "?from ?to - location",
            "(at-ferry ?from)",
            "(at-ferry ?to)",
            "(at-ferry ?from)",
        )
        .distinct("?from", "?to")
        .action(
            "board",
            "?car - car ?loc - location",
            "(at ?car ?loc) (at-ferry ?loc) (empty-ferry)",
            "(on ?car)",
            "(at ?car ?loc) (empty-ferry)",
        )
        .action(
            "debark",
            "?car - car ?loc - location",
            "(on ?car) (at-ferry ?loc)",
            "(at ?car ?loc) (empty-ferry)",
            "(on ?car)",
        )
}

/// n = cars + locations, at least two locations.
pub(super) fn descriptor() -> DomainDescriptor {
    let csp = CompositionCsp::new(
        vec![
            CspVar {
                name: "cars".into(),
                coeff: 1,
                lo: 1,
                hi: None,
            },
            CspVar {
                name: "locations".into(),
                coeff: 1,
                lo: 2,
                hi: None,
            },
        ],
        0,
    )
    .expect("ferry csp");
    DomainDescriptor {
        id: "ferry",
        model: Arc::new(model()),
        csp,
        extra_params: Vec::new(),
        reference_bound: 78,
        default_training_sizes: (3, 6),
        generate,
        plan,
    }
}

fn generate(
    desc: &DomainDescriptor,
    input: &GeneratorInput,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<Instance> {
    let mut b = Builder::new(&desc.model);
    let cars = b.objects("car", input.count("cars"), "car");
    let locs = b.objects("loc", input.count("locations"), "location");
    let ferry = locs[rng.random_range(0..locs.len())];
    b.init("at-ferry", &[ferry]);
    b.init("empty-ferry", &[]);
    for &car in &cars {
        let from = rng.random_range(0..locs.len());
        // Goal location differs from the start.
        let mut to = rng.random_range(0..locs.len() - 1);
        if to >= from {
            to += 1;
        }
        b.init("at", &[car, locs[from]]);
        b.goal("at", &[car, locs[to]]);
    }
    b.finish(input, seed)
}

fn plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let init = instance.init().atoms();
    let mut ferry = tuples(instance, init, "at-ferry")
        .first()
        .map(|a| a[0])
        .ok_or_else(|| Error::Domain("ferry: ferry location unknown".into()))?;
    let mut out = Vec::new();
    if let Some(c) = tuples(instance, init, "on").first() {
        let car = c[0];
        let target = tuples(instance, instance.goal(), "at")
            .iter()
            .find(|g| g[0] == car)
            .map(|g| g[1])
            .unwrap_or(ferry);
        if target != ferry {
            out.push(act("sail", &[ferry, target]));
            ferry = target;
        }
        out.push(act("debark", &[car, ferry]));
    }
    let located = tuples(instance, init, "at");
    for g in tuples(instance, instance.goal(), "at") {
        let (car, target) = (g[0], g[1]);
        let Some(from) = located.iter().find(|a| a[0] == car).map(|a| a[1]) else {
            continue;
        };
        if from == target {
            continue;
        }
        if ferry != from {
            out.push(act("sail", &[ferry, from]));
        }
        out.push(act("board", &[car, from]));
        out.push(act("sail", &[from, target]));
        out.push(act("debark", &[car, target]));
        ferry = target;
    }
    checked(instance, out)
}
