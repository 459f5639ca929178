use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{act, checked, objects_of, tuples, Builder, DomainDescriptor, GeneratorInput};
use crate::csp::{CompositionCsp, CspVar};
use crate::error::{Error, Result};
use crate::planning::{DomainModel, GroundAction, Instance, ObjectId};

const MODES: [&str; 3] = ["colour", "high_res", "low_res"];

pub(super) fn model() -> DomainModel {
    DomainModel::new(
        "rovers",
        &["rover", "waypoint", "store", "camera", "mode", "lander", "objective"],
    )
    .predicate("at", &["rover", "waypoint"])
    .predicate("at_lander", &["lander", "waypoint"])
    .predicate("can_traverse", &["rover", "waypoint", "waypoint"])
    .predicate("equipped_for_soil_analysis", &["rover"])
    .predicate("equipped_for_rock_analysis", &["rover"])
    .predicate("equipped_for_imaging", &["rover"])
    .predicate("empty", &["store"])
    .predicate("have_rock_analysis", &["rover", "waypoint"])
    .predicate("have_soil_analysis", &["rover", "waypoint"])
    .predicate("full", &["store"])
    .predicate("calibrated", &["camera", "rover"])
    .predicate("supports", &["camera", "mode"])
    .predicate("available", &["rover"])
    .predicate("visible", &["waypoint", "waypoint"])
    .predicate("have_image", &["rover", "objective", "mode"])
    .predicate("communicated_soil_data", &["waypoint"])
    .predicate("communicated_rock_data", &["waypoint"])
    .predicate("communicated_image_data", &["objective", "mode"])
    .predicate("at_soil_sample", &["waypoint"])
    .predicate("at_rock_sample", &["waypoint"])
    .predicate("visible_from", &["objective", "waypoint"])
    .predicate("store_of", &["store", "rover"])
    .predicate("calibration_target", &["camera", "objective"])
    .predicate("on_board", &["camera", "rover"])
    .predicate("channel_free", &["lander"])
    .action(
        "navigate",
        "?x - rover ?y ?z - waypoint",
        "(can_traverse ?x ?y ?z) (available ?x) (at ?x ?y) (visible ?y ?z)",
        "(at ?x ?z)",
        "(at ?x ?y)",
    )
    .action(
        "sample_soil",
        "?x - rover ?s - store ?p - waypoint",
        "(at ?x ?p) (at_soil_sample ?p) (equipped_for_soil_analysis ?x) (store_of ?s ?x) (empty ?s)",
        "(full ?s) (have_soil_analysis ?x ?p)",
        "(empty ?s) (at_soil_sample ?p)",
    )
    .action(
        "sample_rock",
        "?x - rover ?s - store ?p - waypoint",
        "(at ?x ?p) (at_rock_sample ?p) (equipped_for_rock_analysis ?x) (store_of ?s ?x) (empty ?s)",
        "(full ?s) (have_rock_analysis ?x ?p)",
        "(empty ?s) (at_rock_sample ?p)",
    )
    .action(
        "drop",
        "?x - rover ?y - store",
        "(store_of ?y ?x) (full ?y)",
        "(empty ?y)",
        "(full ?y)",
    )
    .action(
        "calibrate",
        "?r - rover ?i - camera ?t - objective ?w - waypoint",
        "(equipped_for_imaging ?r) (calibration_target ?i ?t) (at ?r ?w) (visible_from ?t ?w) (on_board ?i ?r)",
        "(calibrated ?i ?r)",
        "",
    )
    .action(
        "take_image",
        "?r - rover ?p - waypoint ?o - objective ?i - camera ?m - mode",
        "(calibrated ?i ?r) (on_board ?i ?r) (equipped_for_imaging ?r) (supports ?i ?m) (visible_from ?o ?p) (at ?r ?p)",
        "(have_image ?r ?o ?m)",
        "(calibrated ?i ?r)",
    )
    .action(
        "communicate_soil_data",
        "?r - rover ?l - lander ?p ?x ?y - waypoint",
        "(at ?r ?x) (at_lander ?l ?y) (have_soil_analysis ?r ?p) (visible ?x ?y) (available ?r) (channel_free ?l)",
        "(communicated_soil_data ?p)",
        "",
    )
    .action(
        "communicate_rock_data",
        "?r - rover ?l - lander ?p ?x ?y - waypoint",
        "(at ?r ?x) (at_lander ?l ?y) (have_rock_analysis ?r ?p) (visible ?x ?y) (available ?r) (channel_free ?l)",
        "(communicated_rock_data ?p)",
        "",
    )
    .action(
        "communicate_image_data",
        "?r - rover ?l - lander ?o - objective ?m - mode ?x ?y - waypoint",
        "(at ?r ?x) (at_lander ?l ?y) (have_image ?r ?o ?m) (visible ?x ?y) (available ?r) (channel_free ?l)",
        "(communicated_image_data ?o ?m)",
        "",
    )
}

/// n = 2*rovers + waypoints + cameras + objectives + 4, waypoints >= 2.
/// One store per rover; one lander and three modes always exist.
pub(super) fn descriptor() -> DomainDescriptor {
    let var = |name: &str, coeff, lo| CspVar {
        name: name.into(),
        coeff,
        lo,
        hi: None,
    };
    let csp = CompositionCsp::new(
        vec![
            var("rovers", 2, 1),
            var("waypoints", 1, 2),
            var("cameras", 1, 1),
            var("objectives", 1, 1),
        ],
        4,
    )
    .expect("rovers csp");
    DomainDescriptor {
        id: "rovers",
        model: Arc::new(model()),
        csp,
        extra_params: Vec::new(),
        reference_bound: 60,
        default_training_sizes: (10, 12),
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
    let rovers = b.objects("rover", input.count("rovers"), "rover");
    let stores = b.objects("store", rovers.len(), "store");
    let wps = b.objects("waypoint", input.count("waypoints"), "waypoint");
    let cameras = b.objects("camera", input.count("cameras"), "camera");
    let objectives = b.objects("objective", input.count("objectives"), "objective");
    let lander = b.object("general".into(), "lander");
    let modes: Vec<ObjectId> = MODES.iter().map(|m| b.object((*m).into(), "mode")).collect();
    let w = wps.len();

    // Random spanning tree plus extra edges keeps the map connected.
    let mut tree = Vec::new();
    for i in 1..w {
        tree.push((rng.random_range(0..i), i));
    }
    let mut extra = Vec::new();
    for i in 0..w {
        for j in i + 1..w {
            if !tree.contains(&(i, j)) && rng.random_bool(0.25) {
                extra.push((i, j));
            }
        }
    }
    let mut visible = HashSet::new();
    for &(i, j) in tree.iter().chain(&extra) {
        visible.insert((i, j));
        visible.insert((j, i));
    }
    for i in 0..w {
        for j in 0..w {
            if i != j && !visible.contains(&(i, j)) && rng.random_bool(0.1) {
                visible.insert((i, j));
            }
        }
    }
    let mut visible: Vec<(usize, usize)> = visible.into_iter().collect();
    visible.sort_unstable();
    for &(i, j) in &visible {
        b.init("visible", &[wps[i], wps[j]]);
    }

    let lander_at = rng.random_range(0..w);
    b.init("at_lander", &[lander, wps[lander_at]]);
    b.init("channel_free", &[lander]);

    let mut imaging = Vec::new();
    for (k, &r) in rovers.iter().enumerate() {
        b.init("at", &[r, wps[rng.random_range(0..w)]]);
        b.init("available", &[r]);
        b.init("store_of", &[stores[k], r]);
        b.init("empty", &[stores[k]]);
        let caps = if k == 0 {
            [true; 3]
        } else {
            loop {
                let c = [rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5)];
                if c.iter().any(|&x| x) {
                    break c;
                }
            }
        };
        if caps[0] {
            b.init("equipped_for_soil_analysis", &[r]);
        }
        if caps[1] {
            b.init("equipped_for_rock_analysis", &[r]);
        }
        if caps[2] {
            b.init("equipped_for_imaging", &[r]);
            imaging.push(r);
        }
        for &(i, j) in &tree {
            b.init("can_traverse", &[r, wps[i], wps[j]]);
            b.init("can_traverse", &[r, wps[j], wps[i]]);
        }
        for &(i, j) in &extra {
            if rng.random_bool(0.5) {
                b.init("can_traverse", &[r, wps[i], wps[j]]);
                b.init("can_traverse", &[r, wps[j], wps[i]]);
            }
        }
    }

    let mut supported = Vec::new();
    for &cam in &cameras {
        let r = imaging[rng.random_range(0..imaging.len())];
        b.init("on_board", &[cam, r]);
        let mut sup: Vec<ObjectId> = modes.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if sup.is_empty() {
            sup.push(modes[rng.random_range(0..modes.len())]);
        }
        for &m in &sup {
            b.init("supports", &[cam, m]);
        }
        supported.push(sup);
        let target = objectives[rng.random_range(0..objectives.len())];
        b.init("calibration_target", &[cam, target]);
    }
    for &o in &objectives {
        let mut from: Vec<ObjectId> = wps.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
        if from.is_empty() {
            from.push(wps[rng.random_range(0..w)]);
        }
        for p in from {
            b.init("visible_from", &[o, p]);
        }
    }

    let mut goals = 0;
    for &p in &wps {
        if rng.random_bool(0.5) {
            b.init("at_soil_sample", &[p]);
            if rng.random_bool(0.5) {
                b.goal("communicated_soil_data", &[p]);
                goals += 1;
            }
        }
        if rng.random_bool(0.5) {
            b.init("at_rock_sample", &[p]);
            if rng.random_bool(0.5) {
                b.goal("communicated_rock_data", &[p]);
                goals += 1;
            }
        }
    }
    let all_supported: Vec<ObjectId> = {
        let mut v: Vec<ObjectId> = supported.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for &o in &objectives {
        if rng.random_bool(0.5) {
            let m = all_supported[rng.random_range(0..all_supported.len())];
            b.goal("communicated_image_data", &[o, m]);
            goals += 1;
        }
    }
    if goals == 0 {
        b.goal("communicated_image_data", &[objectives[0], supported[0][0]]);
    }
    b.finish(input, seed)
}

struct Map<'a> {
    instance: &'a Instance,
    traverse: Vec<&'a [ObjectId]>,
    visible: Vec<&'a [ObjectId]>,
}

impl Map<'_> {
    /// Shortest waypoint path for `rover` from `from` to any waypoint in `targets`.
    fn path(&self, rover: ObjectId, from: ObjectId, targets: &[ObjectId]) -> Option<Vec<ObjectId>> {
        let n = self.instance.objects().len();
        let mut prev: Vec<Option<ObjectId>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([from]);
        seen[from as usize] = true;
        while let Some(cur) = queue.pop_front() {
            if targets.contains(&cur) {
                let mut path = vec![cur];
                let mut c = cur;
                while let Some(p) = prev[c as usize] {
                    path.push(p);
                    c = p;
                }
                path.reverse();
                return Some(path);
            }
            for t in &self.traverse {
                if t[0] == rover && t[1] == cur && !seen[t[2] as usize]
                    && self.visible.iter().any(|v| v[0] == cur && v[1] == t[2])
                {
                    seen[t[2] as usize] = true;
                    prev[t[2] as usize] = Some(cur);
                    queue.push_back(t[2]);
                }
            }
        }
        None
    }
}

fn plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let err = |m: &str| Error::Domain(format!("rovers: {m}"));
    let init = instance.init().atoms();
    let goal = instance.goal();
    let map = Map {
        instance,
        traverse: tuples(instance, init, "can_traverse"),
        visible: tuples(instance, init, "visible"),
    };
    let has1 = |pred: &str, x: ObjectId| tuples(instance, init, pred).iter().any(|a| a[0] == x);
    let (lander, lander_wp) = tuples(instance, init, "at_lander")
        .first()
        .map(|a| (a[0], a[1]))
        .ok_or_else(|| err("no lander"))?;
    let comm_spots: Vec<ObjectId> = map
        .visible
        .iter()
        .filter(|v| v[1] == lander_wp)
        .map(|v| v[0])
        .collect();
    let mut pos: Vec<(ObjectId, ObjectId)> =
        tuples(instance, init, "at").iter().map(|a| (a[0], a[1])).collect();
    let store_of = |r: ObjectId| {
        tuples(instance, init, "store_of")
            .iter()
            .find(|a| a[1] == r)
            .map(|a| a[0])
    };
    let mut full: HashSet<ObjectId> = tuples(instance, init, "full").iter().map(|a| a[0]).collect();

    let mut out = Vec::new();
    let go = |out: &mut Vec<GroundAction>,
                  pos: &mut Vec<(ObjectId, ObjectId)>,
                  rover: ObjectId,
                  targets: &[ObjectId]|
     -> Option<ObjectId> {
        let entry = pos.iter_mut().find(|(r, _)| *r == rover)?;
        let path = map.path(rover, entry.1, targets)?;
        for w in path.windows(2) {
            out.push(act("navigate", &[rover, w[0], w[1]]));
        }
        entry.1 = *path.last().unwrap();
        Some(entry.1)
    };

    let rovers = objects_of(instance, "rover");
    for (kind, pred, equip, sample) in [
        ("soil", "communicated_soil_data", "equipped_for_soil_analysis", "sample_soil"),
        ("rock", "communicated_rock_data", "equipped_for_rock_analysis", "sample_rock"),
    ] {
        for g in tuples(instance, goal, pred) {
            let p = g[0];
            let mut done = false;
            for &r in rovers.iter().filter(|&&r| has1(equip, r)) {
                let Some(store) = store_of(r) else { continue };
                let start = out.len();
                let saved = pos.clone();
                if go(&mut out, &mut pos, r, &[p]).is_none() {
                    out.truncate(start);
                    pos = saved;
                    continue;
                }
                if full.contains(&store) {
                    out.push(act("drop", &[r, store]));
                }
                out.push(act(sample, &[r, store, p]));
                full.insert(store);
                let Some(x) = go(&mut out, &mut pos, r, &comm_spots) else {
                    return Err(err("lander unreachable"));
                };
                out.push(act(
                    &format!("communicate_{kind}_data"),
                    &[r, lander, p, x, lander_wp],
                ));
                done = true;
                break;
            }
            if !done {
                return Err(err(&format!("cannot reach {kind} sample")));
            }
        }
    }

    let on_board = tuples(instance, init, "on_board");
    let supports = tuples(instance, init, "supports");
    let calib = tuples(instance, init, "calibration_target");
    let visible_from = tuples(instance, init, "visible_from");
    let spots_of = |o: ObjectId| -> Vec<ObjectId> {
        visible_from.iter().filter(|v| v[0] == o).map(|v| v[1]).collect()
    };
    for g in tuples(instance, goal, "communicated_image_data") {
        let (o, m) = (g[0], g[1]);
        let mut done = false;
        for ob in &on_board {
            let (cam, r) = (ob[0], ob[1]);
            if !has1("equipped_for_imaging", r) || !supports.iter().any(|s| s[0] == cam && s[1] == m) {
                continue;
            }
            let Some(target) = calib.iter().find(|c| c[0] == cam).map(|c| c[1]) else {
                continue;
            };
            let start = out.len();
            let saved = pos.clone();
            let Some(w) = go(&mut out, &mut pos, r, &spots_of(target)) else {
                out.truncate(start);
                pos = saved;
                continue;
            };
            out.push(act("calibrate", &[r, cam, target, w]));
            let Some(p) = go(&mut out, &mut pos, r, &spots_of(o)) else {
                out.truncate(start);
                pos = saved;
                continue;
            };
            out.push(act("take_image", &[r, p, o, cam, m]));
            let Some(x) = go(&mut out, &mut pos, r, &comm_spots) else {
                out.truncate(start);
                pos = saved;
                continue;
            };
            out.push(act("communicate_image_data", &[r, lander, o, m, x, lander_wp]));
            done = true;
            break;
        }
        if !done {
            return Err(err("no camera can take a required image"));
        }
    }
    checked(instance, out)
}
