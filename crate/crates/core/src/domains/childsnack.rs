//! Childsnack without the `kitchen` constant: tray location is split into
//! `tray_at_kitchen ?t` and `tray_at ?t ?table`, so every object in an
//! instance is counted by the size equation.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{act, checked, objects_of, tuples, Builder, DomainDescriptor, GeneratorInput, ParamRange};
use crate::csp::{CompositionCsp, CspVar, LinearConstraint, SideConstraint};
use crate::error::{Error, Result};
use crate::planning::{DomainModel, GroundAction, Instance, ObjectId};

const TABLES: usize = 3;

pub(super) fn model() -> DomainModel {
    DomainModel::new(
        "childsnack",
        &["child", "bread-portion", "content-portion", "sandwich", "tray", "table"],
    )
    .predicate("at_kitchen_bread", &["bread-portion"])
    .predicate("at_kitchen_content", &["content-portion"])
    .predicate("at_kitchen_sandwich", &["sandwich"])
    .predicate("no_gluten_bread", &["bread-portion"])
    .predicate("no_gluten_content", &["content-portion"])
    .predicate("ontray", &["sandwich", "tray"])
    .predicate("no_gluten_sandwich", &["sandwich"])
    .predicate("allergic_gluten", &["child"])
    .predicate("not_allergic_gluten", &["child"])
    .predicate("served", &["child"])
    .predicate("waiting", &["child", "table"])
    .predicate("notexist", &["sandwich"])
    .predicate("tray_at_kitchen", &["tray"])
    .predicate("tray_at", &["tray", "table"])
    .action(
        "make_sandwich_no_gluten",
        "?s - sandwich ?b - bread-portion ?c - content-portion",
        "(at_kitchen_bread ?b) (at_kitchen_content ?c) (no_gluten_bread ?b) (no_gluten_content ?c) (notexist ?s)",
        "(at_kitchen_sandwich ?s) (no_gluten_sandwich ?s)",
        "(at_kitchen_bread ?b) (at_kitchen_content ?c) (notexist ?s)",
    )
    .action(
        "make_sandwich",
        "?s - sandwich ?b - bread-portion ?c - content-portion",
        "(at_kitchen_bread ?b) (at_kitchen_content ?c) (notexist ?s)",
        "(at_kitchen_sandwich ?s)",
        "(at_kitchen_bread ?b) (at_kitchen_content ?c) (notexist ?s)",
    )
    .action(
        "put_on_tray",
        "?s - sandwich ?t - tray",
        "(at_kitchen_sandwich ?s) (tray_at_kitchen ?t)",
        "(ontray ?s ?t)",
        "(at_kitchen_sandwich ?s)",
    )
    .action(
        "serve_sandwich_no_gluten",
        "?s - sandwich ?c - child ?t - tray ?p - table",
        "(allergic_gluten ?c) (ontray ?s ?t) (waiting ?c ?p) (no_gluten_sandwich ?s) (tray_at ?t ?p)",
        "(served ?c)",
        "(ontray ?s ?t)",
    )
    .action(
        "serve_sandwich",
        "?s - sandwich ?c - child ?t - tray ?p - table",
        "(not_allergic_gluten ?c) (waiting ?c ?p) (ontray ?s ?t) (tray_at ?t ?p)",
        "(served ?c)",
        "(ontray ?s ?t)",
    )
    .action(
        "move_tray_to_table",
        "?t - tray ?p - table",
        "(tray_at_kitchen ?t)",
        "(tray_at ?t ?p)",
        "(tray_at_kitchen ?t)",
    )
    .action(
        "move_tray_to_kitchen",
        "?t - tray ?p - table",
        "(tray_at ?t ?p)",
        "(tray_at_kitchen ?t)",
        "(tray_at ?t ?p)",
    )
    .action(
        "move_tray",
        "?t - tray ?p1 ?p2 - table",
        "(tray_at ?t ?p1)",
        "(tray_at ?t ?p2)",
        "(tray_at ?t ?p1)",
    )
    .distinct("?p1", "?p2")
}

/// n = 3*children + trays + sandwiches + 3, children <= sandwiches.
/// Each child brings one bread and one content portion; three tables.
pub(super) fn descriptor() -> DomainDescriptor {
    let var = |name: &str, coeff| CspVar {
        name: name.into(),
        coeff,
        lo: 1,
        hi: None,
    };
    let csp = CompositionCsp::new(
        vec![var("children", 3), var("trays", 1), var("sandwiches", 1)],
        TABLES as u64,
    )
    .expect("childsnack csp")
    .with_constraint(SideConstraint::Linear(LinearConstraint::le(0, 2)));
    DomainDescriptor {
        id: "childsnack",
        model: Arc::new(model()),
        csp,
        extra_params: vec![ParamRange {
            name: "allergic_percent".into(),
            lo: 0,
            hi: 100,
        }],
        reference_bound: 15,
        default_training_sizes: (8, 10),
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
    let n_children = input.count("children");
    let pct = input.get("allergic_percent").unwrap_or(0) as usize;
    let allergic = (n_children * pct + 50) / 100;
    let mut b = Builder::new(&desc.model);
    let children = b.objects("child", n_children, "child");
    let breads = b.objects("bread", n_children, "bread-portion");
    let contents = b.objects("content", n_children, "content-portion");
    let trays = b.objects("tray", input.count("trays"), "tray");
    let sandwiches = b.objects("sandw", input.count("sandwiches"), "sandwich");
    let tables = b.objects("table", TABLES, "table");
    for &t in &trays {
        b.init("tray_at_kitchen", &[t]);
    }
    for &s in &sandwiches {
        b.init("notexist", &[s]);
    }
    for i in 0..n_children {
        b.init("at_kitchen_bread", &[breads[i]]);
        b.init("at_kitchen_content", &[contents[i]]);
        if i < allergic {
            b.init("no_gluten_bread", &[breads[i]]);
            b.init("no_gluten_content", &[contents[i]]);
        }
    }
    // Allergic children are a random subset of the right size.
    let mut flags = vec![false; n_children];
    let mut chosen = 0;
    while chosen < allergic {
        let i = rng.random_range(0..n_children);
        if !flags[i] {
            flags[i] = true;
            chosen += 1;
        }
    }
    for (i, &c) in children.iter().enumerate() {
        if flags[i] {
            b.init("allergic_gluten", &[c]);
        } else {
            b.init("not_allergic_gluten", &[c]);
        }
        let table = tables[rng.random_range(0..TABLES)];
        b.init("waiting", &[c, table]);
        b.goal("served", &[c]);
    }
    b.finish(input, seed)
}

/// One child at a time: make a sandwich, carry it out on the first tray,
/// serve, bring the tray back.
fn plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let init = instance.init().atoms();
    let has = |pred: &str, x: ObjectId| tuples(instance, init, pred).iter().any(|a| a[0] == x);
    let err = |m: &str| Error::Domain(format!("childsnack: {m}"));

    let tray = objects_of(instance, "tray")
        .into_iter()
        .find(|&t| has("tray_at_kitchen", t))
        .ok_or_else(|| err("no tray in the kitchen"))?;
    let mut sandwiches: Vec<ObjectId> = objects_of(instance, "sandwich")
        .into_iter()
        .filter(|&s| has("notexist", s))
        .collect();
    let split = |ty: &str, at: &str, gf: &str| -> (Vec<ObjectId>, Vec<ObjectId>) {
        objects_of(instance, ty)
            .into_iter()
            .filter(|&x| has(at, x))
            .partition(|&x| has(gf, x))
    };
    let (mut gf_bread, mut bread) = split("bread-portion", "at_kitchen_bread", "no_gluten_bread");
    let (mut gf_content, mut content) =
        split("content-portion", "at_kitchen_content", "no_gluten_content");

    let served: Vec<ObjectId> = tuples(instance, init, "served").iter().map(|a| a[0]).collect();
    let waiting = tuples(instance, init, "waiting");
    let mut todo: Vec<ObjectId> = tuples(instance, instance.goal(), "served")
        .iter()
        .map(|a| a[0])
        .filter(|c| !served.contains(c))
        .collect();
    // Allergic children first so gluten-free portions go where they are needed.
    todo.sort_by_key(|&c| (!has("allergic_gluten", c), c));

    let mut out = Vec::new();
    for (k, &child) in todo.iter().enumerate() {
        let table = waiting
            .iter()
            .find(|a| a[0] == child)
            .map(|a| a[1])
            .ok_or_else(|| err("child has no table"))?;
        let s = sandwiches.pop().ok_or_else(|| err("not enough sandwiches"))?;
        if has("allergic_gluten", child) {
            let b = gf_bread.pop().ok_or_else(|| err("no gluten-free bread"))?;
            let c = gf_content.pop().ok_or_else(|| err("no gluten-free content"))?;
            out.push(act("make_sandwich_no_gluten", &[s, b, c]));
            out.push(act("put_on_tray", &[s, tray]));
            out.push(act("move_tray_to_table", &[tray, table]));
            out.push(act("serve_sandwich_no_gluten", &[s, child, tray, table]));
        } else {
            let b = bread.pop().or_else(|| gf_bread.pop()).ok_or_else(|| err("no bread"))?;
            let c = content
                .pop()
                .or_else(|| gf_content.pop())
                .ok_or_else(|| err("no content"))?;
            out.push(act("make_sandwich", &[s, b, c]));
            out.push(act("put_on_tray", &[s, tray]));
            out.push(act("move_tray_to_table", &[tray, table]));
            out.push(act("serve_sandwich", &[s, child, tray, table]));
        }
        if k + 1 < todo.len() {
            out.push(act("move_tray_to_kitchen", &[tray, table]));
        }
    }
    checked(instance, out)
}
