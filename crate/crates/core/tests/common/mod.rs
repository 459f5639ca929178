#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use gpscale::csp::CompositionCsp;
use gpscale::planning::Instance;

/// Enumerates every assignment with size at most `max_n` by plain nested
/// iteration and buckets it by size. Shares nothing with the solver except
/// the CSP description itself.
pub fn brute_force(csp: &CompositionCsp, max_n: u64) -> BTreeMap<u64, Vec<Vec<u64>>> {
    let mut out: BTreeMap<u64, Vec<Vec<u64>>> = BTreeMap::new();
    let mut values = Vec::with_capacity(csp.vars.len());
    rec(csp, max_n, &mut values, &mut out);
    for v in out.values_mut() {
        v.sort();
    }
    out
}

fn rec(csp: &CompositionCsp, max_n: u64, values: &mut Vec<u64>, out: &mut BTreeMap<u64, Vec<Vec<u64>>>) {
    let size: u64 = csp.offset
        + csp
            .vars
            .iter()
            .zip(values.iter())
            .map(|(v, x)| v.coeff * x)
            .sum::<u64>();
    if values.len() == csp.vars.len() {
        if size <= max_n && csp.constraints.iter().all(|c| c.holds(values)) {
            out.entry(size).or_default().push(values.clone());
        }
        return;
    }
    let var = &csp.vars[values.len()];
    // Every later variable contributes at least zero, so a partial size
    // above max_n can be cut; zero-coefficient variables need a finite hi.
    let hi = var.hi.unwrap_or(max_n);
    for x in var.lo..=hi {
        if size + var.coeff * x > max_n {
            break;
        }
        values.push(x);
        rec(csp, max_n, values, out);
        values.pop();
    }
}

/// Two blocks, `b1` on `b2`, goal `b2` on `b1`.
pub fn swap_two_blocks() -> Instance {
    let doc = r#"{
        "domain": "blocksworld",
        "objects": [{"name": "b1", "type": "block"}, {"name": "b2", "type": "block"}],
        "init": [["on", "b1", "b2"], ["ontable", "b2"], ["clear", "b1"], ["handempty"]],
        "goal": [["on", "b2", "b1"], ["ontable", "b1"]],
        "generator_input": {"blocks": 2},
        "seed": 1
    }"#;
    Instance::from_json(doc).expect("valid blocksworld instance")
}

pub fn gripper(balls: i64, seed: u64) -> Instance {
    gpscale::domains::generate_instance(
        "gripper",
        &gpscale::domains::GeneratorInput::default().with("balls", balls),
        seed,
    )
    .expect("valid gripper input")
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn bridge_argv(mode: &str) -> Vec<String> {
    vec![
        "python3".into(),
        fixture("bridge_fixture.py").to_string_lossy().into_owned(),
        mode.into(),
    ]
}
