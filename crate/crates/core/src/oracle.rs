//! Exact breadth-first teacher for small instances: shortest plans, optimal
//! cost-to-go tables and the plan-length statistics used to pick `L`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::{is_goal, successors, GroundAction, Instance, State};

pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// Shortest plan of length at most `horizon`, or `None`.
pub fn optimal_plan(instance: &Instance, horizon: usize) -> Result<Option<Vec<GroundAction>>> {
    optimal_plan_capped(instance, horizon, DEFAULT_STATE_CAP)
}

pub fn optimal_plan_capped(
    instance: &Instance,
    horizon: usize,
    cap: usize,
) -> Result<Option<Vec<GroundAction>>> {
    let init = instance.init().clone();
    if is_goal(instance, &init) {
        return Ok(Some(Vec::new()));
    }
    // parent index and the action leading here
    let mut parents: Vec<Option<(usize, GroundAction)>> = vec![None];
    let mut depth = vec![0usize];
    let mut index: HashMap<State, usize> = HashMap::from([(init.clone(), 0)]);
    let mut queue = VecDeque::from([(0usize, init)]);
    while let Some((id, state)) = queue.pop_front() {
        if depth[id] >= horizon {
            continue;
        }
        for (action, next) in successors(instance, &state) {
            if index.contains_key(&next) {
                continue;
            }
            let nid = parents.len();
            parents.push(Some((id, action)));
            depth.push(depth[id] + 1);
            if is_goal(instance, &next) {
                let mut plan = Vec::new();
                let mut cur = nid;
                while let Some((p, a)) = parents[cur].take() {
                    plan.push(a);
                    cur = p;
                }
                plan.reverse();
                return Ok(Some(plan));
            }
            if parents.len() > cap {
                return Err(Error::Resource(format!("BFS explored more than {cap} states")));
            }
            index.insert(next.clone(), nid);
            queue.push_back((nid, next));
        }
    }
    Ok(None)
}

/// Optimal cost-to-go over the reachable state space, keyed by state digest.
/// States that cannot reach a goal map to `None` (infinite cost).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueTable {
    values: HashMap<u64, Option<u32>>,
    init_digest: u64,
}

impl ValueTable {
    /// `Some(v)` with `v = INFINITY` for dead ends; `None` if the state was
    /// not reached from the initial state.
    pub fn get(&self, state: &State) -> Option<f64> {
        self.get_digest(state.digest())
    }

    pub fn get_digest(&self, digest: u64) -> Option<f64> {
        self.values
            .get(&digest)
            .map(|v| v.map_or(f64::INFINITY, f64::from))
    }

    pub fn init_value(&self) -> f64 {
        self.get_digest(self.init_digest).unwrap_or(f64::INFINITY)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(digest, value)` sorted by digest.
    pub fn entries(&self) -> Vec<(u64, Option<u32>)> {
        let mut v: Vec<_> = self.values.iter().map(|(&d, &x)| (d, x)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("digest,value\n");
        for (d, v) in self.entries() {
            match v {
                Some(v) => out.push_str(&format!("{d:016x},{v}\n")),
                None => out.push_str(&format!("{d:016x},inf\n")),
            }
        }
        out
    }
}

/// Explicit reachable state graph.
pub struct StateGraph {
    pub states: Vec<State>,
    pub edges: Vec<Vec<u32>>,
}

pub fn explore(instance: &Instance, cap: usize) -> Result<StateGraph> {
    let init = instance.init().clone();
    let mut index: HashMap<State, u32> = HashMap::from([(init.clone(), 0)]);
    let mut states = vec![init];
    let mut edges: Vec<Vec<u32>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let succ = successors(instance, &states[i]);
        let mut out = Vec::with_capacity(succ.len());
        for (_, next) in succ {
            let id = match index.get(&next) {
                Some(&id) => id,
                None => {
                    let id = states.len() as u32;
                    if states.len() >= cap {
                        return Err(Error::Resource(format!(
                            "state space exceeds {cap} states"
                        )));
                    }
                    index.insert(next.clone(), id);
                    states.push(next);
                    id
                }
            };
            out.push(id);
        }
        edges.push(out);
        i += 1;
    }
    Ok(StateGraph { states, edges })
}

pub fn optimal_values(instance: &Instance) -> Result<ValueTable> {
    optimal_values_capped(instance, DEFAULT_STATE_CAP)
}

/// Backward breadth-first labelling from every reachable goal state.
pub fn optimal_values_capped(instance: &Instance, cap: usize) -> Result<ValueTable> {
    let graph = explore(instance, cap)?;
    let n = graph.states.len();
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (from, outs) in graph.edges.iter().enumerate() {
        for &to in outs {
            reverse[to as usize].push(from as u32);
        }
    }
    let mut dist: Vec<Option<u32>> = vec![None; n];
    let mut queue = VecDeque::new();
    for (i, s) in graph.states.iter().enumerate() {
        if is_goal(instance, s) {
            dist[i] = Some(0);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let d = dist[i].unwrap();
        for &p in &reverse[i] {
            if dist[p as usize].is_none() {
                dist[p as usize] = Some(d + 1);
                queue.push_back(p as usize);
            }
        }
    }
    let values = graph
        .states
        .iter()
        .zip(dist)
        .map(|(s, d)| (s.digest(), d))
        .collect();
    Ok(ValueTable {
        values,
        init_digest: instance.init().digest(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherStats {
    /// Mean optimal plan length on the largest training size (`N`).
    pub avg_plan_length: f64,
    pub largest_size: usize,
    pub per_size: BTreeMap<usize, f64>,
    /// Instances without a plan within the horizon or state cap.
    pub excluded: usize,
}

impl TeacherStats {
    /// Validation plan-length bound `3N`, rounded up, at least 1.
    pub fn validation_bound(&self) -> usize {
        ((3.0 * self.avg_plan_length).ceil() as usize).max(1)
    }
}

pub fn teacher_stats(instances: &[Instance], horizon: usize) -> Result<TeacherStats> {
    teacher_stats_capped(instances, horizon, DEFAULT_STATE_CAP)
}

pub fn teacher_stats_capped(
    instances: &[Instance],
    horizon: usize,
    cap: usize,
) -> Result<TeacherStats> {
    if instances.is_empty() {
        return Err(Error::Empty("teacher statistics need at least one instance"));
    }
    let mut lengths: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut excluded = 0;
    for inst in instances {
        match optimal_plan_capped(inst, horizon, cap) {
            Ok(Some(plan)) => lengths.entry(inst.size()).or_default().push(plan.len()),
            Ok(None) | Err(Error::Resource(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let per_size: BTreeMap<usize, f64> = lengths
        .iter()
        .map(|(&n, v)| (n, v.iter().sum::<usize>() as f64 / v.len() as f64))
        .collect();
    let (&largest_size, &avg) = per_size
        .iter()
        .next_back()
        .ok_or_else(|| Error::Validation("no training instance could be solved".into()))?;
    Ok(TeacherStats {
        avg_plan_length: avg,
        largest_size,
        per_size,
        excluded,
    })
}

/// States along a plan with their optimal values, for loss-based validation.
pub fn plan_states(instance: &Instance, plan: &[GroundAction]) -> Vec<State> {
    let mut states = vec![instance.init().clone()];
    for a in plan {
        match crate::planning::apply_action(instance, states.last().unwrap(), a) {
            Some(s) => states.push(s),
            None => break,
        }
    }
    states
}
