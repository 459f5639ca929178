//! Executes a policy on one instance under a plan-length bound, forbidding
//! any successor whose state was already visited.

use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::planning::{is_goal, successors, Instance};
use crate::policy::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Goal,
    LengthBound,
    DeadEnd,
    NoChoice,
    PolicyError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub solved: bool,
    pub steps: usize,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Digests of every visited state, starting with the initial state.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace_digests: Option<Vec<u64>>,
    /// Executed actions in `name arg..` form.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plan: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub record_trace: bool,
}

/// Seed of the rollout stream for an instance: the instance seed xor a
/// per-worker salt.
pub fn rollout_seed(instance_seed: u64, salt: u64) -> u64 {
    instance_seed ^ salt
}

pub fn rollout_rng(instance: &Instance, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(rollout_seed(instance.seed(), salt))
}

pub fn run_policy(
    policy: &mut dyn Policy,
    instance: &Instance,
    bound: usize,
    rng: &mut dyn RngCore,
) -> RunResult {
    run_policy_with(policy, instance, bound, rng, RunOptions::default())
}

pub fn run_policy_with(
    policy: &mut dyn Policy,
    instance: &Instance,
    bound: usize,
    rng: &mut dyn RngCore,
    options: RunOptions,
) -> RunResult {
    let mut state = instance.init().clone();
    let mut visited: HashSet<u64> = HashSet::from([state.digest()]);
    let mut trace = options.record_trace.then(|| vec![state.digest()]);
    let mut plan = options.record_trace.then(Vec::new);
    let mut steps = 0;
    let finish = |termination, steps, error, trace, plan| RunResult {
        solved: termination == Termination::Goal,
        steps,
        termination,
        error,
        trace_digests: trace,
        plan,
    };

    if let Err(e) = policy.begin(instance, rng) {
        return finish(Termination::PolicyError, 0, Some(e.to_string()), trace, plan);
    }
    loop {
        if is_goal(instance, &state) {
            return finish(Termination::Goal, steps, None, trace, plan);
        }
        if steps >= bound {
            return finish(Termination::LengthBound, steps, None, trace, plan);
        }
        let mut candidates = successors(instance, &state);
        if candidates.is_empty() {
            return finish(Termination::DeadEnd, steps, None, trace, plan);
        }
        let forbidden: Vec<bool> = candidates
            .iter()
            .map(|(_, s)| visited.contains(&s.digest()))
            .collect();
        if forbidden.iter().all(|&f| f) {
            return finish(Termination::NoChoice, steps, None, trace, plan);
        }
        let idx = match policy.choose(instance, &state, &candidates, &forbidden, rng) {
            Ok(Some(i)) if i < candidates.len() && !forbidden[i] => i,
            Ok(Some(i)) => {
                let msg = format!("policy chose invalid successor {i}");
                return finish(Termination::PolicyError, steps, Some(msg), trace, plan);
            }
            Ok(None) => return finish(Termination::NoChoice, steps, None, trace, plan),
            Err(e) => {
                return finish(Termination::PolicyError, steps, Some(e.to_string()), trace, plan)
            }
        };
        let (action, next) = candidates.swap_remove(idx);
        visited.insert(next.digest());
        if let Some(t) = trace.as_mut() {
            t.push(next.digest());
        }
        if let Some(p) = plan.as_mut() {
            p.push(instance.format_action(&action));
        }
        state = next;
        steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{generate_instance, GeneratorInput};
    use crate::planning::{GroundAction, State};
    use crate::policy::{oracle_greedy_policy, Candidates, FirstSuccessorPolicy, PolicyError};

    fn gripper(balls: i64) -> Instance {
        generate_instance("gripper", &GeneratorInput::default().with("balls", balls), 7).unwrap()
    }

    #[test]
    fn oracle_greedy_solves_gripper_optimally() {
        let inst = gripper(1);
        let mut rng = rollout_rng(&inst, 0);
        let r = run_policy(&mut oracle_greedy_policy(), &inst, 60, &mut rng);
        assert_eq!((r.termination, r.steps), (Termination::Goal, 3));
        let r = run_policy(&mut oracle_greedy_policy(), &inst, 2, &mut rng);
        assert_eq!(r.termination, Termination::LengthBound);
        assert!(!r.solved);
    }

    /// Wants to undo its previous move; gives up when that is forbidden.
    struct Backtracker {
        last: Option<GroundAction>,
    }

    impl Policy for Backtracker {
        fn name(&self) -> String {
            "backtracker".into()
        }
        fn choose(
            &mut self,
            _: &Instance,
            _: &State,
            c: &Candidates,
            forbidden: &[bool],
            _: &mut dyn RngCore,
        ) -> Result<Option<usize>, PolicyError> {
            let want = self.last.as_ref().map(|a| GroundAction {
                name: a.name.clone(),
                args: vec![a.args[1], a.args[0]],
            });
            let i = want
                .and_then(|w| c.iter().position(|(a, _)| *a == w))
                .unwrap_or_else(|| c.iter().position(|(a, _)| a.name == "move").unwrap());
            if forbidden[i] {
                return Ok(None);
            }
            self.last = Some(c[i].0.clone());
            Ok(Some(i))
        }
    }

    #[test]
    fn undoing_a_move_leaves_no_choice() {
        let inst = gripper(1);
        let mut rng = rollout_rng(&inst, 0);
        let r = run_policy(&mut Backtracker { last: None }, &inst, 60, &mut rng);
        assert_eq!(r.termination, Termination::NoChoice);
        assert_eq!(r.steps, 1);
    }

    /// Takes a forbidden successor whenever one exists.
    struct Careless;

    impl Policy for Careless {
        fn name(&self) -> String {
            "careless".into()
        }
        fn choose(
            &mut self,
            _: &Instance,
            _: &State,
            c: &Candidates,
            forbidden: &[bool],
            _: &mut dyn RngCore,
        ) -> Result<Option<usize>, PolicyError> {
            Ok(Some(forbidden.iter().position(|&f| f).unwrap_or(c.len() - 1)))
        }
    }

    #[test]
    fn choosing_a_forbidden_successor_is_a_policy_error() {
        let inst = gripper(1);
        let mut rng = rollout_rng(&inst, 0);
        let r = run_policy(&mut Careless, &inst, 60, &mut rng);
        assert_eq!(r.termination, Termination::PolicyError);
        assert!(r.error.is_some());
    }

    #[test]
    fn trace_has_no_repeats() {
        let inst = gripper(3);
        let mut rng = rollout_rng(&inst, 1);
        let opts = RunOptions { record_trace: true };
        let r = run_policy_with(&mut FirstSuccessorPolicy, &inst, 200, &mut rng, opts);
        let t = r.trace_digests.unwrap();
        assert_eq!(t.len(), r.steps + 1);
        let set: HashSet<_> = t.iter().collect();
        assert_eq!(set.len(), t.len());
    }
}
