//! Validation methods and checkpoint selection.
//!
//! Dynamic validation generates ever larger instances above the training
//! sizes until coverage drops below a threshold and scores a policy by the
//! sum of the per-size coverages. The fixed methods score a policy on one
//! pre-built validation set, either by coverage or by a loss against the
//! teacher's optimal values.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp;
use crate::domains::{self, descriptor};
use crate::error::{Error, Result};
use crate::oracle::{self, ValueTable};
use crate::planning::{successors, Instance, State};
use crate::policy::{Policy, PolicySpec};
use crate::runner::{rollout_rng, run_policy};
use crate::seeds::derive_seed;

/// Compositions drawn per size before sampling the `m` instances.
pub const COMPOSITIONS_PER_SIZE: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationParams {
    /// Largest training size; validation starts one above it.
    pub n0: usize,
    /// Instances per size.
    pub m: usize,
    /// Plan-length bound, constant across sizes.
    pub bound: usize,
    pub tau: f64,
    pub max_consecutive_invalid: usize,
    /// Stop after this size even if coverage never drops below `tau`.
    pub max_size: Option<usize>,
    pub seed: u64,
    /// Instances are drawn afresh for every epoch.
    pub epoch: u64,
}

impl Default for ValidationParams {
    fn default() -> Self {
        ValidationParams {
            n0: 1,
            m: 10,
            bound: 60,
            tau: 0.3,
            max_consecutive_invalid: 1000,
            max_size: None,
            seed: 0,
            epoch: 0,
        }
    }
}

impl ValidationParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.bound == 0 || !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!(
                "validation needs m >= 1, bound >= 1 and 0 <= tau <= 1, got m={}, bound={}, tau={}",
                self.m, self.bound, self.tau
            )));
        }
        if self.tau == 0.0 && self.max_size.is_none() {
            return Err(Error::Config(
                "tau = 0 never ends dynamic validation; set max_size".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynamicStop {
    BelowThreshold,
    MaxSize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub score: f64,
    pub per_size_coverage: BTreeMap<usize, f64>,
    pub sizes_skipped: Vec<usize>,
    pub last_size: usize,
    pub stopped: DynamicStop,
}

/// Dynamic coverage validation. Sizes without any valid composition are
/// skipped and do not end the loop.
pub fn dynamic_coverage_validation(
    policy: &mut dyn Policy,
    domain: &str,
    params: &ValidationParams,
) -> Result<ValidationReport> {
    params.validate()?;
    let desc = descriptor(domain)?;
    let mut per_size = BTreeMap::new();
    let mut skipped = Vec::new();
    let mut invalid_run = 0;
    let mut n = params.n0;
    loop {
        n += 1;
        if params.max_size.is_some_and(|max| n > max) {
            return Ok(report(per_size, skipped, n - 1, DynamicStop::MaxSize));
        }
        if !csp::has_solution(&desc.csp, n as u64) {
            skipped.push(n);
            invalid_run += 1;
            if invalid_run >= params.max_consecutive_invalid {
                return Err(Error::Validation(format!(
                    "{invalid_run} consecutive sizes without a valid composition (last {n})"
                )));
            }
            continue;
        }
        invalid_run = 0;
        let base = derive_seed(params.seed, &[params.epoch, n as u64]);
        let mut pick_rng = ChaCha8Rng::seed_from_u64(base);
        let compositions =
            csp::solve_k(&desc.csp, n as u64, COMPOSITIONS_PER_SIZE, &mut pick_rng)?;
        let mut solved = 0;
        for i in 0..params.m {
            let seed = derive_seed(params.seed, &[params.epoch, n as u64, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let assignment = csp::sample_uniform(&compositions, &mut rng)?;
            let input = desc.input_from(assignment, &mut rng);
            let instance = domains::generate_instance(domain, &input, seed)?;
            let mut run_rng = rollout_rng(&instance, 0);
            if run_policy(policy, &instance, params.bound, &mut run_rng).solved {
                solved += 1;
            }
        }
        let coverage = solved as f64 / params.m as f64;
        per_size.insert(n, coverage);
        if coverage < params.tau {
            return Ok(report(per_size, skipped, n, DynamicStop::BelowThreshold));
        }
    }
}

fn report(
    per_size: BTreeMap<usize, f64>,
    skipped: Vec<usize>,
    last: usize,
    stopped: DynamicStop,
) -> ValidationReport {
    ValidationReport {
        score: per_size.values().sum(),
        per_size_coverage: per_size,
        sizes_skipped: skipped,
        last_size: last,
        stopped,
    }
}

/// Fraction of `instances` solved within `bound`.
pub fn fixed_coverage_validation(
    policy: &mut dyn Policy,
    instances: &[Instance],
    bound: usize,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::Empty("fixed validation set"));
    }
    let solved = instances
        .iter()
        .filter(|inst| {
            let mut rng = rollout_rng(inst, 0);
            run_policy(policy, inst, bound, &mut rng).solved
        })
        .count();
    Ok(solved as f64 / instances.len() as f64)
}

/// A state on a teacher trajectory with its optimal cost-to-go.
#[derive(Clone, Debug)]
pub struct LabeledState {
    pub instance: usize,
    pub state: State,
    pub value: f64,
}

#[derive(Clone, Debug, Default)]
pub struct LabeledSet {
    pub instances: Vec<Instance>,
    pub tables: Vec<Arc<ValueTable>>,
    pub states: Vec<LabeledState>,
}

/// Labels every state along an optimal plan of each instance. Instances
/// the oracle cannot solve are left out.
pub fn label_states(instances: &[Instance]) -> Result<LabeledSet> {
    let mut set = LabeledSet::default();
    for inst in instances {
        let table = match oracle::optimal_values(inst) {
            Ok(t) => t,
            Err(Error::Resource(_)) => continue,
            Err(e) => return Err(e),
        };
        let Some(plan) = oracle::optimal_plan(inst, usize::MAX)? else {
            continue;
        };
        let idx = set.instances.len();
        for state in oracle::plan_states(inst, &plan) {
            let value = table.get(&state).unwrap_or(f64::INFINITY);
            if value.is_finite() {
                set.states.push(LabeledState {
                    instance: idx,
                    state,
                    value,
                });
            }
        }
        set.instances.push(inst.clone());
        set.tables.push(Arc::new(table));
    }
    Ok(set)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// Mean squared error between policy values and optimal values.
    #[default]
    Mse,
    /// Fraction of non-goal labeled states where the policy's choice is
    /// not an optimal successor.
    Disagreement,
}

pub fn fixed_loss_validation(
    policy: &mut dyn Policy,
    labeled: &LabeledSet,
    kind: LossKind,
) -> Result<f64> {
    if labeled.states.is_empty() {
        return Err(Error::Empty("labeled state set"));
    }
    match kind {
        LossKind::Mse => {
            if !policy.has_values() {
                return Err(crate::policy::PolicyError::NoValues.into());
            }
            let mut total = 0.0;
            for l in &labeled.states {
                let v = policy.value(&labeled.instances[l.instance], &l.state)?;
                total += (v - l.value).powi(2);
            }
            Ok(total / labeled.states.len() as f64)
        }
        LossKind::Disagreement => disagreement(policy, labeled),
    }
}

fn disagreement(policy: &mut dyn Policy, labeled: &LabeledSet) -> Result<f64> {
    let mut decisions = 0usize;
    let mut wrong = 0usize;
    let mut current = None;
    for l in labeled.states.iter().filter(|l| l.value > 0.0) {
        let inst = &labeled.instances[l.instance];
        let mut rng = rollout_rng(inst, 0);
        if current != Some(l.instance) {
            policy.begin(inst, &mut rng)?;
            current = Some(l.instance);
        }
        let succ = successors(inst, &l.state);
        let forbidden = vec![false; succ.len()];
        let choice = policy.choose(inst, &l.state, &succ, &forbidden, &mut rng)?;
        decisions += 1;
        let optimal = choice.is_some_and(|i| {
            labeled.tables[l.instance].get(&succ[i].1) == Some(l.value - 1.0)
        });
        if !optimal {
            wrong += 1;
        }
    }
    if decisions == 0 {
        return Err(Error::Empty("labeled set has no non-goal states"));
    }
    Ok(wrong as f64 / decisions as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Loss,
    Coverage,
    Dynamic,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Loss, Method::Coverage, Method::Dynamic];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Loss => "loss",
            Method::Coverage => "coverage",
            Method::Dynamic => "dynamic",
        }
    }

    fn better(self, candidate: f64, best: f64) -> bool {
        match self {
            Method::Loss => candidate < best,
            Method::Coverage | Method::Dynamic => candidate > best,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown validation method `{s}`")))
    }
}

/// Index of the best score; only strict improvements replace the current
/// best, so ties keep the earlier checkpoint.
pub fn best_index(scores: &[f64], method: Method) -> Result<usize> {
    let (first, rest) = scores
        .split_first()
        .ok_or(Error::Empty("no checkpoints to select from"))?;
    let mut best = (0, *first);
    for (i, &s) in rest.iter().enumerate() {
        if method.better(s, best.1) {
            best = (i + 1, s);
        }
    }
    Ok(best.0)
}

/// Everything the three methods need. Fields unused by a method may be
/// left empty.
#[derive(Clone, Debug, Default)]
pub struct MethodInputs {
    pub domain: String,
    pub fixed_instances: Vec<Instance>,
    pub fixed_bound: usize,
    pub labeled: LabeledSet,
    pub loss: LossKind,
    pub dynamic: ValidationParams,
}

/// One method's score for one freshly built checkpoint policy.
pub fn score_checkpoint(spec: &PolicySpec, method: Method, inputs: &MethodInputs) -> Result<f64> {
    let mut policy = spec.build()?;
    match method {
        Method::Loss => fixed_loss_validation(policy.as_mut(), &inputs.labeled, inputs.loss),
        Method::Coverage => {
            fixed_coverage_validation(policy.as_mut(), &inputs.fixed_instances, inputs.fixed_bound)
        }
        Method::Dynamic => {
            dynamic_coverage_validation(policy.as_mut(), &inputs.domain, &inputs.dynamic)
                .map(|r| r.score)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: Method,
    pub best_index: usize,
    pub scores: Vec<f64>,
}

/// Scores every checkpoint in order and keeps the best one. Each
/// checkpoint is built fresh from its spec, so no method can observe state
/// left behind by another.
pub fn select_policy(
    checkpoints: &[PolicySpec],
    method: Method,
    inputs: &MethodInputs,
) -> Result<Selection> {
    if checkpoints.is_empty() {
        return Err(Error::Empty("no checkpoints to select from"));
    }
    let scores = checkpoints
        .iter()
        .map(|c| score_checkpoint(c, method, inputs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Selection {
        method,
        best_index: best_index(&scores, method)?,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{greedy_value_policy, PolicyError};

    #[test]
    fn best_index_examples() {
        assert_eq!(best_index(&[0.2, 0.8, 0.8], Method::Coverage).unwrap(), 1);
        assert_eq!(best_index(&[5.0, 1.0, 2.0], Method::Loss).unwrap(), 1);
        assert_eq!(best_index(&[3.0], Method::Dynamic).unwrap(), 0);
        assert!(best_index(&[], Method::Dynamic).is_err());
    }

    #[test]
    fn constant_zero_loss_is_mean_square() {
        let inst =
            domains::generate_instance("gripper", &domains::GeneratorInput::default().with("balls", 1), 1)
                .unwrap();
        let set = LabeledSet {
            instances: vec![inst.clone()],
            tables: vec![],
            states: vec![
                LabeledState {
                    instance: 0,
                    state: inst.init().clone(),
                    value: 3.0,
                },
                LabeledState {
                    instance: 0,
                    state: inst.init().clone(),
                    value: 5.0,
                },
            ],
        };
        let mut zero = greedy_value_policy("zero", |_, _| Ok(0.0));
        assert_eq!(fixed_loss_validation(&mut zero, &set, LossKind::Mse).unwrap(), 17.0);
        let empty = LabeledSet::default();
        assert!(fixed_loss_validation(&mut zero, &empty, LossKind::Mse).is_err());
    }

    #[test]
    fn loss_requires_values() {
        let inst =
            domains::generate_instance("gripper", &domains::GeneratorInput::default().with("balls", 1), 1)
                .unwrap();
        let set = label_states(&[inst]).unwrap();
        let err = fixed_loss_validation(&mut crate::policy::FirstSuccessorPolicy, &set, LossKind::Mse)
            .unwrap_err();
        assert!(matches!(err, Error::Policy(PolicyError::NoValues)));
    }

    #[test]
    fn zero_tau_without_cap_is_rejected() {
        let p = ValidationParams {
            tau: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
