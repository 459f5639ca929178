//! The policy contract, the built-in policies, and the server side of the
//! subprocess bridge used to host external policies.
//!
//! A policy sees the current state, every successor in lexicographic order,
//! and a mask marking successors whose state was already visited. It returns
//! the index of a non-forbidden successor or `None` to give up.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains;
use crate::error::{Error, Result};
use crate::oracle::{self, ValueTable};
use crate::planning::{is_goal, GroundAction, Instance, State};

pub mod bridge;

pub use bridge::{BridgeCommand, BridgePolicy, DEFAULT_TIMEOUT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy timed out after {0} ms")]
    Timeout(u64),
    #[error("policy protocol violation: {0}")]
    Protocol(String),
    #[error("policy process exited: {0}")]
    ChildExit(String),
    #[error("policy has no plan for this instance: {0}")]
    NoPlan(String),
    #[error("policy does not expose state values")]
    NoValues,
    #[error("policy failed: {0}")]
    Failed(String),
}

/// Successor candidates as produced by [`crate::planning::successors`].
pub type Candidates = [(GroundAction, State)];

pub trait Policy: Send {
    fn name(&self) -> String;

    /// Called once before each rollout.
    fn begin(&mut self, _instance: &Instance, _rng: &mut dyn RngCore) -> Result<(), PolicyError> {
        Ok(())
    }

    fn choose(
        &mut self,
        instance: &Instance,
        state: &State,
        candidates: &Candidates,
        forbidden: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError>;

    /// State value `V(s)`, lower is better. Policies without one return
    /// [`PolicyError::NoValues`].
    fn value(&mut self, _instance: &Instance, _state: &State) -> Result<f64, PolicyError> {
        Err(PolicyError::NoValues)
    }

    fn has_values(&self) -> bool {
        false
    }
}

/// Lowest value among non-forbidden entries; ties go to the lowest index.
pub fn argmin_allowed(values: &[f64], forbidden: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if forbidden.get(i).copied().unwrap_or(false) {
            continue;
        }
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

// ---------------------------------------------------------------------------
// Greedy value policies
// ---------------------------------------------------------------------------

pub type ValueFn = Box<dyn FnMut(&Instance, &State) -> Result<f64, PolicyError> + Send>;

/// Moves to the successor with the lowest value.
pub struct GreedyValuePolicy {
    name: String,
    value_fn: ValueFn,
}

pub fn greedy_value_policy(
    name: impl Into<String>,
    value_fn: impl FnMut(&Instance, &State) -> Result<f64, PolicyError> + Send + 'static,
) -> GreedyValuePolicy {
    GreedyValuePolicy {
        name: name.into(),
        value_fn: Box::new(value_fn),
    }
}

impl Policy for GreedyValuePolicy {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn choose(
        &mut self,
        instance: &Instance,
        _state: &State,
        candidates: &Candidates,
        forbidden: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError> {
        let mut values = Vec::with_capacity(candidates.len());
        for (i, (_, s)) in candidates.iter().enumerate() {
            // Forbidden successors are never evaluated.
            values.push(if forbidden[i] {
                f64::INFINITY
            } else {
                (self.value_fn)(instance, s)?
            });
        }
        Ok(argmin_allowed(&values, forbidden))
    }

    fn value(&mut self, instance: &Instance, state: &State) -> Result<f64, PolicyError> {
        (self.value_fn)(instance, state)
    }

    fn has_values(&self) -> bool {
        true
    }
}

/// Caches one exact value table per instance.
#[derive(Default)]
pub struct OracleCache {
    tables: HashMap<String, Arc<ValueTable>>,
}

impl OracleCache {
    pub fn table(&mut self, instance: &Instance) -> Result<Arc<ValueTable>, PolicyError> {
        let key = instance.structural_key();
        if let Some(t) = self.tables.get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(
            oracle::optimal_values(instance).map_err(|e| PolicyError::NoPlan(e.to_string()))?,
        );
        self.tables.insert(key, table.clone());
        Ok(table)
    }

    pub fn value(&mut self, instance: &Instance, state: &State) -> Result<f64, PolicyError> {
        Ok(self.table(instance)?.get(state).unwrap_or(f64::INFINITY))
    }
}

/// Greedy over the exact optimal cost-to-go.
pub fn oracle_greedy_policy() -> GreedyValuePolicy {
    let mut cache = OracleCache::default();
    greedy_value_policy("oracle-greedy", move |inst, s| cache.value(inst, s))
}

/// Greedy over the number of unsatisfied goal atoms.
pub fn goal_count_policy() -> GreedyValuePolicy {
    greedy_value_policy("goal-count", |inst, s| {
        Ok(inst.goal().iter().filter(|g| !s.contains(g)).count() as f64)
    })
}

// ---------------------------------------------------------------------------
// Trivial policies
// ---------------------------------------------------------------------------

/// Always the first non-forbidden successor.
#[derive(Debug, Default)]
pub struct FirstSuccessorPolicy;

impl Policy for FirstSuccessorPolicy {
    fn name(&self) -> String {
        "first-successor".into()
    }

    fn choose(
        &mut self,
        _instance: &Instance,
        _state: &State,
        _candidates: &Candidates,
        forbidden: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError> {
        Ok(forbidden.iter().position(|f| !f))
    }
}

/// Uniform over non-forbidden successors.
#[derive(Debug, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(
        &mut self,
        _instance: &Instance,
        _state: &State,
        _candidates: &Candidates,
        forbidden: &[bool],
        rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError> {
        let allowed: Vec<usize> = (0..forbidden.len()).filter(|&i| !forbidden[i]).collect();
        if allowed.is_empty() {
            return Ok(None);
        }
        Ok(Some(allowed[rng.random_range(0..allowed.len())]))
    }
}

// ---------------------------------------------------------------------------
// Bernoulli test double
// ---------------------------------------------------------------------------

pub type SuccessFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Per-size success probability of a [`BernoulliPolicy`].
#[derive(Clone)]
pub struct BernoulliSpec {
    label: String,
    p: SuccessFn,
}

impl fmt::Debug for BernoulliSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl BernoulliSpec {
    pub fn new(label: impl Into<String>, p: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        BernoulliSpec {
            label: label.into(),
            p: Arc::new(p),
        }
    }

    pub fn constant(p: f64) -> Self {
        Self::new(format!("bernoulli({p})"), move |_| p)
    }

    /// Succeeds exactly on sizes up to `cutoff`, except the listed lapses.
    pub fn stepwise(cutoff: usize, lapses: Vec<usize>) -> Self {
        Self::new(format!("stepwise({cutoff})"), move |n| {
            if n <= cutoff && !lapses.contains(&n) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn probability(&self, n: usize) -> f64 {
        (self.p)(n)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanSource {
    /// The domain's constructive planner.
    #[default]
    Constructive,
    /// Breadth-first optimal plan; only for small instances.
    Oracle,
}

enum Mode {
    Idle,
    Follow { plan: Vec<GroundAction>, pos: usize },
    Stall,
}

/// Draws success once per rollout with probability `p(n)`. On success it
/// follows a precomputed plan; otherwise it wanders without ever entering a
/// goal state until the bound or a dead end stops it.
pub struct BernoulliPolicy {
    spec: BernoulliSpec,
    source: PlanSource,
    value_error: f64,
    mode: Mode,
    oracle: OracleCache,
    plans: HashMap<String, Arc<Vec<GroundAction>>>,
}

pub fn bernoulli_policy(spec: BernoulliSpec) -> BernoulliPolicy {
    BernoulliPolicy {
        spec,
        source: PlanSource::Constructive,
        value_error: 0.0,
        mode: Mode::Idle,
        oracle: OracleCache::default(),
        plans: HashMap::new(),
    }
}

impl BernoulliPolicy {
    pub fn with_plan_source(mut self, source: PlanSource) -> Self {
        self.source = source;
        self
    }

    /// Exposed values are the exact optimal values shifted by this constant,
    /// so the squared loss against the oracle equals `value_error²`.
    pub fn with_value_error(mut self, e: f64) -> Self {
        self.value_error = e;
        self
    }

    fn plan_for(&mut self, instance: &Instance) -> Result<Arc<Vec<GroundAction>>, PolicyError> {
        let key = instance.structural_key();
        if let Some(p) = self.plans.get(&key) {
            return Ok(p.clone());
        }
        let plan = match self.source {
            PlanSource::Constructive => domains::constructive_plan(instance)
                .map_err(|e| PolicyError::NoPlan(e.to_string()))?,
            PlanSource::Oracle => oracle::optimal_plan(instance, usize::MAX)
                .map_err(|e| PolicyError::NoPlan(e.to_string()))?
                .ok_or_else(|| PolicyError::NoPlan("instance is unsolvable".into()))?,
        };
        let plan = Arc::new(plan);
        self.plans.insert(key, plan.clone());
        Ok(plan)
    }
}

impl Policy for BernoulliPolicy {
    fn name(&self) -> String {
        self.spec.label.clone()
    }

    fn begin(&mut self, instance: &Instance, rng: &mut dyn RngCore) -> Result<(), PolicyError> {
        let p = self.spec.probability(instance.size());
        if !(0.0..=1.0).contains(&p) {
            return Err(PolicyError::Failed(format!(
                "success probability {p} at size {} is outside [0, 1]",
                instance.size()
            )));
        }
        // random() is in [0, 1), so p = 1 always and p = 0 never succeeds.
        let success = rng.random::<f64>() < p;
        self.mode = if success {
            Mode::Follow {
                plan: self.plan_for(instance)?.to_vec(),
                pos: 0,
            }
        } else {
            Mode::Stall
        };
        Ok(())
    }

    fn choose(
        &mut self,
        instance: &Instance,
        _state: &State,
        candidates: &Candidates,
        forbidden: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError> {
        match &mut self.mode {
            Mode::Idle => Err(PolicyError::Failed("choose called before begin".into())),
            Mode::Follow { plan, pos } => {
                let Some(step) = plan.get(*pos) else {
                    return Ok(None);
                };
                let idx = candidates
                    .iter()
                    .position(|(a, _)| a == step)
                    .filter(|&i| !forbidden[i])
                    .ok_or_else(|| {
                        PolicyError::NoPlan(format!(
                            "plan step {} is not available",
                            instance.format_action(step)
                        ))
                    })?;
                *pos += 1;
                Ok(Some(idx))
            }
            Mode::Stall => Ok(candidates
                .iter()
                .enumerate()
                .position(|(i, (_, s))| !forbidden[i] && !is_goal(instance, s))),
        }
    }

    fn value(&mut self, instance: &Instance, state: &State) -> Result<f64, PolicyError> {
        Ok(self.oracle.value(instance, state)? + self.value_error)
    }

    fn has_values(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// Specifications
// ---------------------------------------------------------------------------

/// A serializable recipe for a policy, as used by checkpoints and the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySpec {
    OracleGreedy,
    GoalCount,
    FirstSuccessor,
    Random,
    AllFail,
    Bernoulli {
        p: f64,
        #[serde(default)]
        value_error: f64,
        #[serde(default)]
        plan_source: PlanSource,
    },
    Stepwise {
        cutoff: usize,
        #[serde(default)]
        lapses: Vec<usize>,
        #[serde(default)]
        value_error: f64,
        #[serde(default)]
        plan_source: PlanSource,
    },
    Bridge {
        command: Vec<String>,
        #[serde(default)]
        timeout_ms: Option<u64>,
    },
}

impl PolicySpec {
    /// A spec given either as a JSON object or as a short-form string.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::String(s) => Self::parse(&s),
            other => {
                let spec: PolicySpec = serde_json::from_value(other)?;
                spec.check()?;
                Ok(spec)
            }
        }
    }

    /// A JSON array whose entries are accepted by [`PolicySpec::from_value`].
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        let items: Vec<serde_json::Value> = serde_json::from_str(text)?;
        items.into_iter().map(Self::from_value).collect()
    }

    /// Accepts a JSON object or one of the short forms `oracle-greedy`,
    /// `goal-count`, `first-successor`, `random`, `all-fail`,
    /// `bernoulli:P`, `stepwise:CUTOFF` and `bridge:COMMAND ARGS...`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        let bad = || Error::Config(format!("cannot parse policy `{text}`"));
        let spec = match (head, arg) {
            ("oracle-greedy", None) => PolicySpec::OracleGreedy,
            ("goal-count", None) => PolicySpec::GoalCount,
            ("first-successor", None) => PolicySpec::FirstSuccessor,
            ("random", None) => PolicySpec::Random,
            ("all-fail", None) => PolicySpec::AllFail,
            ("bernoulli", Some(p)) => PolicySpec::Bernoulli {
                p: p.parse().map_err(|_| bad())?,
                value_error: 0.0,
                plan_source: PlanSource::Constructive,
            },
            ("stepwise", Some(c)) => PolicySpec::Stepwise {
                cutoff: c.parse().map_err(|_| bad())?,
                lapses: Vec::new(),
                value_error: 0.0,
                plan_source: PlanSource::Constructive,
            },
            ("bridge", Some(cmd)) => PolicySpec::Bridge {
                command: cmd.split_whitespace().map(str::to_owned).collect(),
                timeout_ms: None,
            },
            _ => return Err(bad()),
        };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<()> {
        match self {
            PolicySpec::Bernoulli { p, .. } if !(0.0..=1.0).contains(p) => {
                Err(Error::Config(format!("bernoulli probability {p} is outside [0, 1]")))
            }
            PolicySpec::Bridge { command, .. } if command.is_empty() => {
                Err(Error::Config("bridge command is empty".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Policy>> {
        self.check()?;
        Ok(match self {
            PolicySpec::OracleGreedy => Box::new(oracle_greedy_policy()),
            PolicySpec::GoalCount => Box::new(goal_count_policy()),
            PolicySpec::FirstSuccessor => Box::new(FirstSuccessorPolicy),
            PolicySpec::Random => Box::new(RandomPolicy),
            PolicySpec::AllFail => Box::new(
                bernoulli_policy(BernoulliSpec::new("all-fail", |_| 0.0)),
            ),
            PolicySpec::Bernoulli {
                p,
                value_error,
                plan_source,
            } => Box::new(
                bernoulli_policy(BernoulliSpec::constant(*p))
                    .with_value_error(*value_error)
                    .with_plan_source(*plan_source),
            ),
            PolicySpec::Stepwise {
                cutoff,
                lapses,
                value_error,
                plan_source,
            } => Box::new(
                bernoulli_policy(BernoulliSpec::stepwise(*cutoff, lapses.clone()))
                    .with_value_error(*value_error)
                    .with_plan_source(*plan_source),
            ),
            PolicySpec::Bridge {
                command,
                timeout_ms,
            } => {
                let mut cmd = BridgeCommand::new(command.clone());
                if let Some(ms) = timeout_ms {
                    cmd = cmd.with_timeout(std::time::Duration::from_millis(*ms));
                }
                Box::new(BridgePolicy::new(cmd))
            }
        })
    }
}

/// Serde adapter for checkpoint lists that mix spec objects and short forms.
pub fn deserialize_spec_list<'de, D>(d: D) -> Result<Vec<PolicySpec>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let items = Vec::<serde_json::Value>::deserialize(d)?;
    items
        .into_iter()
        .map(|v| PolicySpec::from_value(v).map_err(serde::de::Error::custom))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{generate_instance, GeneratorInput};
    use crate::planning::successors;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gripper(balls: i64) -> Instance {
        generate_instance("gripper", &GeneratorInput::default().with("balls", balls), 1).unwrap()
    }

    #[test]
    fn argmin_ties_pick_lowest_index() {
        assert_eq!(argmin_allowed(&[2.0, 1.0, 1.0], &[false; 3]), Some(1));
        assert_eq!(argmin_allowed(&[1.0, 1.0], &[false, false]), Some(0));
        assert_eq!(argmin_allowed(&[0.0, 5.0], &[true, false]), Some(1));
        assert_eq!(argmin_allowed(&[0.0, 5.0], &[true, true]), None);
    }

    #[test]
    fn greedy_returns_none_when_everything_is_forbidden() {
        let inst = gripper(1);
        let succ = successors(&inst, inst.init());
        let mut p = goal_count_policy();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all = vec![true; succ.len()];
        assert_eq!(p.choose(&inst, inst.init(), &succ, &all, &mut rng).unwrap(), None);
    }

    #[test]
    fn stepwise_probability() {
        let s = BernoulliSpec::stepwise(10, vec![7]);
        assert_eq!(s.probability(6), 1.0);
        assert_eq!(s.probability(7), 0.0);
        assert_eq!(s.probability(10), 1.0);
        assert_eq!(s.probability(11), 0.0);
    }

    #[test]
    fn stalling_never_enters_a_goal_state() {
        let inst = gripper(1);
        let mut p = bernoulli_policy(BernoulliSpec::constant(0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        p.begin(&inst, &mut rng).unwrap();
        let mut state = inst.init().clone();
        let mut visited = vec![state.digest()];
        loop {
            let succ = successors(&inst, &state);
            let forbidden: Vec<bool> =
                succ.iter().map(|(_, s)| visited.contains(&s.digest())).collect();
            match p.choose(&inst, &state, &succ, &forbidden, &mut rng).unwrap() {
                Some(i) => {
                    state = succ[i].1.clone();
                    assert!(!is_goal(&inst, &state));
                    visited.push(state.digest());
                }
                None => break,
            }
        }
    }

    #[test]
    fn spec_short_forms() {
        assert_eq!(PolicySpec::parse("oracle-greedy").unwrap(), PolicySpec::OracleGreedy);
        assert!(matches!(
            PolicySpec::parse("stepwise:12").unwrap(),
            PolicySpec::Stepwise { cutoff: 12, .. }
        ));
        match PolicySpec::parse("bridge:python3 -u a.py").unwrap() {
            PolicySpec::Bridge { command, .. } => assert_eq!(command, ["python3", "-u", "a.py"]),
            other => panic!("{other:?}"),
        }
        assert!(PolicySpec::parse("bernoulli:1.5").is_err());
        assert!(PolicySpec::parse("nonsense").is_err());
        let json = r#"{"kind":"stepwise","cutoff":4,"value_error":2.0}"#;
        assert!(matches!(
            PolicySpec::parse(json).unwrap(),
            PolicySpec::Stepwise { cutoff: 4, .. }
        ));
    }
}
