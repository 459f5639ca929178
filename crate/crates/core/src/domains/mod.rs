//! Built-in domains. Each one pairs a STRIPS model with an instance
//! generator, the composition CSP describing how many objects a generator
//! input produces, and a constructive (non-optimal) planner.

mod blocksworld;
mod childsnack;
mod ferry;
mod gripper;
mod rovers;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{self, CompositionCsp, CspLedger, SideConstraint};
use crate::error::{Error, Result};
use crate::planning::{
    replay, Atom, DomainModel, GroundAction, Instance, ObjectId, State, TypedObject,
};
use crate::seeds::derive_seed;

/// Named generator parameters: the size variables of the domain CSP plus any
/// parameters that do not change the object count.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GeneratorInput(pub BTreeMap<String, i64>);

impl GeneratorInput {
    pub fn get(&self, name: &str) -> Option<i64> {
        self.0.get(name).copied()
    }

    pub fn with(mut self, name: &str, value: i64) -> Self {
        self.0.insert(name.to_owned(), value);
        self
    }

    fn count(&self, name: &str) -> usize {
        self.get(name).unwrap_or(0).max(0) as usize
    }
}

/// Inclusive range of a parameter that does not affect instance size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

type GenerateFn = fn(&DomainDescriptor, &GeneratorInput, &mut ChaCha8Rng, u64) -> Result<Instance>;
type PlanFn = fn(&Instance) -> Result<Vec<GroundAction>>;

pub struct DomainDescriptor {
    pub id: &'static str,
    pub model: Arc<DomainModel>,
    pub csp: CompositionCsp,
    pub extra_params: Vec<ParamRange>,
    /// Plan-length bound used for validation at IPC scale.
    pub reference_bound: usize,
    /// Desk-scale training sizes used by the default experiment config.
    pub default_training_sizes: (usize, usize),
    generate: GenerateFn,
    plan: PlanFn,
}

impl std::fmt::Debug for DomainDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainDescriptor")
            .field("id", &self.id)
            .field("csp", &self.csp)
            .field("extra_params", &self.extra_params)
            .finish()
    }
}

impl DomainDescriptor {
    pub fn size_params(&self) -> impl Iterator<Item = &str> {
        self.csp.vars.iter().map(|v| v.name.as_str())
    }

    /// Turns a CSP solution into a generator input, sampling non-size
    /// parameters uniformly from their ranges.
    pub fn input_from(&self, assignment: &csp::Assignment, rng: &mut dyn RngCore) -> GeneratorInput {
        let mut input = GeneratorInput::default();
        for (var, &value) in self.csp.vars.iter().zip(assignment.values()) {
            input.0.insert(var.name.clone(), value as i64);
        }
        for p in &self.extra_params {
            input.0.insert(p.name.clone(), rng.random_range(p.lo..=p.hi));
        }
        input
    }

    pub fn size_values(&self, input: &GeneratorInput) -> Result<Vec<u64>> {
        self.csp
            .vars
            .iter()
            .map(|v| {
                let x = input
                    .get(&v.name)
                    .ok_or_else(|| Error::InvalidInput(format!("missing parameter {}", v.name)))?;
                u64::try_from(x)
                    .map_err(|_| Error::InvalidInput(format!("{} must be nonnegative", v.name)))
            })
            .collect()
    }

    pub fn validate_input(&self, input: &GeneratorInput) -> Result<()> {
        for key in input.0.keys() {
            let known = self.size_params().any(|p| p == key)
                || self.extra_params.iter().any(|p| &p.name == key);
            if !known {
                return Err(Error::InvalidInput(format!("unknown parameter {key}")));
            }
        }
        let values = self.size_values(input)?;
        for (v, &x) in self.csp.vars.iter().zip(&values) {
            if x < v.lo || v.hi.is_some_and(|h| x > h) {
                return Err(Error::InvalidInput(format!("{} = {x} out of bounds", v.name)));
            }
        }
        for c in &self.csp.constraints {
            if !c.holds(&values) {
                return Err(Error::InvalidInput(format!("side constraint {c:?} violated")));
            }
        }
        for p in &self.extra_params {
            let x = input
                .get(&p.name)
                .ok_or_else(|| Error::InvalidInput(format!("missing parameter {}", p.name)))?;
            if x < p.lo || x > p.hi {
                return Err(Error::InvalidInput(format!("{} = {x} outside [{}, {}]", p.name, p.lo, p.hi)));
            }
        }
        Ok(())
    }

    pub fn ledger(&self) -> CspLedger {
        let mut linear = Vec::new();
        let mut predicates = Vec::new();
        for c in &self.csp.constraints {
            match c {
                SideConstraint::Linear(l) => linear.push(l.clone()),
                SideConstraint::Predicate { name, .. } => predicates.push(name.clone()),
            }
        }
        CspLedger {
            domain: self.id.to_owned(),
            size_equation: self.csp.size_equation(),
            offset: self.csp.offset,
            variables: self.csp.vars.clone(),
            linear_constraints: linear,
            predicate_constraints: predicates,
            non_size_parameters: self.extra_params.clone(),
        }
    }
}

fn registry() -> &'static [DomainDescriptor] {
    static REGISTRY: OnceLock<Vec<DomainDescriptor>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            blocksworld::descriptor(),
            gripper::descriptor(),
            ferry::descriptor(),
            childsnack::descriptor(),
            rovers::descriptor(),
        ]
    })
}

pub fn domain_ids() -> Vec<&'static str> {
    registry().iter().map(|d| d.id).collect()
}

pub fn descriptor(domain_id: &str) -> Result<&'static DomainDescriptor> {
    registry()
        .iter()
        .find(|d| d.id == domain_id)
        .ok_or_else(|| Error::UnknownDomain(domain_id.to_owned()))
}

/// Deterministic in `(input, seed)`; the object count always equals the CSP
/// size of `input`.
pub fn generate_instance(domain_id: &str, input: &GeneratorInput, seed: u64) -> Result<Instance> {
    let desc = descriptor(domain_id)?;
    desc.validate_input(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = (desc.generate)(desc, input, &mut rng, seed)?;
    let expected = desc.csp.size_of(&desc.size_values(input)?) as usize;
    debug_assert_eq!(instance.size(), expected, "{domain_id} size equation");
    if instance.size() != expected {
        return Err(Error::Domain(format!(
            "{domain_id} generator produced {} objects, expected {expected}",
            instance.size()
        )));
    }
    Ok(instance)
}

/// A plan built from the domain's structure rather than by search. Valid
/// but not optimal; never revisits a state.
pub fn constructive_plan(instance: &Instance) -> Result<Vec<GroundAction>> {
    let desc = descriptor(instance.domain())?;
    let plan = (desc.plan)(instance)?;
    Ok(remove_loops(instance, plan))
}

/// Drops plan segments that return to an earlier state.
fn remove_loops(instance: &Instance, plan: Vec<GroundAction>) -> Vec<GroundAction> {
    let mut states = vec![instance.init().clone()];
    let mut out: Vec<GroundAction> = Vec::with_capacity(plan.len());
    let mut seen: HashMap<State, usize> = HashMap::new();
    seen.insert(instance.init().clone(), 0);
    for a in plan {
        let cur = states.last().unwrap();
        let Some(next) = crate::planning::apply_action(instance, cur, &a) else {
            // Leave invalid plans untouched for the caller's replay check.
            out.push(a);
            continue;
        };
        if let Some(&pos) = seen.get(&next) {
            for s in states.drain(pos + 1..) {
                seen.remove(&s);
            }
            out.truncate(pos);
        } else {
            seen.insert(next.clone(), states.len());
            states.push(next);
            out.push(a);
        }
    }
    out
}

/// Instances of one size set, plus the sizes for which no composition exists.
#[derive(Clone, Debug)]
pub struct InstanceSet {
    pub instances: Vec<Instance>,
    pub skipped_sizes: Vec<usize>,
}

/// Draws `per_size_count` generator inputs per size uniformly from all CSP
/// solutions, generates, and drops structural duplicates.
pub fn build_instance_set(
    domain_id: &str,
    sizes: &[usize],
    per_size_count: usize,
    seed: u64,
) -> Result<InstanceSet> {
    if per_size_count == 0 {
        return Err(Error::Config("per_size_count must be at least 1".into()));
    }
    let desc = descriptor(domain_id)?;
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for &n in sizes {
        let all = csp::solve_all(&desc.csp, n as u64)?;
        if all.is_empty() {
            skipped.push(n);
            continue;
        }
        let mut seen = HashSet::new();
        for i in 0..per_size_count {
            let s = derive_seed(seed, &[n as u64, i as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let assignment = csp::sample_uniform(&all, &mut rng)?;
            let input = desc.input_from(assignment, &mut rng);
            let inst = generate_instance(domain_id, &input, s)?;
            if seen.insert(inst.structural_key()) {
                instances.push(inst);
            }
        }
    }
    Ok(InstanceSet {
        instances,
        skipped_sizes: skipped,
    })
}

// ---------------------------------------------------------------------------
// Helpers shared by the generators and planners
// ---------------------------------------------------------------------------

pub(crate) struct Builder {
    model: Arc<DomainModel>,
    objects: Vec<TypedObject>,
    init: Vec<Atom>,
    goal: Vec<Atom>,
}

impl Builder {
    fn new(model: &Arc<DomainModel>) -> Self {
        Builder {
            model: model.clone(),
            objects: Vec::new(),
            init: Vec::new(),
            goal: Vec::new(),
        }
    }

    fn object(&mut self, name: String, type_name: &str) -> ObjectId {
        let id = self.objects.len() as ObjectId;
        self.objects.push(TypedObject {
            id,
            name,
            type_name: type_name.to_owned(),
        });
        id
    }

    /// `count` objects named `{prefix}1..{prefix}count`.
    fn objects(&mut self, prefix: &str, count: usize, type_name: &str) -> Vec<ObjectId> {
        (1..=count)
            .map(|i| self.object(format!("{prefix}{i}"), type_name))
            .collect()
    }

    fn atom(&self, predicate: &str, args: &[ObjectId]) -> Atom {
        let p = self
            .model
            .predicate_id(predicate)
            .unwrap_or_else(|| panic!("unknown predicate {predicate}"));
        Atom::new(p, args)
    }

    fn init(&mut self, predicate: &str, args: &[ObjectId]) {
        let a = self.atom(predicate, args);
        self.init.push(a);
    }

    fn goal(&mut self, predicate: &str, args: &[ObjectId]) {
        let a = self.atom(predicate, args);
        self.goal.push(a);
    }

    fn finish(self, input: &GeneratorInput, seed: u64) -> Result<Instance> {
        Instance::new(
            self.model,
            self.objects,
            State::new(self.init),
            self.goal,
            input.clone(),
            seed,
        )
    }
}

/// Argument tuples of all atoms of `predicate` in `atoms`.
fn tuples<'a>(instance: &Instance, atoms: &'a [Atom], predicate: &str) -> Vec<&'a [ObjectId]> {
    match instance.model().predicate_id(predicate) {
        Some(p) => atoms
            .iter()
            .filter(|a| a.predicate == p)
            .map(|a| a.args.as_slice())
            .collect(),
        None => Vec::new(),
    }
}

fn objects_of(instance: &Instance, type_name: &str) -> Vec<ObjectId> {
    instance
        .objects()
        .iter()
        .filter(|o| o.type_name == type_name)
        .map(|o| o.id)
        .collect()
}

fn act(name: &str, args: &[ObjectId]) -> GroundAction {
    GroundAction {
        name: name.to_owned(),
        args: args.to_vec(),
    }
}

/// Checks a plan by replay; used by planners before returning.
fn checked(instance: &Instance, plan: Vec<GroundAction>) -> Result<Vec<GroundAction>> {
    match replay(instance, &plan) {
        Some(s) if crate::planning::is_goal(instance, &s) => Ok(plan),
        _ => Err(Error::Domain(format!(
            "constructive {} plan failed replay",
            instance.domain()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_five_domains() {
        assert_eq!(
            domain_ids(),
            vec!["blocksworld", "gripper", "ferry", "childsnack", "rovers"]
        );
        assert!(matches!(descriptor("visitall"), Err(Error::UnknownDomain(_))));
    }

    #[test]
    fn invalid_input_rejected() {
        let input = GeneratorInput::default()
            .with("children", 2)
            .with("trays", 1)
            .with("sandwiches", 1)
            .with("allergic_percent", 0);
        assert!(matches!(
            generate_instance("childsnack", &input, 0),
            Err(Error::InvalidInput(_))
        ));
        let input = GeneratorInput::default().with("blocks", 1);
        assert!(generate_instance("blocksworld", &input, 0).is_err());
        let input = GeneratorInput::default().with("balls", 1).with("bogus", 3);
        assert!(generate_instance("gripper", &input, 0).is_err());
    }

    #[test]
    fn per_size_count_zero_is_config_error() {
        assert!(build_instance_set("gripper", &[5], 0, 1).is_err());
    }
}
