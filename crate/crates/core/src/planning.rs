//! Grounded STRIPS model shared by every domain: atoms, states, instances,
//! successor generation and goal tests.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::domains::GeneratorInput;
use crate::error::{Error, Result};

pub type ObjectId = u32;
pub type PredicateId = u16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: PredicateId,
    pub args: SmallVec<[ObjectId; 3]>,
}

impl Atom {
    pub fn new(predicate: PredicateId, args: &[ObjectId]) -> Self {
        Atom {
            predicate,
            args: SmallVec::from_slice(args),
        }
    }
}

/// A set of ground atoms kept sorted, so equality, hashing and digests do
/// not depend on insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct State {
    atoms: Vec<Atom>,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        atoms.sort_unstable();
        atoms.dedup();
        State { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.binary_search(atom).is_ok()
    }

    pub fn contains_all(&self, atoms: &[Atom]) -> bool {
        atoms.iter().all(|a| self.contains(a))
    }

    pub fn digest(&self) -> u64 {
        state_digest(self)
    }

    /// Delete-then-add STRIPS update.
    pub fn apply(&self, del: &[Atom], add: &[Atom]) -> State {
        let mut atoms: Vec<Atom> = self
            .atoms
            .iter()
            .filter(|a| !del.contains(a))
            .cloned()
            .collect();
        for a in add {
            if let Err(pos) = atoms.binary_search(a) {
                atoms.insert(pos, a.clone());
            }
        }
        State { atoms }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Digest of the empty state, `0xf52a_15e9_a9b5_e89b`.
pub const EMPTY_STATE_DIGEST: u64 = finalize(FNV_OFFSET);

const fn finalize(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the canonical atom sequence, followed by a splitmix64
/// avalanche step. Stable across builds and platforms.
pub fn state_digest(state: &State) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    for atom in &state.atoms {
        feed(&atom.predicate.to_le_bytes());
        feed(&[atom.args.len() as u8]);
        for arg in &atom.args {
            feed(&arg.to_le_bytes());
        }
    }
    finalize(h)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypedObject {
    pub id: ObjectId,
    pub name: String,
    pub type_name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<ObjectId>,
}

// ---------------------------------------------------------------------------
// Lifted domain model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub arg_types: Vec<String>,
}

/// An atom over action parameters (indices into `ActionSchema::params`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSchema {
    pub predicate: PredicateId,
    pub params: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    /// (parameter name, type name)
    pub params: Vec<(String, String)>,
    /// Parameter pairs that must be bound to different objects.
    pub distinct: Vec<(usize, usize)>,
    pub pre: Vec<AtomSchema>,
    pub add: Vec<AtomSchema>,
    pub del: Vec<AtomSchema>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub types: Vec<String>,
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn new(name: &str, types: &[&str]) -> Self {
        DomainModel {
            name: name.to_owned(),
            types: types.iter().map(|t| (*t).to_owned()).collect(),
            predicates: Vec::new(),
            actions: Vec::new(),
        }
    }

    pub fn predicate_id(&self, name: &str) -> Option<PredicateId> {
        self.predicates
            .iter()
            .position(|p| p.name == name)
            .map(|i| i as PredicateId)
    }

    /// Declares a predicate, e.g. `predicate("on", &["block", "block"])`.
    pub fn predicate(mut self, name: &str, arg_types: &[&str]) -> Self {
        assert!(self.predicate_id(name).is_none(), "duplicate predicate {name}");
        for t in arg_types {
            assert!(self.types.iter().any(|x| x == t), "unknown type {t}");
        }
        self.predicates.push(PredicateDecl {
            name: name.to_owned(),
            arg_types: arg_types.iter().map(|t| (*t).to_owned()).collect(),
        });
        self
    }

    /// Declares an action schema in a PDDL-like shorthand:
    /// parameters `"?x ?y - block"`, atom lists `"(holding ?x) (clear ?y)"`.
    pub fn action(
        mut self,
        name: &str,
        params: &str,
        pre: &str,
        add: &str,
        del: &str,
    ) -> Self {
        let params = parse_params(params);
        for (_, t) in &params {
            assert!(self.types.iter().any(|x| x == t), "unknown type {t}");
        }
        let pre = self.parse_atoms(&params, pre);
        let add = self.parse_atoms(&params, add);
        let del = self.parse_atoms(&params, del);
        self.actions.push(ActionSchema {
            name: name.to_owned(),
            params,
            distinct: Vec::new(),
            pre,
            add,
            del,
        });
        self
    }

    /// Requires two parameters of the last declared action to differ.
    pub fn distinct(mut self, a: &str, b: &str) -> Self {
        let action = self.actions.last_mut().expect("no action declared");
        let idx = |p: &str| {
            action
                .params
                .iter()
                .position(|(n, _)| n == p)
                .unwrap_or_else(|| panic!("unknown parameter {p}"))
        };
        let pair = (idx(a), idx(b));
        action.distinct.push(pair);
        self
    }

    fn parse_atoms(&self, params: &[(String, String)], text: &str) -> Vec<AtomSchema> {
        text.split(')')
            .map(|s| s.trim().trim_start_matches('(').trim())
            .filter(|s| !s.is_empty())
            .map(|s| {
                let mut toks = s.split_whitespace();
                let pred = toks.next().unwrap();
                let predicate = self
                    .predicate_id(pred)
                    .unwrap_or_else(|| panic!("unknown predicate {pred}"));
                let args: Vec<usize> = toks
                    .map(|t| {
                        params
                            .iter()
                            .position(|(n, _)| n == t)
                            .unwrap_or_else(|| panic!("unknown parameter {t}"))
                    })
                    .collect();
                let decl = &self.predicates[predicate as usize];
                assert_eq!(decl.arg_types.len(), args.len(), "arity of {pred}");
                for (i, &p) in args.iter().enumerate() {
                    assert_eq!(decl.arg_types[i], params[p].1, "type of {pred} arg {i}");
                }
                AtomSchema {
                    predicate,
                    params: args,
                }
            })
            .collect()
    }

    /// Predicates never touched by an action effect.
    pub fn static_predicates(&self) -> Vec<bool> {
        let mut fluent = vec![false; self.predicates.len()];
        for a in &self.actions {
            for e in a.add.iter().chain(&a.del) {
                fluent[e.predicate as usize] = true;
            }
        }
        fluent.into_iter().map(|f| !f).collect()
    }
}

fn parse_params(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut toks = text.split_whitespace();
    while let Some(t) = toks.next() {
        if t == "-" {
            let ty = toks.next().expect("type after '-'");
            for p in pending.drain(..) {
                out.push((p, ty.to_owned()));
            }
        } else {
            pending.push(t.to_owned());
        }
    }
    assert!(pending.is_empty(), "untyped parameters in {text}");
    out
}

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// A grounded planning task of known size (number of objects).
#[derive(Clone, Debug)]
pub struct Instance {
    model: Arc<DomainModel>,
    objects: Vec<TypedObject>,
    init: State,
    goal: Vec<Atom>,
    generator_input: GeneratorInput,
    seed: u64,
    ground: OnceLock<Arc<GroundTask>>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.model.name == other.model.name
            && self.objects == other.objects
            && self.init == other.init
            && self.goal == other.goal
            && self.generator_input == other.generator_input
            && self.seed == other.seed
    }
}

impl Instance {
    pub fn new(
        model: Arc<DomainModel>,
        objects: Vec<TypedObject>,
        init: State,
        goal: impl IntoIterator<Item = Atom>,
        generator_input: GeneratorInput,
        seed: u64,
    ) -> Result<Self> {
        let mut goal: Vec<Atom> = goal.into_iter().collect();
        goal.sort_unstable();
        goal.dedup();
        let mut names = std::collections::HashSet::new();
        for (i, o) in objects.iter().enumerate() {
            if o.id as usize != i {
                return Err(Error::Instance(format!("object ids must be dense, got {} at {i}", o.id)));
            }
            if !names.insert(o.name.as_str()) {
                return Err(Error::Instance(format!("duplicate object name {}", o.name)));
            }
            if !model.types.contains(&o.type_name) {
                return Err(Error::Instance(format!("unknown type {}", o.type_name)));
            }
        }
        for atom in init.atoms().iter().chain(&goal) {
            let decl = model
                .predicates
                .get(atom.predicate as usize)
                .ok_or_else(|| Error::Instance(format!("unknown predicate id {}", atom.predicate)))?;
            if decl.arg_types.len() != atom.args.len() {
                return Err(Error::Instance(format!("arity mismatch for {}", decl.name)));
            }
            for (arg, ty) in atom.args.iter().zip(&decl.arg_types) {
                let obj = objects
                    .get(*arg as usize)
                    .ok_or_else(|| Error::Instance(format!("object id {arg} out of range")))?;
                if &obj.type_name != ty {
                    return Err(Error::Instance(format!(
                        "{} expects {ty}, got {} of type {}",
                        decl.name, obj.name, obj.type_name
                    )));
                }
            }
        }
        Ok(Instance {
            model,
            objects,
            init,
            goal,
            generator_input,
            seed,
            ground: OnceLock::new(),
        })
    }

    pub fn domain(&self) -> &str {
        &self.model.name
    }

    pub fn model(&self) -> &Arc<DomainModel> {
        &self.model
    }

    pub fn objects(&self) -> &[TypedObject] {
        &self.objects
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn goal(&self) -> &[Atom] {
        &self.goal
    }

    pub fn generator_input(&self) -> &GeneratorInput {
        &self.generator_input
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Instance size: the number of objects.
    pub fn size(&self) -> usize {
        self.objects.len()
    }

    pub fn object_id(&self, name: &str) -> Option<ObjectId> {
        self.objects.iter().find(|o| o.name == name).map(|o| o.id)
    }

    /// Builds an atom from names; `None` if a name does not resolve.
    pub fn atom(&self, predicate: &str, args: &[&str]) -> Option<Atom> {
        let p = self.model.predicate_id(predicate)?;
        let ids: Option<Vec<ObjectId>> = args.iter().map(|a| self.object_id(a)).collect();
        Some(Atom::new(p, &ids?))
    }

    pub fn atom_names(&self, atom: &Atom) -> Vec<String> {
        let mut v = Vec::with_capacity(atom.args.len() + 1);
        v.push(self.model.predicates[atom.predicate as usize].name.clone());
        v.extend(atom.args.iter().map(|&a| self.objects[a as usize].name.clone()));
        v
    }

    pub fn action_names(&self, action: &GroundAction) -> Vec<String> {
        let mut v = vec![action.name.clone()];
        v.extend(action.args.iter().map(|&a| self.objects[a as usize].name.clone()));
        v
    }

    pub fn format_action(&self, action: &GroundAction) -> String {
        format!("({})", self.action_names(action).join(" "))
    }

    fn ground(&self) -> &GroundTask {
        self.ground
            .get_or_init(|| Arc::new(GroundTask::build(self)))
            .as_ref()
    }

    pub fn to_doc(&self) -> InstanceDoc {
        InstanceDoc {
            domain: self.model.name.clone(),
            objects: self
                .objects
                .iter()
                .map(|o| ObjectDoc {
                    name: o.name.clone(),
                    type_name: o.type_name.clone(),
                })
                .collect(),
            init: self.init.atoms().iter().map(|a| self.atom_names(a)).collect(),
            goal: self.goal.iter().map(|a| self.atom_names(a)).collect(),
            generator_input: self.generator_input.clone(),
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("instance serializes")
    }

    pub fn from_doc(doc: &InstanceDoc) -> Result<Self> {
        let model = crate::domains::descriptor(&doc.domain)?.model.clone();
        let objects: Vec<TypedObject> = doc
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| TypedObject {
                id: i as ObjectId,
                name: o.name.clone(),
                type_name: o.type_name.clone(),
            })
            .collect();
        let by_name: HashMap<&str, ObjectId> =
            objects.iter().map(|o| (o.name.as_str(), o.id)).collect();
        let resolve = |parts: &Vec<String>| -> Result<Atom> {
            let (pred, args) = parts
                .split_first()
                .ok_or_else(|| Error::Instance("empty atom".into()))?;
            let p = model
                .predicate_id(pred)
                .ok_or_else(|| Error::Instance(format!("unknown predicate {pred}")))?;
            let ids = args
                .iter()
                .map(|a| {
                    by_name
                        .get(a.as_str())
                        .copied()
                        .ok_or_else(|| Error::Instance(format!("unknown object {a}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Atom::new(p, &ids))
        };
        let init = doc.init.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        let goal = doc.goal.iter().map(resolve).collect::<Result<Vec<_>>>()?;
        Instance::new(
            model.clone(),
            objects,
            State::new(init),
            goal,
            doc.generator_input.clone(),
            doc.seed,
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Instance::from_doc(&doc)
    }

    /// Serialized form without seed or generator input; two instances with
    /// the same key are structural duplicates.
    pub fn structural_key(&self) -> String {
        let doc = self.to_doc();
        serde_json::to_string(&(&doc.objects, &doc.init, &doc.goal)).expect("serializes")
    }

    /// PDDL problem file (ASCII, lowercase symbols).
    pub fn to_pddl(&self, problem_name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "(define (problem {})", problem_name.to_ascii_lowercase());
        let _ = writeln!(out, "  (:domain {})", self.model.name);
        let _ = writeln!(out, "  (:objects");
        for ty in &self.model.types {
            let names: Vec<&str> = self
                .objects
                .iter()
                .filter(|o| &o.type_name == ty)
                .map(|o| o.name.as_str())
                .collect();
            if !names.is_empty() {
                let _ = writeln!(out, "    {} - {}", names.join(" "), ty);
            }
        }
        let _ = writeln!(out, "  )");
        let _ = writeln!(out, "  (:init");
        for a in self.init.atoms() {
            let _ = writeln!(out, "    ({})", self.atom_names(a).join(" "));
        }
        let _ = writeln!(out, "  )");
        let _ = writeln!(out, "  (:goal (and");
        for a in &self.goal {
            let _ = writeln!(out, "    ({})", self.atom_names(a).join(" "));
        }
        let _ = writeln!(out, "  ))");
        out.push_str(")\n");
        out.to_ascii_lowercase()
    }
}

/// PDDL domain file for a model.
pub fn domain_to_pddl(model: &DomainModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", model.name);
    let _ = writeln!(out, "  (:requirements :strips :typing)");
    let _ = writeln!(out, "  (:types {})", model.types.join(" "));
    let _ = writeln!(out, "  (:predicates");
    for p in &model.predicates {
        let args: Vec<String> = p
            .arg_types
            .iter()
            .enumerate()
            .map(|(i, t)| format!(" ?a{i} - {t}"))
            .collect();
        let _ = writeln!(out, "    ({}{})", p.name, args.concat());
    }
    let _ = writeln!(out, "  )");
    for a in &model.actions {
        let atoms = |list: &[AtomSchema], neg: bool| -> String {
            list.iter()
                .map(|s| {
                    let mut t = model.predicates[s.predicate as usize].name.clone();
                    for &p in &s.params {
                        t.push(' ');
                        t.push_str(&a.params[p].0);
                    }
                    if neg {
                        format!("(not ({t}))")
                    } else {
                        format!("({t})")
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let params: Vec<String> = a.params.iter().map(|(n, t)| format!("{n} - {t}")).collect();
        let mut pre = atoms(&a.pre, false);
        for &(x, y) in &a.distinct {
            let _ = write!(pre, " (not (= {} {}))", a.params[x].0, a.params[y].0);
        }
        let _ = writeln!(out, "  (:action {}", a.name);
        let _ = writeln!(out, "    :parameters ({})", params.join(" "));
        let _ = writeln!(out, "    :precondition (and {})", pre.trim());
        let _ = writeln!(
            out,
            "    :effect (and {} {}))",
            atoms(&a.add, false),
            atoms(&a.del, true)
        );
    }
    out.push_str(")\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
}

/// On-disk JSON form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub domain: String,
    pub objects: Vec<ObjectDoc>,
    pub init: Vec<Vec<String>>,
    pub goal: Vec<Vec<String>>,
    pub generator_input: GeneratorInput,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Grounding and successor generation
// ---------------------------------------------------------------------------

#[derive(Debug)]
struct GroundOp {
    action: GroundAction,
    pre: Vec<Atom>,
    add: Vec<Atom>,
    del: Vec<Atom>,
}

/// Ground operators of one instance, pruned by static preconditions. Each
/// operator is indexed under its first fluent precondition.
#[derive(Debug)]
struct GroundTask {
    ops: Vec<GroundOp>,
    by_trigger: HashMap<Atom, Vec<usize>>,
    always: Vec<usize>,
}

impl GroundTask {
    fn build(instance: &Instance) -> Self {
        let model = &instance.model;
        let is_static = model.static_predicates();
        let mut by_type: HashMap<&str, Vec<ObjectId>> = HashMap::new();
        for o in &instance.objects {
            by_type.entry(o.type_name.as_str()).or_default().push(o.id);
        }
        let mut ops = Vec::new();
        for schema in &model.actions {
            // Static preconditions become checkable once their last parameter is bound.
            let mut checks_at: Vec<Vec<&AtomSchema>> = vec![Vec::new(); schema.params.len()];
            let mut always_static = Vec::new();
            for pre in schema.pre.iter().filter(|p| is_static[p.predicate as usize]) {
                match pre.params.iter().max() {
                    Some(&m) => checks_at[m].push(pre),
                    None => always_static.push(pre),
                }
            }
            let nullary_ok = always_static
                .iter()
                .all(|p| instance.init.contains(&Atom::new(p.predicate, &[])));
            if !nullary_ok {
                continue;
            }
            let domains: Vec<&[ObjectId]> = schema
                .params
                .iter()
                .map(|(_, t)| by_type.get(t.as_str()).map(Vec::as_slice).unwrap_or(&[]))
                .collect();
            let mut binding = vec![0 as ObjectId; schema.params.len()];
            bind(
                0,
                &mut binding,
                &domains,
                schema,
                &checks_at,
                &instance.init,
                &is_static,
                &mut ops,
            );
        }
        ops.sort_by(|a: &GroundOp, b| a.action.cmp(&b.action));
        let mut by_trigger: HashMap<Atom, Vec<usize>> = HashMap::new();
        let mut always = Vec::new();
        for (i, op) in ops.iter().enumerate() {
            match op.pre.first() {
                Some(t) => by_trigger.entry(t.clone()).or_default().push(i),
                None => always.push(i),
            }
        }
        GroundTask {
            ops,
            by_trigger,
            always,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn bind(
    depth: usize,
    binding: &mut Vec<ObjectId>,
    domains: &[&[ObjectId]],
    schema: &ActionSchema,
    checks_at: &[Vec<&AtomSchema>],
    init: &State,
    is_static: &[bool],
    out: &mut Vec<GroundOp>,
) {
    let instantiate = |s: &AtomSchema, binding: &[ObjectId]| {
        let args: SmallVec<[ObjectId; 3]> = s.params.iter().map(|&p| binding[p]).collect();
        Atom {
            predicate: s.predicate,
            args,
        }
    };
    if depth == schema.params.len() {
        let ground = |list: &[AtomSchema]| -> Vec<Atom> {
            let mut v: Vec<Atom> = list.iter().map(|s| instantiate(s, binding)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let pre: Vec<Atom> = schema
            .pre
            .iter()
            .filter(|p| !is_static[p.predicate as usize])
            .map(|s| instantiate(s, binding))
            .collect();
        out.push(GroundOp {
            action: GroundAction {
                name: schema.name.clone(),
                args: binding.clone(),
            },
            pre,
            add: ground(&schema.add),
            del: ground(&schema.del),
        });
        return;
    }
    for &obj in domains[depth] {
        binding[depth] = obj;
        let distinct_ok = schema.distinct.iter().all(|&(a, b)| {
            let m = a.max(b);
            m != depth || binding[a] != binding[b]
        });
        if !distinct_ok {
            continue;
        }
        if checks_at[depth]
            .iter()
            .all(|s| init.contains(&instantiate(s, binding)))
        {
            bind(depth + 1, binding, domains, schema, checks_at, init, is_static, out);
        }
    }
}

/// All applicable ground actions with their successor states, ordered by
/// action name and then argument ids.
pub fn successors(instance: &Instance, state: &State) -> Vec<(GroundAction, State)> {
    let task = instance.ground();
    let mut applicable: Vec<usize> = task.always.clone();
    for atom in state.atoms() {
        if let Some(ops) = task.by_trigger.get(atom) {
            applicable.extend(
                ops.iter()
                    .copied()
                    .filter(|&i| state.contains_all(&task.ops[i].pre[1..])),
            );
        }
    }
    applicable.sort_unstable();
    applicable
        .into_iter()
        .map(|i| {
            let op = &task.ops[i];
            (op.action.clone(), state.apply(&op.del, &op.add))
        })
        .collect()
}

/// Applies one ground action, or `None` when it is not applicable in `state`.
pub fn apply_action(instance: &Instance, state: &State, action: &GroundAction) -> Option<State> {
    let task = instance.ground();
    let i = task
        .ops
        .binary_search_by(|op| op.action.cmp(action))
        .ok()?;
    let op = &task.ops[i];
    state
        .contains_all(&op.pre)
        .then(|| state.apply(&op.del, &op.add))
}

/// Replays a plan from the initial state; returns the final state, or `None`
/// if some action is inapplicable.
pub fn replay(instance: &Instance, plan: &[GroundAction]) -> Option<State> {
    let mut state = instance.init().clone();
    for a in plan {
        state = apply_action(instance, &state, a)?;
    }
    Some(state)
}

pub fn is_goal(instance: &Instance, state: &State) -> bool {
    state.contains_all(&instance.goal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_insertion_order() {
        let atoms = vec![Atom::new(0, &[1, 2]), Atom::new(1, &[0]), Atom::new(0, &[0, 1])];
        let a = State::new(atoms.clone());
        let b = State::new(atoms.into_iter().rev());
        assert_eq!(a, b);
        assert_eq!(state_digest(&a), state_digest(&b));
    }

    #[test]
    fn empty_state_digest_is_documented_constant() {
        assert_eq!(state_digest(&State::default()), EMPTY_STATE_DIGEST);
        assert_eq!(EMPTY_STATE_DIGEST, 0xf52a_15e9_a9b5_e89b);
    }

    #[test]
    fn apply_deletes_before_adding() {
        let s = State::new([Atom::new(0, &[1])]);
        let t = s.apply(&[Atom::new(0, &[1])], &[Atom::new(0, &[1])]);
        assert_eq!(s, t);
        let u = s.apply(&[Atom::new(0, &[1])], &[Atom::new(0, &[2])]);
        assert_eq!(u.atoms(), &[Atom::new(0, &[2])]);
    }

    #[test]
    fn params_parse_with_types() {
        let p = parse_params("?x ?y - block ?r - room");
        assert_eq!(p.len(), 3);
        assert_eq!(p[1], ("?y".into(), "block".into()));
        assert_eq!(p[2].1, "room");
    }
}
