//! Size-composition constraint problems: which generator inputs produce an
//! instance with exactly `n` objects.
//!
//! The size equation is `n = c_1 v_1 + ... + c_k v_k + c_0` with per-variable
//! bounds, plus side constraints over the variables.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use rand::seq::{index, IndexedRandom};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of enumerated solutions.
pub const DEFAULT_SOLUTION_CAP: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspVar {
    pub name: String,
    pub coeff: u64,
    pub lo: u64,
    /// `None` means unbounded above.
    pub hi: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "==")]
    Eq,
}

/// `sum(coeff * v[var]) cmp rhs`
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, i64)>,
    pub cmp: Cmp,
    pub rhs: i64,
}

impl LinearConstraint {
    pub fn holds(&self, values: &[u64]) -> bool {
        let lhs: i64 = self.terms.iter().map(|&(v, c)| c * values[v] as i64).sum();
        match self.cmp {
            Cmp::Le => lhs <= self.rhs,
            Cmp::Lt => lhs < self.rhs,
            Cmp::Ge => lhs >= self.rhs,
            Cmp::Gt => lhs > self.rhs,
            Cmp::Eq => lhs == self.rhs,
        }
    }

    /// `v[a] <= v[b]`
    pub fn le(a: usize, b: usize) -> Self {
        LinearConstraint {
            terms: vec![(a, 1), (b, -1)],
            cmp: Cmp::Le,
            rhs: 0,
        }
    }
}

pub type AssignmentPredicate = Arc<dyn Fn(&[u64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum SideConstraint {
    Linear(LinearConstraint),
    /// Extension hook for constraints that are not linear.
    Predicate {
        name: String,
        check: AssignmentPredicate,
    },
}

impl SideConstraint {
    pub fn holds(&self, values: &[u64]) -> bool {
        match self {
            SideConstraint::Linear(c) => c.holds(values),
            SideConstraint::Predicate { check, .. } => check(values),
        }
    }
}

impl fmt::Debug for SideConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SideConstraint::Linear(c) => c.fmt(f),
            SideConstraint::Predicate { name, .. } => write!(f, "Predicate({name})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompositionCsp {
    pub vars: Vec<CspVar>,
    pub offset: u64,
    pub constraints: Vec<SideConstraint>,
    pub solution_cap: usize,
}

/// Values `v_1..v_k` in variable order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment(pub Vec<u64>);

impl Assignment {
    pub fn values(&self) -> &[u64] {
        &self.0
    }
}

impl CompositionCsp {
    pub fn new(vars: Vec<CspVar>, offset: u64) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::Config("composition CSP needs at least one variable".into()));
        }
        if vars.iter().all(|v| v.coeff == 0) {
            return Err(Error::Config("at least one coefficient must be positive".into()));
        }
        for v in &vars {
            if v.lo < 1 {
                return Err(Error::Config(format!("variable {} needs lower bound >= 1", v.name)));
            }
            if matches!(v.hi, Some(h) if h < v.lo) {
                return Err(Error::Config(format!("variable {} has empty range", v.name)));
            }
        }
        Ok(CompositionCsp {
            vars,
            offset,
            constraints: Vec::new(),
            solution_cap: DEFAULT_SOLUTION_CAP,
        })
    }

    pub fn with_constraint(mut self, c: SideConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn with_solution_cap(mut self, cap: usize) -> Self {
        self.solution_cap = cap;
        self
    }

    pub fn size_of(&self, values: &[u64]) -> u64 {
        self.offset
            + self
                .vars
                .iter()
                .zip(values)
                .map(|(v, x)| v.coeff * x)
                .sum::<u64>()
    }

    /// Size equation, bounds and side constraints all hold.
    pub fn satisfied_by(&self, n: u64, values: &[u64]) -> bool {
        values.len() == self.vars.len()
            && self
                .vars
                .iter()
                .zip(values)
                .all(|(v, &x)| x >= v.lo && v.hi.is_none_or(|h| x <= h))
            && self.size_of(values) == n
            && self.constraints.iter().all(|c| c.holds(values))
    }

    /// Smallest size reachable under the lower bounds (side constraints ignored).
    pub fn min_size(&self) -> u64 {
        self.offset + self.vars.iter().map(|v| v.coeff * v.lo).sum::<u64>()
    }

    /// Walks all satisfying assignments in lexicographic order. All variables
    /// except the last one with a positive coefficient are enumerated; that
    /// one is solved in closed form.
    fn visit<F>(&self, n: u64, mut f: F) -> Result<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        let k = self.vars.len();
        let solved = (0..k).rev().find(|&i| self.vars[i].coeff > 0).unwrap();
        for (i, v) in self.vars.iter().enumerate() {
            if v.coeff == 0 && v.hi.is_none() && i != solved {
                return Err(Error::Resource(format!(
                    "variable {} does not affect size and is unbounded",
                    v.name
                )));
            }
        }
        if n < self.min_size() {
            return Ok(());
        }
        let budget = n - self.offset;
        // Minimum contribution of variables after position i.
        let mut tail_min = vec![0u64; k + 1];
        for i in (0..k).rev() {
            tail_min[i] = tail_min[i + 1] + self.vars[i].coeff * self.vars[i].lo;
        }
        let mut values: Vec<u64> = self.vars.iter().map(|v| v.lo).collect();
        let _ = self.descend(0, solved, budget, &tail_min, &mut values, &mut f);
        Ok(())
    }

    fn descend<F>(
        &self,
        i: usize,
        solved: usize,
        remaining: u64,
        tail_min: &[u64],
        values: &mut Vec<u64>,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        if i == self.vars.len() {
            if remaining != 0 {
                return ControlFlow::Continue(());
            }
            if self.constraints.iter().all(|c| c.holds(values)) {
                return f(values);
            }
            return ControlFlow::Continue(());
        }
        let var = &self.vars[i];
        // Budget left for this variable once the others take their minimum.
        let others_min = tail_min[i + 1];
        if remaining < others_min + var.coeff * var.lo {
            return ControlFlow::Continue(());
        }
        if i == solved {
            // Remaining variables after `solved` all have coefficient 0, so
            // v_solved is forced once their (fixed) contribution is known.
            if !remaining.is_multiple_of(var.coeff) {
                return ControlFlow::Continue(());
            }
            let x = remaining / var.coeff;
            if x < var.lo || var.hi.is_some_and(|h| x > h) {
                return ControlFlow::Continue(());
            }
            values[i] = x;
            return self.zero_tail(i + 1, values, f);
        }
        let max = match (remaining - others_min).checked_div(var.coeff) {
            None => var.hi.unwrap(),
            Some(m) => var.hi.map_or(m, |h| h.min(m)),
        };
        for x in var.lo..=max {
            values[i] = x;
            let left = remaining - var.coeff * x;
            self.descend(i + 1, solved, left, tail_min, values, f)?;
        }
        ControlFlow::Continue(())
    }

    /// Enumerates the zero-coefficient variables after the solved one.
    fn zero_tail<F>(&self, i: usize, values: &mut Vec<u64>, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[u64]) -> ControlFlow<()>,
    {
        if i == self.vars.len() {
            if self.constraints.iter().all(|c| c.holds(values)) {
                return f(values);
            }
            return ControlFlow::Continue(());
        }
        let var = &self.vars[i];
        for x in var.lo..=var.hi.unwrap() {
            values[i] = x;
            self.zero_tail(i + 1, values, f)?;
        }
        ControlFlow::Continue(())
    }
}

/// Every satisfying assignment, lexicographically ordered.
pub fn solve_all(csp: &CompositionCsp, n: u64) -> Result<Vec<Assignment>> {
    let mut out = Vec::new();
    let mut overflow = false;
    let cap = csp.solution_cap;
    csp.visit(n, |v| {
        if out.len() == cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        out.push(Assignment(v.to_vec()));
        ControlFlow::Continue(())
    })?;
    if overflow {
        return Err(Error::Resource(format!(
            "more than {cap} compositions for size {n}"
        )));
    }
    // The closed-form variable is the last positive-coefficient one, so
    // enumeration order is already lexicographic unless zero-coefficient
    // variables sit after it; sort to be safe.
    out.sort_unstable();
    Ok(out)
}

/// Up to `k` distinct solutions: all of them when there are at most `k`,
/// otherwise a uniformly random `k`-subset (returned in lexicographic order).
pub fn solve_k(
    csp: &CompositionCsp,
    n: u64,
    k: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Assignment>> {
    let all = solve_all(csp, n)?;
    if all.len() <= k {
        return Ok(all);
    }
    let mut picked = index::sample(rng, all.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| all[i].clone()).collect())
}

/// Stops at the first solution found.
pub fn has_solution(csp: &CompositionCsp, n: u64) -> bool {
    let mut found = false;
    let _ = csp.visit(n, |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

pub fn sample_uniform<'a>(
    assignments: &'a [Assignment],
    rng: &mut dyn RngCore,
) -> Result<&'a Assignment> {
    assignments
        .choose(rng)
        .ok_or(Error::Empty("no assignments to sample from"))
}

/// Serializable description of a CSP (coefficients, offset, bounds and the
/// side constraints), written to the per-domain ledger files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CspLedger {
    pub domain: String,
    pub size_equation: String,
    pub offset: u64,
    pub variables: Vec<CspVar>,
    pub linear_constraints: Vec<LinearConstraint>,
    pub predicate_constraints: Vec<String>,
    pub non_size_parameters: Vec<crate::domains::ParamRange>,
}

impl CompositionCsp {
    pub fn size_equation(&self) -> String {
        let terms: Vec<String> = self
            .vars
            .iter()
            .map(|v| {
                if v.coeff == 1 {
                    v.name.clone()
                } else {
                    format!("{}*{}", v.coeff, v.name)
                }
            })
            .collect();
        format!("n = {} + {}", terms.join(" + "), self.offset)
    }
}
