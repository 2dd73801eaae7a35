//! Contrastive queries and the two ways experiments pose them: a random
//! baseline and the best alternative found by re-solving with the queried
//! variables' current values removed.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, Assignment, DcopInstance, ModelError, Value, VarId};
use crate::solvers::{solve_optimal, SolveError};

/// Why `original` rather than `alternative`, asked of `asked_agent`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub asked_agent: AgentId,
    pub original: Assignment,
    pub alternative: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("query size {size} outside 1..={max}")]
    InvalidSize { size: usize, max: usize },
    #[error("no set of {0} variables without an unconstrained member exists")]
    NoFeasibleSubset(usize),
    #[error("no alternative value left for {0}")]
    EmptyAlternativeDomain(VarId),
    #[error("malformed query: {0}")]
    Malformed(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn malformed(msg: impl Into<String>) -> QueryError {
    QueryError::Malformed(msg.into())
}

impl Query {
    pub fn vars(&self) -> BTreeSet<VarId> {
        self.original.vars()
    }

    /// Checks the query against an instance and the solution it is about:
    /// both sides bind the same non-empty variable set, values are in
    /// domain and pointwise different, `original ⊆ sigma`, and the asked
    /// agent exists.
    pub fn validate(&self, inst: &DcopInstance, sigma: &Assignment) -> Result<(), QueryError> {
        if !inst.agents().contains(&self.asked_agent) {
            return Err(malformed(format!("unknown agent {}", self.asked_agent)));
        }
        if self.original.is_empty() {
            return Err(malformed("query names no variables"));
        }
        if self.original.vars() != self.alternative.vars() {
            return Err(malformed("original and alternative bind different variables"));
        }
        inst.check_assignment(&self.original).map_err(|e| malformed(e.to_string()))?;
        inst.check_assignment(&self.alternative).map_err(|e| malformed(e.to_string()))?;
        for (var, value) in self.original.iter() {
            if self.alternative.get(var) == Some(value) {
                return Err(malformed(format!("{var} has the same value {value} on both sides")));
            }
            if sigma.get(var) != Some(value) {
                return Err(malformed(format!("{var}={value} is not part of the solution")));
            }
        }
        Ok(())
    }
}

fn owners_of(inst: &DcopInstance, vars: &BTreeSet<VarId>) -> Result<Vec<AgentId>, QueryError> {
    let mut owners = BTreeSet::new();
    for &v in vars {
        owners.insert(inst.owner(v).ok_or(ModelError::UnknownVariable(v))?);
    }
    Ok(owners.into_iter().collect())
}

fn pick_asked_agent<R: Rng + ?Sized>(
    inst: &DcopInstance,
    vars: &BTreeSet<VarId>,
    rng: &mut R,
) -> Result<AgentId, QueryError> {
    let owners = owners_of(inst, vars)?;
    owners.choose(rng).copied().ok_or_else(|| malformed("query names no variables"))
}

const REJECTION_DRAWS: usize = 10_000;
const EXHAUSTIVE_LIMIT: usize = 20;

/// Samples `q_size` variables uniformly among the sets in which every chosen
/// variable shares a constraint with another chosen one (no requirement for
/// `q_size = 1`). Rejection sampling first, then exhaustive enumeration on
/// instances with at most 20 variables.
pub fn select_query_vars<R: Rng + ?Sized>(
    inst: &DcopInstance,
    sigma: &Assignment,
    q_size: usize,
    rng: &mut R,
) -> Result<BTreeSet<VarId>, QueryError> {
    inst.check_complete(sigma)?;
    let n = inst.num_variables();
    if q_size == 0 || q_size > n {
        return Err(QueryError::InvalidSize { size: q_size, max: n });
    }
    let vars = inst.variables();
    let neighbors: Vec<BTreeSet<usize>> = vars
        .iter()
        .map(|v| {
            inst.neighbors(v.id)
                .iter()
                .map(|w| inst.var_position(*w).expect("known"))
                .collect()
        })
        .collect();
    let feasible = |set: &[usize]| {
        q_size == 1 || set.iter().all(|&p| set.iter().any(|&o| neighbors[p].contains(&o)))
    };
    let to_ids = |set: &[usize]| set.iter().map(|&p| vars[p].id).collect::<BTreeSet<_>>();

    for _ in 0..REJECTION_DRAWS {
        let mut set = index::sample(rng, n, q_size).into_vec();
        set.sort_unstable();
        if feasible(&set) {
            return Ok(to_ids(&set));
        }
    }
    if n > EXHAUSTIVE_LIMIT {
        return Err(QueryError::NoFeasibleSubset(q_size));
    }
    let mut all = Vec::new();
    crate::enumerate::for_each_combination(n, q_size, |set| {
        if feasible(set) {
            all.push(set.to_vec());
        }
        true
    });
    all.choose(rng)
        .map(|set| to_ids(set))
        .ok_or(QueryError::NoFeasibleSubset(q_size))
}

/// Per-variable values barred from random alternatives, beyond the
/// solution's own value.
pub type Exclusions = BTreeMap<VarId, BTreeSet<Value>>;

/// Alternative for each queried variable drawn uniformly from its domain
/// minus the solution value and `exclude`; the asked agent is drawn
/// uniformly from the owners of the queried variables.
pub fn random_baseline_query<R: Rng + ?Sized>(
    inst: &DcopInstance,
    sigma: &Assignment,
    vars: &BTreeSet<VarId>,
    exclude: &Exclusions,
    rng: &mut R,
) -> Result<Query, QueryError> {
    inst.check_complete(sigma)?;
    let mut original = Assignment::new();
    let mut alternative = Assignment::new();
    for &var in vars {
        let v = inst.variable(var).ok_or(ModelError::UnknownVariable(var))?;
        let current = sigma.get(var).expect("complete");
        let barred = exclude.get(&var);
        let choices: Vec<Value> = v
            .domain
            .iter()
            .copied()
            .filter(|&d| d != current && barred.is_none_or(|b| !b.contains(&d)))
            .collect();
        let &pick = choices.choose(rng).ok_or(QueryError::EmptyAlternativeDomain(var))?;
        original.set(var, current);
        alternative.set(var, pick);
    }
    let asked_agent = pick_asked_agent(inst, vars, rng)?;
    Ok(Query { asked_agent, original, alternative })
}

/// Alternative taken from an optimal solution of the restricted problem in
/// which every other variable is frozen to its solution value and each
/// queried variable loses its solution value.
pub fn best_alternative_query<R: Rng + ?Sized>(
    inst: &DcopInstance,
    sigma: &Assignment,
    vars: &BTreeSet<VarId>,
    node_budget: u64,
    rng: &mut R,
) -> Result<Query, QueryError> {
    inst.check_complete(sigma)?;
    let mut restrictions = BTreeMap::new();
    for v in inst.variables() {
        let current = sigma.get(v.id).expect("complete");
        if vars.contains(&v.id) {
            let rest: Vec<Value> = v.domain.iter().copied().filter(|&d| d != current).collect();
            if rest.is_empty() {
                return Err(QueryError::EmptyAlternativeDomain(v.id));
            }
            restrictions.insert(v.id, rest);
        } else {
            restrictions.insert(v.id, vec![current]);
        }
    }
    for &var in vars {
        if inst.variable(var).is_none() {
            return Err(ModelError::UnknownVariable(var).into());
        }
    }
    let restricted = inst.restrict_domains(&restrictions)?;
    let best = solve_optimal(&restricted, node_budget)?;
    let original = vars.iter().map(|&v| (v, sigma.get(v).expect("complete"))).collect();
    let alternative = vars
        .iter()
        .map(|&v| (v, best.solution.get(v).expect("complete")))
        .collect();
    let asked_agent = pick_asked_agent(inst, vars, rng)?;
    Ok(Query { asked_agent, original, alternative })
}
