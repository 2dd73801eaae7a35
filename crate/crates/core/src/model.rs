//! The DCOP data model: agents, variables, domains, cost tables and the
//! variable-to-agent mapping, plus grounding and explanation validity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{Cost, CostOverflow};
use crate::enumerate::for_each_tuple;

/// A domain value. Domains are ordered lists of these.
pub type Value = i64;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Agent identifier.
    AgentId,
    "a"
);
id_type!(
    /// Variable identifier.
    VarId,
    "x"
);
id_type!(
    /// Constraint identifier, unique within an instance.
    ConstraintId,
    "f"
);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate agent id {0}")]
    DuplicateAgent(AgentId),
    #[error("duplicate variable id {0}")]
    DuplicateVariable(VarId),
    #[error("duplicate constraint id {0}")]
    DuplicateConstraint(ConstraintId),
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
    #[error("unknown variable {0}")]
    UnknownVariable(VarId),
    #[error("variable {0} has an empty domain")]
    EmptyDomain(VarId),
    #[error("variable {0} lists domain value {1} twice")]
    DuplicateDomainValue(VarId, Value),
    #[error("variable {0} has {1} labels for a domain of size {2}")]
    LabelCount(VarId, usize, usize),
    #[error("constraint {0} has an empty scope")]
    EmptyScope(ConstraintId),
    #[error("constraint {0} lists variable {1} twice in its scope")]
    DuplicateScopeVariable(ConstraintId, VarId),
    #[error("constraint {id} table has {actual} entries, expected {expected}")]
    TableSize { id: ConstraintId, expected: usize, actual: usize },
    #[error("constraint {0} table is missing the entry for {1:?}")]
    MissingTableEntry(ConstraintId, Vec<Value>),
    #[error("constraint {0} table lists {1:?} twice")]
    DuplicateTableEntry(ConstraintId, Vec<Value>),
    #[error("value {1} is not in the domain of {0}")]
    ValueOutOfDomain(VarId, Value),
    #[error("variable {0} is unbound")]
    UnboundVariable(VarId),
    #[error("solution is incomplete: {0} is unbound")]
    IncompleteSolution(VarId),
    #[error("explanation cost fields do not match their sides")]
    InconsistentExplanation,
    #[error(transparent)]
    Overflow(#[from] CostOverflow),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub id: VarId,
    pub domain: Vec<Value>,
    pub owner: AgentId,
    pub name: Option<String>,
    /// Display labels aligned with `domain`.
    pub labels: Option<Vec<String>>,
}

impl Variable {
    pub fn new(id: VarId, domain: Vec<Value>, owner: AgentId) -> Self {
        Self { id, domain, owner, name: None, labels: None }
    }

    /// Position of `value` in the domain.
    pub fn index_of(&self, value: Value) -> Option<usize> {
        self.domain.iter().position(|&v| v == value)
    }

    pub fn contains(&self, value: Value) -> bool {
        self.index_of(value).is_some()
    }
}

/// A cost function over an ordered scope, stored as a dense row-major table
/// over the scope's domains (the first scope variable varies slowest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub id: ConstraintId,
    pub scope: Vec<VarId>,
    pub name: Option<String>,
    dims: Vec<usize>,
    table: Vec<Cost>,
}

impl Constraint {
    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn table(&self) -> &[Cost] {
        &self.table
    }

    /// Table entry for the given per-variable domain positions.
    pub fn cost_at(&self, positions: &[usize]) -> Cost {
        self.table[self.flat_index(positions)]
    }

    pub fn flat_index(&self, positions: &[usize]) -> usize {
        debug_assert_eq!(positions.len(), self.dims.len());
        positions
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&p, &d)| acc * d + p)
    }

    /// Inverse of [`Constraint::flat_index`].
    pub fn positions_of(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }

    pub fn involves(&self, var: VarId) -> bool {
        self.scope.contains(&var)
    }
}

/// A complete or partial map from variables to values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(BTreeMap<VarId, Value>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: VarId) -> Option<Value> {
        self.0.get(&var).copied()
    }

    pub fn set(&mut self, var: VarId, value: Value) -> Option<Value> {
        self.0.insert(var, value)
    }

    pub fn remove(&mut self, var: VarId) -> Option<Value> {
        self.0.remove(&var)
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `vars(σ)`.
    pub fn vars(&self) -> BTreeSet<VarId> {
        self.0.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Value)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    /// `(self ∖ other-vars) ∪ other`: every binding of `other` overrides.
    pub fn overridden_by(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k, v);
        }
        out
    }
}

impl FromIterator<(VarId, Value)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, Value)>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// A constraint evaluated at concrete values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundedConstraint {
    pub constraint_id: ConstraintId,
    pub scope: Vec<VarId>,
    pub values: Vec<Value>,
    pub cost: Cost,
}

/// Orders by cost descending, then constraint id ascending.
pub fn by_cost_desc(a: &GroundedConstraint, b: &GroundedConstraint) -> std::cmp::Ordering {
    b.cost
        .cmp(&a.cost)
        .then_with(|| a.constraint_id.cmp(&b.constraint_id))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcopInstance {
    agents: Vec<AgentId>,
    agent_names: BTreeMap<AgentId, String>,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    var_index: HashMap<VarId, usize>,
    constraint_index: HashMap<ConstraintId, usize>,
    /// Constraint positions touching each variable (by variable position).
    touching: Vec<Vec<usize>>,
    max_finite_cost: u64,
}

impl DcopInstance {
    pub fn builder() -> InstanceBuilder {
        InstanceBuilder::default()
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn agent_name(&self, agent: AgentId) -> Option<&str> {
        self.agent_names.get(&agent).map(String::as_str)
    }

    pub fn agent_names(&self) -> &BTreeMap<AgentId, String> {
        &self.agent_names
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn var_position(&self, var: VarId) -> Option<usize> {
        self.var_index.get(&var).copied()
    }

    pub fn variable(&self, var: VarId) -> Option<&Variable> {
        self.var_position(var).map(|i| &self.variables[i])
    }

    pub fn constraint(&self, id: ConstraintId) -> Option<&Constraint> {
        self.constraint_index.get(&id).map(|&i| &self.constraints[i])
    }

    pub fn owner(&self, var: VarId) -> Option<AgentId> {
        self.variable(var).map(|v| v.owner)
    }

    /// Variables owned by `agent`, in instance order.
    pub fn variables_of(&self, agent: AgentId) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .filter(move |v| v.owner == agent)
            .map(|v| v.id)
    }

    /// Constraints whose scope contains `var`, in instance order.
    pub fn constraints_touching(&self, var: VarId) -> impl Iterator<Item = &Constraint> + '_ {
        self.var_position(var)
            .map(|i| self.touching[i].as_slice())
            .unwrap_or_default()
            .iter()
            .map(|&c| &self.constraints[c])
    }

    /// Positions (into [`DcopInstance::constraints`]) of constraints touching
    /// the variable at `var_pos`.
    pub fn touching_positions(&self, var_pos: usize) -> &[usize] {
        &self.touching[var_pos]
    }

    /// Maximum finite cost over every constraint table (0 if none).
    pub fn max_finite_cost(&self) -> u64 {
        self.max_finite_cost
    }

    /// Variables sharing at least one constraint with `var`.
    pub fn neighbors(&self, var: VarId) -> BTreeSet<VarId> {
        self.constraints_touching(var)
            .flat_map(|c| c.scope.iter().copied())
            .filter(|&v| v != var)
            .collect()
    }

    pub fn is_complete(&self, a: &Assignment) -> bool {
        self.variables.iter().all(|v| a.contains(v.id))
    }

    /// Checks that every bound variable exists and its value is in its domain.
    pub fn check_assignment(&self, a: &Assignment) -> Result<(), ModelError> {
        for (var, value) in a.iter() {
            let v = self.variable(var).ok_or(ModelError::UnknownVariable(var))?;
            if !v.contains(value) {
                return Err(ModelError::ValueOutOfDomain(var, value));
            }
        }
        Ok(())
    }

    pub fn check_complete(&self, a: &Assignment) -> Result<(), ModelError> {
        self.check_assignment(a)?;
        match self.variables.iter().find(|v| !a.contains(v.id)) {
            Some(v) => Err(ModelError::IncompleteSolution(v.id)),
            None => Ok(()),
        }
    }

    /// Table entry of `c` for the values `a` binds on its scope.
    pub fn constraint_cost(&self, c: &Constraint, a: &Assignment) -> Result<Cost, ModelError> {
        let mut positions = Vec::with_capacity(c.arity());
        for &var in &c.scope {
            let value = a.get(var).ok_or(ModelError::UnboundVariable(var))?;
            let variable = self.variable(var).ok_or(ModelError::UnknownVariable(var))?;
            let pos = variable
                .index_of(value)
                .ok_or(ModelError::ValueOutOfDomain(var, value))?;
            positions.push(pos);
        }
        Ok(c.cost_at(&positions))
    }

    /// `F(σ)` for a complete assignment.
    pub fn solution_cost(&self, sigma: &Assignment) -> Result<Cost, ModelError> {
        self.check_complete(sigma)?;
        let mut total = Cost::ZERO;
        for c in &self.constraints {
            total = total.checked_add(self.constraint_cost(c, sigma)?)?;
        }
        Ok(total)
    }

    pub fn ground(&self, c: &Constraint, a: &Assignment) -> Result<GroundedConstraint, ModelError> {
        let cost = self.constraint_cost(c, a)?;
        Ok(GroundedConstraint {
            constraint_id: c.id,
            scope: c.scope.clone(),
            values: c.scope.iter().map(|&v| a.get(v).expect("bound")).collect(),
            cost,
        })
    }

    /// Every constraint whose scope meets `focus`, grounded by `full`, once
    /// each, in instance order.
    pub fn grounded_set(
        &self,
        full: &Assignment,
        focus: &BTreeSet<VarId>,
    ) -> Result<Vec<GroundedConstraint>, ModelError> {
        self.check_complete(full)?;
        self.constraints
            .iter()
            .filter(|c| c.scope.iter().any(|v| focus.contains(v)))
            .map(|c| self.ground(c, full))
            .collect()
    }

    /// Same instance with each listed variable's domain replaced by a
    /// non-empty subset of its current domain (order preserved).
    pub fn restrict_domains(
        &self,
        restrictions: &BTreeMap<VarId, Vec<Value>>,
    ) -> Result<DcopInstance, ModelError> {
        let mut b = DcopInstance::builder();
        for &a in &self.agents {
            b = b.agent(a);
        }
        for (a, n) in &self.agent_names {
            b = b.agent_name(*a, n.clone());
        }
        let mut keep: Vec<Vec<usize>> = Vec::with_capacity(self.variables.len());
        for v in &self.variables {
            let positions: Vec<usize> = match restrictions.get(&v.id) {
                Some(values) => {
                    let mut ps = Vec::new();
                    for &value in values {
                        ps.push(v.index_of(value).ok_or(ModelError::ValueOutOfDomain(v.id, value))?);
                    }
                    ps.sort_unstable();
                    ps.dedup();
                    ps
                }
                None => (0..v.domain.len()).collect(),
            };
            let mut nv = Variable::new(v.id, positions.iter().map(|&p| v.domain[p]).collect(), v.owner);
            nv.name = v.name.clone();
            nv.labels = v
                .labels
                .as_ref()
                .map(|ls| positions.iter().map(|&p| ls[p].clone()).collect());
            b = b.variable(nv);
            keep.push(positions);
        }
        for c in &self.constraints {
            let kept: Vec<&[usize]> = c
                .scope
                .iter()
                .map(|v| keep[self.var_index[v]].as_slice())
                .collect();
            let mut table = Vec::new();
            for_each_tuple(&kept.iter().map(|k| k.len()).collect::<Vec<_>>(), |idx| {
                let orig: Vec<usize> = idx.iter().zip(&kept).map(|(&i, k)| k[i]).collect();
                table.push(c.cost_at(&orig));
            });
            b = b.constraint_table(c.id, c.scope.clone(), table, c.name.clone());
        }
        b.build()
    }
}

enum TableSpec {
    Dense(Vec<Cost>),
    Sparse(Vec<(Vec<Value>, Cost)>),
}

struct PendingConstraint {
    id: ConstraintId,
    scope: Vec<VarId>,
    table: TableSpec,
    name: Option<String>,
}

/// Collects the parts of an instance and validates them in [`InstanceBuilder::build`].
#[derive(Default)]
pub struct InstanceBuilder {
    agents: Vec<AgentId>,
    agent_names: BTreeMap<AgentId, String>,
    variables: Vec<Variable>,
    constraints: Vec<PendingConstraint>,
}

impl InstanceBuilder {
    pub fn agent(mut self, id: AgentId) -> Self {
        self.agents.push(id);
        self
    }

    pub fn agent_name(mut self, id: AgentId, name: impl Into<String>) -> Self {
        self.agent_names.insert(id, name.into());
        self
    }

    pub fn variable(mut self, v: Variable) -> Self {
        self.variables.push(v);
        self
    }

    /// Dense row-major table over the scope domains.
    pub fn constraint_table(
        mut self,
        id: ConstraintId,
        scope: Vec<VarId>,
        table: Vec<Cost>,
        name: Option<String>,
    ) -> Self {
        self.constraints.push(PendingConstraint { id, scope, table: TableSpec::Dense(table), name });
        self
    }

    /// Table given as `(values, cost)` rows in any order; must be total.
    pub fn constraint_rows(
        mut self,
        id: ConstraintId,
        scope: Vec<VarId>,
        rows: Vec<(Vec<Value>, Cost)>,
        name: Option<String>,
    ) -> Self {
        self.constraints.push(PendingConstraint { id, scope, table: TableSpec::Sparse(rows), name });
        self
    }

    /// Table computed by `f` over the scope values. Variables in `scope` must
    /// already have been added.
    pub fn constraint_fn(
        self,
        id: ConstraintId,
        scope: Vec<VarId>,
        f: impl Fn(&[Value]) -> Cost,
    ) -> Self {
        let domains: Vec<&[Value]> = scope
            .iter()
            .map(|s| {
                self.variables
                    .iter()
                    .find(|v| v.id == *s)
                    .map(|v| v.domain.as_slice())
                    .unwrap_or_default()
            })
            .collect();
        let dims: Vec<usize> = domains.iter().map(|d| d.len()).collect();
        let mut table = Vec::new();
        let mut values = vec![0; scope.len()];
        for_each_tuple(&dims, |idx| {
            for (slot, (&i, d)) in values.iter_mut().zip(idx.iter().zip(&domains)) {
                *slot = d[i];
            }
            table.push(f(&values));
        });
        self.constraint_table(id, scope, table, None)
    }

    /// Names the most recently added constraint.
    pub fn named(mut self, name: impl Into<String>) -> Self {
        if let Some(c) = self.constraints.last_mut() {
            c.name = Some(name.into());
        }
        self
    }

    pub fn build(self) -> Result<DcopInstance, ModelError> {
        let mut seen_agents = BTreeSet::new();
        for &a in &self.agents {
            if !seen_agents.insert(a) {
                return Err(ModelError::DuplicateAgent(a));
            }
        }
        if let Some(a) = self.agent_names.keys().find(|a| !seen_agents.contains(a)) {
            return Err(ModelError::UnknownAgent(*a));
        }

        let mut var_index = HashMap::new();
        for (i, v) in self.variables.iter().enumerate() {
            if var_index.insert(v.id, i).is_some() {
                return Err(ModelError::DuplicateVariable(v.id));
            }
            if v.domain.is_empty() {
                return Err(ModelError::EmptyDomain(v.id));
            }
            let mut vals = BTreeSet::new();
            if let Some(dup) = v.domain.iter().find(|&&x| !vals.insert(x)) {
                return Err(ModelError::DuplicateDomainValue(v.id, *dup));
            }
            if !seen_agents.contains(&v.owner) {
                return Err(ModelError::UnknownAgent(v.owner));
            }
            if let Some(ls) = &v.labels {
                if ls.len() != v.domain.len() {
                    return Err(ModelError::LabelCount(v.id, ls.len(), v.domain.len()));
                }
            }
        }

        let mut constraints = Vec::with_capacity(self.constraints.len());
        let mut constraint_index = HashMap::new();
        let mut touching = vec![Vec::new(); self.variables.len()];
        let mut max_finite_cost = 0;
        for pc in self.constraints {
            if constraint_index.insert(pc.id, constraints.len()).is_some() {
                return Err(ModelError::DuplicateConstraint(pc.id));
            }
            if pc.scope.is_empty() {
                return Err(ModelError::EmptyScope(pc.id));
            }
            let mut in_scope = BTreeSet::new();
            let mut dims = Vec::with_capacity(pc.scope.len());
            for &s in &pc.scope {
                if !in_scope.insert(s) {
                    return Err(ModelError::DuplicateScopeVariable(pc.id, s));
                }
                let &i = var_index.get(&s).ok_or(ModelError::UnknownVariable(s))?;
                dims.push(self.variables[i].domain.len());
            }
            let expected: usize = dims.iter().product();
            let table = match pc.table {
                TableSpec::Dense(t) => {
                    if t.len() != expected {
                        return Err(ModelError::TableSize { id: pc.id, expected, actual: t.len() });
                    }
                    t
                }
                TableSpec::Sparse(rows) => {
                    let mut slots: Vec<Option<Cost>> = vec![None; expected];
                    for (values, cost) in rows {
                        if values.len() != pc.scope.len() {
                            return Err(ModelError::TableSize {
                                id: pc.id,
                                expected: pc.scope.len(),
                                actual: values.len(),
                            });
                        }
                        let mut flat = 0;
                        for ((&var, &value), &d) in pc.scope.iter().zip(&values).zip(&dims) {
                            let pos = self.variables[var_index[&var]]
                                .index_of(value)
                                .ok_or(ModelError::ValueOutOfDomain(var, value))?;
                            flat = flat * d + pos;
                        }
                        if slots[flat].replace(cost).is_some() {
                            return Err(ModelError::DuplicateTableEntry(pc.id, values));
                        }
                    }
                    let mut table = Vec::with_capacity(expected);
                    for (flat, slot) in slots.into_iter().enumerate() {
                        match slot {
                            Some(c) => table.push(c),
                            None => {
                                let probe = Constraint {
                                    id: pc.id,
                                    scope: pc.scope.clone(),
                                    name: None,
                                    dims: dims.clone(),
                                    table: Vec::new(),
                                };
                                let values = probe
                                    .positions_of(flat)
                                    .iter()
                                    .zip(&pc.scope)
                                    .map(|(&p, v)| self.variables[var_index[v]].domain[p])
                                    .collect();
                                return Err(ModelError::MissingTableEntry(pc.id, values));
                            }
                        }
                    }
                    table
                }
            };
            for c in table.iter().filter_map(|c| c.finite()) {
                max_finite_cost = max_finite_cost.max(c);
            }
            for &s in &pc.scope {
                touching[var_index[&s]].push(constraints.len());
            }
            constraints.push(Constraint { id: pc.id, scope: pc.scope, name: pc.name, dims, table });
        }

        Ok(DcopInstance {
            agents: self.agents,
            agent_names: self.agent_names,
            variables: self.variables,
            constraints,
            var_index,
            constraint_index,
            touching,
            max_finite_cost,
        })
    }
}

/// The four-part contrastive explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub solution_side: Vec<GroundedConstraint>,
    pub alternative_side: Vec<GroundedConstraint>,
    pub solution_cost: Cost,
    pub alternative_cost: Cost,
}

impl Explanation {
    /// Builds an explanation whose cost fields are the sums of its sides.
    pub fn from_sides(
        solution_side: Vec<GroundedConstraint>,
        alternative_side: Vec<GroundedConstraint>,
    ) -> Result<Self, ModelError> {
        let solution_cost = Cost::try_sum(solution_side.iter().map(|g| g.cost))?;
        let alternative_cost = Cost::try_sum(alternative_side.iter().map(|g| g.cost))?;
        Ok(Self { solution_side, alternative_side, solution_cost, alternative_cost })
    }

    pub fn len(&self) -> usize {
        self.alternative_side.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternative_side.is_empty()
    }

    /// Cost fields match the sides and no side repeats a constraint id.
    pub fn is_consistent(&self) -> bool {
        let side_ok = |side: &[GroundedConstraint], total: Cost| {
            let mut ids = BTreeSet::new();
            side.iter().all(|g| ids.insert(g.constraint_id))
                && Cost::try_sum(side.iter().map(|g| g.cost)) == Ok(total)
        };
        side_ok(&self.solution_side, self.solution_cost)
            && side_ok(&self.alternative_side, self.alternative_cost)
    }
}

/// Validity: the solution side costs no more than the alternative side.
pub fn check_validity(e: &Explanation) -> Result<bool, ModelError> {
    if !e.is_consistent() {
        return Err(ModelError::InconsistentExplanation);
    }
    Ok(e.solution_cost <= e.alternative_cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::three_variable_example;

    fn asg(pairs: &[(u32, Value)]) -> Assignment {
        pairs.iter().map(|&(v, x)| (VarId(v), x)).collect()
    }

    fn g(id: u32, scope: [u32; 2], values: [Value; 2], cost: u64) -> GroundedConstraint {
        GroundedConstraint {
            constraint_id: ConstraintId(id),
            scope: scope.iter().map(|&v| VarId(v)).collect(),
            values: values.to_vec(),
            cost: Cost::Finite(cost),
        }
    }

    #[test]
    fn constraint_cost_reads_table() {
        let inst = three_variable_example();
        let f1 = inst.constraint(ConstraintId(1)).unwrap();
        let f2 = inst.constraint(ConstraintId(2)).unwrap();
        assert_eq!(inst.constraint_cost(f1, &asg(&[(1, 0), (2, 1)])), Ok(Cost::Finite(2)));
        assert_eq!(inst.constraint_cost(f2, &asg(&[(1, 1), (3, 0)])), Ok(Cost::Finite(1)));
        assert_eq!(
            inst.constraint_cost(f2, &asg(&[(1, 1)])),
            Err(ModelError::UnboundVariable(VarId(3)))
        );
    }

    #[test]
    fn constant_unary_constraint() {
        let inst = DcopInstance::builder()
            .agent(AgentId(0))
            .variable(Variable::new(VarId(0), vec![7], AgentId(0)))
            .constraint_fn(ConstraintId(0), vec![VarId(0)], |_| Cost::ZERO)
            .build()
            .unwrap();
        let c = &inst.constraints()[0];
        assert_eq!(inst.constraint_cost(c, &asg(&[(0, 7)])), Ok(Cost::ZERO));
    }

    #[test]
    fn solution_cost_examples() {
        let inst = three_variable_example();
        assert_eq!(inst.solution_cost(&asg(&[(1, 1), (2, 1), (3, 0)])), Ok(Cost::Finite(3)));
        assert_eq!(inst.solution_cost(&asg(&[(1, 0), (2, 1), (3, 0)])), Ok(Cost::Finite(6)));
        assert_eq!(
            inst.solution_cost(&asg(&[(1, 0), (2, 1)])),
            Err(ModelError::IncompleteSolution(VarId(3)))
        );

        let free = DcopInstance::builder()
            .agent(AgentId(0))
            .variable(Variable::new(VarId(0), vec![0, 1], AgentId(0)))
            .build()
            .unwrap();
        assert_eq!(free.solution_cost(&asg(&[(0, 1)])), Ok(Cost::ZERO));
    }

    #[test]
    fn grounded_set_examples() {
        let inst = three_variable_example();
        let x1: BTreeSet<_> = [VarId(1)].into();
        let opt = asg(&[(1, 1), (2, 1), (3, 0)]);
        assert_eq!(
            inst.grounded_set(&opt, &x1).unwrap(),
            vec![g(1, [1, 2], [1, 1], 1), g(2, [1, 3], [1, 0], 1)]
        );
        let alt = asg(&[(1, 0), (2, 1), (3, 0)]);
        assert_eq!(
            inst.grounded_set(&alt, &x1).unwrap(),
            vec![g(1, [1, 2], [0, 1], 2), g(2, [1, 3], [0, 0], 3)]
        );
        assert!(inst.grounded_set(&opt, &BTreeSet::new()).unwrap().is_empty());
    }

    #[test]
    fn validity_examples() {
        let example2 = Explanation::from_sides(
            vec![g(1, [1, 2], [1, 1], 1), g(2, [1, 3], [1, 0], 1)],
            vec![g(1, [1, 2], [0, 1], 2), g(2, [1, 3], [0, 0], 3)],
        )
        .unwrap();
        assert_eq!(example2.solution_cost, Cost::Finite(2));
        assert_eq!(example2.alternative_cost, Cost::Finite(5));
        assert_eq!(check_validity(&example2), Ok(true));

        let example3 = Explanation::from_sides(
            example2.solution_side.clone(),
            vec![g(2, [1, 3], [0, 0], 3)],
        )
        .unwrap();
        assert_eq!(check_validity(&example3), Ok(true));

        let empty = Explanation::from_sides(vec![], vec![]).unwrap();
        assert_eq!(check_validity(&empty), Ok(true));

        let mut broken = example3.clone();
        broken.alternative_cost = Cost::Finite(9);
        assert_eq!(check_validity(&broken), Err(ModelError::InconsistentExplanation));

        let dup = Explanation::from_sides(vec![], vec![g(2, [1, 3], [0, 0], 3), g(2, [1, 3], [0, 0], 3)])
            .unwrap();
        assert_eq!(check_validity(&dup), Err(ModelError::InconsistentExplanation));
    }

    #[test]
    fn builder_rejects_bad_instances() {
        let base = || {
            DcopInstance::builder()
                .agent(AgentId(0))
                .variable(Variable::new(VarId(0), vec![0, 1], AgentId(0)))
                .variable(Variable::new(VarId(1), vec![0, 1], AgentId(0)))
        };
        assert_eq!(
            base().constraint_table(ConstraintId(0), vec![], vec![], None).build().unwrap_err(),
            ModelError::EmptyScope(ConstraintId(0))
        );
        assert_eq!(
            base()
                .constraint_table(ConstraintId(0), vec![VarId(0), VarId(0)], vec![Cost::ZERO; 4], None)
                .build()
                .unwrap_err(),
            ModelError::DuplicateScopeVariable(ConstraintId(0), VarId(0))
        );
        assert_eq!(
            base()
                .constraint_table(ConstraintId(0), vec![VarId(0), VarId(9)], vec![Cost::ZERO; 4], None)
                .build()
                .unwrap_err(),
            ModelError::UnknownVariable(VarId(9))
        );
        assert!(matches!(
            base()
                .constraint_table(ConstraintId(0), vec![VarId(0), VarId(1)], vec![Cost::ZERO; 3], None)
                .build()
                .unwrap_err(),
            ModelError::TableSize { .. }
        ));
        assert_eq!(
            base()
                .constraint_rows(ConstraintId(0), vec![VarId(0)], vec![(vec![0], Cost::ZERO)], None)
                .build()
                .unwrap_err(),
            ModelError::MissingTableEntry(ConstraintId(0), vec![1])
        );
        assert_eq!(
            base().variable(Variable::new(VarId(2), vec![0], AgentId(4))).build().unwrap_err(),
            ModelError::UnknownAgent(AgentId(4))
        );
        assert_eq!(
            base().variable(Variable::new(VarId(1), vec![0], AgentId(0))).build().unwrap_err(),
            ModelError::DuplicateVariable(VarId(1))
        );
    }

    #[test]
    fn restricting_domains_reindexes_tables() {
        let inst = three_variable_example();
        let r = inst
            .restrict_domains(&[(VarId(1), vec![0]), (VarId(2), vec![1])].into())
            .unwrap();
        assert_eq!(r.variable(VarId(1)).unwrap().domain, vec![0]);
        let f1 = r.constraint(ConstraintId(1)).unwrap();
        assert_eq!(f1.table(), &[Cost::Finite(2)]);
        let sigma = asg(&[(1, 0), (2, 1), (3, 0)]);
        assert_eq!(r.solution_cost(&sigma), inst.solution_cost(&sigma));
    }

    #[test]
    fn flat_index_round_trips() {
        let inst = three_variable_example();
        let c = &inst.constraints()[0];
        for flat in 0..c.table().len() {
            assert_eq!(c.flat_index(&c.positions_of(flat)), flat);
        }
    }
}
