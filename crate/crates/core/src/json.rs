//! JSON instance format.
//!
//! ```json
//! {"agents": [1, 2],
//!  "variables": [{"id": 1, "domain": [0, 1], "owner": 1}, ...],
//!  "constraints": [{"id": 1, "scope": [1, 2],
//!                   "table": [{"values": [0, 0], "cost": 3}, ...]}]}
//! ```
//!
//! A cost of `"inf"` encodes infinity. Variables may carry a display `name`
//! and per-value `labels`; constraints a `name`; agents an `agent_names` map.
//! Tables are written in row-major order over the scope domains.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cost::Cost;
use crate::model::{AgentId, ConstraintId, DcopInstance, ModelError, Value, VarId, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub agents: Vec<AgentId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub agent_names: BTreeMap<AgentId, String>,
    pub variables: Vec<VariableJson>,
    pub constraints: Vec<ConstraintJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableJson {
    pub id: VarId,
    pub domain: Vec<Value>,
    pub owner: AgentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintJson {
    pub id: ConstraintId,
    pub scope: Vec<VarId>,
    pub table: Vec<TableRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableRow {
    pub values: Vec<Value>,
    pub cost: Cost,
}

impl From<&DcopInstance> for InstanceJson {
    fn from(inst: &DcopInstance) -> Self {
        let variables = inst
            .variables()
            .iter()
            .map(|v| VariableJson {
                id: v.id,
                domain: v.domain.clone(),
                owner: v.owner,
                name: v.name.clone(),
                labels: v.labels.clone(),
            })
            .collect();
        let constraints = inst
            .constraints()
            .iter()
            .map(|c| {
                let domains: Vec<&[Value]> = c
                    .scope
                    .iter()
                    .map(|&v| inst.variable(v).expect("scope variable").domain.as_slice())
                    .collect();
                let table = c
                    .table()
                    .iter()
                    .enumerate()
                    .map(|(flat, &cost)| TableRow {
                        values: c
                            .positions_of(flat)
                            .iter()
                            .zip(&domains)
                            .map(|(&p, d)| d[p])
                            .collect(),
                        cost,
                    })
                    .collect();
                ConstraintJson { id: c.id, scope: c.scope.clone(), table, name: c.name.clone() }
            })
            .collect();
        InstanceJson {
            agents: inst.agents().to_vec(),
            agent_names: inst.agent_names().clone(),
            variables,
            constraints,
        }
    }
}

impl TryFrom<InstanceJson> for DcopInstance {
    type Error = ModelError;

    fn try_from(j: InstanceJson) -> Result<Self, ModelError> {
        let mut b = DcopInstance::builder();
        for a in j.agents {
            b = b.agent(a);
        }
        for (a, n) in j.agent_names {
            b = b.agent_name(a, n);
        }
        for v in j.variables {
            let mut var = Variable::new(v.id, v.domain, v.owner);
            var.name = v.name;
            var.labels = v.labels;
            b = b.variable(var);
        }
        for c in j.constraints {
            let rows = c.table.into_iter().map(|r| (r.values, r.cost)).collect();
            b = b.constraint_rows(c.id, c.scope, rows, c.name);
        }
        b.build()
    }
}

impl Serialize for DcopInstance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        InstanceJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DcopInstance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = InstanceJson::deserialize(deserializer)?;
        DcopInstance::try_from(j).map_err(serde::de::Error::custom)
    }
}
