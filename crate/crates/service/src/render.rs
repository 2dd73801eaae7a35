//! Structured rendering of explanations: one line per grounded constraint
//! with display names resolved, for clients that turn them into prose.

use serde::{Deserialize, Serialize};
use xdcop_core::{Cost, DcopInstance, Explanation, GroundedConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Solution,
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub var: u32,
    pub var_name: String,
    pub value: i64,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub side: Side,
    pub constraint_id: u32,
    pub constraint_name: String,
    pub scope: Vec<Binding>,
    pub cost: Cost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rendering {
    pub solution_lines: Vec<Line>,
    pub alternative_lines: Vec<Line>,
    pub solution_total: Cost,
    pub alternative_total: Cost,
    pub valid: bool,
}

fn line(inst: &DcopInstance, side: Side, g: &GroundedConstraint) -> Line {
    let constraint_name = inst
        .constraint(g.constraint_id)
        .and_then(|c| c.name.clone())
        .unwrap_or_else(|| g.constraint_id.to_string());
    let scope = g
        .scope
        .iter()
        .zip(&g.values)
        .map(|(&var, &value)| {
            let v = inst.variable(var);
            Binding {
                var: var.0,
                var_name: v.and_then(|v| v.name.clone()).unwrap_or_else(|| var.to_string()),
                value,
                label: v.and_then(|v| {
                    let i = v.index_of(value)?;
                    v.labels.as_ref().map(|l| l[i].clone())
                }),
            }
        })
        .collect();
    Line { side, constraint_id: g.constraint_id.0, constraint_name, scope, cost: g.cost }
}

pub fn render(inst: &DcopInstance, e: &Explanation, valid: bool) -> Rendering {
    Rendering {
        solution_lines: e.solution_side.iter().map(|g| line(inst, Side::Solution, g)).collect(),
        alternative_lines: e.alternative_side.iter().map(|g| line(inst, Side::Alternative, g)).collect(),
        solution_total: e.solution_cost,
        alternative_total: e.alternative_cost,
        valid,
    }
}
