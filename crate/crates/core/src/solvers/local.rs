use std::time::Instant;

use rand::Rng as _;

use crate::cost::Cost;
use crate::model::{Assignment, DcopInstance};
use crate::rng::{derive_seed, rng_from, stream};

use super::{SolveError, SolveResult};

fn local_cost(inst: &DcopInstance, var_pos: usize, positions: &[usize]) -> Result<Cost, SolveError> {
    let mut total = Cost::ZERO;
    for &ci in inst.touching_positions(var_pos) {
        let c = &inst.constraints()[ci];
        let idx: Vec<usize> = c
            .scope
            .iter()
            .map(|v| positions[inst.var_position(*v).expect("scope var")])
            .collect();
        total = total.checked_add(c.cost_at(&idx))?;
    }
    Ok(total)
}

/// Best-improvement hill climbing from a seeded uniform random assignment.
///
/// Each step applies the single-variable change with the largest cost
/// decrease (ties: smaller variable id, then earlier domain value) and stops
/// when no single change improves, so the result is 1-optimal. Leaving an
/// infinite local cost for a finite one counts as an infinite decrease.
pub fn solve_1opt(inst: &DcopInstance, seed: u64) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let vars = inst.variables();
    let mut rng = rng_from(derive_seed(seed, &[stream::SOLVE]));
    let mut positions: Vec<usize> = vars.iter().map(|v| rng.random_range(0..v.domain.len())).collect();

    let mut by_id: Vec<usize> = (0..vars.len()).collect();
    by_id.sort_by_key(|&p| vars[p].id);

    let mut moves = 0u64;
    loop {
        let mut best: Option<(Cost, usize, usize)> = None;
        for &p in &by_id {
            let current = positions[p];
            let old = local_cost(inst, p, &positions)?;
            for d in 0..vars[p].domain.len() {
                if d == current {
                    continue;
                }
                positions[p] = d;
                let new = local_cost(inst, p, &positions)?;
                positions[p] = current;
                if new >= old {
                    continue;
                }
                let gain = old.saturating_sub(new);
                if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                    best = Some((gain, p, d));
                }
            }
        }
        match best {
            Some((_, p, d)) => {
                positions[p] = d;
                moves += 1;
            }
            None => break,
        }
    }

    let solution: Assignment = vars
        .iter()
        .zip(&positions)
        .map(|(v, &i)| (v.id, v.domain[i]))
        .collect();
    let cost = inst.solution_cost(&solution)?;
    Ok(SolveResult { solution, cost, nodes_explored: moves, wall_time: start.elapsed() })
}
