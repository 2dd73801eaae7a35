use std::time::Instant;

use crate::cost::Cost;
use crate::model::{Assignment, DcopInstance};

use super::{SolveError, SolveResult};

pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

const INF: u64 = u64::MAX;

/// A constraint with its scope rearranged into search order, plus the
/// projections used for the lower bound: `proj[i]` maps the values of the
/// first `i + 1` scope variables (in search order) to the minimum table
/// entry over the remaining ones.
struct Compiled {
    levels: Vec<usize>,
    dims: Vec<usize>,
    proj: Vec<Vec<u64>>,
}

fn to_raw(c: Cost) -> u64 {
    c.finite().unwrap_or(INF)
}

fn add(a: u64, b: u64) -> u64 {
    // Totals are checked against `u64::MAX` before the search starts, so
    // saturation only ever means infinity.
    a.saturating_add(b)
}

struct Search {
    n: usize,
    domain_sizes: Vec<usize>,
    compiled: Vec<Compiled>,
    /// Constraints whose last search-order variable is at this level.
    closing: Vec<Vec<usize>>,
    assigned: Vec<usize>,
    best: Option<(u64, Vec<usize>)>,
    nodes: u64,
    budget: u64,
    scratch: Vec<Vec<u64>>,
}

impl Search {
    fn prefix_index(&self, c: &Compiled, upto: usize) -> usize {
        (0..upto).fold(0, |acc, i| acc * c.dims[i] + self.assigned[c.levels[i]])
    }

    /// Fills `contrib[level * maxd + value]` with the lower-bound terms of
    /// every open constraint, attributed to its first unassigned variable.
    fn contributions(&self, depth: usize, contrib: &mut [u64], maxd: usize) {
        contrib.iter_mut().for_each(|x| *x = 0);
        for c in &self.compiled {
            let Some(i) = c.levels.iter().position(|&l| l >= depth) else {
                continue;
            };
            let base = self.prefix_index(c, i) * c.dims[i];
            let level = c.levels[i];
            for d in 0..c.dims[i] {
                let slot = &mut contrib[level * maxd + d];
                *slot = add(*slot, c.proj[i][base + d]);
            }
        }
    }

    fn closing_cost(&self, level: usize) -> u64 {
        self.closing[level].iter().fold(0, |acc, &ci| {
            let c = &self.compiled[ci];
            let idx = self.prefix_index(c, c.levels.len());
            add(acc, c.proj[c.levels.len() - 1][idx])
        })
    }

    fn dfs(&mut self, depth: usize, g: u64) -> Result<(), SolveError> {
        if depth == self.n {
            if self.best.as_ref().is_none_or(|(b, _)| g < *b) {
                self.best = Some((g, self.assigned.clone()));
            }
            return Ok(());
        }
        let maxd = *self.domain_sizes.iter().max().unwrap_or(&1);
        let mut contrib = std::mem::take(&mut self.scratch[depth]);
        self.contributions(depth, &mut contrib, maxd);
        let rest: u64 = (depth + 1..self.n).fold(0, |acc, l| {
            let row = &contrib[l * maxd..l * maxd + self.domain_sizes[l]];
            add(acc, row.iter().copied().min().unwrap_or(0))
        });
        let mut children: Vec<(u64, usize)> = (0..self.domain_sizes[depth])
            .map(|d| (add(add(g, contrib[depth * maxd + d]), rest), d))
            .collect();
        self.scratch[depth] = contrib;
        children.sort_unstable();

        for (bound, d) in children {
            if let Some((best, _)) = &self.best {
                if bound >= *best {
                    break;
                }
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(SolveError::BudgetExhausted(self.budget));
            }
            self.assigned[depth] = d;
            let g_child = add(g, self.closing_cost(depth));
            self.dfs(depth + 1, g_child)?;
        }
        Ok(())
    }
}

/// Depth-first branch-and-bound over a static variable order (most
/// constrained first, ties by id). Children are visited in increasing order
/// of their lower bound and pruned once the bound reaches the incumbent.
pub fn solve_optimal(inst: &DcopInstance, node_budget: u64) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let vars = inst.variables();
    let n = vars.len();

    let mut worst = Cost::ZERO;
    for c in inst.constraints() {
        let max = c.table().iter().filter_map(|x| x.finite()).max().unwrap_or(0);
        worst = worst.checked_add(Cost::Finite(max))?;
    }
    if worst == Cost::Finite(INF) {
        return Err(SolveError::Overflow(crate::cost::CostOverflow(INF, 0)));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(inst.touching_positions(p).len()), vars[p].id));
    let mut level_of = vec![0; n];
    for (level, &p) in order.iter().enumerate() {
        level_of[p] = level;
    }

    let mut compiled = Vec::with_capacity(inst.constraints().len());
    let mut closing = vec![Vec::new(); n];
    for c in inst.constraints() {
        let mut slots: Vec<(usize, usize)> = c
            .scope
            .iter()
            .enumerate()
            .map(|(i, v)| (level_of[inst.var_position(*v).expect("scope var")], i))
            .collect();
        slots.sort_unstable();
        let levels: Vec<usize> = slots.iter().map(|s| s.0).collect();
        let dims: Vec<usize> = slots.iter().map(|s| c.dims()[s.1]).collect();
        let k = levels.len();
        // full table in search order
        let mut full = vec![0u64; c.table().len()];
        let mut orig = vec![0usize; k];
        crate::enumerate::for_each_tuple(&dims, |idx| {
            for (j, &(_, o)) in slots.iter().enumerate() {
                orig[o] = idx[j];
            }
            let flat = idx.iter().zip(&dims).fold(0, |acc, (&x, &d)| acc * d + x);
            full[flat] = to_raw(c.cost_at(&orig));
        });
        let mut proj = vec![full];
        for i in (0..k - 1).rev() {
            let next = proj.last().expect("non-empty");
            let d = dims[i + 1];
            let reduced: Vec<u64> = next.chunks(d).map(|ch| *ch.iter().min().expect("d > 0")).collect();
            proj.push(reduced);
        }
        proj.reverse();
        closing[levels[k - 1]].push(compiled.len());
        compiled.push(Compiled { levels, dims, proj });
    }

    let domain_sizes: Vec<usize> = order.iter().map(|&p| vars[p].domain.len()).collect();
    let maxd = *domain_sizes.iter().max().unwrap_or(&1);
    let mut search = Search {
        n,
        domain_sizes,
        compiled,
        closing,
        assigned: vec![0; n],
        best: None,
        nodes: 0,
        budget: node_budget,
        scratch: vec![vec![0; n * maxd]; n + 1],
    };
    search.dfs(0, 0)?;
    let (_, best) = search.best.expect("every finite-domain instance has a solution");

    let solution: Assignment = order
        .iter()
        .enumerate()
        .map(|(level, &p)| (vars[p].id, vars[p].domain[best[level]]))
        .collect();
    let cost = inst.solution_cost(&solution)?;
    Ok(SolveResult { solution, cost, nodes_explored: search.nodes, wall_time: start.elapsed() })
}
