use crate::cost::Cost;
use crate::enumerate::{for_each_combination, for_each_tuple};
use crate::model::{Assignment, DcopInstance, ModelError};

/// True iff no joint change of at most `k` variables strictly lowers the
/// cost of `sigma`. Exhaustive over subsets and values; `k` is clamped to
/// `1..=|X|`.
pub fn verify_k_optimal(inst: &DcopInstance, sigma: &Assignment, k: usize) -> Result<bool, ModelError> {
    let base = inst.solution_cost(sigma)?;
    if base == Cost::ZERO {
        return Ok(true);
    }
    let vars = inst.variables();
    let k = k.clamp(1, vars.len().max(1));
    let mut improving = None;
    for size in 1..=k.min(vars.len()) {
        let mut err = None;
        for_each_combination(vars.len(), size, |subset| {
            let alts: Vec<Vec<i64>> = subset
                .iter()
                .map(|&p| {
                    let cur = sigma.get(vars[p].id).expect("complete");
                    vars[p].domain.iter().copied().filter(|&d| d != cur).collect()
                })
                .collect();
            let dims: Vec<usize> = alts.iter().map(Vec::len).collect();
            let mut trial = sigma.clone();
            for_each_tuple(&dims, |idx| {
                if improving.is_some() || err.is_some() {
                    return;
                }
                for (j, &p) in subset.iter().enumerate() {
                    trial.set(vars[p].id, alts[j][idx[j]]);
                }
                match inst.solution_cost(&trial) {
                    Ok(c) if c < base => improving = Some(trial.clone()),
                    Ok(_) => {}
                    Err(e) => err = Some(e),
                }
            });
            improving.is_none() && err.is_none()
        });
        if let Some(e) = err {
            return Err(e);
        }
        if improving.is_some() {
            return Ok(false);
        }
    }
    Ok(true)
}
