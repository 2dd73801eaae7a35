//! Exact minimum-cardinality oracle for threshold subsets.

use thiserror::Error;

use crate::cost::Cost;

pub const ORACLE_MAX_LEN: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{0} costs exceed the oracle limit of {ORACLE_MAX_LEN}")]
    ListTooLarge(usize),
}

/// Smallest number of entries of `costs` whose sum reaches `threshold`,
/// by enumerating every subset. `None` when even the full list falls short.
pub fn minimal_subset_oracle(costs: &[Cost], threshold: Cost) -> Result<Option<usize>, OracleError> {
    if costs.len() > ORACLE_MAX_LEN {
        return Err(OracleError::ListTooLarge(costs.len()));
    }
    let mut best: Option<usize> = None;
    for mask in 0u32..(1u32 << costs.len()) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let sum = costs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .try_fold(Cost::ZERO, |acc, (_, &c)| acc.checked_add(c))
            .unwrap_or(Cost::Infinite);
        if sum >= threshold {
            best = Some(size);
        }
    }
    Ok(best)
}
