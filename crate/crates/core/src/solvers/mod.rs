//! Centralized solvers producing the solutions that queries are asked about:
//! exact branch-and-bound, 1-opt hill climbing, and a brute-force
//! k-optimality checker.

mod bnb;
mod kopt;
mod local;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{Cost, CostOverflow};
use crate::model::{Assignment, ModelError};

pub use bnb::{solve_optimal, DEFAULT_NODE_BUDGET};
pub use kopt::verify_k_optimal;
pub use local::solve_1opt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionMode {
    Optimal,
    OneOpt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solution: Assignment,
    pub cost: Cost,
    pub nodes_explored: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("node budget of {0} exhausted before proving optimality")]
    BudgetExhausted(u64),
    #[error("instance costs can overflow a 64-bit total")]
    Overflow(#[from] CostOverflow),
    #[error(transparent)]
    Model(#[from] ModelError),
}
