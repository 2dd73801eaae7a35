//! The CEDAR explanation protocol and its refinements, run on the
//! simulator in [`crate::sim`].
//!
//! The asked agent grounds its own constraints for both sides of the query
//! and requests the grounded constraints of every other agent that owns a
//! queried variable. The variants differ in how the alternative side is
//! assembled:
//!
//! * `Base` returns every alternative-side constraint.
//! * `O1` sorts them by decreasing cost and keeps the shortest prefix that
//!   reaches the solution-side cost.
//! * `O2` has each agent sort its own list and merges the heads through a
//!   max-heap; it selects exactly the set `O1` selects.
//! * `V1` interleaves the sorted lists round-robin instead of merging.
//! * `V2` asks for the alternative side in stages, highest-degree agents
//!   first, until the collected constraints cover the solution-side cost.
//!
//! Ties are always broken by cost descending, then constraint id
//! ascending. NCLO charging: one operation per grounded constraint
//! evaluated, per cost or degree comparison (sorting included), per
//! threshold test, and per heap insert or extract.

mod oracle;
mod protocol;
mod select;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AgentId, Assignment, DcopInstance, Explanation, GroundedConstraint, ModelError, VarId};
use crate::query::{Query, QueryError};
use crate::sim::{SimError, TraceEvent, World};

pub use oracle::{minimal_subset_oracle, OracleError, ORACLE_MAX_LEN};
pub use protocol::CedarMsg;
pub use select::{interleave, sort_desc_counted, take_prefix, CountingHeap, HeapMerge, Prefix};

use protocol::{CedarAgent, Coordinator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    O1,
    O2,
    V1,
    V2,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Base, Variant::O1, Variant::O2, Variant::V1, Variant::V2];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::O1 => "o1",
            Variant::O2 => "o2",
            Variant::V1 => "v1",
            Variant::V2 => "v2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant `{s}` (expected base, o1, o2, v1 or v2)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CedarError {
    #[error(transparent)]
    MalformedQuery(#[from] QueryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("protocol did not terminate: {0}")]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    /// The asked agent's logical-operation counter at termination.
    pub nclo: u64,
    pub messages_sent: u64,
    pub explanation_length: usize,
    pub valid: bool,
    /// Waves of requests sent by the asked agent.
    pub rounds: u64,
    /// Simulation steps until quiescence.
    pub steps: u64,
}

/// `agent`'s constraints over the queried variables it owns, grounded by
/// `sigma` with the query's bindings `bar` substituted.
pub fn get_own_grounded_constraints(
    agent: AgentId,
    bar: &Assignment,
    sigma: &Assignment,
    inst: &DcopInstance,
) -> Result<Vec<GroundedConstraint>, ModelError> {
    let focus: BTreeSet<VarId> = bar.vars().into_iter().filter(|&v| inst.owner(v) == Some(agent)).collect();
    if focus.is_empty() {
        return Ok(Vec::new());
    }
    inst.grounded_set(&sigma.overridden_by(bar), &focus)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CedarRun {
    pub explanation: Explanation,
    pub stats: RunStats,
    /// Message trace; empty unless requested.
    pub trace: Vec<TraceEvent>,
}

/// Answers `query` about solution `sigma` with the given variant.
pub fn run_cedar(
    variant: Variant,
    inst: &DcopInstance,
    sigma: &Assignment,
    query: &Query,
) -> Result<(Explanation, RunStats), CedarError> {
    let run = execute(variant, inst, sigma, query, false)?;
    Ok((run.explanation, run.stats))
}

/// [`run_cedar`] that also records the message trace.
pub fn run_cedar_traced(
    variant: Variant,
    inst: &DcopInstance,
    sigma: &Assignment,
    query: &Query,
) -> Result<CedarRun, CedarError> {
    execute(variant, inst, sigma, query, true)
}

fn execute(
    variant: Variant,
    inst: &DcopInstance,
    sigma: &Assignment,
    query: &Query,
    trace: bool,
) -> Result<CedarRun, CedarError> {
    inst.check_complete(sigma)?;
    query.validate(inst, sigma)?;
    let asked = query.asked_agent;
    let agents = inst.agents().iter().map(|&id| {
        let mut agent = CedarAgent::new(id, inst, sigma);
        if id == asked {
            agent.coordinator = Some(Coordinator::new(variant, query));
        }
        (id, agent)
    });
    let mut world = World::new(agents);
    if trace {
        world = world.with_trace();
    }
    // Two steps per request wave, at most one wave per agent plus one.
    let limit = 2 * (inst.agents().len() as u64 + 2) + 1;
    let steps = world.run(limit)?;
    let nclo = world.nclo(asked);
    let messages_sent = world.messages_sent();
    let (mut agents, trace) = world.into_parts();
    let co = agents
        .remove(&asked)
        .and_then(|a| a.coordinator)
        .expect("asked agent keeps its coordinator");
    let rounds = co.rounds;
    let (explanation, valid) = co.result.expect("coordinator finishes before quiescence")?;
    let stats = RunStats {
        nclo,
        messages_sent,
        explanation_length: explanation.len(),
        valid,
        rounds,
        steps,
    };
    Ok(CedarRun { explanation, stats, trace })
}
