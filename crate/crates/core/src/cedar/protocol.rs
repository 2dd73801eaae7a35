//! Agents of the CEDAR protocol. Every agent answers requests; the asked
//! agent additionally coordinates the run.

use std::collections::{BTreeMap, BTreeSet};

use crate::cost::{Cost, CostOverflow};
use crate::model::{AgentId, Assignment, DcopInstance, Explanation, GroundedConstraint, ModelError};
use crate::query::Query;
use crate::sim::{Context, Envelope, Payload, Process};

use super::select::{interleave, sort_desc_counted, take_prefix, HeapMerge};
use super::{get_own_grounded_constraints, CedarError, Variant};

#[derive(Debug, Clone, PartialEq)]
pub enum CedarMsg {
    /// Ask for the receiver's constraints grounded by `assignment`.
    Request { assignment: Assignment, presort: bool },
    Reply { from: AgentId, echoed: Assignment, constraints: Vec<GroundedConstraint> },
}

impl Payload for CedarMsg {
    fn kind(&self) -> &'static str {
        match self {
            CedarMsg::Request { .. } => "REQUEST",
            CedarMsg::Reply { .. } => "REPLY",
        }
    }

    fn size(&self) -> usize {
        match self {
            CedarMsg::Request { assignment, .. } => assignment.len(),
            CedarMsg::Reply { constraints, .. } => constraints.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    /// Waiting for the solution-side replies (V2 only).
    Solution,
    /// Waiting for alternative-side replies.
    Alternative,
    Done,
}

pub(crate) struct Coordinator<'a> {
    variant: Variant,
    query: &'a Query,
    phase: Phase,
    pending: usize,
    own_sol: Vec<GroundedConstraint>,
    own_alt: Vec<GroundedConstraint>,
    sol_replies: BTreeMap<AgentId, Vec<GroundedConstraint>>,
    alt_replies: BTreeMap<AgentId, Vec<GroundedConstraint>>,
    // V2 staging
    threshold: Cost,
    ranking: Vec<(AgentId, usize)>,
    next_rank: usize,
    pub(crate) rounds: u64,
    pub(crate) result: Option<Result<(Explanation, bool), CedarError>>,
}

impl<'a> Coordinator<'a> {
    pub(crate) fn new(variant: Variant, query: &'a Query) -> Self {
        Self {
            variant,
            query,
            phase: Phase::Start,
            pending: 0,
            own_sol: Vec::new(),
            own_alt: Vec::new(),
            sol_replies: BTreeMap::new(),
            alt_replies: BTreeMap::new(),
            threshold: Cost::ZERO,
            ranking: Vec::new(),
            next_rank: 0,
            rounds: 0,
            result: None,
        }
    }
}

pub(crate) struct CedarAgent<'a> {
    id: AgentId,
    inst: &'a DcopInstance,
    sigma: &'a Assignment,
    c_max: u64,
    pub(crate) coordinator: Option<Coordinator<'a>>,
}

impl<'a> CedarAgent<'a> {
    pub(crate) fn new(id: AgentId, inst: &'a DcopInstance, sigma: &'a Assignment) -> Self {
        Self { id, inst, sigma, c_max: inst.max_finite_cost(), coordinator: None }
    }

    fn own(&self, ctx: &mut Context<'_, CedarMsg>, bar: &Assignment) -> Result<Vec<GroundedConstraint>, ModelError> {
        let set = get_own_grounded_constraints(self.id, bar, self.sigma, self.inst)?;
        ctx.charge(set.len() as u64);
        Ok(set)
    }

    fn answer(&self, ctx: &mut Context<'_, CedarMsg>, to: AgentId, assignment: Assignment, presort: bool) {
        // Requests come from a validated query; grounding cannot fail.
        let mut constraints = self.own(ctx, &assignment).expect("request grounds against a complete solution");
        if presort {
            let ops = sort_desc_counted(&mut constraints);
            ctx.charge(ops);
        }
        ctx.send(to, CedarMsg::Reply { from: self.id, echoed: assignment, constraints });
    }

    fn coordinate(&mut self, ctx: &mut Context<'_, CedarMsg>, replies: Vec<(AgentId, Assignment, Vec<GroundedConstraint>)>) {
        let Some(mut co) = self.coordinator.take() else {
            return;
        };
        for (from, echoed, constraints) in replies {
            co.pending -= 1;
            if echoed == co.query.original {
                co.sol_replies.insert(from, constraints);
            } else {
                co.alt_replies.insert(from, constraints);
            }
        }
        if let Err(e) = self.advance(ctx, &mut co) {
            co.result = Some(Err(e));
            co.phase = Phase::Done;
        }
        self.coordinator = Some(co);
    }

    fn advance(&self, ctx: &mut Context<'_, CedarMsg>, co: &mut Coordinator<'a>) -> Result<(), CedarError> {
        match co.phase {
            Phase::Start => {
                co.own_sol = self.own(ctx, &co.query.original)?;
                co.own_alt = self.own(ctx, &co.query.alternative)?;
                let others = self.other_owners(co.query);
                if !others.is_empty() {
                    co.rounds += 1;
                }
                if co.variant == Variant::V2 {
                    co.phase = Phase::Solution;
                    self.request(ctx, co, &others, true);
                    if co.pending == 0 {
                        return self.advance(ctx, co);
                    }
                } else {
                    co.phase = Phase::Alternative;
                    self.request(ctx, co, &others, true);
                    self.request(ctx, co, &others, false);
                    if co.pending == 0 {
                        return self.finish(ctx, co);
                    }
                }
            }
            Phase::Solution if co.pending == 0 => {
                co.threshold = Cost::try_sum(solution_side(co).iter().map(|g| g.cost))?;
                let mut ranking: Vec<(AgentId, usize)> =
                    co.sol_replies.iter().map(|(&a, set)| (a, set.len())).collect();
                let mut ops = 0u64;
                ranking.sort_by(|a, b| {
                    ops += 1;
                    b.1.cmp(&a.1).then(a.0.cmp(&b.0))
                });
                ctx.charge(ops);
                co.ranking = ranking;
                co.phase = Phase::Alternative;
                return self.stage(ctx, co);
            }
            Phase::Alternative if co.pending == 0 => {
                if co.variant == Variant::V2 {
                    return self.stage(ctx, co);
                }
                return self.finish(ctx, co);
            }
            _ => {}
        }
        Ok(())
    }

    fn other_owners(&self, query: &Query) -> Vec<AgentId> {
        let owners: BTreeSet<AgentId> = query.vars().into_iter().filter_map(|v| self.inst.owner(v)).collect();
        owners.into_iter().filter(|&a| a != self.id).collect()
    }

    fn request(&self, ctx: &mut Context<'_, CedarMsg>, co: &mut Coordinator<'a>, to: &[AgentId], original: bool) {
        if to.is_empty() {
            return;
        }
        let (assignment, presort) = if original {
            (&co.query.original, false)
        } else {
            (&co.query.alternative, matches!(co.variant, Variant::O2 | Variant::V1))
        };
        for &a in to {
            ctx.send(a, CedarMsg::Request { assignment: assignment.clone(), presort });
        }
        co.pending += to.len();
    }

    /// One V2 stage: recompute the remaining gap and contact the fewest
    /// highest-degree agents whose optimistic estimate covers it.
    fn stage(&self, ctx: &mut Context<'_, CedarMsg>, co: &mut Coordinator<'a>) -> Result<(), CedarError> {
        let collected = dedup(co.own_alt.iter().chain(co.alt_replies.values().flatten()));
        let have = Cost::try_sum(collected.iter().map(|g| g.cost))?;
        ctx.charge(1);
        if have >= co.threshold || co.next_rank == co.ranking.len() {
            return self.finish(ctx, co);
        }
        let delta = co.threshold.saturating_sub(have);
        let mut estimate = Cost::ZERO;
        let mut batch = Vec::new();
        while co.next_rank < co.ranking.len() {
            let (agent, degree) = co.ranking[co.next_rank];
            co.next_rank += 1;
            batch.push(agent);
            estimate = estimate.checked_add(Cost::Finite((degree as u64).saturating_mul(self.c_max)))?;
            ctx.charge(1);
            if estimate >= delta {
                break;
            }
        }
        co.rounds += 1;
        self.request(ctx, co, &batch, false);
        Ok(())
    }

    fn finish(&self, ctx: &mut Context<'_, CedarMsg>, co: &mut Coordinator<'a>) -> Result<(), CedarError> {
        let solution = solution_side(co);
        let threshold = Cost::try_sum(solution.iter().map(|g| g.cost))?;
        let alternative = match co.variant {
            Variant::Base | Variant::V2 => {
                ctx.charge(1);
                let mut all = dedup(co.own_alt.iter().chain(co.alt_replies.values().flatten()));
                all.sort_by_key(|g| g.constraint_id);
                all
            }
            Variant::O1 => {
                let mut all = dedup(co.own_alt.iter().chain(co.alt_replies.values().flatten()));
                let ops = sort_desc_counted(&mut all);
                ctx.charge(ops);
                let prefix = take_prefix(all, threshold)?;
                ctx.charge(prefix.checks);
                prefix.chosen
            }
            Variant::O2 | Variant::V1 => {
                let mut own = co.own_alt.clone();
                let ops = sort_desc_counted(&mut own);
                ctx.charge(ops);
                let mut streams = vec![own];
                streams.extend(co.alt_replies.values().cloned());
                if co.variant == Variant::O2 {
                    let mut merge = HeapMerge::new(streams);
                    let prefix = take_prefix(&mut merge, threshold)?;
                    ctx.charge(merge.ops() + prefix.checks);
                    prefix.chosen
                } else {
                    let prefix = take_prefix(interleave(&streams), threshold)?;
                    ctx.charge(prefix.checks);
                    prefix.chosen
                }
            }
        };
        let explanation = Explanation::from_sides(solution, alternative)?;
        let valid = explanation.solution_cost <= explanation.alternative_cost;
        co.result = Some(Ok((explanation, valid)));
        co.phase = Phase::Done;
        Ok(())
    }
}

fn solution_side(co: &Coordinator<'_>) -> Vec<GroundedConstraint> {
    let mut all = dedup(co.own_sol.iter().chain(co.sol_replies.values().flatten()));
    all.sort_by_key(|g| g.constraint_id);
    all
}

fn dedup<'g>(items: impl Iterator<Item = &'g GroundedConstraint>) -> Vec<GroundedConstraint> {
    let mut seen = BTreeSet::new();
    items.filter(|g| seen.insert(g.constraint_id)).cloned().collect()
}

impl From<CostOverflow> for CedarError {
    fn from(e: CostOverflow) -> Self {
        CedarError::Model(e.into())
    }
}

impl Process<CedarMsg> for CedarAgent<'_> {
    fn on_step(&mut self, ctx: &mut Context<'_, CedarMsg>, inbox: Vec<Envelope<CedarMsg>>) {
        let mut replies = Vec::new();
        for m in inbox {
            match m.payload {
                CedarMsg::Request { assignment, presort } => self.answer(ctx, m.sender, assignment, presort),
                CedarMsg::Reply { from, echoed, constraints } => replies.push((from, echoed, constraints)),
            }
        }
        self.coordinate(ctx, replies);
    }

    fn has_pending_work(&self) -> bool {
        self.coordinator.as_ref().is_some_and(|c| c.phase == Phase::Start)
    }
}
