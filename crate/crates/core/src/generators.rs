//! Seeded benchmark generators: uniform random graphs and meeting scheduling
//! in the events-as-variables formulation.

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;
use crate::model::{AgentId, ConstraintId, DcopInstance, Value, VarId, Variable};
use crate::rng::{derive_seed, rng_from, stream};
use crate::samples::{preference_cost, CONFLICT_COST};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    RandomUniform,
    MeetingScheduling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub kind: GenKind,
    pub num_agents: usize,
    #[serde(default = "defaults::density")]
    pub density: f64,
    #[serde(default = "defaults::domain_size")]
    pub domain_size: usize,
    #[serde(default = "defaults::cost_min")]
    pub cost_min: u64,
    #[serde(default = "defaults::cost_max")]
    pub cost_max: u64,
    #[serde(default = "defaults::num_slots")]
    pub num_slots: usize,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn density() -> f64 {
        0.5
    }
    pub fn domain_size() -> usize {
        10
    }
    pub fn cost_min() -> u64 {
        1
    }
    pub fn cost_max() -> u64 {
        100
    }
    pub fn num_slots() -> usize {
        10
    }
}

impl GenConfig {
    pub fn random_uniform(num_agents: usize, density: f64, seed: u64) -> Self {
        Self {
            kind: GenKind::RandomUniform,
            num_agents,
            density,
            domain_size: defaults::domain_size(),
            cost_min: defaults::cost_min(),
            cost_max: defaults::cost_max(),
            num_slots: defaults::num_slots(),
            seed,
        }
    }

    pub fn meeting_scheduling(num_meetings: usize, density: f64, seed: u64) -> Self {
        Self { kind: GenKind::MeetingScheduling, ..Self::random_uniform(num_meetings, density, seed) }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |msg: String| Err(GenError::InvalidConfig(msg));
        if self.num_agents == 0 {
            return bad("num_agents must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad(format!("density {} outside [0, 1]", self.density));
        }
        match self.kind {
            GenKind::RandomUniform => {
                if self.domain_size < 2 {
                    return bad(format!("domain_size {} < 2", self.domain_size));
                }
                if self.cost_min > self.cost_max {
                    return bad(format!("cost_min {} > cost_max {}", self.cost_min, self.cost_max));
                }
            }
            GenKind::MeetingScheduling => {
                if !(2..=62).contains(&self.num_slots) {
                    return bad(format!("num_slots {} outside [2, 62]", self.num_slots));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

pub fn generate(cfg: &GenConfig) -> Result<DcopInstance, GenError> {
    match cfg.kind {
        GenKind::RandomUniform => gen_random_uniform(cfg),
        GenKind::MeetingScheduling => gen_meeting_scheduling(cfg),
    }
}

fn one_variable_per_agent(n: usize, domain: &[Value]) -> crate::model::InstanceBuilder {
    let mut b = DcopInstance::builder();
    for i in 0..n as u32 {
        b = b.agent(AgentId(i)).variable(Variable::new(VarId(i), domain.to_vec(), AgentId(i)));
    }
    b
}

/// Each unordered variable pair becomes a constraint with probability
/// `density`; table entries are uniform in `[cost_min, cost_max]`.
pub fn gen_random_uniform(cfg: &GenConfig) -> Result<DcopInstance, GenError> {
    if cfg.kind != GenKind::RandomUniform {
        return Err(GenError::InvalidConfig("expected kind random_uniform".into()));
    }
    cfg.validate()?;
    let mut rng = rng_from(derive_seed(cfg.seed, &[stream::GENERATE]));
    let domain: Vec<Value> = (0..cfg.domain_size as Value).collect();
    let mut b = one_variable_per_agent(cfg.num_agents, &domain);
    let mut next_id = 0;
    let n = cfg.num_agents as u32;
    for i in 0..n {
        for j in i + 1..n {
            if !rng.random_bool(cfg.density) {
                continue;
            }
            let table = (0..cfg.domain_size * cfg.domain_size)
                .map(|_| Cost::Finite(rng.random_range(cfg.cost_min..=cfg.cost_max)))
                .collect();
            b = b.constraint_table(ConstraintId(next_id), vec![VarId(i), VarId(j)], table, None);
            next_id += 1;
        }
    }
    Ok(b.build().expect("generated instance is well-formed"))
}

/// `⌈density · pairs⌉`, tolerant of binary floating-point error in the product.
pub fn target_pair_count(num_meetings: usize, density: f64) -> usize {
    let pairs = num_meetings * num_meetings.saturating_sub(1) / 2;
    let raw = density * pairs as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(pairs)
}

/// Meetings are variables over slots `0..num_slots`. Distinct meeting pairs
/// are sampled without replacement until `⌈density · M(M−1)/2⌉` pairs are
/// constrained; each sampled pair gets one attendee with a uniform preferred
/// slot `p`. The pair's constraint costs [`CONFLICT_COST`] on equal slots
/// and `2^|a−p| + 2^|b−p|` otherwise.
pub fn gen_meeting_scheduling(cfg: &GenConfig) -> Result<DcopInstance, GenError> {
    if cfg.kind != GenKind::MeetingScheduling {
        return Err(GenError::InvalidConfig("expected kind meeting_scheduling".into()));
    }
    cfg.validate()?;
    let mut rng = rng_from(derive_seed(cfg.seed, &[stream::GENERATE]));
    let m = cfg.num_agents;
    let slots: Vec<Value> = (0..cfg.num_slots as Value).collect();
    let all_pairs: Vec<(u32, u32)> = (0..m as u32)
        .flat_map(|i| (i + 1..m as u32).map(move |j| (i, j)))
        .collect();
    let mut picked: Vec<usize> = index::sample(&mut rng, all_pairs.len(), target_pair_count(m, cfg.density))
        .into_vec();
    picked.sort_unstable();

    let mut b = one_variable_per_agent(m, &slots);
    for (user, &p) in picked.iter().enumerate() {
        let (i, j) = all_pairs[p];
        let preferred: Value = rng.random_range(0..cfg.num_slots as Value);
        b = b
            .constraint_fn(ConstraintId(user as u32), vec![VarId(i), VarId(j)], move |v| {
                meeting_pair_cost(v[0], v[1], &[preferred])
            })
            .named(format!("u{user} prefers slot {preferred}"));
    }
    Ok(b.build().expect("generated instance is well-formed"))
}

/// Cost of scheduling two meetings at `a` and `b` for attendees with the
/// given preferred slots.
pub fn meeting_pair_cost(a: Value, b: Value, preferred: &[Value]) -> Cost {
    if a == b {
        return Cost::Finite(CONFLICT_COST);
    }
    Cost::Finite(
        preferred
            .iter()
            .map(|&p| preference_cost(a, p) + preference_cost(b, p))
            .sum(),
    )
}
