//! Small hand-built instances used by tests, the CLI and the service.

use crate::cost::Cost;
use crate::model::{AgentId, ConstraintId, DcopInstance, Value, VarId, Variable};

/// Three binary variables `x1..x3`, each owned by agent `a_i`, with one
/// constraint per pair. Its unique optimum is `{x1=1, x2=1, x3=0}` at cost 3.
pub fn three_variable_example() -> DcopInstance {
    let f1 = [1, 2, 1, 1];
    let f2 = [3, 3, 1, 1];
    let f3 = [3, 4, 1, 2];
    let mut b = DcopInstance::builder();
    for i in 1..=3 {
        b = b
            .agent(AgentId(i))
            .variable(Variable::new(VarId(i), vec![0, 1], AgentId(i)));
    }
    for (id, scope, table) in [(1, [1, 2], f1), (2, [1, 3], f2), (3, [2, 3], f3)] {
        b = b.constraint_table(
            ConstraintId(id),
            scope.iter().map(|&v| VarId(v)).collect(),
            table.iter().map(|&c| Cost::Finite(c)).collect(),
            None,
        );
    }
    b.build().expect("valid example instance")
}

pub const DEMO_SLOTS: [&str; 4] = ["Morning", "Noon", "Afternoon", "Evening"];

/// Cost of a double-booked pair of meetings.
pub const CONFLICT_COST: u64 = 10_000;

/// Preference cost of attending a meeting at `slot` for someone preferring `preferred`.
pub fn preference_cost(slot: Value, preferred: Value) -> u64 {
    1u64 << slot.abs_diff(preferred)
}

/// Two meetings over four slots with four attendees: "You" and Bob attend
/// both meetings, Charlie only M1 and David only M2. Each attendee
/// contributes one constraint, so explanations measure length in attendees.
/// The optimal schedule is M1 in the afternoon and M2 in the evening.
pub fn meeting_demo() -> DcopInstance {
    let slots: Vec<Value> = (0..DEMO_SLOTS.len() as Value).collect();
    let labels: Vec<String> = DEMO_SLOTS.iter().map(|s| s.to_string()).collect();
    let (m1, m2) = (VarId(1), VarId(2));
    let mut b = DcopInstance::builder()
        .agent(AgentId(1))
        .agent_name(AgentId(1), "M1 organizer")
        .agent(AgentId(2))
        .agent_name(AgentId(2), "M2 organizer");
    for (id, name) in [(m1, "M1"), (m2, "M2")] {
        let mut v = Variable::new(id, slots.clone(), AgentId(id.0));
        v.name = Some(name.to_string());
        v.labels = Some(labels.clone());
        b = b.variable(v);
    }
    // (name, preferred slot) of attendees of both meetings
    for (id, (name, pref)) in [("You", 2), ("Bob", 3)].into_iter().enumerate() {
        b = b
            .constraint_fn(ConstraintId(id as u32 + 1), vec![m1, m2], move |v| {
                if v[0] == v[1] {
                    Cost::Finite(CONFLICT_COST)
                } else {
                    Cost::Finite(preference_cost(v[0], pref) + preference_cost(v[1], pref))
                }
            })
            .named(name);
    }
    b.constraint_fn(ConstraintId(3), vec![m1], |v| Cost::Finite(preference_cost(v[0], 2)))
        .named("Charlie")
        .constraint_fn(ConstraintId(4), vec![m2], |v| Cost::Finite(preference_cost(v[0], 3)))
        .named("David")
        .build()
        .expect("valid demo instance")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Assignment;

    #[test]
    fn demo_prefers_afternoon_then_evening() {
        let inst = meeting_demo();
        let mut best = None;
        for a in 0..4 {
            for b in 0..4 {
                let s: Assignment = [(VarId(1), a), (VarId(2), b)].into_iter().collect();
                let c = inst.solution_cost(&s).unwrap();
                if best.is_none_or(|(bc, _)| c < bc) {
                    best = Some((c, (a, b)));
                }
            }
        }
        assert_eq!(best, Some((Cost::Finite(8), (2, 3))));
    }

    #[test]
    fn preference_cost_is_power_of_two_distance() {
        assert_eq!(preference_cost(1, 2), 2);
        assert_eq!(preference_cost(3, 2), 2);
        assert_eq!(preference_cost(2, 2), 1);
        assert_eq!(preference_cost(0, 3), 8);
    }
}
