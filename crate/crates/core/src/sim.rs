//! Deterministic synchronous-round message passing with NCLO accounting.
//!
//! Messages sent during step `t` are delivered at step `t + 1`, in send
//! order, without loss. In each step every agent with deliveries or pending
//! local work runs its handler once, in agent-id order.
//!
//! Each agent keeps a logical-operation counter. Handlers charge work with
//! [`Context::charge`]; every message carries its sender's counter at send
//! time, and before a handler runs the receiver's counter is raised to the
//! largest stamp it is receiving. Work done concurrently by different
//! agents is therefore never summed, and the counter of the agent that
//! collects the result measures the non-concurrent logic operations (NCLO)
//! of the run.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::model::AgentId;

pub trait Payload {
    fn kind(&self) -> &'static str;
    /// Size reported in traces (number of bindings or constraints carried).
    fn size(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<P> {
    pub sender: AgentId,
    pub receiver: AgentId,
    pub payload: P,
    pub nclo_stamp: u64,
}

/// An agent driven by the simulator.
pub trait Process<P> {
    fn on_step(&mut self, ctx: &mut Context<'_, P>, inbox: Vec<Envelope<P>>);

    fn has_pending_work(&self) -> bool {
        false
    }
}

/// Handle given to a handler for charging work and sending messages.
pub struct Context<'a, P> {
    me: AgentId,
    clock: &'a mut u64,
    outbox: &'a mut Vec<Envelope<P>>,
}

impl<P> Context<'_, P> {
    pub fn me(&self) -> AgentId {
        self.me
    }

    pub fn charge(&mut self, ops: u64) {
        charge(self.clock, ops);
    }

    pub fn nclo(&self) -> u64 {
        *self.clock
    }

    pub fn send(&mut self, to: AgentId, payload: P) {
        self.outbox.push(Envelope { sender: self.me, receiver: to, payload, nclo_stamp: *self.clock });
    }
}

pub fn charge(counter: &mut u64, ops: u64) {
    *counter += ops;
}

pub fn on_receive_sync(counter: &mut u64, stamp: u64) {
    *counter = (*counter).max(stamp);
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: u64,
    pub kind: &'static str,
    pub sender: AgentId,
    pub receiver: AgentId,
    pub payload_size: usize,
    pub nclo_stamp: u64,
}

pub fn write_trace<W: Write>(events: &[TraceEvent], mut out: W) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("simulation still active after {0} steps")]
    StepLimit(u64),
}

pub struct World<P, A> {
    agents: BTreeMap<AgentId, A>,
    clocks: BTreeMap<AgentId, u64>,
    in_flight: Vec<Envelope<P>>,
    steps: u64,
    messages_sent: u64,
    trace: Option<Vec<TraceEvent>>,
}

impl<P: Payload, A: Process<P>> World<P, A> {
    pub fn new(agents: impl IntoIterator<Item = (AgentId, A)>) -> Self {
        let agents: BTreeMap<_, _> = agents.into_iter().collect();
        let clocks = agents.keys().map(|&a| (a, 0)).collect();
        Self { agents, clocks, in_flight: Vec::new(), steps: 0, messages_sent: 0, trace: None }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn is_quiescent(&self) -> bool {
        self.in_flight.is_empty() && self.agents.values().all(|a| !a.has_pending_work())
    }

    /// Runs one synchronous round. Returns `false` (and does nothing) once
    /// the world is quiescent.
    pub fn step(&mut self) -> bool {
        if self.is_quiescent() {
            return false;
        }
        self.steps += 1;
        let mut inboxes: BTreeMap<AgentId, Vec<Envelope<P>>> = BTreeMap::new();
        for m in self.in_flight.drain(..) {
            inboxes.entry(m.receiver).or_default().push(m);
        }
        let mut outbox = Vec::new();
        for (&id, agent) in self.agents.iter_mut() {
            let inbox = inboxes.remove(&id).unwrap_or_default();
            if inbox.is_empty() && !agent.has_pending_work() {
                continue;
            }
            let clock = self.clocks.get_mut(&id).expect("clock per agent");
            for m in &inbox {
                on_receive_sync(clock, m.nclo_stamp);
            }
            let mut ctx = Context { me: id, clock, outbox: &mut outbox };
            agent.on_step(&mut ctx, inbox);
        }
        debug_assert!(inboxes.is_empty(), "message addressed to an unknown agent");
        self.messages_sent += outbox.len() as u64;
        if let Some(trace) = self.trace.as_mut() {
            trace.extend(outbox.iter().map(|m| TraceEvent {
                step: self.steps,
                kind: m.payload.kind(),
                sender: m.sender,
                receiver: m.receiver,
                payload_size: m.payload.size(),
                nclo_stamp: m.nclo_stamp,
            }));
        }
        self.in_flight = outbox;
        true
    }

    /// Steps until quiescence; returns the number of steps taken.
    pub fn run(&mut self, max_steps: u64) -> Result<u64, SimError> {
        while self.step() {
            if self.steps > max_steps {
                return Err(SimError::StepLimit(max_steps));
            }
        }
        Ok(self.steps)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn messages_sent(&self) -> u64 {
        self.messages_sent
    }

    pub fn in_flight(&self) -> &[Envelope<P>] {
        &self.in_flight
    }

    pub fn nclo(&self, agent: AgentId) -> u64 {
        self.clocks.get(&agent).copied().unwrap_or(0)
    }

    pub fn agent(&self, id: AgentId) -> Option<&A> {
        self.agents.get(&id)
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or_default()
    }

    pub fn into_parts(self) -> (BTreeMap<AgentId, A>, Vec<TraceEvent>) {
        (self.agents, self.trace.unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    enum Ping {
        Ask,
        Answer,
    }

    impl Payload for Ping {
        fn kind(&self) -> &'static str {
            match self {
                Ping::Ask => "ASK",
                Ping::Answer => "ANSWER",
            }
        }
        fn size(&self) -> usize {
            1
        }
    }

    /// Agent 0 fans out to `peers`, each peer works `cost` ops and answers.
    struct Node {
        start: bool,
        peers: Vec<AgentId>,
        cost: u64,
        answers: usize,
        answered_at_step: Vec<usize>,
    }

    impl Node {
        fn new(start: bool, peers: Vec<AgentId>, cost: u64) -> Self {
            Self { start, peers, cost, answers: 0, answered_at_step: Vec::new() }
        }
    }

    impl Process<Ping> for Node {
        fn on_step(&mut self, ctx: &mut Context<'_, Ping>, inbox: Vec<Envelope<Ping>>) {
            if std::mem::take(&mut self.start) {
                for &p in &self.peers {
                    ctx.send(p, Ping::Ask);
                }
            }
            for m in inbox {
                match m.payload {
                    Ping::Ask => {
                        ctx.charge(self.cost);
                        ctx.send(m.sender, Ping::Answer);
                    }
                    Ping::Answer => {
                        self.answers += 1;
                        self.answered_at_step.push(self.answers);
                    }
                }
            }
        }

        fn has_pending_work(&self) -> bool {
            self.start
        }
    }

    fn world(costs: &[u64]) -> World<Ping, Node> {
        let peers: Vec<AgentId> = (1..=costs.len() as u32).map(AgentId).collect();
        let mut agents = vec![(AgentId(0), Node::new(true, peers, 0))];
        for (i, &c) in costs.iter().enumerate() {
            agents.push((AgentId(i as u32 + 1), Node::new(false, vec![], c)));
        }
        World::new(agents)
    }

    #[test]
    fn quiescent_world_is_a_fixed_point() {
        let mut w: World<Ping, Node> = World::new([(AgentId(0), Node::new(false, vec![], 0))]);
        assert!(w.is_quiescent());
        assert!(!w.step());
        assert_eq!(w.steps(), 0);
    }

    #[test]
    fn request_is_answered_one_step_later() {
        let mut w = world(&[3]);
        assert!(w.step());
        assert_eq!(w.in_flight().len(), 1);
        assert_eq!(w.in_flight()[0].payload, Ping::Ask);
        assert!(w.step());
        assert_eq!(w.in_flight().len(), 1);
        assert_eq!(w.in_flight()[0].payload, Ping::Answer);
        assert_eq!(w.in_flight()[0].nclo_stamp, 3);
    }

    #[test]
    fn fan_out_replies_arrive_together() {
        let mut w = world(&[1, 2, 3, 4]);
        assert_eq!(w.run(100), Ok(3));
        assert_eq!(w.agent(AgentId(0)).unwrap().answers, 4);
        assert_eq!(w.messages_sent(), 8);
    }

    #[test]
    fn concurrent_work_is_not_summed() {
        let mut w = world(&[50, 50]);
        w.run(10).unwrap();
        assert_eq!(w.nclo(AgentId(0)), 50);
        assert_eq!(w.nclo(AgentId(1)), 50);
    }

    #[test]
    fn receive_sync_then_charge() {
        let mut counter = 10;
        on_receive_sync(&mut counter, 25);
        charge(&mut counter, 5);
        assert_eq!(counter, 30);
        on_receive_sync(&mut counter, 7);
        charge(&mut counter, 0);
        assert_eq!(counter, 30);
    }

    #[test]
    fn trace_records_every_message() {
        let mut w = world(&[2, 5]).with_trace();
        w.run(10).unwrap();
        let kinds: Vec<_> = w.trace().iter().map(|e| (e.step, e.kind, e.nclo_stamp)).collect();
        assert_eq!(kinds, vec![(1, "ASK", 0), (1, "ASK", 0), (2, "ANSWER", 2), (2, "ANSWER", 5)]);
        let mut buf = Vec::new();
        write_trace(w.trace(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(r#"{"step":1,"kind":"ASK","sender":0,"receiver":1,"payload_size":1,"nclo_stamp":0}"#));
    }
}
