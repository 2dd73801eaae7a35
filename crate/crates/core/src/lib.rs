//! Explainable distributed constraint optimization.
//!
//! A DCOP instance, a complete solution and a contrastive query ("why these
//! values rather than those?") form an explainable DCOP. This crate models
//! such problems, generates benchmark instances, solves them, builds
//! queries, and answers the queries with the CEDAR message-passing protocol
//! (a baseline plus four refinements) on a deterministic simulator that
//! accounts non-concurrent logic operations (NCLO) and messages.

pub mod cedar;
pub mod cost;
pub mod enumerate;
pub mod experiment;
pub mod generators;
pub mod json;
pub mod model;
pub mod query;
pub mod rng;
pub mod samples;
pub mod sim;
pub mod solvers;

pub use cost::Cost;
pub use model::{
    check_validity, AgentId, Assignment, ConstraintId, DcopInstance, Explanation,
    GroundedConstraint, ModelError, Value, VarId, Variable,
};
