//! Dynamic role-based access control: policies written as guarded-event
//! machines, an engine that executes them and answers access queries, and a
//! bounded checker for invariant, deadlock, and refinement obligations.

pub mod checker;
pub mod cli;
pub mod corpus;
pub mod dsl;
pub mod engine;
pub mod model;
