//! Temporal convolutional networks over multi-agent trajectories.
//!
//! Two architectures are provided: a shared-compare network that recognises
//! the event performed by a key agent from the trajectories of the agents
//! around it, and a stacked network that identifies a group (team) from the
//! stacked trajectories of its members and the ball.

pub mod cli;
pub mod data;
pub mod eval;
pub mod models;
pub mod nn;
pub mod tensor;
pub mod training;
