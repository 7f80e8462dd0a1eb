//! Semi-supervised skill learning from sparsely annotated demonstrations.
//!
//! Demonstrations are segmented into subtasks, segments are labeled with
//! templated instructions, and a controller/executor pair of log-linear
//! policies is fitted by block coordinate ascent. A small household gridworld
//! generates the data and hosts online evaluation.

pub mod corpus;
pub mod gridworld;
pub mod models;
pub mod segmentation;
pub mod labeling;
pub mod training;
pub mod evaluation;
pub mod cli;
pub mod store;
