//! Interactive scores with conditional branching.
//!
//! A score is a tree of temporal objects whose start and end points are
//! linked by timed conditional relations. This crate parses and prints
//! scores, computes nominal durations and date sets ahead of a performance,
//! executes scores tick by tick under live or scripted input, and encodes
//! Allen-relation scores into conditional-relation scores.

pub mod corpus;
pub mod dsl;
pub mod edition;
pub mod encode;
pub mod engine;
pub mod model;
pub mod process;
