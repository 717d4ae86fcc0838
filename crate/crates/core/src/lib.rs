//! Cinematographic camera-trajectory toolkit: a shot description language,
//! a compiler from descriptions to simulation instructions, a constrained
//! trajectory simulator, training objectives and generative metrics.

pub mod compiler;
pub mod config;
pub mod dataset;
pub mod genmetrics;
pub mod objectives;
pub mod pose;
pub mod scl;
pub mod simulator;
pub mod view;
