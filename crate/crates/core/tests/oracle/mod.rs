//! Reference implementations and input generators for tests. The oracles
//! never call into the code they check beyond reading its inputs and outputs.

#![allow(dead_code)]

pub mod compaction;
pub mod ink;
pub mod instances;
pub mod metrics;
pub mod ops;
pub mod ordering;
pub mod texts;
