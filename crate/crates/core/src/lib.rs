#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bandit;
pub mod environment;
pub mod feasibility;
pub mod numerics;
pub mod posteriors;
pub mod road_graph;
