pub mod error;
pub mod harness;
pub mod importance;
pub mod network;
pub mod numerics;
pub mod pointcloud;
pub mod pruning;
