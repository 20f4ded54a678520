//! LQR weight tuning with a multi-objective quantum-behaved particle swarm.

pub mod benchmarks;
pub mod control;
pub mod metrics;
pub mod mo;
pub mod optim;
