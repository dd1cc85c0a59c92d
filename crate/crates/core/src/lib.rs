pub mod deep_prior;
pub mod filters;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod prox;
pub mod rng;
pub mod solvers;
