pub mod rng;
pub mod simplex;
pub mod stats;
pub mod utility;
pub mod portfolio;
pub mod coding;
pub mod markov;
pub mod cli;
