//! Finite coalgebras, tabular MDP solvers, asynchronous fixed-point
//! simulation, generalized metric spaces, finite topos constructions,
//! compositional learners, and information-field checks.

pub mod coalgebra;
pub mod engine;
pub mod learn;
pub mod metric;
pub mod models;
pub mod solvers;
pub mod topos;
pub mod udm;
