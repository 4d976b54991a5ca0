//! Dynamical decoupling simulator: spin algebra, model Hamiltonians, noise,
//! pulse sequences, propagation engines, observables and an experiment harness.

pub mod avg_hamiltonian;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod noise;
pub mod observables;
pub mod operator;
pub mod propagation;
pub mod sequences;
pub mod sparse;
pub mod spin;

pub use error::{DdError, Result};
pub use operator::{Operator, StateVector};
