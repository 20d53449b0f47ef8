//! Lazy restless bandits: arms whose hidden two-state chains take `K`
//! transitions per decision session and report one cumulative ACK/NACK.

pub mod arm;
pub mod config;
pub mod csvfmt;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod lagrange;
pub mod props;
pub mod sim;
pub mod value;
pub mod verify;
pub mod whittle;

pub use arm::{ArmParams, Belief, Correlation, DiscountFactor, Propagation};
pub use error::{LrbError, Result};
pub use grid::BeliefGrid;
