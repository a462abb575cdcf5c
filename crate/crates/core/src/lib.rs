//! Non-myopic multi-robot sampling of 2-D score fields.
//!
//! Robots move on a grid, collect each cell's score once and zero it. A
//! linear softmax policy over multi-resolution features is trained with
//! likelihood-ratio policy gradients ([`learn`]); identical copies of the
//! trained policy then run as a fleet that coordinates only through
//! periodic, range-limited exchange of visited cells ([`fleet`]).
//! Coverage and greedy-maxima planners ([`baselines`]) and the evaluation
//! metrics ([`analysis`]) support comparisons.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod features;
pub mod field;
pub mod fleet;
pub mod learn;
pub mod mdp;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use features::FeatureLayout;
pub use field::{Cell, ScoreMap};
pub use fleet::{FleetConfig, TeamResult};
pub use learn::TrainConfig;
pub use mdp::{Action, ActionSpace, Trajectory};
pub use policy::PolicyParams;
