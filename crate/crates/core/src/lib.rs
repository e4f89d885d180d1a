//! Exact probability engines and locality audits for the two versions of the
//! HP hidden-variable model, together with generic auditors for
//! parameter independence, signal locality and outcome independence, a
//! signaling-protocol simulator and counting checks on the underlying
//! measure construction.

pub mod audit;
pub mod combinatorics;
pub mod error;
pub mod geometry;
pub mod model;
pub mod models;
pub mod montecarlo;
pub mod rng;
pub mod signaling;

pub use error::{Error, Result};
pub use geometry::{make_direction, AbsVector, Direction, SettingGrid};
pub use model::{
    BoundedValue, CondExpectations, HiddenSource, Joint4, ModelParams, ProbPair, ThetaPolicy,
    Version,
};
pub use models::{HpModel, LhvModel, LocalFixture, QmSinglet};
