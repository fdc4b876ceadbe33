//! Throughput-optimal wireless power transfer to a passing sensor.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod fading_sim;
pub mod fixed_rate;
pub mod harvest_and_use;
pub mod harvest_store_use;
pub mod numerics;
pub mod scenario;
mod waterfill;

pub use error::{Result, WhetError};
pub use scenario::{
    ChannelParams, EnergyParams, Link, NakagamiShape, PowerProfile, Scenario, ScenarioGeometry, TimeGrid, Tolerances,
};
