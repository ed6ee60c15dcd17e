//! Simulation laboratory for joint precoder selection and multi-RIS phase
//! configuration in a multi-user MISO downlink.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: pathloss, steering vectors and Ricean channel sampling.
//! - [`environment`]: codebook, action space, SINR / sum-rate reward and the
//!   exhaustive-search oracle.
//! - [`tinynn`]: a small dense network with manual backpropagation.
//! - [`agents`]: DRP (deep reward prediction bandit), DQN, UCB1, random and
//!   exhaustive policies behind the [`agents::Agent`] trait.
//! - [`harness`]: training / evaluation protocol, sweeps and aggregation.
//! - [`io`]: configuration documents and the CSV / JSON result artifacts.

pub mod agents;
pub mod channel;
pub mod environment;
pub mod error;
pub mod gradcheck;
pub mod harness;
pub mod io;
pub mod rng;
pub mod tinynn;

pub use agents::{Agent, AgentKind, Mode, Transition};
pub use channel::{ChannelSet, Geometry, Position3D, RiceanParams};
pub use environment::{
    Action, ActionSpace, Environment, PrecoderCodebook, StateVector, Step, SystemConfig,
};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, MetricsLog, RunResult};
pub use rng::SimRng;
pub use tinynn::{LayerSpec, Network, OptimizerKind};

/// Version string embedded in result artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
