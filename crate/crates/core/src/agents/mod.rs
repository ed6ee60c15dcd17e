//! Action-selection policies behind one [`Agent`] contract.
//!
//! - [`DrpAgent`]: the deep reward prediction bandit. One network, masked
//!   MSE on the observed reward, ε-greedy exploration.
//! - [`DqnAgent`]: TD learning with replay and a soft-updated target network.
//! - [`UcbAgent`]: context-free UCB1.
//! - [`RandomAgent`] and [`ExhaustiveAgent`]: the lower and upper baselines.
//!
//! In [`Mode::Eval`] learning agents act greedily and `observe` is a no-op.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{StateVector, Step};
use crate::error::{Error, Result};
use crate::tinynn::{Network, OptimizerKind};

mod baseline;
mod dqn;
mod drp;
mod replay;
mod ucb;

pub use baseline::{random_select, ExhaustiveAgent, RandomAgent};
pub use dqn::{dqn_select, dqn_update, soft_update, DqnAgent, DqnConfig};
pub use drp::{drp_select, drp_update, DrpAgent, DrpConfig};
pub use replay::{ReplayBuffer, ReplayMode};
pub use ucb::{ucb_bound, ucb_select, ucb_update, UcbAgent, UcbState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Drp,
    Dqn,
    Ucb,
    Random,
    Oracle,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::Drp,
        AgentKind::Dqn,
        AgentKind::Ucb,
        AgentKind::Random,
        AgentKind::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Drp => "drp",
            AgentKind::Dqn => "dqn",
            AgentKind::Ucb => "ucb",
            AgentKind::Random => "random",
            AgentKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown agent kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Train,
    Eval,
}

/// One interaction `(s, a, r, s')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action_idx: usize,
    pub reward: f64,
    pub next_state: StateVector,
}

/// Settings shared by both network-based agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommonConfig {
    pub epsilon: f64,
    pub dropout_p: f64,
    /// Hidden layer widths between the state input and the action output.
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
}

impl Default for CommonConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            dropout_p: 0.2,
            hidden: vec![64, 64, 32, 32],
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl CommonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Config(format!(
                "dropout_p must be in [0, 1), got {}",
                self.dropout_p
            )));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        std::iter::once(input)
            .chain(self.hidden.iter().copied())
            .chain(std::iter::once(output))
            .collect()
    }
}

/// Serializable snapshot of an agent's learned state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    pub kind: AgentKind,
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub network: Option<Network>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target_network: Option<Network>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ucb: Option<UcbState>,
}

impl AgentCheckpoint {
    pub const FORMAT: &'static str = "rislab-agent";
    pub const VERSION: u32 = 1;

    pub(crate) fn new(kind: AgentKind, steps: u64) -> Self {
        Self {
            format: Self::FORMAT.into(),
            version: Self::VERSION,
            kind,
            steps,
            network: None,
            target_network: None,
            ucb: None,
        }
    }
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Index of the chosen action for this coherence block.
    fn select(&mut self, step: &Step<'_>) -> Result<usize>;

    /// Learn from the outcome of the last selection. No-op in eval mode.
    fn observe(
        &mut self,
        state: &StateVector,
        action_idx: usize,
        reward: f64,
        next_state: &StateVector,
    ) -> Result<()>;

    fn set_mode(&mut self, mode: Mode);

    fn mode(&self) -> Mode;

    fn checkpoint(&self) -> AgentCheckpoint;
}

/// Index of the largest score; ties resolve to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// With probability `epsilon` a uniform action, otherwise the argmax of the
/// lazily computed scores. No randomness is consumed when `epsilon == 0`.
pub fn epsilon_greedy<R: Rng + ?Sized>(
    num_actions: usize,
    epsilon: f64,
    rng: &mut R,
    scores: impl FnOnce() -> Result<Vec<f64>>,
) -> Result<usize> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..num_actions));
    }
    Ok(argmax(&scores()?))
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "epsilon must be in [0, 1], got {epsilon}"
        )))
    }
}
