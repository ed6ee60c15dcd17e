use serde::{Deserialize, Serialize};

use super::{argmax, Agent, AgentCheckpoint, AgentKind, Mode};
use crate::environment::{StateVector, Step};
use crate::error::{Error, Result};

/// Pull counts and running mean reward per action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbState {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub t: u64,
}

impl UcbState {
    pub fn new(num_actions: usize) -> Self {
        Self {
            counts: vec![0; num_actions],
            means: vec![0.0; num_actions],
            t: 0,
        }
    }
}

/// UCB1 index `mean + √(2·ln t / n)`.
pub fn ucb_bound(mean: f64, pulls: u64, t: u64) -> f64 {
    mean + (2.0 * (t as f64).ln() / pulls as f64).sqrt()
}

/// Lowest-index unpulled action during warm-up, then the largest UCB1 index.
pub fn ucb_select(ucb: &UcbState) -> usize {
    if let Some(first) = ucb.counts.iter().position(|&n| n == 0) {
        return first;
    }
    let bounds: Vec<f64> = ucb
        .means
        .iter()
        .zip(&ucb.counts)
        .map(|(&m, &n)| ucb_bound(m, n, ucb.t))
        .collect();
    argmax(&bounds)
}

pub fn ucb_update(ucb: &mut UcbState, action_idx: usize, reward: f64) -> Result<()> {
    let len = ucb.counts.len();
    let n = ucb
        .counts
        .get_mut(action_idx)
        .ok_or(Error::IndexOutOfRange {
            index: action_idx,
            len,
        })?;
    *n += 1;
    let mean = &mut ucb.means[action_idx];
    *mean += (reward - *mean) / *n as f64;
    ucb.t += 1;
    Ok(())
}

/// Context-free UCB1. In eval mode it exploits the best running mean.
#[derive(Debug, Clone)]
pub struct UcbAgent {
    state: UcbState,
    mode: Mode,
}

impl UcbAgent {
    pub fn new(num_actions: usize) -> Self {
        Self {
            state: UcbState::new(num_actions),
            mode: Mode::Train,
        }
    }

    pub fn state(&self) -> &UcbState {
        &self.state
    }
}

impl Agent for UcbAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Ucb
    }

    fn select(&mut self, _step: &Step<'_>) -> Result<usize> {
        Ok(match self.mode {
            Mode::Eval if self.state.t > 0 => argmax(&self.state.means),
            _ => ucb_select(&self.state),
        })
    }

    fn observe(
        &mut self,
        _state: &StateVector,
        action_idx: usize,
        reward: f64,
        _next_state: &StateVector,
    ) -> Result<()> {
        if self.mode == Mode::Eval {
            return Ok(());
        }
        ucb_update(&mut self.state, action_idx, reward)
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            ucb: Some(self.state.clone()),
            ..AgentCheckpoint::new(AgentKind::Ucb, self.state.t)
        }
    }
}
