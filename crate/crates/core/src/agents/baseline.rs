use rand::Rng;

use super::{Agent, AgentCheckpoint, AgentKind, Mode};
use crate::environment::{StateVector, Step};
use crate::error::Result;
use crate::rng::SimRng;

pub fn random_select<R: Rng + ?Sized>(num_actions: usize, rng: &mut R) -> usize {
    rng.random_range(0..num_actions)
}

/// Uniform random policy. It stays random in eval mode: it is the lower
/// reference, not a learner.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    num_actions: usize,
    rng: SimRng,
    mode: Mode,
}

impl RandomAgent {
    pub fn new(num_actions: usize, rng: SimRng) -> Self {
        Self {
            num_actions,
            rng,
            mode: Mode::Train,
        }
    }
}

impl Agent for RandomAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Random
    }

    fn select(&mut self, _step: &Step<'_>) -> Result<usize> {
        Ok(random_select(self.num_actions, &mut self.rng))
    }

    fn observe(&mut self, _: &StateVector, _: usize, _: f64, _: &StateVector) -> Result<()> {
        Ok(())
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::new(AgentKind::Random, 0)
    }
}

/// Per-block exhaustive search over the whole action space.
#[derive(Debug, Clone, Default)]
pub struct ExhaustiveAgent {
    mode: Mode,
}

impl ExhaustiveAgent {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Agent for ExhaustiveAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Oracle
    }

    fn select(&mut self, step: &Step<'_>) -> Result<usize> {
        Ok(step.best()?.0)
    }

    fn observe(&mut self, _: &StateVector, _: usize, _: f64, _: &StateVector) -> Result<()> {
        Ok(())
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::new(AgentKind::Oracle, 0)
    }
}
