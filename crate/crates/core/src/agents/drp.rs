use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_epsilon, epsilon_greedy, Agent, AgentCheckpoint, AgentKind, CommonConfig, Mode};
use crate::environment::{StateVector, Step};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::tinynn::{LayerSpec, Network, Optimizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrpConfig {
    pub learning_rate: f64,
}

impl Default for DrpConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
        }
    }
}

/// ε-greedy over the predicted rewards `net(state)`.
pub fn drp_select<R: Rng + ?Sized>(
    net: &Network,
    state: &StateVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    check_epsilon(epsilon)?;
    epsilon_greedy(net.spec.output_size(), epsilon, rng, || {
        net.predict(state.as_slice())
    })
}

/// One gradient step on `(reward − net(state)[action_idx])²`.
pub fn drp_update<R: Rng + ?Sized>(
    net: &mut Network,
    optimizer: &mut Optimizer,
    state: &StateVector,
    action_idx: usize,
    reward: f64,
    rng: &mut R,
) -> Result<()> {
    let (_, trace) = net.forward(state.as_slice(), true, rng)?;
    let grads = net.backward_scalar_target(&trace, action_idx, reward)?;
    optimizer.step(&mut net.params, &grads)
}

#[derive(Debug, Clone)]
pub struct DrpAgent {
    net: Network,
    optimizer: Optimizer,
    epsilon: f64,
    mode: Mode,
    rng: SimRng,
    steps: u64,
}

impl DrpAgent {
    pub fn new(
        state_len: usize,
        num_actions: usize,
        common: &CommonConfig,
        cfg: &DrpConfig,
        init_rng: &mut SimRng,
        rng: SimRng,
    ) -> Result<Self> {
        common.validate()?;
        let spec = LayerSpec::new(common.layer_sizes(state_len, num_actions), common.dropout_p)?;
        let net = Network::init(spec, init_rng)?;
        Ok(Self::from_network(
            net,
            Optimizer::new(common.optimizer, cfg.learning_rate)?,
            common.epsilon,
            rng,
        ))
    }

    pub fn from_network(net: Network, optimizer: Optimizer, epsilon: f64, rng: SimRng) -> Self {
        Self {
            net,
            optimizer,
            epsilon,
            mode: Mode::Train,
            rng,
            steps: 0,
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }
}

impl Agent for DrpAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Drp
    }

    fn select(&mut self, step: &Step<'_>) -> Result<usize> {
        let eps = match self.mode {
            Mode::Train => self.epsilon,
            Mode::Eval => 0.0,
        };
        drp_select(&self.net, &step.state, eps, &mut self.rng)
    }

    fn observe(
        &mut self,
        state: &StateVector,
        action_idx: usize,
        reward: f64,
        _next_state: &StateVector,
    ) -> Result<()> {
        if self.mode == Mode::Eval {
            return Ok(());
        }
        if !reward.is_finite() {
            return Err(Error::Domain(format!("non-finite reward {reward}")));
        }
        drp_update(
            &mut self.net,
            &mut self.optimizer,
            state,
            action_idx,
            reward,
            &mut self.rng,
        )?;
        self.steps += 1;
        Ok(())
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }

    fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint {
            network: Some(self.net.clone()),
            ..AgentCheckpoint::new(AgentKind::Drp, self.steps)
        }
    }
}
