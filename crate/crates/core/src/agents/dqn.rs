use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, ReplayMode};
use super::{
    check_epsilon, epsilon_greedy, Agent, AgentCheckpoint, AgentKind, CommonConfig, Mode,
    Transition,
};
use crate::environment::{StateVector, Step};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::tinynn::{clip_gradients, LayerSpec, Network, Optimizer, Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub tau: f64,
    /// Soft update period `t'`, in environment steps.
    pub target_update_every: u64,
    pub gamma: f64,
    pub replay_capacity: usize,
    pub replay: ReplayMode,
    /// Elementwise gradient clamp; `None` disables clipping.
    pub clip_delta: Option<f64>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0002,
            batch_size: 128,
            tau: 0.18,
            target_update_every: 100,
            gamma: 1.0,
            replay_capacity: 100_000,
            replay: ReplayMode::Uniform,
            clip_delta: None,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.replay_capacity == 0 || self.target_update_every == 0 {
            return Err(Error::Config(
                "batch_size, replay_capacity and target_update_every must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Config(format!(
                "tau must be in [0, 1], got {}",
                self.tau
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if let Some(d) = self.clip_delta {
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Config(format!(
                    "clip_delta must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// ε-greedy over the target network's Q-values.
pub fn dqn_select<R: Rng + ?Sized>(
    target_net: &Network,
    state: &StateVector,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    check_epsilon(epsilon)?;
    epsilon_greedy(target_net.spec.output_size(), epsilon, rng, || {
        target_net.predict(state.as_slice())
    })
}

/// `ŵ ← (1 − τ)·ŵ + τ·w`, elementwise.
pub fn soft_update(target: &mut Params, online: &Params, tau: f64) -> Result<()> {
    if target.num_params() != online.num_params()
        || target.layers.len() != online.layers.len()
        || target
            .layers
            .iter()
            .zip(&online.layers)
            .any(|(a, b)| a.inputs != b.inputs || a.outputs != b.outputs)
    {
        return Err(Error::Shape(
            "target and online networks differ in shape".into(),
        ));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("tau must be in [0, 1], got {tau}")));
    }
    target
        .iter_mut()
        .zip(online.iter())
        .for_each(|(t, w)| *t = (1.0 - tau) * *t + tau * w);
    Ok(())
}

/// One minibatch TD step on the online network. Each sampled transition
/// contributes the gradient of `(Q(s)[a] − (r + γ·max Q̂(s')))²`; the
/// gradients are averaged, optionally clipped, and applied once.
///
/// `replay_rng` draws the minibatch; `dropout_rng` drives dropout in the
/// online forward passes.
#[allow(clippy::too_many_arguments)]
pub fn dqn_update<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    online: &mut Network,
    target: &Network,
    buffer: &mut ReplayBuffer,
    optimizer: &mut Optimizer,
    batch_size: usize,
    gamma: f64,
    clip_delta: Option<f64>,
    replay_rng: &mut R1,
    dropout_rng: &mut R2,
) -> Result<()> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let slots = buffer.sample(batch_size, replay_rng);
    let mut total: Option<Params> = None;
    let mut td_errors = Vec::with_capacity(slots.len());
    for &slot in &slots {
        let t = buffer.get(slot).expect("sampled slot is populated");
        let td_target = if gamma == 0.0 {
            t.reward
        } else {
            let next = target.predict(t.next_state.as_slice())?;
            let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t.reward + gamma * best
        };
        let (out, trace) = online.forward(t.state.as_slice(), true, dropout_rng)?;
        td_errors.push(out[t.action_idx] - td_target);
        let g = online.backward_scalar_target(&trace, t.action_idx, td_target)?;
        match &mut total {
            None => total = Some(g),
            Some(acc) => acc.add_assign(&g),
        }
    }
    let mut grads = total.expect("at least one sample");
    grads.scale(1.0 / slots.len() as f64);
    if let Some(delta) = clip_delta {
        clip_gradients(&mut grads, delta);
    }
    optimizer.step(&mut online.params, &grads)?;
    for (slot, td) in slots.into_iter().zip(td_errors) {
        buffer.update_priority(slot, td);
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    online: Network,
    target: Network,
    optimizer: Optimizer,
    buffer: ReplayBuffer,
    cfg: DqnConfig,
    epsilon: f64,
    mode: Mode,
    rng: SimRng,
    replay_rng: SimRng,
    steps: u64,
}

impl DqnAgent {
    pub fn new(
        state_len: usize,
        num_actions: usize,
        common: &CommonConfig,
        cfg: &DqnConfig,
        init_rng: &mut SimRng,
        rng: SimRng,
        replay_rng: SimRng,
    ) -> Result<Self> {
        common.validate()?;
        let spec = LayerSpec::new(common.layer_sizes(state_len, num_actions), common.dropout_p)?;
        let online = Network::init(spec, init_rng)?;
        let optimizer = Optimizer::new(common.optimizer, cfg.learning_rate)?;
        Self::from_network(
            online,
            optimizer,
            cfg.clone(),
            common.epsilon,
            rng,
            replay_rng,
        )
    }

    /// The target network starts as an exact copy of `online`.
    pub fn from_network(
        online: Network,
        optimizer: Optimizer,
        cfg: DqnConfig,
        epsilon: f64,
        rng: SimRng,
        replay_rng: SimRng,
    ) -> Result<Self> {
        cfg.validate()?;
        check_epsilon(epsilon)?;
        Ok(Self {
            target: online.clone(),
            online,
            optimizer,
            buffer: ReplayBuffer::new(cfg.replay_capacity, cfg.replay)?,
            cfg,
            epsilon,
            mode: Mode::Train,
            rng,
            replay_rng,
            steps: 0,
        })
    }

    pub fn online(&self) -> &Network {
        &self.online
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }
}

impl Agent for DqnAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Dqn
    }

    fn select(&mut self, step: &Step<'_>) -> Result<usize> {
        let eps = match self.mode {
            Mode::Train => self.epsilon,
            Mode::Eval => 0.0,
        };
        dqn_select(&self.target, &step.state, eps, &mut self.rng)
    }

    fn observe(
        &mut self,
        state: &StateVector,
        action_idx: usize,
        reward: f64,
        next_state: &StateVector,
    ) -> Result<()> {
        if self.mode == Mode::Eval {
            return Ok(());
        }
        if !reward.is_finite() {
            return Err(Error::Domain(format!("non-finite reward {reward}")));
        }
        self.buffer.push(Transition {
            state: state.clone(),
            action_idx,
            reward,
            next_state: next_state.clone(),
        });
        self.steps += 1;
        // No updates until a full minibatch is available.
        if self.buffer.len() >= self.cfg.batch_size {
            dqn_update(
                &mut self.online,
                &self.target,
                &mut self.buffer,
                &mut self.optimizer,
                self.cfg.batch_size,
                self.cfg.gamma,
                self.cfg.clip_delta,
                &mut self.replay_rng,
                &mut self.rng,
            )?;
        }
        if self.steps % self.cfg.target_update_every == 0 {
            soft_update(&mut self.target.params, &self.online.params, self.cfg.tau)?;
        }
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
            network: Some(self.online.clone()),
            target_network: Some(self.target.clone()),
            ..AgentCheckpoint::new(AgentKind::Dqn, self.steps)
        }
    }
}
